//! Deterministic scripted backend for offline tests and demos.
//!
//! Responses are pure functions of the request: fixed texts for the
//! generation stages, keyword-driven extraction for answering and graph
//! building, and lexical heuristics for the judge stages. The point is not
//! realism but determinism — the same request always yields the same bytes,
//! so recorded fixtures and replay runs are stable.

use super::{check_request, BackendError, ChatBackend, ChatRequest, ChatResponse, StageTag};

pub struct ScriptedBackend;

const SCRIPTED_CQS: &str = "\
1. What data formats are used in the deep learning pipeline?
2. What hyperparameters are used in the model?
3. What model architectures are part of the deep learning pipeline?
4. What are the sources of input data for the deep learning pipeline?
";

const SCRIPTED_CONCEPTS: &str = "\
Concepts: DeepLearningPipeline, DataFormat, Hyperparameter, Model, Source, InputData
Relations: hasDataFormat, hasHyperparameter, hasModel, hasSource, hasInputData
";

/// Deliberately imperfect draft: fenced, missing the base prefix
/// declaration, and missing half of the concepts, so the repair and
/// normalization paths run on every scripted pipeline.
const SCRIPTED_ONTOLOGY: &str = "\
```turtle
@prefix owl: <http://www.w3.org/2002/07/owl#> .
@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .
@prefix prov: <http://www.w3.org/ns/prov#> .

dlprov:DeepLearningPipeline a owl:Class ;
    rdfs:subClassOf prov:Activity .

dlprov:DataFormat a owl:Class ;
    rdfs:subClassOf prov:Entity .

dlprov:Model a owl:Class ;
    rdfs:subClassOf prov:Entity .

dlprov:hasDataFormat a owl:ObjectProperty ;
    rdfs:range dlprov:DataFormat .

dlprov:hasModel a owl:ObjectProperty .
```
";

const DONT_KNOW: &str = "I don't know.";

const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "by", "do", "does", "for", "how", "in", "is", "of", "on", "or",
    "part", "the", "to", "used", "what", "which", "deep", "learning", "pipeline",
];

/// (class, trigger phrase in answers, individual label)
const KG_VOCAB: &[(&str, &str, &str)] = &[
    ("DataFormat", "spectrogram", "Audio Spectrogram"),
    ("DataFormat", "image data", "Image data"),
    ("DataFormat", "time series", "Time series tables"),
    ("Model", "convolutional", "Convolutional Neural Network"),
    ("Model", "resnet", "ResNet-50"),
    ("Model", "long short-term memory", "Long Short-Term Memory network"),
    ("Hyperparameter", "learning rate", "Learning rate"),
    ("Hyperparameter", "batch size", "Batch size"),
    ("Hyperparameter", "hidden units", "Hidden units"),
    ("Hyperparameter", "epochs", "Training epochs"),
    ("Source", "field recording", "Field recordings"),
    ("Source", "camera trap", "Camera trap imagery"),
    ("Source", "herbarium", "Herbarium sheet scans"),
    ("Source", "stream gauge", "Stream gauge network"),
];

/// Classes that fall back to a "Not Specified" individual when their topic
/// is mentioned but no concrete value matched.
const KG_FALLBACK: &[(&str, &str)] = &[("DataFormat", "data format"), ("Model", "model")];

impl ChatBackend for ScriptedBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, BackendError> {
        check_request(request)?;
        let text = match request.stage_tag {
            StageTag::CqGen => SCRIPTED_CQS.to_string(),
            StageTag::ConceptExtract => SCRIPTED_CONCEPTS.to_string(),
            StageTag::OntologyBuild => SCRIPTED_ONTOLOGY.to_string(),
            StageTag::CqAnswer => script_answer(&request.user_text),
            StageTag::KgBuild => script_kg(&request.user_text),
            StageTag::JudgeAnswer => script_judge_score(&request.user_text),
            StageTag::JudgeKg => script_judge_verify(&request.user_text),
        };
        Ok(ChatResponse {
            text,
            backend_id: self.id().to_string(),
            fingerprint: request.fingerprint(),
        })
    }

    fn id(&self) -> &str {
        "scripted"
    }
}

fn section<'a>(text: &'a str, start: &str, end: Option<&str>) -> Option<&'a str> {
    let from = text.find(start)? + start.len();
    let rest = &text[from..];
    match end {
        Some(end) => rest.find(end).map(|to| &rest[..to]),
        None => Some(rest),
    }
}

fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| w.to_lowercase())
        .collect()
}

fn script_answer(prompt: &str) -> String {
    let context = section(prompt, "Context:\n", Some("\n\nInstructions:")).unwrap_or("");
    let question = section(prompt, "Question: ", None).unwrap_or("").trim();

    let keywords: Vec<String> = words(question)
        .into_iter()
        .filter(|w| !STOPWORDS.contains(&w.as_str()))
        .collect();

    for raw_sentence in context.split_inclusive(['.', '!', '?']) {
        let sentence = raw_sentence.trim().trim_end_matches(['.', '!', '?']).trim();
        if sentence.is_empty() {
            continue;
        }
        let sentence_words = words(sentence);
        let hit = keywords.iter().any(|k| {
            let singular = k.strip_suffix('s').unwrap_or(k);
            sentence_words
                .iter()
                .any(|w| w == k || w == singular || w.strip_suffix('s').unwrap_or(w) == singular)
        });
        if hit {
            // Answer the sentence twice; downstream postprocessing is
            // expected to deduplicate it.
            return format!("{sentence}. {sentence}.");
        }
    }
    DONT_KNOW.to_string()
}

fn script_kg(prompt: &str) -> String {
    let qa = section(prompt, "Competency questions and answers:\n", Some("\n\nOntology:"))
        .unwrap_or("");
    let answers: Vec<&str> = qa
        .lines()
        .filter_map(|l| l.trim().strip_prefix("Answer:"))
        .map(str::trim)
        .collect();
    let usable: Vec<&str> = answers
        .iter()
        .copied()
        .filter(|a| !a.to_lowercase().contains("don't know") && !a.is_empty())
        .collect();
    if usable.is_empty() {
        return "I could not extract any entities from the provided answers, \
                so no knowledge graph can be constructed."
            .to_string();
    }
    let haystack = usable.join(" ").to_lowercase();

    let mut individuals: Vec<(String, &str, String)> = Vec::new(); // (class, label, iri local)
    let mut per_class: std::collections::BTreeMap<&str, u32> = std::collections::BTreeMap::new();
    for (class, trigger, label) in KG_VOCAB {
        if haystack.contains(trigger) {
            let n = per_class.entry(class).or_insert(0);
            *n += 1;
            individuals.push((class.to_string(), label, format!("{class}_{n}")));
        }
    }
    for (class, topic) in KG_FALLBACK {
        if !per_class.contains_key(class) && haystack.contains(topic) {
            per_class.insert(class, 1);
            individuals.push((class.to_string(), "Not Specified", format!("{class}_1")));
        }
    }
    if individuals.is_empty() {
        return "The answers mention no entities that fit the ontology, \
                so no knowledge graph can be constructed."
            .to_string();
    }

    // One individual gets a non-conforming IRI on purpose; the builder is
    // expected to renumber it into the <Class>_<n> scheme.
    if haystack.contains("detection") {
        individuals.push(("Model".to_string(), "Detection head", "TheDetector".to_string()));
    }

    let mut out = String::from("@prefix dlprov: <https://w3id.org/dlprov/> .\n\n");
    out.push_str("dlprov:DeepLearningPipeline_1 rdf:type dlprov:DeepLearningPipeline ;\n");
    for (i, (class, _, local)) in individuals.iter().enumerate() {
        let sep = if i + 1 == individuals.len() { " ." } else { " ;" };
        out.push_str(&format!("    dlprov:has{class} dlprov:{local}{sep}\n"));
    }
    out.push('\n');
    for (class, label, local) in &individuals {
        out.push_str(&format!(
            "dlprov:{local} rdf:type dlprov:{class} ;\n    rdfs:label '{label}' .\n\n"
        ));
    }
    out
}

fn script_judge_score(prompt: &str) -> String {
    let ground = section(prompt, "Ground truth: ", Some("\n\nPredicted answer:")).unwrap_or("");
    let prediction = section(prompt, "Predicted answer: ", None).unwrap_or("");
    let a: std::collections::BTreeSet<String> = words(ground).into_iter().collect();
    let b: std::collections::BTreeSet<String> = words(prediction).into_iter().collect();
    let inter = a.intersection(&b).count();
    let union = a.union(&b).count().max(1);
    let score = ((10 * inter) as f64 / union as f64).round() as u32;
    format!(
        "score: {score}\nExplanation: {inter} of {union} distinct terms are shared \
         between the ground truth and the prediction.\n"
    )
}

fn script_judge_verify(prompt: &str) -> String {
    let value = section(prompt, "Value: ", Some("\n\nAnswer text:")).unwrap_or("");
    let answer = section(prompt, "Answer text: ", None).unwrap_or("");
    let norm = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    let found = !value.trim().is_empty() && norm(answer).contains(&norm(value));
    let verdict = if found { "True" } else { "False" };
    format!("Response: {verdict}\nExplanation: case-insensitive containment check.\n")
}
