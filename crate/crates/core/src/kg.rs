//! Per-document knowledge graph construction: prompt the backend with the
//! questions, their answers, and the ontology; repair the raw output;
//! enumerate and renumber the typed individuals; then validate and link
//! them back to the questions they answer.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answering::CqAnswer;
use crate::backend::{BackendError, ChatBackend, ChatRequest, GenerationParams, StageTag};
use crate::cq::CqSet;
use crate::ontology::OntologySpec;
use crate::prompts;
use crate::rdf::{
    ns, repair_rdf_text, Iri, RdfError, RdfGraph, RepairAction, RepairActionKind, RepairReport,
    Term, Triple,
};
use crate::util::decamelize;

#[derive(Debug, Error)]
pub enum KgError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("cannot build a knowledge graph from an empty answer list")]
    EmptyAnswers,
    #[error("answer for {cq_id} belongs to document {found}, expected {expected}")]
    MixedDocuments {
        cq_id: String,
        found: String,
        expected: String,
    },
    #[error("unknown knowledge-graph prompt version `{0}`")]
    UnknownPromptVersion(String),
    #[error("validation and linking require a build with status ok")]
    NotOk,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KgStatus {
    Ok,
    NoMeaningfulKg,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KgIndividual {
    pub iri: Iri,
    pub class_iri: Iri,
    pub label: Option<String>,
    pub source_doc: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KgBuildResult {
    pub graph: RdfGraph,
    pub individuals: Vec<KgIndividual>,
    pub status: KgStatus,
    pub repair: RepairReport,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    UndeclaredClass,
    UndeclaredProperty,
    MultipleTypes,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub subject: String,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlagKind {
    Unspecified,
    DuplicateValue,
    Unlabeled,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QualityFlag {
    pub kind: FlagKind,
    pub individuals: Vec<String>,
    pub detail: String,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub flags: Vec<QualityFlag>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndividualLink {
    pub individual_iri: String,
    pub cq_ids: Vec<String>,
    pub match_basis: String,
}

/// Builds the knowledge graph for one document. Prompt order is pinned:
/// questions and answers first, then the ontology. A raw output with no
/// recoverable typed individuals yields status `no_meaningful_kg` rather
/// than an error, so the run can continue and report it.
pub fn build_kg(
    backend: &dyn ChatBackend,
    params: &GenerationParams,
    cqs: &CqSet,
    answers: &[CqAnswer],
    ontology: &OntologySpec,
    doc_id: &str,
    prompt_version: &str,
) -> Result<KgBuildResult, KgError> {
    if answers.is_empty() {
        return Err(KgError::EmptyAnswers);
    }
    for answer in answers {
        if answer.doc_id != doc_id {
            return Err(KgError::MixedDocuments {
                cq_id: answer.cq_id.clone(),
                found: answer.doc_id.clone(),
                expected: doc_id.to_string(),
            });
        }
    }
    let template = prompts::kg_build_template(prompt_version)
        .ok_or_else(|| KgError::UnknownPromptVersion(prompt_version.to_string()))?;

    let mut qa = String::new();
    for answer in answers {
        let question = cqs
            .get(&answer.cq_id)
            .map(|q| q.text.as_str())
            .unwrap_or("(question unavailable)");
        qa.push_str(&format!(
            "{}: {question}\nAnswer: {}\n\n",
            answer.cq_id,
            answer.clean_text.replace('\n', " ")
        ));
    }
    let ontology_text = crate::rdf::serialize_turtle(&ontology.graph);
    let prompt = prompts::render(
        template,
        &[("qa", qa.trim_end()), ("ontology", ontology_text.trim_end())],
    );
    let request = ChatRequest::new(prompt, params.clone(), StageTag::KgBuild);
    let response = backend.complete(&request)?;

    Ok(assemble_kg(&response.text, ontology, doc_id))
}

/// Repairs raw KG text, renumbers individuals into the `<Class>_<n>`
/// scheme, and enumerates them. Public so replayed raw outputs can be
/// reprocessed without a backend.
pub fn assemble_kg(raw: &str, ontology: &OntologySpec, doc_id: &str) -> KgBuildResult {
    let (graph, repair) = match repair_rdf_text(raw, &ontology.graph.prefixes) {
        Ok(pair) => pair,
        Err(err) => {
            let dropped = match err {
                RdfError::NoMeaningfulGraph { dropped } => dropped,
                _ => 0,
            };
            return KgBuildResult {
                graph: RdfGraph::with_prefixes(ontology.graph.prefixes.clone()),
                individuals: Vec::new(),
                status: KgStatus::NoMeaningfulKg,
                repair: RepairReport {
                    actions: vec![RepairAction {
                        kind: RepairActionKind::DroppedStatement,
                        detail: format!(
                            "no triples survived repair ({dropped} statement(s) dropped)"
                        ),
                    }],
                    recovered_text: String::new(),
                },
            };
        }
    };

    let (graph, individuals) = enumerate_individuals(graph, ontology, doc_id);
    let status = if individuals.is_empty() {
        KgStatus::NoMeaningfulKg
    } else {
        KgStatus::Ok
    };
    KgBuildResult {
        graph,
        individuals,
        status,
        repair,
    }
}

fn ontology_class_set(ontology: &OntologySpec) -> BTreeSet<Iri> {
    ontology.classes().into_iter().collect()
}

fn ontology_property_set(ontology: &OntologySpec) -> BTreeSet<Iri> {
    ontology.properties().into_iter().collect()
}

/// Finds subjects typed with an ontology class, renames non-conforming IRIs
/// into `<base><Class>_<n>`, and returns the rewritten graph plus the
/// individual table.
fn enumerate_individuals(
    graph: RdfGraph,
    ontology: &OntologySpec,
    doc_id: &str,
) -> (RdfGraph, Vec<KgIndividual>) {
    let rdf_type = Iri::new(ns::RDF_TYPE).expect("well-known IRI");
    let rdfs_label = Iri::new(ns::RDFS_LABEL).expect("well-known IRI");
    let classes = ontology_class_set(ontology);
    let properties = ontology_property_set(ontology);

    // subject -> ontology classes it is typed with (sorted).
    let mut typed: BTreeMap<Iri, BTreeSet<Iri>> = BTreeMap::new();
    for triple in graph.triples_matching(None, Some(&rdf_type), None) {
        if let Term::Iri(class) = &triple.object {
            if classes.contains(class)
                && !classes.contains(&triple.subject)
                && !properties.contains(&triple.subject)
            {
                typed
                    .entry(triple.subject.clone())
                    .or_default()
                    .insert(class.clone());
            }
        }
    }

    // Keep conforming IRIs; queue the rest for renumbering.
    let mut used: BTreeMap<Iri, BTreeSet<u32>> = BTreeMap::new(); // class -> taken numbers
    let mut rename: BTreeMap<Iri, Iri> = BTreeMap::new();
    let mut pending: Vec<(Iri, Iri)> = Vec::new(); // (subject, primary class)
    for (subject, subject_classes) in &typed {
        let primary = subject_classes.iter().next().expect("non-empty set").clone();
        match conforming_number(subject, &primary, &ontology.base_iri) {
            Some(n) => {
                used.entry(primary).or_default().insert(n);
            }
            None => pending.push((subject.clone(), primary)),
        }
    }
    for (subject, class) in pending {
        let taken = used.entry(class.clone()).or_default();
        let mut n = 1u32;
        while taken.contains(&n) {
            n += 1;
        }
        taken.insert(n);
        let new_iri = Iri::new(format!("{}{}_{n}", ontology.base_iri, class.local_name()))
            .expect("constructed IRI");
        rename.insert(subject, new_iri);
    }

    // Rewrite subjects and objects under the rename map.
    let rewritten: RdfGraph = if rename.is_empty() {
        graph
    } else {
        let mut out = RdfGraph::with_prefixes(graph.prefixes.clone());
        for triple in graph.iter() {
            let subject = rename.get(&triple.subject).unwrap_or(&triple.subject).clone();
            let object = match &triple.object {
                Term::Iri(iri) => Term::Iri(rename.get(iri).unwrap_or(iri).clone()),
                lit => lit.clone(),
            };
            out.insert(Triple::new(subject, triple.predicate.clone(), object));
        }
        out
    };

    let mut individuals = Vec::new();
    for (subject, subject_classes) in &typed {
        let iri = rename.get(subject).unwrap_or(subject).clone();
        let class_iri = subject_classes.iter().next().expect("non-empty set").clone();
        let label = rewritten
            .triples_matching(Some(&iri), Some(&rdfs_label), None)
            .into_iter()
            .find_map(|t| t.object.as_literal().map(|l| l.lexical.clone()));
        individuals.push(KgIndividual {
            iri,
            class_iri,
            label,
            source_doc: doc_id.to_string(),
        });
    }
    individuals.sort_by(|a, b| a.iri.cmp(&b.iri));
    (rewritten, individuals)
}

/// `<base><Class>_<n>` with positive `n`, for the given class.
fn conforming_number(iri: &Iri, class: &Iri, base_iri: &str) -> Option<u32> {
    let local = iri.as_str().strip_prefix(base_iri)?;
    let suffix = local.strip_prefix(class.local_name())?;
    let digits = suffix.strip_prefix('_')?;
    let n: u32 = digits.parse().ok()?;
    (n >= 1).then_some(n)
}

/// Checks a status-ok build against the ontology: undeclared classes and
/// properties are violations; "Not Specified" labels, same-class duplicate
/// labels, and missing labels are quality flags.
pub fn validate_kg(
    result: &KgBuildResult,
    ontology: &OntologySpec,
) -> Result<ValidationReport, KgError> {
    if result.status != KgStatus::Ok {
        return Err(KgError::NotOk);
    }
    let rdf_type = Iri::new(ns::RDF_TYPE).expect("well-known IRI");
    let rdfs_label = Iri::new(ns::RDFS_LABEL).expect("well-known IRI");
    let classes = ontology_class_set(ontology);
    let properties = ontology_property_set(ontology);

    let mut report = ValidationReport::default();

    for triple in result.graph.iter() {
        if triple.predicate == rdf_type {
            if let Term::Iri(class) = &triple.object {
                if !classes.contains(class) {
                    report.violations.push(Violation {
                        kind: ViolationKind::UndeclaredClass,
                        subject: triple.subject.as_str().to_string(),
                        detail: format!("typed with undeclared class {}", class.as_str()),
                    });
                }
            }
        } else if triple.predicate != rdfs_label && !properties.contains(&triple.predicate) {
            report.violations.push(Violation {
                kind: ViolationKind::UndeclaredProperty,
                subject: triple.subject.as_str().to_string(),
                detail: format!("uses undeclared property {}", triple.predicate.as_str()),
            });
        }
    }

    // Individuals carrying more than one rdf:type.
    for individual in &result.individuals {
        let types = result
            .graph
            .triples_matching(Some(&individual.iri), Some(&rdf_type), None);
        if types.len() > 1 {
            report.violations.push(Violation {
                kind: ViolationKind::MultipleTypes,
                subject: individual.iri.as_str().to_string(),
                detail: format!("{} rdf:type assertions", types.len()),
            });
        }
    }

    let mut by_value: BTreeMap<(Iri, String), Vec<String>> = BTreeMap::new();
    for individual in &result.individuals {
        match &individual.label {
            None => report.flags.push(QualityFlag {
                kind: FlagKind::Unlabeled,
                individuals: vec![individual.iri.as_str().to_string()],
                detail: "individual has no rdfs:label".into(),
            }),
            Some(label) if label.trim().eq_ignore_ascii_case("not specified") => {
                report.flags.push(QualityFlag {
                    kind: FlagKind::Unspecified,
                    individuals: vec![individual.iri.as_str().to_string()],
                    detail: "label is \"Not Specified\"".into(),
                });
            }
            Some(label) => {
                by_value
                    .entry((individual.class_iri.clone(), label.clone()))
                    .or_default()
                    .push(individual.iri.as_str().to_string());
            }
        }
    }
    for ((class, label), individuals) in by_value {
        if individuals.len() > 1 {
            report.flags.push(QualityFlag {
                kind: FlagKind::DuplicateValue,
                individuals,
                detail: format!(
                    "{} individuals share label \"{label}\"",
                    class.local_name()
                ),
            });
        }
    }
    Ok(report)
}

/// Links each individual to every question whose text contains its class
/// name decamelized (`DataFormat` matches "data format",
/// case-insensitively). Individuals whose class matches no question keep an
/// empty id list.
pub fn link_individuals(
    result: &KgBuildResult,
    _ontology: &OntologySpec,
    cqs: &CqSet,
) -> Result<Vec<IndividualLink>, KgError> {
    if result.status != KgStatus::Ok {
        return Err(KgError::NotOk);
    }
    let mut links = Vec::with_capacity(result.individuals.len());
    for individual in &result.individuals {
        let phrase = decamelize(individual.class_iri.local_name());
        let cq_ids: Vec<String> = cqs
            .questions
            .iter()
            .filter(|q| q.text.to_lowercase().contains(&phrase))
            .map(|q| q.cq_id.clone())
            .collect();
        links.push(IndividualLink {
            individual_iri: individual.iri.as_str().to_string(),
            cq_ids,
            match_basis: phrase,
        });
    }
    links.sort_by(|a, b| a.individual_iri.cmp(&b.individual_iri));
    Ok(links)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cq::{CompetencyQuestion, CqStatus, Provenance};
    use crate::ontology::{normalize_ontology, ConceptSet};

    const BASE: &str = "https://w3id.org/dlprov/";

    fn ontology() -> OntologySpec {
        let foundation = crate::ontology::load_foundation(None).unwrap();
        normalize_ontology(
            "",
            &ConceptSet::new(
                ["DeepLearningPipeline", "DataFormat", "Model"],
                ["hasDataFormat", "hasModel"],
            ),
            BASE,
            "dlprov",
            &foundation,
        )
    }

    fn cq(id: &str, text: &str) -> CompetencyQuestion {
        CompetencyQuestion {
            cq_id: id.into(),
            text: text.into(),
            status: CqStatus::Approved,
            provenance: Provenance::Llm,
        }
    }

    fn cq_set() -> CqSet {
        CqSet {
            questions: vec![
                cq("CQ1", "What data formats are used in the deep learning pipeline?"),
                cq("CQ2", "What model architectures are part of the deep learning pipeline?"),
            ],
            review_round: 1,
        }
    }

    const KG_EXCERPT: &str = "\
dlprov:DeepLearningPipeline_1 rdf:type dlprov:DeepLearningPipeline ;
    dlprov:hasDataFormat dlprov:DataFormat_1 ;
    dlprov:hasDataFormat dlprov:DataFormat_2 ;
dlprov:DataFormat_1 rdf:type dlprov:DataFormat ;
    rdfs:label 'Audio Spectrogram'.

dlprov:DataFormat_2 rdf:type dlprov:DataFormat ;
    rdfs:label 'Image data'.
";

    #[test]
    fn excerpt_fixture_assembles_three_individuals() {
        let result = assemble_kg(KG_EXCERPT, &ontology(), "doc1");
        assert_eq!(result.status, KgStatus::Ok);
        assert_eq!(result.graph.len(), 7);
        assert_eq!(result.individuals.len(), 3);
        let labels: Vec<Option<&str>> = result
            .individuals
            .iter()
            .map(|i| i.label.as_deref())
            .collect();
        assert!(labels.contains(&Some("Audio Spectrogram")));
        assert!(labels.contains(&Some("Image data")));
        assert!(result
            .individuals
            .iter()
            .all(|i| i.source_doc == "doc1"));
    }

    #[test]
    fn prose_output_is_no_meaningful_kg() {
        let result = assemble_kg(
            "I could not find any entities to extract from these answers.",
            &ontology(),
            "doc1",
        );
        assert_eq!(result.status, KgStatus::NoMeaningfulKg);
        assert!(result.individuals.is_empty());
    }

    #[test]
    fn parseable_graph_without_typed_individuals_is_no_meaningful_kg() {
        let result = assemble_kg(
            "dlprov:Orphan rdfs:label 'floating label' .",
            &ontology(),
            "doc1",
        );
        assert_eq!(result.status, KgStatus::NoMeaningfulKg);
    }

    #[test]
    fn nonconforming_iris_are_renumbered() {
        let raw = "\
dlprov:TheDetector rdf:type dlprov:Model ;\n    rdfs:label 'Detection head' .\n\
dlprov:Model_1 rdf:type dlprov:Model ;\n    rdfs:label 'Backbone' .\n";
        let result = assemble_kg(raw, &ontology(), "doc1");
        assert_eq!(result.status, KgStatus::Ok);
        let iris: Vec<&str> = result.individuals.iter().map(|i| i.iri.local_name()).collect();
        assert!(iris.contains(&"Model_1"));
        assert!(iris.contains(&"Model_2"));
        // Labels travel with the renamed individual.
        let renamed = result
            .individuals
            .iter()
            .find(|i| i.label.as_deref() == Some("Detection head"))
            .unwrap();
        assert_eq!(renamed.iri.local_name(), "Model_2");
    }

    #[test]
    fn individual_iris_are_collision_free_per_class() {
        let raw = "\
dlprov:A rdf:type dlprov:Model .\n\
dlprov:B rdf:type dlprov:Model .\n\
dlprov:Model_2 rdf:type dlprov:Model .\n";
        let result = assemble_kg(raw, &ontology(), "doc1");
        let mut iris: Vec<&str> = result.individuals.iter().map(|i| i.iri.as_str()).collect();
        let before = iris.len();
        iris.dedup();
        assert_eq!(before, iris.len());
        assert_eq!(before, 3);
    }

    #[test]
    fn validation_accepts_the_excerpt_fixture() {
        let result = assemble_kg(KG_EXCERPT, &ontology(), "doc1");
        let report = validate_kg(&result, &ontology()).unwrap();
        assert!(report.violations.is_empty(), "violations: {:?}", report.violations);
        // The pipeline individual has no label; that is a flag, not a violation.
        let unlabeled: Vec<_> = report
            .flags
            .iter()
            .filter(|f| f.kind == FlagKind::Unlabeled)
            .collect();
        assert_eq!(unlabeled.len(), 1);
    }

    #[test]
    fn not_specified_labels_are_flagged() {
        let raw = "dlprov:DataFormat_1 rdf:type dlprov:DataFormat ;\n    rdfs:label 'Not Specified' .";
        let result = assemble_kg(raw, &ontology(), "doc1");
        let report = validate_kg(&result, &ontology()).unwrap();
        let unspecified: Vec<_> = report
            .flags
            .iter()
            .filter(|f| f.kind == FlagKind::Unspecified)
            .collect();
        assert_eq!(unspecified.len(), 1);
    }

    #[test]
    fn duplicate_labels_within_a_class_are_flagged() {
        let raw = "\
dlprov:DataFormat_1 rdf:type dlprov:DataFormat ;\n    rdfs:label 'Image data' .\n\
dlprov:DataFormat_2 rdf:type dlprov:DataFormat ;\n    rdfs:label 'Image data' .\n";
        let result = assemble_kg(raw, &ontology(), "doc1");
        let report = validate_kg(&result, &ontology()).unwrap();
        let duplicates: Vec<_> = report
            .flags
            .iter()
            .filter(|f| f.kind == FlagKind::DuplicateValue)
            .collect();
        assert_eq!(duplicates.len(), 1);
        assert_eq!(duplicates[0].individuals.len(), 2);
    }

    #[test]
    fn undeclared_classes_and_properties_are_violations() {
        let raw = "\
dlprov:Mystery_1 rdf:type dlprov:Mystery .\n\
dlprov:DataFormat_1 rdf:type dlprov:DataFormat ;\n    dlprov:hasNothing dlprov:DataFormat_1 .\n";
        let result = assemble_kg(raw, &ontology(), "doc1");
        let report = validate_kg(&result, &ontology()).unwrap();
        let kinds: Vec<ViolationKind> = report.violations.iter().map(|v| v.kind).collect();
        assert!(kinds.contains(&ViolationKind::UndeclaredClass));
        assert!(kinds.contains(&ViolationKind::UndeclaredProperty));
    }

    #[test]
    fn multi_typed_individuals_are_violations() {
        let raw = "dlprov:X rdf:type dlprov:Model , dlprov:DataFormat .";
        let result = assemble_kg(raw, &ontology(), "doc1");
        assert_eq!(result.individuals.len(), 1);
        let report = validate_kg(&result, &ontology()).unwrap();
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::MultipleTypes));
    }

    #[test]
    fn linking_uses_decamelized_class_names() {
        let result = assemble_kg(KG_EXCERPT, &ontology(), "doc1");
        let links = link_individuals(&result, &ontology(), &cq_set()).unwrap();
        let format_link = links
            .iter()
            .find(|l| l.individual_iri.ends_with("DataFormat_1"))
            .unwrap();
        assert_eq!(format_link.match_basis, "data format");
        assert_eq!(format_link.cq_ids, ["CQ1"]);

        let pipeline_link = links
            .iter()
            .find(|l| l.individual_iri.ends_with("DeepLearningPipeline_1"))
            .unwrap();
        // "deep learning pipeline" appears in both questions.
        assert_eq!(pipeline_link.cq_ids, ["CQ1", "CQ2"]);
    }

    #[test]
    fn unmatched_classes_link_to_nothing() {
        let raw = "dlprov:Model_1 rdf:type dlprov:Model ;\n    rdfs:label 'CNN' .";
        let result = assemble_kg(raw, &ontology(), "doc1");
        let cqs = CqSet {
            questions: vec![cq("CQ1", "What data formats are used?")],
            review_round: 1,
        };
        let links = link_individuals(&result, &ontology(), &cqs).unwrap();
        assert_eq!(links.len(), 1);
        assert!(links[0].cq_ids.is_empty());
    }

    #[test]
    fn build_kg_requires_answers() {
        let err = build_kg(
            &crate::backend::ScriptedBackend,
            &crate::backend::default_params("m"),
            &cq_set(),
            &[],
            &ontology(),
            "doc1",
            "v1",
        )
        .unwrap_err();
        assert!(matches!(err, KgError::EmptyAnswers));
    }

    #[test]
    fn build_kg_rejects_mixed_documents() {
        let answers = vec![CqAnswer {
            cq_id: "CQ1".into(),
            doc_id: "other".into(),
            raw_text: "x".into(),
            clean_text: "x".into(),
            context_chunks: vec![],
            answered: true,
        }];
        let err = build_kg(
            &crate::backend::ScriptedBackend,
            &crate::backend::default_params("m"),
            &cq_set(),
            &answers,
            &ontology(),
            "doc1",
            "v1",
        )
        .unwrap_err();
        assert!(matches!(err, KgError::MixedDocuments { .. }));
    }

    #[test]
    fn scripted_build_is_deterministic_end_to_end() {
        let answers = vec![CqAnswer {
            cq_id: "CQ1".into(),
            doc_id: "doc1".into(),
            raw_text: "The main data format was the audio spectrogram.".into(),
            clean_text: "The main data format was the audio spectrogram.".into(),
            context_chunks: vec![("doc1".into(), 0)],
            answered: true,
        }];
        let build = || {
            build_kg(
                &crate::backend::ScriptedBackend,
                &crate::backend::default_params("m"),
                &cq_set(),
                &answers,
                &ontology(),
                "doc1",
                "v1",
            )
            .unwrap()
        };
        let a = build();
        let b = build();
        assert_eq!(
            crate::rdf::serialize_turtle(&a.graph),
            crate::rdf::serialize_turtle(&b.graph)
        );
        assert_eq!(a.status, KgStatus::Ok);
        assert!(a.individuals.iter().any(|i| i.label.as_deref() == Some("Audio Spectrogram")));
    }
}
