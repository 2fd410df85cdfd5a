//! Two-step ontology construction: concept/relation extraction from the
//! reviewed competency questions, then a model-drafted ontology grounded in
//! a small foundation vocabulary, followed by deterministic normalization
//! that guarantees completeness whatever the draft looked like.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, ChatBackend, ChatRequest, GenerationParams, StageTag};
use crate::cq::CqSet;
use crate::prompts;
use crate::rdf::{self, ns, parse_turtle, repair_rdf_text, Iri, RdfGraph, Term, Triple};

/// Vendored foundation: the three root classes everything hangs off.
pub const FOUNDATION_TTL: &str = include_str!("../assets/prov_o_min.ttl");

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("concept extraction requires a reviewed question set (review round >= 1)")]
    UnreviewedCqs,
    #[error("missing `{label}` line in extraction response:\n{raw}")]
    ExtractionParse { label: String, raw: String },
    #[error("concept set is empty")]
    EmptyConceptSet,
    #[error("cannot load foundation ontology: {0}")]
    Foundation(String),
}

/// Ordered, deduplicated concept and relation names.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConceptSet {
    pub concepts: Vec<String>,
    pub relations: Vec<String>,
}

impl ConceptSet {
    pub fn new<C, R>(concepts: C, relations: R) -> Self
    where
        C: IntoIterator,
        C::Item: AsRef<str>,
        R: IntoIterator,
        R::Item: AsRef<str>,
    {
        let mut set = ConceptSet::default();
        for c in concepts {
            set.push_concept(c.as_ref());
        }
        for r in relations {
            set.push_relation(r.as_ref());
        }
        set
    }

    pub fn push_concept(&mut self, raw: &str) {
        if let Some(name) = normalize_concept_name(raw) {
            if !self.concepts.contains(&name) {
                self.concepts.push(name);
            }
        }
    }

    pub fn push_relation(&mut self, raw: &str) {
        if let Some(name) = normalize_relation_name(raw) {
            if !self.relations.contains(&name) {
                self.relations.push(name);
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty() && self.relations.is_empty()
    }
}

fn name_words(raw: &str) -> Vec<String> {
    raw.split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

/// UpperCamelCase: each word capitalized, internal capitals preserved
/// (`data format` -> `DataFormat`, `dataFormat` -> `DataFormat`).
pub fn normalize_concept_name(raw: &str) -> Option<String> {
    let words = name_words(raw);
    if words.is_empty() {
        return None;
    }
    let mut out = String::new();
    for word in words {
        let mut chars = word.chars();
        let first = chars.next().expect("non-empty word");
        out.extend(first.to_uppercase());
        out.push_str(chars.as_str());
    }
    Some(out)
}

/// lowerCamelCase: like concepts but the first character lowercased
/// (`has data format` -> `hasDataFormat`).
pub fn normalize_relation_name(raw: &str) -> Option<String> {
    let camel = normalize_concept_name(raw)?;
    let mut chars = camel.chars();
    let first = chars.next().expect("non-empty name");
    Some(first.to_lowercase().chain(chars).collect())
}

/// Parses the `Concepts:` / `Relations:` labelled lists from an extraction
/// response.
pub fn parse_concept_response(text: &str) -> Result<ConceptSet, OntologyError> {
    let find_list = |label: &str| -> Option<Vec<String>> {
        for line in text.lines() {
            let trimmed = line.trim().trim_start_matches(['-', '*']).trim_start();
            if let Some(rest) = strip_prefix_ci(trimmed, label) {
                let rest = rest.trim_start_matches(':').trim();
                return Some(
                    rest.split(',')
                        .map(|s| s.trim().to_string())
                        .filter(|s| !s.is_empty())
                        .collect(),
                );
            }
        }
        None
    };
    let concepts = find_list("Concepts").ok_or_else(|| OntologyError::ExtractionParse {
        label: "Concepts:".into(),
        raw: text.to_string(),
    })?;
    let relations = find_list("Relations").ok_or_else(|| OntologyError::ExtractionParse {
        label: "Relations:".into(),
        raw: text.to_string(),
    })?;
    Ok(ConceptSet::new(concepts, relations))
}

fn strip_prefix_ci<'a>(line: &'a str, prefix: &str) -> Option<&'a str> {
    if line.len() >= prefix.len() && line[..prefix.len()].eq_ignore_ascii_case(prefix) {
        Some(&line[prefix.len()..])
    } else {
        None
    }
}

/// Sends the reviewed questions plus the in-context example and parses the
/// labelled concept/relation lists out of the response.
pub fn extract_concept_set(
    backend: &dyn ChatBackend,
    params: &GenerationParams,
    cqs: &CqSet,
) -> Result<ConceptSet, OntologyError> {
    if cqs.review_round < 1 {
        return Err(OntologyError::UnreviewedCqs);
    }
    let listing: String = cqs
        .questions
        .iter()
        .map(|q| format!("{}: {}\n", q.cq_id, q.text))
        .collect();
    let prompt = prompts::render(prompts::CONCEPT_EXTRACT, &[("cqs", listing.trim_end())]);
    let request = ChatRequest::new(prompt, params.clone(), StageTag::ConceptExtract);
    let response = backend.complete(&request)?;
    parse_concept_response(&response.text)
}

/// Prompts for an ontology draft. The raw text is returned untouched; the
/// repair and normalization pass owns cleanup.
pub fn draft_ontology(
    backend: &dyn ChatBackend,
    params: &GenerationParams,
    concept_set: &ConceptSet,
    base_iri: &str,
    foundation: &RdfGraph,
) -> Result<String, OntologyError> {
    if concept_set.is_empty() {
        return Err(OntologyError::EmptyConceptSet);
    }
    let foundation_listing: String = foundation_classes(foundation)
        .iter()
        .map(|c| format!("- {}\n", c.as_str()))
        .collect();
    let prompt = prompts::render(
        prompts::ONTOLOGY_DRAFT,
        &[
            ("base_iri", base_iri),
            ("foundation", foundation_listing.trim_end()),
            ("concepts", &concept_set.concepts.join(", ")),
            ("relations", &concept_set.relations.join(", ")),
        ],
    );
    let request = ChatRequest::new(prompt, params.clone(), StageTag::OntologyBuild);
    let response = backend.complete(&request)?;
    Ok(response.text)
}

/// Loads the foundation graph from a file, or the vendored default.
pub fn load_foundation(path: Option<&std::path::Path>) -> Result<RdfGraph, OntologyError> {
    let text = match path {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| OntologyError::Foundation(format!("{}: {e}", path.display())))?,
        None => FOUNDATION_TTL.to_string(),
    };
    let graph = parse_turtle(&text, &rdf::known_namespaces())
        .map_err(|e| OntologyError::Foundation(e.to_string()))?;
    if foundation_classes(&graph).is_empty() {
        return Err(OntologyError::Foundation(
            "foundation declares no owl:Class".into(),
        ));
    }
    Ok(graph)
}

fn foundation_classes(foundation: &RdfGraph) -> Vec<Iri> {
    let owl_class = Iri::new(ns::OWL_CLASS).expect("well-known IRI");
    foundation
        .subjects_of_type(&owl_class)
        .into_iter()
        .cloned()
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OntologySpec {
    pub graph: RdfGraph,
    pub base_iri: String,
    pub foundation: RdfGraph,
    pub class_count: usize,
    pub property_count: usize,
    /// Raw triple count of the serialized graph; no logical-axiom counting
    /// convention is applied.
    pub axiom_count: usize,
    /// Names that were missing from the draft and synthesized here.
    pub synthesized: Vec<String>,
    /// False when the draft was unusable and the ontology was synthesized
    /// from the concept set alone.
    pub draft_usable: bool,
}

impl OntologySpec {
    pub fn classes(&self) -> Vec<Iri> {
        let owl_class = Iri::new(ns::OWL_CLASS).expect("well-known IRI");
        self.graph
            .subjects_of_type(&owl_class)
            .into_iter()
            .cloned()
            .collect()
    }

    pub fn base_classes(&self) -> Vec<Iri> {
        self.classes()
            .into_iter()
            .filter(|c| c.as_str().starts_with(&self.base_iri))
            .collect()
    }

    pub fn properties(&self) -> Vec<Iri> {
        let owl_property = Iri::new(ns::OWL_OBJECT_PROPERTY).expect("well-known IRI");
        self.graph
            .subjects_of_type(&owl_property)
            .into_iter()
            .cloned()
            .collect()
    }

    pub fn base_properties(&self) -> Vec<Iri> {
        self.properties()
            .into_iter()
            .filter(|p| p.as_str().starts_with(&self.base_iri))
            .collect()
    }

    /// JSON sidecar persisted next to the serialized ontology.
    pub fn stats(&self) -> OntologyStats {
        OntologyStats {
            class_count: self.class_count,
            property_count: self.property_count,
            axiom_count: self.axiom_count,
            synthesized: self.synthesized.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OntologyStats {
    pub class_count: usize,
    pub property_count: usize,
    pub axiom_count: usize,
    pub synthesized: Vec<String>,
}

/// Superclass heuristic: activity-like names attach to the activity root,
/// agent-like names to the agent root, everything else to the entity root.
fn heuristic_superclass(name: &str, foundation: &RdfGraph) -> Iri {
    let classes = foundation_classes(foundation);
    let pick = |iri_str: &str| -> Option<Iri> {
        classes.iter().find(|c| c.as_str() == iri_str).cloned()
    };
    let entity = pick(ns::PROV_ENTITY)
        .or_else(|| classes.first().cloned())
        .expect("foundation has at least one class");
    let activity = pick(ns::PROV_ACTIVITY).unwrap_or_else(|| entity.clone());
    let agent = pick(ns::PROV_AGENT).unwrap_or_else(|| entity.clone());

    const ACTIVITY_SUFFIXES: &[&str] = &["Process", "Pipeline", "Step", "Training"];
    const AGENT_SUFFIXES: &[&str] = &["Author", "Annotator"];
    if ACTIVITY_SUFFIXES.iter().any(|s| name.ends_with(s)) {
        activity
    } else if AGENT_SUFFIXES.iter().any(|s| name.ends_with(s)) {
        agent
    } else {
        entity
    }
}

/// Repairs a raw draft and deterministically enforces completeness: every
/// concept becomes a declared class reaching a foundation root, every
/// relation a declared object property (with a range when it follows the
/// `has<Concept>` pattern). Never fails: an unusable draft degrades to a
/// fully synthesized ontology.
pub fn normalize_ontology(
    raw: &str,
    concept_set: &ConceptSet,
    base_iri: &str,
    base_prefix: &str,
    foundation: &RdfGraph,
) -> OntologySpec {
    let mut base_prefixes = rdf::known_namespaces();
    base_prefixes.insert(base_prefix, base_iri);

    let (mut graph, draft_usable) = match repair_rdf_text(raw, &base_prefixes) {
        Ok((graph, _report)) => (graph, true),
        Err(_) => (RdfGraph::with_prefixes(base_prefixes.clone()), false),
    };
    graph.prefixes.insert(base_prefix, base_iri);
    graph.extend(foundation);

    let rdf_type = Iri::new(ns::RDF_TYPE).expect("well-known IRI");
    let owl_class = Iri::new(ns::OWL_CLASS).expect("well-known IRI");
    let owl_property = Iri::new(ns::OWL_OBJECT_PROPERTY).expect("well-known IRI");
    let subclass_of = Iri::new(ns::RDFS_SUBCLASS_OF).expect("well-known IRI");
    let range = Iri::new(ns::RDFS_RANGE).expect("well-known IRI");
    let ontology_iri = Iri::new(base_iri).ok();

    if let Some(onto) = &ontology_iri {
        graph.insert(Triple::new(
            onto.clone(),
            rdf_type.clone(),
            Term::Iri(Iri::new(ns::OWL_ONTOLOGY).expect("well-known IRI")),
        ));
    }

    let mut synthesized = Vec::new();

    // Declare every concept that the draft missed.
    for concept in &concept_set.concepts {
        let iri = match Iri::new(format!("{base_iri}{concept}")) {
            Ok(iri) => iri,
            Err(_) => continue,
        };
        let declared = graph.contains(&Triple::new(
            iri.clone(),
            rdf_type.clone(),
            Term::Iri(owl_class.clone()),
        ));
        if !declared {
            graph.insert(Triple::new(
                iri.clone(),
                rdf_type.clone(),
                Term::Iri(owl_class.clone()),
            ));
            synthesized.push(concept.clone());
        }
    }

    // Every base-namespace class needs a superclass edge that lands on the
    // foundation or another declared class.
    let declared_classes: std::collections::BTreeSet<Iri> =
        graph.subjects_of_type(&owl_class).into_iter().cloned().collect();
    let foundation_set: std::collections::BTreeSet<Iri> =
        foundation_classes(foundation).into_iter().collect();
    let needs_parent: Vec<Iri> = declared_classes
        .iter()
        .filter(|class| class.as_str().starts_with(base_iri))
        .filter(|class| {
            !graph
                .triples_matching(Some(class), Some(&subclass_of), None)
                .iter()
                .any(|t| match &t.object {
                    Term::Iri(target) => {
                        foundation_set.contains(target) || declared_classes.contains(target)
                    }
                    Term::Literal(_) => false,
                })
        })
        .cloned()
        .collect();
    for class in needs_parent {
        let parent = heuristic_superclass(class.local_name(), foundation);
        graph.insert(Triple::new(
            class,
            subclass_of.clone(),
            Term::Iri(parent),
        ));
    }

    // Declare every relation the draft missed; add a range for the
    // has<Concept> pattern when the concept class exists.
    for relation in &concept_set.relations {
        let iri = match Iri::new(format!("{base_iri}{relation}")) {
            Ok(iri) => iri,
            Err(_) => continue,
        };
        let declared = graph.contains(&Triple::new(
            iri.clone(),
            rdf_type.clone(),
            Term::Iri(owl_property.clone()),
        ));
        if !declared {
            graph.insert(Triple::new(
                iri.clone(),
                rdf_type.clone(),
                Term::Iri(owl_property.clone()),
            ));
            synthesized.push(relation.clone());
        }
        if let Some(concept) = relation.strip_prefix("has") {
            if concept_set.concepts.iter().any(|c| c == concept) {
                if let Ok(target) = Iri::new(format!("{base_iri}{concept}")) {
                    let has_range = !graph
                        .triples_matching(Some(&iri), Some(&range), None)
                        .is_empty();
                    if !has_range {
                        graph.insert(Triple::new(
                            iri.clone(),
                            range.clone(),
                            Term::Iri(target),
                        ));
                    }
                }
            }
        }
    }

    let class_count = graph
        .subjects_of_type(&owl_class)
        .iter()
        .filter(|c| c.as_str().starts_with(base_iri))
        .count();
    let property_count = graph
        .subjects_of_type(&owl_property)
        .iter()
        .filter(|p| p.as_str().starts_with(base_iri))
        .count();
    let axiom_count = graph.len();

    OntologySpec {
        graph,
        base_iri: base_iri.to_string(),
        foundation: foundation.clone(),
        class_count,
        property_count,
        axiom_count,
        synthesized,
        draft_usable,
    }
}
