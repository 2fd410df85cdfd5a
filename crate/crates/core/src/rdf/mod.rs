//! Minimal RDF data model with a Turtle parser, deterministic serializer,
//! and a repair layer for RDF text emitted by language models.
//!
//! The model is intentionally small: flat subject-predicate-object triples
//! with prefixed names, full IRIs, and string/typed literals. Blank-node
//! property lists, collections, and named graphs are out of scope.

mod parse;
mod repair;
mod serialize;

pub use parse::parse_turtle;
pub use repair::{repair_rdf_text, RepairAction, RepairActionKind, RepairReport};
pub use serialize::serialize_turtle;

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Well-known namespace IRIs.
pub mod ns {
    pub const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
    pub const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";
    pub const OWL: &str = "http://www.w3.org/2002/07/owl#";
    pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";
    pub const PROV: &str = "http://www.w3.org/ns/prov#";
    pub const DLPROV: &str = "https://w3id.org/dlprov/";

    pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
    pub const RDFS_LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";
    pub const RDFS_SUBCLASS_OF: &str = "http://www.w3.org/2000/01/rdf-schema#subClassOf";
    pub const RDFS_DOMAIN: &str = "http://www.w3.org/2000/01/rdf-schema#domain";
    pub const RDFS_RANGE: &str = "http://www.w3.org/2000/01/rdf-schema#range";
    pub const OWL_CLASS: &str = "http://www.w3.org/2002/07/owl#Class";
    pub const OWL_OBJECT_PROPERTY: &str = "http://www.w3.org/2002/07/owl#ObjectProperty";
    pub const OWL_ONTOLOGY: &str = "http://www.w3.org/2002/07/owl#Ontology";
    pub const PROV_ENTITY: &str = "http://www.w3.org/ns/prov#Entity";
    pub const PROV_ACTIVITY: &str = "http://www.w3.org/ns/prov#Activity";
    pub const PROV_AGENT: &str = "http://www.w3.org/ns/prov#Agent";
}

/// The fixed table of namespaces the repair layer may inject declarations
/// for. Versioned in code so repair stays deterministic.
pub fn known_namespaces() -> PrefixMap {
    let mut map = PrefixMap::new();
    map.insert("rdf", ns::RDF);
    map.insert("rdfs", ns::RDFS);
    map.insert("owl", ns::OWL);
    map.insert("xsd", ns::XSD);
    map.insert("prov", ns::PROV);
    map.insert("dlprov", ns::DLPROV);
    map
}

#[derive(Debug, Error)]
pub enum RdfError {
    #[error("turtle syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("undefined prefix `{prefix}` at line {line}")]
    UndefinedPrefix { prefix: String, line: usize },
    #[error("invalid IRI `{0}`: must be absolute and contain no whitespace")]
    InvalidIri(String),
    #[error("no meaningful graph: no triples survived repair ({dropped} statement(s) dropped)")]
    NoMeaningfulGraph { dropped: usize },
}

/// An absolute IRI.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Iri(String);

impl Iri {
    /// Validates and wraps an absolute IRI.
    pub fn new(value: impl Into<String>) -> Result<Self, RdfError> {
        let value = value.into();
        if !is_absolute_iri(&value) {
            return Err(RdfError::InvalidIri(value));
        }
        Ok(Iri(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The part after the last `#` or `/`, commonly the class or property name.
    pub fn local_name(&self) -> &str {
        match self.0.rfind(['#', '/']) {
            Some(pos) => &self.0[pos + 1..],
            None => &self.0,
        }
    }
}

impl fmt::Debug for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn is_absolute_iri(value: &str) -> bool {
    if value.is_empty() || value.chars().any(|c| c.is_whitespace() || c.is_control()) {
        return false;
    }
    // Require a scheme: ALPHA *( ALPHA / DIGIT / "+" / "-" / "." ) ":"
    let Some(colon) = value.find(':') else {
        return false;
    };
    let scheme = &value[..colon];
    let mut chars = scheme.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
}

/// A literal value: lexical form plus optional language tag or datatype.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct Literal {
    pub lexical: String,
    pub language: Option<String>,
    pub datatype: Option<Iri>,
}

impl Literal {
    pub fn plain(lexical: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            language: None,
            datatype: None,
        }
    }

    pub fn typed(lexical: impl Into<String>, datatype: Iri) -> Self {
        Literal {
            lexical: lexical.into(),
            language: None,
            datatype: Some(datatype),
        }
    }
}

/// An object position term: IRI or literal.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Term {
    Iri(Iri),
    Literal(Literal),
}

impl Term {
    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Term::Iri(iri) => Some(iri),
            Term::Literal(_) => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Iri(_) => None,
            Term::Literal(lit) => Some(lit),
        }
    }
}

impl Ord for Term {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        match (self, other) {
            (Term::Iri(a), Term::Iri(b)) => a.cmp(b),
            (Term::Literal(a), Term::Literal(b)) => a.cmp(b),
            (Term::Iri(_), Term::Literal(_)) => std::cmp::Ordering::Less,
            (Term::Literal(_), Term::Iri(_)) => std::cmp::Ordering::Greater,
        }
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct Triple {
    pub subject: Iri,
    pub predicate: Iri,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: Iri, predicate: Iri, object: Term) -> Self {
        Triple {
            subject,
            predicate,
            object,
        }
    }
}

/// Prefix name to namespace IRI bindings.
#[derive(Clone, Default, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct PrefixMap(BTreeMap<String, String>);

impl PrefixMap {
    pub fn new() -> Self {
        PrefixMap(BTreeMap::new())
    }

    pub fn insert(&mut self, prefix: impl Into<String>, namespace: impl Into<String>) {
        self.0.insert(prefix.into(), namespace.into());
    }

    pub fn get(&self, prefix: &str) -> Option<&str> {
        self.0.get(prefix).map(String::as_str)
    }

    pub fn contains(&self, prefix: &str) -> bool {
        self.0.contains_key(prefix)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Merge `other` into self; existing bindings win.
    pub fn merge(&mut self, other: &PrefixMap) {
        for (prefix, namespace) in other.iter() {
            self.0
                .entry(prefix.to_string())
                .or_insert_with(|| namespace.to_string());
        }
    }

    /// Longest-namespace abbreviation of an IRI, if the remainder is a
    /// valid local name for our Turtle subset.
    pub fn abbreviate(&self, iri: &Iri) -> Option<(String, String)> {
        let mut best: Option<(&str, &str)> = None;
        for (prefix, namespace) in self.iter() {
            if let Some(local) = iri.as_str().strip_prefix(namespace) {
                if is_valid_local_name(local)
                    && best.map_or(true, |(_, ns)| namespace.len() > ns.len())
                {
                    best = Some((prefix, local));
                }
            }
        }
        best.map(|(p, l)| (p.to_string(), l.to_string()))
    }
}

/// Local names in this subset: letters, digits, `_`, `-`; no dots.
pub(crate) fn is_valid_local_name(local: &str) -> bool {
    !local.is_empty()
        && local
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// A set of triples plus the prefix bindings used to read or write them.
#[derive(Clone, Default, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct RdfGraph {
    triples: BTreeSet<Triple>,
    pub prefixes: PrefixMap,
}

impl RdfGraph {
    pub fn new() -> Self {
        RdfGraph::default()
    }

    pub fn with_prefixes(prefixes: PrefixMap) -> Self {
        RdfGraph {
            triples: BTreeSet::new(),
            prefixes,
        }
    }

    pub fn insert(&mut self, triple: Triple) {
        self.triples.insert(triple);
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.triples.contains(triple)
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Triples in deterministic (subject, predicate, object) order.
    pub fn iter(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }

    /// Merge triples and prefixes from another graph.
    pub fn extend(&mut self, other: &RdfGraph) {
        for triple in other.iter() {
            self.triples.insert(triple.clone());
        }
        self.prefixes.merge(&other.prefixes);
    }

    /// Same triple set, regardless of prefix bindings.
    pub fn same_triples(&self, other: &RdfGraph) -> bool {
        self.triples == other.triples
    }

    /// All triples matching the bound positions, in deterministic order.
    pub fn triples_matching(
        &self,
        subject: Option<&Iri>,
        predicate: Option<&Iri>,
        object: Option<&Term>,
    ) -> Vec<&Triple> {
        self.triples
            .iter()
            .filter(|t| {
                subject.map_or(true, |s| &t.subject == s)
                    && predicate.map_or(true, |p| &t.predicate == p)
                    && object.map_or(true, |o| &t.object == o)
            })
            .collect()
    }

    /// Subjects carrying an `rdf:type` edge to the given class.
    pub fn subjects_of_type(&self, class: &Iri) -> Vec<&Iri> {
        let rdf_type = Iri::new(ns::RDF_TYPE).expect("well-known IRI");
        self.triples_matching(None, Some(&rdf_type), Some(&Term::Iri(class.clone())))
            .into_iter()
            .map(|t| &t.subject)
            .collect()
    }
}

impl FromIterator<Triple> for RdfGraph {
    fn from_iter<I: IntoIterator<Item = Triple>>(iter: I) -> Self {
        RdfGraph {
            triples: iter.into_iter().collect(),
            prefixes: PrefixMap::new(),
        }
    }
}
