//! Semi-automatic construction of a domain ontology and knowledge graph
//! from a text corpus, driven by a pluggable chat-completion backend with
//! human review checkpoints and a judge-model evaluation layer.

pub mod answering;
pub mod backend;
pub mod corpus;
pub mod cq;
pub mod judge;
pub mod kg;
pub mod ontology;
pub mod pipeline;
pub mod prompts;
pub mod rdf;
pub mod util;
