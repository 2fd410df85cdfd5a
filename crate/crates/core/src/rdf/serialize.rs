//! Deterministic Turtle serialization.
//!
//! Output is byte-stable for a given graph: prefixes sorted by name,
//! subjects sorted by resolved IRI, predicates grouped with `;` (with
//! `rdf:type` first, rendered as `a`), and objects joined with `,`.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::{ns, Iri, Literal, PrefixMap, RdfGraph, Term};

pub fn serialize_turtle(graph: &RdfGraph) -> String {
    let mut out = String::new();
    for (prefix, namespace) in graph.prefixes.iter() {
        let _ = writeln!(out, "@prefix {prefix}: <{namespace}> .");
    }
    if graph.prefixes.is_empty() || graph.is_empty() {
        if graph.is_empty() {
            return out;
        }
    } else {
        out.push('\n');
    }

    // Group triples: subject -> predicate -> objects (all pre-sorted by the
    // graph's BTreeSet ordering).
    let mut by_subject: BTreeMap<&Iri, BTreeMap<&Iri, Vec<&Term>>> = BTreeMap::new();
    for triple in graph.iter() {
        by_subject
            .entry(&triple.subject)
            .or_default()
            .entry(&triple.predicate)
            .or_default()
            .push(&triple.object);
    }

    let rdf_type = Iri::new(ns::RDF_TYPE).expect("well-known IRI");
    let mut first = true;
    for (subject, predicates) in &by_subject {
        if !first {
            out.push('\n');
        }
        first = false;

        let mut ordered: Vec<(&Iri, &Vec<&Term>)> = Vec::with_capacity(predicates.len());
        if let Some(objects) = predicates.get(&rdf_type) {
            ordered.push((&rdf_type, objects));
        }
        for (predicate, objects) in predicates {
            if **predicate != rdf_type {
                ordered.push((predicate, objects));
            }
        }

        let _ = write!(out, "{}", render_iri(subject, &graph.prefixes));
        for (i, (predicate, objects)) in ordered.iter().enumerate() {
            if i == 0 {
                out.push(' ');
            } else {
                out.push_str(" ;\n    ");
            }
            let verb = if **predicate == rdf_type {
                "a".to_string()
            } else {
                render_iri(predicate, &graph.prefixes)
            };
            let rendered: Vec<String> = objects
                .iter()
                .map(|o| render_term(o, &graph.prefixes))
                .collect();
            let _ = write!(out, "{verb} {}", rendered.join(", "));
        }
        out.push_str(" .\n");
    }
    out
}

pub(crate) fn render_iri(iri: &Iri, prefixes: &PrefixMap) -> String {
    match prefixes.abbreviate(iri) {
        Some((prefix, local)) => format!("{prefix}:{local}"),
        None => format!("<{}>", iri.as_str()),
    }
}

pub(crate) fn render_term(term: &Term, prefixes: &PrefixMap) -> String {
    match term {
        Term::Iri(iri) => render_iri(iri, prefixes),
        Term::Literal(lit) => render_literal(lit, prefixes),
    }
}

fn render_literal(lit: &Literal, prefixes: &PrefixMap) -> String {
    let mut out = String::with_capacity(lit.lexical.len() + 2);
    out.push('"');
    for c in lit.lexical.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            other => out.push(other),
        }
    }
    out.push('"');
    if let Some(lang) = &lit.language {
        out.push('@');
        out.push_str(lang);
    } else if let Some(datatype) = &lit.datatype {
        out.push_str("^^");
        out.push_str(&render_iri(datatype, prefixes));
    }
    out
}
