//! Prompt templates, pinned and versioned with the code.
//!
//! Assembly order inside each template is fixed on purpose: reordering
//! prompt sections changes model output, so the order ships with the
//! artifact instead of being assembled ad hoc at call sites.

pub const CQ_GENERATE: &str = include_str!("../assets/prompts/cq_generate.txt");
pub const CONCEPT_EXTRACT: &str = include_str!("../assets/prompts/concept_extract.txt");
pub const ONTOLOGY_DRAFT: &str = include_str!("../assets/prompts/ontology_draft.txt");
pub const CQ_ANSWER: &str = include_str!("../assets/prompts/cq_answer.txt");
pub const KG_BUILD_V1: &str = include_str!("../assets/prompts/kg_build_v1.txt");
pub const KG_BUILD_V2: &str = include_str!("../assets/prompts/kg_build_v2.txt");
pub const JUDGE_ANSWER: &str = include_str!("../assets/prompts/judge_answer.txt");
pub const JUDGE_VERIFY: &str = include_str!("../assets/prompts/judge_verify.txt");

/// The knowledge-graph prompt variant for a version tag.
pub fn kg_build_template(version: &str) -> Option<&'static str> {
    match version {
        "v1" => Some(KG_BUILD_V1),
        "v2" => Some(KG_BUILD_V2),
        _ => None,
    }
}

/// Substitutes `{name}` placeholders. Unknown placeholders are left as-is.
pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (name, value) in vars {
        out = out.replace(&format!("{{{name}}}"), value);
    }
    out
}
