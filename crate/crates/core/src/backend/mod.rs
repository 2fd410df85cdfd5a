//! Chat-completion backend abstraction.
//!
//! One trait covers every backend: a live HTTP client for any
//! OpenAI-compatible endpoint, a record/replay store for offline runs, and
//! a deterministic scripted stand-in used by tests and demos.

mod http;
mod replay;
mod scripted;

pub use http::{HttpBackend, Transport, TransportResponse};
pub use replay::{RecordingBackend, ReplayBackend, ReplayStore};
pub use scripted::ScriptedBackend;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("user_text must not be empty")]
    EmptyUserText,
    #[error("temperature must be finite and >= 0, got {0}")]
    InvalidTemperature(f64),
    #[error("max_tokens must be >= 1")]
    InvalidMaxTokens,
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("backend returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed backend response: {0}")]
    MalformedResponse(String),
    #[error("missing replay fixture for fingerprint {fingerprint}")]
    FixtureMissing { fingerprint: String },
    #[error("replay fixture {fingerprint} already recorded with different text")]
    FixtureCollision { fingerprint: String },
    #[error("replay store I/O error at {path}: {source}")]
    Store {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Sampling parameters forwarded verbatim to the wire payload.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub temperature: f64,
    pub max_tokens: u32,
    pub model_name: String,
}

impl GenerationParams {
    pub fn validate(&self) -> Result<(), BackendError> {
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(BackendError::InvalidTemperature(self.temperature));
        }
        if self.max_tokens < 1 {
            return Err(BackendError::InvalidMaxTokens);
        }
        Ok(())
    }
}

/// Defaults: near-greedy sampling with a generous output cap.
pub fn default_params(model_name: impl Into<String>) -> GenerationParams {
    GenerationParams {
        temperature: 1e-5,
        max_tokens: 25_000,
        model_name: model_name.into(),
    }
}

/// The pipeline stage that issued a request.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageTag {
    CqGen,
    ConceptExtract,
    OntologyBuild,
    CqAnswer,
    KgBuild,
    JudgeAnswer,
    JudgeKg,
}

impl StageTag {
    pub fn as_str(self) -> &'static str {
        match self {
            StageTag::CqGen => "cq_gen",
            StageTag::ConceptExtract => "concept_extract",
            StageTag::OntologyBuild => "ontology_build",
            StageTag::CqAnswer => "cq_answer",
            StageTag::KgBuild => "kg_build",
            StageTag::JudgeAnswer => "judge_answer",
            StageTag::JudgeKg => "judge_kg",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub system_text: Option<String>,
    pub user_text: String,
    pub params: GenerationParams,
    pub stage_tag: StageTag,
}

impl ChatRequest {
    pub fn new(user_text: impl Into<String>, params: GenerationParams, stage_tag: StageTag) -> Self {
        ChatRequest {
            system_text: None,
            user_text: user_text.into(),
            params,
            stage_tag,
        }
    }

    /// Stable fingerprint over (system_text, user_text, params): SHA-256 of
    /// a canonical serialization, so any prompt or parameter edit
    /// invalidates recorded fixtures.
    pub fn fingerprint(&self) -> String {
        #[derive(Serialize)]
        struct Canonical<'a> {
            system: Option<&'a str>,
            user: &'a str,
            temperature: f64,
            max_tokens: u32,
            model: &'a str,
        }
        let canonical = Canonical {
            system: self.system_text.as_deref(),
            user: &self.user_text,
            temperature: self.params.temperature,
            max_tokens: self.params.max_tokens,
            model: &self.params.model_name,
        };
        let bytes = serde_json::to_vec(&canonical).expect("canonical request serialization");
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        format!("{:x}", hasher.finalize())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub backend_id: String,
    pub fingerprint: String,
}

/// A chat-completion backend. Implementations are safe for concurrent use.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, BackendError>;

    fn id(&self) -> &str;
}

pub(crate) fn check_request(request: &ChatRequest) -> Result<(), BackendError> {
    if request.user_text.is_empty() {
        return Err(BackendError::EmptyUserText);
    }
    request.params.validate()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(user: &str) -> ChatRequest {
        ChatRequest::new(user, default_params("test-model"), StageTag::CqGen)
    }

    #[test]
    fn default_params_hold_paper_scale_settings() {
        let params = default_params("m");
        assert_eq!(params.temperature, 1e-5);
        assert_eq!(params.max_tokens, 25_000);
    }

    #[test]
    fn params_validation_rejects_bad_values() {
        let mut params = default_params("m");
        params.temperature = -0.5;
        assert!(params.validate().is_err());
        params.temperature = f64::NAN;
        assert!(params.validate().is_err());
        params.temperature = 0.0;
        params.max_tokens = 0;
        assert!(params.validate().is_err());
    }

    #[test]
    fn fingerprint_is_stable_and_sensitive() {
        let a = request("hello").fingerprint();
        let b = request("hello").fingerprint();
        assert_eq!(a, b);
        assert_eq!(a.len(), 64);

        let c = request("hello!").fingerprint();
        assert_ne!(a, c);

        let mut with_system = request("hello");
        with_system.system_text = Some("system".into());
        assert_ne!(a, with_system.fingerprint());

        let mut different_params = request("hello");
        different_params.params.max_tokens = 512;
        assert_ne!(a, different_params.fingerprint());
    }

    #[test]
    fn fingerprint_ignores_stage_tag() {
        let mut a = request("hello");
        a.stage_tag = StageTag::CqGen;
        let mut b = request("hello");
        b.stage_tag = StageTag::KgBuild;
        assert_eq!(a.fingerprint(), b.fingerprint());
    }
}
