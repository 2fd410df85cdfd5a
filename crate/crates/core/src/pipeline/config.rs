//! Pipeline configuration: JSON file, validated at load, snapshotted into
//! the run directory at run creation and immutable afterwards.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Unreadable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendMode {
    /// POST to a live OpenAI-compatible endpoint.
    Live,
    /// Serve recorded fixtures only; no network.
    Replay,
    /// Deterministic offline stand-in.
    Scripted,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BackendConfig {
    pub mode: BackendMode,
    #[serde(default = "default_base_url")]
    pub base_url: String,
    #[serde(default = "default_model")]
    pub model: String,
    /// Name of the environment variable holding the API key (live mode).
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    /// Record every response into the fixture store (live/scripted modes).
    #[serde(default)]
    pub record: bool,
    /// Fixture store location; defaults to `<run_dir>/replay`.
    #[serde(default)]
    pub fixtures_dir: Option<PathBuf>,
    /// Bound on concurrent in-flight requests.
    #[serde(default = "default_max_in_flight")]
    pub max_in_flight: usize,
}

fn default_base_url() -> String {
    "http://localhost:8000/v1".into()
}
fn default_model() -> String {
    "mixtral-8x7b-instruct".into()
}
fn default_api_key_env() -> String {
    "ONTOFORGE_API_KEY".into()
}
fn default_temperature() -> f64 {
    1e-5
}
fn default_max_tokens() -> u32 {
    25_000
}
fn default_timeout_secs() -> u64 {
    120
}
fn default_max_in_flight() -> usize {
    2
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            mode: BackendMode::Scripted,
            base_url: default_base_url(),
            model: default_model(),
            api_key_env: default_api_key_env(),
            temperature: default_temperature(),
            max_tokens: default_max_tokens(),
            timeout_secs: default_timeout_secs(),
            record: false,
            fixtures_dir: None,
            max_in_flight: default_max_in_flight(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChunkingConfig {
    pub size: usize,
    pub overlap: usize,
}

impl Default for ChunkingConfig {
    fn default() -> Self {
        ChunkingConfig {
            size: 2500,
            overlap: 100,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(default)]
    pub backend: BackendConfig,
    pub corpus_dir: PathBuf,
    #[serde(default)]
    pub chunking: ChunkingConfig,
    #[serde(default = "default_retrieval_k")]
    pub retrieval_k: usize,
    #[serde(default = "default_base_iri")]
    pub base_iri: String,
    #[serde(default = "default_base_prefix")]
    pub base_prefix: String,
    /// Foundation ontology file; the vendored subset when absent.
    #[serde(default)]
    pub foundation_path: Option<PathBuf>,
    #[serde(default = "default_version")]
    pub prompt_version: String,
    #[serde(default = "default_version")]
    pub answer_version: String,
    #[serde(default = "default_domain_prompt")]
    pub domain_prompt: String,
    #[serde(default = "default_dont_know")]
    pub dont_know_patterns: Vec<String>,
    /// Drop individuals that link to no question from the evaluation
    /// denominator.
    #[serde(default)]
    pub exclude_unlinked_individuals: bool,
}

fn default_retrieval_k() -> usize {
    4
}
fn default_base_iri() -> String {
    "https://w3id.org/dlprov/".into()
}
fn default_base_prefix() -> String {
    "dlprov".into()
}
fn default_version() -> String {
    "v1".into()
}
fn default_domain_prompt() -> String {
    "the provenance of deep learning pipelines described in scholarly publications: \
     their data sources, data formats, models, hyperparameters, and evaluation"
        .into()
}
fn default_dont_know() -> Vec<String> {
    crate::answering::DONT_KNOW_PATTERNS
        .iter()
        .map(|s| s.to_string())
        .collect()
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let body = std::fs::read_to_string(path).map_err(|source| ConfigError::Unreadable {
            path: path.display().to_string(),
            source,
        })?;
        let config: PipelineConfig = serde_json::from_str(&body)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !self.backend.temperature.is_finite() || self.backend.temperature < 0.0 {
            return Err(ConfigError::Invalid(format!(
                "backend.temperature must be finite and >= 0, got {}",
                self.backend.temperature
            )));
        }
        if self.backend.max_tokens < 1 {
            return Err(ConfigError::Invalid("backend.max_tokens must be >= 1".into()));
        }
        if self.backend.max_in_flight < 1 {
            return Err(ConfigError::Invalid("backend.max_in_flight must be >= 1".into()));
        }
        if self.chunking.size == 0 || self.chunking.overlap >= self.chunking.size {
            return Err(ConfigError::Invalid(format!(
                "chunking.overlap ({}) must be smaller than chunking.size ({})",
                self.chunking.overlap, self.chunking.size
            )));
        }
        if self.retrieval_k < 1 {
            return Err(ConfigError::Invalid("retrieval_k must be >= 1".into()));
        }
        if crate::rdf::Iri::new(self.base_iri.clone()).is_err() {
            return Err(ConfigError::Invalid(format!(
                "base_iri `{}` is not an absolute IRI",
                self.base_iri
            )));
        }
        if crate::prompts::kg_build_template(&self.prompt_version).is_none() {
            return Err(ConfigError::Invalid(format!(
                "prompt_version `{}` has no prompt template",
                self.prompt_version
            )));
        }
        if self.answer_version.is_empty()
            || !self.answer_version.chars().all(|c| c.is_ascii_alphanumeric() || c == '-')
        {
            return Err(ConfigError::Invalid(
                "answer_version must be a nonempty alphanumeric tag".into(),
            ));
        }
        for pattern in &self.dont_know_patterns {
            regex::Regex::new(pattern).map_err(|e| {
                ConfigError::Invalid(format!("dont_know pattern `{pattern}`: {e}"))
            })?;
        }
        Ok(())
    }

    pub fn generation_params(&self) -> crate::backend::GenerationParams {
        crate::backend::GenerationParams {
            temperature: self.backend.temperature,
            max_tokens: self.backend.max_tokens,
            model_name: self.backend.model.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_json() -> serde_json::Value {
        serde_json::json!({
            "backend": {"mode": "scripted"},
            "corpus_dir": "corpus"
        })
    }

    #[test]
    fn defaults_match_reference_settings() {
        let config: PipelineConfig = serde_json::from_value(minimal_json()).unwrap();
        config.validate().unwrap();
        assert_eq!(config.chunking.size, 2500);
        assert_eq!(config.chunking.overlap, 100);
        assert_eq!(config.backend.temperature, 1e-5);
        assert_eq!(config.backend.max_tokens, 25_000);
        assert_eq!(config.retrieval_k, 4);
        assert_eq!(config.base_iri, "https://w3id.org/dlprov/");
        assert_eq!(config.backend.max_in_flight, 2);
    }

    #[test]
    fn max_tokens_override_is_respected() {
        let mut json = minimal_json();
        json["backend"]["max_tokens"] = 512.into();
        let config: PipelineConfig = serde_json::from_value(json).unwrap();
        config.validate().unwrap();
        assert_eq!(config.backend.max_tokens, 512);
        assert_eq!(config.backend.temperature, 1e-5);
    }

    #[test]
    fn negative_temperature_fails_at_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        let mut json = minimal_json();
        json["backend"]["temperature"] = (-0.1).into();
        std::fs::write(&path, json.to_string()).unwrap();
        assert!(matches!(
            PipelineConfig::load(&path),
            Err(ConfigError::Invalid(_))
        ));
    }

    #[test]
    fn bad_chunking_and_prompt_version_fail_validation() {
        let mut config: PipelineConfig = serde_json::from_value(minimal_json()).unwrap();
        config.chunking.overlap = config.chunking.size;
        assert!(config.validate().is_err());

        let mut config: PipelineConfig = serde_json::from_value(minimal_json()).unwrap();
        config.prompt_version = "v9".into();
        assert!(config.validate().is_err());
    }
}
