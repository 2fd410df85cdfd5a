//! Record/replay fixture store for offline, reproducible runs.
//!
//! Fixtures are immutable: one JSON file per request fingerprint. Replay
//! mode never touches the network; a request without a recorded fixture is
//! an error naming the fingerprint it looked for.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::util::atomic_write;

use super::{check_request, BackendError, ChatBackend, ChatRequest, ChatResponse};

#[derive(Serialize, Deserialize)]
struct Fixture {
    fingerprint: String,
    stage_tag: String,
    response_text: String,
}

/// Append-only store of recorded responses, one file per fingerprint.
pub struct ReplayStore {
    dir: PathBuf,
}

impl ReplayStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ReplayStore { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn fixture_path(&self, fingerprint: &str) -> PathBuf {
        self.dir.join(format!("{fingerprint}.json"))
    }

    /// Records a response. Recording the same text twice is idempotent;
    /// recording different text for an existing fingerprint is an error.
    pub fn record(
        &self,
        request: &ChatRequest,
        response_text: &str,
    ) -> Result<(), BackendError> {
        let fingerprint = request.fingerprint();
        let path = self.fixture_path(&fingerprint);
        if path.exists() {
            let existing = self.load(&fingerprint)?;
            if existing == response_text {
                return Ok(());
            }
            return Err(BackendError::FixtureCollision { fingerprint });
        }
        let fixture = Fixture {
            fingerprint: fingerprint.clone(),
            stage_tag: request.stage_tag.as_str().to_string(),
            response_text: response_text.to_string(),
        };
        let body = serde_json::to_string_pretty(&fixture).expect("fixture serialization");
        atomic_write(&path, body.as_bytes()).map_err(|source| BackendError::Store {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(&self, fingerprint: &str) -> Result<String, BackendError> {
        let path = self.fixture_path(fingerprint);
        if !path.exists() {
            return Err(BackendError::FixtureMissing {
                fingerprint: fingerprint.to_string(),
            });
        }
        let body = std::fs::read_to_string(&path).map_err(|source| BackendError::Store {
            path: path.display().to_string(),
            source,
        })?;
        let fixture: Fixture = serde_json::from_str(&body)
            .map_err(|e| BackendError::MalformedResponse(format!("fixture {fingerprint}: {e}")))?;
        Ok(fixture.response_text)
    }
}

/// Serves recorded fixtures; performs no network activity.
pub struct ReplayBackend {
    store: ReplayStore,
}

impl ReplayBackend {
    pub fn new(store: ReplayStore) -> Self {
        ReplayBackend { store }
    }
}

impl ChatBackend for ReplayBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, BackendError> {
        check_request(request)?;
        let fingerprint = request.fingerprint();
        let text = self.store.load(&fingerprint)?;
        Ok(ChatResponse {
            text,
            backend_id: self.id().to_string(),
            fingerprint,
        })
    }

    fn id(&self) -> &str {
        "replay"
    }
}

/// Delegates to an inner backend and records every response.
pub struct RecordingBackend {
    inner: Box<dyn ChatBackend>,
    store: ReplayStore,
}

impl RecordingBackend {
    pub fn new(inner: Box<dyn ChatBackend>, store: ReplayStore) -> Self {
        RecordingBackend { inner, store }
    }
}

impl ChatBackend for RecordingBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, BackendError> {
        let response = self.inner.complete(request)?;
        self.store.record(request, &response.text)?;
        Ok(response)
    }

    fn id(&self) -> &str {
        self.inner.id()
    }
}
