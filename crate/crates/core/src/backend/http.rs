//! Live HTTP backend speaking the OpenAI-compatible chat-completions
//! protocol.

use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{check_request, BackendError, ChatBackend, ChatRequest, ChatResponse};

/// Transport abstraction so tests can stub the network.
pub trait Transport: Send + Sync {
    fn post_json(
        &self,
        url: &str,
        headers: &[(String, String)],
        body: &serde_json::Value,
    ) -> Result<TransportResponse, String>;
}

pub struct TransportResponse {
    pub status: u16,
    pub body: String,
}

struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl Transport for ReqwestTransport {
    fn post_json(
        &self,
        url: &str,
        headers: &[(String, String)],
        body: &serde_json::Value,
    ) -> Result<TransportResponse, String> {
        let mut builder = self.client.post(url).json(body);
        for (name, value) in headers {
            builder = builder.header(name.as_str(), value.as_str());
        }
        let response = builder.send().map_err(|e| e.to_string())?;
        let status = response.status().as_u16();
        let body = response.text().map_err(|e| e.to_string())?;
        Ok(TransportResponse { status, body })
    }
}

/// Request body for `POST <base_url>/chat/completions`.
#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub(crate) struct WirePayload {
    pub model: String,
    pub messages: Vec<WireMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub(crate) struct WireMessage {
    pub role: String,
    pub content: String,
}

impl WirePayload {
    pub(crate) fn from_request(request: &ChatRequest) -> Self {
        let mut messages = Vec::new();
        if let Some(system) = &request.system_text {
            messages.push(WireMessage {
                role: "system".into(),
                content: system.clone(),
            });
        }
        messages.push(WireMessage {
            role: "user".into(),
            content: request.user_text.clone(),
        });
        WirePayload {
            model: request.params.model_name.clone(),
            messages,
            temperature: request.params.temperature,
            max_tokens: request.params.max_tokens,
        }
    }
}

#[derive(Deserialize)]
struct CompletionBody {
    choices: Vec<CompletionChoice>,
}

#[derive(Deserialize)]
struct CompletionChoice {
    message: CompletionMessage,
}

#[derive(Deserialize)]
struct CompletionMessage {
    content: String,
}

pub struct HttpBackend {
    base_url: String,
    api_key: Option<String>,
    transport: Box<dyn Transport>,
    max_retries: u32,
    backoff: Duration,
}

impl HttpBackend {
    pub fn new(base_url: impl Into<String>, api_key: Option<String>, timeout: Duration) -> Self {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .expect("HTTP client");
        Self::with_transport(base_url, api_key, Box::new(ReqwestTransport { client }))
    }

    pub fn with_transport(
        base_url: impl Into<String>,
        api_key: Option<String>,
        transport: Box<dyn Transport>,
    ) -> Self {
        HttpBackend {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            api_key,
            transport,
            max_retries: 3,
            backoff: Duration::from_millis(250),
        }
    }

    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    fn headers(&self) -> Vec<(String, String)> {
        let mut headers = vec![("content-type".to_string(), "application/json".to_string())];
        if let Some(key) = &self.api_key {
            headers.push(("authorization".to_string(), format!("Bearer {key}")));
        }
        headers
    }
}

impl ChatBackend for HttpBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, BackendError> {
        check_request(request)?;
        let url = format!("{}/chat/completions", self.base_url);
        let payload = serde_json::to_value(WirePayload::from_request(request))
            .expect("wire payload serialization");
        let headers = self.headers();

        // Retry transport failures only; HTTP error statuses are final.
        let mut attempt = 0u32;
        let response = loop {
            attempt += 1;
            match self.transport.post_json(&url, &headers, &payload) {
                Ok(response) => break response,
                Err(message) => {
                    if attempt > self.max_retries {
                        return Err(BackendError::Transport {
                            attempts: attempt,
                            message,
                        });
                    }
                    thread::sleep(self.backoff * 2u32.pow(attempt - 1));
                }
            }
        };

        if !(200..300).contains(&response.status) {
            return Err(BackendError::Http {
                status: response.status,
                body: response.body,
            });
        }

        let body: CompletionBody = serde_json::from_str(&response.body)
            .map_err(|e| BackendError::MalformedResponse(e.to_string()))?;
        let text = body
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| BackendError::MalformedResponse("no choices in response".into()))?;

        Ok(ChatResponse {
            text,
            backend_id: self.id().to_string(),
            fingerprint: request.fingerprint(),
        })
    }

    fn id(&self) -> &str {
        "http"
    }
}

#[cfg(test)]
mod tests {
    use std::sync::atomic::{AtomicU32, Ordering};
    use std::sync::{Arc, Mutex};

    use super::super::{default_params, StageTag};
    use super::*;

    /// Scripted transport: pops canned results, counting calls.
    pub(crate) struct StubTransport {
        pub calls: AtomicU32,
        pub results: Mutex<Vec<Result<(u16, String), String>>>,
        pub seen_bodies: Mutex<Vec<serde_json::Value>>,
    }

    impl StubTransport {
        pub(crate) fn new(results: Vec<Result<(u16, String), String>>) -> Arc<Self> {
            Arc::new(StubTransport {
                calls: AtomicU32::new(0),
                results: Mutex::new(results),
                seen_bodies: Mutex::new(Vec::new()),
            })
        }
    }

    impl Transport for Arc<StubTransport> {
        fn post_json(
            &self,
            _url: &str,
            _headers: &[(String, String)],
            body: &serde_json::Value,
        ) -> Result<TransportResponse, String> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.seen_bodies.lock().unwrap().push(body.clone());
            let mut results = self.results.lock().unwrap();
            if results.is_empty() {
                return Err("stub exhausted".into());
            }
            results
                .remove(0)
                .map(|(status, body)| TransportResponse { status, body })
        }
    }

    fn ok_body(text: &str) -> String {
        serde_json::json!({"choices": [{"message": {"role": "assistant", "content": text}}]})
            .to_string()
    }

    fn request() -> ChatRequest {
        ChatRequest::new("hello", default_params("test-model"), StageTag::CqGen)
    }

    #[test]
    fn forwards_params_verbatim_in_wire_payload() {
        let stub = StubTransport::new(vec![Ok((200, ok_body("hi")))]);
        let backend =
            HttpBackend::with_transport("http://localhost:9/v1", None, Box::new(stub.clone()));
        let response = backend.complete(&request()).unwrap();
        assert_eq!(response.text, "hi");

        let bodies = stub.seen_bodies.lock().unwrap();
        assert_eq!(bodies.len(), 1);
        assert_eq!(bodies[0]["temperature"].as_f64().unwrap(), 1e-5);
        assert_eq!(bodies[0]["max_tokens"].as_u64().unwrap(), 25_000);
        assert_eq!(bodies[0]["model"], "test-model");
        assert_eq!(bodies[0]["messages"][0]["role"], "user");
        assert_eq!(bodies[0]["messages"][0]["content"], "hello");
    }

    #[test]
    fn wire_payload_round_trips() {
        let mut req = request();
        req.system_text = Some("be brief".into());
        let payload = WirePayload::from_request(&req);
        let json = serde_json::to_string(&payload).unwrap();
        let back: WirePayload = serde_json::from_str(&json).unwrap();
        assert_eq!(back, payload);
        assert_eq!(back.messages.len(), 2);
        assert_eq!(back.messages[0].role, "system");
    }

    #[test]
    fn empty_user_text_fails_without_network() {
        let stub = StubTransport::new(vec![Ok((200, ok_body("hi")))]);
        let backend =
            HttpBackend::with_transport("http://localhost:9", None, Box::new(stub.clone()));
        let mut req = request();
        req.user_text = String::new();
        let err = backend.complete(&req).unwrap_err();
        assert!(matches!(err, BackendError::EmptyUserText));
        assert_eq!(stub.calls.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn retries_transport_errors_then_succeeds() {
        let stub = StubTransport::new(vec![
            Err("connection refused".into()),
            Err("connection refused".into()),
            Ok((200, ok_body("eventually"))),
        ]);
        let backend =
            HttpBackend::with_transport("http://localhost:9", None, Box::new(stub.clone()))
                .with_backoff(Duration::from_millis(1));
        let response = backend.complete(&request()).unwrap();
        assert_eq!(response.text, "eventually");
        assert_eq!(stub.calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn gives_up_after_three_retries() {
        let stub = StubTransport::new(vec![
            Err("down".into()),
            Err("down".into()),
            Err("down".into()),
            Err("down".into()),
            Ok((200, ok_body("never reached"))),
        ]);
        let backend =
            HttpBackend::with_transport("http://localhost:9", None, Box::new(stub.clone()))
                .with_backoff(Duration::from_millis(1));
        let err = backend.complete(&request()).unwrap_err();
        match err {
            BackendError::Transport { attempts, .. } => assert_eq!(attempts, 4),
            other => panic!("expected Transport, got {other:?}"),
        }
        assert_eq!(stub.calls.load(Ordering::SeqCst), 4);
    }

    #[test]
    fn http_4xx_is_not_retried() {
        let stub = StubTransport::new(vec![
            Ok((429, "rate limited".into())),
            Ok((200, ok_body("never reached"))),
        ]);
        let backend =
            HttpBackend::with_transport("http://localhost:9", None, Box::new(stub.clone()));
        let err = backend.complete(&request()).unwrap_err();
        match err {
            BackendError::Http { status, .. } => assert_eq!(status, 429),
            other => panic!("expected Http, got {other:?}"),
        }
        assert_eq!(stub.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn response_text_is_verbatim_untrimmed() {
        let stub = StubTransport::new(vec![Ok((200, ok_body("  spaced out \n")))]);
        let backend = HttpBackend::with_transport("http://localhost:9", None, Box::new(stub));
        let response = backend.complete(&request()).unwrap();
        assert_eq!(response.text, "  spaced out \n");
    }

    #[test]
    fn api_key_becomes_bearer_header() {
        struct HeaderCheck;
        impl Transport for HeaderCheck {
            fn post_json(
                &self,
                _url: &str,
                headers: &[(String, String)],
                _body: &serde_json::Value,
            ) -> Result<TransportResponse, String> {
                let auth = headers.iter().find(|(name, _)| name == "authorization");
                assert_eq!(auth.map(|(_, v)| v.as_str()), Some("Bearer sk-secret"));
                Ok(TransportResponse {
                    status: 200,
                    body: serde_json::json!({"choices": [{"message": {"content": "ok"}}]})
                        .to_string(),
                })
            }
        }
        let backend = HttpBackend::with_transport(
            "http://localhost:9",
            Some("sk-secret".into()),
            Box::new(HeaderCheck),
        );
        backend.complete(&request()).unwrap();
    }
}
