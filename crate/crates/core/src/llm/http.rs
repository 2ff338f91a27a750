//! OpenAI-compatible HTTP backends. Blocking; callers on an async runtime
//! must run these on a blocking thread.

use std::time::{Duration, Instant};

use serde_json::{json, Value as Json};

use super::{Backend, LlmError, LlmRequest, LlmResponse};
use crate::store::{EmbedError, Embedder, EmbeddingVector};

fn client(timeout: Duration) -> Result<reqwest::blocking::Client, String> {
    reqwest::blocking::Client::builder()
        .timeout(timeout)
        .build()
        .map_err(|e| e.to_string())
}

fn bearer(var: &Option<String>) -> Option<String> {
    var.as_ref().and_then(|v| std::env::var(v).ok()).filter(|t| !t.is_empty())
}

/// Chat-completions client. The API token is read from the environment
/// variable named by `token_env` at call time.
#[derive(Debug, Clone)]
pub struct HttpChat {
    pub endpoint: String,
    pub model: String,
    pub token_env: Option<String>,
    pub timeout: Duration,
}

impl HttpChat {
    pub fn new(endpoint: &str, model: &str) -> Self {
        HttpChat {
            endpoint: endpoint.trim_end_matches('/').to_string(),
            model: model.to_string(),
            token_env: None,
            timeout: Duration::from_secs(60),
        }
    }
}

impl Backend for HttpChat {
    fn id(&self) -> String {
        format!("http:{}", self.model)
    }

    fn complete(&self, req: &LlmRequest) -> Result<LlmResponse, LlmError> {
        let started = Instant::now();
        let client = client(self.timeout).map_err(LlmError::BackendUnreachable)?;
        let body = json!({
            "model": self.model,
            "messages": [{"role": "user", "content": req.prompt}],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        });
        let mut rb = client.post(format!("{}/chat/completions", self.endpoint)).json(&body);
        if let Some(t) = bearer(&self.token_env) {
            rb = rb.bearer_auth(t);
        }
        let resp = rb.send().map_err(|e| {
            if e.is_timeout() {
                LlmError::TimedOut(self.timeout.as_millis() as u64)
            } else {
                LlmError::BackendUnreachable(e.to_string())
            }
        })?;
        let status = resp.status();
        if !status.is_success() {
            return Err(LlmError::BackendUnreachable(format!("HTTP {status}")));
        }
        let v: Json = resp.json().map_err(|e| LlmError::BadResponse(e.to_string()))?;
        let text = v
            .pointer("/choices/0/message/content")
            .and_then(Json::as_str)
            .ok_or_else(|| LlmError::BadResponse("no choices[0].message.content".into()))?;
        Ok(LlmResponse {
            text: text.to_string(),
            backend: self.id(),
            latency_ms: started.elapsed().as_secs_f64() * 1000.0,
        })
    }
}

/// Embeddings endpoint client.
#[derive(Debug, Clone)]
pub struct HttpEmbedder {
    pub endpoint: String,
    pub model: String,
    pub token_env: Option<String>,
    pub dims: usize,
    pub timeout: Duration,
    id: String,
}

impl HttpEmbedder {
    pub fn new(endpoint: &str, model: &str, dims: usize) -> Self {
        HttpEmbedder {
            endpoint: endpoint.trim_end_matches('/').to_string(),
            model: model.to_string(),
            token_env: None,
            dims,
            timeout: Duration::from_secs(30),
            id: format!("http:{model}"),
        }
    }
}

impl Embedder for HttpEmbedder {
    fn id(&self) -> &str {
        &self.id
    }

    fn dims(&self) -> usize {
        self.dims
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector<f64>, EmbedError> {
        if text.trim().is_empty() {
            return Err(EmbedError::EmptyText);
        }
        let client = client(self.timeout).map_err(EmbedError::Backend)?;
        let mut rb = client
            .post(format!("{}/embeddings", self.endpoint))
            .json(&json!({"model": self.model, "input": text}));
        if let Some(t) = bearer(&self.token_env) {
            rb = rb.bearer_auth(t);
        }
        let resp = rb.send().map_err(|e| EmbedError::Backend(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(EmbedError::Backend(format!("HTTP {}", resp.status())));
        }
        let v: Json = resp.json().map_err(|e| EmbedError::Backend(e.to_string()))?;
        let raw: Vec<f64> = v
            .pointer("/data/0/embedding")
            .and_then(Json::as_array)
            .ok_or_else(|| EmbedError::Backend("no data[0].embedding".into()))?
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| EmbedError::Backend("non-numeric component".into())))
            .collect::<Result<_, _>>()?;
        if raw.len() != self.dims {
            return Err(EmbedError::Dims {
                expected: self.dims,
                got: raw.len(),
            });
        }
        EmbeddingVector::from_raw(raw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unreachable_endpoint() {
        let mut c = HttpChat::new("http://127.0.0.1:9", "m");
        c.timeout = Duration::from_millis(500);
        match c.complete(&LlmRequest::new("decision", "hi".into())) {
            Err(LlmError::BackendUnreachable(_)) | Err(LlmError::TimedOut(_)) => {}
            other => panic!("unexpected {other:?}"),
        }
        let e = HttpEmbedder::new("http://127.0.0.1:9", "m", 8);
        assert!(matches!(e.embed("x"), Err(EmbedError::Backend(_))));
    }
}
