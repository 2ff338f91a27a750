//! Text-generation backends, prompt catalog and script extraction.

mod extract;
mod http;
mod mock;
mod prompts;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use extract::extract_script;
pub use http::{HttpChat, HttpEmbedder};
pub use mock::{MockRule, ScriptedMock};
pub use prompts::{PromptCatalog, PromptTemplate, EMPTY_SLOT, TEMPLATE_NAMES};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LlmError {
    #[error("backend unreachable: {0}")]
    BackendUnreachable(String),
    #[error("no scripted response matches a '{tag}' prompt")]
    UnmatchedPrompt { tag: String },
    #[error("backend timed out after {0} ms")]
    TimedOut(u64),
    #[error("malformed backend response: {0}")]
    BadResponse(String),
    #[error("missing slot '{0}'")]
    MissingSlot(String),
    #[error("unknown template '{0}'")]
    UnknownTemplate(String),
    #[error("template error: {0}")]
    Template(String),
    #[error("no script found in model output")]
    NoScriptFound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmRequest {
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Template name the prompt was rendered from.
    pub tag: String,
}

impl LlmRequest {
    pub fn new(tag: &str, prompt: String) -> Self {
        LlmRequest {
            prompt,
            temperature: 0.0,
            max_tokens: 1024,
            tag: tag.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmResponse {
    pub text: String,
    pub backend: String,
    pub latency_ms: f64,
}

pub trait Backend: Send + Sync {
    fn id(&self) -> String;
    fn complete(&self, req: &LlmRequest) -> Result<LlmResponse, LlmError>;
}
