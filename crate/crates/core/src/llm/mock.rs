use std::fs;
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{Backend, LlmError, LlmRequest, LlmResponse};

/// Matches when the tag agrees (if given) and every `contains` needle occurs
/// in the prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockRule {
    #[serde(default)]
    pub tag: Option<String>,
    #[serde(default)]
    pub contains: Vec<String>,
    pub response: String,
    /// Simulated latency before answering.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub delay_ms: u64,
}

fn is_zero(v: &u64) -> bool {
    *v == 0
}

impl MockRule {
    pub fn new(tag: &str, contains: &[&str], response: &str) -> Self {
        MockRule {
            tag: Some(tag.to_string()),
            contains: contains.iter().map(|s| s.to_string()).collect(),
            response: response.to_string(),
            delay_ms: 0,
        }
    }

    fn matches(&self, req: &LlmRequest) -> bool {
        self.tag.as_ref().is_none_or(|t| *t == req.tag)
            && self.contains.iter().all(|c| req.prompt.contains(c.as_str()))
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct RuleFile {
    rules: Vec<MockRule>,
}

/// Deterministic backend answering from an ordered rule table. The first
/// matching rule wins; a prompt no rule matches is an error.
#[derive(Debug, Default)]
pub struct ScriptedMock {
    rules: Vec<MockRule>,
    calls: Mutex<Vec<LlmRequest>>,
}

impl ScriptedMock {
    pub fn new(rules: Vec<MockRule>) -> Self {
        ScriptedMock {
            rules,
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, LlmError> {
        let f: RuleFile = serde_json::from_str(text).map_err(|e| LlmError::Template(format!("mock rules: {e}")))?;
        Ok(Self::new(f.rules))
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let text = fs::read_to_string(path).map_err(|e| LlmError::Template(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn rules(&self) -> &[MockRule] {
        &self.rules
    }

    /// Every request seen so far, in arrival order.
    pub fn calls(&self) -> Vec<LlmRequest> {
        self.calls.lock().unwrap().clone()
    }

    pub fn calls_for(&self, tag: &str) -> Vec<LlmRequest> {
        self.calls().into_iter().filter(|r| r.tag == tag).collect()
    }

    pub fn clear_calls(&self) {
        self.calls.lock().unwrap().clear();
    }
}

impl Backend for ScriptedMock {
    fn id(&self) -> String {
        "scripted-mock".to_string()
    }

    fn complete(&self, req: &LlmRequest) -> Result<LlmResponse, LlmError> {
        let started = Instant::now();
        self.calls.lock().unwrap().push(req.clone());
        let rule = self
            .rules
            .iter()
            .find(|r| r.matches(req))
            .ok_or_else(|| LlmError::UnmatchedPrompt { tag: req.tag.clone() })?;
        if rule.delay_ms > 0 {
            std::thread::sleep(std::time::Duration::from_millis(rule.delay_ms));
        }
        if rule.response.trim().is_empty() {
            return Err(LlmError::BadResponse("empty scripted response".into()));
        }
        Ok(LlmResponse {
            text: rule.response.clone(),
            backend: self.id(),
            latency_ms: started.elapsed().as_secs_f64() * 1000.0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_match_wins_and_unmatched_fails() {
        let m = ScriptedMock::new(vec![
            MockRule::new("gremlin_gen", &["postal"], "```\ng.V().count()\n```"),
            MockRule::new("gremlin_gen", &[], "fallback"),
        ]);
        let r = m.complete(&LlmRequest::new("gremlin_gen", "postal code?".into())).unwrap();
        assert!(r.text.contains("g.V().count()"));
        let r = m.complete(&LlmRequest::new("gremlin_gen", "other".into())).unwrap();
        assert_eq!(r.text, "fallback");
        assert_eq!(
            m.complete(&LlmRequest::new("decision", "x".into())),
            Err(LlmError::UnmatchedPrompt { tag: "decision".into() })
        );
        assert_eq!(m.calls().len(), 3);
        assert_eq!(m.calls_for("decision").len(), 1);
    }

    #[test]
    fn rule_file() {
        let m = ScriptedMock::from_json(r#"{"rules":[{"tag":"summarize","response":"ok"},{"contains":["x"],"response":"any"}]}"#)
            .unwrap();
        assert_eq!(m.rules().len(), 2);
        assert_eq!(m.complete(&LlmRequest::new("other", "x".into())).unwrap().text, "any");
    }
}
