#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use kgagent_service::config::ServiceConfig;
use kgagent_service::server::{router, AppState};
use serde_json::{json, Value};

pub fn core_fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

pub fn service_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

/// Rules that answer every phone question with one script, so the test does
/// not depend on which example retrieval ranks first.
pub fn phone_rules(delay_ms: u64) -> Value {
    json!({"rules": [
        {"tag": "decision", "contains": ["weather"], "response": "off_topic"},
        {"tag": "decision", "contains": [], "response": "answerable"},
        {"tag": "anaphora", "contains": [], "response": "-"},
        {"tag": "schema_link", "contains": [], "response": "company"},
        {"tag": "gremlin_gen", "contains": [], "delay_ms": delay_ms,
         "response": "```\ng.V().has('company','name','[COMPANY]').values('phone')\n```"},
        {"tag": "summarize", "contains": [], "response": "Summary."}
    ]})
}

pub struct Setup {
    pub nodes: PathBuf,
    pub edges: PathBuf,
    pub schema: PathBuf,
    pub rules: Option<Value>,
    pub deadline_ms: u64,
}

impl Setup {
    pub fn fixture() -> Self {
        let d = core_fixtures();
        Setup {
            nodes: d.join("nodes.jsonl"),
            edges: d.join("edges.jsonl"),
            schema: d.join("schema.json"),
            rules: None,
            deadline_ms: 30_000,
        }
    }

    pub fn ambiguous() -> Self {
        let d = core_fixtures();
        Setup {
            nodes: d.join("ambiguous/nodes.jsonl"),
            edges: d.join("ambiguous/edges.jsonl"),
            rules: Some(phone_rules(0)),
            ..Self::fixture()
        }
    }

    /// Writes `config.toml` (and a rules file if custom rules are set) into
    /// `dir` and returns the config path.
    pub fn write(&self, dir: &Path) -> PathBuf {
        let d = core_fixtures();
        let rules = match &self.rules {
            Some(r) => {
                let p = dir.join("rules.json");
                std::fs::write(&p, serde_json::to_string_pretty(r).unwrap()).unwrap();
                p
            }
            None => d.join("mock_rules.json"),
        };
        let text = format!(
            r#"listen = "127.0.0.1:0"
deadline_ms = {deadline}
ui_dir = {ui:?}

[graph]
schema = {schema:?}
nodes = {nodes:?}
edges = {edges:?}

[store]
pairs = {pairs:?}
lexicon = {lexicon:?}

[backend]
kind = "mock"
rules = {rules:?}
"#,
            deadline = self.deadline_ms,
            ui = service_dir().join("ui"),
            schema = self.schema,
            nodes = self.nodes,
            edges = self.edges,
            pairs = d.join("seed_pairs.jsonl"),
            lexicon = d.join("lexical_map.toml"),
            rules = rules,
        );
        let path = dir.join("config.toml");
        std::fs::write(&path, text).unwrap();
        path
    }
}

pub struct Server {
    pub base: String,
    pub state: Arc<AppState>,
}

/// Serves on an ephemeral port. The snapshot is loaded first unless `load`
/// is false.
pub async fn start(config: &Path, load: bool) -> Server {
    let cfg = ServiceConfig::load(config).unwrap();
    let state = AppState::new(cfg);
    if load {
        state.load().await.unwrap();
    }
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr: SocketAddr = listener.local_addr().unwrap();
    let app = router(state.clone());
    tokio::spawn(async move {
        axum::serve(listener, app).await.unwrap();
    });
    Server {
        base: format!("http://{addr}"),
        state,
    }
}

impl Server {
    pub async fn post(&self, path: &str, body: Value) -> (u16, Value) {
        let r = reqwest::Client::new()
            .post(format!("{}{path}", self.base))
            .json(&body)
            .send()
            .await
            .unwrap();
        split(r).await
    }

    pub async fn post_raw(&self, path: &str, body: Vec<u8>) -> (u16, Value) {
        let r = reqwest::Client::new()
            .post(format!("{}{path}", self.base))
            .header("content-type", "application/json")
            .body(body)
            .send()
            .await
            .unwrap();
        split(r).await
    }

    pub async fn get(&self, path: &str) -> (u16, Value) {
        split(reqwest::get(format!("{}{path}", self.base)).await.unwrap()).await
    }

    pub async fn session(&self) -> String {
        let (code, body) = self.post("/sessions", json!({})).await;
        assert_eq!(code, 201, "{body}");
        body["session_id"].as_str().unwrap().to_string()
    }
}

async fn split(r: reqwest::Response) -> (u16, Value) {
    let code = r.status().as_u16();
    let text = r.text().await.unwrap();
    let body = serde_json::from_str(&text).unwrap_or(Value::String(text));
    (code, body)
}
