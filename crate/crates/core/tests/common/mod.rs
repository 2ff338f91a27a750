#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use kgagent_core::agent::Agent;
use kgagent_core::bundle::{load_agent, BundlePaths};
use kgagent_core::llm::{Backend, ScriptedMock};
use kgagent_core::PropertyGraph;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn graph() -> PropertyGraph {
    let d = fixtures();
    PropertyGraph::load(d.join("schema.json"), d.join("nodes.jsonl"), d.join("edges.jsonl")).unwrap()
}

pub fn fixture_mock() -> Arc<ScriptedMock> {
    Arc::new(ScriptedMock::load(&fixtures().join("mock_rules.json")).unwrap())
}

pub fn agent_with(backend: Arc<dyn Backend>) -> Agent {
    load_agent(&BundlePaths::in_dir(fixtures()), backend, None).unwrap()
}
