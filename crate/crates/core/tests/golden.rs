mod common;

use std::time::Instant;

use kgagent_core::gremlin::{self, ExecutionLimits};

#[derive(serde::Deserialize)]
struct Golden {
    name: String,
    script: String,
    expected: serde_json::Value,
}

#[test]
fn appendix_scripts_run_on_fixture_graph() {
    let graph = common::graph();
    let text = std::fs::read_to_string(common::fixtures().join("golden/appendix.jsonl")).unwrap();
    let cases: Vec<Golden> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(cases.len(), 8);
    let started = Instant::now();
    for c in &cases {
        let t = gremlin::parse(&c.script).unwrap_or_else(|e| panic!("{}: {e}", c.name));
        let issues = gremlin::validate(&t, graph.schema());
        assert!(issues.is_empty(), "{}: {issues:?}", c.name);
        let rs = gremlin::execute(&t, &graph, ExecutionLimits::default()).unwrap();
        assert_eq!(serde_json::to_value(rs.to_json()).unwrap(), c.expected, "{}", c.name);
    }
    assert!(started.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn every_seed_and_gold_script_validates_and_returns_rows() {
    let graph = common::graph();
    let d = common::fixtures();
    let mut scripts = Vec::new();
    for file in ["seed_pairs.jsonl", "dataset.jsonl"] {
        for l in std::fs::read_to_string(d.join(file)).unwrap().lines() {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            let s = v.get("script").or_else(|| v.get("gold_script")).unwrap();
            scripts.push(s.as_str().unwrap().to_string());
        }
    }
    assert_eq!(scripts.len(), 69);
    for s in scripts {
        let t = gremlin::parse(&s).unwrap();
        assert!(gremlin::validate(&t, graph.schema()).is_empty(), "{s}");
        let rs = gremlin::execute(&t, &graph, ExecutionLimits::default()).unwrap();
        assert!(!rs.is_empty(), "no rows: {s}");
    }
}
