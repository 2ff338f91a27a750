mod common;

use std::process::Command;

use common::{core_fixtures, Setup};

fn kgagent() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_kgagent"));
    c.env("RUST_LOG", "warn");
    c
}

#[test]
fn score_prints_the_worked_example() {
    let out = kgagent().args(["score", "g.V().out('knows').groupCount().by('name')"]).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["total"], 7);
    assert_eq!(v["tier"], "Moderate");
}

#[test]
fn score_reads_a_file_and_rejects_garbage() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("q.groovy");
    std::fs::write(&f, "g.V().hasLabel('person').values('name')\n").unwrap();
    let out = kgagent().arg("score").arg(&f).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["length_score"], 1);

    let out = kgagent().args(["score", "g.V(.out("]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_exit_codes() {
    let schema = core_fixtures().join("schema.json");
    let ok = kgagent()
        .arg("validate")
        .arg("--schema")
        .arg(&schema)
        .arg("g.V().has('company','name','Acme').in('legalPerson').values('name')")
        .output()
        .unwrap();
    assert!(ok.status.success());
    assert!(ok.stdout.is_empty());
    let bad = kgagent()
        .arg("validate")
        .arg("--schema")
        .arg(&schema)
        .arg("g.V().has('company','nmae','Acme')")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
    let issue: serde_json::Value = serde_json::from_slice(bad.stdout.split(|b| *b == b'\n').next().unwrap()).unwrap();
    assert!(issue["kind"].is_string());
}

#[test]
fn eval_profile_counts_every_case() {
    let out = kgagent()
        .arg("eval")
        .arg("profile")
        .arg("--dataset")
        .arg(core_fixtures().join("dataset.jsonl"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let total: u64 = v.as_object().unwrap().values().map(|n| n.as_u64().unwrap()).sum();
    assert_eq!(total, 30);
}

#[test]
fn offline_loop_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Setup::fixture().write(dir.path());
    let run = |args: &[&str]| {
        let out = kgagent().args(args).arg("--config").arg(&cfg).output().unwrap();
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        out
    };
    let p = |name: &str| dir.path().join(name).display().to_string();

    run(&["analysis", "synthesize", "--n", "12", "--seed", "3", "--out", &p("synth.jsonl")]);
    let synth = std::fs::read_to_string(p("synth.jsonl")).unwrap();
    assert_eq!(synth.lines().count(), 12);

    run(&["eval", "synthesize", "--n", "5", "--out", &p("cases.jsonl")]);
    assert_eq!(std::fs::read_to_string(p("cases.jsonl")).unwrap().lines().count(), 5);

    run(&[
        "eval",
        "run",
        "--dataset",
        &core_fixtures().join("dataset.jsonl").display().to_string(),
        "--out",
        &p("eval"),
    ]);
    let failures = p("eval/failures.jsonl");
    assert!(!std::fs::read_to_string(&failures).unwrap().is_empty());

    run(&["analysis", "regenerate", "--failures", &failures, "--out", &p("review.jsonl")]);
    let review = std::fs::read_to_string(p("review.jsonl")).unwrap();
    let approved: Vec<String> = review
        .lines()
        .map(|l| {
            let mut v: serde_json::Value = serde_json::from_str(l).unwrap();
            assert_eq!(v["status"], "pending");
            if v["regenerated_script"].is_string() && v["regeneration_failure"].is_null() {
                v["status"] = "approved".into();
            }
            v.to_string()
        })
        .collect();
    std::fs::write(p("review.jsonl"), approved.join("\n")).unwrap();

    let out = run(&["analysis", "import", "--review", &p("review.jsonl"), "--out", &p("pairs.jsonl")]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let imported = report["imported"].as_array().unwrap().len();
    assert!(imported > 0, "{report}");
    let seeds = std::fs::read_to_string(core_fixtures().join("seed_pairs.jsonl")).unwrap().lines().count();
    let grown = std::fs::read_to_string(p("pairs.jsonl")).unwrap().lines().count();
    assert_eq!(grown, seeds + imported);
}
