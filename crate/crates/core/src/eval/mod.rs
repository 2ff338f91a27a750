//! Dataset loading, difficulty profiling, scoring and ablation runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{Agent, AgentTurn, PipelineConfig};
use crate::gremlin::{self, complexity, ExecutionLimits, IssueKind, ResultSet, Tier, ValidationIssue};
use crate::graph::PropertyGraph;
use crate::store::MatchStrategy;
use crate::value::Value;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("{file} line {line}: {message}")]
    Parse { file: String, line: usize, message: String },
    #[error("case {0} has no gold script")]
    MissingGold(String),
    #[error("case {0} has no human score")]
    MissingHumanScore(String),
    #[error("case {id}: gold script is invalid: {message}")]
    InvalidGold { id: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalCase {
    pub id: String,
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_script: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub human_score: Option<f64>,
}

/// Reads a JSON-lines dataset. Gold scripts must parse.
pub fn load_dataset(path: &Path) -> Result<Vec<EvalCase>, EvalError> {
    let text = fs::read_to_string(path).map_err(|e| EvalError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_dataset(&text, &path.display().to_string())
}

pub fn parse_dataset(text: &str, file: &str) -> Result<Vec<EvalCase>, EvalError> {
    let mut cases = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let c: EvalCase = serde_json::from_str(line).map_err(|e| EvalError::Parse {
            file: file.to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        if let Some(g) = &c.gold_script {
            gremlin::parse(g).map_err(|e| EvalError::InvalidGold {
                id: c.id.clone(),
                message: e.to_string(),
            })?;
        }
        if let Some(h) = c.human_score {
            if ![0.0, 0.5, 1.0].contains(&h) {
                return Err(EvalError::Parse {
                    file: file.to_string(),
                    line: i + 1,
                    message: format!("human_score must be 0, 0.5 or 1, got {h}"),
                });
            }
        }
        cases.push(c);
    }
    Ok(cases)
}

/// Tier counts over the gold scripts; every tier is present.
pub fn profile_difficulty(cases: &[EvalCase]) -> Result<BTreeMap<Tier, usize>, EvalError> {
    let mut hist: BTreeMap<Tier, usize> = [(Tier::Simple, 0), (Tier::Moderate, 0), (Tier::Complex, 0)].into();
    for c in cases {
        let g = c.gold_script.as_ref().ok_or_else(|| EvalError::MissingGold(c.id.clone()))?;
        let t = gremlin::parse(g).map_err(|e| EvalError::InvalidGold {
            id: c.id.clone(),
            message: e.to_string(),
        })?;
        *hist.entry(complexity(&t).tier).or_default() += 1;
    }
    Ok(hist)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub case_id: String,
    pub generated_script: Option<String>,
    /// The script ran to completion.
    pub executed: bool,
    /// The script parsed and validated.
    pub syntax_ok: bool,
    pub result: Option<ResultSet>,
    pub gold_result: Option<ResultSet>,
    pub auto_score: f64,
    pub strategy: MatchStrategy,
    pub k: usize,
    pub backend: String,
    pub latency_ms: f64,
    /// Issues of the last rejected attempt.
    #[serde(default)]
    pub issues: Vec<ValidationIssue>,
    #[serde(default)]
    pub error: Option<String>,
    #[serde(default)]
    pub attempts: usize,
}

impl EvalRecord {
    pub fn from_turn(case_id: &str, turn: &AgentTurn, backend: &str, latency_ms: f64) -> Self {
        let generated = turn.final_script.clone().or_else(|| {
            turn.script_attempts
                .last()
                .map(|a| a.script.clone())
                .filter(|s| !s.is_empty())
        });
        let issues = if turn.final_script.is_some() {
            Vec::new()
        } else {
            turn.script_attempts.last().map(|a| a.issues.clone()).unwrap_or_default()
        };
        EvalRecord {
            case_id: case_id.to_string(),
            generated_script: generated,
            executed: turn.result.is_some(),
            syntax_ok: turn.final_script.is_some(),
            result: turn.result.clone(),
            gold_result: None,
            auto_score: 0.0,
            strategy: turn.strategy,
            k: turn.k,
            backend: backend.to_string(),
            latency_ms,
            issues,
            error: turn.error.clone(),
            attempts: turn.script_attempts.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorePolicy {
    /// Result comparison against the gold script's result; a proxy for
    /// expert judgement.
    Auto,
    /// Expert scores from the dataset.
    Human,
}

/// Execution-correctness score for one record.
///
/// `Auto`: 0 when the script did not run; 1 when the result multiset equals
/// the gold multiset; 0.5 when the multisets share a row, or when both have
/// the same number of rows and the mean per-row overlap is at least 50%;
/// otherwise 0.
pub fn score_case(record: &EvalRecord, case: &EvalCase, policy: ScorePolicy) -> Result<f64, EvalError> {
    match policy {
        ScorePolicy::Human => case.human_score.ok_or_else(|| EvalError::MissingHumanScore(case.id.clone())),
        ScorePolicy::Auto => {
            let gold = record
                .gold_result
                .as_ref()
                .ok_or_else(|| EvalError::MissingGold(case.id.clone()))?;
            let Some(got) = record.result.as_ref().filter(|_| record.executed) else {
                return Ok(0.0);
            };
            Ok(auto_score(&got.rows, &gold.rows))
        }
    }
}

pub fn auto_score(got: &[Value], gold: &[Value]) -> f64 {
    let mut a = got.to_vec();
    let mut b = gold.to_vec();
    a.sort();
    b.sort();
    if a == b {
        return 1.0;
    }
    if multiset_overlap(&a, &b) > 0 {
        return 0.5;
    }
    if !got.is_empty() && got.len() == gold.len() {
        let mean = got.iter().zip(gold).map(|(x, y)| row_overlap(x, y)).sum::<f64>() / got.len() as f64;
        if mean >= 0.5 {
            return 0.5;
        }
    }
    0.0
}

fn multiset_overlap(a: &[Value], b: &[Value]) -> usize {
    // both sorted
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
        }
    }
    n
}

/// Share of the gold row found in `got`: map entries, list items, or plain
/// equality for scalars.
fn row_overlap(got: &Value, gold: &Value) -> f64 {
    match (got, gold) {
        (Value::Map(g), Value::Map(w)) if !w.is_empty() => {
            w.iter().filter(|(k, v)| g.get(*k) == Some(*v)).count() as f64 / w.len() as f64
        }
        (Value::List(g), Value::List(w)) if !w.is_empty() => {
            let mut a = g.clone();
            let mut b = w.clone();
            a.sort();
            b.sort();
            multiset_overlap(&a, &b) as f64 / b.len() as f64
        }
        (x, y) => f64::from(u8::from(x == y)),
    }
}

/// 1 − (1/N)·Σ executed.
pub fn syntax_error_rate(records: &[EvalRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    let ok = records.iter().filter(|r| r.executed).count();
    1.0 - ok as f64 / records.len() as f64
}

pub fn execution_correctness(scores: &[f64]) -> f64 {
    if scores.is_empty() {
        return 0.0;
    }
    scores.iter().sum::<f64>() / scores.len() as f64
}

/// Percentage with two decimals, as printed in reports.
pub fn pct(ratio: f64) -> String {
    format!("{:.2}", ratio * 100.0)
}

/// One ablation cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    /// Strategy name, or `ZeroShot` when no examples are used.
    pub strategy: String,
    pub k: usize,
    pub backend: String,
    pub n: usize,
    pub syntax_error_rate: f64,
    pub execution_correctness: f64,
}

impl CellReport {
    pub fn label(strategy: MatchStrategy, k: usize) -> String {
        if k == 0 {
            "ZeroShot".to_string()
        } else {
            strategy.to_string()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n: usize,
    pub syntax_error_rate: f64,
    pub execution_correctness: f64,
    pub scoring: ScorePolicy,
    pub difficulty_histogram: BTreeMap<Tier, usize>,
    pub cells: Vec<CellReport>,
}

impl MetricsReport {
    pub fn cell(&self, strategy: &str, k: usize) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.strategy == strategy && c.k == k)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("strategy,k,backend,n,syntax_error_rate,execution_correctness\n");
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                c.strategy,
                c.k,
                c.backend,
                c.n,
                pct(c.syntax_error_rate),
                pct(c.execution_correctness)
            );
        }
        out
    }

    /// Writes `report.json`, `report.csv` and `difficulty.json` into `dir`.
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        let mut json = serde_json::to_string_pretty(self).expect("report serializes");
        json.push('\n');
        fs::write(dir.join("report.json"), json)?;
        fs::write(dir.join("report.csv"), self.to_csv())?;
        let mut hist = serde_json::to_string_pretty(&self.difficulty_histogram).expect("histogram serializes");
        hist.push('\n');
        fs::write(dir.join("difficulty.json"), hist)
    }
}

/// Executes every gold script once; missing or failing gold gives `None`.
pub fn gold_results(cases: &[EvalCase], graph: &PropertyGraph, limits: ExecutionLimits) -> Vec<Option<ResultSet>> {
    cases
        .iter()
        .map(|c| {
            let t = gremlin::parse(c.gold_script.as_deref()?).ok()?;
            match gremlin::execute(&t, graph, limits) {
                Ok(rs) => Some(rs),
                Err(e) => {
                    log::warn!("gold script of {} failed: {e}", c.id);
                    None
                }
            }
        })
        .collect()
}

/// Runs every case under every config in single-shot mode. Cases run in
/// parallel; records come back in (config, case) order so reports are
/// deterministic.
pub fn run_ablation(
    agent: &Agent,
    cases: &[EvalCase],
    configs: &[PipelineConfig],
    policy: ScorePolicy,
) -> Result<(MetricsReport, Vec<EvalRecord>), EvalError> {
    let backend = agent.backend().id();
    let gold = match policy {
        ScorePolicy::Auto => {
            let limits = configs.first().map(|c| c.limits).unwrap_or_default();
            gold_results(cases, agent.graph(), limits)
        }
        ScorePolicy::Human => vec![None; cases.len()],
    };
    let mut cells = Vec::new();
    let mut all = Vec::new();
    for cfg in configs {
        let mut records: Vec<EvalRecord> = cases
            .par_iter()
            .zip(gold.par_iter())
            .map(|(case, gold)| {
                let started = Instant::now();
                let turn = agent.answer_once(&case.question, cfg);
                let mut r = EvalRecord::from_turn(&case.id, &turn, &backend, started.elapsed().as_secs_f64() * 1000.0);
                r.gold_result = gold.clone();
                r
            })
            .collect();
        let mut scores = Vec::with_capacity(records.len());
        for (r, case) in records.iter_mut().zip(cases) {
            let s = score_case(r, case, policy)?;
            r.auto_score = s;
            scores.push(s);
        }
        cells.push(CellReport {
            strategy: CellReport::label(cfg.strategy, cfg.k),
            k: cfg.k,
            backend: backend.clone(),
            n: records.len(),
            syntax_error_rate: syntax_error_rate(&records),
            execution_correctness: execution_correctness(&scores),
        });
        all.extend(records);
    }
    let scores: Vec<f64> = all.iter().map(|r| r.auto_score).collect();
    let difficulty_histogram = profile_difficulty(cases).unwrap_or_default();
    Ok((
        MetricsReport {
            n: all.len(),
            syntax_error_rate: syntax_error_rate(&all),
            execution_correctness: execution_correctness(&scores),
            scoring: policy,
            difficulty_histogram,
            cells,
        },
        all,
    ))
}

/// The standard grid: every strategy at k = 3 and 5, then zero-shot.
pub fn ablation_grid(base: &PipelineConfig) -> Vec<PipelineConfig> {
    let mut out = Vec::new();
    for s in MatchStrategy::ALL {
        for k in [3, 5] {
            out.push(PipelineConfig {
                strategy: s,
                k,
                ..base.clone()
            });
        }
    }
    out.push(PipelineConfig { k: 0, ..base.clone() });
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureKind {
    /// `parse`, a validator issue kind, `runtime`, `empty-result`,
    /// `wrong-result` or `backend`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub issue: Option<ValidationIssue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    #[serde(flatten)]
    pub record: EvalRecord,
    pub question: String,
    pub failure: FailureKind,
}

pub fn classify_failure(r: &EvalRecord) -> Option<FailureKind> {
    if !r.syntax_ok {
        if let Some(i) = r.issues.first() {
            let kind = if i.kind == IssueKind::Syntax {
                "parse".to_string()
            } else {
                format!("{:?}", i.kind)
            };
            return Some(FailureKind {
                kind,
                offset: i.offset,
                issue: Some(i.clone()),
            });
        }
        return Some(FailureKind {
            kind: "backend".into(),
            offset: None,
            issue: None,
        });
    }
    let kind = if !r.executed {
        "runtime"
    } else if r.auto_score > 0.0 {
        return None;
    } else if r.result.as_ref().is_some_and(ResultSet::is_empty) {
        "empty-result"
    } else {
        "wrong-result"
    };
    Some(FailureKind {
        kind: kind.into(),
        offset: None,
        issue: None,
    })
}

/// Records with a rejected script or a zero score, annotated with the
/// failure kind.
pub fn collect_failures(records: &[EvalRecord], cases: &[EvalCase]) -> Vec<FailureRecord> {
    let questions: BTreeMap<&str, &str> = cases.iter().map(|c| (c.id.as_str(), c.question.as_str())).collect();
    records
        .iter()
        .filter_map(|r| {
            let failure = classify_failure(r)?;
            Some(FailureRecord {
                question: questions.get(r.case_id.as_str()).copied().unwrap_or_default().to_string(),
                record: r.clone(),
                failure,
            })
        })
        .collect()
}

/// Writes failures as JSON lines; an all-pass run gives an empty file.
pub fn export_failures(records: &[EvalRecord], cases: &[EvalCase], path: &Path) -> std::io::Result<usize> {
    let failures = collect_failures(records, cases);
    let mut out = String::new();
    for f in &failures {
        out.push_str(&serde_json::to_string(f).expect("failure serializes"));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(failures.len())
}

pub fn load_failures(path: &Path) -> Result<Vec<FailureRecord>, EvalError> {
    let text = fs::read_to_string(path).map_err(|e| EvalError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| EvalError::Parse {
                file: path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Reads `case_id,score` lines (header optional) and sets `human_score`.
pub fn apply_human_scores(cases: &mut [EvalCase], csv: &str) -> Result<usize, EvalError> {
    let mut n = 0;
    for (i, line) in csv.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with("case_id")) {
            continue;
        }
        let bad = |m: &str| EvalError::Parse {
            file: "scores".into(),
            line: i + 1,
            message: m.to_string(),
        };
        let (id, score) = line.split_once(',').ok_or_else(|| bad("expected case_id,score"))?;
        let score: f64 = score.trim().parse().map_err(|_| bad("score is not a number"))?;
        if ![0.0, 0.5, 1.0].contains(&score) {
            return Err(bad("score must be 0, 0.5 or 1"));
        }
        if let Some(c) = cases.iter_mut().find(|c| c.id == id.trim()) {
            c.human_score = Some(score);
            n += 1;
        }
    }
    Ok(n)
}
