//! The offline loop: seed synthesis, regeneration of failed queries into a
//! review file, and import of approved items into the example store.

mod graph2nl;

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use graph2nl::{default_templates, synthesize_pairs, Graph2NlTemplate, ENTITY_HOLE, PROPERTY_HOLE};

use crate::agent::{Agent, PipelineConfig};
use crate::eval::{EvalCase, FailureRecord};
use crate::graph::PropertyGraph;
use crate::gremlin::{self, IssueKind};
use crate::store::{ExamplePair, ExampleStore, Provenance, StoreError};

#[derive(Debug, Error)]
pub enum OfflineError {
    #[error("template {intent} is invalid: {message}")]
    InvalidTemplate { intent: String, message: String },
    #[error("template exhausted: {0}")]
    TemplateExhausted(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("{file} line {line}: {message}")]
    Parse { file: String, line: usize, message: String },
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReviewStatus {
    Pending,
    Approved,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewItem {
    pub id: String,
    pub question: String,
    #[serde(default)]
    pub failed_script: Option<String>,
    pub failure_kind: String,
    #[serde(default)]
    pub regenerated_script: Option<String>,
    /// Set when the regenerated script is itself rejected.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regeneration_failure: Option<String>,
    /// Backend error during regeneration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub status: ReviewStatus,
    #[serde(default)]
    pub reviewer_note: String,
}

impl ReviewItem {
    /// Id of the example pair an approved item becomes.
    pub fn pair_id(&self) -> String {
        format!("fb-{}", self.id)
    }
}

pub fn load_review_items(path: &Path) -> Result<Vec<ReviewItem>, OfflineError> {
    let text = fs::read_to_string(path).map_err(|e| OfflineError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| OfflineError::Parse {
                file: path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn write_review_items(path: &Path, items: &[ReviewItem]) -> std::io::Result<()> {
    let mut out = String::new();
    for i in items {
        out.push_str(&serde_json::to_string(i).expect("review item serializes"));
        out.push('\n');
    }
    fs::write(path, out)
}

fn feedback_text(f: &FailureRecord) -> String {
    let mut s = format!("A previous attempt failed ({}).", f.failure.kind);
    if let Some(script) = &f.record.generated_script {
        s.push_str(&format!("\nPrevious script: {script}"));
    }
    if let Some(i) = &f.failure.issue {
        s.push_str(&format!("\nProblem: {i}"));
    } else if let Some(e) = &f.record.error {
        s.push_str(&format!("\nProblem: {e}"));
    }
    s
}

/// Re-runs each failure with the failure described in the prompt and two
/// more examples than the failed run used. Items are always pending.
pub fn regenerate_failures(agent: &Agent, failures: &[FailureRecord], base: &PipelineConfig) -> Vec<ReviewItem> {
    failures
        .par_iter()
        .map(|f| {
            let cfg = PipelineConfig {
                strategy: f.record.strategy,
                k: f.record.k + 2,
                ..base.clone()
            };
            let turn = agent.answer_with_feedback(&f.question, &cfg, &feedback_text(f));
            let mut item = ReviewItem {
                id: format!("{}-{}-k{}", f.record.case_id, f.record.strategy, f.record.k),
                question: f.question.clone(),
                failed_script: f.record.generated_script.clone(),
                failure_kind: f.failure.kind.clone(),
                regenerated_script: None,
                regeneration_failure: None,
                error: None,
                status: ReviewStatus::Pending,
                reviewer_note: String::new(),
            };
            match (&turn.final_script, turn.script_attempts.last()) {
                (Some(s), _) => item.regenerated_script = Some(s.clone()),
                (None, Some(last)) => {
                    item.regenerated_script = Some(last.script.clone()).filter(|s| !s.is_empty());
                    item.regeneration_failure = last.issues.first().map(|i| match i.kind {
                        IssueKind::Syntax => "parse".to_string(),
                        k => format!("{k:?}"),
                    });
                }
                (None, None) => item.error = turn.error.clone(),
            }
            item
        })
        .collect()
}

#[derive(Debug, Default, Clone, PartialEq, Serialize)]
pub struct ImportReport {
    pub imported: Vec<String>,
    /// Approved items already present in the store.
    pub already_present: Vec<String>,
    /// Approved items whose script does not validate.
    pub rejected: Vec<(String, String)>,
    /// Pending and rejected items.
    pub skipped: usize,
}

/// Adds approved items as feedback pairs and returns the new store. The
/// input store is untouched.
pub fn import_approved(
    items: &[ReviewItem],
    store: &ExampleStore,
    graph: &PropertyGraph,
) -> Result<(ExampleStore, ImportReport), OfflineError> {
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let mut report = ImportReport::default();
    let mut fresh = Vec::new();
    let mut seen = BTreeSet::new();
    for item in items {
        if item.status != ReviewStatus::Approved {
            report.skipped += 1;
            continue;
        }
        let id = item.pair_id();
        if store.pair(&id).is_some() || !seen.insert(id.clone()) {
            report.already_present.push(id);
            continue;
        }
        let Some(script) = &item.regenerated_script else {
            report.rejected.push((item.id.clone(), "no regenerated script".into()));
            continue;
        };
        match gremlin::check_script(script, graph.schema()) {
            Ok(t) => {
                fresh.push(ExamplePair {
                    id: id.clone(),
                    question: item.question.clone(),
                    script: t.pretty(),
                    provenance: Provenance::Feedback,
                    created_at: now,
                });
                report.imported.push(id);
            }
            Err(issues) => report.rejected.push((
                item.id.clone(),
                issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "),
            )),
        }
    }
    let next = store.with_pairs(fresh, graph)?;
    Ok((next, report))
}

/// Synthetic evaluation cases whose gold scripts come from the templates.
pub fn synthetic_cases(
    graph: &PropertyGraph,
    templates: &[Graph2NlTemplate],
    n: usize,
    seed: u64,
) -> Result<Vec<EvalCase>, OfflineError> {
    Ok(synthesize_pairs(graph, templates, n, seed)?
        .into_iter()
        .enumerate()
        .map(|(i, p)| EvalCase {
            id: format!("syn-{:03}", i + 1),
            question: p.question,
            gold_script: Some(p.script),
            human_score: None,
        })
        .collect())
}
