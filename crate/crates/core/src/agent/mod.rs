//! Online question answering. One [`Agent`] is shared by every session;
//! per-conversation state lives in [`SessionState`].

mod entities;
mod respond;
mod substitute;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::graph::{normalize, PropertyGraph};
use crate::gremlin::{self, ExecutionLimits, IssueKind, ResultSet, Traversal, ValidationIssue};
use crate::llm::{extract_script, Backend, LlmError, LlmRequest, PromptCatalog};
use crate::store::{cosine, EmbeddingVector, ExampleStore, MaskedQuery, MatchStrategy, Retrieved, PLACEHOLDER};

pub use entities::{parse_selection, Candidate, ResolvedEntity, MAX_CANDIDATES};
pub use respond::{fill_in_sentence, humanize_property, template_answer, BACKEND_DOWN, CLARIFY, NO_RECORDS, OFF_TOPIC};
pub use substitute::resubstitute;

use entities::{find_mentions, lookup, Lookup};

pub const TEMPLATE_INTENTS: [&str; 3] = ["procurement", "franchise", "complaint"];

/// Words that make a message depend on earlier turns.
const PRONOUNS: &[&str] = &["their", "its", "they", "it", "them", "他们", "它", "该公司"];

/// Turns included in decision and anaphora prompts.
const HISTORY_TURNS: usize = 3;

/// Rows passed to the summarize prompt.
const SUMMARY_ROWS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decision {
    Answerable,
    OffTopic,
    NeedsClarification,
    TemplateIntent(String),
}

impl Decision {
    /// Lenient reading of a model reply: the first recognizable label wins,
    /// anything else counts as answerable.
    pub fn from_reply(text: &str) -> Decision {
        for line in text.lines() {
            let l = line.trim().trim_matches(|c: char| !c.is_alphanumeric() && c != '_' && c != ':').to_lowercase();
            if l.is_empty() {
                continue;
            }
            if let Ok(d) = l.parse() {
                return d;
            }
            let l = l.replace(['-', ' '], "_");
            if l.contains("off_topic") {
                return Decision::OffTopic;
            }
            if l.contains("needs_clarification") {
                return Decision::NeedsClarification;
            }
            if l.contains("template_intent") {
                if let Some(t) = TEMPLATE_INTENTS.iter().find(|t| l.contains(*t)) {
                    return Decision::TemplateIntent(t.to_string());
                }
            }
            if l.contains("answerable") {
                return Decision::Answerable;
            }
        }
        log::info!("unrecognized decision reply, treating as answerable: {text:?}");
        Decision::Answerable
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decision::Answerable => f.write_str("answerable"),
            Decision::OffTopic => f.write_str("off_topic"),
            Decision::NeedsClarification => f.write_str("needs_clarification"),
            Decision::TemplateIntent(t) => write!(f, "template_intent:{t}"),
        }
    }
}

impl FromStr for Decision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "answerable" => Ok(Decision::Answerable),
            "off_topic" => Ok(Decision::OffTopic),
            "needs_clarification" => Ok(Decision::NeedsClarification),
            _ => match s.strip_prefix("template_intent:") {
                Some(t) if TEMPLATE_INTENTS.contains(&t) => Ok(Decision::TemplateIntent(t.to_string())),
                _ => Err(format!("unknown decision '{s}'")),
            },
        }
    }
}

impl Serialize for Decision {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Decision {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub strategy: MatchStrategy,
    /// Examples placed in the prompt; 0 runs zero-shot.
    pub k: usize,
    pub max_reflections: u32,
    pub fuzzy_threshold: f64,
    /// Schema elements kept by similarity recall before the model picks.
    pub schema_recall: usize,
    pub limits: ExecutionLimits,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            strategy: MatchStrategy::FullMask,
            k: 5,
            max_reflections: 2,
            fuzzy_threshold: 0.4,
            schema_recall: 6,
            limits: ExecutionLimits::default(),
        }
    }
}

impl PipelineConfig {
    pub fn check(&self) -> Result<(), String> {
        if !(self.fuzzy_threshold > 0.0 && self.fuzzy_threshold <= 1.0) {
            return Err(format!("fuzzy_threshold {} is outside (0, 1]", self.fuzzy_threshold));
        }
        if self.schema_recall == 0 {
            return Err("schema_recall must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptAttempt {
    pub script: String,
    pub issues: Vec<ValidationIssue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentTurn {
    pub trace_id: String,
    pub index: usize,
    pub user_text: String,
    pub rewritten_text: String,
    pub decision: Decision,
    pub masked: MaskedQuery,
    pub entities: Vec<ResolvedEntity>,
    pub candidates: Vec<Candidate>,
    pub schema_labels: Vec<String>,
    pub strategy: MatchStrategy,
    pub k: usize,
    pub examples_used: Vec<String>,
    pub example_scores: Vec<f64>,
    pub script_attempts: Vec<ScriptAttempt>,
    pub final_script: Option<String>,
    pub result: Option<ResultSet>,
    pub error: Option<String>,
    pub answer_text: String,
}

impl AgentTurn {
    fn new(index: usize, session: &str, user_text: &str, cfg: &PipelineConfig) -> Self {
        AgentTurn {
            trace_id: format!("{session}-{index}"),
            index,
            user_text: user_text.to_string(),
            rewritten_text: user_text.to_string(),
            decision: Decision::Answerable,
            masked: MaskedQuery::unmasked(user_text),
            entities: Vec::new(),
            candidates: Vec::new(),
            schema_labels: Vec::new(),
            strategy: cfg.strategy,
            k: cfg.k,
            examples_used: Vec::new(),
            example_scores: Vec::new(),
            script_attempts: Vec::new(),
            final_script: None,
            result: None,
            error: None,
            answer_text: String::new(),
        }
    }

    /// Reflection calls made in this turn.
    pub fn reflections(&self) -> usize {
        self.script_attempts.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingDisambiguation {
    pub surface: String,
    pub candidates: Vec<Candidate>,
    pub asked_at: usize,
    /// The interrupted question, resumed once a candidate is chosen.
    pub user_text: String,
    pub rewritten_text: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SessionState {
    pub id: String,
    pub turns: Vec<AgentTurn>,
    /// Surface form to vertex id. Entries are never removed.
    pub resolved_entities: BTreeMap<String, String>,
    pub pending: Option<PendingDisambiguation>,
}

impl SessionState {
    pub fn new(id: impl Into<String>) -> Self {
        SessionState {
            id: id.into(),
            ..Default::default()
        }
    }

    /// Recent turns as `User:` / `Assistant:` lines.
    pub fn history_text(&self) -> String {
        let from = self.turns.len().saturating_sub(HISTORY_TURNS);
        self.turns[from..]
            .iter()
            .map(|t| format!("User: {}\nAssistant: {}", t.rewritten_text, t.answer_text))
            .collect::<Vec<_>>()
            .join("\n")
    }

    fn remember(&mut self, surface: &str, id: &str) {
        self.resolved_entities
            .entry(surface.to_string())
            .or_insert_with(|| id.to_string());
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfirmError {
    #[error("no disambiguation is pending")]
    NothingPending,
    #[error("'{0}' is not one of the offered candidates")]
    UnknownCandidate(String),
}

/// Result of schema linking.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaLink {
    pub labels: Vec<String>,
    pub card: String,
    /// True when the model's selection was unusable and recall alone decided.
    pub fallback: bool,
}

/// Whether an ambiguous mention stops the turn to ask the user.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Interactive,
    /// Evaluation: take the best candidate and carry on.
    SingleShot,
}

struct SchemaEntry {
    name: String,
    summary: String,
    vector: Option<EmbeddingVector<f64>>,
}

pub struct Agent {
    graph: Arc<PropertyGraph>,
    store: Arc<ExampleStore>,
    backend: Arc<dyn Backend>,
    prompts: Arc<PromptCatalog>,
    schema_index: Vec<SchemaEntry>,
}

impl fmt::Debug for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Agent")
            .field("vertices", &self.graph.vertices().len())
            .field("pairs", &self.store.len())
            .field("backend", &self.backend.id())
            .finish()
    }
}

impl Agent {
    pub fn new(
        graph: Arc<PropertyGraph>,
        store: Arc<ExampleStore>,
        backend: Arc<dyn Backend>,
        prompts: Arc<PromptCatalog>,
    ) -> Self {
        let schema = graph.schema();
        let schema_index = schema
            .element_names()
            .into_iter()
            .map(|name| {
                let text = store.lexicon().canonicalize(&schema.element_description(&name));
                let summary = schema
                    .label(&name)
                    .map(|l| l.description.clone())
                    .filter(|d| !d.is_empty())
                    .or_else(|| schema.edge_defs(&name).next().map(|e| e.description.clone()))
                    .unwrap_or_default();
                SchemaEntry {
                    vector: store.embedder().embed(&text).ok(),
                    name,
                    summary,
                }
            })
            .collect();
        Agent {
            graph,
            store,
            backend,
            prompts,
            schema_index,
        }
    }

    pub fn graph(&self) -> &Arc<PropertyGraph> {
        &self.graph
    }

    pub fn store(&self) -> &Arc<ExampleStore> {
        &self.store
    }

    pub fn backend(&self) -> &Arc<dyn Backend> {
        &self.backend
    }

    pub fn prompts(&self) -> &Arc<PromptCatalog> {
        &self.prompts
    }

    fn call(&self, tag: &str, slots: &[(&'static str, String)]) -> Result<String, LlmError> {
        let slots: BTreeMap<&str, String> = slots.iter().cloned().collect();
        let prompt = self.prompts.render(tag, &slots)?;
        Ok(self.backend.complete(&LlmRequest::new(tag, prompt))?.text)
    }

    /// Routes a message. Backend failures come back as `Err` with the
    /// decision to use (`needs_clarification`).
    pub fn decide(&self, text: &str, history: &str) -> Result<Decision, (Decision, LlmError)> {
        self.call("decision", &[("question", text.to_string()), ("history", history.to_string())])
            .map(|r| Decision::from_reply(&r))
            .map_err(|e| (Decision::NeedsClarification, e))
    }

    /// True when `text` contains a pronoun from the lexicon.
    pub fn has_pronoun(text: &str) -> bool {
        let lower = text.to_lowercase();
        let words: Vec<&str> = lower
            .split(|c: char| !c.is_alphanumeric() && c != '\'')
            .map(|w| w.trim_matches('\''))
            .collect();
        PRONOUNS.iter().any(|p| {
            if p.is_ascii() {
                words.contains(p)
            } else {
                lower.contains(p)
            }
        })
    }

    /// Rewrites references to earlier turns. Without history or without a
    /// pronoun the text passes through and no prompt is sent.
    pub fn resolve_anaphora(&self, text: &str, history: &str) -> String {
        if history.trim().is_empty() || !Self::has_pronoun(text) {
            return text.to_string();
        }
        match self.call("anaphora", &[("question", text.to_string()), ("history", history.to_string())]) {
            Ok(reply) => reply
                .lines()
                .map(str::trim)
                .find(|l| !l.is_empty())
                .map(str::to_string)
                .unwrap_or_else(|| text.to_string()),
            Err(e) => {
                log::warn!("anaphora resolution failed, keeping text: {e}");
                text.to_string()
            }
        }
    }

    /// Resolves mentions in `text`. Every resolution is recorded in the
    /// session. The first ambiguous mention is returned with its candidates
    /// and the rest of the text is left for a later pass.
    fn disambiguate(
        &self,
        text: &str,
        session: &mut SessionState,
        cfg: &PipelineConfig,
        mode: Mode,
    ) -> (Vec<ResolvedEntity>, Option<(String, Vec<Candidate>)>) {
        let masker = self.session_masker(session);
        let mut resolved = Vec::new();
        for span in find_mentions(text, &masker) {
            let known = session.resolved_entities.get(&span.surface).cloned();
            let id = match known {
                Some(id) => id,
                None => match lookup(&self.graph, &span, cfg.fuzzy_threshold) {
                    Lookup::Unique(id) => id,
                    Lookup::Ambiguous(c) if mode == Mode::SingleShot => c[0].id.clone(),
                    Lookup::Ambiguous(c) => return (resolved, Some((span.surface, c))),
                    Lookup::NotFound => continue,
                },
            };
            session.remember(&span.surface, &id);
            if resolved.iter().any(|r: &ResolvedEntity| r.id == id) {
                continue;
            }
            resolved.push(ResolvedEntity {
                name: self.graph.display_name(&id),
                label: self.graph.vertex(&id).map(|v| v.label.clone()).unwrap_or_default(),
                surface: span.surface,
                id,
            });
        }
        (resolved, None)
    }

    /// Company gazetteer extended with names this session resolved to
    /// companies.
    fn session_masker(&self, session: &SessionState) -> crate::store::Masker {
        let extra: Vec<(&str, &str)> = session
            .resolved_entities
            .iter()
            .filter(|(_, id)| self.graph.vertex(id).is_some_and(|v| v.label == "company"))
            .map(|(s, id)| (s.as_str(), id.as_str()))
            .collect();
        self.store.masker().with_extra(extra)
    }

    /// Similarity recall over schema elements followed by a model pick.
    pub fn link_schema(&self, text: &str, recall: usize) -> SchemaLink {
        if self.schema_index.is_empty() {
            return SchemaLink {
                labels: Vec::new(),
                card: String::new(),
                fallback: false,
            };
        }
        let q = self.store.embedder().embed(&self.store.lexicon().canonicalize(text)).ok();
        let mut scored: Vec<(usize, f64)> = self
            .schema_index
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let s = match (&q, &e.vector) {
                    (Some(q), Some(v)) => cosine(q, v),
                    _ => 0.0,
                };
                (i, s)
            })
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        scored.truncate(recall.max(1));
        let recalled: Vec<&SchemaEntry> = scored.iter().map(|(i, _)| &self.schema_index[*i]).collect();
        let candidates = recalled
            .iter()
            .map(|e| format!("{}: {}", e.name, e.summary))
            .collect::<Vec<_>>()
            .join("\n");
        let picked: Option<Vec<String>> = match self.call("schema_link", &[("question", text.to_string()), ("candidates", candidates)]) {
            Ok(reply) => {
                let named: BTreeSet<String> = reply
                    .split([',', '\n', ';'])
                    .map(|s| s.trim().trim_matches(|c: char| c == '`' || c == '-' || c == '*' || c == '.').trim().to_string())
                    .collect();
                let labels: Vec<String> = self
                    .schema_index
                    .iter()
                    .filter(|e| named.contains(&e.name))
                    .map(|e| e.name.clone())
                    .collect();
                (!labels.is_empty()).then_some(labels)
            }
            Err(e) => {
                log::warn!("schema linking fell back to recall: {e}");
                None
            }
        };
        let fallback = picked.is_none();
        let labels = picked.unwrap_or_else(|| {
            let keep: BTreeSet<&str> = recalled.iter().map(|e| e.name.as_str()).collect();
            self.schema_index
                .iter()
                .filter(|e| keep.contains(e.name.as_str()))
                .map(|e| e.name.clone())
                .collect()
        });
        let card = self.graph.schema_card(&labels).unwrap_or_default();
        SchemaLink { labels, card, fallback }
    }

    /// Renders the generation prompt and extracts the script from the reply.
    pub fn generate_script(
        &self,
        question: &str,
        entities: &[ResolvedEntity],
        examples: &[Retrieved],
        schema_card: &str,
        feedback: &str,
    ) -> Result<String, LlmError> {
        let entities = entities
            .iter()
            .map(|e| {
                if e.label == "company" {
                    format!("- {PLACEHOLDER} = {} ({})", e.name, e.label)
                } else {
                    format!("- {} ({})", e.name, e.label)
                }
            })
            .collect::<Vec<_>>()
            .join("\n");
        let examples = examples
            .iter()
            .enumerate()
            .map(|(i, r)| format!("Example {}\nQuestion: {}\nGremlin: {}", i + 1, r.pair.question, r.pair.script))
            .collect::<Vec<_>>()
            .join("\n\n");
        let reply = self.call(
            "gremlin_gen",
            &[
                ("question", question.to_string()),
                ("entities", entities),
                ("lexical_notes", self.store.lexicon().notes()),
                ("schema_card", schema_card.to_string()),
                ("examples", examples),
                ("feedback", feedback.to_string()),
            ],
        )?;
        extract_script(&reply)
    }

    /// Asks for a corrected script given the validator's findings.
    pub fn reflect_and_repair(
        &self,
        question: &str,
        script: &str,
        issues: &[ValidationIssue],
        schema_card: &str,
    ) -> Result<String, LlmError> {
        let issues = issues
            .iter()
            .map(|i| format!("- {i}"))
            .collect::<Vec<_>>()
            .join("\n");
        let reply = self.call(
            "reflection",
            &[
                ("question", question.to_string()),
                ("script", script.to_string()),
                ("issues", issues),
                ("schema_card", schema_card.to_string()),
            ],
        )?;
        extract_script(&reply)
    }

    /// Answers one message in an interactive session.
    pub fn handle_turn(&self, session: &mut SessionState, text: &str, cfg: &PipelineConfig) -> AgentTurn {
        self.turn(session, text, cfg, Mode::Interactive, "")
    }

    /// Answers a standalone question without asking back: ambiguous names
    /// take their best candidate.
    pub fn answer_once(&self, question: &str, cfg: &PipelineConfig) -> AgentTurn {
        let mut s = SessionState::new("eval");
        self.turn(&mut s, question, cfg, Mode::SingleShot, "")
    }

    /// Single-shot answer whose first generation prompt carries `feedback`
    /// about an earlier failed attempt.
    pub fn answer_with_feedback(&self, question: &str, cfg: &PipelineConfig, feedback: &str) -> AgentTurn {
        let mut s = SessionState::new("regen");
        self.turn(&mut s, question, cfg, Mode::SingleShot, feedback)
    }

    /// Resolves the pending mention with `candidate_id` and finishes the
    /// interrupted question.
    pub fn confirm_candidate(
        &self,
        session: &mut SessionState,
        candidate_id: &str,
        cfg: &PipelineConfig,
    ) -> Result<AgentTurn, ConfirmError> {
        let pending = session.pending.as_ref().ok_or(ConfirmError::NothingPending)?;
        let idx = pending
            .candidates
            .iter()
            .position(|c| c.id == candidate_id)
            .ok_or_else(|| ConfirmError::UnknownCandidate(candidate_id.to_string()))?;
        let text = pending.user_text.clone();
        Ok(self.resume(session, idx, &text, cfg))
    }

    fn resume(&self, session: &mut SessionState, idx: usize, user_text: &str, cfg: &PipelineConfig) -> AgentTurn {
        let pending = session.pending.take().expect("resume needs a pending disambiguation");
        session.remember(&pending.surface, &pending.candidates[idx].id);
        let mut turn = AgentTurn::new(session.turns.len(), &session.id, user_text, cfg);
        turn.rewritten_text = pending.rewritten_text;
        self.answer(session, &mut turn, cfg, Mode::Interactive, "");
        session.turns.push(turn.clone());
        turn
    }

    fn turn(&self, session: &mut SessionState, text: &str, cfg: &PipelineConfig, mode: Mode, feedback: &str) -> AgentTurn {
        if let Some(p) = &session.pending {
            if let Some(idx) = parse_selection(text, &p.candidates) {
                return self.resume(session, idx, text, cfg);
            }
            // a new question abandons the open clarification
            session.pending = None;
        }
        let history = session.history_text();
        let mut turn = AgentTurn::new(session.turns.len(), &session.id, text, cfg);
        match self.decide(text, &history) {
            Ok(d) => turn.decision = d,
            Err((d, e)) => {
                turn.decision = d;
                turn.error = Some(e.to_string());
                turn.answer_text = BACKEND_DOWN.to_string();
            }
        }
        match &turn.decision {
            Decision::Answerable => {
                turn.rewritten_text = self.resolve_anaphora(text, &history);
                self.answer(session, &mut turn, cfg, mode, feedback);
            }
            Decision::OffTopic => turn.answer_text = OFF_TOPIC.to_string(),
            Decision::TemplateIntent(t) => turn.answer_text = template_answer(t),
            Decision::NeedsClarification => {
                if turn.answer_text.is_empty() {
                    turn.answer_text = CLARIFY.to_string();
                }
            }
        }
        session.turns.push(turn.clone());
        turn
    }

    /// Everything after routing: entities, schema, retrieval, generation,
    /// reflection, execution and the answer.
    fn answer(&self, session: &mut SessionState, turn: &mut AgentTurn, cfg: &PipelineConfig, mode: Mode, feedback: &str) {
        let question = turn.rewritten_text.clone();
        let (entities, ambiguous) = self.disambiguate(&question, session, cfg, mode);
        turn.entities = entities;
        if let Some((surface, candidates)) = ambiguous {
            let listing = candidates
                .iter()
                .enumerate()
                .map(|(i, c)| format!("{}. {}", i + 1, c.name))
                .collect::<Vec<_>>()
                .join("\n");
            turn.decision = Decision::NeedsClarification;
            turn.answer_text = format!("\"{surface}\" matches several entities. Which one do you mean?\n{listing}");
            turn.candidates = candidates.clone();
            session.pending = Some(PendingDisambiguation {
                surface,
                candidates,
                asked_at: turn.index,
                user_text: turn.user_text.clone(),
                rewritten_text: question,
            });
            return;
        }
        let mut masked = self.session_masker(session).mask(&question);
        for m in &mut masked.mentions {
            let n = normalize(&m.surface);
            if let Some(e) = turn.entities.iter().find(|e| normalize(&e.surface) == n) {
                m.resolved_vertex = Some(e.id.clone());
            }
        }
        turn.masked = masked;

        let link = self.link_schema(&turn.masked.masked_text, cfg.schema_recall);
        turn.schema_labels = link.labels.clone();

        let examples = match self.store.retrieve(&question, &turn.masked.masked_text, cfg.k, cfg.strategy) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("example retrieval failed, continuing without examples: {e}");
                Vec::new()
            }
        };
        turn.examples_used = examples.iter().map(|r| r.pair.id.clone()).collect();
        turn.example_scores = examples.iter().map(|r| r.score).collect();

        let names: Vec<String> = turn
            .entities
            .iter()
            .filter(|e| e.label == "company")
            .map(|e| e.name.clone())
            .collect();
        let borrowed: BTreeSet<String> = examples
            .iter()
            .flat_map(|r| self.store.mask(&r.pair.question).mentions)
            .map(|m| normalize(&m.surface))
            .collect();

        let masked_q = turn.masked.masked_text.clone();
        let mut reply = self.generate_script(&masked_q, &turn.entities, &examples, &link.card, feedback);
        let traversal: Traversal = loop {
            let attempt = match reply {
                Err(LlmError::NoScriptFound) => Err(ScriptAttempt {
                    script: String::new(),
                    issues: vec![ValidationIssue {
                        kind: IssueKind::Syntax,
                        location: 0,
                        offset: None,
                        message: "no script found in model output".into(),
                    }],
                }),
                Err(e) => {
                    turn.error = Some(e.to_string());
                    turn.answer_text = BACKEND_DOWN.to_string();
                    return;
                }
                Ok(raw) => match gremlin::parse(&raw) {
                    Err(se) => Err(ScriptAttempt {
                        script: raw,
                        issues: vec![se.to_issue()],
                    }),
                    Ok(mut t) => {
                        resubstitute(&mut t, &names, &borrowed);
                        let script = t.pretty();
                        let issues = gremlin::validate(&t, self.graph.schema());
                        if issues.is_empty() {
                            Ok((t, script))
                        } else {
                            Err(ScriptAttempt { script, issues })
                        }
                    }
                },
            };
            match attempt {
                Ok((t, script)) => {
                    turn.script_attempts.push(ScriptAttempt {
                        script: script.clone(),
                        issues: Vec::new(),
                    });
                    turn.final_script = Some(script);
                    break t;
                }
                Err(a) => {
                    turn.script_attempts.push(a);
                    if turn.script_attempts.len() > cfg.max_reflections as usize {
                        let last = turn.script_attempts.last().unwrap();
                        turn.error = Some(last.issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "));
                        turn.answer_text = format!(
                            "I could not build a valid query for this question after {} attempts.",
                            turn.script_attempts.len()
                        );
                        return;
                    }
                    let last = turn.script_attempts.last().unwrap();
                    reply = self.reflect_and_repair(&masked_q, &last.script, &last.issues, &link.card);
                }
            }
        };

        match gremlin::execute(&traversal, &self.graph, cfg.limits) {
            Ok(rs) => {
                turn.answer_text = self.respond(&question, &traversal, turn.entities.first(), &rs);
                turn.result = Some(rs);
            }
            Err(e) => {
                turn.error = Some(e.to_string());
                turn.answer_text = format!("The query could not be completed: {e}.");
            }
        }
    }

    /// Fill-in sentence for small scalar results, otherwise a model summary
    /// of at most 20 rows.
    pub fn respond(&self, question: &str, script: &Traversal, entity: Option<&ResolvedEntity>, rs: &ResultSet) -> String {
        if let Some(s) = fill_in_sentence(script, entity.map(|e| e.name.as_str()), rs) {
            return s;
        }
        let rows: Vec<serde_json::Value> = rs.rows.iter().take(SUMMARY_ROWS).map(|v| v.to_json()).collect();
        let payload = serde_json::json!({
            "rows": rows,
            "total": rs.len(),
            "truncated": rs.len() > SUMMARY_ROWS,
        });
        match self.call("summarize", &[("question", question.to_string()), ("results", payload.to_string())]) {
            Ok(text) if !text.trim().is_empty() => text.trim().to_string(),
            Ok(_) | Err(_) => format!("Found {} matching records.", rs.len()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decision_labels() {
        assert_eq!(Decision::from_reply("answerable"), Decision::Answerable);
        assert_eq!(Decision::from_reply("Label: off-topic."), Decision::OffTopic);
        assert_eq!(
            Decision::from_reply("template_intent:franchise\nbecause ..."),
            Decision::TemplateIntent("franchise".into())
        );
        assert_eq!(Decision::from_reply("???"), Decision::Answerable);
        let json = serde_json::to_string(&Decision::TemplateIntent("complaint".into())).unwrap();
        assert_eq!(json, "\"template_intent:complaint\"");
        assert_eq!(serde_json::from_str::<Decision>(&json).unwrap(), Decision::TemplateIntent("complaint".into()));
        assert!("template_intent:other".parse::<Decision>().is_err());
    }

    #[test]
    fn pronouns() {
        assert!(Agent::has_pronoun("Who is their legal representative?"));
        assert!(Agent::has_pronoun("What is it?"));
        assert!(Agent::has_pronoun("该公司的法人是谁"));
        assert!(!Agent::has_pronoun("Who is the legal representative of Itochu?"));
        assert!(!Agent::has_pronoun("What is Baidu's website?"));
    }

    #[test]
    fn config_defaults() {
        let c = PipelineConfig::default();
        assert_eq!((c.strategy, c.k, c.max_reflections, c.fuzzy_threshold), (MatchStrategy::FullMask, 5, 2, 0.4));
        assert!(c.check().is_ok());
        let c: PipelineConfig = toml::from_str("k = 3\nstrategy = \"RawMatch\"").unwrap();
        assert_eq!((c.k, c.strategy), (3, MatchStrategy::RawMatch));
    }
}
