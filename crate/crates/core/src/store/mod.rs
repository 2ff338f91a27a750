//! Seed-example store: masking, embeddings and per-strategy vector indexes.

mod embed;
mod index;
mod lexicon;
mod mask;

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use embed::{cosine, EmbedError, Embedder, EmbeddingVector, TrigramEmbedder, DEFAULT_DIMS};
pub use index::{IndexEntry, VectorIndex};
pub use lexicon::{LexicalMap, LexicalRule};
pub use mask::{MaskedQuery, Masker, Mention, PLACEHOLDER};

use crate::graph::PropertyGraph;
use crate::gremlin;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StoreError {
    #[error("io: {0}")]
    Io(String),
    #[error("{file}:{line}: {message}")]
    Parse { file: String, line: usize, message: String },
    #[error("example {id} rejected: {reason}")]
    InvalidPair { id: String, reason: String },
    #[error("duplicate example id {0}")]
    DuplicateId(String),
    #[error("index built for {index} queried with {query}")]
    StrategyMismatch { index: MatchStrategy, query: MatchStrategy },
    #[error("expected {expected} dimensions, got {got}")]
    Dims { expected: usize, got: usize },
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MatchStrategy {
    RawMatch,
    EvalMask,
    RepMask,
    FullMask,
}

impl MatchStrategy {
    pub const ALL: [MatchStrategy; 4] = [
        MatchStrategy::RawMatch,
        MatchStrategy::EvalMask,
        MatchStrategy::RepMask,
        MatchStrategy::FullMask,
    ];

    /// Whether the incoming question is masked before embedding.
    pub fn masks_query(self) -> bool {
        matches!(self, MatchStrategy::EvalMask | MatchStrategy::FullMask)
    }

    /// Whether stored questions are masked before embedding.
    pub fn masks_stored(self) -> bool {
        matches!(self, MatchStrategy::RepMask | MatchStrategy::FullMask)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MatchStrategy::RawMatch => "RawMatch",
            MatchStrategy::EvalMask => "EvalMask",
            MatchStrategy::RepMask => "RepMask",
            MatchStrategy::FullMask => "FullMask",
        }
    }
}

impl fmt::Display for MatchStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MatchStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_lowercase();
        Ok(match key.as_str() {
            "raw" | "rawmatch" => MatchStrategy::RawMatch,
            "eval" | "evalmask" => MatchStrategy::EvalMask,
            "rep" | "repmask" => MatchStrategy::RepMask,
            "full" | "fullmask" => MatchStrategy::FullMask,
            _ => return Err(format!("unknown strategy '{s}'")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Manual,
    Graph2nl,
    Feedback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExamplePair {
    pub id: String,
    pub question: String,
    pub script: String,
    pub provenance: Provenance,
    /// Unix seconds; 0 when unknown.
    #[serde(default)]
    pub created_at: u64,
}

impl ExamplePair {
    pub fn check(&self, schema: &crate::graph::GraphSchema) -> Result<(), StoreError> {
        gremlin::check_script(&self.script, schema)
            .map(|_| ())
            .map_err(|issues| StoreError::InvalidPair {
                id: self.id.clone(),
                reason: issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "),
            })
    }
}

/// Reads a JSON-lines seed-pair file.
pub fn load_pairs(path: &Path) -> Result<Vec<ExamplePair>, StoreError> {
    let text = fs::read_to_string(path).map_err(|e| StoreError::Io(format!("{}: {e}", path.display())))?;
    parse_pairs(&text, &path.display().to_string())
}

pub fn parse_pairs(text: &str, file: &str) -> Result<Vec<ExamplePair>, StoreError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let pair: ExamplePair = serde_json::from_str(line).map_err(|e| StoreError::Parse {
            file: file.to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(pair);
    }
    Ok(out)
}

pub fn write_pairs(path: &Path, pairs: &[ExamplePair]) -> Result<(), StoreError> {
    let mut text = String::new();
    for p in pairs {
        text.push_str(&serde_json::to_string(p).expect("pair serializes"));
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| StoreError::Io(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Retrieved {
    pub pair: ExamplePair,
    pub score: f64,
}

/// Text preparation shared by the index and the brute-force oracle.
#[derive(Clone)]
pub struct TextPrep {
    pub masker: Masker,
    pub lexicon: LexicalMap,
}

impl TextPrep {
    pub fn stored_text(&self, question: &str, strategy: MatchStrategy) -> String {
        let text = if strategy.masks_stored() {
            self.masker.mask(question).masked_text
        } else {
            question.to_string()
        };
        self.lexicon.canonicalize(&text)
    }

    pub fn query_text(&self, question: &str, strategy: MatchStrategy) -> String {
        let text = if strategy.masks_query() {
            self.masker.mask(question).masked_text
        } else {
            question.to_string()
        };
        self.lexicon.canonicalize(&text)
    }
}

/// Immutable once built; updates produce a new store via [`ExampleStore::with_pairs`].
#[derive(Clone)]
pub struct ExampleStore {
    pairs: Vec<ExamplePair>,
    prep: TextPrep,
    embedder: Arc<dyn Embedder>,
    indexes: Vec<VectorIndex<f64>>,
}

impl fmt::Debug for ExampleStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExampleStore")
            .field("pairs", &self.pairs.len())
            .field("embedder", &self.embedder.id())
            .finish()
    }
}

impl ExampleStore {
    /// Validates every pair against the graph schema and indexes it under all
    /// four strategies.
    pub fn build(
        pairs: Vec<ExamplePair>,
        graph: &PropertyGraph,
        lexicon: LexicalMap,
        embedder: Arc<dyn Embedder>,
    ) -> Result<Self, StoreError> {
        let store = ExampleStore {
            pairs: Vec::new(),
            prep: TextPrep {
                masker: Masker::from_graph(graph),
                lexicon,
            },
            indexes: MatchStrategy::ALL
                .iter()
                .map(|s| VectorIndex::new(*s, embedder.dims()))
                .collect(),
            embedder,
        };
        store.with_pairs(pairs, graph)
    }

    /// New store containing the current pairs plus `extra`. Pairs whose id is
    /// already present are rejected with `DuplicateId`.
    pub fn with_pairs(&self, extra: Vec<ExamplePair>, graph: &PropertyGraph) -> Result<Self, StoreError> {
        let mut next = self.clone();
        for p in &extra {
            p.check(graph.schema())?;
            if next.pair(&p.id).is_some() {
                return Err(StoreError::DuplicateId(p.id.clone()));
            }
            let pos = next.pairs.partition_point(|x| x.id < p.id);
            next.pairs.insert(pos, p.clone());
        }
        let embedded: Vec<Result<(usize, EmbeddingVector<f64>), StoreError>> = {
            use rayon::prelude::*;
            extra
                .par_iter()
                .flat_map_iter(|p| {
                    MatchStrategy::ALL.iter().enumerate().map(move |(si, s)| (si, *s, p))
                })
                .map(|(si, s, p)| Ok((si, self.embedder.embed(&self.prep.stored_text(&p.question, s))?)))
                .collect()
        };
        let mut per_pair = embedded.into_iter();
        for p in &extra {
            for _ in 0..MatchStrategy::ALL.len() {
                let (si, v) = per_pair.next().expect("one vector per strategy")?;
                next.indexes[si].insert(p.id.clone(), v)?;
            }
        }
        Ok(next)
    }

    pub fn pairs(&self) -> &[ExamplePair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pair(&self, id: &str) -> Option<&ExamplePair> {
        self.pairs
            .binary_search_by(|p| p.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.pairs[i])
    }

    pub fn index_for(&self, strategy: MatchStrategy) -> &VectorIndex<f64> {
        &self.indexes[MatchStrategy::ALL.iter().position(|s| *s == strategy).unwrap()]
    }

    pub fn masker(&self) -> &Masker {
        &self.prep.masker
    }

    pub fn lexicon(&self) -> &LexicalMap {
        &self.prep.lexicon
    }

    pub fn prep(&self) -> &TextPrep {
        &self.prep
    }

    pub fn embedder(&self) -> &Arc<dyn Embedder> {
        &self.embedder
    }

    pub fn mask(&self, text: &str) -> MaskedQuery {
        self.prep.masker.mask(text)
    }

    /// Top `k` examples for `query` under `strategy`.
    pub fn top_k(&self, query: &str, k: usize, strategy: MatchStrategy) -> Result<Vec<Retrieved>, StoreError> {
        let text = self.prep.query_text(query, strategy);
        self.top_k_prepared(&text, k, strategy)
    }

    /// Like [`top_k`](Self::top_k) for a caller that already masked the
    /// question (for instance with session-resolved names).
    pub fn retrieve(
        &self,
        raw: &str,
        masked: &str,
        k: usize,
        strategy: MatchStrategy,
    ) -> Result<Vec<Retrieved>, StoreError> {
        let side = if strategy.masks_query() { masked } else { raw };
        self.top_k_prepared(&self.prep.lexicon.canonicalize(side), k, strategy)
    }

    fn top_k_prepared(&self, text: &str, k: usize, strategy: MatchStrategy) -> Result<Vec<Retrieved>, StoreError> {
        if self.pairs.is_empty() || k == 0 {
            return Ok(Vec::new());
        }
        let q = self.embedder.embed(text)?;
        let hits = self.index_for(strategy).top_k(&q, k, strategy)?;
        Ok(hits
            .into_iter()
            .map(|(id, score)| Retrieved {
                pair: self.pair(&id).expect("indexed id has a pair").clone(),
                score,
            })
            .collect())
    }
}

/// Exhaustive reference ranking: embeds every stored question afresh and
/// sorts all scores.
pub fn brute_force_top_k(
    query: &str,
    k: usize,
    strategy: MatchStrategy,
    pairs: &[ExamplePair],
    prep: &TextPrep,
    embedder: &dyn Embedder,
) -> Result<Vec<Retrieved>, StoreError> {
    if pairs.is_empty() || k == 0 {
        return Ok(Vec::new());
    }
    let q = embedder.embed(&prep.query_text(query, strategy))?;
    let mut scored = Vec::with_capacity(pairs.len());
    for p in pairs {
        let v = embedder.embed(&prep.stored_text(&p.question, strategy))?;
        scored.push(Retrieved {
            pair: p.clone(),
            score: cosine(&q, &v),
        });
    }
    scored.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.pair.id.cmp(&b.pair.id)));
    scored.truncate(k);
    Ok(scored)
}
