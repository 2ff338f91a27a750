//! Loads a graph, example store and prompts from files into an [`Agent`].

use std::path::PathBuf;
use std::sync::Arc;

use thiserror::Error;

use crate::agent::Agent;
use crate::graph::{GraphError, PropertyGraph};
use crate::llm::{Backend, LlmError, PromptCatalog};
use crate::store::{load_pairs, Embedder, ExampleStore, LexicalMap, StoreError, TrigramEmbedder};

#[derive(Debug, Error)]
pub enum BundleError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Prompts(#[from] LlmError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BundlePaths {
    pub schema: PathBuf,
    pub nodes: PathBuf,
    pub edges: PathBuf,
    pub pairs: PathBuf,
    pub lexicon: Option<PathBuf>,
    /// Directory of prompt overrides; built-in templates otherwise.
    pub prompts_dir: Option<PathBuf>,
}

impl BundlePaths {
    /// The standard file names inside one directory.
    pub fn in_dir(dir: impl Into<PathBuf>) -> Self {
        let dir = dir.into();
        let lexicon = dir.join("lexical_map.toml");
        BundlePaths {
            schema: dir.join("schema.json"),
            nodes: dir.join("nodes.jsonl"),
            edges: dir.join("edges.jsonl"),
            pairs: dir.join("seed_pairs.jsonl"),
            lexicon: lexicon.exists().then_some(lexicon),
            prompts_dir: None,
        }
    }
}

pub fn load_agent(
    paths: &BundlePaths,
    backend: Arc<dyn Backend>,
    embedder: Option<Arc<dyn Embedder>>,
) -> Result<Agent, BundleError> {
    let graph = PropertyGraph::load(&paths.schema, &paths.nodes, &paths.edges)?;
    let lexicon = match &paths.lexicon {
        Some(p) => LexicalMap::load(p)?,
        None => LexicalMap::default(),
    };
    let pairs = load_pairs(&paths.pairs)?;
    let embedder = embedder.unwrap_or_else(|| Arc::new(TrigramEmbedder::default()));
    let store = ExampleStore::build(pairs, &graph, lexicon, embedder)?;
    let prompts = match &paths.prompts_dir {
        Some(d) => PromptCatalog::load_dir(d)?,
        None => PromptCatalog::builtin(),
    };
    Ok(Agent::new(Arc::new(graph), Arc::new(store), backend, Arc::new(prompts)))
}
