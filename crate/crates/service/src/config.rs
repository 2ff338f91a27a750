//! Service configuration file.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use kgagent_core::agent::{Agent, PipelineConfig};
use kgagent_core::bundle::{load_agent, BundlePaths};
use kgagent_core::llm::{Backend, HttpChat, HttpEmbedder, ScriptedMock};
use kgagent_core::store::Embedder;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_listen")]
    pub listen: String,
    #[serde(default = "default_deadline")]
    pub deadline_ms: u64,
    /// Built chat client assets, served under `/ui`.
    #[serde(default)]
    pub ui_dir: Option<PathBuf>,
    pub graph: GraphFiles,
    pub store: StoreFiles,
    /// Prompt template overrides; built-in templates otherwise.
    #[serde(default)]
    pub prompts_dir: Option<PathBuf>,
    pub backend: BackendConfig,
    #[serde(default)]
    pub pipeline: PipelineConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFiles {
    pub schema: PathBuf,
    pub nodes: PathBuf,
    pub edges: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoreFiles {
    pub pairs: PathBuf,
    #[serde(default)]
    pub lexicon: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Mock,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Rule file for the scripted mock.
    #[serde(default)]
    pub rules: Option<PathBuf>,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub model: Option<String>,
    /// Environment variable holding the bearer token.
    #[serde(default)]
    pub token_env: Option<String>,
    #[serde(default = "default_backend_timeout")]
    pub timeout_ms: u64,
    /// Remote embedding model; the built-in embedder otherwise.
    #[serde(default)]
    pub embedding_model: Option<String>,
    #[serde(default)]
    pub embedding_dims: Option<usize>,
}

fn default_listen() -> String {
    "127.0.0.1:8080".into()
}

fn default_deadline() -> u64 {
    30_000
}

fn default_backend_timeout() -> u64 {
    60_000
}

impl ServiceConfig {
    /// Reads a TOML file. Relative paths are taken from the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: ServiceConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve(base);
        Ok(cfg)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.graph.schema);
        fix(&mut self.graph.nodes);
        fix(&mut self.graph.edges);
        fix(&mut self.store.pairs);
        for p in [&mut self.store.lexicon, &mut self.prompts_dir, &mut self.ui_dir, &mut self.backend.rules]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
    }

    /// Startup checks: files exist, deadline of at least one second,
    /// pipeline values in range.
    pub fn check(&self) -> Result<()> {
        if self.deadline_ms < 1000 {
            bail!("deadline_ms must be at least 1000, got {}", self.deadline_ms);
        }
        let mut files = vec![&self.graph.schema, &self.graph.nodes, &self.graph.edges, &self.store.pairs];
        files.extend(self.store.lexicon.iter());
        files.extend(self.prompts_dir.iter());
        if self.backend.kind == BackendKind::Mock {
            match &self.backend.rules {
                Some(r) => files.push(r),
                None => bail!("the mock backend needs backend.rules"),
            }
        } else if self.backend.endpoint.is_none() {
            bail!("the http backend needs backend.endpoint");
        }
        for f in files {
            if !f.exists() {
                bail!("{} does not exist", f.display());
            }
        }
        self.pipeline.check().map_err(anyhow::Error::msg)
    }

    pub fn bundle_paths(&self) -> BundlePaths {
        BundlePaths {
            schema: self.graph.schema.clone(),
            nodes: self.graph.nodes.clone(),
            edges: self.graph.edges.clone(),
            pairs: self.store.pairs.clone(),
            lexicon: self.store.lexicon.clone(),
            prompts_dir: self.prompts_dir.clone(),
        }
    }

    pub fn backend(&self) -> Result<Arc<dyn Backend>> {
        let b = &self.backend;
        Ok(match b.kind {
            BackendKind::Mock => {
                let rules = b.rules.as_ref().context("the mock backend needs backend.rules")?;
                Arc::new(ScriptedMock::load(rules)?)
            }
            BackendKind::Http => {
                let endpoint = b.endpoint.as_deref().context("the http backend needs backend.endpoint")?;
                let mut chat = HttpChat::new(endpoint, b.model.as_deref().unwrap_or("default"));
                chat.token_env = b.token_env.clone();
                chat.timeout = Duration::from_millis(b.timeout_ms);
                Arc::new(chat)
            }
        })
    }

    fn embedder(&self) -> Option<Arc<dyn Embedder>> {
        let b = &self.backend;
        if b.kind != BackendKind::Http {
            return None;
        }
        let model = b.embedding_model.as_deref()?;
        let mut e = HttpEmbedder::new(b.endpoint.as_deref()?, model, b.embedding_dims.unwrap_or(768));
        e.token_env = b.token_env.clone();
        e.timeout = Duration::from_millis(b.timeout_ms);
        Some(Arc::new(e))
    }

    /// Loads graph, store and prompts and wires the backend.
    pub fn build_agent(&self) -> Result<Agent> {
        self.check()?;
        Ok(load_agent(&self.bundle_paths(), self.backend()?, self.embedder())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_paths_follow_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(
            &path,
            r#"
deadline_ms = 5000
[graph]
schema = "g/schema.json"
nodes = "g/nodes.jsonl"
edges = "/abs/edges.jsonl"
[store]
pairs = "pairs.jsonl"
[backend]
kind = "mock"
rules = "rules.json"
[pipeline]
strategy = "RawMatch"
k = 3
"#,
        )
        .unwrap();
        let cfg = ServiceConfig::load(&path).unwrap();
        assert_eq!(cfg.graph.schema, dir.path().join("g/schema.json"));
        assert_eq!(cfg.graph.edges, PathBuf::from("/abs/edges.jsonl"));
        assert_eq!(cfg.backend.rules, Some(dir.path().join("rules.json")));
        assert_eq!(cfg.pipeline.k, 3);
        assert_eq!(cfg.pipeline.max_reflections, 2);
        assert_eq!(cfg.listen, "127.0.0.1:8080");
        // files are missing
        assert!(cfg.check().is_err());
    }

    #[test]
    fn short_deadline_rejected() {
        let cfg: ServiceConfig = toml::from_str(
            r#"
deadline_ms = 10
[graph]
schema = "s"
nodes = "n"
edges = "e"
[store]
pairs = "p"
[backend]
kind = "http"
endpoint = "http://localhost:1"
"#,
        )
        .unwrap();
        let e = cfg.check().unwrap_err().to_string();
        assert!(e.contains("deadline_ms"), "{e}");
    }
}
