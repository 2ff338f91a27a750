//! Question-to-Gremlin agent engine over an embedded property graph.

pub mod agent;
pub mod bundle;
pub mod eval;
pub mod graph;
pub mod gremlin;
pub mod llm;
pub mod offline;
pub mod store;
pub mod value;

pub use graph::{GraphError, PropertyGraph};
pub use value::Value;

/// Embedding vector at the default precision.
pub type Embedding = store::EmbeddingVector<f64>;
/// Single-precision embedding, e.g. for compact index dumps.
pub type Embedding32 = store::EmbeddingVector<f32>;
pub type Index = store::VectorIndex<f64>;
pub type Index32 = store::VectorIndex<f32>;
