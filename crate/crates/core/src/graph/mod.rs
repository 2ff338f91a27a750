//! Embedded, read-only property graph with a governed schema.
//!
//! A [`PropertyGraph`] is built once from a schema file plus JSON-lines node
//! and edge files, validated exhaustively, and never mutated afterwards.
//! Share it behind an `Arc` across any number of readers.

mod card;
mod names;
mod schema;

pub use card::schema_card;
pub use names::{jaccard, normalize, trigrams, NameIndex, STRIPPED_PUNCTUATION};
pub use schema::{EdgeDef, EnumValue, GraphSchema, LabelDef, LabelKind, PropertyDef, ValueKind};

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::value::{ElementKind, ElementRef, Value};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {file} at line {line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("schema violation on '{entity}': {reason}")]
    SchemaViolation { entity: String, reason: String },
    #[error("unknown label '{0}'")]
    UnknownLabel(String),
    #[error("fuzzy threshold must be in (0, 1], got {0}")]
    InvalidThreshold(f64),
}

pub type Props = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: String,
    pub label: String,
    #[serde(default)]
    pub props: Props,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: String,
    pub label: String,
    pub src: String,
    pub dst: String,
    #[serde(default)]
    pub props: Props,
}

impl Vertex {
    pub fn name(&self) -> Option<&str> {
        self.props.get("name").and_then(Value::as_str)
    }

    pub fn element(&self) -> ElementRef {
        ElementRef {
            kind: ElementKind::Vertex,
            id: self.id.clone(),
            label: self.label.clone(),
        }
    }
}

impl Edge {
    pub fn element(&self) -> ElementRef {
        ElementRef {
            kind: ElementKind::Edge,
            id: self.id.clone(),
            label: self.label.clone(),
        }
    }
}

/// Immutable graph. Vertices and edges are kept sorted by id so that every
/// scan is deterministic; adjacency lists are sorted by edge id.
#[derive(Debug, Clone)]
pub struct PropertyGraph {
    schema: GraphSchema,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    vertex_pos: HashMap<String, usize>,
    edge_pos: HashMap<String, usize>,
    out_adj: Vec<Vec<usize>>,
    in_adj: Vec<Vec<usize>>,
    names: NameIndex,
}

impl PartialEq for PropertyGraph {
    fn eq(&self, other: &Self) -> bool {
        self.schema == other.schema && self.vertices == other.vertices && self.edges == other.edges
    }
}

impl PropertyGraph {
    pub fn empty(schema: GraphSchema) -> Self {
        Self::build(schema, Vec::new(), Vec::new()).expect("empty graph is always valid")
    }

    /// Validates every element against the schema and indexes the graph.
    pub fn build(
        schema: GraphSchema,
        mut vertices: Vec<Vertex>,
        mut edges: Vec<Edge>,
    ) -> Result<Self, GraphError> {
        schema.check()?;
        vertices.sort_by(|a, b| a.id.cmp(&b.id));
        edges.sort_by(|a, b| a.id.cmp(&b.id));

        let mut vertex_pos = HashMap::with_capacity(vertices.len());
        for (i, v) in vertices.iter().enumerate() {
            if vertex_pos.insert(v.id.clone(), i).is_some() {
                return Err(violation(&v.id, "duplicate vertex id"));
            }
            let label = schema
                .vertex_label(&v.label)
                .ok_or_else(|| violation(&v.id, format!("undeclared vertex label '{}'", v.label)))?;
            check_props(&v.id, label, &v.props)?;
        }

        let mut edge_pos = HashMap::with_capacity(edges.len());
        let mut out_adj = vec![Vec::new(); vertices.len()];
        let mut in_adj = vec![Vec::new(); vertices.len()];
        for (i, e) in edges.iter().enumerate() {
            if edge_pos.insert(e.id.clone(), i).is_some() {
                return Err(violation(&e.id, "duplicate edge id"));
            }
            let src = *vertex_pos
                .get(&e.src)
                .ok_or_else(|| violation(&e.id, format!("source vertex '{}' missing", e.src)))?;
            let dst = *vertex_pos
                .get(&e.dst)
                .ok_or_else(|| violation(&e.id, format!("target vertex '{}' missing", e.dst)))?;
            let (sl, dl) = (&vertices[src].label, &vertices[dst].label);
            if !schema
                .edge_defs(&e.label)
                .any(|d| &d.src_label == sl && &d.dst_label == dl)
            {
                return Err(violation(
                    &e.id,
                    format!("edge '{}' not declared from '{sl}' to '{dl}'", e.label),
                ));
            }
            match schema.edge_label(&e.label) {
                Some(label) => check_props(&e.id, label, &e.props)?,
                None if !e.props.is_empty() => {
                    return Err(violation(&e.id, "edge label declares no properties"))
                }
                None => {}
            }
            out_adj[src].push(i);
            in_adj[dst].push(i);
        }

        let names = NameIndex::build(
            vertices
                .iter()
                .filter_map(|v| v.name().map(|n| (v.id.as_str(), n))),
        );

        Ok(PropertyGraph {
            schema,
            vertices,
            edges,
            vertex_pos,
            edge_pos,
            out_adj,
            in_adj,
            names,
        })
    }

    /// Loads a graph from a schema JSON file and JSON-lines node/edge files.
    pub fn load(
        schema_file: impl AsRef<Path>,
        nodes_file: impl AsRef<Path>,
        edges_file: impl AsRef<Path>,
    ) -> Result<Self, GraphError> {
        let schema = GraphSchema::from_json(&read(schema_file.as_ref())?).map_err(|e| match e {
            GraphError::Parse { line, message, .. } => GraphError::Parse {
                file: schema_file.as_ref().display().to_string(),
                line,
                message,
            },
            other => other,
        })?;
        let vertices = parse_jsonl(nodes_file.as_ref())?;
        let edges = parse_jsonl(edges_file.as_ref())?;
        Self::build(schema, vertices, edges)
    }

    pub fn schema(&self) -> &GraphSchema {
        &self.schema
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex(&self, id: &str) -> Option<&Vertex> {
        self.vertex_pos.get(id).map(|&i| &self.vertices[i])
    }

    pub fn vertex_index(&self, id: &str) -> Option<usize> {
        self.vertex_pos.get(id).copied()
    }

    pub fn edge_index(&self, id: &str) -> Option<usize> {
        self.edge_pos.get(id).copied()
    }

    pub fn edge(&self, id: &str) -> Option<&Edge> {
        self.edge_pos.get(id).map(|&i| &self.edges[i])
    }

    /// Outgoing edge positions of the vertex at `pos`, by edge id.
    pub fn out_edges(&self, pos: usize) -> &[usize] {
        &self.out_adj[pos]
    }

    pub fn in_edges(&self, pos: usize) -> &[usize] {
        &self.in_adj[pos]
    }

    pub fn names(&self) -> &NameIndex {
        &self.names
    }

    pub fn lookup_exact(&self, name: &str) -> Vec<String> {
        self.names.lookup_exact(name)
    }

    pub fn lookup_fuzzy(
        &self,
        fragment: &str,
        threshold: f64,
        limit: usize,
    ) -> Result<Vec<(String, f64)>, GraphError> {
        self.names.lookup_fuzzy(fragment, threshold, limit)
    }

    pub fn schema_card(&self, labels: &[String]) -> Result<String, GraphError> {
        schema_card(&self.schema, labels)
    }

    /// Display name of a vertex, falling back to its id.
    pub fn display_name(&self, id: &str) -> String {
        self.vertex(id)
            .and_then(|v| v.name())
            .unwrap_or(id)
            .to_string()
    }
}

fn violation(entity: &str, reason: impl Into<String>) -> GraphError {
    GraphError::SchemaViolation {
        entity: entity.to_string(),
        reason: reason.into(),
    }
}

fn check_props(id: &str, label: &LabelDef, props: &Props) -> Result<(), GraphError> {
    for (name, value) in props {
        let def = label
            .property(name)
            .ok_or_else(|| violation(id, format!("undeclared property '{name}' on '{}'", label.name)))?;
        let ok = match def.value_kind {
            ValueKind::String => matches!(value, Value::Str(_)),
            ValueKind::Integer => matches!(value, Value::Int(_)),
            ValueKind::Decimal => value.is_numeric(),
            ValueKind::Date => matches!(value, Value::Str(s) if is_iso_date(s)),
            ValueKind::ListOfString => {
                matches!(value, Value::List(items) if items.iter().all(|i| matches!(i, Value::Str(_))))
            }
        };
        if !ok {
            return Err(violation(
                id,
                format!("property '{name}' is not a {}", def.value_kind.as_str()),
            ));
        }
        if let Some(allowed) = &def.enum_values {
            let stored = value.to_string();
            if !allowed.iter().any(|e| e.value == stored) {
                return Err(violation(
                    id,
                    format!("'{stored}' is not a declared value of '{name}'"),
                ));
            }
        }
    }
    Ok(())
}

/// `YYYY-MM-DD`, optionally followed by a `T...` time part.
fn is_iso_date(s: &str) -> bool {
    let b = s.as_bytes();
    if b.len() < 10 {
        return false;
    }
    let digits = |r: std::ops::Range<usize>| b[r].iter().all(u8::is_ascii_digit);
    digits(0..4)
        && b[4] == b'-'
        && digits(5..7)
        && b[7] == b'-'
        && digits(8..10)
        && (b.len() == 10 || b[10] == b'T')
}

fn read(path: &Path) -> Result<String, GraphError> {
    fs::read_to_string(path).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, GraphError> {
    let text = read(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(line).map_err(|e| GraphError::Parse {
            file: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(item);
    }
    Ok(out)
}
