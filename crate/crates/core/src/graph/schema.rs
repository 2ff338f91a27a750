use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::GraphError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelKind {
    Vertex,
    Edge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueKind {
    String,
    Integer,
    Decimal,
    Date,
    ListOfString,
}

impl ValueKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ValueKind::String => "string",
            ValueKind::Integer => "integer",
            ValueKind::Decimal => "decimal",
            ValueKind::Date => "date",
            ValueKind::ListOfString => "list-of-string",
        }
    }
}

/// A stored enum value and what it means to a human reader.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumValue {
    pub value: String,
    pub meaning: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyDef {
    pub name: String,
    pub value_kind: ValueKind,
    #[serde(default)]
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enum_values: Option<Vec<EnumValue>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelDef {
    pub name: String,
    pub kind: LabelKind,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub properties: Vec<PropertyDef>,
}

impl LabelDef {
    pub fn property(&self, name: &str) -> Option<&PropertyDef> {
        self.properties.iter().find(|p| p.name == name)
    }
}

/// Direction constraint for one edge label: `src_label -[name]-> dst_label`.
/// The same edge name may be declared for several endpoint pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeDef {
    pub name: String,
    pub src_label: String,
    pub dst_label: String,
    #[serde(default)]
    pub description: String,
}

/// The governed schema of the knowledge graph.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GraphSchema {
    #[serde(default)]
    pub labels: Vec<LabelDef>,
    #[serde(default)]
    pub edges: Vec<EdgeDef>,
}

impl GraphSchema {
    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let schema: GraphSchema = serde_json::from_str(text).map_err(|e| GraphError::Parse {
            file: "schema".into(),
            line: e.line(),
            message: e.to_string(),
        })?;
        schema.check()?;
        Ok(schema)
    }

    /// Checks the structural invariants: unique label names, unique property
    /// names per label, edge endpoints naming vertex labels, non-empty enums.
    pub fn check(&self) -> Result<(), GraphError> {
        let invalid = |reason: String| GraphError::InvalidSchema(reason);
        let mut seen = HashSet::new();
        for label in &self.labels {
            if !seen.insert(label.name.as_str()) {
                return Err(invalid(format!("duplicate label '{}'", label.name)));
            }
            let mut props = HashSet::new();
            for p in &label.properties {
                if !props.insert(p.name.as_str()) {
                    return Err(invalid(format!(
                        "duplicate property '{}' on label '{}'",
                        p.name, label.name
                    )));
                }
                if matches!(&p.enum_values, Some(v) if v.is_empty()) {
                    return Err(invalid(format!(
                        "empty enum_values for '{}.{}'",
                        label.name, p.name
                    )));
                }
            }
        }
        for e in &self.edges {
            for end in [&e.src_label, &e.dst_label] {
                if self.vertex_label(end).is_none() {
                    return Err(invalid(format!(
                        "edge '{}' references undeclared vertex label '{}'",
                        e.name, end
                    )));
                }
            }
            if let Some(l) = self.label(&e.name) {
                if l.kind != LabelKind::Edge {
                    return Err(invalid(format!(
                        "edge '{}' shares its name with a vertex label",
                        e.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn label(&self, name: &str) -> Option<&LabelDef> {
        self.labels.iter().find(|l| l.name == name)
    }

    pub fn vertex_label(&self, name: &str) -> Option<&LabelDef> {
        self.label(name).filter(|l| l.kind == LabelKind::Vertex)
    }

    /// Properties of an edge label. Edge names declared only through
    /// `EdgeDef` have no properties.
    pub fn edge_label(&self, name: &str) -> Option<&LabelDef> {
        self.label(name).filter(|l| l.kind == LabelKind::Edge)
    }

    pub fn is_edge_name(&self, name: &str) -> bool {
        self.edges.iter().any(|e| e.name == name)
    }

    pub fn edge_defs<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a EdgeDef> + 'a {
        self.edges.iter().filter(move |e| e.name == name)
    }

    pub fn vertex_labels(&self) -> impl Iterator<Item = &LabelDef> {
        self.labels.iter().filter(|l| l.kind == LabelKind::Vertex)
    }

    /// Edge definitions touching `label` at either end.
    pub fn incident_edges<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a EdgeDef> + 'a {
        self.edges
            .iter()
            .filter(move |e| e.src_label == label || e.dst_label == label)
    }

    /// Names of every selectable schema element: all labels plus edge names
    /// that only appear as `EdgeDef`s.
    pub fn element_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.labels.iter().map(|l| l.name.clone()).collect();
        for e in &self.edges {
            if !names.contains(&e.name) {
                names.push(e.name.clone());
            }
        }
        names
    }

    /// Text describing a schema element, used for recall by similarity.
    pub fn element_description(&self, name: &str) -> String {
        let mut text = name.to_string();
        if let Some(l) = self.label(name) {
            text.push(' ');
            text.push_str(&l.description);
            for p in &l.properties {
                text.push(' ');
                text.push_str(&p.name);
                text.push(' ');
                text.push_str(&p.description);
            }
        }
        for e in self.edge_defs(name) {
            text.push(' ');
            text.push_str(&e.description);
        }
        text
    }
}
