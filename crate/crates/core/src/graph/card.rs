use std::fmt::Write;

use super::{GraphError, GraphSchema, LabelDef, LabelKind};

/// Renders the schema slice for `labels` as a prompt-ready text block.
///
/// Vertex labels list their properties (with enum meanings) and every
/// incident edge definition. Edge labels list their endpoints and
/// properties. Names that only exist as `EdgeDef`s are accepted as edges.
/// Pure: identical inputs give byte-identical output.
pub fn schema_card(schema: &GraphSchema, labels: &[String]) -> Result<String, GraphError> {
    let mut out = String::new();
    for (i, name) in labels.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        match schema.label(name) {
            Some(l) if l.kind == LabelKind::Vertex => vertex_block(&mut out, schema, l),
            Some(l) => edge_block(&mut out, schema, name, Some(l)),
            None if schema.is_edge_name(name) => edge_block(&mut out, schema, name, None),
            None => return Err(GraphError::UnknownLabel(name.clone())),
        }
    }
    Ok(out)
}

fn vertex_block(out: &mut String, schema: &GraphSchema, label: &LabelDef) {
    let _ = writeln!(out, "Vertex label `{}`", label.name);
    if !label.description.is_empty() {
        let _ = writeln!(out, "  {}", label.description);
    }
    properties(out, label);
    let incident: Vec<_> = schema.incident_edges(&label.name).collect();
    if !incident.is_empty() {
        out.push_str("  Edges:\n");
        for e in incident {
            let _ = write!(out, "  - ({})-[{}]->({})", e.src_label, e.name, e.dst_label);
            if !e.description.is_empty() {
                let _ = write!(out, ": {}", e.description);
            }
            out.push('\n');
        }
    }
}

fn edge_block(out: &mut String, schema: &GraphSchema, name: &str, label: Option<&LabelDef>) {
    let _ = writeln!(out, "Edge label `{name}`");
    if let Some(l) = label.filter(|l| !l.description.is_empty()) {
        let _ = writeln!(out, "  {}", l.description);
    }
    for e in schema.edge_defs(name) {
        let _ = write!(out, "  Direction: ({})-[{}]->({})", e.src_label, e.name, e.dst_label);
        if !e.description.is_empty() {
            let _ = write!(out, ": {}", e.description);
        }
        out.push('\n');
    }
    if let Some(l) = label {
        properties(out, l);
    }
}

fn properties(out: &mut String, label: &LabelDef) {
    if label.properties.is_empty() {
        return;
    }
    out.push_str("  Properties:\n");
    for p in &label.properties {
        let _ = write!(out, "  - {} ({})", p.name, p.value_kind.as_str());
        if !p.description.is_empty() {
            let _ = write!(out, ": {}", p.description);
        }
        if let Some(values) = &p.enum_values {
            out.push_str(" Values: ");
            for (i, v) in values.iter().enumerate() {
                if i > 0 {
                    out.push_str("; ");
                }
                let _ = write!(out, "'{}' = {}", v.value, v.meaning);
            }
            out.push('.');
        }
        out.push('\n');
    }
}
