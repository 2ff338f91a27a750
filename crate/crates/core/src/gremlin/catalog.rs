//! Operator complexity table.

use serde::Serialize;

use super::ast::{Op, SourceKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExecClass {
    Executable,
    ParseOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub points: u32,
    pub class: ExecClass,
}

const fn entry(name: &'static str, points: u32) -> CatalogEntry {
    CatalogEntry {
        name,
        points,
        class: ExecClass::Executable,
    }
}

const fn parse_only(name: &'static str, points: u32) -> CatalogEntry {
    CatalogEntry {
        name,
        points,
        class: ExecClass::ParseOnly,
    }
}

/// Basic operations score 1, simple aggregations 2, advanced operations 3.
/// `hasLabel` is scored with the `has` family.
pub const OPERATOR_CATALOG: [CatalogEntry; 30] = [
    entry("has", 1),
    entry("out", 1),
    entry("in", 1),
    entry("values", 1),
    entry("by", 1),
    entry("label", 1),
    entry("id", 1),
    entry("V()", 1),
    entry("E()", 1),
    entry("hasLabel", 1),
    entry("groupCount", 2),
    entry("fold", 2),
    entry("select", 2),
    entry("order", 2),
    entry("dedup", 2),
    entry("count", 2),
    entry("sum", 2),
    entry("min", 2),
    entry("max", 2),
    entry("mean", 2),
    entry("repeat", 3),
    entry("times", 3),
    entry("where", 3),
    entry("path", 3),
    entry("choose", 3),
    entry("coalesce", 3),
    entry("union", 3),
    entry("project", 3),
    parse_only("branch", 3),
    parse_only("match", 3),
];

pub fn lookup(name: &str) -> Option<&'static CatalogEntry> {
    OPERATOR_CATALOG.iter().find(|e| e.name == name)
}

pub fn op_entry(op: Op) -> Option<&'static CatalogEntry> {
    lookup(op.as_str())
}

pub fn source_entry(kind: SourceKind) -> &'static CatalogEntry {
    match kind {
        SourceKind::V => lookup("V()").unwrap(),
        SourceKind::E => lookup("E()").unwrap(),
    }
}

/// Steps that can be parsed and scored but not executed.
pub fn is_parse_only(op: Op) -> bool {
    op_entry(op).is_some_and(|e| e.class == ExecClass::ParseOnly)
}
