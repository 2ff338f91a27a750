//! Prompt templates with `{{slot}}` markers and a front-matter header.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::LlmError;

pub const TEMPLATE_NAMES: [&str; 6] = [
    "anaphora",
    "decision",
    "schema_link",
    "gremlin_gen",
    "reflection",
    "summarize",
];

const BUILTIN: [(&str, &str); 6] = [
    ("anaphora", include_str!("../../prompts/anaphora.txt")),
    ("decision", include_str!("../../prompts/decision.txt")),
    ("schema_link", include_str!("../../prompts/schema_link.txt")),
    ("gremlin_gen", include_str!("../../prompts/gremlin_gen.txt")),
    ("reflection", include_str!("../../prompts/reflection.txt")),
    ("summarize", include_str!("../../prompts/summarize.txt")),
];

/// Rendered in place of an empty slot value so no section is left blank.
pub const EMPTY_SLOT: &str = "(none)";

#[derive(Debug, Clone, PartialEq)]
pub struct PromptTemplate {
    pub name: String,
    pub required_slots: Vec<String>,
    pub template: String,
}

impl PromptTemplate {
    /// Parses a template file:
    ///
    /// ```text
    /// ---
    /// name: summarize
    /// required_slots: question, results
    /// ---
    /// body with {{question}} ...
    /// ```
    pub fn parse(text: &str) -> Result<Self, LlmError> {
        let bad = |m: &str| LlmError::Template(m.to_string());
        let text = text.trim_start_matches('\u{feff}');
        let rest = text.strip_prefix("---").ok_or_else(|| bad("missing front-matter"))?;
        let end = rest.find("\n---").ok_or_else(|| bad("unterminated front-matter"))?;
        let header = &rest[..end];
        let body = rest[end + 4..].trim_start_matches(['\r', '\n']);
        let mut name = None;
        let mut slots = Vec::new();
        for line in header.lines() {
            let Some((k, v)) = line.split_once(':') else { continue };
            match k.trim() {
                "name" => name = Some(v.trim().to_string()),
                "required_slots" => {
                    slots = v
                        .split(',')
                        .map(|s| s.trim().to_string())
                        .filter(|s| !s.is_empty())
                        .collect()
                }
                _ => {}
            }
        }
        let t = PromptTemplate {
            name: name.ok_or_else(|| bad("front-matter lacks name"))?,
            required_slots: slots,
            template: body.to_string(),
        };
        for marker in t.markers() {
            if !t.required_slots.contains(&marker) {
                return Err(LlmError::Template(format!(
                    "{}: marker {{{{{marker}}}}} is not a required slot",
                    t.name
                )));
            }
        }
        Ok(t)
    }

    fn markers(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut rest = self.template.as_str();
        while let Some(start) = rest.find("{{") {
            let after = &rest[start + 2..];
            match after.find("}}") {
                Some(end) => {
                    out.push(after[..end].trim().to_string());
                    rest = &after[end + 2..];
                }
                None => break,
            }
        }
        out
    }

    /// Substitutes every marker. Values are inserted verbatim and never
    /// rescanned for markers.
    pub fn render(&self, slots: &BTreeMap<&str, String>) -> Result<String, LlmError> {
        for s in &self.required_slots {
            if !slots.contains_key(s.as_str()) {
                return Err(LlmError::MissingSlot(s.clone()));
            }
        }
        let mut out = String::with_capacity(self.template.len() + 256);
        let mut rest = self.template.as_str();
        while let Some(start) = rest.find("{{") {
            out.push_str(&rest[..start]);
            let after = &rest[start + 2..];
            let Some(end) = after.find("}}") else {
                out.push_str(&rest[start..]);
                rest = "";
                break;
            };
            let key = after[..end].trim();
            let value = slots.get(key).ok_or_else(|| LlmError::MissingSlot(key.to_string()))?;
            if value.trim().is_empty() {
                out.push_str(EMPTY_SLOT);
            } else {
                out.push_str(value);
            }
            rest = &after[end + 2..];
        }
        out.push_str(rest);
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptCatalog {
    templates: BTreeMap<String, PromptTemplate>,
}

impl PromptCatalog {
    /// The templates compiled into the binary.
    pub fn builtin() -> Self {
        let templates = BUILTIN
            .iter()
            .map(|(name, text)| {
                let t = PromptTemplate::parse(text).expect("builtin template parses");
                debug_assert_eq!(&t.name, name);
                (t.name.clone(), t)
            })
            .collect();
        PromptCatalog { templates }
    }

    /// Loads `*.txt` templates from `dir`; names missing there fall back to
    /// the builtin versions.
    pub fn load_dir(dir: &Path) -> Result<Self, LlmError> {
        let mut cat = Self::builtin();
        let entries = fs::read_dir(dir).map_err(|e| LlmError::Template(format!("{}: {e}", dir.display())))?;
        let mut paths: Vec<_> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
        paths.sort();
        for p in paths {
            if p.extension().and_then(|e| e.to_str()) != Some("txt") {
                continue;
            }
            let text = fs::read_to_string(&p).map_err(|e| LlmError::Template(format!("{}: {e}", p.display())))?;
            let t = PromptTemplate::parse(&text).map_err(|e| LlmError::Template(format!("{}: {e}", p.display())))?;
            cat.templates.insert(t.name.clone(), t);
        }
        Ok(cat)
    }

    pub fn get(&self, name: &str) -> Option<&PromptTemplate> {
        self.templates.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }

    pub fn render(&self, name: &str, slots: &BTreeMap<&str, String>) -> Result<String, LlmError> {
        self.get(name)
            .ok_or_else(|| LlmError::UnknownTemplate(name.to_string()))?
            .render(slots)
    }
}
