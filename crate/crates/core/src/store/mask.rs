//! Company-name masking.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::graph::{normalize, PropertyGraph, STRIPPED_PUNCTUATION};

/// Token substituted for every masked company mention.
pub const PLACEHOLDER: &str = "[COMPANY]";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub surface: String,
    /// Character range `[start, end)` in the unmasked text.
    pub span: (usize, usize),
    /// Set when the surface names exactly one vertex.
    pub resolved_vertex: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedQuery {
    pub masked_text: String,
    pub mentions: Vec<Mention>,
}

impl MaskedQuery {
    pub fn unmasked(text: &str) -> Self {
        MaskedQuery {
            masked_text: text.to_string(),
            mentions: Vec::new(),
        }
    }
}

/// Gazetteer of company names: normalized name to vertex ids.
#[derive(Debug, Clone, Default)]
pub struct Masker {
    names: HashMap<String, Vec<String>>,
    max_chars: usize,
}

impl Masker {
    /// Indexes the `name` of every `company` vertex.
    pub fn from_graph(g: &PropertyGraph) -> Self {
        let mut m = Masker::default();
        for v in g.vertices().iter().filter(|v| v.label == "company") {
            if let Some(name) = v.name() {
                m.insert(name, &v.id);
            }
        }
        m
    }

    pub fn insert(&mut self, name: &str, id: &str) {
        let norm = normalize(name);
        if norm.is_empty() {
            return;
        }
        self.max_chars = self.max_chars.max(name.chars().count() + 2);
        let ids = self.names.entry(norm).or_default();
        if !ids.iter().any(|x| x == id) {
            ids.push(id.to_string());
            ids.sort();
        }
    }

    /// Copy extended with extra `(surface, vertex id)` entries, e.g. names a
    /// session already resolved.
    pub fn with_extra<'a>(&self, extra: impl IntoIterator<Item = (&'a str, &'a str)>) -> Masker {
        let mut m = self.clone();
        for (surface, id) in extra {
            m.insert(surface, id);
        }
        m
    }

    pub fn lookup(&self, surface: &str) -> Option<&[String]> {
        self.names.get(&normalize(surface)).map(Vec::as_slice)
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Replaces every maximal indexed company name with [`PLACEHOLDER`],
    /// scanning left to right and preferring the longest match at each
    /// position.
    pub fn mask(&self, text: &str) -> MaskedQuery {
        let chars: Vec<char> = text.chars().collect();
        let n = chars.len();
        let mut out = String::with_capacity(text.len());
        let mut mentions = Vec::new();
        let mut i = 0;
        while i < n {
            if let Some((end, ids)) = self.longest_at(&chars, i) {
                let surface: String = chars[i..end].iter().collect();
                mentions.push(Mention {
                    surface,
                    span: (i, end),
                    resolved_vertex: if ids.len() == 1 { Some(ids[0].clone()) } else { None },
                });
                out.push_str(PLACEHOLDER);
                i = end;
            } else {
                out.push(chars[i]);
                i += 1;
            }
        }
        MaskedQuery {
            masked_text: out,
            mentions,
        }
    }

    fn longest_at(&self, chars: &[char], start: usize) -> Option<(usize, &Vec<String>)> {
        if self.names.is_empty() || !can_start(chars, start) {
            return None;
        }
        let limit = (start + self.max_chars).min(chars.len());
        for end in (start + 1..=limit).rev() {
            if !can_end(chars, end) {
                continue;
            }
            let span: String = chars[start..end].iter().collect();
            if let Some(ids) = self.names.get(&normalize(&span)) {
                return Some((end, ids));
            }
        }
        None
    }
}

fn word_char(c: char) -> bool {
    c.is_ascii_alphanumeric()
}

fn can_start(chars: &[char], i: usize) -> bool {
    let c = chars[i];
    if !c.is_alphanumeric() {
        return false;
    }
    i == 0 || !(word_char(chars[i - 1]) && word_char(c))
}

fn can_end(chars: &[char], end: usize) -> bool {
    let last = chars[end - 1];
    if last.is_whitespace() || matches!(last, '\'' | '"' | '(' | '（' | '’') {
        return false;
    }
    if !last.is_alphanumeric() && !STRIPPED_PUNCTUATION.contains(&last) {
        return false;
    }
    end == chars.len() || !(word_char(last) && word_char(chars[end]))
}
