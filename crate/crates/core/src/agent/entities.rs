//! Mention detection, name resolution and candidate selection.

use serde::{Deserialize, Serialize};

use crate::graph::{normalize, trigrams, jaccard, PropertyGraph};
use crate::store::Masker;

/// Shown to the user when a mention is ambiguous.
pub const MAX_CANDIDATES: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: String,
    pub name: String,
    pub label: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedEntity {
    pub surface: String,
    pub id: String,
    pub name: String,
    pub label: String,
}

/// A surface form found in the question with its character span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Span {
    pub surface: String,
    pub start: usize,
    pub end: usize,
    /// Ids from the gazetteer when the span is an indexed company name.
    pub gazetteer: Option<Vec<String>>,
}

const LEADING_SKIP: &[&str] = &[
    "who", "what", "which", "when", "where", "why", "how", "is", "are", "was", "were", "does", "do",
    "did", "the", "tell", "list", "show", "give", "please", "can", "could", "i", "find", "in", "and",
    "a", "an", "has", "have", "whose", "if", "any",
];
const CONNECTORS: &[&str] = &["of", "and", "&", "de", "for"];

/// Gazetteer hits first, then runs of capitalized words the gazetteer
/// missed ("Baidu's", "Acm Corp"). Spans never overlap and come back in
/// text order.
pub(crate) fn find_mentions(text: &str, masker: &Masker) -> Vec<Span> {
    let masked = masker.mask(text);
    let mut spans: Vec<Span> = masked
        .mentions
        .iter()
        .map(|m| Span {
            surface: m.surface.clone(),
            start: m.span.0,
            end: m.span.1,
            gazetteer: masker.lookup(&m.surface).map(<[String]>::to_vec),
        })
        .collect();
    for s in capitalized_runs(text) {
        if !spans.iter().any(|g| s.start < g.end && g.start < s.end) {
            spans.push(s);
        }
    }
    spans.sort_by_key(|s| s.start);
    spans
}

fn capitalized_runs(text: &str) -> Vec<Span> {
    let chars: Vec<char> = text.chars().collect();
    // whitespace-separated tokens as char ranges
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && !chars[i].is_whitespace() {
            i += 1;
        }
        tokens.push((start, i));
    }
    let mut out = Vec::new();
    let mut run: Vec<(usize, usize)> = Vec::new();
    let flush = |run: &mut Vec<(usize, usize)>, out: &mut Vec<Span>| {
        while run.last().is_some_and(|&(s, e)| is_connector(&chars[s..e])) {
            run.pop();
        }
        while run.first().is_some_and(|&(s, e)| is_skip(&chars[s..e])) {
            run.remove(0);
        }
        if let (Some(&(s, _)), Some(&(_, e))) = (run.first(), run.last()) {
            let e = trim_end(&chars, s, e);
            if e > s {
                out.push(Span {
                    surface: chars[s..e].iter().collect(),
                    start: s,
                    end: e,
                    gazetteer: None,
                });
            }
        }
        run.clear();
    };
    for &(s, e) in &tokens {
        let tok = &chars[s..e];
        let capital = tok.iter().find(|c| c.is_alphanumeric()).is_some_and(|c| c.is_uppercase());
        if capital || (!run.is_empty() && is_connector(tok)) {
            run.push((s, e));
            if ends_run(tok) {
                flush(&mut run, &mut out);
            }
        } else {
            flush(&mut run, &mut out);
        }
    }
    flush(&mut run, &mut out);
    out
}

fn word(tok: &[char]) -> String {
    tok.iter()
        .filter(|c| c.is_alphanumeric() || **c == '&')
        .collect::<String>()
        .to_lowercase()
}

fn is_connector(tok: &[char]) -> bool {
    CONNECTORS.contains(&word(tok).as_str())
}

fn is_skip(tok: &[char]) -> bool {
    LEADING_SKIP.contains(&word(tok).as_str())
}

fn ends_run(tok: &[char]) -> bool {
    let s: String = tok.iter().collect();
    s.ends_with('?') || s.ends_with('!') || s.ends_with("'s") || s.ends_with("’s") || s.ends_with(';')
}

/// Drops trailing sentence punctuation and a possessive suffix.
fn trim_end(chars: &[char], start: usize, mut end: usize) -> usize {
    loop {
        let before = end;
        while end > start && matches!(chars[end - 1], '?' | '!' | ',' | ';' | ':' | '"') {
            end -= 1;
        }
        if end >= start + 2 && chars[end - 1] == 's' && matches!(chars[end - 2], '\'' | '’') {
            end -= 2;
        }
        if end == before {
            return end;
        }
    }
}

/// How one mention was settled.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Lookup {
    Unique(String),
    Ambiguous(Vec<Candidate>),
    NotFound,
}

/// Exact name, then word-boundary prefix, then trigram fuzzy search.
pub(crate) fn lookup(graph: &PropertyGraph, span: &Span, fuzzy_threshold: f64) -> Lookup {
    let ids = match &span.gazetteer {
        Some(ids) => ids.clone(),
        None => graph.lookup_exact(&span.surface),
    };
    if !ids.is_empty() {
        return settle(graph, ids.into_iter().map(|id| (id, 1.0)).collect());
    }
    let frag = normalize(&span.surface);
    let prefix = graph.names().lookup_prefix(&span.surface);
    if !prefix.is_empty() {
        let grams = trigrams(&frag);
        let scored = prefix
            .into_iter()
            .map(|id| {
                let name = normalize(&graph.display_name(&id));
                let s = jaccard(&grams, &trigrams(&name));
                (id, s)
            })
            .collect();
        return settle(graph, scored);
    }
    match graph.lookup_fuzzy(&span.surface, fuzzy_threshold, MAX_CANDIDATES) {
        Ok(hits) if !hits.is_empty() => settle(graph, hits),
        Ok(_) => Lookup::NotFound,
        Err(e) => {
            log::warn!("fuzzy lookup failed: {e}");
            Lookup::NotFound
        }
    }
}

fn settle(graph: &PropertyGraph, mut scored: Vec<(String, f64)>) -> Lookup {
    if scored.len() == 1 {
        return Lookup::Unique(scored.pop().unwrap().0);
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(MAX_CANDIDATES);
    Lookup::Ambiguous(
        scored
            .into_iter()
            .map(|(id, score)| Candidate {
                name: graph.display_name(&id),
                label: graph.vertex(&id).map(|v| v.label.clone()).unwrap_or_default(),
                id,
                score,
            })
            .collect(),
    )
}

const ORDINALS: &[(&str, usize)] = &[
    ("first", 0), ("1st", 0), ("one", 0),
    ("second", 1), ("2nd", 1), ("two", 1),
    ("third", 2), ("3rd", 2), ("three", 2),
    ("fourth", 3), ("4th", 3), ("four", 3),
    ("fifth", 4), ("5th", 4), ("five", 4),
];

/// Interprets a follow-up message as a choice among `candidates`: an
/// ordinal ("the first one"), a 1-based number, a candidate id or a
/// (partial) candidate name.
pub fn parse_selection(text: &str, candidates: &[Candidate]) -> Option<usize> {
    let trimmed = text.trim();
    if let Some(i) = candidates.iter().position(|c| c.id == trimmed) {
        return Some(i);
    }
    let norm = normalize(trimmed);
    let exact: Vec<usize> = (0..candidates.len())
        .filter(|&i| normalize(&candidates[i].name) == norm)
        .collect();
    if exact.len() == 1 {
        return Some(exact[0]);
    }
    let words: Vec<String> = trimmed
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect();
    if words.len() <= 4 {
        for w in &words {
            if w == "last" {
                return candidates.len().checked_sub(1);
            }
            if let Some(&(_, i)) = ORDINALS.iter().find(|(o, _)| o == w) {
                return (i < candidates.len()).then_some(i);
            }
            if let Ok(n) = w.parse::<usize>() {
                return (n >= 1 && n <= candidates.len()).then(|| n - 1);
            }
        }
    }
    if norm.chars().count() >= 3 {
        let partial: Vec<usize> = (0..candidates.len())
            .filter(|&i| normalize(&candidates[i].name).contains(&norm))
            .collect();
        if partial.len() == 1 {
            return Some(partial[0]);
        }
    }
    None
}
