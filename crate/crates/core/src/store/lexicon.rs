//! Domain lexical mapping, e.g. "legal representative" and "actual
//! controller" both mean "boss".

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::StoreError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexicalRule {
    pub canonical: String,
    pub phrases: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LexicalMap {
    #[serde(default, rename = "mapping")]
    pub rules: Vec<LexicalRule>,
}

impl LexicalMap {
    pub fn from_toml(text: &str) -> Result<Self, StoreError> {
        toml::from_str(text).map_err(|e| StoreError::Parse {
            file: "lexical map".into(),
            line: 0,
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, StoreError> {
        let text = fs::read_to_string(path).map_err(|e| StoreError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Lowercases `text` and rewrites every mapped phrase to its canonical
    /// term. Longer phrases win; matches respect word boundaries.
    pub fn canonicalize(&self, text: &str) -> String {
        let lower = text.to_lowercase();
        let mut phrases: Vec<(String, &str)> = self
            .rules
            .iter()
            .flat_map(|r| r.phrases.iter().map(move |p| (p.to_lowercase(), r.canonical.as_str())))
            .collect();
        if phrases.is_empty() {
            return lower;
        }
        phrases.sort_by(|a, b| b.0.chars().count().cmp(&a.0.chars().count()).then_with(|| a.0.cmp(&b.0)));
        let chars: Vec<char> = lower.chars().collect();
        let mut out = String::with_capacity(lower.len());
        let mut i = 0;
        'outer: while i < chars.len() {
            if i == 0 || !chars[i - 1].is_alphanumeric() {
                for (p, canon) in &phrases {
                    let pc: Vec<char> = p.chars().collect();
                    let end = i + pc.len();
                    if end <= chars.len()
                        && chars[i..end] == pc[..]
                        && (end == chars.len() || !chars[end].is_alphanumeric() || !pc[pc.len() - 1].is_alphanumeric())
                    {
                        out.push_str(canon);
                        i = end;
                        continue 'outer;
                    }
                }
            }
            out.push(chars[i]);
            i += 1;
        }
        out
    }

    /// One line per rule, for prompts.
    pub fn notes(&self) -> String {
        self.rules
            .iter()
            .map(|r| format!("- {} -> \"{}\"", r.phrases.join(", "), r.canonical))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map() -> LexicalMap {
        LexicalMap::from_toml(
            r#"
[[mapping]]
canonical = "boss"
phrases = ["legal representative", "actual controller", "executives", "main responsible persons"]
"#,
        )
        .unwrap()
    }

    #[test]
    fn rewrites_phrases() {
        let m = map();
        assert_eq!(
            m.canonicalize("Who is the Legal Representative of [COMPANY]?"),
            "who is the boss of [company]?"
        );
        assert_eq!(m.canonicalize("Who are [COMPANY]'s main responsible persons?"), "who are [company]'s boss?");
        // no partial-word rewrites
        assert_eq!(m.canonicalize("nonexecutives"), "nonexecutives");
    }

    #[test]
    fn notes_render() {
        assert!(map().notes().contains("actual controller"));
        assert_eq!(LexicalMap::default().canonicalize("A b"), "a b");
    }
}
