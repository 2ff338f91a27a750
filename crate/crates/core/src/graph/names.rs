//! Entity-name index: exact lookup on normalized names plus trigram recall.

use std::collections::{BTreeSet, HashMap};

/// Characters removed by [`normalize`]. Each is replaced by a space before
/// whitespace is collapsed, so "Co.,Ltd." and "Co., Ltd." agree.
pub const STRIPPED_PUNCTUATION: &[char] = &['.', ',', '(', ')', '（', '）', '·', '\'', '"'];

/// Trim, case-fold, strip punctuation and collapse internal whitespace.
/// Idempotent.
pub fn normalize(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    let mut pending_space = false;
    for ch in name.chars() {
        if ch.is_whitespace() || STRIPPED_PUNCTUATION.contains(&ch) {
            pending_space = !out.is_empty();
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        out.extend(ch.to_lowercase());
    }
    out
}

/// Character trigrams of an already-normalized string. Strings shorter than
/// three characters contribute themselves as a single gram.
pub fn trigrams(normalized: &str) -> BTreeSet<String> {
    let chars: Vec<char> = normalized.chars().collect();
    let mut grams = BTreeSet::new();
    if chars.is_empty() {
        return grams;
    }
    if chars.len() < 3 {
        grams.insert(normalized.to_string());
        return grams;
    }
    for w in chars.windows(3) {
        grams.insert(w.iter().collect());
    }
    grams
}

pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NameIndex {
    exact: HashMap<String, Vec<String>>,
    trigrams: HashMap<String, BTreeSet<String>>,
    grams_by_id: HashMap<String, BTreeSet<String>>,
    max_name_chars: usize,
}

impl NameIndex {
    /// Builds the index from `(vertex id, name)` pairs.
    pub fn build<'a>(entries: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let mut idx = NameIndex::default();
        for (id, name) in entries {
            let norm = normalize(name);
            if norm.is_empty() {
                continue;
            }
            idx.max_name_chars = idx.max_name_chars.max(name.chars().count());
            let grams = trigrams(&norm);
            for g in &grams {
                idx.trigrams
                    .entry(g.clone())
                    .or_default()
                    .insert(id.to_string());
            }
            idx.grams_by_id.insert(id.to_string(), grams);
            idx.exact.entry(norm).or_default().push(id.to_string());
        }
        for ids in idx.exact.values_mut() {
            ids.sort();
            ids.dedup();
        }
        idx
    }

    pub fn len(&self) -> usize {
        self.grams_by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grams_by_id.is_empty()
    }

    /// Longest indexed raw name, in characters. Bounds mention scanning.
    pub fn max_name_chars(&self) -> usize {
        self.max_name_chars
    }

    /// Ids whose normalized name equals the normalized input, ascending.
    pub fn lookup_exact(&self, name: &str) -> Vec<String> {
        self.exact.get(&normalize(name)).cloned().unwrap_or_default()
    }

    pub fn lookup_normalized(&self, normalized: &str) -> Option<&[String]> {
        self.exact.get(normalized).map(Vec::as_slice)
    }

    /// Trigram-Jaccard recall, sorted by score descending then id ascending.
    pub fn lookup_fuzzy(
        &self,
        fragment: &str,
        threshold: f64,
        limit: usize,
    ) -> Result<Vec<(String, f64)>, super::GraphError> {
        if !(threshold > 0.0 && threshold <= 1.0) {
            return Err(super::GraphError::InvalidThreshold(threshold));
        }
        let grams = trigrams(&normalize(fragment));
        let mut candidates: BTreeSet<&String> = BTreeSet::new();
        for g in &grams {
            if let Some(ids) = self.trigrams.get(g) {
                candidates.extend(ids.iter());
            }
        }
        let mut scored: Vec<(String, f64)> = candidates
            .into_iter()
            .map(|id| (id.clone(), jaccard(&grams, &self.grams_by_id[id])))
            .filter(|(_, s)| *s >= threshold)
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        scored.truncate(limit);
        Ok(scored)
    }

    /// Ids whose normalized name starts with the normalized fragment at a
    /// word boundary ("baidu" finds "baidu netcom ..."), ascending.
    pub fn lookup_prefix(&self, fragment: &str) -> Vec<String> {
        let frag = normalize(fragment);
        if frag.is_empty() {
            return Vec::new();
        }
        let mut ids: Vec<String> = self
            .exact
            .iter()
            .filter(|(name, _)| {
                name.len() > frag.len()
                    && name.starts_with(&frag)
                    && name[frag.len()..].starts_with(' ')
            })
            .flat_map(|(_, ids)| ids.iter().cloned())
            .collect();
        ids.sort();
        ids.dedup();
        ids
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalization_matches_company_suffix_variants() {
        assert_eq!(normalize("  Acme   Co., Ltd. "), "acme co ltd");
        assert_eq!(normalize("Acme Co Ltd"), "acme co ltd");
        assert_eq!(normalize("Acme Co.,Ltd."), "acme co ltd");
        assert_eq!(normalize("World Kitchen (Shanghai) Co."), "world kitchen shanghai co");
        assert_eq!(normalize("百度（北京）"), "百度 北京");
    }

    #[test]
    fn jaccard_hand_values() {
        // {acm} vs {acm, cme}
        let a = trigrams(&normalize("Acm"));
        let b = trigrams(&normalize("Acme"));
        assert_eq!(jaccard(&a, &b), 0.5);
        // "acm corp" has 6 grams, "acme corp" 7, 4 shared -> 4/9
        let c = trigrams(&normalize("Acm Corp"));
        let d = trigrams(&normalize("Acme Corp"));
        assert!((jaccard(&c, &d) - 4.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn fuzzy_threshold_bounds() {
        let idx = NameIndex::build([("c1", "Acme")]);
        assert!(idx.lookup_fuzzy("Acm", 0.0, 10).is_err());
        assert!(idx.lookup_fuzzy("Acm", 1.5, 10).is_err());
        let hits = idx.lookup_fuzzy("Acm", 0.2, 10).unwrap();
        assert_eq!(hits, vec![("c1".to_string(), 0.5)]);
        assert_eq!(idx.lookup_fuzzy("ACME", 1.0, 10).unwrap()[0].1, 1.0);
        assert!(idx.lookup_fuzzy("Acm", 1.0, 10).unwrap().is_empty());
    }

    #[test]
    fn exact_duplicates_are_id_sorted() {
        let idx = NameIndex::build([("z9", "Acme Ltd"), ("a1", "ACME, Ltd."), ("m", "Other")]);
        assert_eq!(idx.lookup_exact("acme ltd"), vec!["a1", "z9"]);
        assert!(idx.lookup_exact("nobody").is_empty());
    }

    #[test]
    fn prefix_recall_respects_word_boundaries() {
        let idx = NameIndex::build([
            ("b1", "Baidu Netcom Technology Co., Ltd."),
            ("b2", "Baidu Online Network Technology Co., Ltd."),
            ("b3", "Baiduxyz Ltd"),
        ]);
        assert_eq!(idx.lookup_prefix("Baidu"), vec!["b1", "b2"]);
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in "\\PC{0,40}") {
            let once = normalize(&s);
            prop_assert_eq!(normalize(&once), once);
        }

        #[test]
        fn exact_hits_are_fuzzy_hits(names in proptest::collection::vec("[A-Za-z .,()]{1,20}", 1..15), t in 0.01f64..=1.0) {
            let entries: Vec<(String, String)> = names.iter().enumerate()
                .map(|(i, n)| (format!("v{i:02}"), n.clone())).collect();
            let idx = NameIndex::build(entries.iter().map(|(a, b)| (a.as_str(), b.as_str())));
            for (_, name) in &entries {
                let exact = idx.lookup_exact(name);
                let fuzzy: Vec<String> = idx.lookup_fuzzy(name, t, usize::MAX).unwrap()
                    .into_iter().map(|(id, _)| id).collect();
                for id in exact {
                    prop_assert!(fuzzy.contains(&id));
                }
            }
        }
    }
}
