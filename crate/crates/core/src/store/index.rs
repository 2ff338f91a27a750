//! Exact in-memory vector index.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::embed::{cosine, EmbeddingVector};
use super::{MatchStrategy, StoreError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry<F> {
    pub id: String,
    pub vector: EmbeddingVector<F>,
}

/// Entries are kept sorted by id, so build order never matters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorIndex<F> {
    pub strategy: MatchStrategy,
    pub dims: usize,
    pub entries: Vec<IndexEntry<F>>,
}

/// Heap item ordered so the heap top is the current worst hit.
struct Hit<F> {
    score: F,
    pos: usize,
}

impl<F: Float> PartialEq for Hit<F> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<F: Float> Eq for Hit<F> {}

impl<F: Float> PartialOrd for Hit<F> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<F: Float> Ord for Hit<F> {
    // "greater" = worse: lower score, then larger id position
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .score
            .partial_cmp(&self.score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| self.pos.cmp(&other.pos))
    }
}

impl<F: Float> VectorIndex<F> {
    pub fn new(strategy: MatchStrategy, dims: usize) -> Self {
        VectorIndex {
            strategy,
            dims,
            entries: Vec::new(),
        }
    }

    pub fn from_entries(
        strategy: MatchStrategy,
        dims: usize,
        entries: impl IntoIterator<Item = (String, EmbeddingVector<F>)>,
    ) -> Result<Self, StoreError> {
        let mut idx = Self::new(strategy, dims);
        for (id, vector) in entries {
            idx.insert(id, vector)?;
        }
        Ok(idx)
    }

    /// Inserts or replaces the entry for `id`.
    pub fn insert(&mut self, id: String, vector: EmbeddingVector<F>) -> Result<(), StoreError> {
        if vector.dims() != self.dims {
            return Err(StoreError::Dims {
                expected: self.dims,
                got: vector.dims(),
            });
        }
        match self.entries.binary_search_by(|e| e.id.as_str().cmp(&id)) {
            Ok(pos) => self.entries[pos].vector = vector,
            Err(pos) => self.entries.insert(pos, IndexEntry { id, vector }),
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.binary_search_by(|e| e.id.as_str().cmp(id)).is_ok()
    }

    /// The `k` best entries by cosine, ties by id ascending.
    pub fn top_k(
        &self,
        query: &EmbeddingVector<F>,
        k: usize,
        strategy: MatchStrategy,
    ) -> Result<Vec<(String, F)>, StoreError> {
        if strategy != self.strategy {
            return Err(StoreError::StrategyMismatch {
                index: self.strategy,
                query: strategy,
            });
        }
        if k == 0 {
            return Ok(Vec::new());
        }
        let mut heap: BinaryHeap<Hit<F>> = BinaryHeap::with_capacity(k + 1);
        for (pos, e) in self.entries.iter().enumerate() {
            let hit = Hit {
                score: cosine(query, &e.vector),
                pos,
            };
            if heap.len() < k {
                heap.push(hit);
            } else if hit < *heap.peek().unwrap() {
                heap.pop();
                heap.push(hit);
            }
        }
        Ok(heap
            .into_sorted_vec()
            .into_iter()
            .map(|h| (self.entries[h.pos].id.clone(), h.score))
            .collect())
    }

    pub fn to_json(&self) -> String
    where
        F: Serialize,
    {
        serde_json::to_string(self).expect("index serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, StoreError>
    where
        F: for<'de> Deserialize<'de>,
    {
        let mut idx: Self = serde_json::from_str(text).map_err(|e| StoreError::Parse {
            file: "index dump".into(),
            line: e.line(),
            message: e.to_string(),
        })?;
        let entries = std::mem::take(&mut idx.entries);
        for e in entries {
            idx.insert(e.id, e.vector)?;
        }
        Ok(idx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> EmbeddingVector<f64> {
        EmbeddingVector::from_raw(x.to_vec()).unwrap()
    }

    #[test]
    fn ties_break_by_id() {
        let idx = VectorIndex::from_entries(
            MatchStrategy::FullMask,
            2,
            vec![
                ("b".to_string(), v(&[1.0, 0.0])),
                ("a".to_string(), v(&[1.0, 0.0])),
                ("c".to_string(), v(&[0.0, 1.0])),
            ],
        )
        .unwrap();
        let hits = idx.top_k(&v(&[1.0, 0.1]), 2, MatchStrategy::FullMask).unwrap();
        let ids: Vec<_> = hits.iter().map(|h| h.0.as_str()).collect();
        assert_eq!(ids, vec!["a", "b"]);
        assert!(idx.top_k(&v(&[1.0, 0.0]), 5, MatchStrategy::RawMatch).is_err());
        assert_eq!(idx.top_k(&v(&[1.0, 0.0]), 9, MatchStrategy::FullMask).unwrap().len(), 3);
    }

    #[test]
    fn dump_restore() {
        let idx = VectorIndex::from_entries(MatchStrategy::RepMask, 2, vec![("x".to_string(), v(&[3.0, 4.0]))]).unwrap();
        let text = idx.to_json();
        assert!(text.starts_with("{\"strategy\":\"RepMask\",\"dims\":2,\"entries\":[{\"id\":\"x\",\"vector\":["));
        assert_eq!(VectorIndex::<f64>::from_json(&text).unwrap(), idx);
    }
}
