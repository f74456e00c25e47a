//! Label embedding providers.
//!
//! The engine only ever needs one operation: cosine similarity between two
//! label strings. The default provider derives vectors from token counts so
//! the pipeline runs with no model files at all; a file-backed provider can
//! layer real vectors on top and falls back to tokens for unknown labels.

use std::collections::BTreeMap;

use crate::numeric::cosine;

pub trait EmbeddingProvider: Send + Sync {
    /// Cosine similarity in [-1, 1]; identical strings always compare at 1.
    fn cosine(&self, a: &str, b: &str) -> f64;
}

/// Deterministic fallback: lowercase whitespace tokens, L2-normalized counts.
///
/// Token vectors are non-negative, so this provider's range is [0, 1].
#[derive(Debug, Default, Clone, Copy)]
pub struct TokenEmbeddings;

fn token_counts(s: &str) -> BTreeMap<String, f64> {
    let mut counts = BTreeMap::new();
    for token in s.to_lowercase().split_whitespace() {
        *counts.entry(token.to_string()).or_insert(0.0) += 1.0;
    }
    counts
}

impl EmbeddingProvider for TokenEmbeddings {
    fn cosine(&self, a: &str, b: &str) -> f64 {
        if a == b {
            return 1.0;
        }
        let ca = token_counts(a);
        let cb = token_counts(b);
        let mut dot = 0.0;
        let mut na = 0.0;
        let mut nb = 0.0;
        for (token, &x) in &ca {
            na += x * x;
            if let Some(&y) = cb.get(token) {
                dot += x * y;
            }
        }
        for (_, &y) in &cb {
            nb += y * y;
        }
        if na == 0.0 || nb == 0.0 {
            return 0.0;
        }
        dot / (na.sqrt() * nb.sqrt())
    }
}

/// Dense vectors loaded from a table, with token fallback when either label
/// is missing. Table rows are expected to be unit vectors (the loader
/// normalizes them).
#[derive(Debug, Clone, Default)]
pub struct FileEmbeddings {
    table: BTreeMap<String, Vec<f64>>,
    fallback: TokenEmbeddings,
}

impl FileEmbeddings {
    pub fn new(table: BTreeMap<String, Vec<f64>>) -> Self {
        FileEmbeddings {
            table,
            fallback: TokenEmbeddings,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl EmbeddingProvider for FileEmbeddings {
    fn cosine(&self, a: &str, b: &str) -> f64 {
        if a == b {
            return 1.0;
        }
        match (self.table.get(a), self.table.get(b)) {
            (Some(va), Some(vb)) => cosine(va, vb),
            _ => self.fallback.cosine(a, b),
        }
    }
}

/// Fixed pairwise similarities; anything unpinned compares at 0 (or 1 for
/// identical strings). Intended for experiments and tests that need exact
/// similarity values.
#[derive(Debug, Default, Clone)]
pub struct PinnedCosine {
    pairs: BTreeMap<(String, String), f64>,
}

impl PinnedCosine {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn pin(mut self, a: &str, b: &str, value: f64) -> Self {
        self.pairs.insert((a.to_string(), b.to_string()), value);
        self
    }
}

impl EmbeddingProvider for PinnedCosine {
    fn cosine(&self, a: &str, b: &str) -> f64 {
        if a == b {
            return 1.0;
        }
        let key = (a.to_string(), b.to_string());
        let rev = (b.to_string(), a.to_string());
        self.pairs
            .get(&key)
            .or_else(|| self.pairs.get(&rev))
            .copied()
            .unwrap_or(0.0)
    }
}

/// Provider backed by the table carried inside a graph index, if any.
pub fn for_graph(graph: &crate::graph::KnowledgeGraph) -> Box<dyn EmbeddingProvider> {
    if graph.embeddings().is_empty() {
        Box::new(TokenEmbeddings)
    } else {
        Box::new(FileEmbeddings::new(graph.embeddings().clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_labels_compare_at_exactly_one() {
        let t = TokenEmbeddings;
        assert_eq!(t.cosine("treats", "treats"), 1.0);
        assert_eq!(t.cosine("", ""), 1.0);
    }

    #[test]
    fn token_overlap_hand_values() {
        let t = TokenEmbeddings;
        // {coughs, up, blood} x {blood, in, cough}: one shared token
        let c = t.cosine("coughs up blood", "blood in cough");
        assert!((c - 1.0 / 3.0).abs() < 1e-12);
        // case-insensitive
        assert_eq!(t.cosine("Treats", "treats"), 1.0);
        assert_eq!(t.cosine("treats", "prevents"), 0.0);
        // repeated tokens weight the vector
        let c = t.cosine("very very bad", "very good");
        // dot = 2*1, norms sqrt(5), sqrt(2)
        assert!((c - 2.0 / (5.0f64.sqrt() * 2.0f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn token_range_is_non_negative(){
        let t = TokenEmbeddings;
        for (a, b) in [("a b", "b c"), ("x", "y"), ("p q r", "p q r s")] {
            let c = t.cosine(a, b);
            assert!((0.0..=1.0).contains(&c));
        }
    }

    #[test]
    fn file_vectors_can_be_negative() {
        let mut table = BTreeMap::new();
        table.insert("treats".to_string(), vec![1.0, 0.0]);
        table.insert("worsens".to_string(), vec![-1.0, 0.0]);
        table.insert("prevents".to_string(), vec![0.0, 1.0]);
        let f = FileEmbeddings::new(table);
        assert_eq!(f.cosine("treats", "worsens"), -1.0);
        assert_eq!(f.cosine("treats", "prevents"), 0.0);
        assert_eq!(f.cosine("treats", "treats"), 1.0);
    }

    #[test]
    fn missing_rows_fall_back_to_tokens() {
        let mut table = BTreeMap::new();
        table.insert("treats".to_string(), vec![1.0, 0.0]);
        let f = FileEmbeddings::new(table);
        // "is treatment for" is not in the table: token comparison applies
        let expect = TokenEmbeddings.cosine("treats illness", "treats symptoms");
        assert_eq!(f.cosine("treats illness", "treats symptoms"), expect);
    }

    #[test]
    fn pinned_pairs_are_symmetric() {
        let p = PinnedCosine::new().pin("a", "b", 0.7);
        assert_eq!(p.cosine("a", "b"), 0.7);
        assert_eq!(p.cosine("b", "a"), 0.7);
        assert_eq!(p.cosine("a", "c"), 0.0);
        assert_eq!(p.cosine("c", "c"), 1.0);
    }
}
