//! Claim scoring from evidence-path structure.
//!
//! A claim's score is computed entirely from the graph: how well the path's
//! relation labels align with the claimed predicate (embedding cosine, with
//! reversed steps compared as "inverse of <label>"), discounted by a penalty
//! that grows with hub-like intermediate nodes (exponential in PageRank,
//! scaled by alpha) and with steps whose relations rarely co-occur with the
//! mapped predicate. Scores always land in [-1, 1]; negative values mean the
//! evidence points the other way.

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingProvider;
use crate::evidence::{shortest_paths, Direction, EvidencePath, PathCaps};
use crate::graph::KnowledgeGraph;
use crate::numeric::mean;

/// Claimed predicate mapped onto the graph's relation vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredicateMapping {
    pub label: String,
    pub cosine: f64,
    /// Set when no vocabulary entry had positive similarity; the mapping
    /// then falls back to the lexicographically first label.
    pub low_confidence: bool,
}

/// Picks the vocabulary relation most similar to the claimed predicate.
/// Ties keep the lexicographically first label. `None` only on an empty
/// vocabulary.
pub fn map_predicate(
    predicate: &str,
    graph: &KnowledgeGraph,
    embeddings: &dyn EmbeddingProvider,
) -> Option<PredicateMapping> {
    let vocab = graph.relation_vocabulary();
    if vocab.is_empty() {
        return None;
    }
    let mut best_ix = 0usize;
    let mut best = f64::NEG_INFINITY;
    for (i, label) in vocab.iter().enumerate() {
        let c = embeddings.cosine(predicate, label);
        if c > best {
            best = c;
            best_ix = i;
        }
    }
    if best <= 0.0 {
        return Some(PredicateMapping {
            label: vocab[0].clone(),
            cosine: embeddings.cosine(predicate, &vocab[0]),
            low_confidence: true,
        });
    }
    Some(PredicateMapping {
        label: vocab[best_ix].clone(),
        cosine: best,
        low_confidence: false,
    })
}

/// Label a step presents to the similarity comparison; reversed traversal
/// prefixes the relation with "inverse of".
pub fn step_label(relation: &str, direction: Direction) -> String {
    match direction {
        Direction::Forward => relation.to_string(),
        Direction::Reversed => format!("inverse of {relation}"),
    }
}

/// Mean cosine between each step's label and the claimed predicate.
pub fn relation_similarity(
    path: &EvidencePath,
    predicate: &str,
    embeddings: &dyn EmbeddingProvider,
) -> (f64, Vec<f64>) {
    let per_step: Vec<f64> = path
        .relations
        .iter()
        .zip(&path.directions)
        .map(|(r, d)| embeddings.cosine(&step_label(r, *d), predicate))
        .collect();
    (mean(&per_step).unwrap_or(0.0), per_step)
}

/// Everything that went into one path's weight, kept for explainability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathScoreBreakdown {
    pub similarity: f64,
    pub per_step_cosine: Vec<f64>,
    /// Affinity between each step's raw relation label and the mapped
    /// predicate label.
    pub per_step_affinity: Vec<f64>,
    /// PageRank of each intermediate node, endpoints excluded.
    pub intermediate_centrality: Vec<f64>,
    /// Penalty denominator; always >= 1.
    pub bracket: f64,
    pub weight: f64,
}

/// Scores one path against the (raw, mapped) predicate pair.
///
/// The weight is `similarity / bracket` with
/// `bracket = sum_j exp(alpha * pr(intermediate_j)) / affinity(step_{j-1})
///          + 1 / affinity(step_last)`;
/// a single-step path reduces to `similarity * affinity(step)` exactly.
pub fn score_path(
    graph: &KnowledgeGraph,
    path: &EvidencePath,
    mapped_label: &str,
    predicate: &str,
    embeddings: &dyn EmbeddingProvider,
) -> PathScoreBreakdown {
    let (similarity, per_step_cosine) = relation_similarity(path, predicate, embeddings);
    let per_step_affinity: Vec<f64> = path
        .relations
        .iter()
        .map(|r| graph.affinity(r, mapped_label))
        .collect();
    let steps = path.relations.len();
    let alpha = graph.alpha();

    let mut intermediate_centrality = Vec::with_capacity(steps.saturating_sub(1));
    let mut bracket = 1.0 / per_step_affinity[steps - 1];
    for j in 1..steps {
        let ix = graph
            .node_ix(&path.nodes[j])
            .expect("path node must exist in graph");
        let pr = graph.pagerank(ix);
        intermediate_centrality.push(pr);
        bracket += (alpha * pr).exp() / per_step_affinity[j - 1];
    }

    PathScoreBreakdown {
        similarity,
        per_step_cosine,
        per_step_affinity,
        intermediate_centrality,
        bracket,
        weight: similarity / bracket,
    }
}

/// One candidate path with its weight, summarized for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSummary {
    pub nodes: Vec<String>,
    pub relations: Vec<String>,
    pub directions: Vec<Direction>,
    pub weight: f64,
}

/// Result of scoring one verifiable claim.
#[derive(Debug, Clone, PartialEq)]
pub enum ClaimScore {
    /// Endpoints resolved but no connecting path within the caps.
    NoPath,
    Scored(Box<ScoredClaim>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredClaim {
    pub weight: f64,
    pub mapping: PredicateMapping,
    pub path: EvidencePath,
    pub breakdown: PathScoreBreakdown,
    pub candidates: Vec<CandidateSummary>,
}

/// Scores a claim between two resolved endpoints.
///
/// Every minimal-length path is scored; the one with the largest absolute
/// weight wins, ties preferring the higher signed weight and then the
/// enumeration order (which is lexicographic).
pub fn score_claim(
    graph: &KnowledgeGraph,
    subject: u32,
    object: u32,
    predicate: &str,
    embeddings: &dyn EmbeddingProvider,
    caps: &PathCaps,
) -> ClaimScore {
    let paths = shortest_paths(graph, subject, object, caps);
    if paths.is_empty() {
        return ClaimScore::NoPath;
    }
    let mapping = map_predicate(predicate, graph, embeddings)
        .expect("a graph with edges has a non-empty vocabulary");

    let breakdowns: Vec<PathScoreBreakdown> = paths
        .iter()
        .map(|p| score_path(graph, p, &mapping.label, predicate, embeddings))
        .collect();

    let mut best = 0usize;
    for i in 1..breakdowns.len() {
        let (w, w_best) = (breakdowns[i].weight, breakdowns[best].weight);
        if w.abs() > w_best.abs() || (w.abs() == w_best.abs() && w > w_best) {
            best = i;
        }
    }

    let candidates = paths
        .iter()
        .zip(&breakdowns)
        .map(|(p, b)| CandidateSummary {
            nodes: p.nodes.clone(),
            relations: p.relations.clone(),
            directions: p.directions.clone(),
            weight: b.weight,
        })
        .collect();

    ClaimScore::Scored(Box::new(ScoredClaim {
        weight: breakdowns[best].weight,
        mapping,
        path: paths[best].clone(),
        breakdown: breakdowns[best].clone(),
        candidates,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{FileEmbeddings, PinnedCosine, TokenEmbeddings};
    use crate::graph::{BuildParams, GraphBuilder, StatOverrides};
    use std::collections::BTreeMap;

    fn ix(g: &KnowledgeGraph, id: &str) -> u32 {
        g.node_ix(id).unwrap()
    }

    #[test]
    fn identity_claim_over_direct_edge_scores_one() {
        let mut b = GraphBuilder::new();
        b.add_edge("a", "Aspirin", "treats", "h", "Headache");
        let g = b.build(BuildParams::default()).unwrap();
        let score = score_claim(
            &g,
            ix(&g, "a"),
            ix(&g, "h"),
            "treats",
            &TokenEmbeddings,
            &PathCaps::default(),
        );
        match score {
            ClaimScore::Scored(s) => {
                assert!((s.weight - 1.0).abs() < 1e-9);
                assert_eq!(s.mapping.label, "treats");
                assert!(!s.mapping.low_confidence);
                assert_eq!(s.breakdown.bracket, 1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reversed_direct_edge_compares_inverse_label() {
        let mut b = GraphBuilder::new();
        b.add_edge("a", "Aspirin", "treats", "h", "Headache");
        let g = b.build(BuildParams::default()).unwrap();
        let score = score_claim(
            &g,
            ix(&g, "h"),
            ix(&g, "a"),
            "treats",
            &TokenEmbeddings,
            &PathCaps::default(),
        );
        match score {
            ClaimScore::Scored(s) => {
                // "inverse of treats" vs "treats": one of three tokens shared
                assert!((s.weight - 1.0 / 3.0f64.sqrt()).abs() < 1e-12);
                assert_eq!(s.path.directions, vec![Direction::Reversed]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn no_path_is_its_own_outcome() {
        let mut b = GraphBuilder::new();
        b.add_edge("a", "A", "r", "b", "B");
        b.add_edge("c", "C", "r", "d", "D");
        let g = b.build(BuildParams::default()).unwrap();
        assert_eq!(
            score_claim(
                &g,
                ix(&g, "a"),
                ix(&g, "c"),
                "r",
                &TokenEmbeddings,
                &PathCaps::default()
            ),
            ClaimScore::NoPath
        );
    }

    #[test]
    fn single_step_weight_is_similarity_times_affinity() {
        // claim predicate differs from the edge label; alpha irrelevant (no
        // intermediates)
        let mut b = GraphBuilder::new();
        b.add_edge("a", "A", "relieves pain", "h", "H");
        b.add_edge("a", "A", "causes", "x", "X");
        let g = b.build(BuildParams::default()).unwrap();
        let emb = TokenEmbeddings;
        let score = score_claim(
            &g,
            ix(&g, "a"),
            ix(&g, "h"),
            "relieves chronic pain",
            &emb,
            &PathCaps::default(),
        );
        let ClaimScore::Scored(s) = score else {
            panic!()
        };
        let sim = emb.cosine("relieves pain", "relieves chronic pain");
        let u = g.affinity("relieves pain", &s.mapping.label);
        assert_eq!(s.mapping.label, "relieves pain");
        assert!((s.weight - sim * u).abs() < 1e-12);
    }

    #[test]
    fn hand_worked_two_step_chain() {
        // a -r1-> m -r2-> b, claim (a, r2, b).
        // Pinned: cos(r1 vs r2) = 0.6, cos(r2 vs r2) = 1 -> S = 0.8.
        // Overrides: u(r1, r2) = 0.5, alpha = 0, PR arbitrary.
        // bracket = e^0 / 0.5 + 1 / u(r2,r2)=1 -> 3; W = 0.8 / 3.
        let mut b = GraphBuilder::new();
        b.add_edge("a", "A", "r1", "m", "M");
        b.add_edge("m", "M", "r2", "b", "B");
        let mut params = BuildParams::default();
        params.alpha = 0.0;
        let mut ov = StatOverrides::default();
        ov.relation_affinity.insert(("r1".into(), "r2".into()), 0.5);
        let g = b.build_with(params, ov, BTreeMap::new()).unwrap();

        let emb = PinnedCosine::new().pin("r1", "r2", 0.6);
        let score = score_claim(
            &g,
            ix(&g, "a"),
            ix(&g, "b"),
            "r2",
            &emb,
            &PathCaps::default(),
        );
        let ClaimScore::Scored(s) = score else {
            panic!()
        };
        assert_eq!(s.mapping.label, "r2");
        assert!((s.breakdown.similarity - 0.8).abs() < 1e-12);
        assert!((s.breakdown.bracket - 3.0).abs() < 1e-12);
        assert!((s.weight - 0.8 / 3.0).abs() < 1e-6);
        assert_eq!(s.breakdown.intermediate_centrality.len(), 1);
    }

    #[test]
    fn alpha_penalizes_hub_intermediates() {
        // same chain, but alpha > 0 and the intermediate's centrality pinned
        let build = |alpha: f64, pr_m: f64| {
            let mut b = GraphBuilder::new();
            b.add_edge("a", "A", "r1", "m", "M");
            b.add_edge("m", "M", "r2", "b", "B");
            let mut params = BuildParams::default();
            params.alpha = alpha;
            let mut ov = StatOverrides::default();
            ov.centrality.insert("m".into(), pr_m);
            b.build_with(params, ov, BTreeMap::new()).unwrap()
        };
        let emb = PinnedCosine::new().pin("r1", "r2", 0.6);
        let weight = |g: &KnowledgeGraph| {
            match score_claim(g, ix(g, "a"), ix(g, "b"), "r2", &emb, &PathCaps::default()) {
                ClaimScore::Scored(s) => s.weight,
                _ => panic!(),
            }
        };
        let flat = weight(&build(0.0, 0.5));
        let hub = weight(&build(10.0, 0.5));
        assert!(hub < flat, "{hub} vs {flat}");
        // exact value: bracket = e^{10*0.5}/u(r1,r2) + 1
        let g = build(10.0, 0.5);
        let u = g.affinity("r1", "r2");
        let expect = 0.8 / ((5.0f64).exp() / u + 1.0);
        assert!((weight(&g) - expect).abs() < 1e-12);
    }

    #[test]
    fn negative_similarity_gives_negative_weight() {
        let mut b = GraphBuilder::new();
        b.add_edge("a", "A", "improves", "h", "H");
        let mut table = BTreeMap::new();
        table.insert("improves".to_string(), vec![1.0, 0.0]);
        table.insert("worsens".to_string(), vec![-1.0, 0.0]);
        let g = b.build(BuildParams::default()).unwrap();
        let emb = FileEmbeddings::new(table);
        let score = score_claim(
            &g,
            ix(&g, "a"),
            ix(&g, "h"),
            "worsens",
            &emb,
            &PathCaps::default(),
        );
        let ClaimScore::Scored(s) = score else {
            panic!()
        };
        assert!(s.mapping.low_confidence);
        assert_eq!(s.mapping.label, "improves");
        assert!((s.weight + 1.0).abs() < 1e-9);
    }

    #[test]
    fn tie_on_magnitude_prefers_positive_weight() {
        let mut b = GraphBuilder::new();
        b.add_edge("a", "A", "ra", "b", "B");
        b.add_edge("a", "A", "rb", "b", "B");
        let mut ov = StatOverrides::default();
        ov.relation_affinity.insert(("ra".into(), "rb".into()), 1.0);
        let g = b
            .build_with(BuildParams::default(), ov, BTreeMap::new())
            .unwrap();
        let emb = PinnedCosine::new().pin("t", "ra", 0.5).pin("t", "rb", -0.5);
        let score = score_claim(&g, ix(&g, "a"), ix(&g, "b"), "t", &emb, &PathCaps::default());
        let ClaimScore::Scored(s) = score else {
            panic!()
        };
        assert_eq!(s.weight, 0.5);
        assert_eq!(s.path.relations, vec!["ra"]);
        assert_eq!(s.candidates.len(), 2);
    }

    #[test]
    fn full_tie_keeps_lexicographically_first_path() {
        let mut b = GraphBuilder::new();
        b.add_edge("a", "A", "ra", "b", "B");
        b.add_edge("a", "A", "rb", "b", "B");
        let mut ov = StatOverrides::default();
        ov.relation_affinity.insert(("ra".into(), "rb".into()), 1.0);
        let g = b
            .build_with(BuildParams::default(), ov, BTreeMap::new())
            .unwrap();
        let emb = PinnedCosine::new().pin("t", "ra", 0.5).pin("t", "rb", 0.5);
        let score = score_claim(&g, ix(&g, "a"), ix(&g, "b"), "t", &emb, &PathCaps::default());
        let ClaimScore::Scored(s) = score else {
            panic!()
        };
        assert_eq!(s.path.relations, vec!["ra"]);
    }

    #[test]
    fn predicate_mapping_tie_breaks_lexicographically() {
        let mut b = GraphBuilder::new();
        b.add_edge("a", "A", "bbb", "b", "B");
        b.add_edge("b", "B", "aaa", "c", "C");
        let g = b.build(BuildParams::default()).unwrap();
        let emb = PinnedCosine::new().pin("t", "aaa", 0.7).pin("t", "bbb", 0.7);
        let m = map_predicate("t", &g, &emb).unwrap();
        assert_eq!(m.label, "aaa");
        assert!(!m.low_confidence);
    }

    #[test]
    fn predicate_mapping_flags_no_signal() {
        let mut b = GraphBuilder::new();
        b.add_edge("a", "A", "xxx", "b", "B");
        let g = b.build(BuildParams::default()).unwrap();
        let m = map_predicate("zzz", &g, &TokenEmbeddings).unwrap();
        assert!(m.low_confidence);
        assert_eq!(m.label, "xxx");
    }

    #[test]
    fn empty_vocabulary_cannot_map() {
        let g = GraphBuilder::new().build(BuildParams::default()).unwrap();
        assert!(map_predicate("t", &g, &TokenEmbeddings).is_none());
    }

    #[test]
    fn weights_stay_in_unit_interval_on_random_graphs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5150);
        for _ in 0..20 {
            let n = rng.random_range(2..20usize);
            let m = rng.random_range(1..50usize);
            let mut b = GraphBuilder::new();
            for _ in 0..m {
                let s = rng.random_range(0..n);
                let o = rng.random_range(0..n);
                b.add_edge(
                    &format!("n{s:02}"),
                    &format!("node {s}"),
                    &format!("rel {}", rng.random_range(0..5)),
                    &format!("n{o:02}"),
                    &format!("node {o}"),
                );
            }
            // default alpha = 100: exp terms are huge but finite, and the
            // bracket can only shrink the similarity
            let g = b.build(BuildParams::default()).unwrap();
            for _ in 0..30 {
                let a = rng.random_range(0..g.node_count()) as u32;
                let z = rng.random_range(0..g.node_count()) as u32;
                if a == z {
                    continue;
                }
                if let ClaimScore::Scored(s) = score_claim(
                    &g,
                    a,
                    z,
                    "rel 3",
                    &TokenEmbeddings,
                    &PathCaps::default(),
                ) {
                    assert!((-1.0..=1.0).contains(&s.weight), "weight {}", s.weight);
                    assert!(s.breakdown.bracket >= 1.0 - 1e-12);
                }
            }
        }
    }
}
