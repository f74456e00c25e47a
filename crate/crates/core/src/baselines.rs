//! Reference scorers used for comparison runs.
//!
//! Two graph-based baselines share the evidence machinery: `kl_score` rates a
//! claim by the degree load of the intermediate nodes on its best shortest
//! path, and `kl_rel_score` additionally weighs each path by the label
//! similarity the main scorer uses. Two text baselines, BLEU-4 and ROUGE-L,
//! compare a candidate response against a reference answer.

use std::collections::HashMap;

use crate::embedding::EmbeddingProvider;
use crate::evidence::{shortest_paths, EvidencePath, PathCaps};
use crate::graph::KnowledgeGraph;
use crate::scoring::relation_similarity;

/// Degree penalty of one path: `[1 + sum over intermediates ln(deg)]^-1`
/// with total (in+out) degree. A direct edge has no intermediates and
/// scores 1.
fn degree_penalty(graph: &KnowledgeGraph, path: &EvidencePath) -> f64 {
    let mut sum = 0.0;
    for node_id in &path.nodes[1..path.nodes.len() - 1] {
        let ix = graph.node_ix(node_id).expect("path node exists");
        sum += (graph.total_degree(ix) as f64).ln();
    }
    1.0 / (1.0 + sum)
}

/// Degree-based claim score: maximum of [`degree_penalty`] over the shortest
/// paths between the endpoints. 1.0 for a direct edge, 0.0 when no path
/// exists, always in (0, 1] otherwise.
pub fn kl_score(graph: &KnowledgeGraph, subject: u32, object: u32, caps: &PathCaps) -> f64 {
    shortest_paths(graph, subject, object, caps)
        .iter()
        .map(|p| degree_penalty(graph, p))
        .fold(0.0, f64::max)
}

/// Relation-aware variant: each path's degree penalty is multiplied by the
/// mean step-label similarity to the claim predicate, and the value with the
/// largest magnitude wins (ties prefer the higher signed value, then the
/// earlier path). The sign of the similarity is carried through.
pub fn kl_rel_score(
    graph: &KnowledgeGraph,
    subject: u32,
    object: u32,
    predicate: &str,
    embeddings: &dyn EmbeddingProvider,
    caps: &PathCaps,
) -> f64 {
    let paths = shortest_paths(graph, subject, object, caps);
    let mut best = 0.0f64;
    let mut found = false;
    for path in &paths {
        let (similarity, _) = relation_similarity(path, predicate, embeddings);
        let value = degree_penalty(graph, path) * similarity;
        if !found || value.abs() > best.abs() || (value.abs() == best.abs() && value > best) {
            best = value;
            found = true;
        }
    }
    if found {
        best
    } else {
        0.0
    }
}

/// Lowercases and splits on non-alphanumeric characters, dropping empties.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts: HashMap<&[String], usize> = HashMap::new();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            *counts.entry(window).or_insert(0) += 1;
        }
    }
    counts
}

/// BLEU-4: geometric mean of 1..4-gram modified precisions, each smoothed as
/// (matches+1)/(candidates+1), times the brevity penalty. Either side
/// tokenizing to nothing scores 0.
pub fn bleu4(candidate: &str, reference: &str) -> f64 {
    let cand = tokenize(candidate);
    let refr = tokenize(reference);
    if cand.is_empty() || refr.is_empty() {
        return 0.0;
    }

    let mut log_sum = 0.0;
    for n in 1..=4usize {
        let cand_counts = ngram_counts(&cand, n);
        let ref_counts = ngram_counts(&refr, n);
        let mut matches = 0usize;
        let mut total = 0usize;
        for (gram, count) in &cand_counts {
            total += count;
            matches += count.min(ref_counts.get(gram).unwrap_or(&0));
        }
        let precision = (matches + 1) as f64 / (total + 1) as f64;
        log_sum += precision.ln();
    }

    let brevity = if cand.len() >= refr.len() {
        1.0
    } else {
        (1.0 - refr.len() as f64 / cand.len() as f64).exp()
    };
    brevity * (log_sum / 4.0).exp()
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            row[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(row[j])
            };
        }
        std::mem::swap(&mut prev, &mut row);
    }
    prev[b.len()]
}

/// ROUGE-L: F1 over the longest common token subsequence (precision against
/// the candidate length, recall against the reference length, equal weight).
pub fn rouge_l(candidate: &str, reference: &str) -> f64 {
    let cand = tokenize(candidate);
    let refr = tokenize(reference);
    if cand.is_empty() || refr.is_empty() {
        return 0.0;
    }
    let lcs = lcs_len(&cand, &refr) as f64;
    if lcs == 0.0 {
        return 0.0;
    }
    let precision = lcs / cand.len() as f64;
    let recall = lcs / refr.len() as f64;
    2.0 * precision * recall / (precision + recall)
}
