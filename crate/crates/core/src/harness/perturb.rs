//! Seeded structural perturbation of a knowledge graph.
//!
//! Three ablation modes: delete a fraction of edges, delete a fraction of
//! nodes together with their incident edges, or insert a fraction of noisy
//! edges between random endpoints using existing relation labels. The
//! perturbed graph is rebuilt from scratch so centrality and relation
//! affinity reflect the new structure.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{FaithError, Result};
use crate::graph::{GraphBuilder, KnowledgeGraph, StatOverrides};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbMode {
    EdgeDelete,
    NodeDelete,
    EdgeInsert,
}

impl std::str::FromStr for PerturbMode {
    type Err = FaithError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edge_delete" => Ok(PerturbMode::EdgeDelete),
            "node_delete" => Ok(PerturbMode::NodeDelete),
            "edge_insert" => Ok(PerturbMode::EdgeInsert),
            other => Err(FaithError::InvalidParam(format!(
                "unknown perturbation mode '{other}' (expected edge_delete, node_delete, edge_insert)"
            ))),
        }
    }
}

impl std::fmt::Display for PerturbMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PerturbMode::EdgeDelete => "edge_delete",
            PerturbMode::NodeDelete => "node_delete",
            PerturbMode::EdgeInsert => "edge_insert",
        })
    }
}

/// Applies one perturbation and rebuilds the graph with its original build
/// parameters and embedding table. The exact change sizes are
/// `floor(fraction * |E|)` edges or `floor(fraction * |V|)` nodes.
pub fn perturb_kg(
    graph: &KnowledgeGraph,
    mode: PerturbMode,
    fraction: f64,
    seed: u64,
) -> Result<KnowledgeGraph> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(FaithError::InvalidParam(format!(
            "fraction must lie strictly between 0 and 1, got {fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_nodes = graph.node_count();
    let n_edges = graph.edge_count();

    let mut builder = GraphBuilder::new();
    match mode {
        PerturbMode::EdgeDelete => {
            let k = (fraction * n_edges as f64).floor() as usize;
            let drop: BTreeSet<usize> = sample(&mut rng, n_edges, k).into_iter().collect();
            for node in graph.nodes() {
                builder.add_node(&node.node_id, &node.canonical_label);
            }
            for e in 0..n_edges {
                if !drop.contains(&e) {
                    copy_edge(graph, e as u32, &mut builder);
                }
            }
        }
        PerturbMode::NodeDelete => {
            let k = (fraction * n_nodes as f64).floor() as usize;
            let drop: BTreeSet<usize> = sample(&mut rng, n_nodes, k).into_iter().collect();
            for (ix, node) in graph.nodes().iter().enumerate() {
                if !drop.contains(&ix) {
                    builder.add_node(&node.node_id, &node.canonical_label);
                }
            }
            for e in 0..n_edges as u32 {
                let (s, o) = graph.edge_endpoints(e);
                if !drop.contains(&(s as usize)) && !drop.contains(&(o as usize)) {
                    copy_edge(graph, e, &mut builder);
                }
            }
        }
        PerturbMode::EdgeInsert => {
            let k = (fraction * n_edges as f64).floor() as usize;
            for node in graph.nodes() {
                builder.add_node(&node.node_id, &node.canonical_label);
            }
            let mut present: BTreeSet<(u32, u32, u32)> = BTreeSet::new();
            for e in 0..n_edges as u32 {
                let (s, o) = graph.edge_endpoints(e);
                present.insert((s, graph.edge_relation_ix(e), o));
                copy_edge(graph, e, &mut builder);
            }
            let vocab = graph.relation_vocabulary();
            if n_nodes < 2 || vocab.is_empty() {
                return Err(FaithError::InvalidParam(
                    "edge insertion needs at least two nodes and one relation label".into(),
                ));
            }
            let mut inserted = 0usize;
            let mut attempts = 0usize;
            let budget = 1000 * k.max(1);
            while inserted < k {
                attempts += 1;
                if attempts > budget {
                    return Err(FaithError::InvalidParam(
                        "could not place the requested noisy edges; graph too dense".into(),
                    ));
                }
                let s = rng.random_range(0..n_nodes as u32);
                let o = rng.random_range(0..n_nodes as u32);
                if s == o {
                    continue;
                }
                let r = rng.random_range(0..vocab.len() as u32);
                if !present.insert((s, r, o)) {
                    continue;
                }
                let sn = graph.node(s);
                let on = graph.node(o);
                builder.add_edge(
                    &sn.node_id,
                    &sn.canonical_label,
                    &vocab[r as usize],
                    &on.node_id,
                    &on.canonical_label,
                );
                inserted += 1;
            }
        }
    }
    for (alias, node_id) in graph.alias_rows() {
        builder.add_alias(alias, node_id);
    }

    if builder.node_count() == 0 || builder.edge_count() == 0 {
        return Err(FaithError::EmptyGraph(format!(
            "{mode} at fraction {fraction} left no usable graph"
        )));
    }
    builder.build_with(
        graph.params().clone(),
        StatOverrides::default(),
        graph.embeddings().clone(),
    )
}

fn copy_edge(graph: &KnowledgeGraph, e: u32, builder: &mut GraphBuilder) {
    let rec = graph.edge_record(e);
    let (s, o) = graph.edge_endpoints(e);
    builder.add_edge(
        &rec.subject_id,
        &graph.node(s).canonical_label,
        &rec.relation,
        &rec.object_id,
        &graph.node(o).canonical_label,
    );
}
