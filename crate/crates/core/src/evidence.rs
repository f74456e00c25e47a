//! Evidence path enumeration.
//!
//! Claims are grounded by connecting their endpoints in the graph, ignoring
//! edge direction but remembering it per step. All minimal-length paths are
//! enumerated (up to a hop cap and a count cap) in one fixed order: by node
//! id sequence, ties broken per step by relation label, forward before
//! reversed. Parallel edges between the same endpoints yield distinct paths.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::graph::KnowledgeGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Reversed,
}

/// A concrete path between two claim endpoints. `nodes` has one more entry
/// than `relations` and `directions`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidencePath {
    /// Node ids, endpoints included.
    pub nodes: Vec<String>,
    /// Canonical labels aligned with `nodes`.
    pub labels: Vec<String>,
    pub relations: Vec<String>,
    pub directions: Vec<Direction>,
}

impl EvidencePath {
    /// Number of steps (edges) on the path.
    pub fn hops(&self) -> usize {
        self.relations.len()
    }
}

/// Enumeration limits: maximum path length in hops and maximum number of
/// paths returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathCaps {
    pub max_hops: usize,
    pub max_paths: usize,
}

impl Default for PathCaps {
    fn default() -> Self {
        PathCaps {
            max_hops: 4,
            max_paths: 64,
        }
    }
}

const UNREACHED: u32 = u32::MAX;

fn bfs_distances(graph: &KnowledgeGraph, start: u32, cap: usize) -> Vec<u32> {
    let mut dist = vec![UNREACHED; graph.node_count()];
    dist[start as usize] = 0;
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        let d = dist[v as usize];
        if d as usize >= cap {
            continue;
        }
        for step in graph.und_neighbors(v) {
            if dist[step.other as usize] == UNREACHED {
                dist[step.other as usize] = d + 1;
                queue.push_back(step.other);
            }
        }
    }
    dist
}

/// All minimal-length undirected paths from `a` to `b`, in the fixed order
/// described in the module docs, cut off at `caps.max_paths`.
///
/// Returns an empty list when the endpoints coincide, are disconnected, or
/// lie further apart than `caps.max_hops`.
pub fn shortest_paths(
    graph: &KnowledgeGraph,
    a: u32,
    b: u32,
    caps: &PathCaps,
) -> Vec<EvidencePath> {
    if graph.node_count() == 0 || a == b || caps.max_paths == 0 || caps.max_hops == 0 {
        return Vec::new();
    }
    let dist_a = bfs_distances(graph, a, caps.max_hops);
    let dist_b = bfs_distances(graph, b, caps.max_hops);
    let d = dist_a[b as usize];
    if d == UNREACHED || d as usize > caps.max_hops {
        return Vec::new();
    }

    let mut out = Vec::new();
    let mut seq = Vec::with_capacity(d as usize + 1);
    seq.push(a);
    walk_node_sequences(graph, d, &dist_a, &dist_b, &mut seq, caps.max_paths, &mut out);
    out
}

// Phase one: depth-first over node sequences only, in ascending node order.
// Every explored prefix is guaranteed to extend into at least one complete
// shortest path, so the work stays proportional to the emitted paths.
fn walk_node_sequences(
    graph: &KnowledgeGraph,
    d: u32,
    dist_a: &[u32],
    dist_b: &[u32],
    seq: &mut Vec<u32>,
    cap: usize,
    out: &mut Vec<EvidencePath>,
) -> bool {
    let depth = (seq.len() - 1) as u32;
    if depth == d {
        return expand_edge_choices(graph, seq, cap, out);
    }
    let v = *seq.last().unwrap();
    let mut prev_next = None;
    for step in graph.und_neighbors(v) {
        if Some(step.other) == prev_next {
            continue;
        }
        prev_next = Some(step.other);
        let w = step.other;
        if dist_a[w as usize] == depth + 1
            && dist_b[w as usize] != UNREACHED
            && dist_b[w as usize] == d - depth - 1
        {
            seq.push(w);
            let keep_going = walk_node_sequences(graph, d, dist_a, dist_b, seq, cap, out);
            seq.pop();
            if !keep_going {
                return false;
            }
        }
    }
    true
}

// Phase two: for one node sequence, enumerate every combination of parallel
// edges per step, last step varying fastest (= lexicographic by step).
fn expand_edge_choices(
    graph: &KnowledgeGraph,
    seq: &[u32],
    cap: usize,
    out: &mut Vec<EvidencePath>,
) -> bool {
    let steps = seq.len() - 1;
    let options: Vec<Vec<(u32, bool)>> = (0..steps)
        .map(|j| {
            graph
                .und_neighbors(seq[j])
                .iter()
                .filter(|st| st.other == seq[j + 1])
                .map(|st| (st.edge, st.forward))
                .collect()
        })
        .collect();

    let mut choice = vec![0usize; steps];
    loop {
        out.push(materialize(graph, seq, &options, &choice));
        if out.len() >= cap {
            return false;
        }
        let mut pos = steps;
        loop {
            if pos == 0 {
                return true;
            }
            pos -= 1;
            choice[pos] += 1;
            if choice[pos] < options[pos].len() {
                break;
            }
            choice[pos] = 0;
        }
    }
}

fn materialize(
    graph: &KnowledgeGraph,
    seq: &[u32],
    options: &[Vec<(u32, bool)>],
    choice: &[usize],
) -> EvidencePath {
    let nodes: Vec<String> = seq
        .iter()
        .map(|&ix| graph.node(ix).node_id.clone())
        .collect();
    let labels: Vec<String> = seq
        .iter()
        .map(|&ix| graph.node(ix).canonical_label.clone())
        .collect();
    let mut relations = Vec::with_capacity(choice.len());
    let mut directions = Vec::with_capacity(choice.len());
    for (j, &c) in choice.iter().enumerate() {
        let (edge, forward) = options[j][c];
        relations.push(graph.relation_label(graph.edge_relation_ix(edge)).to_string());
        directions.push(if forward {
            Direction::Forward
        } else {
            Direction::Reversed
        });
    }
    EvidencePath {
        nodes,
        labels,
        relations,
        directions,
    }
}
