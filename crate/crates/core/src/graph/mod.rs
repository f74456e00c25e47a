//! Directed, labeled knowledge graph plus the derived statistics the scorer
//! consumes: PageRank centrality and relation co-occurrence affinity.
//!
//! A graph is assembled through [`GraphBuilder`] and frozen by
//! [`GraphBuilder::build`]; after that point it is immutable. All collections
//! are kept in sorted order (nodes by id, relations by label, edges by
//! subject/relation/object) so that every downstream artifact, including the
//! persisted index, is byte-deterministic.

pub mod cooccurrence;
pub mod index_io;
pub mod loader;
pub mod pagerank;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{FaithError, Result};

/// A graph node: stable identifier, display label, known surface forms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub node_id: String,
    pub canonical_label: String,
    /// Raw alias strings (synonym rows and non-canonical labels seen in the
    /// edge list). Matching happens on their normalized forms.
    pub aliases: BTreeSet<String>,
}

/// One directed edge, in terms of stable identifiers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub subject_id: String,
    pub relation: String,
    pub object_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct CompactEdge {
    pub s: u32,
    pub r: u32,
    pub o: u32,
}

/// One traversable step out of a node in the undirected view.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Step {
    pub edge: u32,
    pub other: u32,
    /// True when the underlying edge is traversed subject to object.
    pub forward: bool,
}

/// Parameters fixed at build time and persisted with the index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildParams {
    /// Scaling constant applied to centrality inside the path penalty.
    pub alpha: f64,
    /// Lower bound for relation affinity values.
    pub epsilon: f64,
    pub damping: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for BuildParams {
    fn default() -> Self {
        BuildParams {
            alpha: 100.0,
            epsilon: 1e-4,
            damping: 0.85,
            tolerance: 1e-8,
            max_iterations: 100,
        }
    }
}

impl BuildParams {
    fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() {
            return Err(FaithError::InvalidParam("alpha must be finite".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(FaithError::InvalidParam(
                "epsilon must be in (0, 1]".into(),
            ));
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(FaithError::InvalidParam(
                "damping must be in (0, 1)".into(),
            ));
        }
        if !(self.tolerance > 0.0) {
            return Err(FaithError::InvalidParam("tolerance must be > 0".into()));
        }
        if self.max_iterations == 0 {
            return Err(FaithError::InvalidParam(
                "max_iterations must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Optional replacement values for the derived statistics.
///
/// Lets callers pin centrality or affinity entries on small graphs where the
/// computed values would be degenerate; pairs are unordered.
#[derive(Debug, Clone, Default)]
pub struct StatOverrides {
    pub centrality: BTreeMap<String, f64>,
    pub relation_affinity: BTreeMap<(String, String), f64>,
}

/// Five-number degree summary reported with graph statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeSummary {
    pub min: usize,
    pub median: f64,
    pub mean: f64,
    pub max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub edges: usize,
    pub relations: usize,
    pub self_loops: usize,
    pub pagerank_converged: bool,
    /// Total (in + out) degree distribution.
    pub degree: DegreeSummary,
}

/// Accumulates nodes, edges and aliases before the graph is frozen.
#[derive(Debug, Default, Clone)]
pub struct GraphBuilder {
    // node_id -> canonical label (first label seen wins)
    nodes: BTreeMap<String, String>,
    edges: BTreeSet<(String, String, String)>,
    // (alias, node_id) in application order; earlier rows win on conflict
    alias_rows: Vec<(String, String)>,
    warnings: Vec<String>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a node. The first label seen for an id is canonical; later
    /// differing labels are kept as aliases.
    pub fn add_node(&mut self, node_id: &str, label: &str) {
        match self.nodes.get(node_id) {
            None => {
                self.nodes.insert(node_id.to_string(), label.to_string());
            }
            Some(existing) if existing != label => {
                self.alias_rows
                    .push((label.to_string(), node_id.to_string()));
            }
            Some(_) => {}
        }
    }

    /// Adds one directed edge, registering both endpoints. Exact duplicate
    /// (subject, relation, object) triples collapse to a single edge.
    pub fn add_edge(
        &mut self,
        subject_id: &str,
        subject_label: &str,
        relation: &str,
        object_id: &str,
        object_label: &str,
    ) {
        self.add_node(subject_id, subject_label);
        self.add_node(object_id, object_label);
        self.edges.insert((
            subject_id.to_string(),
            relation.to_string(),
            object_id.to_string(),
        ));
    }

    /// Attaches an alias to an existing node. Returns false (and records a
    /// warning) when the node id is unknown.
    pub fn add_alias(&mut self, alias: &str, node_id: &str) -> bool {
        if !self.nodes.contains_key(node_id) {
            self.warnings.push(format!(
                "synonym '{alias}' references unknown node id '{node_id}', skipped"
            ));
            return false;
        }
        self.alias_rows
            .push((alias.to_string(), node_id.to_string()));
        true
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn build(self, params: BuildParams) -> Result<KnowledgeGraph> {
        self.build_with(params, StatOverrides::default(), BTreeMap::new())
    }

    /// Freezes the graph, computing PageRank and relation affinity, then
    /// applying `overrides` on top. `embeddings` is an optional label-to-vector
    /// table carried inside the index for later use.
    pub fn build_with(
        self,
        params: BuildParams,
        overrides: StatOverrides,
        embeddings: BTreeMap<String, Vec<f64>>,
    ) -> Result<KnowledgeGraph> {
        params.validate()?;

        let nodes: Vec<NodeRecord> = self
            .nodes
            .iter()
            .map(|(id, label)| NodeRecord {
                node_id: id.clone(),
                canonical_label: label.clone(),
                aliases: BTreeSet::new(),
            })
            .collect();
        let node_index: HashMap<String, u32> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.node_id.clone(), i as u32))
            .collect();

        let relation_set: BTreeSet<&str> = self.edges.iter().map(|(_, r, _)| r.as_str()).collect();
        let relations: Vec<String> = relation_set.into_iter().map(String::from).collect();
        let relation_index: HashMap<String, u32> = relations
            .iter()
            .enumerate()
            .map(|(i, r)| (r.clone(), i as u32))
            .collect();

        // BTreeSet iteration order is already (subject, relation, object)
        let edges: Vec<CompactEdge> = self
            .edges
            .iter()
            .map(|(s, r, o)| CompactEdge {
                s: node_index[s],
                r: relation_index[r],
                o: node_index[o],
            })
            .collect();

        let mut graph = KnowledgeGraph {
            nodes,
            edges,
            relations,
            node_index,
            relation_index,
            out_adj: Vec::new(),
            in_adj: Vec::new(),
            und_adj: Vec::new(),
            exact_label: BTreeMap::new(),
            norm_label: BTreeMap::new(),
            alias_lookup: BTreeMap::new(),
            alias_rows: Vec::new(),
            pagerank: Vec::new(),
            pagerank_converged: true,
            cooccurrence: Vec::new(),
            params,
            embeddings,
        };
        graph.rebuild_adjacency();
        graph.apply_alias_rows(self.alias_rows);
        graph.recompute_stats(&overrides);
        Ok(graph)
    }
}

/// Immutable knowledge graph with derived statistics.
#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    nodes: Vec<NodeRecord>,
    edges: Vec<CompactEdge>,
    relations: Vec<String>,
    node_index: HashMap<String, u32>,
    relation_index: HashMap<String, u32>,
    out_adj: Vec<Vec<u32>>,
    in_adj: Vec<Vec<u32>>,
    und_adj: Vec<Vec<Step>>,
    // resolution lookups, keyed by raw label / normalized label / normalized alias
    exact_label: BTreeMap<String, u32>,
    norm_label: BTreeMap<String, u32>,
    alias_lookup: BTreeMap<String, u32>,
    alias_rows: Vec<(String, String)>,
    pagerank: Vec<f64>,
    pagerank_converged: bool,
    // row-major relations x relations affinity matrix
    cooccurrence: Vec<f64>,
    params: BuildParams,
    embeddings: BTreeMap<String, Vec<f64>>,
}

impl KnowledgeGraph {
    fn rebuild_adjacency(&mut self) {
        let n = self.nodes.len();
        self.out_adj = vec![Vec::new(); n];
        self.in_adj = vec![Vec::new(); n];
        self.und_adj = vec![Vec::new(); n];
        for (i, e) in self.edges.iter().enumerate() {
            self.out_adj[e.s as usize].push(i as u32);
            self.in_adj[e.o as usize].push(i as u32);
            self.und_adj[e.s as usize].push(Step {
                edge: i as u32,
                other: e.o,
                forward: true,
            });
            if e.s != e.o {
                self.und_adj[e.o as usize].push(Step {
                    edge: i as u32,
                    other: e.s,
                    forward: false,
                });
            }
        }
        // deterministic traversal order: neighbor id, then relation, then
        // forward before reversed
        for steps in &mut self.und_adj {
            steps.sort_by_key(|st| {
                (
                    st.other,
                    self.edges[st.edge as usize].r,
                    !st.forward,
                    st.edge,
                )
            });
        }

        self.exact_label.clear();
        self.norm_label.clear();
        for (i, node) in self.nodes.iter().enumerate() {
            self.exact_label
                .entry(node.canonical_label.clone())
                .or_insert(i as u32);
            self.norm_label
                .entry(crate::resolve::normalize(&node.canonical_label))
                .or_insert(i as u32);
        }
    }

    fn apply_alias_rows(&mut self, rows: Vec<(String, String)>) {
        self.alias_lookup.clear();
        self.alias_rows = Vec::with_capacity(rows.len());
        for (alias, node_id) in rows {
            let Some(&ix) = self.node_index.get(&node_id) else {
                continue;
            };
            let norm = crate::resolve::normalize(&alias);
            if !norm.is_empty() {
                self.alias_lookup.entry(norm).or_insert(ix);
            }
            self.nodes[ix as usize].aliases.insert(alias.clone());
            self.alias_rows.push((alias, node_id));
        }
    }

    fn recompute_stats(&mut self, overrides: &StatOverrides) {
        let endpoints: Vec<(u32, u32)> = self.edges.iter().map(|e| (e.s, e.o)).collect();
        let pr = pagerank::power_iteration(
            self.nodes.len(),
            &endpoints,
            self.params.damping,
            self.params.tolerance,
            self.params.max_iterations,
        );
        self.pagerank = pr.scores;
        self.pagerank_converged = pr.converged;
        for (id, value) in &overrides.centrality {
            if let Some(&ix) = self.node_index.get(id) {
                self.pagerank[ix as usize] = *value;
            }
        }

        self.cooccurrence = cooccurrence::affinity_matrix(
            self.relations.len(),
            self.nodes.len(),
            &self.edges,
            self.params.epsilon,
        );
        let nr = self.relations.len();
        for ((a, b), value) in &overrides.relation_affinity {
            let (Some(&ia), Some(&ib)) = (self.relation_index.get(a), self.relation_index.get(b))
            else {
                continue;
            };
            let (ia, ib) = (ia as usize, ib as usize);
            self.cooccurrence[ia * nr + ib] = *value;
            self.cooccurrence[ib * nr + ia] = *value;
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    pub fn node_ix(&self, node_id: &str) -> Option<u32> {
        self.node_index.get(node_id).copied()
    }

    pub fn node(&self, ix: u32) -> &NodeRecord {
        &self.nodes[ix as usize]
    }

    pub fn nodes(&self) -> &[NodeRecord] {
        &self.nodes
    }

    pub fn relation_vocabulary(&self) -> &[String] {
        &self.relations
    }

    pub fn relation_label(&self, ix: u32) -> &str {
        &self.relations[ix as usize]
    }

    pub fn relation_ix(&self, label: &str) -> Option<u32> {
        self.relation_index.get(label).copied()
    }

    /// Materializes edge `ix` back into stable identifiers.
    pub fn edge_record(&self, ix: u32) -> EdgeRecord {
        let e = &self.edges[ix as usize];
        EdgeRecord {
            subject_id: self.nodes[e.s as usize].node_id.clone(),
            relation: self.relations[e.r as usize].clone(),
            object_id: self.nodes[e.o as usize].node_id.clone(),
        }
    }

    pub fn edge_endpoints(&self, ix: u32) -> (u32, u32) {
        let e = &self.edges[ix as usize];
        (e.s, e.o)
    }

    pub fn edge_relation_ix(&self, ix: u32) -> u32 {
        self.edges[ix as usize].r
    }

    pub fn out_degree(&self, node: u32) -> usize {
        self.out_adj[node as usize].len()
    }

    pub fn in_degree(&self, node: u32) -> usize {
        self.in_adj[node as usize].len()
    }

    /// In-degree plus out-degree; a self loop contributes 2.
    pub fn total_degree(&self, node: u32) -> usize {
        self.out_degree(node) + self.in_degree(node)
    }

    pub(crate) fn und_neighbors(&self, node: u32) -> &[Step] {
        &self.und_adj[node as usize]
    }

    pub fn pagerank(&self, node: u32) -> f64 {
        self.pagerank[node as usize]
    }

    pub fn pagerank_scores(&self) -> &[f64] {
        &self.pagerank
    }

    pub fn pagerank_converged(&self) -> bool {
        self.pagerank_converged
    }

    /// Relation affinity by vocabulary index.
    pub fn affinity_ix(&self, a: u32, b: u32) -> f64 {
        self.cooccurrence[a as usize * self.relations.len() + b as usize]
    }

    /// Relation affinity by label; unknown labels fall back to the epsilon
    /// floor so a lookup can never produce a zero divisor.
    pub fn affinity(&self, a: &str, b: &str) -> f64 {
        match (self.relation_index.get(a), self.relation_index.get(b)) {
            (Some(&ia), Some(&ib)) => self.affinity_ix(ia, ib),
            _ => self.params.epsilon,
        }
    }

    pub fn params(&self) -> &BuildParams {
        &self.params
    }

    pub fn alpha(&self) -> f64 {
        self.params.alpha
    }

    pub fn epsilon(&self) -> f64 {
        self.params.epsilon
    }

    pub fn embeddings(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.embeddings
    }

    pub fn alias_rows(&self) -> &[(String, String)] {
        &self.alias_rows
    }

    pub(crate) fn lookup_exact(&self, label: &str) -> Option<u32> {
        self.exact_label.get(label).copied()
    }

    pub(crate) fn lookup_normalized(&self, norm: &str) -> Option<u32> {
        self.norm_label.get(norm).copied()
    }

    pub(crate) fn lookup_alias(&self, norm: &str) -> Option<u32> {
        self.alias_lookup.get(norm).copied()
    }

    pub fn self_loop_count(&self) -> usize {
        self.edges.iter().filter(|e| e.s == e.o).count()
    }

    pub fn stats(&self) -> GraphStats {
        let mut degrees: Vec<usize> = (0..self.nodes.len())
            .map(|i| self.total_degree(i as u32))
            .collect();
        degrees.sort_unstable();
        let degree = if degrees.is_empty() {
            DegreeSummary {
                min: 0,
                median: 0.0,
                mean: 0.0,
                max: 0,
            }
        } else {
            let n = degrees.len();
            let median = if n % 2 == 1 {
                degrees[n / 2] as f64
            } else {
                (degrees[n / 2 - 1] + degrees[n / 2]) as f64 / 2.0
            };
            DegreeSummary {
                min: degrees[0],
                median,
                mean: degrees.iter().sum::<usize>() as f64 / n as f64,
                max: degrees[n - 1],
            }
        };
        GraphStats {
            nodes: self.nodes.len(),
            edges: self.edges.len(),
            relations: self.relations.len(),
            self_loops: self.self_loop_count(),
            pagerank_converged: self.pagerank_converged,
            degree,
        }
    }

    /// Recreates a builder holding this graph's nodes, edges and alias rows,
    /// e.g. to rebuild after a perturbation.
    pub fn to_builder(&self) -> GraphBuilder {
        let mut b = GraphBuilder::new();
        for node in &self.nodes {
            b.add_node(&node.node_id, &node.canonical_label);
        }
        for e in &self.edges {
            let s = &self.nodes[e.s as usize];
            let o = &self.nodes[e.o as usize];
            b.add_edge(
                &s.node_id,
                &s.canonical_label,
                &self.relations[e.r as usize],
                &o.node_id,
                &o.canonical_label,
            );
        }
        for (alias, node_id) in &self.alias_rows {
            b.add_alias(alias, node_id);
        }
        b
    }

    pub(crate) fn compact_edges(&self) -> &[CompactEdge] {
        &self.edges
    }
}
