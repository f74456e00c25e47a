//! Index persistence: a small binary envelope around a canonical JSON payload.
//!
//! Layout: magic `FKGI`, format version (u32 LE), payload length (u64 LE),
//! SHA-256 of the payload (32 bytes), payload. The payload serializes every
//! collection in sorted order, so saving the same graph twice produces
//! identical bytes.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{FaithError, Result};
use crate::graph::{BuildParams, CompactEdge, KnowledgeGraph, NodeRecord};

pub const INDEX_MAGIC: [u8; 4] = *b"FKGI";
pub const INDEX_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct PersistedGraph {
    params: BuildParams,
    nodes: Vec<(String, String)>,
    edges: Vec<(String, String, String)>,
    relations: Vec<String>,
    alias_rows: Vec<(String, String)>,
    pagerank: Vec<f64>,
    pagerank_converged: bool,
    cooccurrence: Vec<f64>,
    embeddings: BTreeMap<String, Vec<f64>>,
}

/// Serializes the graph into the envelope format.
pub fn to_bytes(graph: &KnowledgeGraph) -> Result<Vec<u8>> {
    let persisted = PersistedGraph {
        params: graph.params().clone(),
        nodes: graph
            .nodes()
            .iter()
            .map(|n| (n.node_id.clone(), n.canonical_label.clone()))
            .collect(),
        edges: graph
            .compact_edges()
            .iter()
            .map(|e| {
                (
                    graph.node(e.s).node_id.clone(),
                    graph.relation_label(e.r).to_string(),
                    graph.node(e.o).node_id.clone(),
                )
            })
            .collect(),
        relations: graph.relation_vocabulary().to_vec(),
        alias_rows: graph.alias_rows().to_vec(),
        pagerank: graph.pagerank_scores().to_vec(),
        pagerank_converged: graph.pagerank_converged(),
        cooccurrence: graph.cooccurrence.clone(),
        embeddings: graph.embeddings().clone(),
    };
    // through Value: object keys end up sorted, making the bytes stable
    let value = serde_json::to_value(&persisted)
        .map_err(|e| FaithError::Other(format!("serialize index: {e}")))?;
    let payload = serde_json::to_vec(&value)
        .map_err(|e| FaithError::Other(format!("serialize index: {e}")))?;

    let mut bytes = Vec::with_capacity(payload.len() + 48);
    bytes.extend_from_slice(&INDEX_MAGIC);
    bytes.extend_from_slice(&INDEX_VERSION.to_le_bytes());
    bytes.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    bytes.extend_from_slice(&Sha256::digest(&payload));
    bytes.extend_from_slice(&payload);
    Ok(bytes)
}

pub fn save_index(graph: &KnowledgeGraph, path: &Path) -> Result<()> {
    std::fs::write(path, to_bytes(graph)?).map_err(|e| FaithError::io(path, e))
}

/// Parses and validates the envelope, then reconstructs the graph with its
/// stored statistics (nothing is recomputed on load).
pub fn from_bytes(bytes: &[u8]) -> Result<KnowledgeGraph> {
    if bytes.len() < 48 {
        return Err(FaithError::IndexCorrupt("file shorter than header".into()));
    }
    if bytes[0..4] != INDEX_MAGIC {
        return Err(FaithError::IndexCorrupt("bad magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != INDEX_VERSION {
        return Err(FaithError::IndexVersion {
            found: version,
            expected: INDEX_VERSION,
        });
    }
    let payload_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let expected_hash = &bytes[16..48];
    let payload = &bytes[48..];
    if payload.len() != payload_len {
        return Err(FaithError::IndexCorrupt(format!(
            "payload length {} does not match header {payload_len}",
            payload.len()
        )));
    }
    if Sha256::digest(payload)[..] != *expected_hash {
        return Err(FaithError::IndexCorrupt("checksum mismatch".into()));
    }
    let persisted: PersistedGraph = serde_json::from_slice(payload)
        .map_err(|e| FaithError::IndexCorrupt(format!("payload does not parse: {e}")))?;
    reconstruct(persisted)
}

pub fn load_index(path: &Path) -> Result<KnowledgeGraph> {
    let bytes = std::fs::read(path).map_err(|e| FaithError::io(path, e))?;
    from_bytes(&bytes)
}

fn reconstruct(p: PersistedGraph) -> Result<KnowledgeGraph> {
    let corrupt = |msg: &str| FaithError::IndexCorrupt(msg.to_string());

    p.params.validate()?;
    if !p.nodes.windows(2).all(|w| w[0].0 < w[1].0) {
        return Err(corrupt("nodes not sorted by id"));
    }
    if !p.relations.windows(2).all(|w| w[0] < w[1]) {
        return Err(corrupt("relations not sorted"));
    }
    if p.pagerank.len() != p.nodes.len() {
        return Err(corrupt("pagerank length mismatch"));
    }
    if p.cooccurrence.len() != p.relations.len() * p.relations.len() {
        return Err(corrupt("affinity matrix shape mismatch"));
    }

    let nodes: Vec<NodeRecord> = p
        .nodes
        .iter()
        .map(|(id, label)| NodeRecord {
            node_id: id.clone(),
            canonical_label: label.clone(),
            aliases: Default::default(),
        })
        .collect();
    let node_index: std::collections::HashMap<String, u32> = nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.node_id.clone(), i as u32))
        .collect();
    let relation_index: std::collections::HashMap<String, u32> = p
        .relations
        .iter()
        .enumerate()
        .map(|(i, r)| (r.clone(), i as u32))
        .collect();

    let mut edges = Vec::with_capacity(p.edges.len());
    for (s, r, o) in &p.edges {
        let (Some(&s), Some(&r), Some(&o)) = (
            node_index.get(s),
            relation_index.get(r),
            node_index.get(o),
        ) else {
            return Err(corrupt("edge references unknown node or relation"));
        };
        edges.push(CompactEdge { s, r, o });
    }

    let mut graph = KnowledgeGraph {
        nodes,
        edges,
        relations: p.relations,
        node_index,
        relation_index,
        out_adj: Vec::new(),
        in_adj: Vec::new(),
        und_adj: Vec::new(),
        exact_label: BTreeMap::new(),
        norm_label: BTreeMap::new(),
        alias_lookup: BTreeMap::new(),
        alias_rows: Vec::new(),
        pagerank: p.pagerank,
        pagerank_converged: p.pagerank_converged,
        cooccurrence: p.cooccurrence,
        params: p.params,
        embeddings: p.embeddings,
    };
    graph.rebuild_adjacency();
    graph.apply_alias_rows(p.alias_rows);
    Ok(graph)
}
