//! Entity mention resolution.
//!
//! A mention is matched against the graph through a fixed cascade: exact
//! canonical label, normalized label, alias table, then (optionally) an
//! external resolution service. Each stage carries a fixed confidence so a
//! verdict can explain how its endpoints were grounded. A mention no stage
//! matches is treated as a literal value, not an error.

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{FaithError, Result};
use crate::graph::KnowledgeGraph;

/// Canonical form used for inexact matching: NFKC, lowercase, whitespace
/// collapsed, trailing ASCII punctuation and whitespace removed. Idempotent.
pub fn normalize(s: &str) -> String {
    let nfkc: String = s.nfkc().collect();
    let lower = nfkc.to_lowercase();
    let collapsed = lower.split_whitespace().collect::<Vec<_>>().join(" ");
    collapsed
        .trim_end_matches(|c: char| c.is_ascii_punctuation() || c.is_whitespace())
        .to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMethod {
    Exact,
    Normalized,
    Alias,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedMention {
    pub node_id: String,
    #[serde(skip)]
    pub node_ix: u32,
    pub method: MatchMethod,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Resolution {
    Matched(ResolvedMention),
    Unmatched,
}

impl Resolution {
    pub fn matched(&self) -> Option<&ResolvedMention> {
        match self {
            Resolution::Matched(m) => Some(m),
            Resolution::Unmatched => None,
        }
    }
}

/// External candidate as returned by a resolution service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: String,
    pub confidence: f64,
}

/// Optional last stage of the cascade.
pub trait ExternalResolver: Send + Sync {
    fn candidates(&self, mention: &str) -> Result<Vec<Candidate>>;
}

/// Disables the external stage.
pub struct NoExternal;

impl ExternalResolver for NoExternal {
    fn candidates(&self, _mention: &str) -> Result<Vec<Candidate>> {
        Ok(Vec::new())
    }
}

pub const DEFAULT_EXTERNAL_CUTOFF: f64 = 0.9;
pub const CONFIDENCE_EXACT: f64 = 1.0;
pub const CONFIDENCE_NORMALIZED: f64 = 0.95;
pub const CONFIDENCE_ALIAS: f64 = 0.9;

/// Runs the cascade for one mention.
///
/// External candidates are filtered to node ids present in the graph; the
/// best remaining candidate must clear `cutoff`. External failures degrade
/// to no candidates rather than aborting.
pub fn resolve(
    mention: &str,
    graph: &KnowledgeGraph,
    external: &dyn ExternalResolver,
    cutoff: f64,
) -> Resolution {
    if let Some(ix) = graph.lookup_exact(mention) {
        return matched(graph, ix, MatchMethod::Exact, CONFIDENCE_EXACT);
    }
    let norm = normalize(mention);
    if !norm.is_empty() {
        if let Some(ix) = graph.lookup_normalized(&norm) {
            return matched(graph, ix, MatchMethod::Normalized, CONFIDENCE_NORMALIZED);
        }
        if let Some(ix) = graph.lookup_alias(&norm) {
            return matched(graph, ix, MatchMethod::Alias, CONFIDENCE_ALIAS);
        }
    }

    let mut candidates = match external.candidates(mention) {
        Ok(c) => c,
        Err(_) => Vec::new(),
    };
    candidates.retain(|c| graph.node_ix(&c.id).is_some() && c.confidence.is_finite());
    candidates.sort_by(|a, b| {
        b.confidence
            .partial_cmp(&a.confidence)
            .unwrap()
            .then_with(|| a.id.cmp(&b.id))
    });
    if let Some(best) = candidates.first() {
        if best.confidence >= cutoff {
            let ix = graph.node_ix(&best.id).unwrap();
            return matched(graph, ix, MatchMethod::External, best.confidence);
        }
    }
    Resolution::Unmatched
}

fn matched(graph: &KnowledgeGraph, ix: u32, method: MatchMethod, confidence: f64) -> Resolution {
    Resolution::Matched(ResolvedMention {
        node_id: graph.node(ix).node_id.clone(),
        node_ix: ix,
        method,
        confidence,
    })
}

/// How a claim's endpoint pair grounds in the graph.
#[derive(Debug, Clone, PartialEq)]
pub enum ClaimGrounding {
    /// Both endpoints matched, to different nodes.
    Verifiable {
        subject: ResolvedMention,
        object: ResolvedMention,
    },
    /// Both endpoints matched the same node; such claims carry no checkable
    /// relation and are excluded from scoring.
    Degenerate { node: ResolvedMention },
    /// At least one endpoint stayed unmatched.
    Unverifiable {
        subject: Option<ResolvedMention>,
        object: Option<ResolvedMention>,
    },
}

pub fn ground_claim(
    subject: &str,
    object: &str,
    graph: &KnowledgeGraph,
    external: &dyn ExternalResolver,
    cutoff: f64,
) -> ClaimGrounding {
    let s = resolve(subject, graph, external, cutoff);
    let o = resolve(object, graph, external, cutoff);
    match (s, o) {
        (Resolution::Matched(a), Resolution::Matched(b)) => {
            if a.node_ix == b.node_ix {
                ClaimGrounding::Degenerate { node: a }
            } else {
                ClaimGrounding::Verifiable {
                    subject: a,
                    object: b,
                }
            }
        }
        (s, o) => ClaimGrounding::Unverifiable {
            subject: s.matched().cloned(),
            object: o.matched().cloned(),
        },
    }
}

/// Resolution service speaking JSON over HTTP:
/// request `{"mention": ...}`, response `{"candidates": [{"id", "confidence"}]}`.
pub struct HttpResolver {
    endpoint: String,
    client: reqwest::blocking::Client,
}

impl HttpResolver {
    pub fn new(endpoint: impl Into<String>) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(10))
            .build()
            .map_err(|e| FaithError::Provider(format!("resolver client: {e}")))?;
        Ok(HttpResolver {
            endpoint: endpoint.into(),
            client,
        })
    }
}

#[derive(Serialize)]
struct ResolverRequest<'a> {
    mention: &'a str,
}

#[derive(Deserialize)]
struct ResolverResponse {
    candidates: Vec<Candidate>,
}

impl ExternalResolver for HttpResolver {
    fn candidates(&self, mention: &str) -> Result<Vec<Candidate>> {
        let response = self
            .client
            .post(&self.endpoint)
            .json(&ResolverRequest { mention })
            .send()
            .map_err(|e| FaithError::Provider(format!("resolver request: {e}")))?;
        if !response.status().is_success() {
            return Err(FaithError::Provider(format!(
                "resolver returned {}",
                response.status()
            )));
        }
        let parsed: ResolverResponse = response
            .json()
            .map_err(|e| FaithError::Provider(format!("resolver response: {e}")))?;
        Ok(parsed.candidates)
    }
}
