//! Deterministic pattern-based claim extraction.
//!
//! An offline alternative to the chat-driven extractor: a table maps
//! connective phrases ("is a symptom of", "treats") to relation labels, and
//! each sentence is scanned for `<entity> <connective> <entity>` where both
//! entity windows must resolve against the knowledge graph. Useful for tests
//! and for environments without a chat endpoint.

use regex::Regex;

use crate::error::{FaithError, Result};
use crate::graph::KnowledgeGraph;
use crate::resolve::{resolve, NoExternal, DEFAULT_EXTERNAL_CUTOFF};

use super::ClaimTriplet;

/// Widest entity window tried on either side of a connective, in tokens.
const MAX_ENTITY_TOKENS: usize = 6;

#[derive(Debug, Clone)]
struct PatternRow {
    connective: String,
    relation: String,
    matcher: Regex,
}

/// Connective-to-relation lookup, longest connective tried first so that
/// "is a classic symptom of" wins over "is a symptom of".
#[derive(Debug, Clone, Default)]
pub struct PatternTable {
    rows: Vec<PatternRow>,
}

impl PatternTable {
    /// Parses tab-separated `connective<TAB>relation` rows. Blank lines and
    /// `#` comments are skipped.
    pub fn parse(text: &str) -> Result<PatternTable> {
        let mut rows = Vec::new();
        for (ix, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.splitn(2, '\t');
            let connective = parts.next().unwrap_or("").trim();
            let relation = parts.next().unwrap_or("").trim();
            if connective.is_empty() || relation.is_empty() {
                return Err(FaithError::InvalidParam(format!(
                    "pattern line {}: expected connective<TAB>relation",
                    ix + 1
                )));
            }
            let pattern = format!(r"(?i)\b{}\b", regex::escape(connective));
            let matcher = Regex::new(&pattern)
                .map_err(|e| FaithError::InvalidParam(format!("pattern line {}: {e}", ix + 1)))?;
            rows.push(PatternRow {
                connective: connective.to_string(),
                relation: relation.to_string(),
                matcher,
            });
        }
        rows.sort_by(|a, b| {
            b.connective
                .len()
                .cmp(&a.connective.len())
                .then_with(|| a.connective.cmp(&b.connective))
        });
        Ok(PatternTable { rows })
    }

    /// The bundled medical connective table.
    pub fn default_table() -> PatternTable {
        PatternTable::parse(include_str!("../../prompts/rule_patterns.tsv"))
            .expect("bundled pattern table is well-formed")
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Token positions as byte ranges within a sentence slice.
fn tokens_with_spans(s: &str) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (ix, ch) in s.char_indices() {
        if ch.is_whitespace() {
            if let Some(st) = start.take() {
                out.push((st, ix));
            }
        } else if start.is_none() {
            start = Some(ix);
        }
    }
    if let Some(st) = start {
        out.push((st, s.len()));
    }
    out
}

fn resolves(phrase: &str, graph: &KnowledgeGraph) -> bool {
    resolve(phrase, graph, &NoExternal, DEFAULT_EXTERNAL_CUTOFF)
        .matched()
        .is_some()
}

/// Longest suffix of `left` (at most [`MAX_ENTITY_TOKENS`] tokens) that
/// resolves in the graph, returned as its byte range within `left`.
fn entity_suffix(left: &str, graph: &KnowledgeGraph) -> Option<(usize, usize)> {
    let toks = tokens_with_spans(left);
    if toks.is_empty() {
        return None;
    }
    let max = toks.len().min(MAX_ENTITY_TOKENS);
    for width in (1..=max).rev() {
        let start = toks[toks.len() - width].0;
        let end = toks[toks.len() - 1].1;
        if resolves(&left[start..end], graph) {
            return Some((start, end));
        }
    }
    None
}

/// Longest prefix of `right` (at most [`MAX_ENTITY_TOKENS`] tokens) that
/// resolves in the graph, returned as its byte range within `right`.
fn entity_prefix(right: &str, graph: &KnowledgeGraph) -> Option<(usize, usize)> {
    let toks = tokens_with_spans(right);
    if toks.is_empty() {
        return None;
    }
    let max = toks.len().min(MAX_ENTITY_TOKENS);
    for width in (1..=max).rev() {
        let start = toks[0].0;
        let end = toks[width - 1].1;
        if resolves(&right[start..end], graph) {
            return Some((start, end));
        }
    }
    None
}

fn char_offset(text: &str, byte_ix: usize) -> usize {
    text[..byte_ix].chars().count()
}

/// Scans `text` sentence by sentence for `<entity> <connective> <entity>`
/// and emits one claim per match. Entity text is verbatim; spans are
/// character offsets into `text` covering subject start through object end.
/// Unmatchable sentences are skipped; the result may be empty.
pub fn extract_rule_based(
    text: &str,
    patterns: &PatternTable,
    graph: &KnowledgeGraph,
) -> Vec<ClaimTriplet> {
    let mut out: Vec<ClaimTriplet> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();

    // sentence boundaries: terminator position, slices exclude the terminator
    let mut sent_start = 0usize;
    let bytes = text.as_bytes();
    let mut boundaries: Vec<(usize, usize)> = Vec::new();
    for (ix, &b) in bytes.iter().enumerate() {
        if b == b'.' || b == b'!' || b == b'?' {
            boundaries.push((sent_start, ix));
            sent_start = ix + 1;
        }
    }
    if sent_start < text.len() {
        boundaries.push((sent_start, text.len()));
    }

    for (s_start, s_end) in boundaries {
        let sentence = &text[s_start..s_end];
        if sentence.trim().is_empty() {
            continue;
        }
        for row in &patterns.rows {
            let Some(m) = row.matcher.find(sentence) else {
                continue;
            };
            let left = &sentence[..m.start()];
            let right = &sentence[m.end()..];
            let Some((ls, le)) = entity_suffix(left, graph) else {
                continue;
            };
            let Some((rs, re)) = entity_prefix(right, graph) else {
                continue;
            };
            let span_start = char_offset(text, s_start + ls);
            let span_end = char_offset(text, s_start + m.end() + re);
            let mut claim =
                ClaimTriplet::new(&left[ls..le], row.relation.clone(), &right[rs..re]);
            claim.span = Some((span_start, span_end));
            let key = claim.normalized_key();
            if seen.insert(key) {
                out.push(claim);
            }
            break; // longest matching connective wins for this sentence
        }
    }
    out
}
