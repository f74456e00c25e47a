//! Tab-separated input formats: edge lists, synonym tables, embedding tables.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{FaithError, Result};
use crate::graph::GraphBuilder;

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| FaithError::io(path, e))
}

/// Loads a five-column edge list:
/// `subject_id \t subject_label \t relation_label \t object_id \t object_label`.
///
/// Blank lines are skipped. Malformed lines (wrong column count or an empty
/// field) are tolerated up to 1% of the data lines and reported as builder
/// warnings; beyond that the load aborts naming the first offenders.
pub fn load_edge_list(path: &Path, has_header: bool) -> Result<GraphBuilder> {
    let text = read_to_string(path)?;
    let mut builder = GraphBuilder::new();
    let mut bad_lines: Vec<usize> = Vec::new();
    let mut total = 0usize;
    let mut seen_header = !has_header;

    for (ix, line) in text.lines().enumerate() {
        let line_no = ix + 1;
        if line.trim().is_empty() {
            continue;
        }
        if !seen_header {
            seen_header = true;
            continue;
        }
        total += 1;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 || fields.iter().any(|f| f.trim().is_empty()) {
            bad_lines.push(line_no);
            continue;
        }
        builder.add_edge(
            fields[0].trim(),
            fields[1].trim(),
            fields[2].trim(),
            fields[3].trim(),
            fields[4].trim(),
        );
    }

    if !bad_lines.is_empty() && (bad_lines.len() as f64) > 0.01 * total as f64 {
        let bad = bad_lines.len();
        bad_lines.truncate(10);
        return Err(FaithError::MalformedInput {
            path: path.to_path_buf(),
            bad,
            total,
            lines: bad_lines,
        });
    }
    for line_no in bad_lines {
        builder
            .warnings
            .push(format!("{}: line {line_no} malformed, skipped", path.display()));
    }
    Ok(builder)
}

/// Outcome of applying a synonym table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynonymReport {
    pub applied: usize,
    pub skipped: usize,
}

impl GraphBuilder {
    /// Loads `alias \t canonical_node_id` rows. Rows naming an unknown node
    /// are skipped with a warning; duplicates of the same alias keep the
    /// first mapping.
    pub fn load_synonyms(&mut self, path: &Path) -> Result<SynonymReport> {
        let text = read_to_string(path)?;
        let mut report = SynonymReport {
            applied: 0,
            skipped: 0,
        };
        for (ix, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let Some((alias, node_id)) = line.split_once('\t') else {
                self.warnings.push(format!(
                    "{}: line {} is not alias<TAB>node_id, skipped",
                    path.display(),
                    ix + 1
                ));
                report.skipped += 1;
                continue;
            };
            let (alias, node_id) = (alias.trim(), node_id.trim());
            if alias.is_empty() || node_id.is_empty() {
                report.skipped += 1;
                continue;
            }
            if self.add_alias(alias, node_id) {
                report.applied += 1;
            } else {
                report.skipped += 1;
            }
        }
        Ok(report)
    }
}

/// Loads `label \t v1,v2,...,vd` rows into unit vectors.
///
/// Every row must have the same dimension; rows that do not parse, have a
/// zero norm, or disagree on dimension reject the whole file. A repeated
/// label keeps the last row.
pub fn load_embedding_table(path: &Path) -> Result<BTreeMap<String, Vec<f64>>> {
    let text = read_to_string(path)?;
    let mut table = BTreeMap::new();
    let mut dim: Option<usize> = None;
    for (ix, line) in text.lines().enumerate() {
        let line_no = ix + 1;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: &str| FaithError::BadRecord {
            path: path.to_path_buf(),
            line: line_no,
            reason: reason.to_string(),
        };
        let (label, rest) = line
            .split_once('\t')
            .ok_or_else(|| bad("expected label<TAB>v1,v2,..."))?;
        let values: Vec<f64> = rest
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(&format!("bad component: {e}")))?;
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(bad("vector must be non-empty and finite"));
        }
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(bad(&format!(
                    "dimension {} disagrees with earlier rows ({d})",
                    values.len()
                )));
            }
            _ => {}
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(bad("zero vector cannot be normalized"));
        }
        let unit: Vec<f64> = values.iter().map(|v| v / norm).collect();
        table.insert(label.trim().to_string(), unit);
    }
    Ok(table)
}
