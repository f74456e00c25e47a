//! Batch scoring of response files with optional baseline metrics.
//!
//! Input is JSONL, one `{"id", "text", "model"?}` object per line, optionally
//! joined against a reference-answer file `{"id", "reference"}` for the text
//! baselines. Responses are scored independently (and in parallel when a
//! rayon pool is installed); a failure in one response is recorded in its
//! report and never aborts the batch.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{bleu4, kl_rel_score, kl_score, rouge_l};
use crate::embedding::{for_graph, EmbeddingProvider};
use crate::error::{FaithError, Result};
use crate::graph::KnowledgeGraph;
use crate::numeric::{mean, population_std};
use crate::pipeline::{evaluate_response_with, Extractor, JudgeOptions};
use crate::report::{failed_report, ResponseReport, VerdictStatus};
use crate::resolve::ExternalResolver;

/// One response to score.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResponseRow {
    pub id: String,
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub model: Option<String>,
}

/// Reads a response JSONL file. Blank lines are skipped; any malformed line
/// or duplicate id aborts the load.
pub fn load_responses(path: &Path) -> Result<Vec<ResponseRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| FaithError::io(path, e))?;
    let mut rows = Vec::new();
    let mut seen = BTreeSet::new();
    for (ix, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: ResponseRow = serde_json::from_str(line).map_err(|e| FaithError::BadRecord {
            path: path.to_path_buf(),
            line: ix + 1,
            reason: e.to_string(),
        })?;
        if !seen.insert(row.id.clone()) {
            return Err(FaithError::BadRecord {
                path: path.to_path_buf(),
                line: ix + 1,
                reason: format!("duplicate response id '{}'", row.id),
            });
        }
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Debug, Clone, Deserialize)]
struct ReferenceRow {
    id: String,
    reference: String,
}

/// Reads a reference-answer JSONL file into an id-keyed map. A repeated id
/// keeps the last row.
pub fn load_references(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| FaithError::io(path, e))?;
    let mut out = BTreeMap::new();
    for (ix, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: ReferenceRow = serde_json::from_str(line).map_err(|e| FaithError::BadRecord {
            path: path.to_path_buf(),
            line: ix + 1,
            reason: e.to_string(),
        })?;
        out.insert(row.id, row.reference);
    }
    Ok(out)
}

/// Which baseline metrics a batch run computes alongside the main score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BaselineSelection {
    pub kl: bool,
    pub klrel: bool,
    pub bleu4: bool,
    pub rougel: bool,
}

impl BaselineSelection {
    /// Parses a comma-separated list drawn from kl, klrel, bleu4, rougel.
    pub fn parse(csv: &str) -> Result<Self> {
        let mut sel = BaselineSelection::default();
        for token in csv.split(',') {
            let token = token.trim();
            match token {
                "" => {}
                "kl" => sel.kl = true,
                "klrel" => sel.klrel = true,
                "bleu4" => sel.bleu4 = true,
                "rougel" => sel.rougel = true,
                other => {
                    return Err(FaithError::InvalidParam(format!(
                        "unknown baseline '{other}' (expected kl, klrel, bleu4, rougel)"
                    )))
                }
            }
        }
        Ok(sel)
    }

    pub fn any(&self) -> bool {
        self.kl || self.klrel || self.bleu4 || self.rougel
    }
}

/// Baseline values for one response; absent metrics were not requested or
/// not computable (no verifiable claims, no reference text).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BaselineScores {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kl: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub klrel: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bleu4: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rougel: Option<f64>,
}

/// Aggregate-score statistics for a group of responses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub n_responses: usize,
    /// Responses with a numeric aggregate.
    pub n_scored: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mean: Option<f64>,
    /// Population standard deviation.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sd: Option<f64>,
}

fn group_stats(scores: &[f64], n_responses: usize) -> GroupStats {
    GroupStats {
        n_responses,
        n_scored: scores.len(),
        mean: mean(scores),
        sd: population_std(scores),
    }
}

/// One line of the batch summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub response_id: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub model: Option<String>,
    pub aggregate_score: Option<f64>,
    pub n_claims: usize,
    pub n_scored: usize,
    pub n_no_path: usize,
    pub n_unverifiable: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub flag: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    pub baselines: BaselineScores,
}

/// Whole-batch summary, row order matching the input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub n_responses: usize,
    pub n_failed: usize,
    pub overall: GroupStats,
    pub per_model: BTreeMap<String, GroupStats>,
    pub rows: Vec<SummaryRow>,
}

/// Full batch output: one report per input row, in input order, plus the
/// summary.
#[derive(Debug, Clone)]
pub struct BatchOutcome {
    pub reports: Vec<ResponseReport>,
    pub summary: BatchSummary,
}

fn response_baselines(
    graph: &KnowledgeGraph,
    report: &ResponseReport,
    text: &str,
    embeddings: &dyn EmbeddingProvider,
    selection: BaselineSelection,
    reference: Option<&str>,
    opts: &JudgeOptions,
) -> BaselineScores {
    let mut out = BaselineScores::default();
    if selection.kl || selection.klrel {
        let mut kl_values = Vec::new();
        let mut klrel_values = Vec::new();
        for v in &report.verdicts {
            if !matches!(v.status, VerdictStatus::Scored | VerdictStatus::NoPath) {
                continue;
            }
            let (Some(s), Some(o)) = (&v.subject_resolution, &v.object_resolution) else {
                continue;
            };
            if selection.kl {
                kl_values.push(kl_score(graph, s.node_ix, o.node_ix, &opts.caps));
            }
            if selection.klrel {
                klrel_values.push(kl_rel_score(
                    graph,
                    s.node_ix,
                    o.node_ix,
                    &v.claim.relation,
                    embeddings,
                    &opts.caps,
                ));
            }
        }
        if selection.kl {
            out.kl = mean(&kl_values);
        }
        if selection.klrel {
            out.klrel = mean(&klrel_values);
        }
    }
    if let Some(reference) = reference {
        if selection.bleu4 {
            out.bleu4 = Some(bleu4(text, reference));
        }
        if selection.rougel {
            out.rougel = Some(rouge_l(text, reference));
        }
    }
    out
}

/// Scores every response, isolating failures, and assembles the summary.
/// Runs on the ambient rayon pool; row order is preserved.
pub fn run_batch(
    graph: &KnowledgeGraph,
    rows: &[ResponseRow],
    extractor: &Extractor<'_>,
    external: &dyn ExternalResolver,
    opts: &JudgeOptions,
    selection: BaselineSelection,
    references: &BTreeMap<String, String>,
) -> BatchOutcome {
    let embeddings = for_graph(graph);
    let scored: Vec<(ResponseReport, BaselineScores)> = rows
        .par_iter()
        .map(|row| {
            let report = match evaluate_response_with(
                graph,
                &row.id,
                row.model.as_deref(),
                &row.text,
                extractor,
                embeddings.as_ref(),
                external,
                opts,
            ) {
                Ok(report) => report,
                Err(e) => failed_report(&row.id, row.model.as_deref(), &e.to_string()),
            };
            let baselines = response_baselines(
                graph,
                &report,
                &row.text,
                embeddings.as_ref(),
                selection,
                references.get(&row.id).map(String::as_str),
                opts,
            );
            (report, baselines)
        })
        .collect();

    let mut reports = Vec::with_capacity(scored.len());
    let mut summary_rows = Vec::with_capacity(scored.len());
    let mut overall_scores = Vec::new();
    let mut per_model_scores: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut per_model_counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut n_failed = 0usize;

    for (report, baselines) in scored {
        if report.error.is_some() {
            n_failed += 1;
        }
        if let Some(score) = report.aggregate_score {
            overall_scores.push(score);
        }
        if let Some(model) = &report.model {
            *per_model_counts.entry(model.clone()).or_insert(0) += 1;
            if let Some(score) = report.aggregate_score {
                per_model_scores
                    .entry(model.clone())
                    .or_default()
                    .push(score);
            }
        }
        summary_rows.push(SummaryRow {
            response_id: report.response_id.clone(),
            model: report.model.clone(),
            aggregate_score: report.aggregate_score,
            n_claims: report.n_claims,
            n_scored: report.n_scored,
            n_no_path: report.n_no_path,
            n_unverifiable: report.n_unverifiable,
            flag: report.flag.clone(),
            error: report.error.clone(),
            baselines,
        });
        reports.push(report);
    }

    let per_model = per_model_counts
        .into_iter()
        .map(|(model, n)| {
            let scores = per_model_scores.remove(&model).unwrap_or_default();
            (model.clone(), group_stats(&scores, n))
        })
        .collect();

    BatchOutcome {
        summary: BatchSummary {
            n_responses: rows.len(),
            n_failed,
            overall: group_stats(&overall_scores, rows.len()),
            per_model,
            rows: summary_rows,
        },
        reports,
    }
}

fn tsv_cell_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// Tab-separated rendering of the summary, one row per response.
pub fn summary_tsv(summary: &BatchSummary) -> String {
    let mut out = String::from(
        "response_id\tmodel\taggregate_score\tn_claims\tn_scored\tn_no_path\tn_unverifiable\tflag\tkl\tklrel\tbleu4\trougel\n",
    );
    for row in &summary.rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            row.response_id,
            row.model.as_deref().unwrap_or(""),
            tsv_cell_opt(row.aggregate_score),
            row.n_claims,
            row.n_scored,
            row.n_no_path,
            row.n_unverifiable,
            row.flag.as_deref().unwrap_or(""),
            tsv_cell_opt(row.baselines.kl),
            tsv_cell_opt(row.baselines.klrel),
            tsv_cell_opt(row.baselines.bleu4),
            tsv_cell_opt(row.baselines.rougel),
        ));
    }
    out
}
