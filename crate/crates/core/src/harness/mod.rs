//! Evaluation harness: batch scoring, distribution statistics, score-based
//! response rejection, graph perturbation, and labeled-claim benchmarking.
//!
//! The statistics helpers re-exported here operate on response aggregate
//! scores. Rejection (`rta_threshold` / `apply_rta`) implements the protocol
//! of withholding responses whose aggregate falls below a percentile of the
//! batch's own score distribution.

pub mod batch;
pub mod perturb;

use serde::{Deserialize, Serialize};

pub use crate::numeric::{coefficient_of_variation, mean, pearson, population_std};

use crate::embedding::for_graph;
use crate::error::{FaithError, Result};
use crate::extract::ClaimTriplet;
use crate::graph::KnowledgeGraph;
use crate::numeric::{auc, quantile};
use crate::pipeline::{judge_claim, JudgeOptions};
use crate::report::{ResponseReport, VerdictStatus};
use crate::resolve::ExternalResolver;

/// Percentile threshold over a score distribution, by linear interpolation.
/// `None` on an empty distribution. `q` is clamped to [0,1].
pub fn rta_threshold(scores: &[f64], q: f64) -> Option<f64> {
    let mut sorted: Vec<f64> = scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    quantile(&sorted, q.clamp(0.0, 1.0))
}

/// Splits reports into (kept, rejected): rejected when the aggregate is
/// below the threshold or missing. Order is preserved on both sides.
pub fn apply_rta<'a>(
    reports: &'a [ResponseReport],
    threshold: f64,
) -> (Vec<&'a ResponseReport>, Vec<&'a ResponseReport>) {
    let mut kept = Vec::new();
    let mut rejected = Vec::new();
    for report in reports {
        match report.aggregate_score {
            Some(score) if score >= threshold => kept.push(report),
            _ => rejected.push(report),
        }
    }
    (kept, rejected)
}

/// A claim with a truth label, for fact-verification benchmarks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabeledClaim {
    pub subject: String,
    pub relation: String,
    pub object: String,
    pub label: bool,
}

/// Reads labeled claims from JSONL, one
/// `{"subject", "relation", "object", "label"}` object per line. Blank lines
/// are skipped; malformed lines abort the load.
pub fn load_labeled_claims(path: &std::path::Path) -> Result<Vec<LabeledClaim>> {
    let text = std::fs::read_to_string(path).map_err(|e| FaithError::io(path, e))?;
    let mut rows = Vec::new();
    for (ix, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: LabeledClaim = serde_json::from_str(line).map_err(|e| FaithError::BadRecord {
            path: path.to_path_buf(),
            line: ix + 1,
            reason: e.to_string(),
        })?;
        rows.push(row);
    }
    Ok(rows)
}

/// Per-claim benchmark row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MfvClaimRow {
    pub subject: String,
    pub relation: String,
    pub object: String,
    pub label: bool,
    pub status: VerdictStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub score: Option<f64>,
}

/// Fact-verification benchmark output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MfvResult {
    /// Rank-based separation of true from false claim scores; `None` when
    /// only one class has scorable claims.
    pub auc: Option<f64>,
    pub mean_true: Option<f64>,
    pub mean_false: Option<f64>,
    pub n_claims: usize,
    /// Claims the graph could not ground; excluded from the statistics.
    pub n_unverifiable: usize,
    pub per_claim: Vec<MfvClaimRow>,
}

/// Scores every labeled claim and measures how well the scores separate the
/// true from the false ones. Unverifiable (and degenerate) claims are
/// excluded from the statistics but reported per claim; if nothing at all is
/// scorable the benchmark is meaningless and errors out.
pub fn mfv_benchmark(
    graph: &KnowledgeGraph,
    claims: &[LabeledClaim],
    external: &dyn ExternalResolver,
    opts: &JudgeOptions,
) -> Result<MfvResult> {
    if claims.is_empty() {
        return Err(FaithError::InvalidParam("no labeled claims supplied".into()));
    }
    let embeddings = for_graph(graph);
    let mut per_claim = Vec::with_capacity(claims.len());
    let mut true_scores = Vec::new();
    let mut false_scores = Vec::new();
    let mut n_unverifiable = 0usize;

    for lc in claims {
        let verdict = judge_claim(
            graph,
            ClaimTriplet::new(&*lc.subject, &*lc.relation, &*lc.object),
            embeddings.as_ref(),
            external,
            opts,
        );
        match verdict.score {
            Some(score) => {
                if lc.label {
                    true_scores.push(score);
                } else {
                    false_scores.push(score);
                }
            }
            None => n_unverifiable += 1,
        }
        per_claim.push(MfvClaimRow {
            subject: lc.subject.clone(),
            relation: lc.relation.clone(),
            object: lc.object.clone(),
            label: lc.label,
            status: verdict.status,
            score: verdict.score,
        });
    }

    if true_scores.is_empty() && false_scores.is_empty() {
        return Err(FaithError::InvalidParam(
            "every labeled claim was unverifiable against this graph".into(),
        ));
    }

    Ok(MfvResult {
        auc: auc(&true_scores, &false_scores),
        mean_true: mean(&true_scores),
        mean_false: mean(&false_scores),
        n_claims: claims.len(),
        n_unverifiable,
        per_claim,
    })
}
