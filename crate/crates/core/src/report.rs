//! Response-level verdict aggregation and explainable reports.
//!
//! Each claim gets a [`ClaimVerdict`] recording how it was grounded and, when
//! scorable, the winning evidence path with its full score breakdown. A
//! [`ResponseReport`] aggregates the verdicts into one response score: the
//! arithmetic mean over claims with a numeric score, where a claim whose
//! endpoints both resolve but share no path contributes 0, and claims the
//! graph cannot speak about (unverifiable, degenerate) are excluded. When no
//! claim has a numeric score the aggregate is null and the report is flagged.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::evidence::EvidencePath;
use crate::extract::ClaimTriplet;
use crate::resolve::ResolvedMention;
use crate::scoring::{CandidateSummary, PathScoreBreakdown, PredicateMapping, ScoredClaim};

/// How many lowest-scoring claims a report surfaces by default.
pub const DEFAULT_LOWEST_K: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    /// Both endpoints grounded and connected; score is the path weight.
    Scored,
    /// Both endpoints grounded but no connecting path; scores 0.
    NoPath,
    /// At least one endpoint did not resolve; excluded from the mean.
    Unverifiable,
    /// Both endpoints resolved to the same node; excluded from the mean.
    Degenerate,
    /// Claim extraction itself failed for the response.
    ExtractionFailed,
}

/// One claim's outcome, with everything needed to explain it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimVerdict {
    #[serde(flatten)]
    pub claim: ClaimTriplet,
    pub status: VerdictStatus,
    /// Path weight when scored, 0.0 when no path, absent otherwise.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub predicate_mapping: Option<PredicateMapping>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub path: Option<EvidencePath>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub breakdown: Option<PathScoreBreakdown>,
    /// Runner-up paths, for inspection.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub candidates: Vec<CandidateSummary>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub subject_resolution: Option<ResolvedMention>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub object_resolution: Option<ResolvedMention>,
}

impl ClaimVerdict {
    fn bare(claim: ClaimTriplet, status: VerdictStatus) -> Self {
        ClaimVerdict {
            claim,
            status,
            score: None,
            predicate_mapping: None,
            path: None,
            breakdown: None,
            candidates: Vec::new(),
            subject_resolution: None,
            object_resolution: None,
        }
    }

    pub fn scored(
        claim: ClaimTriplet,
        scored: ScoredClaim,
        subject: ResolvedMention,
        object: ResolvedMention,
    ) -> Self {
        ClaimVerdict {
            score: Some(scored.weight),
            predicate_mapping: Some(scored.mapping),
            path: Some(scored.path),
            breakdown: Some(scored.breakdown),
            candidates: scored.candidates,
            subject_resolution: Some(subject),
            object_resolution: Some(object),
            ..ClaimVerdict::bare(claim, VerdictStatus::Scored)
        }
    }

    pub fn no_path(claim: ClaimTriplet, subject: ResolvedMention, object: ResolvedMention) -> Self {
        ClaimVerdict {
            score: Some(0.0),
            subject_resolution: Some(subject),
            object_resolution: Some(object),
            ..ClaimVerdict::bare(claim, VerdictStatus::NoPath)
        }
    }

    pub fn unverifiable(
        claim: ClaimTriplet,
        subject: Option<ResolvedMention>,
        object: Option<ResolvedMention>,
    ) -> Self {
        ClaimVerdict {
            subject_resolution: subject,
            object_resolution: object,
            ..ClaimVerdict::bare(claim, VerdictStatus::Unverifiable)
        }
    }

    pub fn degenerate(claim: ClaimTriplet, node: ResolvedMention) -> Self {
        ClaimVerdict {
            subject_resolution: Some(node.clone()),
            object_resolution: Some(node),
            ..ClaimVerdict::bare(claim, VerdictStatus::Degenerate)
        }
    }

    /// Sort key: numeric scores ascending, scoreless verdicts last, ties by
    /// claim text.
    fn rank_key(&self) -> (bool, f64, (String, String, String)) {
        (
            self.score.is_none(),
            self.score.unwrap_or(f64::INFINITY),
            (
                self.claim.subject.clone(),
                self.claim.relation.clone(),
                self.claim.object.clone(),
            ),
        )
    }
}

/// The full evaluation of one response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseReport {
    pub response_id: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub model: Option<String>,
    /// Mean over numeric claim scores; null when no claim was scorable.
    pub aggregate_score: Option<f64>,
    pub n_claims: usize,
    pub n_scored: usize,
    pub n_no_path: usize,
    pub n_unverifiable: usize,
    pub n_degenerate: usize,
    /// Set when the aggregate is null ("unverifiable") or the response could
    /// not be processed ("extraction_failed").
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub flag: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    /// All verdicts, ranked ascending by score (scoreless last).
    pub verdicts: Vec<ClaimVerdict>,
    /// The k lowest numeric-score verdicts.
    pub lowest_k: Vec<ClaimVerdict>,
    /// Relation labels on the evidence paths of `lowest_k`, with counts.
    pub edge_type_histogram: BTreeMap<String, usize>,
}

fn cmp_rank(a: &ClaimVerdict, b: &ClaimVerdict) -> std::cmp::Ordering {
    let (an, av, at) = a.rank_key();
    let (bn, bv, bt) = b.rank_key();
    an.cmp(&bn)
        .then_with(|| av.partial_cmp(&bv).unwrap_or(std::cmp::Ordering::Equal))
        .then_with(|| at.cmp(&bt))
}

/// Builds a report from claim verdicts. The aggregate is the mean over
/// verdicts carrying a numeric score; order of the input does not matter.
pub fn aggregate(
    response_id: &str,
    model: Option<&str>,
    mut verdicts: Vec<ClaimVerdict>,
    k: usize,
) -> ResponseReport {
    verdicts.sort_by(cmp_rank);

    let numeric: Vec<f64> = verdicts.iter().filter_map(|v| v.score).collect();
    let aggregate_score = if numeric.is_empty() {
        None
    } else {
        Some(numeric.iter().sum::<f64>() / numeric.len() as f64)
    };

    let count = |s: VerdictStatus| verdicts.iter().filter(|v| v.status == s).count();
    let lowest_k: Vec<ClaimVerdict> = verdicts
        .iter()
        .filter(|v| v.score.is_some())
        .take(k)
        .cloned()
        .collect();

    let mut edge_type_histogram = BTreeMap::new();
    for v in &lowest_k {
        if let Some(path) = &v.path {
            for rel in &path.relations {
                *edge_type_histogram.entry(rel.clone()).or_insert(0usize) += 1;
            }
        }
    }

    ResponseReport {
        response_id: response_id.to_string(),
        model: model.map(str::to_string),
        aggregate_score,
        n_claims: verdicts.len(),
        n_scored: count(VerdictStatus::Scored),
        n_no_path: count(VerdictStatus::NoPath),
        n_unverifiable: count(VerdictStatus::Unverifiable),
        n_degenerate: count(VerdictStatus::Degenerate),
        flag: aggregate_score.is_none().then(|| "unverifiable".to_string()),
        error: None,
        verdicts,
        lowest_k,
        edge_type_histogram,
    }
}

/// Report for a response whose claim extraction failed outright.
pub fn failed_report(response_id: &str, model: Option<&str>, error: &str) -> ResponseReport {
    ResponseReport {
        response_id: response_id.to_string(),
        model: model.map(str::to_string),
        aggregate_score: None,
        n_claims: 0,
        n_scored: 0,
        n_no_path: 0,
        n_unverifiable: 0,
        n_degenerate: 0,
        flag: Some("extraction_failed".to_string()),
        error: Some(error.to_string()),
        verdicts: Vec::new(),
        lowest_k: Vec::new(),
        edge_type_histogram: BTreeMap::new(),
    }
}

/// The `k` lowest numeric-score verdicts of a report, ties broken by claim
/// text. Independent of the `k` the report was built with.
pub fn lowest_claims(report: &ResponseReport, k: usize) -> Vec<&ClaimVerdict> {
    let mut numeric: Vec<&ClaimVerdict> = report
        .verdicts
        .iter()
        .filter(|v| v.score.is_some())
        .collect();
    numeric.sort_by(|a, b| cmp_rank(a, b));
    numeric.truncate(k);
    numeric
}

/// Histogram over evidence-path relation labels of each report's lowest-k
/// claims, trimmed to the `top_n` most frequent (ties lexicographic).
pub fn error_typology(
    reports: &[ResponseReport],
    k: usize,
    top_n: usize,
) -> Vec<(String, usize)> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for report in reports {
        for verdict in lowest_claims(report, k) {
            if let Some(path) = &verdict.path {
                for rel in &path.relations {
                    *counts.entry(rel.clone()).or_insert(0) += 1;
                }
            }
        }
    }
    let mut rows: Vec<(String, usize)> = counts.into_iter().collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    rows.truncate(top_n);
    rows
}

/// Serializes any report-shaped value with sorted keys and stable layout, so
/// equal values give byte-equal JSON.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let value = serde_json::to_value(value)
        .map_err(|e| crate::error::FaithError::Other(format!("serialize: {e}")))?;
    serde_json::to_string_pretty(&value)
        .map_err(|e| crate::error::FaithError::Other(format!("serialize: {e}")))
}

/// Human-readable rendering of a report.
pub fn render_text(report: &ResponseReport) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(out, "response: {}", report.response_id);
    if let Some(model) = &report.model {
        let _ = writeln!(out, "model: {model}");
    }
    match report.aggregate_score {
        Some(s) => {
            let _ = writeln!(out, "aggregate score: {s:.4}");
        }
        None => {
            let _ = writeln!(out, "aggregate score: n/a");
        }
    }
    let _ = writeln!(
        out,
        "claims: {} total, {} scored, {} no-path, {} unverifiable, {} degenerate",
        report.n_claims,
        report.n_scored,
        report.n_no_path,
        report.n_unverifiable,
        report.n_degenerate
    );
    if let Some(error) = &report.error {
        let _ = writeln!(out, "error: {error}");
    }
    for v in &report.verdicts {
        let score = v
            .score
            .map(|s| format!("{s:+.4}"))
            .unwrap_or_else(|| "  n/a ".to_string());
        let status = match v.status {
            VerdictStatus::Scored => "scored",
            VerdictStatus::NoPath => "no_path",
            VerdictStatus::Unverifiable => "unverifiable",
            VerdictStatus::Degenerate => "degenerate",
            VerdictStatus::ExtractionFailed => "extraction_failed",
        };
        let _ = writeln!(
            out,
            "  [{score}] ({status}) {} | {} | {}",
            v.claim.subject, v.claim.relation, v.claim.object
        );
        if let Some(path) = &v.path {
            let mut trail = path.labels[0].clone();
            for (i, rel) in path.relations.iter().enumerate() {
                let arrow = match path.directions[i] {
                    crate::evidence::Direction::Forward => format!(" -{rel}-> "),
                    crate::evidence::Direction::Reversed => format!(" <-{rel}- "),
                };
                trail.push_str(&arrow);
                trail.push_str(&path.labels[i + 1]);
            }
            let _ = writeln!(out, "      via {trail}");
        }
    }
    if !report.edge_type_histogram.is_empty() {
        let mut rows: Vec<(&String, &usize)> = report.edge_type_histogram.iter().collect();
        rows.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
        let rendered: Vec<String> = rows
            .iter()
            .map(|(label, count)| format!("{label}={count}"))
            .collect();
        let _ = writeln!(out, "lowest-claim edge types: {}", rendered.join(", "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evidence::Direction;
    use crate::resolve::MatchMethod;

    fn mention(id: &str) -> ResolvedMention {
        ResolvedMention {
            node_id: id.to_string(),
            node_ix: 0,
            method: MatchMethod::Exact,
            confidence: 1.0,
        }
    }

    fn scored_verdict(s: &str, r: &str, o: &str, score: f64, relations: &[&str]) -> ClaimVerdict {
        let mut v = ClaimVerdict::bare(ClaimTriplet::new(s, r, o), VerdictStatus::Scored);
        v.score = Some(score);
        v.path = Some(EvidencePath {
            nodes: (0..=relations.len()).map(|i| format!("N{i}")).collect(),
            labels: (0..=relations.len()).map(|i| format!("node {i}")).collect(),
            relations: relations.iter().map(|r| r.to_string()).collect(),
            directions: vec![Direction::Forward; relations.len()],
        });
        v
    }

    fn no_path_verdict(s: &str, r: &str, o: &str) -> ClaimVerdict {
        ClaimVerdict::no_path(ClaimTriplet::new(s, r, o), mention("A"), mention("B"))
    }

    fn unverifiable_verdict(s: &str, r: &str, o: &str) -> ClaimVerdict {
        ClaimVerdict::unverifiable(ClaimTriplet::new(s, r, o), None, None)
    }

    #[test]
    fn mean_over_scored_and_no_path() {
        let report = aggregate(
            "r1",
            None,
            vec![
                scored_verdict("a", "r", "b", 1.0, &["r"]),
                scored_verdict("c", "r", "d", 0.5, &["r"]),
                no_path_verdict("e", "r", "f"),
            ],
            5,
        );
        assert_eq!(report.aggregate_score, Some(0.5));
        assert_eq!(report.n_scored, 2);
        assert_eq!(report.n_no_path, 1);
        assert!(report.flag.is_none());
    }

    #[test]
    fn all_unverifiable_gives_null_aggregate() {
        let report = aggregate(
            "r1",
            None,
            vec![
                unverifiable_verdict("a", "r", "b"),
                unverifiable_verdict("c", "r", "d"),
            ],
            5,
        );
        assert_eq!(report.aggregate_score, None);
        assert_eq!(report.flag.as_deref(), Some("unverifiable"));
        assert!(report.lowest_k.is_empty());
    }

    #[test]
    fn unverifiable_excluded_from_mean() {
        let report = aggregate(
            "r1",
            None,
            vec![
                scored_verdict("a", "r", "b", 0.8, &["r"]),
                unverifiable_verdict("c", "r", "d"),
                scored_verdict("e", "r", "f", -0.2, &["r"]),
            ],
            5,
        );
        let got = report.aggregate_score.unwrap();
        assert!((got - 0.3).abs() < 1e-12);
        assert_eq!(report.n_unverifiable, 1);
    }

    #[test]
    fn empty_verdicts_give_empty_flagged_report() {
        let report = aggregate("r1", Some("model-x"), vec![], 5);
        assert_eq!(report.aggregate_score, None);
        assert_eq!(report.n_claims, 0);
        assert_eq!(report.flag.as_deref(), Some("unverifiable"));
    }

    #[test]
    fn verdicts_ranked_ascending_scoreless_last() {
        let report = aggregate(
            "r1",
            None,
            vec![
                unverifiable_verdict("u", "r", "v"),
                scored_verdict("a", "r", "b", 0.9, &["r"]),
                scored_verdict("c", "r", "d", -0.5, &["r"]),
                no_path_verdict("e", "r", "f"),
            ],
            5,
        );
        let scores: Vec<Option<f64>> = report.verdicts.iter().map(|v| v.score).collect();
        assert_eq!(scores, vec![Some(-0.5), Some(0.0), Some(0.9), None]);
    }

    #[test]
    fn permutation_of_verdicts_changes_nothing() {
        let base = vec![
            scored_verdict("a", "r", "b", 0.9, &["r"]),
            scored_verdict("c", "s", "d", -0.5, &["s"]),
            no_path_verdict("e", "r", "f"),
            unverifiable_verdict("u", "r", "v"),
        ];
        let forward = aggregate("r1", None, base.clone(), 2);
        let mut shuffled = base;
        shuffled.reverse();
        shuffled.swap(0, 2);
        let back = aggregate("r1", None, shuffled, 2);
        assert_eq!(forward, back);
    }

    #[test]
    fn lowest_k_ties_break_by_claim_text() {
        let report = aggregate(
            "r1",
            None,
            vec![
                scored_verdict("zeta", "r", "x", 0.5, &["r"]),
                scored_verdict("alpha", "r", "x", 0.5, &["r"]),
                scored_verdict("mid", "r", "x", 0.9, &["r"]),
            ],
            2,
        );
        let subjects: Vec<&str> = report
            .lowest_k
            .iter()
            .map(|v| v.claim.subject.as_str())
            .collect();
        assert_eq!(subjects, vec!["alpha", "zeta"]);
    }

    #[test]
    fn lowest_claims_returns_all_when_k_exceeds_count() {
        let report = aggregate(
            "r1",
            None,
            vec![
                scored_verdict("a", "r", "b", 0.1, &["r"]),
                scored_verdict("c", "r", "d", 0.2, &["r"]),
                scored_verdict("e", "r", "f", 0.3, &["r"]),
            ],
            5,
        );
        assert_eq!(lowest_claims(&report, 5).len(), 3);
        assert_eq!(lowest_claims(&report, 1)[0].score, Some(0.1));
    }

    #[test]
    fn histogram_counts_lowest_k_path_relations() {
        let report = aggregate(
            "r1",
            None,
            vec![
                scored_verdict("a", "r", "b", -0.9, &["treats", "causes"]),
                scored_verdict("c", "r", "d", -0.5, &["treats"]),
                scored_verdict("e", "r", "f", 0.9, &["prevents"]),
            ],
            2,
        );
        assert_eq!(report.edge_type_histogram.get("treats"), Some(&2));
        assert_eq!(report.edge_type_histogram.get("causes"), Some(&1));
        assert_eq!(report.edge_type_histogram.get("prevents"), None);
    }

    #[test]
    fn typology_single_claim() {
        let report = aggregate(
            "r1",
            None,
            vec![scored_verdict("a", "r", "b", 0.2, &["phenotype_of"])],
            5,
        );
        let rows = error_typology(&[report], 5, 5);
        assert_eq!(rows, vec![("phenotype_of".to_string(), 1)]);
    }

    #[test]
    fn typology_matches_flat_recount() {
        // ten reports with varying relation mixes; oracle recounts from scratch
        let rels = [
            "treats",
            "causes",
            "prevents",
            "has_symptom",
            "risk_factor_for",
        ];
        let mut reports = Vec::new();
        for i in 0..10usize {
            let mut verdicts = Vec::new();
            for j in 0..4usize {
                let rel = rels[(i + j) % rels.len()];
                let score = (i as f64) / 10.0 - (j as f64) * 0.3;
                verdicts.push(scored_verdict(
                    &format!("s{i}{j}"),
                    "r",
                    "o",
                    score,
                    &[rel],
                ));
            }
            reports.push(aggregate(&format!("r{i}"), None, verdicts, 4));
        }
        let k = 3;
        let mut oracle: BTreeMap<String, usize> = BTreeMap::new();
        for report in &reports {
            let mut numeric: Vec<(f64, String, String)> = report
                .verdicts
                .iter()
                .filter_map(|v| {
                    v.score.map(|s| {
                        (
                            s,
                            v.claim.subject.clone(),
                            v.path.as_ref().unwrap().relations[0].clone(),
                        )
                    })
                })
                .collect();
            numeric.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then_with(|| a.1.cmp(&b.1)));
            for (_, _, rel) in numeric.into_iter().take(k) {
                *oracle.entry(rel).or_insert(0) += 1;
            }
        }
        let got = error_typology(&reports, k, usize::MAX);
        let mut want: Vec<(String, usize)> = oracle.into_iter().collect();
        want.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        assert_eq!(got, want);
    }

    #[test]
    fn typology_empty_reports_empty_histogram() {
        let report = aggregate("r1", None, vec![unverifiable_verdict("a", "r", "b")], 5);
        assert!(error_typology(&[report], 5, 5).is_empty());
        assert!(error_typology(&[], 5, 5).is_empty());
    }

    #[test]
    fn typology_top_n_trims_with_lexicographic_ties() {
        let verdicts = vec![
            scored_verdict("a", "r", "b", 0.1, &["zeta_rel"]),
            scored_verdict("c", "r", "d", 0.2, &["alpha_rel"]),
            scored_verdict("e", "r", "f", 0.3, &["beta_rel", "beta_rel"]),
        ];
        let report = aggregate("r1", None, verdicts, 5);
        let rows = error_typology(&[report], 5, 2);
        assert_eq!(
            rows,
            vec![("beta_rel".to_string(), 2), ("alpha_rel".to_string(), 1)]
        );
    }

    #[test]
    fn canonical_json_is_deterministic_and_flattens_claims() {
        let report = aggregate(
            "r1",
            Some("m"),
            vec![
                scored_verdict("a", "r", "b", 0.25, &["r"]),
                no_path_verdict("e", "r", "f"),
            ],
            5,
        );
        let one = to_canonical_json(&report).unwrap();
        let two = to_canonical_json(&report.clone()).unwrap();
        assert_eq!(one, two);
        let value: serde_json::Value = serde_json::from_str(&one).unwrap();
        // ascending rank: no_path (0.0) precedes scored (0.25)
        let v0 = &value["verdicts"][0];
        assert_eq!(v0["subject"], "e");
        assert_eq!(v0["status"], "no_path");
        assert_eq!(v0["score"], 0.0);
        let v1 = &value["verdicts"][1];
        assert_eq!(v1["subject"], "a");
        assert_eq!(v1["relation"], "r");
        assert_eq!(v1["object"], "b");
        assert_eq!(v1["status"], "scored");
        // round-trips
        let back: ResponseReport = serde_json::from_str(&one).unwrap();
        assert_eq!(back.response_id, "r1");
        assert_eq!(back.verdicts.len(), 2);
    }

    #[test]
    fn failed_report_is_flagged() {
        let report = failed_report("r9", Some("m"), "provider unreachable");
        assert_eq!(report.flag.as_deref(), Some("extraction_failed"));
        assert_eq!(report.aggregate_score, None);
        assert!(report.verdicts.is_empty());
    }

    #[test]
    fn text_rendering_mentions_key_facts() {
        let report = aggregate(
            "r1",
            Some("model-x"),
            vec![scored_verdict("aspirin", "treats", "headache", 0.8, &["treats"])],
            5,
        );
        let text = render_text(&report);
        assert!(text.contains("response: r1"));
        assert!(text.contains("model: model-x"));
        assert!(text.contains("aggregate score: 0.8000"));
        assert!(text.contains("aspirin | treats | headache"));
        assert!(text.contains("via node 0 -treats-> node 1"));
    }
}
