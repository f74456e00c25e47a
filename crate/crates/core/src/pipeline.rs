//! End-to-end response evaluation: extract claims, ground them in the graph,
//! score each over its evidence paths, and aggregate into a report.

use crate::embedding::{for_graph, EmbeddingProvider};
use crate::error::Result;
use crate::evidence::PathCaps;
use crate::extract::provider::ChatProvider;
use crate::extract::rules::{extract_rule_based, PatternTable};
use crate::extract::{extract, ClaimTriplet, ExtractionConfig, ExtractionOutcome};
use crate::graph::KnowledgeGraph;
use crate::report::{aggregate, ClaimVerdict, ResponseReport, DEFAULT_LOWEST_K};
use crate::resolve::{ground_claim, ClaimGrounding, ExternalResolver, DEFAULT_EXTERNAL_CUTOFF};
use crate::scoring::{score_claim, ClaimScore};

/// Knobs shared by every claim judged within one run.
#[derive(Debug, Clone)]
pub struct JudgeOptions {
    pub caps: PathCaps,
    /// Minimum confidence for external resolver candidates.
    pub external_cutoff: f64,
    /// How many lowest-scoring claims each report surfaces.
    pub lowest_k: usize,
}

impl Default for JudgeOptions {
    fn default() -> Self {
        JudgeOptions {
            caps: PathCaps::default(),
            external_cutoff: DEFAULT_EXTERNAL_CUTOFF,
            lowest_k: DEFAULT_LOWEST_K,
        }
    }
}

/// Grounds and scores a single claim.
pub fn judge_claim(
    graph: &KnowledgeGraph,
    claim: ClaimTriplet,
    embeddings: &dyn EmbeddingProvider,
    external: &dyn ExternalResolver,
    opts: &JudgeOptions,
) -> ClaimVerdict {
    match ground_claim(
        &claim.subject,
        &claim.object,
        graph,
        external,
        opts.external_cutoff,
    ) {
        ClaimGrounding::Degenerate { node } => ClaimVerdict::degenerate(claim, node),
        ClaimGrounding::Unverifiable { subject, object } => {
            ClaimVerdict::unverifiable(claim, subject, object)
        }
        ClaimGrounding::Verifiable { subject, object } => {
            match score_claim(
                graph,
                subject.node_ix,
                object.node_ix,
                &claim.relation,
                embeddings,
                &opts.caps,
            ) {
                ClaimScore::NoPath => ClaimVerdict::no_path(claim, subject, object),
                ClaimScore::Scored(scored) => {
                    ClaimVerdict::scored(claim, *scored, subject, object)
                }
            }
        }
    }
}

/// Judges a batch of already-extracted claims and aggregates them.
pub fn judge_claims(
    graph: &KnowledgeGraph,
    response_id: &str,
    model: Option<&str>,
    claims: Vec<ClaimTriplet>,
    external: &dyn ExternalResolver,
    opts: &JudgeOptions,
) -> ResponseReport {
    let embeddings = for_graph(graph);
    judge_claims_with(
        graph,
        response_id,
        model,
        claims,
        embeddings.as_ref(),
        external,
        opts,
    )
}

/// As [`judge_claims`], reusing a caller-built embedding provider so batch
/// runs do not rebuild it per response.
pub fn judge_claims_with(
    graph: &KnowledgeGraph,
    response_id: &str,
    model: Option<&str>,
    claims: Vec<ClaimTriplet>,
    embeddings: &dyn EmbeddingProvider,
    external: &dyn ExternalResolver,
    opts: &JudgeOptions,
) -> ResponseReport {
    let verdicts: Vec<ClaimVerdict> = claims
        .into_iter()
        .map(|c| judge_claim(graph, c, embeddings, external, opts))
        .collect();
    aggregate(response_id, model, verdicts, opts.lowest_k)
}

/// Which claim extractor a run uses.
pub enum Extractor<'a> {
    /// Deterministic connective-pattern extraction, no network.
    Rules(&'a PatternTable),
    /// Chat-provider extraction with the configured strategy.
    Chat {
        provider: &'a dyn ChatProvider,
        config: &'a ExtractionConfig,
    },
}

/// Runs the configured extractor over one response text.
pub fn extract_claims(
    text: &str,
    extractor: &Extractor<'_>,
    graph: &KnowledgeGraph,
) -> Result<ExtractionOutcome> {
    match extractor {
        Extractor::Rules(patterns) => Ok(ExtractionOutcome {
            claims: extract_rule_based(text, patterns, graph),
            warnings: Vec::new(),
        }),
        Extractor::Chat { provider, config } => extract(text, config, *provider),
    }
}

/// Full pipeline for one response. Extraction failure is returned as an
/// error so batch callers can isolate it per response.
pub fn evaluate_response(
    graph: &KnowledgeGraph,
    response_id: &str,
    model: Option<&str>,
    text: &str,
    extractor: &Extractor<'_>,
    external: &dyn ExternalResolver,
    opts: &JudgeOptions,
) -> Result<ResponseReport> {
    let embeddings = for_graph(graph);
    evaluate_response_with(
        graph,
        response_id,
        model,
        text,
        extractor,
        embeddings.as_ref(),
        external,
        opts,
    )
}

/// As [`evaluate_response`], reusing a caller-built embedding provider.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_response_with(
    graph: &KnowledgeGraph,
    response_id: &str,
    model: Option<&str>,
    text: &str,
    extractor: &Extractor<'_>,
    embeddings: &dyn EmbeddingProvider,
    external: &dyn ExternalResolver,
    opts: &JudgeOptions,
) -> Result<ResponseReport> {
    let outcome = extract_claims(text, extractor, graph)?;
    let mut claims = outcome.claims;
    for claim in &mut claims {
        claim.source_response_id = Some(response_id.to_string());
    }
    Ok(judge_claims_with(
        graph,
        response_id,
        model,
        claims,
        embeddings,
        external,
        opts,
    ))
}
