//! Claim extraction from free-text responses.
//!
//! The primary extractor drives a chat-completion provider through two
//! phases: first it asks for the entities a passage mentions, then for the
//! relationships asserted among them. Multi-round strategies repeat the
//! phases to increase recall (results are unioned); critical strategies end
//! with a pass that re-examines the collected claims and keeps only the ones
//! the model still stands behind. Replies are line-oriented
//! `subject | relation | object` blocks; anything else on a line is ignored.
//!
//! A deterministic rule-based extractor lives in [`rules`] for offline use.

pub mod provider;
pub mod rules;

use std::collections::BTreeSet;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{FaithError, Result};
use crate::resolve::normalize;
use provider::{ChatMessage, ChatProvider};

const ENTITIES_TEMPLATE: &str = include_str!("../../prompts/entities.txt");
const RELATIONS_TEMPLATE: &str = include_str!("../../prompts/relations.txt");
const FOLLOWUP_TEMPLATE: &str = include_str!("../../prompts/followup.txt");
const CRITICAL_TEMPLATE: &str = include_str!("../../prompts/critical.txt");
const ICL_FILE: &str = include_str!("../../prompts/icl_examples.txt");
const SYSTEM_PROMPT: &str =
    "You extract atomic factual claims from medical text, answering only in the requested format.";

/// One atomic claim as extracted from a response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimTriplet {
    pub subject: String,
    pub relation: String,
    pub object: String,
    /// Character offsets into the source text, when known.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub span: Option<(usize, usize)>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub source_response_id: Option<String>,
}

impl ClaimTriplet {
    pub fn new(subject: impl Into<String>, relation: impl Into<String>, object: impl Into<String>) -> Self {
        ClaimTriplet {
            subject: subject.into(),
            relation: relation.into(),
            object: object.into(),
            span: None,
            source_response_id: None,
        }
    }

    /// Key used for deduplication and veto matching.
    pub fn normalized_key(&self) -> (String, String, String) {
        (
            normalize(&self.subject),
            normalize(&self.relation),
            normalize(&self.object),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "base")]
    Base,
    #[serde(rename = "base+critical")]
    BaseCritical,
    #[serde(rename = "base+multi")]
    BaseMulti,
    #[serde(rename = "full")]
    Full,
}

impl Strategy {
    pub fn multi_round(self) -> bool {
        matches!(self, Strategy::BaseMulti | Strategy::Full)
    }

    pub fn critical(self) -> bool {
        matches!(self, Strategy::BaseCritical | Strategy::Full)
    }
}

impl std::str::FromStr for Strategy {
    type Err = FaithError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "base" => Ok(Strategy::Base),
            "base+critical" => Ok(Strategy::BaseCritical),
            "base+multi" => Ok(Strategy::BaseMulti),
            "full" => Ok(Strategy::Full),
            other => Err(FaithError::InvalidParam(format!(
                "unknown strategy '{other}' (expected base, base+critical, base+multi, full)"
            ))),
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Strategy::Base => "base",
            Strategy::BaseCritical => "base+critical",
            Strategy::BaseMulti => "base+multi",
            Strategy::Full => "full",
        })
    }
}

/// Exemplar extraction shown to the provider in-context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IclExample {
    pub text: String,
    pub claims: Vec<(String, String, String)>,
}

impl IclExample {
    fn entities(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for (s, _, o) in &self.claims {
            for phrase in [s, o] {
                if seen.insert(normalize(phrase)) {
                    out.push(phrase.clone());
                }
            }
        }
        out
    }
}

/// Parses the bundled exemplar file: `TEXT:` opens an exemplar, `CLAIM:`
/// lines attach to it, `#` lines are comments.
fn parse_icl(text: &str) -> Vec<IclExample> {
    let mut out: Vec<IclExample> = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("TEXT:") {
            out.push(IclExample {
                text: rest.trim().to_string(),
                claims: Vec::new(),
            });
        } else if let Some(rest) = line.strip_prefix("CLAIM:") {
            if let Some(example) = out.last_mut() {
                if let Some(t) = split_triplet(rest) {
                    example.claims.push(t);
                }
            }
        }
    }
    out.retain(|e| !e.claims.is_empty());
    out
}

/// The bundled exemplars (five of them).
pub fn default_icl() -> Vec<IclExample> {
    static CACHE: OnceLock<Vec<IclExample>> = OnceLock::new();
    CACHE.get_or_init(|| parse_icl(ICL_FILE)).clone()
}

#[derive(Debug, Clone)]
pub struct ExtractionConfig {
    pub strategy: Strategy,
    pub rounds: usize,
    pub icl_examples: Vec<IclExample>,
    pub temperature: f64,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            strategy: Strategy::Full,
            rounds: 3,
            icl_examples: default_icl(),
            temperature: 0.0,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ExtractionOutcome {
    pub claims: Vec<ClaimTriplet>,
    pub warnings: Vec<String>,
}

fn render(template: &str, pairs: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (key, value) in pairs {
        out = out.replace(&format!("{{{{{key}}}}}"), value);
    }
    out
}

fn claims_block(claims: &[ClaimTriplet]) -> String {
    claims
        .iter()
        .map(|c| format!("{} | {} | {}", c.subject, c.relation, c.object))
        .collect::<Vec<_>>()
        .join("\n")
}

fn entity_messages(icl: &[IclExample], text: &str) -> Vec<ChatMessage> {
    let mut messages = vec![ChatMessage::system(SYSTEM_PROMPT)];
    for example in icl {
        messages.push(ChatMessage::user(render(
            ENTITIES_TEMPLATE,
            &[("text", &example.text)],
        )));
        messages.push(ChatMessage::assistant(example.entities().join("\n")));
    }
    messages.push(ChatMessage::user(render(ENTITIES_TEMPLATE, &[("text", text)])));
    messages
}

fn relation_messages(icl: &[IclExample], text: &str, entities: &[String]) -> Vec<ChatMessage> {
    let mut messages = vec![ChatMessage::system(SYSTEM_PROMPT)];
    for example in icl {
        messages.push(ChatMessage::user(render(
            RELATIONS_TEMPLATE,
            &[
                ("text", example.text.as_str()),
                ("entities", &example.entities().join("\n")),
            ],
        )));
        let lines: Vec<String> = example
            .claims
            .iter()
            .map(|(s, r, o)| format!("{s} | {r} | {o}"))
            .collect();
        messages.push(ChatMessage::assistant(lines.join("\n")));
    }
    messages.push(ChatMessage::user(render(
        RELATIONS_TEMPLATE,
        &[("text", text), ("entities", &entities.join("\n"))],
    )));
    messages
}

fn followup_messages(text: &str, entities: &[String], claims: &[ClaimTriplet]) -> Vec<ChatMessage> {
    vec![
        ChatMessage::system(SYSTEM_PROMPT),
        ChatMessage::user(render(
            FOLLOWUP_TEMPLATE,
            &[
                ("text", text),
                ("entities", &entities.join("\n")),
                ("claims", &claims_block(claims)),
            ],
        )),
    ]
}

fn critical_messages(text: &str, claims: &[ClaimTriplet]) -> Vec<ChatMessage> {
    vec![
        ChatMessage::system(SYSTEM_PROMPT),
        ChatMessage::user(render(
            CRITICAL_TEMPLATE,
            &[("text", text), ("claims", &claims_block(claims))],
        )),
    ]
}

fn strip_list_marker(line: &str) -> &str {
    let line = line.trim();
    let line = line
        .strip_prefix("- ")
        .or_else(|| line.strip_prefix("* "))
        .or_else(|| line.strip_prefix("• "))
        .unwrap_or(line);
    // numbered markers like "1." / "2)"
    let digits = line.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits > 0 {
        let rest = &line[digits..];
        if let Some(rest) = rest.strip_prefix('.').or_else(|| rest.strip_prefix(')')) {
            return rest.trim();
        }
    }
    line.trim()
}

fn is_empty_marker(line: &str) -> bool {
    matches!(
        line.to_lowercase().as_str(),
        "[]" | "-" | "none" | "n/a" | "(none)" | "none."
    )
}

/// Extracts the entity list from a phase-one reply.
pub fn parse_entity_lines(reply: &str) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for raw in reply.lines() {
        let line = strip_list_marker(raw);
        if line.is_empty() || is_empty_marker(line) || line.contains('|') {
            continue;
        }
        if seen.insert(normalize(line)) {
            out.push(line.to_string());
        }
    }
    out
}

fn split_triplet(line: &str) -> Option<(String, String, String)> {
    let parts: Vec<&str> = line.split('|').map(str::trim).collect();
    match parts.as_slice() {
        [s, r, o] if !s.is_empty() && !r.is_empty() && !o.is_empty() => {
            Some((s.to_string(), r.to_string(), o.to_string()))
        }
        _ => None,
    }
}

/// Extracts `subject | relation | object` lines from a reply, ignoring
/// anything that does not conform.
pub fn parse_triplet_lines(reply: &str) -> Vec<(String, String, String)> {
    reply
        .lines()
        .filter_map(|raw| split_triplet(strip_list_marker(raw)))
        .collect()
}

/// Runs the configured extraction strategy against a provider.
///
/// Provider failures (after the provider's own retries) abort this response's
/// extraction; unparseable replies only discard their round with a warning.
pub fn extract(
    text: &str,
    config: &ExtractionConfig,
    provider: &dyn ChatProvider,
) -> Result<ExtractionOutcome> {
    if config.rounds == 0 {
        return Err(FaithError::InvalidParam("rounds must be >= 1".into()));
    }
    let mut outcome = ExtractionOutcome::default();
    if text.trim().is_empty() {
        return Ok(outcome);
    }

    let rounds = if config.strategy.multi_round() {
        config.rounds
    } else {
        1
    };
    let mut seen: BTreeSet<(String, String, String)> = BTreeSet::new();

    for round in 1..=rounds {
        let entity_reply = provider.complete(&entity_messages(&config.icl_examples, text), config.temperature)?;
        let entities = parse_entity_lines(&entity_reply);
        if entities.is_empty() {
            outcome
                .warnings
                .push(format!("round {round}: provider listed no entities"));
            continue;
        }

        let messages = if round == 1 {
            relation_messages(&config.icl_examples, text, &entities)
        } else {
            followup_messages(text, &entities, &outcome.claims)
        };
        let reply = provider.complete(&messages, config.temperature)?;
        let triples = parse_triplet_lines(&reply);
        if triples.is_empty() {
            outcome
                .warnings
                .push(format!("round {round}: no parseable claims in reply"));
            continue;
        }
        for (subject, relation, object) in triples {
            let claim = ClaimTriplet::new(subject, relation, object);
            let key = claim.normalized_key();
            if key.0.is_empty() || key.1.is_empty() || key.2.is_empty() {
                continue;
            }
            if seen.insert(key) {
                outcome.claims.push(claim);
            }
        }
    }

    if config.strategy.critical() && !outcome.claims.is_empty() {
        let reply = provider.complete(&critical_messages(text, &outcome.claims), config.temperature)?;
        let kept: BTreeSet<(String, String, String)> = parse_triplet_lines(&reply)
            .into_iter()
            .map(|(s, r, o)| ClaimTriplet::new(s, r, o).normalized_key())
            .collect();
        let before = outcome.claims.len();
        outcome.claims.retain(|c| kept.contains(&c.normalized_key()));
        if outcome.claims.is_empty() && before > 0 {
            outcome
                .warnings
                .push("critical pass vetoed every claim".into());
        }
    }

    Ok(outcome)
}
