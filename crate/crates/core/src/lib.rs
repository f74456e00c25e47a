//! Reference-free factuality evaluation over a directed, labeled knowledge graph.

pub mod baselines;
pub mod embedding;
pub mod error;
pub mod evidence;
pub mod extract;
pub mod graph;
pub mod harness;
pub mod numeric;
pub mod pipeline;
pub mod report;
pub mod resolve;
pub mod scoring;

pub use error::{FaithError, Result};
pub use graph::{BuildParams, GraphBuilder, GraphStats, KnowledgeGraph, StatOverrides};

/// Scalar type used by the scoring pipeline and persisted artifacts.
pub type Score = f64;
