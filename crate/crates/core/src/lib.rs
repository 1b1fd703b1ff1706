//! Synonym resolution over information-extraction triples.
//!
//! Given a corpus of `(relation, arg1, arg2)` assertions, this crate clusters
//! object strings and relation strings that name the same real-world entity
//! or relation. Evidence comes from two directions: surface similarity of the
//! strings themselves, and an urn-model probability that two strings co-refer
//! given how many extracted properties they share. Candidate generation is
//! driven by an inverted property index with a fanout cutoff, which keeps the
//! number of pairwise comparisons near-linear in the corpus size.
//!
//! Module map:
//!
//! - [`corpus`]: triple parsing, string records, feature sets, inverted index
//! - [`esp`]: the shared-property probability kernel (exact, fast, continuous)
//! - [`metrics`]: pairwise scorers (SSM, ESP, CSM, s_MI, W-ESP, combination)
//! - [`clustering`]: the index-driven greedy merge engine with round stats
//! - [`filters`]: merge vetoes (function conflicts, coordination phrases)
//! - [`crossdoc`]: occurrence-level resolution for polysemous names
//! - [`eval`]: matched-cluster P/R, pairwise P/R, and PR-curve AUC
//! - [`synth`]: Zipf-distributed synthetic corpora with planted ground truth
//! - [`pipeline`]: run configuration and end-to-end resolution entry points

pub mod clustering;
pub mod corpus;
pub mod crossdoc;
pub mod esp;
pub mod eval;
pub mod filters;
pub mod metrics;
pub mod pipeline;
pub mod synth;

use std::fmt;

/// Role a string plays in the corpus. A string appearing both as a relation
/// and as an argument gets one record per kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StringKind {
    Object,
    Relation,
}

impl fmt::Display for StringKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StringKind::Object => write!(f, "object"),
            StringKind::Relation => write!(f, "relation"),
        }
    }
}

/// Argument slot of an assertion, recorded in feature keys only when
/// slot-tagging is enabled at load time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArgSlot {
    Arg1,
    Arg2,
}

pub use clustering::{ClusteringConfig, ComparisonStats, Outcome, RoundStats};
pub use corpus::{Corpus, FeatureKey, LoadOptions, StringId};
pub use esp::PropertyMultiple;
pub use eval::{GoldStandard, PrfReport};
pub use metrics::{Aggregation, CombinationRule, Metric, PairEvidence, SsmParams};
pub use pipeline::{PipelineError, RunConfig};
