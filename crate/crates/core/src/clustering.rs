//! Index-driven greedy agglomerative clustering.
//!
//! Each round rebuilds an inverted index from cluster feature sets, emits
//! candidate pairs from every posting list shorter than the fanout cutoff,
//! scores them, and merges non-conflicting pairs in descending score order.
//! Rounds repeat until a round performs no merges. Posting lists at or above
//! the cutoff are skipped entirely: features shared by that many clusters
//! carry too little evidence to justify the quadratic pair blowup, which is
//! what keeps the comparison count near-linear in the corpus size.
//!
//! The engine is generic over an element store (corpus strings or name
//! occurrences), a pair scorer, and an optional merge filter that can veto
//! individual merges.

use std::collections::HashMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{Corpus, FeatureId, StringId};
use crate::metrics::{aggregate_pair_scores, Aggregation, Metric, MetricError, PairEvidence};
use crate::StringKind;

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error("filter: {0}")]
    Filter(String),
}

/// Identifier of a cluster within one engine run.
pub type ClusterId = u32;

/// Engine element: an index into the element store.
pub type ElementId = u32;

/// What the engine needs to know about the items being clustered.
pub trait ElementStore: Sync {
    fn element_count(&self) -> usize;
    fn kind(&self, e: ElementId) -> StringKind;
    /// Unique display label; drives deterministic tie-breaking and output.
    fn label(&self, e: ElementId) -> &str;
    /// Sorted, deduplicated feature ids.
    fn features(&self, e: ElementId) -> &[FeatureId];
    fn extraction_count(&self, e: ElementId) -> u64;
    fn clusterable(&self, e: ElementId) -> bool;
    /// Total feature incidences, the unit the comparison bound is stated in.
    fn evidence_unit_count(&self) -> u64;
}

/// Pairwise evidence source consulted for every cross-cluster element pair.
pub trait PairScorer: Sync {
    fn evidence(&self, a: ElementId, b: ElementId) -> Result<PairEvidence, MetricError>;
}

/// Merge veto hook. Checked after a pair clears the score threshold and the
/// used-cluster discipline, before the merge is applied.
pub trait MergeFilter: Sync {
    fn check_merge(
        &self,
        kind: StringKind,
        left: &[&str],
        right: &[&str],
    ) -> Result<Verdict, ClusterError>;
}

/// Outcome of a filter check.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Allow,
    Veto(Vec<VetoReason>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VetoReason {
    pub rule: String,
    pub pair: (String, String),
    pub detail: String,
}

/// A vetoed merge, kept for the run log.
#[derive(Debug, Clone)]
pub struct VetoEvent {
    pub round: usize,
    pub left: String,
    pub right: String,
    pub reasons: Vec<VetoReason>,
}

#[derive(Debug, Clone)]
pub struct ClusteringConfig {
    /// Posting lists with at least this many clusters are skipped ("Max").
    pub max_index_fanout: usize,
    /// Merge when the aggregated score reaches this threshold: a ratio for
    /// likelihood-ratio aggregation, a value for the mean family.
    pub merge_threshold: f64,
    /// Safety cap on rounds; the loop normally stops at the first round with
    /// no merges.
    pub max_rounds: usize,
    pub metric: Metric,
    pub aggregation: Aggregation,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        ClusteringConfig {
            max_index_fanout: 50,
            merge_threshold: 3.0,
            max_rounds: 20,
            metric: Metric::Combined,
            aggregation: Aggregation::LikelihoodRatio,
        }
    }
}

impl ClusteringConfig {
    pub fn validate(&self) -> Result<(), ClusterError> {
        if self.max_index_fanout < 2 {
            return Err(ClusterError::BadConfig(format!(
                "max_index_fanout must be >= 2, got {}",
                self.max_index_fanout
            )));
        }
        if self.merge_threshold.is_nan() || self.merge_threshold <= 0.0 {
            return Err(ClusterError::BadConfig(format!(
                "merge_threshold must be > 0, got {}",
                self.merge_threshold
            )));
        }
        if self.aggregation == Aggregation::LikelihoodRatio && !self.metric.is_probability() {
            return Err(ClusterError::BadConfig(format!(
                "likelihood-ratio aggregation requires a probability metric, got {}",
                self.metric.name()
            )));
        }
        Ok(())
    }
}

/// Per-round instrumentation.
#[derive(Debug, Clone, Copy, Default)]
pub struct RoundStats {
    pub candidate_pairs_scored: u64,
    pub merges: u64,
    pub vetoes: u64,
    pub keys_total: u64,
    pub keys_skipped: u64,
}

/// Run-level instrumentation: comparison counts against the all-pairs
/// baseline, and the per-round breakdown.
#[derive(Debug, Clone, Default)]
pub struct ComparisonStats {
    pub rounds: Vec<RoundStats>,
    pub candidate_pairs_scored: u64,
    pub all_pairs_baseline: HashMap<StringKind, u64>,
    pub evidence_units: u64,
    pub max_index_fanout: usize,
}

impl ComparisonStats {
    /// Upper bound on comparisons per round: (Max - 1) / 2 evidence units.
    pub fn per_round_bound(&self) -> u64 {
        (self.max_index_fanout as u64 - 1) * self.evidence_units / 2
    }

    /// Fraction of distinct keys discarded by the fanout cutoff in the first
    /// round.
    pub fn discarded_key_fraction(&self) -> f64 {
        match self.rounds.first() {
            Some(r) if r.keys_total > 0 => r.keys_skipped as f64 / r.keys_total as f64,
            _ => 0.0,
        }
    }

    /// Key=value report lines consumed by scripts and the acceptance suite.
    pub fn report(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("rounds={}\n", self.rounds.len()));
        out.push_str(&format!(
            "candidate_pairs_scored={}\n",
            self.candidate_pairs_scored
        ));
        out.push_str(&format!("evidence_units={}\n", self.evidence_units));
        out.push_str(&format!("per_round_bound={}\n", self.per_round_bound()));
        let mut kinds: Vec<_> = self.all_pairs_baseline.iter().collect();
        kinds.sort_by_key(|(k, _)| **k);
        for (kind, count) in kinds {
            out.push_str(&format!("all_pairs_baseline.{kind}={count}\n"));
        }
        out.push_str(&format!(
            "discarded_key_fraction={:.6}\n",
            self.discarded_key_fraction()
        ));
        for (i, r) in self.rounds.iter().enumerate() {
            out.push_str(&format!(
                "round.{}.candidates={} round.{}.merges={} round.{}.vetoes={} round.{}.keys_total={} round.{}.keys_skipped={}\n",
                i + 1, r.candidate_pairs_scored, i + 1, r.merges, i + 1, r.vetoes,
                i + 1, r.keys_total, i + 1, r.keys_skipped,
            ));
        }
        out
    }
}

#[derive(Debug, Clone)]
struct ClusterData {
    members: Vec<ElementId>,  // sorted by label
    features: Vec<FeatureId>, // sorted union of member features
    total_n: u64,
}

/// Final clustering plus instrumentation.
#[derive(Debug)]
pub struct Outcome {
    /// Each cluster as a sorted list of element ids; clusters sorted by
    /// first member label at extraction time.
    clusters: Vec<Vec<ElementId>>,
    pub stats: ComparisonStats,
    pub vetoes: Vec<VetoEvent>,
}

impl Outcome {
    pub fn clusters(&self) -> &[Vec<ElementId>] {
        &self.clusters
    }

    /// Clusters of one kind as label lists, members sorted, clusters sorted
    /// by first member.
    pub fn labeled_clusters<S: ElementStore>(
        &self,
        store: &S,
        kind: StringKind,
    ) -> Vec<Vec<String>> {
        let mut out: Vec<Vec<String>> = self
            .clusters
            .iter()
            .filter(|c| !c.is_empty() && store.kind(c[0]) == kind)
            .map(|c| {
                let mut labels: Vec<String> =
                    c.iter().map(|&e| store.label(e).to_string()).collect();
                labels.sort();
                labels
            })
            .collect();
        out.sort();
        out
    }
}

/// Maximum number of merge proposals per round that the filter inspects;
/// later proposals pass unfiltered. `None` filters everything.
pub struct FilterBudget(pub Option<usize>);

pub struct Engine<'a, S: ElementStore, P: PairScorer> {
    store: &'a S,
    scorer: &'a P,
    config: ClusteringConfig,
    filter: Option<&'a dyn MergeFilter>,
    filter_budget: Option<usize>,
    parallel: bool,
}

impl<'a, S: ElementStore, P: PairScorer> Engine<'a, S, P> {
    pub fn new(store: &'a S, scorer: &'a P, config: ClusteringConfig) -> Self {
        Engine {
            store,
            scorer,
            config,
            filter: None,
            filter_budget: None,
            parallel: true,
        }
    }

    pub fn with_filter(mut self, filter: &'a dyn MergeFilter, budget: FilterBudget) -> Self {
        self.filter = Some(filter);
        self.filter_budget = budget.0;
        self
    }

    /// Score candidate pairs sequentially instead of across threads. The
    /// result is identical either way; this only pins the execution shape.
    pub fn sequential(mut self) -> Self {
        self.parallel = false;
        self
    }

    pub fn run(&self) -> Result<Outcome, ClusterError> {
        self.config.validate()?;
        let store = self.store;

        let mut clusters: Vec<Option<ClusterData>> = Vec::new();
        let clusterable: Vec<ElementId> = (0..store.element_count() as u32)
            .filter(|&e| store.clusterable(e))
            .collect();
        for &e in &clusterable {
            clusters.push(Some(ClusterData {
                members: vec![e],
                features: store.features(e).to_vec(),
                total_n: store.extraction_count(e),
            }));
        }

        let mut stats = ComparisonStats {
            evidence_units: store.evidence_unit_count(),
            max_index_fanout: self.config.max_index_fanout,
            ..Default::default()
        };
        for &e in &clusterable {
            *stats.all_pairs_baseline.entry(store.kind(e)).or_insert(0) += 1;
        }
        for count in stats.all_pairs_baseline.values_mut() {
            *count = *count * count.saturating_sub(1) / 2;
        }

        let mut vetoes: Vec<VetoEvent> = Vec::new();
        let bound = (self.config.max_index_fanout as u64 - 1) * stats.evidence_units / 2;

        for round_no in 1..=self.config.max_rounds {
            let mut round = RoundStats::default();
            let candidates = self.generate_candidates(&clusters, &mut round)?;
            round.candidate_pairs_scored = candidates.len() as u64;
            if round.candidate_pairs_scored > bound {
                return Err(ClusterError::Invariant(format!(
                    "round {round_no} scored {} pairs, above the fanout bound {bound}",
                    round.candidate_pairs_scored
                )));
            }

            let mut scored = self.score_candidates(&clusters, &candidates)?;
            // Descending score; ties broken by the pair's member labels so
            // reruns are bit-identical.
            scored.sort_by(|a, b| {
                b.score
                    .partial_cmp(&a.score)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then_with(|| a.tie.cmp(&b.tie))
            });

            let mut used = vec![false; clusters.len()];
            let mut proposals = 0usize;
            for cand in &scored {
                if cand.score < self.config.merge_threshold {
                    break;
                }
                let (c1, c2) = (cand.c1 as usize, cand.c2 as usize);
                if used[c1] || used[c2] {
                    continue;
                }
                proposals += 1;
                if let Some(filter) = self.filter {
                    let within_budget = self.filter_budget.is_none_or(|k| proposals <= k);
                    if within_budget {
                        let (left, right) = {
                            let a = clusters[c1].as_ref().expect("live cluster");
                            let b = clusters[c2].as_ref().expect("live cluster");
                            (
                                a.members
                                    .iter()
                                    .map(|&e| store.label(e))
                                    .collect::<Vec<_>>(),
                                b.members
                                    .iter()
                                    .map(|&e| store.label(e))
                                    .collect::<Vec<_>>(),
                            )
                        };
                        let kind = store.kind(clusters[c1].as_ref().unwrap().members[0]);
                        if let Verdict::Veto(reasons) = filter.check_merge(kind, &left, &right)? {
                            round.vetoes += 1;
                            vetoes.push(VetoEvent {
                                round: round_no,
                                left: left.join("|"),
                                right: right.join("|"),
                                reasons,
                            });
                            continue;
                        }
                    }
                }
                self.merge(&mut clusters, cand.c1, cand.c2)?;
                used[c1] = true;
                used[c2] = true;
                round.merges += 1;
            }

            let merges = round.merges;
            stats.candidate_pairs_scored += round.candidate_pairs_scored;
            stats.rounds.push(round);
            self.check_partition(&clusters, clusterable.len())?;
            if merges == 0 {
                break;
            }
        }

        let mut final_clusters: Vec<Vec<ElementId>> =
            clusters.into_iter().flatten().map(|c| c.members).collect();
        final_clusters.sort_by(|a, b| store.label(a[0]).cmp(store.label(b[0])));
        Ok(Outcome {
            clusters: final_clusters,
            stats,
            vetoes,
        })
    }

    // Candidate pairs from posting lists below the fanout cutoff,
    // deduplicated across keys. Postings hold same-kind clusters only, since
    // feature keys are typed by the kind that carries them.
    fn generate_candidates(
        &self,
        clusters: &[Option<ClusterData>],
        round: &mut RoundStats,
    ) -> Result<Vec<(ClusterId, ClusterId)>, ClusterError> {
        let mut postings: Vec<(FeatureId, ClusterId)> = Vec::new();
        for (cid, cluster) in clusters.iter().enumerate() {
            let Some(cluster) = cluster else { continue };
            for &fid in &cluster.features {
                postings.push((fid, cid as ClusterId));
            }
        }
        postings.sort_unstable();

        let mut pairs: Vec<(ClusterId, ClusterId)> = Vec::new();
        let max = self.config.max_index_fanout;
        let mut start = 0usize;
        while start < postings.len() {
            let fid = postings[start].0;
            let mut end = start + 1;
            while end < postings.len() && postings[end].0 == fid {
                end += 1;
            }
            let list = &postings[start..end];
            round.keys_total += 1;
            if list.len() >= max {
                round.keys_skipped += 1;
            } else {
                for i in 0..list.len() {
                    for j in i + 1..list.len() {
                        pairs.push((list[i].1, list[j].1));
                    }
                }
            }
            start = end;
        }
        pairs.sort_unstable();
        pairs.dedup();
        Ok(pairs)
    }

    fn score_candidates(
        &self,
        clusters: &[Option<ClusterData>],
        candidates: &[(ClusterId, ClusterId)],
    ) -> Result<Vec<Scored>, ClusterError> {
        let score_one = |&(c1, c2): &(ClusterId, ClusterId)| -> Result<Scored, ClusterError> {
            let a = clusters[c1 as usize]
                .as_ref()
                .expect("candidate from live cluster");
            let b = clusters[c2 as usize]
                .as_ref()
                .expect("candidate from live cluster");
            let mut pairs = Vec::with_capacity(a.members.len() * b.members.len());
            for &x in &a.members {
                for &y in &b.members {
                    pairs.push(self.scorer.evidence(x, y)?);
                }
            }
            let score = aggregate_pair_scores(&pairs, self.config.aggregation)?;
            let la = self.store.label(a.members[0]);
            let lb = self.store.label(b.members[0]);
            let tie = if la <= lb {
                (la.to_string(), lb.to_string())
            } else {
                (lb.to_string(), la.to_string())
            };
            Ok(Scored { c1, c2, score, tie })
        };
        if self.parallel {
            candidates.par_iter().map(score_one).collect()
        } else {
            candidates.iter().map(score_one).collect()
        }
    }

    fn merge(
        &self,
        clusters: &mut [Option<ClusterData>],
        c1: ClusterId,
        c2: ClusterId,
    ) -> Result<(), ClusterError> {
        // The cluster whose first member label sorts lower survives.
        let (keep, gone) = {
            let a = clusters[c1 as usize]
                .as_ref()
                .ok_or_else(|| ClusterError::Invariant(format!("merge into dead cluster {c1}")))?;
            let b = clusters[c2 as usize]
                .as_ref()
                .ok_or_else(|| ClusterError::Invariant(format!("merge from dead cluster {c2}")))?;
            if self.store.label(a.members[0]) <= self.store.label(b.members[0]) {
                (c1, c2)
            } else {
                (c2, c1)
            }
        };
        let absorbed = clusters[gone as usize].take().expect("checked above");
        let target = clusters[keep as usize].as_mut().expect("checked above");
        target.total_n += absorbed.total_n;
        let mut members = Vec::with_capacity(target.members.len() + absorbed.members.len());
        {
            let (mut i, mut j) = (0, 0);
            while i < target.members.len() && j < absorbed.members.len() {
                if self.store.label(target.members[i]) <= self.store.label(absorbed.members[j]) {
                    members.push(target.members[i]);
                    i += 1;
                } else {
                    members.push(absorbed.members[j]);
                    j += 1;
                }
            }
            members.extend_from_slice(&target.members[i..]);
            members.extend_from_slice(&absorbed.members[j..]);
        }
        target.members = members;
        let mut features = Vec::with_capacity(target.features.len() + absorbed.features.len());
        {
            let (mut i, mut j) = (0, 0);
            while i < target.features.len() && j < absorbed.features.len() {
                match target.features[i].cmp(&absorbed.features[j]) {
                    std::cmp::Ordering::Less => {
                        features.push(target.features[i]);
                        i += 1;
                    }
                    std::cmp::Ordering::Greater => {
                        features.push(absorbed.features[j]);
                        j += 1;
                    }
                    std::cmp::Ordering::Equal => {
                        features.push(target.features[i]);
                        i += 1;
                        j += 1;
                    }
                }
            }
            features.extend_from_slice(&target.features[i..]);
            features.extend_from_slice(&absorbed.features[j..]);
        }
        target.features = features;
        Ok(())
    }

    fn check_partition(
        &self,
        clusters: &[Option<ClusterData>],
        expected: usize,
    ) -> Result<(), ClusterError> {
        let total: usize = clusters.iter().flatten().map(|c| c.members.len()).sum();
        if total != expected {
            return Err(ClusterError::Invariant(format!(
                "partition lost elements: {total} members across clusters, expected {expected}"
            )));
        }
        Ok(())
    }
}

struct Scored {
    c1: ClusterId,
    c2: ClusterId,
    score: f64,
    tie: (String, String),
}

impl ElementStore for Corpus {
    fn element_count(&self) -> usize {
        self.record_count()
    }

    fn kind(&self, e: ElementId) -> StringKind {
        Corpus::kind(self, StringId(e))
    }

    fn label(&self, e: ElementId) -> &str {
        self.text(StringId(e))
    }

    fn features(&self, e: ElementId) -> &[FeatureId] {
        self.feature_ids(StringId(e))
    }

    fn extraction_count(&self, e: ElementId) -> u64 {
        Corpus::extraction_count(self, StringId(e))
    }

    fn clusterable(&self, e: ElementId) -> bool {
        self.is_clusterable(StringId(e))
    }

    fn evidence_unit_count(&self) -> u64 {
        self.assertion_count() as u64
    }
}

impl PairScorer for crate::metrics::CorpusScorer<'_> {
    fn evidence(&self, a: ElementId, b: ElementId) -> Result<PairEvidence, MetricError> {
        self.pair_evidence(StringId(a), StringId(b))
    }
}
