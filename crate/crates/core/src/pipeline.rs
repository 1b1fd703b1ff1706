//! Run configuration and end-to-end resolution entry points.
//!
//! A run is reproducible from its configuration snapshot plus input files:
//! the snapshot is a flat `key=value` listing that parses back into the same
//! configuration, rejecting unknown keys. Thresholds and aggregation default
//! per metric: the probability models use the likelihood-ratio criterion at
//! ratio 3; the similarity-only baselines use mean aggregation against value
//! thresholds that have no calibrated setting and are expected to be tuned
//! per corpus.

use std::collections::HashSet;

use thiserror::Error;

use crate::clustering::{
    ClusterError, ClusteringConfig, Engine, FilterBudget, MergeFilter, Outcome,
};
use crate::corpus::{Corpus, CorpusError, StringId};
use crate::crossdoc::CrossdocError;
use crate::esp::{EspError, PropertyMultiple};
use crate::eval::EvalError;
use crate::filters::FilterError;
use crate::metrics::{Aggregation, CombinationRule, CorpusScorer, Metric, MetricError, SsmParams};
use crate::synth::SynthError;
use crate::StringKind;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Esp(#[from] EspError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Crossdoc(#[from] CrossdocError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

/// Every tunable of the pipeline, with the stock defaults.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub metric: Metric,
    pub aggregation: Aggregation,
    pub merge_threshold: f64,
    pub max_index_fanout: usize,
    pub max_rounds: usize,
    pub min_count: u32,
    pub proper_nouns_only: bool,
    pub slot_tagged: bool,
    pub ssm_alpha: f64,
    pub ssm_beta: f64,
    pub n_object: f64,
    pub n_relation: f64,
    pub combination: CombinationRule,
    pub workers: usize,
    pub seed: u64,
    pub filters_enabled: bool,
    pub coordination_threshold: f64,
    pub match_threshold: f64,
    pub filter_top_k: Option<usize>,
    pub functions_file: Option<String>,
    pub hitcounts_file: Option<String>,
    pub crossdoc_context_size: usize,
    pub crossdoc_threshold: f64,
    pub crossdoc_multiple: f64,
    pub crossdoc_filter_top_k: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            metric: Metric::Combined,
            aggregation: Aggregation::LikelihoodRatio,
            merge_threshold: 3.0,
            max_index_fanout: 50,
            max_rounds: 20,
            min_count: 25,
            proper_nouns_only: true,
            slot_tagged: false,
            ssm_alpha: 20.0,
            ssm_beta: 5.0,
            n_object: 30.0,
            n_relation: 500.0,
            combination: CombinationRule::ComplementWeighted,
            workers: 0,
            seed: 0,
            filters_enabled: false,
            coordination_threshold: 0.001,
            match_threshold: 0.9,
            filter_top_k: None,
            functions_file: None,
            hitcounts_file: None,
            crossdoc_context_size: 100,
            crossdoc_threshold: 7.5,
            crossdoc_multiple: 30.0,
            crossdoc_filter_top_k: Some(20),
        }
    }
}

impl RunConfig {
    /// Stock aggregation and threshold for a metric: the likelihood-ratio
    /// criterion at 3 for the probability models, uncalibrated mean-value
    /// thresholds for the similarity baselines.
    pub fn stock_criterion(metric: Metric) -> (Aggregation, f64) {
        match metric {
            Metric::Esp | Metric::Combined | Metric::Wesp => (Aggregation::LikelihoodRatio, 3.0),
            Metric::Ssm => (Aggregation::Mean, 0.75),
            Metric::Csm | Metric::Smi => (Aggregation::Mean, 0.25),
        }
    }

    /// Re-derive aggregation and threshold from the metric unless they were
    /// set explicitly.
    pub fn finalize_criterion(&mut self, explicit: &HashSet<String>) {
        let (aggregation, threshold) = RunConfig::stock_criterion(self.metric);
        if !explicit.contains("aggregation") {
            self.aggregation = aggregation;
        }
        if !explicit.contains("merge_threshold") {
            self.merge_threshold = threshold;
        }
    }

    /// Apply `key=value` lines. `#` comments and blank lines are skipped,
    /// unknown keys rejected. Keys that were set are recorded in `explicit`.
    pub fn parse_update(
        &mut self,
        text: &str,
        explicit: &mut HashSet<String>,
    ) -> Result<(), PipelineError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(PipelineError::Config(format!(
                    "line {}: expected key=value, got {line:?}",
                    idx + 1
                )));
            };
            self.set(key.trim(), value.trim())?;
            explicit.insert(key.trim().to_string());
        }
        Ok(())
    }

    /// Set one key from its string form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), PipelineError> {
        fn bad(key: &str, value: &str) -> PipelineError {
            PipelineError::Config(format!("bad value {value:?} for {key}"))
        }
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, PipelineError> {
            value.parse().map_err(|_| bad(key, value))
        }
        fn opt_num(key: &str, value: &str) -> Result<Option<usize>, PipelineError> {
            if value.is_empty() {
                Ok(None)
            } else {
                num(key, value).map(Some)
            }
        }
        match key {
            "metric" => self.metric = Metric::parse(value).ok_or_else(|| bad(key, value))?,
            "aggregation" => {
                self.aggregation = Aggregation::parse(value).ok_or_else(|| bad(key, value))?
            }
            "merge_threshold" => self.merge_threshold = num(key, value)?,
            "max_index_fanout" => self.max_index_fanout = num(key, value)?,
            "max_rounds" => self.max_rounds = num(key, value)?,
            "min_count" => self.min_count = num(key, value)?,
            "proper_nouns_only" => self.proper_nouns_only = num(key, value)?,
            "slot_tagged" => self.slot_tagged = num(key, value)?,
            "ssm_alpha" => self.ssm_alpha = num(key, value)?,
            "ssm_beta" => self.ssm_beta = num(key, value)?,
            "n_object" => self.n_object = num(key, value)?,
            "n_relation" => self.n_relation = num(key, value)?,
            "combination" => {
                self.combination = CombinationRule::parse(value).ok_or_else(|| bad(key, value))?
            }
            "workers" => self.workers = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "filters_enabled" => self.filters_enabled = num(key, value)?,
            "coordination_threshold" => self.coordination_threshold = num(key, value)?,
            "match_threshold" => self.match_threshold = num(key, value)?,
            "filter_top_k" => self.filter_top_k = opt_num(key, value)?,
            "functions_file" => {
                self.functions_file = (!value.is_empty()).then(|| value.to_string())
            }
            "hitcounts_file" => {
                self.hitcounts_file = (!value.is_empty()).then(|| value.to_string())
            }
            "crossdoc_context_size" => self.crossdoc_context_size = num(key, value)?,
            "crossdoc_threshold" => self.crossdoc_threshold = num(key, value)?,
            "crossdoc_multiple" => self.crossdoc_multiple = num(key, value)?,
            "crossdoc_filter_top_k" => self.crossdoc_filter_top_k = opt_num(key, value)?,
            other => return Err(PipelineError::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Full `key=value` snapshot; parses back into an identical config.
    pub fn snapshot(&self) -> String {
        let opt = |v: &Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        let opt_s = |v: &Option<String>| v.clone().unwrap_or_default();
        format!(
            "metric={}\naggregation={}\nmerge_threshold={}\nmax_index_fanout={}\nmax_rounds={}\n\
             min_count={}\nproper_nouns_only={}\nslot_tagged={}\nssm_alpha={}\nssm_beta={}\n\
             n_object={}\nn_relation={}\ncombination={}\nworkers={}\nseed={}\n\
             filters_enabled={}\ncoordination_threshold={}\nmatch_threshold={}\nfilter_top_k={}\n\
             functions_file={}\nhitcounts_file={}\ncrossdoc_context_size={}\n\
             crossdoc_threshold={}\ncrossdoc_multiple={}\ncrossdoc_filter_top_k={}\n",
            self.metric.name(),
            self.aggregation.name(),
            self.merge_threshold,
            self.max_index_fanout,
            self.max_rounds,
            self.min_count,
            self.proper_nouns_only,
            self.slot_tagged,
            self.ssm_alpha,
            self.ssm_beta,
            self.n_object,
            self.n_relation,
            self.combination.name(),
            self.workers,
            self.seed,
            self.filters_enabled,
            self.coordination_threshold,
            self.match_threshold,
            opt(&self.filter_top_k),
            opt_s(&self.functions_file),
            opt_s(&self.hitcounts_file),
            self.crossdoc_context_size,
            self.crossdoc_threshold,
            self.crossdoc_multiple,
            opt(&self.crossdoc_filter_top_k),
        )
    }

    pub fn load_options(&self) -> crate::corpus::LoadOptions {
        crate::corpus::LoadOptions {
            min_count: self.min_count,
            proper_nouns_only: self.proper_nouns_only,
            slot_tagged: self.slot_tagged,
        }
    }

    pub fn ssm_params(&self) -> Result<SsmParams, PipelineError> {
        Ok(SsmParams::new(self.ssm_alpha, self.ssm_beta)?)
    }

    pub fn property_multiple(&self) -> Result<PropertyMultiple, PipelineError> {
        Ok(PropertyMultiple::new(self.n_object, self.n_relation)?)
    }

    pub fn clustering_config(&self) -> ClusteringConfig {
        ClusteringConfig {
            max_index_fanout: self.max_index_fanout,
            merge_threshold: self.merge_threshold,
            max_rounds: self.max_rounds,
            metric: self.metric,
            aggregation: self.aggregation,
        }
    }

    pub fn crossdoc_config(&self) -> crate::crossdoc::CrossdocConfig {
        crate::crossdoc::CrossdocConfig {
            context_size: self.crossdoc_context_size,
            threshold: self.crossdoc_threshold,
            property_multiple: self.crossdoc_multiple,
            ssm: SsmParams {
                alpha: self.ssm_alpha,
                beta: self.ssm_beta,
            },
            combination: self.combination,
            max_index_fanout: self.max_index_fanout,
            max_rounds: self.max_rounds,
            filter_top_k: self.crossdoc_filter_top_k,
        }
    }
}

/// Clustering result split by kind, plus the engine instrumentation.
#[derive(Debug)]
pub struct ResolveOutcome {
    pub outcome: Outcome,
    pub object_clusters: Vec<Vec<String>>,
    pub relation_clusters: Vec<Vec<String>>,
}

/// Cluster a loaded corpus under the configured metric.
pub fn resolve(
    corpus: &Corpus,
    config: &RunConfig,
    filter: Option<&dyn MergeFilter>,
) -> Result<ResolveOutcome, PipelineError> {
    let scorer = CorpusScorer::new(
        corpus,
        config.metric,
        config.ssm_params()?,
        config.property_multiple()?,
        config.combination,
    );
    let mut engine = Engine::new(corpus, &scorer, config.clustering_config());
    if let Some(f) = filter {
        engine = engine.with_filter(f, FilterBudget(config.filter_top_k));
    }
    if config.workers == 1 {
        engine = engine.sequential();
    }
    let outcome = engine.run()?;
    let object_clusters = outcome.labeled_clusters(corpus, StringKind::Object);
    let relation_clusters = outcome.labeled_clusters(corpus, StringKind::Relation);
    Ok(ResolveOutcome {
        outcome,
        object_clusters,
        relation_clusters,
    })
}

/// A scored first-round candidate pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedPair {
    pub left: String,
    pub right: String,
    pub score: f64,
}

/// Score every first-round candidate string pair of one kind under the
/// configured metric, descending. This is the ranking the curve-based
/// evaluation consumes: only pairs sharing at least one indexed feature
/// appear.
pub fn rank_pairs(
    corpus: &Corpus,
    config: &RunConfig,
    kind: StringKind,
) -> Result<Vec<RankedPair>, PipelineError> {
    let scorer = CorpusScorer::new(
        corpus,
        config.metric,
        config.ssm_params()?,
        config.property_multiple()?,
        config.combination,
    );
    let max = config.max_index_fanout;

    let mut pairs: Vec<(StringId, StringId)> = Vec::new();
    for fid in 0..corpus.feature_count() as u32 {
        let posting: Vec<StringId> = corpus
            .posting(fid)
            .iter()
            .copied()
            .filter(|&id| corpus.is_clusterable(id) && corpus.kind(id) == kind)
            .collect();
        if posting.len() >= max {
            continue;
        }
        for i in 0..posting.len() {
            for j in i + 1..posting.len() {
                pairs.push((posting[i], posting[j]));
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();

    let mut ranked = Vec::with_capacity(pairs.len());
    for (a, b) in pairs {
        let ev = scorer.pair_evidence(a, b)?;
        let (mut left, mut right) = (corpus.text(a).to_string(), corpus.text(b).to_string());
        if left > right {
            std::mem::swap(&mut left, &mut right);
        }
        ranked.push(RankedPair {
            left,
            right,
            score: ev.value,
        });
    }
    ranked.sort_by(|x, y| {
        y.score
            .partial_cmp(&x.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| (&x.left, &x.right).cmp(&(&y.left, &y.right)))
    });
    Ok(ranked)
}
