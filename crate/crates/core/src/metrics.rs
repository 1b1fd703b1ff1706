//! Pairwise similarity and probability scorers.
//!
//! Five ways to compare two strings, plus their combination:
//!
//! - string similarity mapped to a smoothed probability (SSM)
//! - the shared-property posterior (ESP) and its degree-weighted variant
//! - boolean cosine similarity over shared feature counts (CSM)
//! - mutual-information-weighted per-slot similarity with a geometric-mean
//!   combination (the DIRT-style metric)
//! - naive-Bayes combination of the SSM and ESP probabilities
//!
//! Cluster pairs are scored by aggregating the cross-cluster string-pair
//! values, either as a likelihood-ratio product against the per-pair priors
//! or as a plain mean variant.

use thiserror::Error;

use crate::corpus::{Corpus, CorpusError, StringId};
use crate::esp::{self, EspError, PropertyMultiple};
use crate::{ArgSlot, StringKind};

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("similarity is defined only for non-empty strings")]
    EmptyString,
    #[error("similarity {0} outside [0, 1]")]
    SimilarityOutOfRange(f64),
    #[error("extraction counts must be positive, got ({0}, {1})")]
    ZeroExtractionCount(u64, u64),
    #[error("shared count k={k} exceeds min(n1, n2) = {max}")]
    SharedExceedsCounts { k: u64, max: u64 },
    #[error("probability {0} must lie strictly inside (0, 1)")]
    ProbabilityNotInterior(f64),
    #[error("clusters must be disjoint to score a merge")]
    OverlappingClusters,
    #[error("cannot aggregate an empty set of pair scores")]
    NoPairs,
    #[error("likelihood-ratio aggregation needs probabilities with priors")]
    RatioNeedsProbability,
    #[error(transparent)]
    Esp(#[from] EspError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Smoothing parameters mapping a raw similarity into a probability that can
/// never reach 0 or 1: `(alpha * sim + 1) / (alpha + beta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsmParams {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for SsmParams {
    fn default() -> Self {
        SsmParams {
            alpha: 20.0,
            beta: 5.0,
        }
    }
}

impl SsmParams {
    /// `alpha >= 0` and `beta > 1` keep the output strictly inside (0, 1).
    pub fn new(alpha: f64, beta: f64) -> Result<Self, MetricError> {
        if alpha.is_nan() || alpha < 0.0 || beta.is_nan() || beta <= 1.0 {
            return Err(MetricError::SimilarityOutOfRange(alpha));
        }
        Ok(SsmParams { alpha, beta })
    }
}

/// Which pairwise model scores a candidate pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Ssm,
    Esp,
    Csm,
    Smi,
    Combined,
    Wesp,
}

impl Metric {
    pub fn is_probability(&self) -> bool {
        matches!(
            self,
            Metric::Ssm | Metric::Esp | Metric::Combined | Metric::Wesp
        )
    }

    pub fn parse(s: &str) -> Option<Metric> {
        Some(match s {
            "ssm" => Metric::Ssm,
            "esp" => Metric::Esp,
            "csm" => Metric::Csm,
            "smi" => Metric::Smi,
            "combined" => Metric::Combined,
            "wesp" => Metric::Wesp,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Metric::Ssm => "ssm",
            Metric::Esp => "esp",
            Metric::Csm => "csm",
            Metric::Smi => "smi",
            Metric::Combined => "combined",
            Metric::Wesp => "wesp",
        }
    }
}

/// How cross-cluster pair scores combine into one merge score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Aggregation {
    /// Product over new pairs of `p(1-prior) / ((1-p) prior)`, compared to a
    /// ratio threshold.
    LikelihoodRatio,
    Mean,
    GeometricMean,
    HarmonicMean,
}

impl Aggregation {
    pub fn parse(s: &str) -> Option<Aggregation> {
        Some(match s {
            "likelihood_ratio" => Aggregation::LikelihoodRatio,
            "mean" => Aggregation::Mean,
            "geometric_mean" => Aggregation::GeometricMean,
            "harmonic_mean" => Aggregation::HarmonicMean,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Aggregation::LikelihoodRatio => "likelihood_ratio",
            Aggregation::Mean => "mean",
            Aggregation::GeometricMean => "geometric_mean",
            Aggregation::HarmonicMean => "harmonic_mean",
        }
    }
}

/// One scored string pair: the model value, whether it is a probability, and
/// the pair's prior when the model defines one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairEvidence {
    pub value: f64,
    pub is_probability: bool,
    pub prior: Option<f64>,
}

/// Levenshtein edit distance over characters.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Edit similarity: `1 - distance / max(len1, len2)`, 1.0 for two empty
/// strings.
pub fn edit_similarity(a: &str, b: &str) -> f64 {
    let max_len = a.chars().count().max(b.chars().count());
    if max_len == 0 {
        return 1.0;
    }
    1.0 - levenshtein(a, b) as f64 / max_len as f64
}

fn monge_elkan_directed(a: &[&str], b: &[&str]) -> f64 {
    let mut total = 0.0;
    for ta in a {
        let mut best = 0.0f64;
        for tb in b {
            best = best.max(edit_similarity(ta, tb));
        }
        total += best;
    }
    total / a.len() as f64
}

/// Token-level average-best similarity with a normalized edit-similarity
/// inner metric, symmetrized by averaging both directions.
pub fn monge_elkan(a: &str, b: &str) -> f64 {
    let ta: Vec<&str> = a.split_whitespace().collect();
    let tb: Vec<&str> = b.split_whitespace().collect();
    if ta.is_empty() || tb.is_empty() {
        return if ta.len() == tb.len() { 1.0 } else { 0.0 };
    }
    0.5 * (monge_elkan_directed(&ta, &tb) + monge_elkan_directed(&tb, &ta))
}

/// Surface similarity in [0, 1]: token-level average-best matching for
/// objects, normalized edit distance for relations.
pub fn string_similarity(s1: &str, s2: &str, kind: StringKind) -> Result<f64, MetricError> {
    if s1.is_empty() || s2.is_empty() {
        return Err(MetricError::EmptyString);
    }
    Ok(match kind {
        StringKind::Object => monge_elkan(s1, s2),
        StringKind::Relation => edit_similarity(s1, s2),
    })
}

/// Smoothed similarity-to-probability map. The output lives in
/// `[1/(alpha+beta), (alpha+1)/(alpha+beta)]`, never exactly 0 or 1.
pub fn ssm_probability(sim: f64, params: &SsmParams) -> Result<f64, MetricError> {
    if !(0.0..=1.0).contains(&sim) {
        return Err(MetricError::SimilarityOutOfRange(sim));
    }
    Ok((params.alpha * sim + 1.0) / (params.alpha + params.beta))
}

/// Boolean cosine similarity: `k / sqrt(n1 * n2)`.
pub fn csm_similarity(k: u64, n1: u64, n2: u64) -> Result<f64, MetricError> {
    if n1 == 0 || n2 == 0 {
        return Err(MetricError::ZeroExtractionCount(n1, n2));
    }
    if k > n1.min(n2) {
        return Err(MetricError::SharedExceedsCounts { k, max: n1.min(n2) });
    }
    Ok(k as f64 / ((n1 as f64) * (n2 as f64)).sqrt())
}

// Mutual information between a string and a context value, clamped at zero
// so sparse co-occurrence noise cannot contribute negative similarity.
fn mi_clamped(joint: u64, total: u64, left: u64, right: u64) -> f64 {
    if joint == 0 || left == 0 || right == 0 {
        return 0.0;
    }
    let v = ((joint as f64 * total as f64) / (left as f64 * right as f64)).ln();
    v.max(0.0)
}

// One positional similarity: shared context values weighted by the mutual
// information each string has with them, over the total weight either string
// carries in that position.
fn smi_position(
    total: u64,
    n1: u64,
    n2: u64,
    counts1: &std::collections::HashMap<u32, u64>,
    counts2: &std::collections::HashMap<u32, u64>,
    global: impl Fn(u32) -> u64,
) -> f64 {
    let mut shared = 0.0;
    for (&val, &c1) in counts1 {
        if let Some(&c2) = counts2.get(&val) {
            let g = global(val);
            shared += mi_clamped(c1, total, n1, g) + mi_clamped(c2, total, n2, g);
        }
    }
    if shared == 0.0 {
        return 0.0;
    }
    let mut denom = 0.0;
    for (&val, &c) in counts1 {
        denom += mi_clamped(c, total, n1, global(val));
    }
    for (&val, &c) in counts2 {
        denom += mi_clamped(c, total, n2, global(val));
    }
    if denom == 0.0 {
        0.0
    } else {
        shared / denom
    }
}

// Per-position co-occurrence counts of a string, derived from its distinct
// feature keys: part 1 is the instance arg1 (relations) or the heading
// relation (objects); part 2 is the instance arg2 or the co-argument.
fn position_counts(
    corpus: &Corpus,
    id: StringId,
    part2: bool,
) -> std::collections::HashMap<u32, u64> {
    let mut map = std::collections::HashMap::new();
    for &fid in corpus.feature_ids(id) {
        let (a, b) = corpus.feature_parts(fid);
        *map.entry(if part2 { b } else { a }).or_insert(0u64) += 1;
    }
    map
}

/// Mutual-information similarity: per-position similarities combined by
/// geometric mean. Relations compare their argument-1 and argument-2
/// distributions; objects compare their relation and co-argument
/// distributions. Counts are over distinct property keys.
pub fn smi_similarity(corpus: &Corpus, s1: StringId, s2: StringId) -> Result<f64, MetricError> {
    let kind = corpus.kind(s1);
    if kind != corpus.kind(s2) {
        return Err(MetricError::Corpus(CorpusError::KindMismatch(
            kind,
            corpus.kind(s2),
        )));
    }
    let (n1, n2) = (corpus.extraction_count(s1), corpus.extraction_count(s2));
    if n1 == 0 || n2 == 0 {
        return Err(MetricError::ZeroExtractionCount(n1, n2));
    }
    let total = corpus.assertion_count() as u64;
    let c1a = position_counts(corpus, s1, false);
    let c2a = position_counts(corpus, s2, false);
    let c1b = position_counts(corpus, s1, true);
    let c2b = position_counts(corpus, s2, true);

    let (sim_a, sim_b) = match kind {
        StringKind::Relation => {
            // Positions are the two argument slots; the marginal is how
            // often the value fills that slot anywhere.
            let slot1 = |sym: u32| {
                corpus
                    .string_id(corpus.resolve_symbol(sym), StringKind::Object)
                    .map_or(0, |id| corpus.slot_count(id, ArgSlot::Arg1))
            };
            let slot2 = |sym: u32| {
                corpus
                    .string_id(corpus.resolve_symbol(sym), StringKind::Object)
                    .map_or(0, |id| corpus.slot_count(id, ArgSlot::Arg2))
            };
            (
                smi_position(total, n1, n2, &c1a, &c2a, slot1),
                smi_position(total, n1, n2, &c1b, &c2b, slot2),
            )
        }
        StringKind::Object => {
            // Positions are the heading relation and the co-argument.
            let rel = |sym: u32| {
                corpus
                    .string_id(corpus.resolve_symbol(sym), StringKind::Relation)
                    .map_or(0, |id| corpus.extraction_count(id))
            };
            let coarg = |sym: u32| {
                corpus
                    .string_id(corpus.resolve_symbol(sym), StringKind::Object)
                    .map_or(0, |id| corpus.extraction_count(id))
            };
            (
                smi_position(total, n1, n2, &c1a, &c2a, rel),
                smi_position(total, n1, n2, &c1b, &c2b, coarg),
            )
        }
    };
    Ok((sim_a * sim_b).sqrt())
}

/// Degree-weighted shared count: each shared property contributes the
/// reciprocal of its extraction degree. Equals the integer count when every
/// shared property is unique to the pair.
pub fn wesp_shared_weight(corpus: &Corpus, s1: StringId, s2: StringId) -> Result<f64, MetricError> {
    let shared = corpus.shared_features(s1, s2)?;
    Ok(shared
        .iter()
        .map(|&fid| 1.0 / corpus.feature_degree(fid) as f64)
        .sum())
}

/// Which algebraic layout of the two-hypothesis Bayes combination to use.
/// Both are the same function of the inputs; the switch exists to make the
/// equivalence checkable rather than assumed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombinationRule {
    /// Weight each hypothesis term by one minus its prior.
    ComplementWeighted,
    /// Divide each hypothesis term by its prior.
    PriorNormalized,
}

impl CombinationRule {
    pub fn parse(s: &str) -> Option<CombinationRule> {
        Some(match s {
            "complement_weighted" => CombinationRule::ComplementWeighted,
            "prior_normalized" => CombinationRule::PriorNormalized,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            CombinationRule::ComplementWeighted => "complement_weighted",
            CombinationRule::PriorNormalized => "prior_normalized",
        }
    }
}

fn check_interior(p: f64) -> Result<(), MetricError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(MetricError::ProbabilityNotInterior(p));
    }
    Ok(())
}

/// Combine two conditionally independent probability estimates for the same
/// coreference event under a shared prior.
pub fn combine_evidence(
    p_ssm: f64,
    p_esp: f64,
    prior: f64,
    rule: CombinationRule,
) -> Result<f64, MetricError> {
    check_interior(p_ssm)?;
    check_interior(p_esp)?;
    check_interior(prior)?;
    let (t, f) = match rule {
        CombinationRule::ComplementWeighted => (
            p_ssm * p_esp * (1.0 - prior),
            (1.0 - p_ssm) * (1.0 - p_esp) * prior,
        ),
        CombinationRule::PriorNormalized => (
            p_ssm * p_esp / prior,
            (1.0 - p_ssm) * (1.0 - p_esp) / (1.0 - prior),
        ),
    };
    Ok(t / (t + f))
}

/// Aggregate cross-cluster pair evidence into one merge score.
///
/// The likelihood-ratio form multiplies per-pair ratios and is compared
/// against a ratio threshold; the mean forms aggregate the raw values and
/// are compared against a value threshold.
pub fn aggregate_pair_scores(
    pairs: &[PairEvidence],
    aggregation: Aggregation,
) -> Result<f64, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::NoPairs);
    }
    let n = pairs.len() as f64;
    match aggregation {
        Aggregation::LikelihoodRatio => {
            let mut ratio = 1.0f64;
            for ev in pairs {
                let (Some(prior), true) = (ev.prior, ev.is_probability) else {
                    return Err(MetricError::RatioNeedsProbability);
                };
                ratio *= (ev.value * (1.0 - prior)) / ((1.0 - ev.value) * prior);
            }
            Ok(ratio)
        }
        Aggregation::Mean => Ok(pairs.iter().map(|e| e.value).sum::<f64>() / n),
        Aggregation::GeometricMean => {
            Ok((pairs.iter().map(|e| e.value.ln()).sum::<f64>() / n).exp())
        }
        Aggregation::HarmonicMean => {
            let denom: f64 = pairs.iter().map(|e| 1.0 / e.value).sum();
            Ok(n / denom)
        }
    }
}

/// Score the merge of two disjoint clusters by aggregating every
/// cross-cluster string pair under the given evidence function.
pub fn cluster_pair_score<F>(
    c1: &[StringId],
    c2: &[StringId],
    aggregation: Aggregation,
    mut evidence: F,
) -> Result<f64, MetricError>
where
    F: FnMut(StringId, StringId) -> Result<PairEvidence, MetricError>,
{
    if c1.iter().any(|id| c2.contains(id)) {
        return Err(MetricError::OverlappingClusters);
    }
    let mut pairs = Vec::with_capacity(c1.len() * c2.len());
    for &a in c1 {
        for &b in c2 {
            pairs.push(evidence(a, b)?);
        }
    }
    aggregate_pair_scores(&pairs, aggregation)
}

// ESP posteriors sit in (0, 1]; pull them strictly inside the unit interval
// before they feed ratios or the Bayes combination.
const INTERIOR_FLOOR: f64 = 1e-300;
const INTERIOR_CEIL: f64 = 1.0 - 1e-12;

fn interior(p: f64) -> f64 {
    p.clamp(INTERIOR_FLOOR, INTERIOR_CEIL)
}

/// Pair evidence over corpus strings for every supported metric.
pub struct CorpusScorer<'a> {
    corpus: &'a Corpus,
    metric: Metric,
    ssm: SsmParams,
    multiple: PropertyMultiple,
    combination: CombinationRule,
}

impl<'a> CorpusScorer<'a> {
    pub fn new(
        corpus: &'a Corpus,
        metric: Metric,
        ssm: SsmParams,
        multiple: PropertyMultiple,
        combination: CombinationRule,
    ) -> Self {
        CorpusScorer {
            corpus,
            metric,
            ssm,
            multiple,
            combination,
        }
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    fn esp_prior(&self, kind: StringKind, n1: u64, n2: u64) -> f64 {
        let p_min = self
            .multiple
            .potentials(kind, n1)
            .min(self.multiple.potentials(kind, n2));
        interior(1.0 / p_min.max(2) as f64)
    }

    /// Evidence for one string pair under the configured metric.
    pub fn pair_evidence(&self, a: StringId, b: StringId) -> Result<PairEvidence, MetricError> {
        let corpus = self.corpus;
        let kind = corpus.kind(a);
        let (n1, n2) = (corpus.extraction_count(a), corpus.extraction_count(b));
        match self.metric {
            Metric::Ssm => {
                let sim = string_similarity(corpus.text(a), corpus.text(b), kind)?;
                Ok(PairEvidence {
                    value: ssm_probability(sim, &self.ssm)?,
                    is_probability: true,
                    prior: Some(0.5),
                })
            }
            Metric::Esp => {
                let k = corpus.shared_feature_count(a, b)?;
                let p = esp::esp_posterior(k, n1, n2, &self.multiple, kind)?;
                Ok(PairEvidence {
                    value: interior(p),
                    is_probability: true,
                    prior: Some(self.esp_prior(kind, n1, n2)),
                })
            }
            Metric::Wesp => {
                let k = wesp_shared_weight(corpus, a, b)?;
                let p = esp::esp_posterior_continuous(k, n1, n2, &self.multiple, kind)?;
                Ok(PairEvidence {
                    value: interior(p),
                    is_probability: true,
                    prior: Some(self.esp_prior(kind, n1, n2)),
                })
            }
            Metric::Csm => {
                let k = corpus.shared_feature_count(a, b)?;
                Ok(PairEvidence {
                    value: csm_similarity(k.min(n1).min(n2), n1, n2)?,
                    is_probability: false,
                    prior: None,
                })
            }
            Metric::Smi => Ok(PairEvidence {
                value: smi_similarity(corpus, a, b)?,
                is_probability: false,
                prior: None,
            }),
            Metric::Combined => {
                let sim = string_similarity(corpus.text(a), corpus.text(b), kind)?;
                let p_ssm = ssm_probability(sim, &self.ssm)?;
                let k = corpus.shared_feature_count(a, b)?;
                let p_esp = interior(esp::esp_posterior(k, n1, n2, &self.multiple, kind)?);
                // The two evidence posteriors compose at even odds; the urn
                // prior enters once, in the merge ratio. Folding it into the
                // combination as well would turn the string model's floor
                // into a strong positive for every evidence-free pair.
                let prior = self.esp_prior(kind, n1, n2);
                Ok(PairEvidence {
                    value: combine_evidence(p_ssm, p_esp, 0.5, self.combination)?,
                    is_probability: true,
                    prior: Some(prior),
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::LoadOptions;
    use approx::assert_relative_eq;

    #[test]
    fn relation_similarity_is_normalized_edit_distance() {
        assert_relative_eq!(
            string_similarity("abc", "abd", StringKind::Relation).unwrap(),
            2.0 / 3.0,
            epsilon = 1e-12
        );
        assert_eq!(
            string_similarity("abc", "abc", StringKind::Relation).unwrap(),
            1.0
        );
        assert_eq!(
            string_similarity("abc", "xyz", StringKind::Relation).unwrap(),
            0.0
        );
        assert!(string_similarity("", "abc", StringKind::Relation).is_err());
    }

    #[test]
    fn object_similarity_is_symmetric_token_matching() {
        assert_eq!(
            string_similarity("United States", "United States", StringKind::Object).unwrap(),
            1.0
        );
        let a = string_similarity("Karvel Onta", "Karvel Onta Group", StringKind::Object).unwrap();
        let b = string_similarity("Karvel Onta Group", "Karvel Onta", StringKind::Object).unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-12);
        assert!(a > 0.75 && a < 1.0, "{a}");
    }

    #[test]
    fn ssm_probability_endpoints() {
        let p = SsmParams::default();
        assert_relative_eq!(ssm_probability(1.0, &p).unwrap(), 0.84, epsilon = 1e-12);
        assert_relative_eq!(ssm_probability(0.0, &p).unwrap(), 0.04, epsilon = 1e-12);
        assert_relative_eq!(ssm_probability(0.5, &p).unwrap(), 0.44, epsilon = 1e-12);
        assert!(ssm_probability(1.5, &p).is_err());
    }

    #[test]
    fn ssm_probability_strictly_increasing() {
        let p = SsmParams::default();
        let mut last = -1.0;
        for i in 0..=10 {
            let v = ssm_probability(i as f64 / 10.0, &p).unwrap();
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn csm_matches_worked_example() {
        let v = csm_similarity(4, 659, 26).unwrap();
        assert!((v - 0.0306).abs() < 1e-3, "{v}");
        assert_relative_eq!(v, 4.0 / (659.0f64 * 26.0).sqrt(), epsilon = 1e-12);
        assert_eq!(csm_similarity(0, 10, 20).unwrap(), 0.0);
        assert_eq!(csm_similarity(7, 7, 7).unwrap(), 1.0);
        assert!(csm_similarity(1, 0, 5).is_err());
    }

    #[test]
    fn combine_evidence_matches_worked_example() {
        let p = combine_evidence(0.9, 0.9, 0.5, CombinationRule::ComplementWeighted).unwrap();
        assert_relative_eq!(p, 0.405 / 0.410, epsilon = 1e-12);
        // Uninformative string evidence hands back the other probability.
        let p = combine_evidence(0.5, 0.7, 0.5, CombinationRule::ComplementWeighted).unwrap();
        assert_relative_eq!(p, 0.7, epsilon = 1e-12);
        let p = combine_evidence(0.5, 0.5, 0.5, CombinationRule::ComplementWeighted).unwrap();
        assert_relative_eq!(p, 0.5, epsilon = 1e-12);
        assert!(combine_evidence(1.0, 0.5, 0.5, CombinationRule::ComplementWeighted).is_err());
        assert!(combine_evidence(0.5, 0.0, 0.5, CombinationRule::ComplementWeighted).is_err());
    }

    #[test]
    fn combination_rules_agree_algebraically() {
        for ps in [0.04, 0.3, 0.84] {
            for pe in [1e-6, 0.2, 0.97] {
                for prior in [0.002, 0.5, 0.9] {
                    let a = combine_evidence(ps, pe, prior, CombinationRule::ComplementWeighted)
                        .unwrap();
                    let b =
                        combine_evidence(ps, pe, prior, CombinationRule::PriorNormalized).unwrap();
                    assert_relative_eq!(a, b, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn combine_with_even_prior_is_normalized_product() {
        for (p1, p2) in [(0.3, 0.8), (0.04, 0.04), (0.9, 0.2)] {
            let got = combine_evidence(p1, p2, 0.5, CombinationRule::ComplementWeighted).unwrap();
            let want = p1 * p2 / (p1 * p2 + (1.0 - p1) * (1.0 - p2));
            assert_relative_eq!(got, want, epsilon = 1e-12);
        }
    }

    fn ev(value: f64, prior: f64) -> PairEvidence {
        PairEvidence {
            value,
            is_probability: true,
            prior: Some(prior),
        }
    }

    #[test]
    fn likelihood_ratio_over_singletons_is_the_pair_ratio() {
        let score =
            aggregate_pair_scores(&[ev(2.0 / 3.0, 0.5)], Aggregation::LikelihoodRatio).unwrap();
        assert_relative_eq!(score, 2.0, epsilon = 1e-12);
        // A pair at its prior contributes a neutral factor.
        let score = aggregate_pair_scores(
            &[ev(0.25, 0.25), ev(2.0 / 3.0, 0.5)],
            Aggregation::LikelihoodRatio,
        )
        .unwrap();
        assert_relative_eq!(score, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn mean_aggregations() {
        let pairs = [ev(0.6, 0.5), ev(0.8, 0.5)];
        assert_relative_eq!(
            aggregate_pair_scores(&pairs, Aggregation::Mean).unwrap(),
            0.7
        );
        assert_relative_eq!(
            aggregate_pair_scores(&pairs, Aggregation::GeometricMean).unwrap(),
            (0.6f64 * 0.8).sqrt(),
            epsilon = 1e-12
        );
        assert_relative_eq!(
            aggregate_pair_scores(&pairs, Aggregation::HarmonicMean).unwrap(),
            2.0 / (1.0 / 0.6 + 1.0 / 0.8),
            epsilon = 1e-12
        );
        let sims = [PairEvidence {
            value: 0.4,
            is_probability: false,
            prior: None,
        }];
        assert!(aggregate_pair_scores(&sims, Aggregation::LikelihoodRatio).is_err());
        assert!(aggregate_pair_scores(&[], Aggregation::Mean).is_err());
    }

    #[test]
    fn cluster_pair_score_rejects_overlap() {
        let c1 = [StringId(0), StringId(1)];
        let c2 = [StringId(1)];
        let r = cluster_pair_score(&c1, &c2, Aggregation::Mean, |_, _| Ok(ev(0.5, 0.5)));
        assert!(matches!(r, Err(MetricError::OverlappingClusters)));
    }

    fn toy_corpus() -> Corpus {
        // Two relations over overlapping argument sets, plus a third to
        // thicken the marginals.
        let text = "\
r one\ta\tx\n\
r one\tb\ty\n\
r one\ta\ty\n\
r two\ta\tx\n\
r two\tc\tz\n\
r three\ta\tx\n\
r three\tb\tz\n";
        Corpus::from_reader(
            text.as_bytes(),
            LoadOptions {
                min_count: 1,
                proper_nouns_only: false,
                slot_tagged: false,
            },
        )
        .unwrap()
    }

    // Literal transcription of the mutual-information metric, computed from
    // the raw assertion list rather than the corpus feature machinery.
    fn smi_oracle_relations(corpus: &Corpus, r1: &str, r2: &str) -> f64 {
        let rows: Vec<(String, String, String)> = corpus
            .assertions()
            .map(|(r, a, b)| (r.to_string(), a.to_string(), b.to_string()))
            .collect();
        let total = rows.len() as f64;
        let mi = |rel: &str, pos: usize, val: &str| -> f64 {
            let joint = rows
                .iter()
                .filter(|t| t.0 == rel && (if pos == 1 { &t.1 } else { &t.2 }) == val)
                .count();
            let left = rows.iter().filter(|t| t.0 == rel).count();
            let right = rows
                .iter()
                .filter(|t| (if pos == 1 { &t.1 } else { &t.2 }) == val)
                .count();
            if joint == 0 {
                return 0.0;
            }
            ((joint as f64 * total) / (left as f64 * right as f64))
                .ln()
                .max(0.0)
        };
        let proj = |rel: &str, pos: usize| -> Vec<String> {
            let mut vals: Vec<String> = rows
                .iter()
                .filter(|t| t.0 == rel)
                .map(|t| if pos == 1 { t.1.clone() } else { t.2.clone() })
                .collect();
            vals.sort();
            vals.dedup();
            vals
        };
        let sim = |pos: usize| -> f64 {
            let p1 = proj(r1, pos);
            let p2 = proj(r2, pos);
            let num: f64 = p1
                .iter()
                .filter(|v| p2.contains(v))
                .map(|v| mi(r1, pos, v) + mi(r2, pos, v))
                .sum();
            let den: f64 = p1.iter().map(|v| mi(r1, pos, v)).sum::<f64>()
                + p2.iter().map(|v| mi(r2, pos, v)).sum::<f64>();
            if den == 0.0 {
                0.0
            } else {
                num / den
            }
        };
        (sim(1) * sim(2)).sqrt()
    }

    #[test]
    fn smi_matches_direct_transcription_on_toy_corpus() {
        let corpus = toy_corpus();
        let r1 = corpus.require_id("r one", StringKind::Relation).unwrap();
        let r2 = corpus.require_id("r two", StringKind::Relation).unwrap();
        let got = smi_similarity(&corpus, r1, r2).unwrap();
        let want = smi_oracle_relations(&corpus, "r one", "r two");
        assert_relative_eq!(got, want, epsilon = 1e-12);
        assert!(got > 0.0 && got < 1.0, "{got}");
        // Symmetry.
        let rev = smi_similarity(&corpus, r2, r1).unwrap();
        assert_relative_eq!(got, rev, epsilon = 1e-12);
    }

    #[test]
    fn smi_self_similarity_is_one_with_positive_terms() {
        let corpus = toy_corpus();
        let r1 = corpus.require_id("r one", StringKind::Relation).unwrap();
        let v = smi_similarity(&corpus, r1, r1).unwrap();
        assert_relative_eq!(v, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn smi_disjoint_argument_sets_score_zero() {
        let text = "ra\tp\tq\nrb\ts\tt\n";
        let corpus = Corpus::from_reader(
            text.as_bytes(),
            LoadOptions {
                min_count: 1,
                proper_nouns_only: false,
                slot_tagged: false,
            },
        )
        .unwrap();
        let r1 = corpus.require_id("ra", StringKind::Relation).unwrap();
        let r2 = corpus.require_id("rb", StringKind::Relation).unwrap();
        assert_eq!(smi_similarity(&corpus, r1, r2).unwrap(), 0.0);
    }

    #[test]
    fn wesp_weight_sums_reciprocal_degrees() {
        // A and B share two properties: (near, q) is also carried by C so
        // its degree is 3, while (solo, u) belongs to the pair alone with
        // degree 2. Shared weight = 1/3 + 1/2.
        let text = "near\tA\tq\nnear\tB\tq\nnear\tC\tq\nsolo\tA\tu\nsolo\tB\tu\n";
        let corpus = Corpus::from_reader(
            text.as_bytes(),
            LoadOptions {
                min_count: 1,
                proper_nouns_only: false,
                slot_tagged: false,
            },
        )
        .unwrap();
        let a = corpus.require_id("A", StringKind::Object).unwrap();
        let b = corpus.require_id("B", StringKind::Object).unwrap();
        assert_relative_eq!(
            wesp_shared_weight(&corpus, a, b).unwrap(),
            1.0 / 3.0 + 1.0 / 2.0,
            epsilon = 1e-12
        );
        let k = corpus.shared_feature_count(a, b).unwrap();
        assert!(wesp_shared_weight(&corpus, a, b).unwrap() <= k as f64);
        // All shared properties at degree one reduce to the integer count.
        let text2 = "p\tX\tone\np\tY\tone\nq\tX\ttwo\nq\tY\ttwo\n";
        let corpus2 = Corpus::from_reader(
            text2.as_bytes(),
            LoadOptions {
                min_count: 1,
                proper_nouns_only: false,
                slot_tagged: false,
            },
        )
        .unwrap();
        let x = corpus2.require_id("X", StringKind::Object).unwrap();
        let y = corpus2.require_id("Y", StringKind::Object).unwrap();
        // Each shared property has degree 2 here (carried by both members),
        // so the weight is k/2; a property unique to one pair member would
        // not be shared at all.
        assert_relative_eq!(
            wesp_shared_weight(&corpus2, x, y).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        let q = corpus.require_id("q", StringKind::Object).unwrap();
        let u = corpus.require_id("u", StringKind::Object).unwrap();
        // q and u share no properties.
        assert_eq!(wesp_shared_weight(&corpus, q, u).unwrap(), 0.0);
    }

    #[test]
    fn corpus_scorer_is_symmetric_across_metrics() {
        let corpus = toy_corpus();
        let a = corpus.require_id("a", StringKind::Object).unwrap();
        let b = corpus.require_id("b", StringKind::Object).unwrap();
        for metric in [
            Metric::Ssm,
            Metric::Esp,
            Metric::Csm,
            Metric::Smi,
            Metric::Combined,
            Metric::Wesp,
        ] {
            let scorer = CorpusScorer::new(
                &corpus,
                metric,
                SsmParams::default(),
                PropertyMultiple::new(3.0, 3.0).unwrap(),
                CombinationRule::ComplementWeighted,
            );
            let x = scorer.pair_evidence(a, b).unwrap();
            let y = scorer.pair_evidence(b, a).unwrap();
            assert_relative_eq!(x.value, y.value, epsilon = 1e-12);
            assert_eq!(x.is_probability, metric.is_probability());
        }
    }
}
