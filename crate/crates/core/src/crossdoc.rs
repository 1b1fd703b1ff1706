//! Occurrence-level resolution for polysemous names.
//!
//! Instead of clustering distinct strings, this mode clusters individual
//! name occurrences: each tagged mention becomes its own element,
//! represented by the set of other entities mentioned nearest to it within
//! the same document. Two occurrences of the same spelled name can land in
//! different clusters when their contexts disagree, which is exactly what
//! the single-sense string mode cannot express.
//!
//! Scoring mirrors the string mode: surface similarity feeds the smoothed
//! string model, context-set overlap feeds the shared-property model with
//! the occurrence's context size as its extraction count, and the two
//! combine under the usual prior. Candidate generation reuses the fanout-
//! capped index, keyed on context entities.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use thiserror::Error;

use crate::clustering::{
    ClusterError, ClusteringConfig, ElementId, ElementStore, Engine, FilterBudget, MergeFilter,
    Outcome, PairScorer,
};
use crate::corpus::FeatureId;
use crate::esp::{self, PropertyMultiple};
use crate::metrics::{
    combine_evidence, monge_elkan, ssm_probability, Aggregation, CombinationRule, Metric,
    MetricError, PairEvidence, SsmParams,
};
use crate::StringKind;

#[derive(Debug, Error)]
pub enum CrossdocError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("duplicate mention index {index} in document {doc:?}")]
    DuplicateMention { doc: String, index: u32 },
    #[error("no mentions in input")]
    Empty,
    #[error(transparent)]
    Cluster(#[from] ClusterError),
}

/// One name occurrence: where it sits and which entities surround it.
#[derive(Debug, Clone)]
pub struct Occurrence {
    pub doc: String,
    pub index: u32,
    pub surface: String,
    /// Distinct context-entity ids, sorted.
    context: Vec<FeatureId>,
}

impl Occurrence {
    /// Stable identifier used in outputs and gold files.
    pub fn id(&self) -> String {
        format!("{}:{}", self.doc, self.index)
    }

    pub fn context_size(&self) -> usize {
        self.context.len()
    }
}

/// A bag of occurrences with an interned context-entity vocabulary. Two
/// occurrences of the same surface string are distinct items.
#[derive(Debug)]
pub struct OccurrenceCorpus {
    occurrences: Vec<Occurrence>,
    ids: Vec<String>,
    entity_names: Vec<String>,
    total_context_entries: u64,
}

impl OccurrenceCorpus {
    pub fn len(&self) -> usize {
        self.occurrences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occurrences.is_empty()
    }

    pub fn occurrence(&self, e: ElementId) -> &Occurrence {
        &self.occurrences[e as usize]
    }

    pub fn context_entities(&self, e: ElementId) -> impl Iterator<Item = &str> {
        self.occurrences[e as usize]
            .context
            .iter()
            .map(|&i| self.entity_names[i as usize].as_str())
    }
}

impl ElementStore for OccurrenceCorpus {
    fn element_count(&self) -> usize {
        self.occurrences.len()
    }

    fn kind(&self, _e: ElementId) -> StringKind {
        StringKind::Object
    }

    fn label(&self, e: ElementId) -> &str {
        &self.ids[e as usize]
    }

    fn features(&self, e: ElementId) -> &[FeatureId] {
        &self.occurrences[e as usize].context
    }

    fn extraction_count(&self, e: ElementId) -> u64 {
        self.occurrences[e as usize].context.len() as u64
    }

    fn clusterable(&self, _e: ElementId) -> bool {
        true
    }

    fn evidence_unit_count(&self) -> u64 {
        self.total_context_entries
    }
}

/// Build occurrence contexts from per-document ordered mention lists. Each
/// occurrence's context is the up-to-`e` nearest other mentions by mention
/// distance, ties broken toward earlier text, collapsed to a set of entity
/// strings.
pub fn build_occurrence_contexts(
    documents: &[(String, Vec<String>)],
    e: usize,
) -> Result<OccurrenceCorpus, CrossdocError> {
    let mut entity_ids: HashMap<String, FeatureId> = HashMap::new();
    let mut entity_names: Vec<String> = Vec::new();
    let mut occurrences = Vec::new();
    let mut total_context_entries = 0u64;

    for (doc, mentions) in documents {
        for (i, surface) in mentions.iter().enumerate() {
            // Nearest-first mention positions: distance 1 before/after, then
            // distance 2, and so on, earlier text first within a distance.
            let mut context: Vec<FeatureId> = Vec::new();
            let mut picked = 0usize;
            let mut distance = 1usize;
            while picked < e && distance < mentions.len() {
                let before = i.checked_sub(distance);
                let after = if i + distance < mentions.len() {
                    Some(i + distance)
                } else {
                    None
                };
                for j in [before, after].into_iter().flatten() {
                    if picked >= e {
                        break;
                    }
                    picked += 1;
                    let name = &mentions[j];
                    let next_id = entity_ids.len() as FeatureId;
                    let id = *entity_ids.entry(name.clone()).or_insert_with(|| {
                        entity_names.push(name.clone());
                        next_id
                    });
                    context.push(id);
                }
                distance += 1;
            }
            context.sort_unstable();
            context.dedup();
            total_context_entries += context.len() as u64;
            occurrences.push(Occurrence {
                doc: doc.clone(),
                index: i as u32,
                surface: surface.clone(),
                context,
            });
        }
    }
    if occurrences.is_empty() {
        return Err(CrossdocError::Empty);
    }
    let ids = occurrences.iter().map(|o| o.id()).collect();
    Ok(OccurrenceCorpus {
        occurrences,
        ids,
        entity_names,
        total_context_entries,
    })
}

/// Parse `doc_id TAB mention_index TAB entity` lines into per-document
/// ordered mention lists.
pub fn parse_mentions<R: Read>(reader: R) -> Result<Vec<(String, Vec<String>)>, CrossdocError> {
    let mut docs: HashMap<String, Vec<(u32, String)>> = HashMap::new();
    let mut order: Vec<String> = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(CrossdocError::Parse {
                line: idx + 1,
                reason: "expected doc_id TAB mention_index TAB entity".into(),
            });
        }
        let doc = fields[0].trim().to_string();
        let index: u32 = fields[1].trim().parse().map_err(|e| CrossdocError::Parse {
            line: idx + 1,
            reason: format!("bad mention index: {e}"),
        })?;
        let entity = fields[2].trim().to_string();
        if entity.is_empty() {
            return Err(CrossdocError::Parse {
                line: idx + 1,
                reason: "empty entity".into(),
            });
        }
        if !docs.contains_key(&doc) {
            order.push(doc.clone());
        }
        docs.entry(doc).or_default().push((index, entity));
    }
    let mut out = Vec::with_capacity(order.len());
    for doc in order {
        let mut mentions = docs.remove(&doc).expect("inserted above");
        mentions.sort_by_key(|(i, _)| *i);
        for w in mentions.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(CrossdocError::DuplicateMention { doc, index: w[0].0 });
            }
        }
        out.push((doc, mentions.into_iter().map(|(_, e)| e).collect()));
    }
    if out.is_empty() {
        return Err(CrossdocError::Empty);
    }
    Ok(out)
}

pub fn load_mentions(path: &Path) -> Result<Vec<(String, Vec<String>)>, CrossdocError> {
    parse_mentions(BufReader::new(File::open(path)?))
}

/// Occurrence-mode settings.
#[derive(Debug, Clone)]
pub struct CrossdocConfig {
    /// Context window: nearest entities per occurrence.
    pub context_size: usize,
    /// Likelihood-ratio merge threshold.
    pub threshold: f64,
    /// Urn multiple over the context size.
    pub property_multiple: f64,
    pub ssm: SsmParams,
    pub combination: CombinationRule,
    pub max_index_fanout: usize,
    pub max_rounds: usize,
    /// Filter only this many top proposals per round.
    pub filter_top_k: Option<usize>,
}

impl Default for CrossdocConfig {
    fn default() -> Self {
        CrossdocConfig {
            context_size: 100,
            threshold: 7.5,
            property_multiple: 30.0,
            ssm: SsmParams::default(),
            combination: CombinationRule::ComplementWeighted,
            max_index_fanout: 50,
            max_rounds: 20,
            filter_top_k: Some(20),
        }
    }
}

/// Combined surface/context evidence for occurrence pairs.
pub struct ContextScorer<'a> {
    occ: &'a OccurrenceCorpus,
    multiple: PropertyMultiple,
    ssm: SsmParams,
    combination: CombinationRule,
}

impl<'a> ContextScorer<'a> {
    pub fn new(occ: &'a OccurrenceCorpus, config: &CrossdocConfig) -> Result<Self, MetricError> {
        Ok(ContextScorer {
            occ,
            multiple: PropertyMultiple::new(config.property_multiple, config.property_multiple)?,
            ssm: config.ssm,
            combination: config.combination,
        })
    }
}

const INTERIOR_FLOOR: f64 = 1e-300;
const INTERIOR_CEIL: f64 = 1.0 - 1e-12;

impl PairScorer for ContextScorer<'_> {
    fn evidence(&self, a: ElementId, b: ElementId) -> Result<PairEvidence, MetricError> {
        let oa = self.occ.occurrence(a);
        let ob = self.occ.occurrence(b);
        let sim = monge_elkan(&oa.surface, &ob.surface);
        let p_ssm = ssm_probability(sim, &self.ssm)?;
        let k = crate::corpus::intersection_size(&oa.context, &ob.context);
        let (n1, n2) = (oa.context.len() as u64, ob.context.len() as u64);
        let p_esp = esp::esp_posterior(k, n1, n2, &self.multiple, StringKind::Object)?
            .clamp(INTERIOR_FLOOR, INTERIOR_CEIL);
        let p1 = self.multiple.potentials(StringKind::Object, n1);
        let p2 = self.multiple.potentials(StringKind::Object, n2);
        // Evidence combines at even odds; the urn prior applies once, in the
        // merge ratio.
        let prior = (1.0 / p1.min(p2).max(2) as f64).clamp(INTERIOR_FLOOR, INTERIOR_CEIL);
        Ok(PairEvidence {
            value: combine_evidence(p_ssm, p_esp, 0.5, self.combination)?,
            is_probability: true,
            prior: Some(prior),
        })
    }
}

/// Cluster occurrences with combined scoring under a likelihood-ratio
/// threshold, optionally filtering the top proposals per round.
pub fn resolve_occurrences(
    occ: &OccurrenceCorpus,
    config: &CrossdocConfig,
    filter: Option<&dyn MergeFilter>,
) -> Result<Outcome, CrossdocError> {
    let scorer =
        ContextScorer::new(occ, config).map_err(|e| ClusterError::BadConfig(e.to_string()))?;
    let engine_config = ClusteringConfig {
        max_index_fanout: config.max_index_fanout,
        merge_threshold: config.threshold,
        max_rounds: config.max_rounds,
        metric: Metric::Combined,
        aggregation: Aggregation::LikelihoodRatio,
    };
    let engine = Engine::new(occ, &scorer, engine_config);
    let engine = match filter {
        Some(f) => engine.with_filter(f, FilterBudget(config.filter_top_k)),
        None => engine,
    };
    Ok(engine.run()?)
}

/// Occurrence clusters as id lists, one cluster per line.
pub fn clusters_to_lines(occ: &OccurrenceCorpus, outcome: &Outcome) -> String {
    let clusters = outcome.labeled_clusters(occ, StringKind::Object);
    let mut out = String::new();
    for cluster in clusters {
        out.push_str(&cluster.join("\t"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(spec: &[(&str, &[&str])]) -> Vec<(String, Vec<String>)> {
        spec.iter()
            .map(|(d, ms)| (d.to_string(), ms.iter().map(|m| m.to_string()).collect()))
            .collect()
    }

    #[test]
    fn context_is_nearest_other_mentions() {
        let corpus =
            build_occurrence_contexts(&docs(&[("d1", &["DP", "Bellman", "Viterbi"])]), 100)
                .unwrap();
        let dp: Vec<&str> = corpus.context_entities(0).collect();
        assert_eq!(dp, vec!["Bellman", "Viterbi"]);
    }

    #[test]
    fn window_limit_prefers_near_then_earlier() {
        let corpus = build_occurrence_contexts(&docs(&[("d1", &["A", "B", "C", "D"])]), 2).unwrap();
        // Occurrence C (index 2): nearest are B and D at distance 1.
        let c: Vec<&str> = corpus.context_entities(2).collect();
        assert_eq!(c, vec!["B", "D"]);
        // Occurrence A (index 0): B at distance 1, then C.
        let a: Vec<&str> = corpus.context_entities(0).collect();
        assert_eq!(a, vec!["B", "C"]);
    }

    #[test]
    fn zero_window_and_singleton_documents() {
        let corpus = build_occurrence_contexts(&docs(&[("d1", &["A", "B"])]), 0).unwrap();
        assert_eq!(corpus.occurrence(0).context_size(), 0);
        let corpus = build_occurrence_contexts(&docs(&[("d1", &["Solo"])]), 100).unwrap();
        assert_eq!(corpus.occurrence(0).context_size(), 0);
    }

    #[test]
    fn repeated_surface_mentions_stay_distinct_items() {
        let corpus =
            build_occurrence_contexts(&docs(&[("d1", &["DP", "Bellman", "DP"])]), 100).unwrap();
        assert_eq!(corpus.len(), 3);
        assert_eq!(corpus.occurrence(0).id(), "d1:0");
        assert_eq!(corpus.occurrence(2).id(), "d1:2");
        // The other DP mention is context for the first one.
        let ctx: Vec<&str> = corpus.context_entities(0).collect();
        assert!(ctx.contains(&"DP"));
    }

    #[test]
    fn mention_parsing_round_trip() {
        let text = "d1\t0\tDP\nd1\t1\tBellman\nd2\t0\tFactory\n";
        let parsed = parse_mentions(text.as_bytes()).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0].1, vec!["DP".to_string(), "Bellman".into()]);
        assert!(parse_mentions("d1\t0\n".as_bytes()).is_err());
        assert!(parse_mentions("d1\t0\tA\nd1\t0\tB\n".as_bytes()).is_err());
        assert!(parse_mentions("".as_bytes()).is_err());
    }

    #[test]
    fn disjoint_contexts_stay_separate_identical_contexts_merge() {
        let corpus = build_occurrence_contexts(
            &docs(&[
                ("d1", &["DP", "Bellman"]),
                ("d2", &["DP", "Bellman"]),
                ("d3", &["DP", "Factory"]),
            ]),
            100,
        )
        .unwrap();
        let outcome = resolve_occurrences(&corpus, &CrossdocConfig::default(), None).unwrap();
        let clusters = outcome.labeled_clusters(&corpus, StringKind::Object);
        // The two algorithm-context DP occurrences merge; the design-pattern
        // one shares no context key with them and is never even compared.
        let dp_cluster = clusters
            .iter()
            .find(|c| c.contains(&"d1:0".to_string()))
            .unwrap();
        assert!(dp_cluster.contains(&"d2:0".to_string()));
        assert!(!dp_cluster.contains(&"d3:0".to_string()));
    }

    #[test]
    fn output_lines_form_a_partition() {
        let corpus =
            build_occurrence_contexts(&docs(&[("d1", &["A", "B"]), ("d2", &["A", "B"])]), 100)
                .unwrap();
        let outcome = resolve_occurrences(&corpus, &CrossdocConfig::default(), None).unwrap();
        let lines = clusters_to_lines(&corpus, &outcome);
        let mut seen = std::collections::HashSet::new();
        for line in lines.lines() {
            for id in line.split('\t') {
                assert!(seen.insert(id.to_string()));
            }
        }
        assert_eq!(seen.len(), corpus.len());
    }
}
