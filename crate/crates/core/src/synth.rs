//! Synthetic corpora with planted ground truth.
//!
//! String frequencies follow a deterministic Zipf law: the string of rank
//! `i` out of `M` receives `ceil(M^z / i^z)` assertions. Planted synonym
//! groups occupy leading ranks and draw their properties from a common urn
//! at a configurable overlap — overlap 1.0 reproduces the synonymy condition
//! where the smaller urn is entirely shared. Non-planted strings draw
//! relation/co-argument pairs uniformly from a disjoint vocabulary sized so
//! accidental shared features are rare but nonzero.
//!
//! Confusable pairs are planted look-alikes: high name similarity, partial
//! property overlap, distinct values under a functional relation, and a
//! coordination-phrase hitcount entry. They exist to be wrongly merged by
//! models without filters and correctly vetoed with them.
//!
//! A separate generator emits tagged-mention documents with planted
//! polysemy for the occurrence-resolution mode.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("infeasible spec: {0}")]
    Infeasible(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// One planted synonym group.
#[derive(Debug, Clone, Copy)]
pub struct PlantedCluster {
    pub size: usize,
    /// Members get name variants of one base name (surface evidence) rather
    /// than unrelated names (distributional evidence only).
    pub similar_names: bool,
}

/// Planted look-alike pairs: similar names, partial overlap, conflicting
/// function values, and coordination hitcounts.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConfuserSpec {
    pub pairs: usize,
    /// Shared fraction of the pair's potential-property pools.
    pub overlap: f64,
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    /// Number of Zipf-ranked object strings (M).
    pub distinct_strings: usize,
    /// Zipf shape parameter (z).
    pub zipf_shape: f64,
    pub seed: u64,
    pub planted: Vec<PlantedCluster>,
    /// Shared fraction of potential properties within a planted group;
    /// 1.0 is the full-synonymy condition.
    pub overlap: f64,
    pub confusers: ConfuserSpec,
    /// Urn multiple for planted pools: pool size = ceil(multiple * n).
    pub property_multiple: f64,
}

impl SynthConfig {
    /// Pure Zipf noise, no planted structure.
    pub fn zipf_only(m: usize, z: f64, seed: u64) -> Self {
        SynthConfig {
            distinct_strings: m,
            zipf_shape: z,
            seed,
            planted: Vec::new(),
            overlap: 1.0,
            confusers: ConfuserSpec::default(),
            property_multiple: 3.0,
        }
    }
}

/// Generated artifacts, already serialized.
#[derive(Debug)]
pub struct SynthOutput {
    pub corpus_tsv: String,
    pub gold_tsv: String,
    pub functions_tsv: Option<String>,
    pub hitcounts_tsv: Option<String>,
    pub assertion_count: u64,
}

#[derive(Debug)]
pub struct SynthPaths {
    pub corpus: PathBuf,
    pub gold: PathBuf,
    pub functions: Option<PathBuf>,
    pub hitcounts: Option<PathBuf>,
}

impl SynthOutput {
    pub fn write_to_dir(&self, dir: &Path) -> Result<SynthPaths, SynthError> {
        std::fs::create_dir_all(dir)?;
        let corpus = dir.join("corpus.tsv");
        std::fs::write(&corpus, &self.corpus_tsv)?;
        let gold = dir.join("gold.objects.tsv");
        std::fs::write(&gold, &self.gold_tsv)?;
        let functions = match &self.functions_tsv {
            Some(text) => {
                let p = dir.join("functions.tsv");
                std::fs::write(&p, text)?;
                Some(p)
            }
            None => None,
        };
        let hitcounts = match &self.hitcounts_tsv {
            Some(text) => {
                let p = dir.join("hitcounts.tsv");
                std::fs::write(&p, text)?;
                Some(p)
            }
            None => None,
        };
        Ok(SynthPaths {
            corpus,
            gold,
            functions,
            hitcounts,
        })
    }
}

/// Assertions received by the string of the given rank.
pub fn zipf_frequency(m: u64, z: f64, rank: u64) -> u64 {
    (m as f64 / rank as f64).powf(z).ceil() as u64
}

/// Total assertions of a pure Zipf corpus: the sum of per-rank frequencies.
pub fn zipf_assertion_total(m: u64, z: f64) -> u64 {
    (1..=m).map(|i| zipf_frequency(m, z, i)).sum()
}

const SYLLABLES: [&str; 20] = [
    "ba", "de", "ki", "lo", "mu", "na", "po", "ra", "su", "ta", "ve", "zo", "ga", "he", "ji", "fe",
    "ce", "wi", "xa", "yu",
];

// Injective index-to-word map: namespace syllable plus a base-20 expansion.
fn word(ns: &str, mut i: u64) -> String {
    let mut out = String::from(ns);
    loop {
        out.push_str(SYLLABLES[(i % 20) as usize]);
        i /= 20;
        if i == 0 {
            break;
        }
    }
    out
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

const NAME_SUFFIXES: [&str; 6] = ["Bay", "Group", "Port", "Isle", "Ridge", "Hollow"];

// Roles a generated object string can play; determines its name shape and
// which property pool it draws from.
enum Role {
    Noise,
    Planted { group: usize, member: usize },
    Confuser { pair: usize, member: usize },
}

struct PropertySpace {
    relations: Vec<String>,
    coargs: Vec<String>,
}

/// Generate a corpus file and its gold clusters.
pub fn generate(config: &SynthConfig) -> Result<SynthOutput, SynthError> {
    let m = config.distinct_strings as u64;
    if m == 0 {
        return Err(SynthError::Infeasible("need at least one string".into()));
    }
    if config.zipf_shape.is_nan() || config.zipf_shape <= 0.0 {
        return Err(SynthError::Infeasible("zipf shape must be positive".into()));
    }
    if !(0.0..=1.0).contains(&config.overlap) || !(0.0..=1.0).contains(&config.confusers.overlap) {
        return Err(SynthError::Infeasible("overlap must lie in [0, 1]".into()));
    }
    if config.property_multiple < 1.0 {
        return Err(SynthError::Infeasible(
            "property multiple must be >= 1".into(),
        ));
    }
    if config.planted.iter().any(|p| p.size < 1) {
        return Err(SynthError::Infeasible(
            "planted cluster sizes must be >= 1".into(),
        ));
    }
    let planted_strings: usize =
        config.planted.iter().map(|p| p.size).sum::<usize>() + 2 * config.confusers.pairs;
    if planted_strings > config.distinct_strings {
        return Err(SynthError::Infeasible(format!(
            "{planted_strings} planted strings exceed {} distinct strings",
            config.distinct_strings
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let total_assertions_estimate = zipf_assertion_total(m, config.zipf_shape);

    // Vocabulary sized so uniform draws collide occasionally: |R| * |V| is
    // about twice the assertion count.
    let side = (total_assertions_estimate as f64).sqrt().ceil() as u64;
    let space = PropertySpace {
        relations: (0..side.max(4)).map(|i| word("vo", i)).collect(),
        coargs: (0..(2 * side).max(4)).map(|i| word("ka", i)).collect(),
    };

    // Rank assignment: planted groups take the leading ranks in declaration
    // order, then confuser pairs, then noise. Groups needing distributional
    // evidence should be declared first so they land on high counts.
    let mut roles: Vec<Role> = Vec::with_capacity(config.distinct_strings);
    for (g, cluster) in config.planted.iter().enumerate() {
        for j in 0..cluster.size {
            roles.push(Role::Planted {
                group: g,
                member: j,
            });
        }
    }
    for pair in 0..config.confusers.pairs {
        for j in 0..2 {
            roles.push(Role::Confuser { pair, member: j });
        }
    }
    while roles.len() < config.distinct_strings {
        roles.push(Role::Noise);
    }

    // Names.
    let mut names: Vec<String> = Vec::with_capacity(roles.len());
    let mut group_bases: Vec<String> = Vec::new();
    for g in 0..config.planted.len() {
        group_bases.push(format!(
            "{} {}",
            capitalize(&word("ta", 2 * g as u64)),
            capitalize(&word("ta", 2 * g as u64 + 1))
        ));
    }
    let mut noise_counter = 0u64;
    for (rank0, role) in roles.iter().enumerate() {
        let name = match role {
            Role::Planted { group, member } => {
                let base = &group_bases[*group];
                if config.planted[*group].similar_names {
                    match member {
                        0 => base.clone(),
                        j => format!("{} {}", base, NAME_SUFFIXES[(j - 1) % NAME_SUFFIXES.len()]),
                    }
                } else {
                    // Unrelated surface forms: distributional evidence only.
                    format!(
                        "{} {}",
                        capitalize(&word("pe", (100 + rank0) as u64)),
                        capitalize(&word("pi", (500 + 3 * member + rank0) as u64))
                    )
                }
            }
            Role::Confuser { pair, member } => {
                let shared = capitalize(&word("co", *pair as u64));
                let side = if *member == 0 { "East" } else { "West" };
                format!("{shared} {side}")
            }
            Role::Noise => {
                noise_counter += 1;
                capitalize(&word("no", noise_counter))
            }
        };
        names.push(name);
    }

    // Property pools for planted groups and confuser pairs. Pool slots are
    // unique (relation, fresh co-argument) pairs so overlap is exactly what
    // the config dictates.
    let mut slot_counter = 0u64;
    let mut fresh_property = |rng: &mut ChaCha8Rng, space: &PropertySpace| -> (String, String) {
        let rel = space.relations[rng.random_range(0..space.relations.len())].clone();
        let co = word("mi", slot_counter);
        slot_counter += 1;
        (rel, co)
    };

    let mut corpus = String::new();
    let mut assertion_count = 0u64;

    let group_ranks: Vec<Vec<usize>> = {
        let mut v = vec![Vec::new(); config.planted.len()];
        for (rank0, role) in roles.iter().enumerate() {
            if let Role::Planted { group, .. } = role {
                v[*group].push(rank0);
            }
        }
        v
    };
    let confuser_ranks: Vec<Vec<usize>> = {
        let mut v = vec![Vec::new(); config.confusers.pairs];
        for (rank0, role) in roles.iter().enumerate() {
            if let Role::Confuser { pair, .. } = role {
                v[*pair].push(rank0);
            }
        }
        v
    };

    let freq = |rank0: usize| zipf_frequency(m, config.zipf_shape, rank0 as u64 + 1).max(1);

    // pools[rank0] = Some(pool of properties this string draws from)
    let mut pools: Vec<Option<Vec<(String, String)>>> = vec![None; roles.len()];
    let mut build_group_pools = |rng: &mut ChaCha8Rng,
                                 pools: &mut Vec<Option<Vec<(String, String)>>>,
                                 ranks: &[usize],
                                 overlap: f64| {
        let p_of = |r: usize| (config.property_multiple * freq(r) as f64).ceil() as usize;
        let p_min = ranks.iter().map(|&r| p_of(r)).min().unwrap_or(0);
        let shared_size = (overlap * p_min as f64).round() as usize;
        let shared: Vec<(String, String)> = (0..shared_size)
            .map(|_| fresh_property(rng, &space))
            .collect();
        for &r in ranks {
            let mut pool = shared.clone();
            for _ in shared_size..p_of(r) {
                pool.push(fresh_property(rng, &space));
            }
            pools[r] = Some(pool);
        }
    };
    for ranks in &group_ranks {
        build_group_pools(&mut rng, &mut pools, ranks, config.overlap);
    }
    for ranks in &confuser_ranks {
        build_group_pools(&mut rng, &mut pools, ranks, config.confusers.overlap);
    }

    for (rank0, (name, pool)) in names.iter().zip(&pools).enumerate() {
        let n = freq(rank0) as usize;
        match pool {
            Some(pool) => {
                let take = n.min(pool.len());
                for idx in sample(&mut rng, pool.len(), take) {
                    let (rel, co) = &pool[idx];
                    writeln!(corpus, "{rel}\t{name}\t{co}").expect("string write");
                    assertion_count += 1;
                }
            }
            None => {
                // Uniform distinct draws from the shared noise space.
                let mut seen: HashSet<u64> = HashSet::with_capacity(n);
                let pool_size = space.relations.len() as u64 * space.coargs.len() as u64;
                while (seen.len() as u64) < (n as u64).min(pool_size) {
                    let code = rng.random_range(0..pool_size);
                    if seen.insert(code) {
                        let rel = &space.relations[(code / space.coargs.len() as u64) as usize];
                        let co = &space.coargs[(code % space.coargs.len() as u64) as usize];
                        writeln!(corpus, "{rel}\t{name}\t{co}").expect("string write");
                        assertion_count += 1;
                    }
                }
            }
        }
    }

    // Confusers additionally take distinct values under a functional
    // relation and carry coordination hitcounts.
    let function_relation = "vogoverns seat of";
    let mut functions_tsv = None;
    let mut hitcounts_tsv = None;
    if config.confusers.pairs > 0 {
        let mut hits = String::new();
        for (pair, ranks) in confuser_ranks.iter().enumerate() {
            let value0 = capitalize(&word("zu", 2 * pair as u64));
            let value1 = capitalize(&word("zu", 2 * pair as u64 + 1));
            writeln!(corpus, "{function_relation}\t{}\t{value0}", names[ranks[0]])
                .expect("string write");
            writeln!(corpus, "{function_relation}\t{}\t{value1}", names[ranks[1]])
                .expect("string write");
            assertion_count += 2;
            let (a, b) = (&names[ranks[0]], &names[ranks[1]]);
            let (x, y) = if a <= b { (a, b) } else { (b, a) };
            writeln!(hits, "{x}\t1000").expect("string write");
            writeln!(hits, "{y}\t1000").expect("string write");
            writeln!(hits, "{x} and {y}\t300").expect("string write");
        }
        functions_tsv = Some(format!("{function_relation}\tfunction\n"));
        hitcounts_tsv = Some(hits);
    }

    // Gold: planted groups as clusters, everything else a singleton.
    let mut gold = String::new();
    for ranks in &group_ranks {
        let line: Vec<&str> = ranks.iter().map(|&r| names[r].as_str()).collect();
        writeln!(gold, "{}", line.join("\t")).expect("string write");
    }
    let mut in_group: HashSet<usize> = group_ranks.iter().flatten().copied().collect();
    for ranks in &confuser_ranks {
        for &r in ranks {
            in_group.insert(r);
            writeln!(gold, "{}", names[r]).expect("string write");
        }
    }
    for (rank0, name) in names.iter().enumerate() {
        if !in_group.contains(&rank0) {
            writeln!(gold, "{name}").expect("string write");
        }
    }

    Ok(SynthOutput {
        corpus_tsv: corpus,
        gold_tsv: gold,
        functions_tsv,
        hitcounts_tsv,
        assertion_count,
    })
}

/// Planted-polysemy configuration for the occurrence-resolution mode.
#[derive(Debug, Clone)]
pub struct PolysemyConfig {
    /// The ambiguous surface string shared by all referents.
    pub surface: String,
    pub referents: usize,
    pub docs_per_referent: usize,
    /// Disjoint context-entity pool per referent.
    pub entities_per_referent: usize,
    /// Mentions per document, including the ambiguous one.
    pub mentions_per_doc: usize,
    pub seed: u64,
}

#[derive(Debug)]
pub struct SynthMentions {
    /// `doc_id TAB mention_index TAB entity` lines.
    pub mentions_tsv: String,
    /// Gold occurrence clusters over `doc:index` ids.
    pub gold_tsv: String,
}

/// Generate tagged-mention documents where one surface string refers to a
/// different entity per referent pool, with disjoint context vocabularies.
pub fn generate_polysemy_mentions(config: &PolysemyConfig) -> Result<SynthMentions, SynthError> {
    if config.referents == 0 || config.docs_per_referent == 0 {
        return Err(SynthError::Infeasible(
            "need at least one referent and document".into(),
        ));
    }
    if config.mentions_per_doc < 2 {
        return Err(SynthError::Infeasible(
            "documents need at least two mentions".into(),
        ));
    }
    if config.entities_per_referent < config.mentions_per_doc - 1 {
        return Err(SynthError::Infeasible(
            "entity pool smaller than a document's context".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut mentions = String::new();
    let mut gold_clusters: Vec<Vec<String>> = Vec::new();

    for referent in 0..config.referents {
        let pool: Vec<String> = (0..config.entities_per_referent)
            .map(|i| {
                format!(
                    "{} {}",
                    capitalize(&word(
                        "en",
                        (referent * config.entities_per_referent + i) as u64
                    )),
                    capitalize(&word(
                        "et",
                        (referent * config.entities_per_referent + i) as u64
                    ))
                )
            })
            .collect();
        let mut surface_cluster = Vec::new();
        for doc in 0..config.docs_per_referent {
            let doc_id = format!("d{referent}x{doc}");
            let surface_pos = rng.random_range(0..config.mentions_per_doc);
            let picks = sample(&mut rng, pool.len(), config.mentions_per_doc - 1);
            let mut pick_iter = picks.iter();
            for idx in 0..config.mentions_per_doc {
                let entity = if idx == surface_pos {
                    surface_cluster.push(format!("{doc_id}:{idx}"));
                    config.surface.clone()
                } else {
                    pool[pick_iter.next().expect("sized sample")].clone()
                };
                writeln!(mentions, "{doc_id}\t{idx}\t{entity}").expect("string write");
            }
        }
        gold_clusters.push(surface_cluster);
    }

    // Gold covers the planted senses: the ambiguous surface's occurrences,
    // one cluster per referent. Context-entity occurrences are scaffolding
    // outside the judged universe.
    let mut gold = String::new();
    for cluster in gold_clusters {
        writeln!(gold, "{}", cluster.join("\t")).expect("string write");
    }
    Ok(SynthMentions {
        mentions_tsv: mentions,
        gold_tsv: gold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Corpus, LoadOptions};
    use crate::StringKind;

    #[test]
    fn zipf_totals_match_harmonic_estimate() {
        // M = 1000, z = 1: about M * H_M, with the ceiling adding less than
        // one assertion per string.
        let n = zipf_assertion_total(1000, 1.0);
        let h_1000: f64 = (1..=1000).map(|i| 1.0 / i as f64).sum();
        let base = 1000.0 * h_1000;
        assert!(
            n as f64 >= base && (n as f64) < base + 1000.0,
            "{n} vs {base}"
        );
    }

    #[test]
    fn same_seed_is_byte_identical() {
        let config = SynthConfig {
            planted: vec![
                PlantedCluster {
                    size: 2,
                    similar_names: false,
                },
                PlantedCluster {
                    size: 3,
                    similar_names: true,
                },
            ],
            confusers: ConfuserSpec {
                pairs: 2,
                overlap: 0.5,
            },
            ..SynthConfig::zipf_only(60, 0.9, 42)
        };
        let a = generate(&config).unwrap();
        let b = generate(&config).unwrap();
        assert_eq!(a.corpus_tsv, b.corpus_tsv);
        assert_eq!(a.gold_tsv, b.gold_tsv);
        assert_eq!(a.hitcounts_tsv, b.hitcounts_tsv);
        let c = generate(&SynthConfig { seed: 43, ..config }).unwrap();
        assert_ne!(a.corpus_tsv, c.corpus_tsv);
    }

    #[test]
    fn assertion_count_matches_zipf_totals() {
        let config = SynthConfig::zipf_only(200, 1.0, 7);
        let out = generate(&config).unwrap();
        assert_eq!(out.assertion_count, zipf_assertion_total(200, 1.0));
        assert_eq!(out.corpus_tsv.lines().count() as u64, out.assertion_count);
        // Generated triples are already distinct: loading loses nothing.
        let corpus = Corpus::from_reader(
            out.corpus_tsv.as_bytes(),
            LoadOptions {
                min_count: 1,
                proper_nouns_only: false,
                slot_tagged: false,
            },
        )
        .unwrap();
        assert_eq!(corpus.assertion_count() as u64, out.assertion_count);
    }

    #[test]
    fn full_overlap_shares_the_smaller_pool() {
        let config = SynthConfig {
            planted: vec![PlantedCluster {
                size: 2,
                similar_names: false,
            }],
            ..SynthConfig::zipf_only(40, 1.0, 11)
        };
        let out = generate(&config).unwrap();
        let corpus = Corpus::from_reader(
            out.corpus_tsv.as_bytes(),
            LoadOptions {
                min_count: 1,
                proper_nouns_only: true,
                slot_tagged: false,
            },
        )
        .unwrap();
        let gold_lines: Vec<&str> = out.gold_tsv.lines().collect();
        let members: Vec<&str> = gold_lines[0].split('\t').collect();
        assert_eq!(members.len(), 2);
        let a = corpus.require_id(members[0], StringKind::Object).unwrap();
        let b = corpus.require_id(members[1], StringKind::Object).unwrap();
        // Ranks 1 and 2 with overlap 1.0 share a large fraction of draws.
        let k = corpus.shared_feature_count(a, b).unwrap();
        assert!(k > 0, "planted synonyms share no features");
    }

    #[test]
    fn zero_overlap_shares_nothing() {
        let config = SynthConfig {
            planted: vec![PlantedCluster {
                size: 2,
                similar_names: true,
            }],
            overlap: 0.0,
            ..SynthConfig::zipf_only(40, 1.0, 19)
        };
        let out = generate(&config).unwrap();
        let corpus = Corpus::from_reader(
            out.corpus_tsv.as_bytes(),
            LoadOptions {
                min_count: 1,
                proper_nouns_only: true,
                slot_tagged: false,
            },
        )
        .unwrap();
        let gold_lines: Vec<&str> = out.gold_tsv.lines().collect();
        let members: Vec<&str> = gold_lines[0].split('\t').collect();
        let a = corpus.require_id(members[0], StringKind::Object).unwrap();
        let b = corpus.require_id(members[1], StringKind::Object).unwrap();
        assert_eq!(corpus.shared_feature_count(a, b).unwrap(), 0);
    }

    #[test]
    fn gold_is_a_partition_of_generated_objects() {
        let config = SynthConfig {
            planted: vec![PlantedCluster {
                size: 3,
                similar_names: true,
            }],
            confusers: ConfuserSpec {
                pairs: 1,
                overlap: 0.5,
            },
            ..SynthConfig::zipf_only(30, 1.0, 3)
        };
        let out = generate(&config).unwrap();
        let mut seen = HashSet::new();
        for line in out.gold_tsv.lines() {
            for member in line.split('\t') {
                assert!(
                    seen.insert(member.to_string()),
                    "duplicate gold member {member}"
                );
            }
        }
        assert_eq!(seen.len(), 30);
    }

    #[test]
    fn infeasible_specs_error() {
        let config = SynthConfig {
            planted: vec![PlantedCluster {
                size: 50,
                similar_names: false,
            }],
            ..SynthConfig::zipf_only(10, 1.0, 0)
        };
        assert!(matches!(generate(&config), Err(SynthError::Infeasible(_))));
        assert!(generate(&SynthConfig::zipf_only(0, 1.0, 0)).is_err());
        assert!(generate(&SynthConfig {
            overlap: 1.5,
            ..SynthConfig::zipf_only(5, 1.0, 0)
        })
        .is_err());
    }

    #[test]
    fn confusers_emit_function_and_hitcount_artifacts() {
        let config = SynthConfig {
            confusers: ConfuserSpec {
                pairs: 1,
                overlap: 0.6,
            },
            ..SynthConfig::zipf_only(20, 1.0, 5)
        };
        let out = generate(&config).unwrap();
        let functions = out.functions_tsv.expect("function list");
        assert!(functions.contains("function"));
        let hits = out.hitcounts_tsv.expect("hitcounts");
        assert!(hits.contains(" and "));
        // Both confusers appear in the corpus under the functional relation.
        let fn_lines = out
            .corpus_tsv
            .lines()
            .filter(|l| l.starts_with("vogoverns seat of"))
            .count();
        assert_eq!(fn_lines, 2);
    }

    #[test]
    fn polysemy_documents_have_disjoint_context_pools() {
        let config = PolysemyConfig {
            surface: "Deep Port".into(),
            referents: 2,
            docs_per_referent: 3,
            entities_per_referent: 6,
            mentions_per_doc: 4,
            seed: 9,
        };
        let out = generate_polysemy_mentions(&config).unwrap();
        let mut by_referent: Vec<HashSet<String>> = vec![HashSet::new(), HashSet::new()];
        for line in out.mentions_tsv.lines() {
            let fields: Vec<&str> = line.split('\t').collect();
            assert_eq!(fields.len(), 3);
            let referent = if fields[0].starts_with("d0") { 0 } else { 1 };
            if fields[2] != "Deep Port" {
                by_referent[referent].insert(fields[2].to_string());
            }
        }
        assert!(by_referent[0].is_disjoint(&by_referent[1]));
        // Same seed reproduces bytes.
        let again = generate_polysemy_mentions(&config).unwrap();
        assert_eq!(out.mentions_tsv, again.mentions_tsv);
        assert_eq!(out.gold_tsv, again.gold_tsv);
    }

    #[test]
    fn polysemy_validation() {
        let bad = PolysemyConfig {
            surface: "X".into(),
            referents: 1,
            docs_per_referent: 1,
            entities_per_referent: 1,
            mentions_per_doc: 4,
            seed: 0,
        };
        assert!(generate_polysemy_mentions(&bad).is_err());
    }
}
