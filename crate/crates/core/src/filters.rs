//! Precision-raising merge vetoes.
//!
//! Two filters, composable into a chain consulted before each merge:
//!
//! - the coordination filter vetoes a pair when the phrase `"s1 and s2"` is
//!   frequent relative to the individual strings — names that coordinate in
//!   text tend to be similar, not identical;
//! - the function filter vetoes two objects that take non-matching values
//!   under a relation known to be a function (or non-matching subjects under
//!   an inverse function).
//!
//! Hitcounts come from an offline provider backed by a TSV cache, since live
//! search-engine counts are irreproducible. Filters only ever veto; they
//! never create merges.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use thiserror::Error;

use crate::clustering::{ClusterError, MergeFilter, Verdict, VetoReason};
use crate::corpus::Corpus;
use crate::metrics::monge_elkan;
use crate::StringKind;

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("hitcount cache line {line}: {reason}")]
    BadCacheLine { line: usize, reason: String },
    #[error("function list line {line}: {reason}")]
    BadFunctionLine { line: usize, reason: String },
    #[error("function list is empty")]
    EmptyFunctionList,
    #[error("hitcount lookup failed: {0}")]
    Lookup(String),
}

/// A hitcount lookup result. `miss` marks phrases absent from the cache, as
/// opposed to phrases cached with a zero count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hitcount {
    pub count: u64,
    pub miss: bool,
}

/// Offline phrase-frequency source.
pub trait HitcountProvider: Sync {
    fn hits(&self, phrase: &str) -> Result<Hitcount, FilterError>;
}

/// TSV-backed cache: `phrase TAB count` per line, `#` comments.
#[derive(Debug, Default)]
pub struct FileHitcounts {
    counts: HashMap<String, u64>,
}

impl FileHitcounts {
    pub fn load(path: &Path) -> Result<Self, FilterError> {
        Self::from_reader(BufReader::new(File::open(path)?))
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self, FilterError> {
        let mut counts = HashMap::new();
        for (idx, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((phrase, count)) = line.rsplit_once('\t') else {
                return Err(FilterError::BadCacheLine {
                    line: idx + 1,
                    reason: "expected phrase TAB count".into(),
                });
            };
            let count: u64 = count
                .trim()
                .parse()
                .map_err(|e| FilterError::BadCacheLine {
                    line: idx + 1,
                    reason: format!("bad count: {e}"),
                })?;
            counts.insert(phrase.trim().to_string(), count);
        }
        Ok(FileHitcounts { counts })
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, u64)>) -> Self {
        FileHitcounts {
            counts: pairs.into_iter().collect(),
        }
    }
}

impl HitcountProvider for FileHitcounts {
    fn hits(&self, phrase: &str) -> Result<Hitcount, FilterError> {
        Ok(match self.counts.get(phrase) {
            Some(&count) => Hitcount { count, miss: false },
            None => Hitcount {
                count: 0,
                miss: true,
            },
        })
    }
}

/// Provider with no data; every lookup is a zero-count miss.
#[derive(Debug, Default)]
pub struct ZeroHitcounts;

impl HitcountProvider for ZeroHitcounts {
    fn hits(&self, _phrase: &str) -> Result<Hitcount, FilterError> {
        Ok(Hitcount {
            count: 0,
            miss: true,
        })
    }
}

/// Coordination score with provenance: zero when either individual count is
/// absent, with the miss flag saying why.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinationScore {
    pub score: f64,
    pub denominator_miss: bool,
}

/// Pointwise-mutual-information variant over the coordination phrase:
/// `hits("s1 and s2")^2 / (hits(s1) * hits(s2))`. The discriminator phrase
/// is the exact string `s1 and s2` with single spaces.
pub fn coordination_score(
    provider: &dyn HitcountProvider,
    s1: &str,
    s2: &str,
) -> Result<CoordinationScore, FilterError> {
    let h1 = provider.hits(s1)?;
    let h2 = provider.hits(s2)?;
    if h1.count == 0 || h2.count == 0 {
        return Ok(CoordinationScore {
            score: 0.0,
            denominator_miss: h1.miss || h2.miss,
        });
    }
    let joint = provider.hits(&format!("{s1} and {s2}"))?;
    let score = (joint.count as f64).powi(2) / (h1.count as f64 * h2.count as f64);
    Ok(CoordinationScore {
        score,
        denominator_miss: false,
    })
}

/// A relation treated as (inverse-)functional by the function filter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionSpec {
    pub relation: String,
    /// Argument 1 determines argument 2.
    pub forward: bool,
    /// Argument 2 determines argument 1.
    pub inverse: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionList {
    pub functions: Vec<FunctionSpec>,
}

impl FunctionList {
    /// The stock list of reliably functional extraction relations. The
    /// capital relations determine their subject in both directions.
    pub fn default_set() -> Self {
        let both = ["is capital of", "is capital city of"];
        let forward = [
            "named after",
            "was named after",
            "headquartered in",
            "is headquartered in",
            "was born in",
            "was born on",
        ];
        let mut functions: Vec<FunctionSpec> = both
            .iter()
            .map(|r| FunctionSpec {
                relation: r.to_string(),
                forward: true,
                inverse: true,
            })
            .collect();
        functions.extend(forward.iter().map(|r| FunctionSpec {
            relation: r.to_string(),
            forward: true,
            inverse: false,
        }));
        FunctionList { functions }
    }

    /// Parse `relation [TAB function|inverse|both]` lines; a missing tag
    /// means a forward function.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self, FilterError> {
        let mut functions = Vec::new();
        for (idx, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (relation, tag) = match trimmed.split_once('\t') {
                Some((r, t)) => (r.trim(), t.trim()),
                None => (trimmed, "function"),
            };
            let (forward, inverse) = match tag {
                "function" => (true, false),
                "inverse" => (false, true),
                "both" => (true, true),
                other => {
                    return Err(FilterError::BadFunctionLine {
                        line: idx + 1,
                        reason: format!("unknown tag {other:?}"),
                    })
                }
            };
            functions.push(FunctionSpec {
                relation: relation.to_string(),
                forward,
                inverse,
            });
        }
        if functions.is_empty() {
            return Err(FilterError::EmptyFunctionList);
        }
        Ok(FunctionList { functions })
    }

    pub fn load(path: &Path) -> Result<Self, FilterError> {
        Self::from_reader(BufReader::new(File::open(path)?))
    }
}

/// Function filter state: per listed function, the observed values of each
/// object, precomputed from the corpus in one pass.
pub struct FunctionFilter {
    // function index -> object text -> values it takes under that function
    forward_values: Vec<HashMap<String, Vec<String>>>,
    inverse_values: Vec<HashMap<String, Vec<String>>>,
    match_threshold: f64,
}

impl FunctionFilter {
    pub fn build(corpus: &Corpus, list: &FunctionList, match_threshold: f64) -> Self {
        let rel_syms: Vec<Option<u32>> = list
            .functions
            .iter()
            .map(|f| corpus.symbol_of(&f.relation))
            .collect();
        let mut forward_values = vec![HashMap::<String, Vec<String>>::new(); list.functions.len()];
        let mut inverse_values = vec![HashMap::<String, Vec<String>>::new(); list.functions.len()];
        for a in corpus.raw_assertions() {
            for (i, spec) in list.functions.iter().enumerate() {
                if rel_syms[i] != Some(a.rel) {
                    continue;
                }
                let arg1 = corpus.resolve_symbol(a.arg1);
                let arg2 = corpus.resolve_symbol(a.arg2);
                if spec.forward {
                    forward_values[i]
                        .entry(arg1.to_string())
                        .or_default()
                        .push(arg2.to_string());
                }
                if spec.inverse {
                    inverse_values[i]
                        .entry(arg2.to_string())
                        .or_default()
                        .push(arg1.to_string());
                }
            }
        }
        FunctionFilter {
            forward_values,
            inverse_values,
            match_threshold,
        }
    }

    /// True when some listed function assigns the two objects value sets
    /// with no matching pair. Values match when their string similarity
    /// reaches the (high) match threshold.
    pub fn conflict(&self, s1: &str, s2: &str) -> bool {
        self.conflict_detail(s1, s2).is_some()
    }

    fn conflict_detail(&self, s1: &str, s2: &str) -> Option<(String, String)> {
        let tables = self.forward_values.iter().chain(self.inverse_values.iter());
        for table in tables {
            let (Some(v1), Some(v2)) = (table.get(s1), table.get(s2)) else {
                continue;
            };
            let any_match = v1.iter().any(|y1| {
                v2.iter()
                    .any(|y2| monge_elkan(y1, y2) >= self.match_threshold)
            });
            if !any_match {
                return Some((v1[0].clone(), v2[0].clone()));
            }
        }
        None
    }
}

/// Behavior knobs for the filter chain.
#[derive(Debug, Clone, Copy)]
pub struct FilterConfig {
    /// Coordination scores above this veto the pair. No calibrated value
    /// exists; the shipped default is a placeholder to tune per corpus.
    pub coordination_threshold: f64,
    /// Minimum similarity for two function values to count as the same.
    pub match_threshold: f64,
    /// Proposals per round the chain inspects; `None` inspects all.
    pub top_k_per_round: Option<usize>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            coordination_threshold: 0.001,
            match_threshold: 0.9,
            top_k_per_round: None,
        }
    }
}

/// The composed veto chain handed to the clustering engine.
pub struct FilterChain<'a> {
    coordination: Option<(&'a dyn HitcountProvider, f64)>,
    function: Option<FunctionFilter>,
}

impl<'a> FilterChain<'a> {
    pub fn new() -> Self {
        FilterChain {
            coordination: None,
            function: None,
        }
    }

    pub fn with_coordination(mut self, provider: &'a dyn HitcountProvider, threshold: f64) -> Self {
        self.coordination = Some((provider, threshold));
        self
    }

    pub fn with_function_filter(mut self, filter: FunctionFilter) -> Self {
        self.function = Some(filter);
        self
    }

    /// Check one proposed merge. Every cross pair of member strings is
    /// examined; any triggering pair vetoes the merge, and all triggered
    /// reasons are reported.
    pub fn check(
        &self,
        kind: StringKind,
        left: &[&str],
        right: &[&str],
    ) -> Result<Verdict, FilterError> {
        let mut reasons = Vec::new();
        for &a in left {
            for &b in right {
                // One canonical orientation keeps the phrase lookup
                // deterministic regardless of merge order.
                let (x, y) = if a <= b { (a, b) } else { (b, a) };
                if let Some((provider, threshold)) = self.coordination {
                    let cs = coordination_score(provider, x, y)?;
                    if cs.score > threshold {
                        reasons.push(VetoReason {
                            rule: "coordination".into(),
                            pair: (x.to_string(), y.to_string()),
                            detail: format!("score={:.6} threshold={threshold}", cs.score),
                        });
                    }
                }
                if kind == StringKind::Object {
                    if let Some(ff) = &self.function {
                        if let Some((v1, v2)) = ff.conflict_detail(x, y) {
                            reasons.push(VetoReason {
                                rule: "function".into(),
                                pair: (x.to_string(), y.to_string()),
                                detail: format!("values {v1:?} vs {v2:?}"),
                            });
                        }
                    }
                }
            }
        }
        if reasons.is_empty() {
            Ok(Verdict::Allow)
        } else {
            Ok(Verdict::Veto(reasons))
        }
    }
}

impl Default for FilterChain<'_> {
    fn default() -> Self {
        Self::new()
    }
}

impl MergeFilter for FilterChain<'_> {
    fn check_merge(
        &self,
        kind: StringKind,
        left: &[&str],
        right: &[&str],
    ) -> Result<Verdict, ClusterError> {
        self.check(kind, left, right)
            .map_err(|e| ClusterError::Filter(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::LoadOptions;
    use approx::assert_relative_eq;

    fn cache(entries: &[(&str, u64)]) -> FileHitcounts {
        FileHitcounts::from_pairs(entries.iter().map(|(p, c)| (p.to_string(), *c)))
    }

    #[test]
    fn coordination_score_formula() {
        let provider = cache(&[("a", 100), ("b", 100), ("a and b", 10)]);
        let cs = coordination_score(&provider, "a", "b").unwrap();
        assert_relative_eq!(cs.score, 0.01, epsilon = 1e-12);
        assert!(!cs.denominator_miss);
    }

    #[test]
    fn coordination_zero_joint_and_missing_denominator() {
        let provider = cache(&[("a", 100), ("b", 100)]);
        let cs = coordination_score(&provider, "a", "b").unwrap();
        assert_eq!(cs.score, 0.0);
        assert!(!cs.denominator_miss);

        let provider = cache(&[("b", 100)]);
        let cs = coordination_score(&provider, "a", "b").unwrap();
        assert_eq!(cs.score, 0.0);
        assert!(cs.denominator_miss);
    }

    #[test]
    fn hitcount_cache_parses_tsv() {
        let text = "# comment\nVirginia\t1000\nVirginia and West Virginia\t50\n";
        let cache = FileHitcounts::from_reader(text.as_bytes()).unwrap();
        assert_eq!(
            cache.hits("Virginia").unwrap(),
            Hitcount {
                count: 1000,
                miss: false
            }
        );
        assert_eq!(
            cache.hits("Virginia and West Virginia").unwrap(),
            Hitcount {
                count: 50,
                miss: false
            }
        );
        assert!(cache.hits("absent").unwrap().miss);
        assert!(FileHitcounts::from_reader("no tab here".as_bytes()).is_err());
    }

    fn capitals_corpus() -> Corpus {
        let text = "\
has capital\tVirginia\tRichmond\n\
has capital\tWest Virginia\tCharleston\n\
has capital\tOld Dominion\tRichmond\n\
borders\tVirginia\tWest Virginia\n";
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

    fn capital_list() -> FunctionList {
        FunctionList {
            functions: vec![FunctionSpec {
                relation: "has capital".into(),
                forward: true,
                inverse: false,
            }],
        }
    }

    #[test]
    fn function_conflict_on_distinct_values() {
        let corpus = capitals_corpus();
        let ff = FunctionFilter::build(&corpus, &capital_list(), 0.9);
        assert!(ff.conflict("Virginia", "West Virginia"));
        assert!(ff.conflict("West Virginia", "Virginia"));
        // A shared capital value clears the pair.
        assert!(!ff.conflict("Virginia", "Old Dominion"));
        // No extractions under any listed function: vacuously clear.
        assert!(!ff.conflict("Richmond", "Charleston"));
        assert!(!ff.conflict("Virginia", "Nowhere"));
    }

    #[test]
    fn inverse_direction_checks_first_arguments() {
        let text = "\
is capital of\tRichmond\tVirginia\n\
is capital of\tCharleston\tWest Virginia\n";
        let corpus = Corpus::from_reader(
            text.as_bytes(),
            LoadOptions {
                min_count: 1,
                proper_nouns_only: false,
                slot_tagged: false,
            },
        )
        .unwrap();
        let list = FunctionList {
            functions: vec![FunctionSpec {
                relation: "is capital of".into(),
                forward: true,
                inverse: true,
            }],
        };
        let ff = FunctionFilter::build(&corpus, &list, 0.9);
        // States disagree on their capitals via the inverse direction.
        assert!(ff.conflict("Virginia", "West Virginia"));
        // Capitals disagree on their states via the forward direction.
        assert!(ff.conflict("Richmond", "Charleston"));
    }

    #[test]
    fn chain_reports_all_triggered_rules() {
        let corpus = capitals_corpus();
        let provider = cache(&[
            ("Virginia", 1000),
            ("West Virginia", 1000),
            ("Virginia and West Virginia", 100),
        ]);
        let chain = FilterChain::new()
            .with_coordination(&provider, 0.001)
            .with_function_filter(FunctionFilter::build(&corpus, &capital_list(), 0.9));
        let verdict = chain
            .check(StringKind::Object, &["Virginia"], &["West Virginia"])
            .unwrap();
        match verdict {
            Verdict::Veto(reasons) => {
                let rules: Vec<&str> = reasons.iter().map(|r| r.rule.as_str()).collect();
                assert!(rules.contains(&"coordination"));
                assert!(rules.contains(&"function"));
            }
            Verdict::Allow => panic!("expected a veto"),
        }
        // A pair with no evidence passes.
        let verdict = chain
            .check(StringKind::Object, &["Richmond"], &["Nowhere"])
            .unwrap();
        assert_eq!(verdict, Verdict::Allow);
    }

    #[test]
    fn empty_chain_allows_everything() {
        let chain = FilterChain::new();
        let verdict = chain.check(StringKind::Object, &["a"], &["b"]).unwrap();
        assert_eq!(verdict, Verdict::Allow);
    }

    #[test]
    fn function_list_parsing() {
        let list = FunctionList::from_reader(
            "# functions\nis capital of\tboth\nwas born in\nmarried\tinverse\n".as_bytes(),
        )
        .unwrap();
        assert_eq!(list.functions.len(), 3);
        assert!(list.functions[0].forward && list.functions[0].inverse);
        assert!(list.functions[1].forward && !list.functions[1].inverse);
        assert!(!list.functions[2].forward && list.functions[2].inverse);
        assert!(FunctionList::from_reader("".as_bytes()).is_err());
        assert!(FunctionList::from_reader("rel\tbogus\n".as_bytes()).is_err());
        assert_eq!(FunctionList::default_set().functions.len(), 8);
    }
}
