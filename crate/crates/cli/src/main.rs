//! Command-line surface for the resolution pipeline.
//!
//! Subcommands: `resolve` clusters a triple corpus and writes cluster files
//! plus run artifacts; `rank-pairs` emits scored candidate string pairs;
//! `evaluate` scores a hypothesis clustering against a gold standard;
//! `synth` generates corpora with planted ground truth; `crossdoc` clusters
//! tagged name occurrences.
//!
//! Standard output stays line-oriented and machine-parseable; human-facing
//! notes go to a log file in the output directory. Exit codes: 0 success,
//! 2 usage or input error, 3 internal invariant violation.

use std::collections::HashSet;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use synres_core::clustering::ClusterError;
use synres_core::corpus::{load_cluster_file, Corpus};
use synres_core::crossdoc::{self, CrossdocConfig};
use synres_core::eval::{cluster_prf, pairwise_prf, pr_auc, GoldStandard};
use synres_core::filters::{
    FileHitcounts, FilterChain, FunctionFilter, FunctionList, HitcountProvider, ZeroHitcounts,
};
use synres_core::pipeline::{self, PipelineError, ResolveOutcome, RunConfig};
use synres_core::synth::{self, ConfuserSpec, PlantedCluster, PolysemyConfig, SynthConfig};
use synres_core::StringKind;

#[derive(Parser)]
#[command(
    name = "synres",
    version,
    about = "Synonym resolution over extraction triples"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster the objects and relations of a triple corpus.
    Resolve(ResolveArgs),
    /// Score first-round candidate string pairs and print them ranked.
    RankPairs(RankPairsArgs),
    /// Score a hypothesis clustering against a gold clustering.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic corpus or tagged-mention set with ground truth.
    Synth(SynthArgs),
    /// Cluster tagged name occurrences (polysemy-aware mode).
    Crossdoc(CrossdocArgs),
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Flat key=value config file; flags win over file values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra key=value overrides, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Pairwise model: ssm, esp, csm, smi, combined, wesp.
    #[arg(long)]
    metric: Option<String>,
    /// likelihood_ratio, mean, geometric_mean, harmonic_mean.
    #[arg(long)]
    aggregation: Option<String>,
    /// Merge threshold (ratio or mean value, depending on aggregation).
    #[arg(long)]
    threshold: Option<f64>,
    /// Minimum extraction count for clusterable strings.
    #[arg(long)]
    min_count: Option<u32>,
    /// Index fanout cutoff (posting lists this long are skipped).
    #[arg(long)]
    max_fanout: Option<usize>,
    /// Scoring worker threads; 0 uses all cores, 1 is fully sequential.
    #[arg(long)]
    workers: Option<usize>,
    /// Enable the coordination and function merge filters.
    #[arg(long)]
    filters: bool,
    /// Function list file (relation [TAB function|inverse|both] per line).
    #[arg(long)]
    functions_file: Option<PathBuf>,
    /// Hitcount cache file (phrase TAB count per line).
    #[arg(long)]
    hitcounts_file: Option<PathBuf>,
}

impl ConfigArgs {
    fn build(&self) -> Result<RunConfig> {
        let mut config = RunConfig::default();
        let mut explicit = HashSet::new();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            config.parse_update(&text, &mut explicit)?;
        }
        for kv in &self.overrides {
            let (key, value) = kv
                .split_once('=')
                .with_context(|| format!("--set expects key=value, got {kv:?}"))?;
            config.set(key.trim(), value.trim())?;
            explicit.insert(key.trim().to_string());
        }
        let flag_values: [(&str, Option<String>); 9] = [
            ("metric", self.metric.clone()),
            ("aggregation", self.aggregation.clone()),
            ("merge_threshold", self.threshold.map(|v| v.to_string())),
            ("min_count", self.min_count.map(|v| v.to_string())),
            ("max_index_fanout", self.max_fanout.map(|v| v.to_string())),
            ("workers", self.workers.map(|v| v.to_string())),
            ("filters_enabled", self.filters.then(|| "true".to_string())),
            (
                "functions_file",
                self.functions_file
                    .as_ref()
                    .map(|p| p.display().to_string()),
            ),
            (
                "hitcounts_file",
                self.hitcounts_file
                    .as_ref()
                    .map(|p| p.display().to_string()),
            ),
        ];
        for (key, value) in flag_values {
            if let Some(v) = value {
                config.set(key, &v)?;
                explicit.insert(key.to_string());
            }
        }
        config.finalize_criterion(&explicit);
        Ok(config)
    }
}

#[derive(Args)]
struct ResolveArgs {
    /// Triple corpus: relation TAB arg1 TAB arg2 per line.
    #[arg(long)]
    corpus: PathBuf,
    /// Output directory for cluster files and run artifacts.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct RankPairsArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Which strings to rank: object or relation.
    #[arg(long, default_value = "object")]
    kind: String,
    /// Write the ranking here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    /// cluster, pairwise, or auc.
    #[arg(long)]
    mode: String,
    /// Hypothesis clustering (one cluster per line, TAB-separated).
    #[arg(long)]
    hypothesis: Option<PathBuf>,
    /// Gold clustering in the same format.
    #[arg(long)]
    gold: PathBuf,
    /// Ranked pair file from rank-pairs (required for auc).
    #[arg(long)]
    ranked_pairs: Option<PathBuf>,
    /// Write the precision-recall curve as CSV (auc mode).
    #[arg(long)]
    curve_out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Distinct Zipf-ranked strings (M).
    #[arg(long, default_value_t = 1000)]
    strings: usize,
    /// Zipf shape parameter (z).
    #[arg(long, default_value_t = 1.0)]
    shape: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Planted groups whose members get unrelated names.
    #[arg(long, default_value_t = 0)]
    planted_distinct: usize,
    /// Planted groups whose members get name variants of one base.
    #[arg(long, default_value_t = 0)]
    planted_similar: usize,
    /// Members per planted group.
    #[arg(long, default_value_t = 2)]
    planted_size: usize,
    /// Shared fraction of potential properties within a planted group.
    #[arg(long, default_value_t = 1.0)]
    overlap: f64,
    /// Planted look-alike pairs with conflicting function values.
    #[arg(long, default_value_t = 0)]
    confusers: usize,
    /// Pool overlap of each look-alike pair.
    #[arg(long, default_value_t = 0.5)]
    confuser_overlap: f64,
    /// Urn multiple for planted pools.
    #[arg(long, default_value_t = 3.0)]
    multiple: f64,
    /// Generate tagged mentions with planted polysemy instead of triples.
    #[arg(long)]
    polysemy: bool,
    #[arg(long, default_value = "Deep Port")]
    surface: String,
    #[arg(long, default_value_t = 2)]
    referents: usize,
    #[arg(long, default_value_t = 6)]
    docs_per_referent: usize,
    #[arg(long, default_value_t = 3)]
    entities_per_referent: usize,
    #[arg(long, default_value_t = 3)]
    mentions_per_doc: usize,
}

#[derive(Args)]
struct CrossdocArgs {
    /// Tagged mentions: doc_id TAB mention_index TAB entity per line.
    #[arg(long)]
    mentions: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
}

fn write_clusters(path: &Path, clusters: &[Vec<String>], min_size: usize) -> Result<usize> {
    let mut out = String::new();
    let mut written = 0;
    for cluster in clusters {
        if cluster.len() < min_size {
            continue;
        }
        out.push_str(&cluster.join("\t"));
        out.push('\n');
        written += 1;
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(written)
}

fn init_workers(config: &RunConfig) {
    if config.workers > 0 {
        // Errors only if a global pool already exists, which is fine.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build_global();
    }
}

struct LoadedFilters {
    hitcounts: Option<FileHitcounts>,
    zero: ZeroHitcounts,
    functions: FunctionList,
}

impl LoadedFilters {
    fn load(config: &RunConfig) -> Result<Self> {
        let hitcounts = match &config.hitcounts_file {
            Some(path) => Some(
                FileHitcounts::load(Path::new(path))
                    .with_context(|| format!("loading hitcounts {path}"))?,
            ),
            None => None,
        };
        let functions = match &config.functions_file {
            Some(path) => FunctionList::load(Path::new(path))
                .with_context(|| format!("loading function list {path}"))?,
            None => FunctionList::default_set(),
        };
        Ok(LoadedFilters {
            hitcounts,
            zero: ZeroHitcounts,
            functions,
        })
    }

    fn provider(&self) -> &dyn HitcountProvider {
        match &self.hitcounts {
            Some(h) => h,
            None => &self.zero,
        }
    }

    fn chain<'a>(&'a self, corpus: Option<&Corpus>, config: &RunConfig) -> FilterChain<'a> {
        let mut chain =
            FilterChain::new().with_coordination(self.provider(), config.coordination_threshold);
        if let Some(corpus) = corpus {
            chain = chain.with_function_filter(FunctionFilter::build(
                corpus,
                &self.functions,
                config.match_threshold,
            ));
        }
        chain
    }
}

fn cmd_resolve(args: &ResolveArgs) -> Result<()> {
    let started = Instant::now();
    let config = args.config.build()?;
    init_workers(&config);
    fs::create_dir_all(&args.out)?;

    let corpus = Corpus::load(&args.corpus, config.load_options())
        .with_context(|| format!("loading corpus {}", args.corpus.display()))?;

    let filters = if config.filters_enabled {
        Some(LoadedFilters::load(&config)?)
    } else {
        None
    };
    let chain = filters.as_ref().map(|f| f.chain(Some(&corpus), &config));
    let result: ResolveOutcome = pipeline::resolve(
        &corpus,
        &config,
        chain
            .as_ref()
            .map(|c| c as &dyn synres_core::clustering::MergeFilter),
    )?;

    let objects = write_clusters(
        &args.out.join("objects.clusters"),
        &result.object_clusters,
        2,
    )?;
    let relations = write_clusters(
        &args.out.join("relations.clusters"),
        &result.relation_clusters,
        2,
    )?;
    fs::write(args.out.join("run.config"), config.snapshot())?;
    fs::write(args.out.join("stats.report"), result.outcome.stats.report())?;

    let mut veto_log = String::new();
    for veto in &result.outcome.vetoes {
        for reason in &veto.reasons {
            veto_log.push_str(&format!(
                "round={} rule={} pair={}|{} detail={} clusters={}<>{}\n",
                veto.round,
                reason.rule,
                reason.pair.0,
                reason.pair.1,
                reason.detail,
                veto.left,
                veto.right,
            ));
        }
    }
    fs::write(args.out.join("vetoes.log"), veto_log)?;

    let mut log = fs::File::create(args.out.join("resolve.log"))?;
    writeln!(
        log,
        "resolved {} assertions in {:.2?}; {} rounds, {} comparisons, {} vetoes",
        corpus.assertion_count(),
        started.elapsed(),
        result.outcome.stats.rounds.len(),
        result.outcome.stats.candidate_pairs_scored,
        result.outcome.vetoes.len(),
    )?;

    println!("assertions={}", corpus.assertion_count());
    println!("objects_clusters={objects}");
    println!("relations_clusters={relations}");
    println!("rounds={}", result.outcome.stats.rounds.len());
    println!(
        "candidate_pairs_scored={}",
        result.outcome.stats.candidate_pairs_scored
    );
    println!("vetoes={}", result.outcome.vetoes.len());
    Ok(())
}

fn cmd_rank_pairs(args: &RankPairsArgs) -> Result<()> {
    let config = args.config.build()?;
    init_workers(&config);
    let kind = match args.kind.as_str() {
        "object" => StringKind::Object,
        "relation" => StringKind::Relation,
        other => anyhow::bail!("unknown kind {other:?}: expected object or relation"),
    };
    let corpus = Corpus::load(&args.corpus, config.load_options())?;
    let ranked = pipeline::rank_pairs(&corpus, &config, kind)?;
    let mut out = String::with_capacity(ranked.len() * 48);
    for pair in &ranked {
        out.push_str(&format!(
            "{}\t{}\t{}\t{:.12}\n",
            pair.left,
            pair.right,
            config.metric.name(),
            pair.score
        ));
    }
    match &args.out {
        Some(path) => fs::write(path, out)?,
        None => print!("{out}"),
    }
    Ok(())
}

fn parse_ranked_pairs(path: &Path) -> Result<Vec<(String, String, f64)>> {
    let text = fs::read_to_string(path)?;
    let mut pairs = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            anyhow::bail!("ranked pairs line {}: expected 4 fields", idx + 1);
        }
        let score: f64 = fields[3]
            .trim()
            .parse()
            .with_context(|| format!("ranked pairs line {}: bad score", idx + 1))?;
        pairs.push((fields[0].to_string(), fields[1].to_string(), score));
    }
    Ok(pairs)
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let gold = GoldStandard::new(load_cluster_file(&args.gold)?)?;
    match args.mode.as_str() {
        "cluster" | "pairwise" => {
            let path = args
                .hypothesis
                .as_ref()
                .context("--hypothesis is required for cluster and pairwise modes")?;
            let hypothesis = load_cluster_file(path)?;
            let report = match args.mode.as_str() {
                "cluster" => cluster_prf(&hypothesis, &gold),
                _ => pairwise_prf(&hypothesis, &gold)?,
            };
            print!("{}", report.report());
        }
        "auc" => {
            let path = args
                .ranked_pairs
                .as_ref()
                .context("--ranked-pairs is required for auc mode")?;
            let ranked = parse_ranked_pairs(path)?;
            let judged: Vec<(f64, bool)> = ranked
                .iter()
                .filter(|(a, b, _)| gold.contains(a) && gold.contains(b))
                .map(|(a, b, s)| (*s, gold.same_cluster(a, b)))
                .collect();
            let curve = pr_auc(&judged, Some(gold.positive_pair_count()))?;
            println!("auc={:.6}", curve.auc);
            println!("max_recall={:.6}", curve.max_recall);
            println!("ranked_pairs={}", judged.len());
            if let Some(path) = &args.curve_out {
                let mut csv = String::from("threshold,recall,precision\n");
                for p in &curve.points {
                    csv.push_str(&format!(
                        "{:.9},{:.6},{:.6}\n",
                        p.threshold, p.recall, p.precision
                    ));
                }
                fs::write(path, csv)?;
            } else {
                for p in &curve.points {
                    println!(
                        "curve: threshold={:.9} recall={:.6} precision={:.6}",
                        p.threshold, p.recall, p.precision
                    );
                }
            }
        }
        other => anyhow::bail!("unknown mode {other:?}: expected cluster, pairwise, or auc"),
    }
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    fs::create_dir_all(&args.out)?;
    if args.polysemy {
        let config = PolysemyConfig {
            surface: args.surface.clone(),
            referents: args.referents,
            docs_per_referent: args.docs_per_referent,
            entities_per_referent: args.entities_per_referent,
            mentions_per_doc: args.mentions_per_doc,
            seed: args.seed,
        };
        let out = synth::generate_polysemy_mentions(&config)?;
        fs::write(args.out.join("mentions.tsv"), &out.mentions_tsv)?;
        fs::write(args.out.join("gold.occurrences.tsv"), &out.gold_tsv)?;
        println!("mentions={}", out.mentions_tsv.lines().count());
        println!("gold_clusters={}", out.gold_tsv.lines().count());
        return Ok(());
    }
    let mut planted = Vec::new();
    for _ in 0..args.planted_distinct {
        planted.push(PlantedCluster {
            size: args.planted_size,
            similar_names: false,
        });
    }
    for _ in 0..args.planted_similar {
        planted.push(PlantedCluster {
            size: args.planted_size,
            similar_names: true,
        });
    }
    let config = SynthConfig {
        distinct_strings: args.strings,
        zipf_shape: args.shape,
        seed: args.seed,
        planted,
        overlap: args.overlap,
        confusers: ConfuserSpec {
            pairs: args.confusers,
            overlap: args.confuser_overlap,
        },
        property_multiple: args.multiple,
    };
    let out = synth::generate(&config)?;
    let paths = out.write_to_dir(&args.out)?;
    println!("assertions={}", out.assertion_count);
    println!("corpus={}", paths.corpus.display());
    println!("gold={}", paths.gold.display());
    if let Some(p) = paths.functions {
        println!("functions={}", p.display());
    }
    if let Some(p) = paths.hitcounts {
        println!("hitcounts={}", p.display());
    }
    Ok(())
}

fn cmd_crossdoc(args: &CrossdocArgs) -> Result<()> {
    let config = args.config.build()?;
    init_workers(&config);
    fs::create_dir_all(&args.out)?;
    let documents = crossdoc::load_mentions(&args.mentions)?;
    let corpus = crossdoc::build_occurrence_contexts(&documents, config.crossdoc_context_size)?;

    let crossdoc_config: CrossdocConfig = config.crossdoc_config();
    let filters = if config.filters_enabled {
        Some(LoadedFilters::load(&config)?)
    } else {
        None
    };
    let chain = filters.as_ref().map(|f| f.chain(None, &config));
    let outcome = crossdoc::resolve_occurrences(
        &corpus,
        &crossdoc_config,
        chain
            .as_ref()
            .map(|c| c as &dyn synres_core::clustering::MergeFilter),
    )?;

    fs::write(
        args.out.join("occurrences.clusters"),
        crossdoc::clusters_to_lines(&corpus, &outcome),
    )?;
    fs::write(args.out.join("run.config"), config.snapshot())?;
    fs::write(args.out.join("stats.report"), outcome.stats.report())?;

    println!("occurrences={}", corpus.len());
    println!("clusters={}", outcome.clusters().len());
    println!("rounds={}", outcome.stats.rounds.len());
    Ok(())
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Resolve(args) => cmd_resolve(args),
        Command::RankPairs(args) => cmd_rank_pairs(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Crossdoc(args) => cmd_crossdoc(args),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let invariant = err
                .downcast_ref::<PipelineError>()
                .is_some_and(|e| matches!(e, PipelineError::Cluster(ClusterError::Invariant(_))))
                || err
                    .downcast_ref::<ClusterError>()
                    .is_some_and(|e| matches!(e, ClusterError::Invariant(_)));
            if invariant {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
