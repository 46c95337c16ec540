//! `csn` — pipeline driver for coupled-network recommendation experiments.
//!
//! Subcommands mirror the pipeline stages: inspect (`stats`), prepare
//! (`purify`, `split`, `synth`), compute (`simmat`, `recommend`), measure
//! (`evaluate`, `sweep`, `analyze`), and orchestrate (`run`). Staged
//! commands exchange plain edge-list files in original ids, so any stage can
//! be re-entered by hand.

mod cache;
mod config;
mod runner;
mod stages;

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use csn_core::{
    cosine_preference, extract_ego, generate, hybrid_similarity, influence_preference_curve,
    purify, recommend, recommended_degree_histogram, split, stats, write_curve_csv,
    write_edge_list, write_ego_csv, write_ego_graph, write_histogram_csv, GridSpec, InfluenceKind,
    NodeInfluenceConvention, PurifyThresholds, SweepConfig, SynthConfig, TanimotoForm,
};
use serde::Serialize;

use cache::{influence_with_cache, InfluenceSpec};
use config::{preset_thresholds, ExperimentConfig};
use runner::{run_experiment, ReportRow};
use stages::{create_out, load, staged_split, write_json};

#[derive(Parser)]
#[command(
    name = "csn",
    version,
    about = "Recommendation experiments on coupled social networks"
)]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Summary statistics of a coupled network.
    Stats(StatsArgs),
    /// Iteratively remove low-degree users and items.
    Purify(PurifyArgs),
    /// Split the behavior layer into train and held-out parts.
    Split(SplitArgs),
    /// Compute an influence or preference matrix.
    Simmat(SimmatArgs),
    /// Produce top-L recommendation lists.
    Recommend(RecommendArgs),
    /// Score one exponent pair against held-out data.
    Evaluate(EvaluateArgs),
    /// Sweep the exponent grid against held-out data.
    Sweep(SweepArgs),
    /// Empirical analyses: correlation curve, ego network, degree histogram.
    Analyze(AnalyzeArgs),
    /// Generate a synthetic coupled network.
    Synth(SynthArgs),
    /// Run a full experiment from a config file.
    Run(RunArgs),
}

/// Input files shared by most subcommands.
#[derive(Args)]
struct NetworkArgs {
    /// Social layer edge list (follower TAB followee).
    #[arg(long)]
    social: PathBuf,
    /// Behavior layer edge list (user TAB item).
    #[arg(long)]
    behavior: PathBuf,
}

/// Influence parameters shared by the computing subcommands.
#[derive(Args)]
struct InfluenceArgs {
    /// Influence similarity: rwr, lin, or lout.
    #[arg(long, default_value = "rwr")]
    kind: InfluenceKind,
    /// Walk continuation probability.
    #[arg(long, default_value_t = csn_core::DEFAULT_DAMPING)]
    c: f64,
    /// Walk convergence tolerance.
    #[arg(long, default_value_t = csn_core::DEFAULT_WALK_TOL)]
    tol: f64,
    /// Walk iteration cap.
    #[arg(long, default_value_t = csn_core::DEFAULT_WALK_MAX_ITERS)]
    max_iters: usize,
    /// Overlap normalization: rooted or classic.
    #[arg(long, default_value = "rooted")]
    tanimoto: TanimotoForm,
    /// Swap the influence direction (transpose the matrix).
    #[arg(long)]
    transpose: bool,
}

impl InfluenceArgs {
    fn spec(&self) -> InfluenceSpec {
        InfluenceSpec {
            kind: self.kind,
            damping: self.c,
            tol: self.tol,
            max_iters: self.max_iters,
            tanimoto: self.tanimoto,
            transpose: self.transpose,
        }
    }
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    network: NetworkArgs,
    /// Write JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PurifyArgs {
    #[command(flatten)]
    network: NetworkArgs,
    /// Preset name (epinions, friendfeed) or four comma-separated values:
    /// min-out,min-in,min-items-per-user,min-users-per-item.
    #[arg(long)]
    thresholds: String,
    /// Directory for social.tsv, behavior.tsv, and purify.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SplitArgs {
    #[command(flatten)]
    network: NetworkArgs,
    /// Fraction of behavior links kept for training, in (0, 1).
    #[arg(long, default_value_t = 0.9)]
    ratio: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Directory for train.tsv, test.tsv, and split.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimmatArgs {
    #[command(flatten)]
    network: NetworkArgs,
    #[command(flatten)]
    influence: InfluenceArgs,
    /// Emit the taste-overlap (preference) matrix instead of an influence
    /// matrix; the influence flags are ignored.
    #[arg(long)]
    preference: bool,
    /// Output TSV (user TAB user TAB score, original ids).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RecommendArgs {
    #[command(flatten)]
    network: NetworkArgs,
    #[command(flatten)]
    influence: InfluenceArgs,
    /// Exponent on preference.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Exponent on influence.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Recommendation list length.
    #[arg(long, default_value_t = 10)]
    l: usize,
    /// Output TSV (user, rank, item, score); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Staged train/test inputs for the measuring subcommands.
#[derive(Args)]
struct StagedArgs {
    /// Social layer edge list.
    #[arg(long)]
    social: PathBuf,
    /// Training behavior edge list (from `csn split`).
    #[arg(long)]
    train: PathBuf,
    /// Held-out behavior pairs (from `csn split`).
    #[arg(long)]
    test: PathBuf,
}

#[derive(Args)]
struct MetricArgs {
    /// Comparison pairs for the ranking metric; 0 disables it.
    #[arg(long, default_value_t = csn_core::DEFAULT_AUC_SAMPLES)]
    auc_samples: u64,
    #[arg(long, default_value_t = 0)]
    auc_seed: u64,
    /// Average precision and recall over all users, not just those with
    /// held-out items.
    #[arg(long)]
    strict_mean: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    staged: StagedArgs,
    #[command(flatten)]
    influence: InfluenceArgs,
    #[command(flatten)]
    metrics: MetricArgs,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// List lengths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "10,20,50")]
    l: Vec<usize>,
    /// Write JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    staged: StagedArgs,
    #[command(flatten)]
    influence: InfluenceArgs,
    #[command(flatten)]
    metrics: MetricArgs,
    /// Largest preference exponent on the grid.
    #[arg(long, default_value_t = 4.0)]
    alpha_max: f64,
    /// Largest influence exponent on the grid.
    #[arg(long, default_value_t = 4.0)]
    beta_max: f64,
    /// Grid step.
    #[arg(long, default_value_t = 0.2)]
    step: f64,
    /// List lengths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "10,20,50")]
    l: Vec<usize>,
    /// Reuse influence matrices across runs via this directory.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Output CSV (alpha,beta,L,metric,value).
    #[arg(long)]
    out: PathBuf,
    /// Also write the per-metric optima as JSON.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    network: NetworkArgs,
    #[command(flatten)]
    influence: InfluenceArgs,
    /// Bins for the influence-preference curve.
    #[arg(long, default_value_t = 20)]
    bins: usize,
    /// Node influence scalar: column-sum or row-sum.
    #[arg(long, default_value = "column-sum")]
    node_influence: NodeInfluenceConvention,
    /// Write the influence-preference curve CSV here.
    #[arg(long)]
    curve: Option<PathBuf>,
    /// Write the ego network graph TSV here.
    #[arg(long)]
    ego: Option<PathBuf>,
    /// Write the ego network node table CSV here.
    #[arg(long)]
    ego_csv: Option<PathBuf>,
    /// Write the recommended-item degree histogram CSV here (needs --test).
    #[arg(long)]
    hist: Option<PathBuf>,
    /// Held-out pairs for the histogram; --behavior is then the training
    /// layer.
    #[arg(long)]
    test: Option<PathBuf>,
    /// Exponent on preference for the histogram's lists.
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    /// Exponent on influence for the histogram's lists.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// List length for the histogram's lists.
    #[arg(long, default_value_t = 10)]
    l: usize,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    users: usize,
    #[arg(long)]
    items: usize,
    /// Social links per user.
    #[arg(long, default_value_t = 8)]
    mean_out_degree: usize,
    /// Collected items per user.
    #[arg(long, default_value_t = 15)]
    mean_items_per_user: usize,
    /// Chance each collection is copied from a followee.
    #[arg(long, default_value_t = 0.5)]
    copy_prob: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Directory for social.tsv, behavior.tsv, and synth.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // Best effort: a later global-pool user would get the default size.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let result = match cli.command {
        Command::Stats(args) => cmd_stats(args),
        Command::Purify(args) => cmd_purify(args),
        Command::Split(args) => cmd_split(args),
        Command::Simmat(args) => cmd_simmat(args),
        Command::Recommend(args) => cmd_recommend(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Run(args) => cmd_run(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

#[derive(Serialize)]
struct StatsOutput {
    users: usize,
    items: usize,
    ratings: usize,
    social_links: usize,
    rating_sparsity: f64,
    social_sparsity: f64,
    self_loops_dropped: usize,
    social_duplicates_dropped: usize,
    behavior_duplicates_dropped: usize,
}

fn cmd_stats(args: StatsArgs) -> Result<()> {
    let loaded = load(&args.network.social, &args.network.behavior)?;
    let s = stats(&loaded.network).context("graph-core: dataset stats")?;
    write_json(
        args.out.as_deref(),
        &StatsOutput {
            users: s.user_count,
            items: s.item_count,
            ratings: s.rating_count,
            social_links: s.social_link_count,
            rating_sparsity: s.rating_sparsity,
            social_sparsity: s.social_sparsity,
            self_loops_dropped: loaded.self_loops_dropped,
            social_duplicates_dropped: loaded.social_duplicates,
            behavior_duplicates_dropped: loaded.behavior_duplicates,
        },
    )
}

fn parse_thresholds(text: &str) -> Result<PurifyThresholds> {
    if !text.contains(',') {
        return preset_thresholds(text);
    }
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 4 {
        bail!("expected four comma-separated thresholds, got {text:?}");
    }
    let mut values = [0usize; 4];
    for (slot, part) in values.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .with_context(|| format!("bad threshold {part:?}"))?;
    }
    Ok(PurifyThresholds {
        min_out: values[0],
        min_in: values[1],
        min_user_items: values[2],
        min_item_users: values[3],
    })
}

#[derive(Serialize)]
struct PurifyOutput {
    thresholds: PurifyThresholds,
    rounds: usize,
    users_before: usize,
    users_after: usize,
    items_before: usize,
    items_after: usize,
    social_links: usize,
    ratings: usize,
}

fn cmd_purify(args: PurifyArgs) -> Result<()> {
    let thresholds = parse_thresholds(&args.thresholds)?;
    let loaded = load(&args.network.social, &args.network.behavior)?;
    let outcome = purify(&loaded.network, thresholds).context("graph-core: purification")?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;

    let user_id = |u: u32| loaded.user_ids[outcome.kept_users[u as usize] as usize];
    let item_id = |i: u32| loaded.item_ids[outcome.kept_items[i as usize] as usize];
    let net = &outcome.network;
    write_edge_list(
        create_out(&args.out.join("social.tsv"))?,
        net.social_edges().map(|(a, b)| (user_id(a), user_id(b))),
    )
    .context("writing social.tsv")?;
    write_edge_list(
        create_out(&args.out.join("behavior.tsv"))?,
        net.behavior_edges().map(|(u, i)| (user_id(u), item_id(i))),
    )
    .context("writing behavior.tsv")?;
    write_json(
        Some(&args.out.join("purify.json")),
        &PurifyOutput {
            thresholds,
            rounds: outcome.rounds,
            users_before: loaded.network.user_count(),
            users_after: net.user_count(),
            items_before: loaded.network.item_count(),
            items_after: net.item_count(),
            social_links: net.social_edge_count(),
            ratings: net.behavior_edge_count(),
        },
    )
}

#[derive(Serialize)]
struct SplitOutput {
    ratio: f64,
    seed: u64,
    train_edges: usize,
    test_edges: usize,
}

fn cmd_split(args: SplitArgs) -> Result<()> {
    let loaded = load(&args.network.social, &args.network.behavior)?;
    let pair = split(&loaded.network, args.ratio, args.seed)
        .context("graph-core: behavior split")?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let user_id = |u: u32| loaded.user_ids[u as usize];
    let item_id = |i: u32| loaded.item_ids[i as usize];
    write_edge_list(
        create_out(&args.out.join("train.tsv"))?,
        pair.train
            .behavior_edges()
            .map(|(u, i)| (user_id(u), item_id(i))),
    )
    .context("writing train.tsv")?;
    write_edge_list(
        create_out(&args.out.join("test.tsv"))?,
        pair.test.iter().map(|&(u, i)| (user_id(u), item_id(i))),
    )
    .context("writing test.tsv")?;
    write_json(
        Some(&args.out.join("split.json")),
        &SplitOutput {
            ratio: args.ratio,
            seed: args.seed,
            train_edges: pair.train.behavior_edge_count(),
            test_edges: pair.test.len(),
        },
    )
}

fn cmd_simmat(args: SimmatArgs) -> Result<()> {
    let loaded = load(&args.network.social, &args.network.behavior)?;
    let user_id = |u: u32| loaded.user_ids[u as usize];
    let scores = if args.preference {
        cosine_preference(&loaded.network).scores
    } else {
        influence_with_cache(&loaded.network, &args.influence.spec(), None)?
            .matrix
            .scores
    };
    scores
        .write_tsv(create_out(&args.out)?, user_id)
        .with_context(|| format!("writing {}", args.out.display()))?;
    Ok(())
}

fn cmd_recommend(args: RecommendArgs) -> Result<()> {
    let loaded = load(&args.network.social, &args.network.behavior)?;
    let preference = cosine_preference(&loaded.network);
    let influence =
        influence_with_cache(&loaded.network, &args.influence.spec(), None)?.matrix;
    let sim = hybrid_similarity(&preference, &influence, args.alpha, args.beta)
        .context("similarity: hybrid combination")?;
    let lists = recommend(&loaded.network, &sim, args.l)
        .context("recommender: building lists")?;
    let user_id = |u: u32| loaded.user_ids[u as usize];
    let item_id = |i: u32| loaded.item_ids[i as usize];
    match &args.out {
        Some(path) => lists
            .write_tsv(create_out(path)?, user_id, item_id)
            .with_context(|| format!("writing {}", path.display()))?,
        None => {
            let stdout = std::io::stdout();
            lists
                .write_tsv(stdout.lock(), user_id, item_id)
                .context("writing recommendations")?;
        }
    }
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let loaded = load(&args.staged.social, &args.staged.train)?;
    let split_pair = staged_split(&loaded, &args.staged.test, 0)?;
    let preference = cosine_preference(&split_pair.train);
    let influence =
        influence_with_cache(&split_pair.train, &args.influence.spec(), None)?.matrix;
    let samples = match args.metrics.auc_samples {
        0 => None,
        n => Some(
            csn_core::draw_auc_samples(
                &split_pair.train,
                &split_pair.test,
                n,
                args.metrics.auc_seed,
            )
            .context("evaluation: drawing ranking samples")?,
        ),
    };
    let reports = csn_core::evaluate_point(
        &split_pair,
        &preference,
        &influence,
        args.alpha,
        args.beta,
        &args.l,
        samples.as_ref(),
        args.metrics.strict_mean,
    )
    .context("evaluation: scoring the point")?;
    let rows: Vec<ReportRow> = reports.iter().map(ReportRow::from_report).collect();
    write_json(args.out.as_deref(), &rows)
}

#[derive(Serialize)]
struct BestRow {
    metric: String,
    #[serde(flatten)]
    at: ReportRow,
}

#[derive(Serialize)]
struct SweepSummary {
    kind: String,
    list_lengths: Vec<usize>,
    auc_samples: u64,
    best: Vec<BestRow>,
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let loaded = load(&args.staged.social, &args.staged.train)?;
    let split_pair = staged_split(&loaded, &args.staged.test, 0)?;
    let preference = cosine_preference(&split_pair.train);
    let source =
        influence_with_cache(&split_pair.train, &args.influence.spec(), args.cache.as_deref())?;
    if source.from_cache {
        eprintln!(
            "reusing cached influence matrix {}",
            source.cache_file.as_ref().unwrap().display()
        );
    }
    let cfg = SweepConfig {
        grid: GridSpec::lattice(args.alpha_max, args.beta_max, args.step)
            .context("evaluation: grid lattice")?,
        list_lengths: args.l.clone(),
        kind: args.influence.kind,
        damping: args.influence.c,
        walk_tol: args.influence.tol,
        walk_max_iters: args.influence.max_iters,
        tanimoto: args.influence.tanimoto,
        transpose_influence: false, // applied when the matrix was built
        auc_samples: (args.metrics.auc_samples > 0).then_some(args.metrics.auc_samples),
        auc_seed: args.metrics.auc_seed,
        strict_mean_over_all_users: args.metrics.strict_mean,
    };
    let result =
        csn_core::grid_sweep_with_bases(&split_pair, &preference, &source.matrix, &cfg)
            .context("evaluation: grid sweep")?;
    result
        .write_csv(create_out(&args.out)?)
        .with_context(|| format!("writing {}", args.out.display()))?;
    if let Some(path) = &args.summary {
        let mut best = Vec::new();
        for metric in csn_core::MetricKind::ALL {
            for &l in &args.l {
                if let Some(report) = result.argmax(metric, l) {
                    best.push(BestRow {
                        metric: metric.as_str().to_string(),
                        at: ReportRow::from_report(report),
                    });
                }
            }
        }
        write_json(
            Some(path),
            &SweepSummary {
                kind: args.influence.kind.as_str().to_string(),
                list_lengths: args.l.clone(),
                auc_samples: args.metrics.auc_samples,
                best,
            },
        )?;
    }
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<()> {
    if args.curve.is_none() && args.ego.is_none() && args.ego_csv.is_none() && args.hist.is_none()
    {
        bail!("nothing to do: pass at least one of --curve, --ego, --ego-csv, --hist");
    }
    let loaded = load(&args.network.social, &args.network.behavior)?;
    let net = &loaded.network;
    let preference = cosine_preference(net);
    let influence = influence_with_cache(net, &args.influence.spec(), None)?.matrix;
    let user_id = |u: u32| loaded.user_ids[u as usize];

    if let Some(path) = &args.curve {
        let curve = influence_preference_curve(&influence, &preference, args.bins)
            .context("analysis: influence-preference curve")?;
        write_curve_csv(create_out(path)?, &curve)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    if args.ego.is_some() || args.ego_csv.is_some() {
        let ego = extract_ego(net, &influence, &preference, args.node_influence)
            .context("analysis: ego network")?;
        if let Some(path) = &args.ego {
            write_ego_graph(create_out(path)?, &ego, user_id)
                .with_context(|| format!("writing {}", path.display()))?;
        }
        if let Some(path) = &args.ego_csv {
            write_ego_csv(create_out(path)?, &ego, user_id)
                .with_context(|| format!("writing {}", path.display()))?;
        }
    }
    if let Some(path) = &args.hist {
        let Some(test_path) = &args.test else {
            bail!("--hist needs --test (held-out pairs) with --behavior as the training layer");
        };
        let split_pair = staged_split(&loaded, test_path, 0)?;
        let sim = hybrid_similarity(&preference, &influence, args.alpha, args.beta)
            .context("similarity: hybrid combination")?;
        let lists = recommend(net, &sim, args.l).context("recommender: building lists")?;
        let hist = recommended_degree_histogram(&lists, &split_pair.test, net)
            .context("analysis: degree histogram")?;
        write_histogram_csv(create_out(path)?, &hist)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        users: args.users,
        items: args.items,
        mean_out_degree: args.mean_out_degree,
        mean_items_per_user: args.mean_items_per_user,
        copy_probability: args.copy_prob,
        seed: args.seed,
    };
    let net = generate(&cfg).context("synth: generating network")?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    write_edge_list(
        create_out(&args.out.join("social.tsv"))?,
        net.social_edges().map(|(a, b)| (a as u64, b as u64)),
    )
    .context("writing social.tsv")?;
    write_edge_list(
        create_out(&args.out.join("behavior.tsv"))?,
        net.behavior_edges().map(|(u, i)| (u as u64, i as u64)),
    )
    .context("writing behavior.tsv")?;
    write_json(Some(&args.out.join("synth.json")), &cfg)
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let config_text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading config {}", args.config.display()))?;
    let config: ExperimentConfig = toml::from_str(&config_text)
        .with_context(|| format!("parsing config {}", args.config.display()))?;
    let out_dir = args
        .out
        .clone()
        .unwrap_or_else(|| config.output.dir.clone());
    let manifest = run_experiment(&config, &config_text, &out_dir)?;
    println!(
        "run complete: {} artifacts in {}",
        manifest.outputs.len(),
        out_dir.display()
    );
    Ok(())
}
