//! End-to-end experiment driver behind `csn run`.
//!
//! A run takes one config, produces one output directory, and is
//! deterministic: the same config and inputs yield byte-identical CSV and
//! JSON artifacts. Nothing here depends on wall-clock time or iteration
//! order of unordered containers.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use csn_core::{
    cosine_preference, extract_ego, generate, hybrid_similarity, influence_preference_curve,
    purify, recommend, recommended_degree_histogram, spearman, split, stats, write_curve_csv,
    write_ego_csv, write_ego_graph, write_histogram_csv, CoupledNetwork, CsnError,
    EvaluationReport, GridResult, MetricKind, SweepConfig, SynthConfig,
};
use serde::Serialize;

use crate::cache::{file_sha256, influence_with_cache, network_digest, sha256_hex, InfluenceSpec};
use crate::config::ExperimentConfig;
use crate::stages::{create_out, load, write_json};

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Source {
    Files {
        social: PathBuf,
        behavior: PathBuf,
        social_sha256: String,
        behavior_sha256: String,
    },
    Synthetic {
        config: SynthConfig,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct PurifyInfo {
    pub thresholds: csn_core::PurifyThresholds,
    pub rounds: usize,
    pub users_before: usize,
    pub users_after: usize,
    pub items_before: usize,
    pub items_after: usize,
}

pub struct PreparedData {
    pub network: CoupledNetwork,
    pub user_ids: Vec<u64>,
    pub source: Source,
    pub purify_info: Option<PurifyInfo>,
}

/// Resolve the configured source and purification into a working network
/// plus dense-to-original id maps.
pub fn prepare_data(config: &ExperimentConfig) -> Result<PreparedData> {
    let (network, user_ids, source) = match (&config.input, &config.synth) {
        (Some(input), None) => {
            let loaded = load(&input.social, &input.behavior)?;
            let source = Source::Files {
                social: input.social.clone(),
                behavior: input.behavior.clone(),
                social_sha256: file_sha256(&input.social)?,
                behavior_sha256: file_sha256(&input.behavior)?,
            };
            (loaded.network, loaded.user_ids, source)
        }
        (None, Some(synth)) => {
            let network = generate(synth).context("synth: generating network")?;
            let user_ids = (0..network.user_count() as u64).collect();
            (network, user_ids, Source::Synthetic { config: *synth })
        }
        _ => bail!("config needs exactly one of [input] and [synth]"),
    };
    let Some(section) = &config.purify else {
        return Ok(PreparedData {
            network,
            user_ids,
            source,
            purify_info: None,
        });
    };
    let thresholds = section.resolve()?;
    let outcome = purify(&network, thresholds).context("graph-core: purification")?;
    let info = PurifyInfo {
        thresholds,
        rounds: outcome.rounds,
        users_before: network.user_count(),
        users_after: outcome.network.user_count(),
        items_before: network.item_count(),
        items_after: outcome.network.item_count(),
    };
    let kept_user_ids = outcome
        .kept_users
        .iter()
        .map(|&old| user_ids[old as usize])
        .collect();
    Ok(PreparedData {
        network: outcome.network,
        user_ids: kept_user_ids,
        source,
        purify_info: Some(info),
    })
}

/// One grid point of the seed-averaged sweep.
struct MeanRow {
    alpha: f64,
    beta: f64,
    l: usize,
    precision: f64,
    recall: f64,
    fmeasure: f64,
    auc: Option<f64>,
}

impl MeanRow {
    fn value(&self, metric: MetricKind) -> Option<f64> {
        match metric {
            MetricKind::Precision => Some(self.precision),
            MetricKind::Recall => Some(self.recall),
            MetricKind::FMeasure => Some(self.fmeasure),
            MetricKind::Auc => self.auc,
        }
    }
}

/// Average aligned sweeps from several split seeds. All inputs share one
/// grid, so reports line up index by index.
fn mean_rows(results: &[GridResult]) -> Result<Vec<MeanRow>> {
    let first = &results[0];
    for other in &results[1..] {
        if other.reports.len() != first.reports.len() {
            bail!("sweep results from different seeds do not align");
        }
    }
    let n = results.len() as f64;
    let mut rows = Vec::with_capacity(first.reports.len());
    for idx in 0..first.reports.len() {
        let base = &first.reports[idx];
        let mut precision = 0.0;
        let mut recall = 0.0;
        let mut fmeasure = 0.0;
        let mut auc_sum = 0.0;
        let mut auc_all = true;
        for result in results {
            let r = &result.reports[idx];
            if r.params.alpha != base.params.alpha
                || r.params.beta != base.params.beta
                || r.params.list_length != base.params.list_length
            {
                bail!("sweep results from different seeds do not align");
            }
            precision += r.precision;
            recall += r.recall;
            fmeasure += r.fmeasure;
            match r.auc {
                Some(a) => auc_sum += a,
                None => auc_all = false,
            }
        }
        rows.push(MeanRow {
            alpha: base.params.alpha,
            beta: base.params.beta,
            l: base.params.list_length,
            precision: precision / n,
            recall: recall / n,
            fmeasure: fmeasure / n,
            auc: auc_all.then(|| auc_sum / n),
        });
    }
    Ok(rows)
}

fn write_mean_csv<W: Write>(mut w: W, rows: &[MeanRow]) -> std::io::Result<()> {
    writeln!(w, "alpha,beta,L,metric,value")?;
    for row in rows {
        let mut emit = |metric: MetricKind, value: f64| {
            writeln!(w, "{},{},{},{},{}", row.alpha, row.beta, row.l, metric, value)
        };
        emit(MetricKind::Precision, row.precision)?;
        emit(MetricKind::Recall, row.recall)?;
        emit(MetricKind::FMeasure, row.fmeasure)?;
        if let Some(a) = row.auc {
            emit(MetricKind::Auc, a)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct BestEntry {
    pub kind: String,
    pub metric: String,
    pub l: usize,
    pub alpha: f64,
    pub beta: f64,
    pub mean: f64,
    pub stderr: f64,
}

/// Best mean value per metric and list length; ties keep the first point in
/// grid order, matching the single-seed sweep.
fn best_entries(kind: &str, rows: &[MeanRow], results: &[GridResult], lengths: &[usize]) -> Vec<BestEntry> {
    let mut entries = Vec::new();
    for metric in MetricKind::ALL {
        for &l in lengths {
            let mut best: Option<(usize, f64)> = None;
            for (idx, row) in rows.iter().enumerate() {
                if row.l != l {
                    continue;
                }
                let Some(value) = row.value(metric) else {
                    best = None;
                    break;
                };
                match best {
                    Some((_, top)) if value <= top => {}
                    _ => best = Some((idx, value)),
                }
            }
            let Some((idx, mean)) = best else { continue };
            let samples: Vec<f64> = results
                .iter()
                .filter_map(|g| metric.of(&g.reports[idx]))
                .collect();
            entries.push(BestEntry {
                kind: kind.to_string(),
                metric: metric.as_str().to_string(),
                l,
                alpha: rows[idx].alpha,
                beta: rows[idx].beta,
                mean,
                stderr: standard_error(&samples),
            });
        }
    }
    entries
}

fn standard_error(samples: &[f64]) -> f64 {
    let n = samples.len();
    if n < 2 {
        return 0.0;
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / (n - 1) as f64;
    (var / n as f64).sqrt()
}

#[derive(Debug, Clone, Serialize)]
struct SummaryFile {
    seeds: Vec<u64>,
    list_lengths: Vec<usize>,
    auc_samples: u64,
    best: Vec<BestEntry>,
}

#[derive(Debug, Clone, Serialize)]
struct AnalysisEntry {
    kind: String,
    curve_pairs: usize,
    /// Rank correlation between bin influence and bin mean preference,
    /// over non-empty bins.
    curve_bin_spearman: f64,
    ego_center: u64,
    ego_nodes: usize,
    histogram_total: Option<usize>,
    histogram_low_degree_share: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct StatsFile {
    users: usize,
    items: usize,
    ratings: usize,
    social_links: usize,
    rating_sparsity: f64,
    social_sparsity: f64,
    purify: Option<PurifyInfo>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_sha256: String,
    pub source: Source,
    pub network_digest: String,
    pub users: usize,
    pub items: usize,
    pub split_seeds: Vec<u64>,
    pub cache_files: Vec<String>,
    pub outputs: Vec<String>,
}

fn relative_name(path: &Path, base: &Path) -> String {
    path.strip_prefix(base)
        .unwrap_or(path)
        .to_string_lossy()
        .into_owned()
}

pub fn run_experiment(
    config: &ExperimentConfig,
    config_text: &str,
    out_dir: &Path,
) -> Result<Manifest> {
    config.validate()?;
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    let cache_dir = out_dir.join("cache");
    let mut outputs: BTreeSet<String> = BTreeSet::new();
    let mut cache_files: BTreeSet<String> = BTreeSet::new();

    let prepared = prepare_data(config)?;
    let network = &prepared.network;
    let user_id = |u: u32| prepared.user_ids[u as usize];

    // Config copy, byte for byte, so the directory re-runs as-is.
    std::fs::write(out_dir.join("config.toml"), config_text)
        .with_context(|| format!("writing {}", out_dir.join("config.toml").display()))?;
    outputs.insert("config.toml".into());

    let data_stats = stats(network).context("graph-core: dataset stats")?;
    write_json(
        Some(&out_dir.join("stats.json")),
        &StatsFile {
            users: data_stats.user_count,
            items: data_stats.item_count,
            ratings: data_stats.rating_count,
            social_links: data_stats.social_link_count,
            rating_sparsity: data_stats.rating_sparsity,
            social_sparsity: data_stats.social_sparsity,
            purify: prepared.purify_info.clone(),
        },
    )?;
    outputs.insert("stats.json".into());

    // Sweeps: one split per seed, one sweep per (seed, kind). The preference
    // matrix depends only on the split; influence matrices go through the
    // content-addressed cache.
    let grid = config.grid.spec()?;
    let auc_samples = (config.metrics.auc_samples > 0).then_some(config.metrics.auc_samples);
    let mut per_kind: Vec<Vec<GridResult>> =
        config.influence.kinds.iter().map(|_| Vec::new()).collect();
    let mut splits = Vec::new();
    for &seed in &config.split.seeds {
        let split_pair = split(network, config.split.ratio, seed)
            .context("graph-core: behavior split")?;
        let preference = cosine_preference(&split_pair.train);
        for (slot, &kind) in config.influence.kinds.iter().enumerate() {
            let spec = InfluenceSpec {
                kind,
                damping: config.influence.c,
                tol: config.influence.tol,
                max_iters: config.influence.max_iters,
                tanimoto: config.influence.tanimoto,
                transpose: config.influence.transpose,
            };
            let source = influence_with_cache(&split_pair.train, &spec, Some(&cache_dir))?;
            if let Some(file) = &source.cache_file {
                cache_files.insert(relative_name(file, out_dir));
            }
            let sweep_cfg = SweepConfig {
                grid: grid.clone(),
                list_lengths: config.grid.l.clone(),
                kind,
                damping: config.influence.c,
                walk_tol: config.influence.tol,
                walk_max_iters: config.influence.max_iters,
                tanimoto: config.influence.tanimoto,
                transpose_influence: false, // already applied when building the matrix
                auc_samples,
                auc_seed: config.metrics.auc_seed,
                strict_mean_over_all_users: config.metrics.strict_mean,
            };
            let result = csn_core::grid_sweep_with_bases(
                &split_pair,
                &preference,
                &source.matrix,
                &sweep_cfg,
            )
            .with_context(|| format!("evaluation: sweep for {kind} on seed {seed}"))?;
            per_kind[slot].push(result);
        }
        splits.push(split_pair);
    }

    let mut best = Vec::new();
    for (slot, &kind) in config.influence.kinds.iter().enumerate() {
        let results = &per_kind[slot];
        let rows = mean_rows(results)?;
        let name = format!("grid-{kind}.csv");
        let mut w = create_out(&out_dir.join(&name))?;
        write_mean_csv(&mut w, &rows)
            .with_context(|| format!("writing {name}"))?;
        outputs.insert(name);
        best.extend(best_entries(kind.as_str(), &rows, results, &config.grid.l));
    }
    write_json(
        Some(&out_dir.join("summary.json")),
        &SummaryFile {
            seeds: config.split.seeds.clone(),
            list_lengths: config.grid.l.clone(),
            auc_samples: config.metrics.auc_samples,
            best,
        },
    )?;
    outputs.insert("summary.json".into());

    // Empirical analyses run on the full post-purification network; the
    // recommended-degree histogram additionally needs a split and uses the
    // first seed's.
    if config.analysis.enabled {
        let full_preference = cosine_preference(network);
        let first_split = &splits[0];
        let mut entries = Vec::new();
        for &kind in &config.influence.kinds {
            let spec = InfluenceSpec {
                kind,
                damping: config.influence.c,
                tol: config.influence.tol,
                max_iters: config.influence.max_iters,
                tanimoto: config.influence.tanimoto,
                transpose: config.influence.transpose,
            };
            let full = influence_with_cache(network, &spec, Some(&cache_dir))?;
            if let Some(file) = &full.cache_file {
                cache_files.insert(relative_name(file, out_dir));
            }

            let curve = influence_preference_curve(
                &full.matrix,
                &full_preference,
                config.analysis.bins,
            )
            .with_context(|| format!("analysis: influence-preference curve for {kind}"))?;
            let name = format!("curve-{kind}.csv");
            write_curve_csv(create_out(&out_dir.join(&name))?, &curve)
                .with_context(|| format!("writing {name}"))?;
            outputs.insert(name);
            let populated: Vec<&csn_core::CorrelationBin> =
                curve.bins.iter().filter(|b| b.pair_count > 0).collect();
            let centers: Vec<f64> = populated.iter().map(|b| b.influence_center).collect();
            let means: Vec<f64> = populated.iter().map(|b| b.mean_preference).collect();
            let curve_bin_spearman = spearman(&centers, &means);

            let ego = extract_ego(
                network,
                &full.matrix,
                &full_preference,
                config.analysis.node_influence,
            )
            .with_context(|| format!("analysis: ego network for {kind}"))?;
            let name = format!("ego-{kind}.nodes.csv");
            write_ego_csv(create_out(&out_dir.join(&name))?, &ego, user_id)
                .with_context(|| format!("writing {name}"))?;
            outputs.insert(name);
            let name = format!("ego-{kind}.graph.tsv");
            write_ego_graph(create_out(&out_dir.join(&name))?, &ego, user_id)
                .with_context(|| format!("writing {name}"))?;
            outputs.insert(name);

            let train_influence = influence_with_cache(&first_split.train, &spec, Some(&cache_dir))?;
            let train_preference = cosine_preference(&first_split.train);
            let sim = hybrid_similarity(
                &train_preference,
                &train_influence.matrix,
                config.analysis.hist_alpha,
                config.analysis.hist_beta,
            )
            .context("analysis: hybrid similarity for histogram")?;
            let lists = recommend(&first_split.train, &sim, config.analysis.hist_l)
                .context("analysis: recommendation lists for histogram")?;
            let histogram =
                match recommended_degree_histogram(&lists, &first_split.test, &first_split.train) {
                    Ok(h) => Some(h),
                    Err(CsnError::NoRecoveredItems) => None,
                    Err(e) => {
                        return Err(e)
                            .with_context(|| format!("analysis: degree histogram for {kind}"))
                    }
                };
            if let Some(h) = &histogram {
                let name = format!("hist-{kind}.csv");
                write_histogram_csv(create_out(&out_dir.join(&name))?, h)
                    .with_context(|| format!("writing {name}"))?;
                outputs.insert(name);
            }

            entries.push(AnalysisEntry {
                kind: kind.as_str().to_string(),
                curve_pairs: curve.total_pairs,
                curve_bin_spearman,
                ego_center: user_id(ego.center),
                ego_nodes: ego.nodes.len(),
                histogram_total: histogram.as_ref().map(|h| h.total),
                histogram_low_degree_share: histogram.as_ref().map(|h| h.low_degree_share),
            });
        }
        write_json(Some(&out_dir.join("analysis.json")), &entries)?;
        outputs.insert("analysis.json".into());
    }

    outputs.insert("manifest.json".into());
    let manifest = Manifest {
        tool: "csn".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_sha256: sha256_hex(config_text.as_bytes()),
        source: prepared.source.clone(),
        network_digest: network_digest(network),
        users: network.user_count(),
        items: network.item_count(),
        split_seeds: config.split.seeds.clone(),
        cache_files: cache_files.into_iter().collect(),
        outputs: outputs.into_iter().collect(),
    };
    write_json(Some(&out_dir.join("manifest.json")), &manifest)?;
    Ok(manifest)
}

/// Reports from a single-seed sweep flattened for JSON output.
#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub alpha: f64,
    pub beta: f64,
    pub l: usize,
    pub precision: f64,
    pub recall: f64,
    pub fmeasure: f64,
    pub auc: Option<f64>,
}

impl ReportRow {
    pub fn from_report(r: &EvaluationReport) -> Self {
        Self {
            alpha: r.params.alpha,
            beta: r.params.beta,
            l: r.params.list_length,
            precision: r.precision,
            recall: r.recall,
            fmeasure: r.fmeasure,
            auc: r.auc,
        }
    }
}
