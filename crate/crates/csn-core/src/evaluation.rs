//! Evaluation harness: per-user precision/recall/F over top-L lists,
//! sampled AUC over predicted scores, and (alpha, beta) grid sweeps.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CsnError, Result};
use crate::network::{CoupledNetwork, SplitPair};
use crate::recommender::{score_user, top_l, HybridParams, RecommendationList};
use crate::recommender::hybrid_similarity;
use crate::similarity::{
    cosine_preference, lin_influence, lout_influence, rwr_influence, InfluenceKind,
    InfluenceMatrix, PreferenceMatrix, TanimotoForm, DEFAULT_DAMPING, DEFAULT_WALK_MAX_ITERS,
    DEFAULT_WALK_TOL,
};

/// Default number of AUC samples.
pub const DEFAULT_AUC_SAMPLES: u64 = 1_000_000;

/// Held-out items grouped per user, sorted ascending; empty for users with
/// no test pairs.
pub fn test_items_by_user(test: &[(u32, u32)], user_count: usize) -> Vec<Vec<u32>> {
    let mut grouped = vec![Vec::new(); user_count];
    for &(u, it) in test {
        grouped[u as usize].push(it);
    }
    for items in &mut grouped {
        items.sort_unstable();
    }
    grouped
}

/// One user's list-recovery numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UserMetrics {
    pub user: u32,
    /// Items appearing in both the user's list and test set (N_rs).
    pub recovered: usize,
    /// The user's test-set size (N_p).
    pub held_out: usize,
    pub precision: f64,
    pub recall: f64,
    pub fmeasure: f64,
}

fn recovered_count(list: &[(u32, f64)], test_items: &[u32]) -> usize {
    list.iter()
        .filter(|&&(item, _)| test_items.binary_search(&item).is_ok())
        .count()
}

fn user_metrics(user: u32, recovered: usize, held_out: usize, l: usize) -> UserMetrics {
    let precision = recovered as f64 / l as f64;
    let recall = if held_out > 0 {
        recovered as f64 / held_out as f64
    } else {
        0.0
    };
    let fmeasure = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    UserMetrics {
        user,
        recovered,
        held_out,
        precision,
        recall,
        fmeasure,
    }
}

/// Per-user metrics for every user with at least one test item, ascending by
/// user id.
pub fn per_user_metrics(
    lists: &RecommendationList,
    test: &[(u32, u32)],
    l: usize,
) -> Result<Vec<UserMetrics>> {
    if test.is_empty() {
        return Err(CsnError::EmptyTestSet);
    }
    if l == 0 {
        return Err(CsnError::InvalidParameter(
            "list length must be at least 1".into(),
        ));
    }
    let grouped = test_items_by_user(test, lists.lists.len());
    Ok(grouped
        .iter()
        .enumerate()
        .filter(|(_, items)| !items.is_empty())
        .map(|(u, items)| {
            let recovered = recovered_count(&lists.lists[u], items);
            user_metrics(u as u32, recovered, items.len(), l)
        })
        .collect())
}

/// Average precision, recall, and F over users.
///
/// By default only users holding at least one test item count toward the
/// averages; `strict_mean_over_all_users` divides by the full user count
/// instead, with test-less users contributing zero to every metric.
pub fn precision_recall_f(
    lists: &RecommendationList,
    test: &[(u32, u32)],
    l: usize,
    strict_mean_over_all_users: bool,
) -> Result<(f64, f64, f64)> {
    let per_user = per_user_metrics(lists, test, l)?;
    let denom = if strict_mean_over_all_users {
        lists.lists.len()
    } else {
        per_user.len()
    };
    let mut p = 0.0;
    let mut r = 0.0;
    let mut f = 0.0;
    for m in &per_user {
        p += m.precision;
        r += m.recall;
        f += m.fmeasure;
    }
    Ok((p / denom as f64, r / denom as f64, f / denom as f64))
}

/// Pre-drawn AUC sample pairs, grouped per user: (held-out item, negative
/// item) with the negative collected in neither the user's training nor test
/// sets.
#[derive(Debug, Clone)]
pub struct AucSamples {
    per_user: Vec<Vec<(u32, u32)>>,
    total: u64,
}

impl AucSamples {
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn for_user(&self, user: u32) -> &[(u32, u32)] {
        &self.per_user[user as usize]
    }
}

/// Draw `samples` independent (user, test-item, negative-item) triples:
/// a uniform test pair, then a uniform item the user collected in neither
/// split. Test pairs whose user has no eligible negative are redrawn; it is
/// an error if no test pair has one.
pub fn draw_auc_samples(
    train: &CoupledNetwork,
    test: &[(u32, u32)],
    samples: u64,
    seed: u64,
) -> Result<AucSamples> {
    if test.is_empty() {
        return Err(CsnError::EmptyTestSet);
    }
    if samples == 0 {
        return Err(CsnError::InvalidParameter(
            "AUC needs at least one sample".into(),
        ));
    }
    let m = train.user_count();
    let n = train.item_count();
    let test_items = test_items_by_user(test, m);
    let eligible: Vec<usize> = (0..m)
        .map(|u| n - train.items_of(u as u32).len() - test_items[u].len())
        .collect();
    if !test.iter().any(|&(u, _)| eligible[u as usize] > 0) {
        return Err(CsnError::NoEligibleNegative);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut per_user = vec![Vec::new(); m];
    for _ in 0..samples {
        let (u, pos) = loop {
            let (u, pos) = test[rng.random_range(0..test.len())];
            if eligible[u as usize] > 0 {
                break (u, pos);
            }
        };
        let neg = loop {
            let j = rng.random_range(0..n as u32);
            if !train.has_behavior(u, j) && test_items[u as usize].binary_search(&j).is_err() {
                break j;
            }
        };
        per_user[u as usize].push((pos, neg));
    }
    Ok(AucSamples {
        per_user,
        total: samples,
    })
}

/// Count (strictly greater, tied) outcomes for one user's samples under a
/// scoring function.
pub fn auc_counts(samples: &[(u32, u32)], score_of: impl Fn(u32) -> f64) -> (u64, u64) {
    let mut greater = 0;
    let mut ties = 0;
    for &(pos, neg) in samples {
        let sp = score_of(pos);
        let sn = score_of(neg);
        if sp > sn {
            greater += 1;
        } else if sp == sn {
            ties += 1;
        }
    }
    (greater, ties)
}

fn sparse_score(row: &[(u32, f64)], item: u32) -> f64 {
    match row.binary_search_by_key(&item, |&(j, _)| j) {
        Ok(pos) => row[pos].1,
        Err(_) => 0.0,
    }
}

/// Sampled AUC of per-user predicted scores (sparse rows over non-training
/// items; absent items score 0): the probability that a held-out item
/// outscores a random uncollected item, ties counted half.
pub fn auc(
    scores: &[Vec<(u32, f64)>],
    train: &CoupledNetwork,
    test: &[(u32, u32)],
    samples: u64,
    seed: u64,
) -> Result<f64> {
    let drawn = draw_auc_samples(train, test, samples, seed)?;
    let mut greater = 0u64;
    let mut ties = 0u64;
    for (u, row) in scores.iter().enumerate() {
        let (g, t) = auc_counts(drawn.for_user(u as u32), |item| sparse_score(row, item));
        greater += g;
        ties += t;
    }
    Ok((greater as f64 + 0.5 * ties as f64) / drawn.total as f64)
}

/// The exponent lattice swept by [`grid_sweep`]. Both axes always include 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub alpha_values: Vec<f64>,
    pub beta_values: Vec<f64>,
}

fn snap(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

impl GridSpec {
    /// Regular lattice [0, alpha_max] x [0, beta_max] with the given step.
    /// Values are snapped to 9 decimals so grid coordinates print cleanly.
    pub fn lattice(alpha_max: f64, beta_max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(CsnError::InvalidParameter(format!(
                "grid step must be positive and finite, got {step}"
            )));
        }
        if !(alpha_max >= 0.0 && alpha_max.is_finite() && beta_max >= 0.0 && beta_max.is_finite())
        {
            return Err(CsnError::InvalidParameter(format!(
                "grid maxima must be non-negative and finite, got ({alpha_max}, {beta_max})"
            )));
        }
        let axis = |max: f64| -> Vec<f64> {
            let k = ((max + 1e-9) / step).floor() as usize;
            (0..=k).map(|i| snap(i as f64 * step)).collect()
        };
        Ok(Self {
            alpha_values: axis(alpha_max),
            beta_values: axis(beta_max),
        })
    }

    /// Explicit value lists; both must contain 0 so the pure-preference and
    /// pure-influence axes stay comparable.
    pub fn from_values(alpha_values: Vec<f64>, beta_values: Vec<f64>) -> Result<Self> {
        for axis in [&alpha_values, &beta_values] {
            if axis.is_empty() {
                return Err(CsnError::InvalidParameter("empty grid axis".into()));
            }
            if axis.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return Err(CsnError::InvalidParameter(
                    "grid values must be non-negative and finite".into(),
                ));
            }
            if !axis.contains(&0.0) {
                return Err(CsnError::InvalidParameter(
                    "each grid axis must include 0".into(),
                ));
            }
        }
        Ok(Self {
            alpha_values,
            beta_values,
        })
    }

    pub fn point_count(&self) -> usize {
        self.alpha_values.len() * self.beta_values.len()
    }
}

impl Default for GridSpec {
    /// The paper-scale default: [0, 4] x [0, 4], step 0.2.
    fn default() -> Self {
        Self::lattice(4.0, 4.0, 0.2).expect("valid default lattice")
    }
}

/// Everything a sweep needs besides the split itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub grid: GridSpec,
    pub list_lengths: Vec<usize>,
    pub kind: InfluenceKind,
    /// Walk continuation probability (used when `kind` is the walk).
    pub damping: f64,
    pub walk_tol: f64,
    pub walk_max_iters: usize,
    pub tanimoto: TanimotoForm,
    /// Score user u with column u of the influence matrix instead of row u.
    pub transpose_influence: bool,
    /// `None` skips AUC entirely.
    pub auc_samples: Option<u64>,
    pub auc_seed: u64,
    pub strict_mean_over_all_users: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            list_lengths: vec![10, 20, 50],
            kind: InfluenceKind::Rwr,
            damping: DEFAULT_DAMPING,
            walk_tol: DEFAULT_WALK_TOL,
            walk_max_iters: DEFAULT_WALK_MAX_ITERS,
            tanimoto: TanimotoForm::default(),
            transpose_influence: false,
            auc_samples: Some(DEFAULT_AUC_SAMPLES),
            auc_seed: 0,
            strict_mean_over_all_users: false,
        }
    }
}

/// Metrics at one (alpha, beta, L) point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub params: HybridParams,
    pub precision: f64,
    pub recall: f64,
    pub fmeasure: f64,
    /// Absent when AUC sampling was disabled. Independent of L.
    pub auc: Option<f64>,
    /// The split seed this report was measured on.
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Precision,
    Recall,
    FMeasure,
    Auc,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] = [
        MetricKind::Precision,
        MetricKind::Recall,
        MetricKind::FMeasure,
        MetricKind::Auc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::Precision => "precision",
            MetricKind::Recall => "recall",
            MetricKind::FMeasure => "fmeasure",
            MetricKind::Auc => "auc",
        }
    }

    pub fn of(self, report: &EvaluationReport) -> Option<f64> {
        match self {
            MetricKind::Precision => Some(report.precision),
            MetricKind::Recall => Some(report.recall),
            MetricKind::FMeasure => Some(report.fmeasure),
            MetricKind::Auc => report.auc,
        }
    }
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A full sweep: one report per (alpha, beta, L), in alpha-major, then beta,
/// then L order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridResult {
    pub grid: GridSpec,
    pub list_lengths: Vec<usize>,
    pub kind: InfluenceKind,
    pub reports: Vec<EvaluationReport>,
    pub split_seed: u64,
}

impl GridResult {
    /// Best report for a metric at list length `l`; ties keep the first
    /// point in grid order. `None` when the metric was not computed.
    pub fn argmax(&self, metric: MetricKind, l: usize) -> Option<&EvaluationReport> {
        let mut best: Option<(&EvaluationReport, f64)> = None;
        for report in self
            .reports
            .iter()
            .filter(|r| r.params.list_length == l)
        {
            let value = metric.of(report)?;
            match best {
                Some((_, best_value)) if value <= best_value => {}
                _ => best = Some((report, value)),
            }
        }
        best.map(|(r, _)| r)
    }

    /// Plot-ready CSV: `alpha,beta,L,metric,value`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "alpha,beta,L,metric,value")?;
        for r in &self.reports {
            let mut emit = |metric: MetricKind, value: f64| {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    r.params.alpha, r.params.beta, r.params.list_length, metric, value
                )
            };
            emit(MetricKind::Precision, r.precision)?;
            emit(MetricKind::Recall, r.recall)?;
            emit(MetricKind::FMeasure, r.fmeasure)?;
            if let Some(a) = r.auc {
                emit(MetricKind::Auc, a)?;
            }
        }
        Ok(())
    }
}

/// Build the influence matrix a sweep config asks for.
pub fn influence_for(net: &CoupledNetwork, cfg: &SweepConfig) -> Result<InfluenceMatrix> {
    let base = match cfg.kind {
        InfluenceKind::Rwr => rwr_influence(net, cfg.damping, cfg.walk_tol, cfg.walk_max_iters)?,
        InfluenceKind::Lin => lin_influence(net, cfg.tanimoto),
        InfluenceKind::Lout => lout_influence(net, cfg.tanimoto),
    };
    Ok(if cfg.transpose_influence {
        base.transposed()
    } else {
        base
    })
}

/// Evaluate one (alpha, beta) point: one report per list length, all sharing
/// the point's AUC when samples are given.
pub fn evaluate_point(
    split: &SplitPair,
    preference: &PreferenceMatrix,
    influence: &InfluenceMatrix,
    alpha: f64,
    beta: f64,
    list_lengths: &[usize],
    samples: Option<&AucSamples>,
    strict_mean_over_all_users: bool,
) -> Result<Vec<EvaluationReport>> {
    if split.test.is_empty() {
        return Err(CsnError::EmptyTestSet);
    }
    if list_lengths.is_empty() || list_lengths.contains(&0) {
        return Err(CsnError::InvalidParameter(
            "list lengths must be non-empty and positive".into(),
        ));
    }
    let train = &split.train;
    let m = train.user_count();
    let sim = hybrid_similarity(preference, influence, alpha, beta)?;
    let test_items = test_items_by_user(&split.test, m);

    struct UserOutcome {
        recovered: Vec<usize>,
        held_out: usize,
        auc_greater: u64,
        auc_ties: u64,
    }

    let outcomes: Vec<UserOutcome> = (0..m as u32)
        .into_par_iter()
        .map(|u| {
            let candidates = score_user(train, &sim, u);
            let held = &test_items[u as usize];
            let recovered = list_lengths
                .iter()
                .map(|&l| recovered_count(&top_l(&candidates, l), held))
                .collect();
            let (auc_greater, auc_ties) = match samples {
                Some(s) => auc_counts(s.for_user(u), |item| sparse_score(&candidates, item)),
                None => (0, 0),
            };
            UserOutcome {
                recovered,
                held_out: held.len(),
                auc_greater,
                auc_ties,
            }
        })
        .collect();

    let point_auc = samples.map(|s| {
        let greater: u64 = outcomes.iter().map(|o| o.auc_greater).sum();
        let ties: u64 = outcomes.iter().map(|o| o.auc_ties).sum();
        (greater as f64 + 0.5 * ties as f64) / s.total() as f64
    });

    let counted = outcomes.iter().filter(|o| o.held_out > 0).count();
    let denom = if strict_mean_over_all_users { m } else { counted } as f64;

    let reports = list_lengths
        .iter()
        .enumerate()
        .map(|(li, &l)| {
            let mut p = 0.0;
            let mut r = 0.0;
            let mut f = 0.0;
            for (u, o) in outcomes.iter().enumerate() {
                if o.held_out == 0 {
                    continue;
                }
                let um = user_metrics(u as u32, o.recovered[li], o.held_out, l);
                p += um.precision;
                r += um.recall;
                f += um.fmeasure;
            }
            EvaluationReport {
                params: HybridParams {
                    alpha,
                    beta,
                    kind: influence.kind,
                    damping: influence.damping,
                    list_length: l,
                },
                precision: p / denom,
                recall: r / denom,
                fmeasure: f / denom,
                auc: point_auc,
                seed: split.seed,
            }
        })
        .collect();
    Ok(reports)
}

/// Sweep the whole exponent grid against precomputed base matrices.
///
/// AUC samples are drawn once from the sweep's seed and shared by every grid
/// point, so points differ only in scoring.
pub fn grid_sweep_with_bases(
    split: &SplitPair,
    preference: &PreferenceMatrix,
    influence: &InfluenceMatrix,
    cfg: &SweepConfig,
) -> Result<GridResult> {
    let samples = match cfg.auc_samples {
        Some(n) => Some(draw_auc_samples(
            &split.train,
            &split.test,
            n,
            cfg.auc_seed,
        )?),
        None => None,
    };
    let mut reports = Vec::with_capacity(cfg.grid.point_count() * cfg.list_lengths.len());
    for &alpha in &cfg.grid.alpha_values {
        for &beta in &cfg.grid.beta_values {
            reports.extend(evaluate_point(
                split,
                preference,
                influence,
                alpha,
                beta,
                &cfg.list_lengths,
                samples.as_ref(),
                cfg.strict_mean_over_all_users,
            )?);
        }
    }
    Ok(GridResult {
        grid: cfg.grid.clone(),
        list_lengths: cfg.list_lengths.clone(),
        kind: cfg.kind,
        reports,
        split_seed: split.seed,
    })
}

/// Compute the base similarity matrices from the training network, then
/// sweep the grid.
pub fn grid_sweep(split: &SplitPair, cfg: &SweepConfig) -> Result<GridResult> {
    let preference = cosine_preference(&split.train);
    let influence = influence_for(&split.train, cfg)?;
    grid_sweep_with_bases(split, &preference, &influence, cfg)
}
