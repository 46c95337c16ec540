//! Acceptance suite: one test per numbered criterion, each printing a
//! `criterion N: PASS` / `FAIL` line (visible with `--nocapture`). The
//! checks exercise the public library API and the `csn` binary the way a
//! release gate would: independent oracles for the numerics, ensemble
//! statistics for the qualitative claims, and byte-level comparison for
//! determinism.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use csn_core::{
    auc, cosine_preference, generate, grid_sweep_with_bases, hybrid_similarity, lin_influence,
    load_network, lout_influence, per_user_metrics, precision_recall_f, purify, recommend,
    recommended_degree_histogram, rwr_influence, split, CoupledNetwork, GridSpec, InfluenceKind,
    InfluenceMatrix, PairScores, PreferenceMatrix, PurifyThresholds, RecommendationList,
    SimilarityMatrix, SplitPair, SweepConfig, SynthConfig, TanimotoForm,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

macro_rules! verify {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err(format!($($arg)+));
        }
    };
}

fn report(n: usize, name: &str, result: Result<(), String>) {
    match &result {
        Ok(()) => println!("criterion {n}: PASS — {name}"),
        Err(msg) => println!("criterion {n}: FAIL — {name}: {msg}"),
    }
    if let Err(msg) = result {
        panic!("criterion {n} failed: {msg}");
    }
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random digraph where every node has at least one out-link (the shape
/// purification guarantees), as a plain edge list.
fn random_digraph(rng: &mut ChaCha8Rng, users: usize, max_out: usize) -> Vec<(u32, u32)> {
    let mut edges = Vec::new();
    for i in 0..users {
        let cap = max_out.min(users - 1).max(1);
        let degree = rng.random_range(1..=cap);
        for pick in rand::seq::index::sample(rng, users - 1, degree) {
            let target = if pick < i { pick } else { pick + 1 };
            edges.push((i as u32, target as u32));
        }
    }
    edges
}

fn random_behavior(
    rng: &mut ChaCha8Rng,
    users: usize,
    items: usize,
    max_per_user: usize,
) -> Vec<(u32, u32)> {
    let mut edges = Vec::new();
    for u in 0..users {
        let count = rng.random_range(0..=max_per_user.min(items));
        for item in rand::seq::index::sample(rng, items, count) {
            edges.push((u as u32, item as u32));
        }
    }
    edges
}

// ---------------------------------------------------------------------------
// criterion 1: iterative walk vs. a dense direct solve

/// Solve (I - cW) x = (1-c) e_i for every restart node i by Gaussian
/// elimination with partial pivoting; returns x[node][restart].
fn dense_walk_oracle(users: usize, edges: &[(u32, u32)], c: f64) -> Vec<Vec<f64>> {
    let mut out_degree = vec![0usize; users];
    for &(from, _) in edges {
        out_degree[from as usize] += 1;
    }
    let mut a = vec![vec![0.0f64; users]; users];
    for &(from, to) in edges {
        a[to as usize][from as usize] -= c / out_degree[from as usize] as f64;
    }
    for d in 0..users {
        a[d][d] += 1.0;
    }
    let mut b = vec![vec![0.0f64; users]; users];
    for d in 0..users {
        b[d][d] = 1.0 - c;
    }
    for col in 0..users {
        let pivot = (col..users)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let pivot_value = a[col][col];
        for row in col + 1..users {
            let factor = a[row][col] / pivot_value;
            if factor == 0.0 {
                continue;
            }
            for k in col..users {
                a[row][k] -= factor * a[col][k];
            }
            for k in 0..users {
                b[row][k] -= factor * b[col][k];
            }
        }
    }
    for col in (0..users).rev() {
        for k in 0..users {
            let mut value = b[col][k];
            for j in col + 1..users {
                value -= a[col][j] * b[j][k];
            }
            b[col][k] = value / a[col][col];
        }
    }
    b
}

#[test]
fn criterion_1_walk_matches_dense_solve() {
    let started = Instant::now();
    let result = (|| -> Result<(), String> {
        let dampings = [0.3, 0.5, 0.85];
        for graph_index in 0..50u64 {
            let mut rng = rng_for(1000 + graph_index);
            let users = rng.random_range(5..=200);
            let edges = random_digraph(&mut rng, users, 6);
            let c = dampings[graph_index as usize % dampings.len()];
            let net = CoupledNetwork::from_edges(users, 1, &edges, &[])
                .map_err(|e| format!("building graph {graph_index}: {e}"))?;
            let walk = rwr_influence(&net, c, 1e-10, 10_000)
                .map_err(|e| format!("walk on graph {graph_index}: {e}"))?;
            let oracle = dense_walk_oracle(users, &edges, c);

            let mut max_diff = 0.0f64;
            for i in 0..users as u32 {
                for node in 0..users as u32 {
                    let direct = oracle[node as usize][i as usize];
                    let diff = (walk.scores.get(i, node) - direct).abs();
                    max_diff = max_diff.max(diff);
                }
                let sum: f64 = walk.scores.row(i).iter().map(|&(_, v)| v).sum();
                verify!(
                    (sum - 1.0).abs() <= 1e-9,
                    "graph {graph_index} (m={users}, c={c}): vector {i} sums to {sum}"
                );
                let oracle_sum: f64 = oracle.iter().map(|row| row[i as usize]).sum();
                verify!(
                    (oracle_sum - 1.0).abs() <= 1e-9,
                    "graph {graph_index}: oracle column {i} sums to {oracle_sum}"
                );
            }
            verify!(
                max_diff <= 1e-8,
                "graph {graph_index} (m={users}, c={c}): max deviation {max_diff:.3e}"
            );
        }
        let elapsed = started.elapsed();
        verify!(
            elapsed.as_secs() < 60,
            "took {elapsed:?}, budget is one minute"
        );
        Ok(())
    })();
    report(
        1,
        &format!(
            "iterative walk matches dense solve on 50 graphs ({:.1?})",
            started.elapsed()
        ),
        result,
    );
}

// ---------------------------------------------------------------------------
// criterion 2: precision/recall/F identities against a recount oracle

fn random_similarity(rng: &mut ChaCha8Rng, users: usize) -> SimilarityMatrix {
    let mut rows = Vec::with_capacity(users);
    for _ in 0..users {
        let mut row = Vec::new();
        for j in 0..users as u32 {
            if rng.random_bool(0.4) {
                row.push((j, rng.random_range(0.01..1.0f64)));
            }
        }
        rows.push(row);
    }
    SimilarityMatrix {
        alpha: 1.0,
        beta: 1.0,
        scores: PairScores::from_rows(rows),
    }
}

#[test]
fn criterion_2_metric_identities() {
    let result = (|| -> Result<(), String> {
        for instance in 0..100u64 {
            let mut rng = rng_for(2000 + instance);
            let users = rng.random_range(5..=30);
            let items = rng.random_range(8..=40);
            let train = random_behavior(&mut rng, users, items, items.min(8).saturating_sub(2));
            let net = CoupledNetwork::from_edges(users, items, &[], &train)
                .map_err(|e| format!("instance {instance}: {e}"))?;

            let mut test: Vec<(u32, u32)> = Vec::new();
            for u in 0..users as u32 {
                let owned: BTreeSet<u32> = net.items_of(u).iter().copied().collect();
                let free: Vec<u32> =
                    (0..items as u32).filter(|i| !owned.contains(i)).collect();
                let take = rng.random_range(0..=free.len().min(3));
                for idx in rand::seq::index::sample(&mut rng, free.len(), take) {
                    test.push((u, free[idx]));
                }
            }
            if test.is_empty() {
                let free = (0..items as u32)
                    .find(|i| !net.items_of(0).contains(i))
                    .ok_or_else(|| format!("instance {instance}: no free item"))?;
                test.push((0, free));
            }
            test.sort_unstable();

            let l = rng.random_range(1..=12);
            let sim = random_similarity(&mut rng, users);
            let lists = recommend(&net, &sim, l).map_err(|e| format!("{e}"))?;
            let per_user =
                per_user_metrics(&lists, &test, l).map_err(|e| format!("{e}"))?;

            // Recount everything from the raw lists and test pairs.
            let mut seen_users = BTreeSet::new();
            for m in &per_user {
                seen_users.insert(m.user);
                let test_items: BTreeSet<u32> = test
                    .iter()
                    .filter(|&&(u, _)| u == m.user)
                    .map(|&(_, i)| i)
                    .collect();
                let list_items: BTreeSet<u32> =
                    lists.list(m.user).iter().map(|&(i, _)| i).collect();
                let recovered = list_items.intersection(&test_items).count();
                verify!(
                    m.recovered == recovered && m.held_out == test_items.len(),
                    "instance {instance} user {}: counted {recovered}/{} vs reported {}/{}",
                    m.user,
                    test_items.len(),
                    m.recovered,
                    m.held_out
                );
                let precision = recovered as f64 / l as f64;
                let recall = recovered as f64 / test_items.len() as f64;
                let fmeasure = if precision + recall > 0.0 {
                    2.0 * precision * recall / (precision + recall)
                } else {
                    0.0
                };
                verify!(
                    m.precision == precision && m.recall == recall && m.fmeasure == fmeasure,
                    "instance {instance} user {}: metric identity broken",
                    m.user
                );
            }
            let expected_users: BTreeSet<u32> = test.iter().map(|&(u, _)| u).collect();
            verify!(
                seen_users == expected_users,
                "instance {instance}: metrics cover {seen_users:?}, test covers {expected_users:?}"
            );

            let (p, r, f) =
                precision_recall_f(&lists, &test, l, false).map_err(|e| format!("{e}"))?;
            let mut sp = 0.0;
            let mut sr = 0.0;
            let mut sf = 0.0;
            for m in &per_user {
                sp += m.precision;
                sr += m.recall;
                sf += m.fmeasure;
            }
            let n = per_user.len() as f64;
            verify!(
                p == sp / n && r == sr / n && f == sf / n,
                "instance {instance}: system averages differ from recount"
            );

            let (p_strict, ..) =
                precision_recall_f(&lists, &test, l, true).map_err(|e| format!("{e}"))?;
            verify!(
                p_strict == sp / users as f64,
                "instance {instance}: strict average differs from recount"
            );
        }
        Ok(())
    })();
    report(2, "list metrics match a from-scratch recount on 100 instances", result);
}

// ---------------------------------------------------------------------------
// criterion 3: ranking-metric calibration

#[test]
fn criterion_3_auc_calibration() {
    let started = Instant::now();
    let result = (|| -> Result<(), String> {
        // Small instance with a known test set.
        let mut rng = rng_for(31);
        let users = 40;
        let items = 60;
        let mut train = Vec::new();
        let mut test = Vec::new();
        for u in 0..users as u32 {
            let picks = rand::seq::index::sample(&mut rng, items, 12);
            for (slot, item) in picks.iter().enumerate() {
                if slot < 8 {
                    train.push((u, item as u32));
                } else {
                    test.push((u, item as u32));
                }
            }
        }
        test.sort_unstable();
        let net = CoupledNetwork::from_edges(users, items, &[], &train)
            .map_err(|e| format!("{e}"))?;

        let row_of = |wanted: &dyn Fn(u32, u32) -> Option<f64>| -> Vec<Vec<(u32, f64)>> {
            (0..users as u32)
                .map(|u| {
                    (0..items as u32)
                        .filter_map(|i| wanted(u, i).map(|v| (i, v)))
                        .collect()
                })
                .collect()
        };
        let in_test = |u: u32, i: u32| test.binary_search(&(u, i)).is_ok();

        let perfect = row_of(&|u, i| in_test(u, i).then_some(1.0));
        let value = auc(&perfect, &net, &test, 50_000, 3).map_err(|e| format!("{e}"))?;
        verify!(value == 1.0, "perfect scorer gave {value}");

        let inverted = row_of(&|u, i| {
            (!in_test(u, i) && !net.has_behavior(u, i)).then_some(1.0)
        });
        let value = auc(&inverted, &net, &test, 50_000, 4).map_err(|e| format!("{e}"))?;
        verify!(value == 0.0, "inverted scorer gave {value}");

        let constant = row_of(&|_, _| None);
        let value = auc(&constant, &net, &test, 50_000, 5).map_err(|e| format!("{e}"))?;
        verify!(value == 0.5, "constant scorer gave {value}, expected exactly 0.5");

        // Large instance so the i.i.d.-random scorer's true value
        // concentrates near one half.
        let mut rng = rng_for(32);
        let users = 300;
        let items = 300;
        let mut train = Vec::new();
        let mut test = Vec::new();
        for u in 0..users as u32 {
            let picks = rand::seq::index::sample(&mut rng, items, 20);
            for (slot, item) in picks.iter().enumerate() {
                if slot < 12 {
                    train.push((u, item as u32));
                } else {
                    test.push((u, item as u32));
                }
            }
        }
        test.sort_unstable();
        let net = CoupledNetwork::from_edges(users, items, &[], &train)
            .map_err(|e| format!("{e}"))?;
        let random_scores: Vec<Vec<(u32, f64)>> = (0..users as u32)
            .map(|u| {
                (0..items as u32)
                    .filter(|&i| !net.has_behavior(u, i))
                    .map(|i| (i, rng.random::<f64>()))
                    .collect()
            })
            .collect();
        let value =
            auc(&random_scores, &net, &test, 100_000, 6).map_err(|e| format!("{e}"))?;
        verify!(
            (value - 0.5).abs() <= 0.01,
            "random scorer gave {value}, expected 0.5 ± 0.01"
        );

        let elapsed = started.elapsed();
        verify!(elapsed.as_secs() < 30, "took {elapsed:?}, budget is seconds");
        Ok(())
    })();
    report(
        3,
        &format!("ranking metric calibrates on known scorers ({:.1?})", started.elapsed()),
        result,
    );
}

// ---------------------------------------------------------------------------
// criterion 4: structural invariants of the overlap similarities

fn assert_unit_interval(matrix: &PairScores, label: &str) -> Result<(), String> {
    for (i, j, v) in matrix.iter() {
        verify!(
            v.is_finite() && (0.0..=1.0).contains(&v),
            "{label}: entry ({i}, {j}) = {v} outside [0, 1]"
        );
    }
    Ok(())
}

#[test]
fn criterion_4_overlap_invariants() {
    let result = (|| -> Result<(), String> {
        for graph_index in 0..200u64 {
            let mut rng = rng_for(4000 + graph_index);
            let users = rng.random_range(4..=40);
            let items = rng.random_range(3..=20);
            let social = random_digraph(&mut rng, users, 5);
            let behavior = random_behavior(&mut rng, users, items, 6);
            let net = CoupledNetwork::from_edges(users, items, &social, &behavior)
                .map_err(|e| format!("{e}"))?;

            let mut symmetric_edges: BTreeSet<(u32, u32)> = BTreeSet::new();
            for &(a, b) in &social {
                symmetric_edges.insert((a, b));
                symmetric_edges.insert((b, a));
            }
            let symmetric_edges: Vec<(u32, u32)> = symmetric_edges.into_iter().collect();
            let symmetric = CoupledNetwork::from_edges(users, items, &symmetric_edges, &[])
                .map_err(|e| format!("{e}"))?;
            let reversed = net.reversed_social();

            // A fixed relabeling of users, applied to the social layer.
            let mut relabel: Vec<u32> = (0..users as u32).collect();
            relabel.shuffle(&mut rng);
            let permuted_edges: Vec<(u32, u32)> = social
                .iter()
                .map(|&(a, b)| (relabel[a as usize], relabel[b as usize]))
                .collect();
            let permuted = CoupledNetwork::from_edges(users, items, &permuted_edges, &[])
                .map_err(|e| format!("{e}"))?;

            for form in [TanimotoForm::Rooted, TanimotoForm::Classic] {
                let fan_in = lin_influence(&net, form);
                let fan_out = lout_influence(&net, form);
                assert_unit_interval(&fan_in.scores, "in-overlap")?;
                assert_unit_interval(&fan_out.scores, "out-overlap")?;

                let sym_in = lin_influence(&symmetric, form);
                let sym_out = lout_influence(&symmetric, form);
                verify!(
                    sym_in.scores == sym_out.scores,
                    "graph {graph_index} ({form:?}): in/out overlap differ on a symmetric graph"
                );

                let reversed_in = lin_influence(&reversed, form);
                verify!(
                    reversed_in.scores == fan_out.scores,
                    "graph {graph_index} ({form:?}): out-overlap is not in-overlap of the reverse"
                );

                let permuted_in = lin_influence(&permuted, form);
                verify!(
                    permuted_in.scores.stored_pairs() == fan_in.scores.stored_pairs(),
                    "graph {graph_index} ({form:?}): relabeling changed the support size"
                );
                for (i, j, v) in fan_in.scores.iter() {
                    let moved = permuted_in.scores.get(relabel[i as usize], relabel[j as usize]);
                    verify!(
                        moved == v,
                        "graph {graph_index} ({form:?}): entry ({i}, {j}) moved from {v} to {moved}"
                    );
                }
            }

            // The walk and the taste overlap obey the same bounds; the walk
            // is only label-equivariant up to float rounding, so it gets a
            // tolerance.
            let walk = rwr_influence(&net, 0.85, 1e-10, 10_000).map_err(|e| format!("{e}"))?;
            assert_unit_interval(&walk.scores, "walk")?;
            assert_unit_interval(&cosine_preference(&net).scores, "preference")?;
            let permuted_walk =
                rwr_influence(&permuted, 0.85, 1e-10, 10_000).map_err(|e| format!("{e}"))?;
            for (i, j, v) in walk.scores.iter() {
                let moved = permuted_walk.scores.get(relabel[i as usize], relabel[j as usize]);
                verify!(
                    (moved - v).abs() <= 1e-9,
                    "graph {graph_index}: walk entry ({i}, {j}) moved from {v} to {moved}"
                );
            }
        }
        Ok(())
    })();
    report(4, "overlap similarities keep their structural invariants on 200 graphs", result);
}

// ---------------------------------------------------------------------------
// criterion 5: pair ordering is invariant under exponent scaling

#[test]
fn criterion_5_exponent_scaling_order() {
    let result = (|| -> Result<(), String> {
        for instance in 0..30u64 {
            let mut rng = rng_for(5000 + instance);
            let users = rng.random_range(8..=40);
            let items = rng.random_range(10..=30);
            let social = random_digraph(&mut rng, users, 5);
            let behavior = random_behavior(&mut rng, users, items, 8);
            let net = CoupledNetwork::from_edges(users, items, &social, &behavior)
                .map_err(|e| format!("{e}"))?;
            let preference = cosine_preference(&net);
            let influence = lout_influence(&net, TanimotoForm::Rooted);
            let alpha = rng.random_range(0.2..3.0);
            let beta = rng.random_range(0.2..3.0);
            let base = hybrid_similarity(&preference, &influence, alpha, beta)
                .map_err(|e| format!("{e}"))?;

            for k in [0.5, 2.0, 3.0] {
                let scaled =
                    hybrid_similarity(&preference, &influence, k * alpha, k * beta)
                        .map_err(|e| format!("{e}"))?;
                verify!(
                    scaled.scores.stored_pairs() == base.scores.stored_pairs(),
                    "instance {instance} k={k}: support changed under scaling"
                );
                let mut pairs: Vec<(f64, f64)> = base
                    .scores
                    .iter()
                    .map(|(i, j, v)| (v, scaled.scores.get(i, j)))
                    .collect();
                pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
                for window in pairs.windows(2) {
                    let (base_low, scaled_low) = window[0];
                    let (base_high, scaled_high) = window[1];
                    if base_high > base_low {
                        // Strict order must never invert; ties may land
                        // either way.
                        let slack = 1e-12 * scaled_high.max(1.0);
                        verify!(
                            scaled_high >= scaled_low - slack,
                            "instance {instance} k={k}: order inverted \
                             ({base_low} -> {scaled_low}, {base_high} -> {scaled_high})"
                        );
                    }
                }
            }
        }
        Ok(())
    })();
    report(5, "pair ordering survives exponent scaling", result);
}

// ---------------------------------------------------------------------------
// criteria 6 and 7: qualitative claims on a synthetic coupled ensemble

const ENSEMBLE_SEEDS: u64 = 20;
const SPLITS_PER_SEED: usize = 3;

struct SeedData {
    net: CoupledNetwork,
    split: SplitPair,
    preference: PreferenceMatrix,
    walk: InfluenceMatrix,
}

fn split_seeds(seed: u64) -> [u64; SPLITS_PER_SEED] {
    [100 + seed, 1000 + seed, 2000 + seed]
}

fn ensemble() -> &'static Vec<SeedData> {
    static DATA: OnceLock<Vec<SeedData>> = OnceLock::new();
    DATA.get_or_init(|| {
        (1..=ENSEMBLE_SEEDS)
            .map(|seed| {
                // Few followees, each copied from several times: the
                // held-out copy then still leaves shared items behind with
                // its source, so the social term points at users who are
                // genuinely informative. A modest catalog keeps accidental
                // overlap high enough that taste alone cannot tell those
                // sources apart from lookalikes.
                let cfg = SynthConfig {
                    users: 500,
                    items: 300,
                    mean_out_degree: 3,
                    mean_items_per_user: 25,
                    copy_probability: 0.8,
                    seed,
                };
                let net = generate(&cfg).expect("ensemble generation");
                let split = split(&net, 0.9, split_seeds(seed)[0]).expect("ensemble split");
                let preference = cosine_preference(&split.train);
                let walk =
                    rwr_influence(&split.train, 0.85, 1e-10, 10_000).expect("ensemble walk");
                SeedData {
                    net,
                    split,
                    preference,
                    walk,
                }
            })
            .collect()
    })
}

#[test]
fn criterion_6_social_blend_beats_preference_only() {
    let started = Instant::now();
    let result = (|| -> Result<(), String> {
        let cfg = SweepConfig {
            grid: GridSpec::lattice(2.0, 2.0, 0.5).map_err(|e| format!("{e}"))?,
            list_lengths: vec![10],
            kind: InfluenceKind::Rwr,
            auc_samples: None,
            ..SweepConfig::default()
        };
        let mut wins = 0usize;
        let mut margins = Vec::new();
        for (index, data) in ensemble().iter().enumerate() {
            // Precision per grid point, averaged over a few splits of the
            // same network, so each seed contributes one paired, low-noise
            // comparison.
            let mut point_precision: Vec<f64> = Vec::new();
            let mut point_beta: Vec<f64> = Vec::new();
            for (round, &split_seed) in split_seeds(index as u64 + 1).iter().enumerate() {
                let extra;
                let split_data = if round == 0 {
                    (&data.split, &data.preference, &data.walk)
                } else {
                    let pair = split(&data.net, 0.9, split_seed)
                        .map_err(|e| format!("seed {index}: {e}"))?;
                    let preference = cosine_preference(&pair.train);
                    let walk = rwr_influence(&pair.train, 0.85, 1e-10, 10_000)
                        .map_err(|e| format!("seed {index}: {e}"))?;
                    extra = (pair, preference, walk);
                    (&extra.0, &extra.1, &extra.2)
                };
                let sweep =
                    grid_sweep_with_bases(split_data.0, split_data.1, split_data.2, &cfg)
                        .map_err(|e| format!("seed {index}: {e}"))?;
                if round == 0 {
                    point_precision = vec![0.0; sweep.reports.len()];
                    point_beta = sweep.reports.iter().map(|r| r.params.beta).collect();
                }
                for (slot, report) in point_precision.iter_mut().zip(&sweep.reports) {
                    *slot += report.precision;
                }
            }
            let mut best_with_influence = f64::NEG_INFINITY;
            let mut best_without = f64::NEG_INFINITY;
            for (&total, &beta) in point_precision.iter().zip(&point_beta) {
                let slot = if beta > 0.0 {
                    &mut best_with_influence
                } else {
                    &mut best_without
                };
                *slot = slot.max(total / SPLITS_PER_SEED as f64);
            }
            if best_with_influence > best_without {
                wins += 1;
            }
            margins.push(best_with_influence - best_without);
        }
        // One-sided sign test at 20 trials: 15 or more wins rejects the
        // even-odds null at p ≈ 0.021 < 0.05.
        verify!(
            wins >= 15,
            "blending the social layer won only {wins}/{ENSEMBLE_SEEDS} seeds (margins: {margins:?})"
        );
        let elapsed = started.elapsed();
        verify!(
            elapsed.as_secs() < 600,
            "took {elapsed:?}, budget is ten minutes"
        );
        Ok(())
    })();
    report(
        6,
        &format!(
            "best precision with the social term beats the best without it ({:.1?})",
            started.elapsed()
        ),
        result,
    );
}

fn low_degree_share(
    data: &SeedData,
    influence: &InfluenceMatrix,
) -> Result<Option<f64>, String> {
    let sim = hybrid_similarity(&data.preference, influence, 0.0, 1.0)
        .map_err(|e| format!("{e}"))?;
    let lists: RecommendationList =
        recommend(&data.split.train, &sim, 10).map_err(|e| format!("{e}"))?;
    match recommended_degree_histogram(&lists, &data.split.test, &data.split.train) {
        Ok(hist) => Ok(Some(hist.low_degree_share)),
        Err(csn_core::CsnError::NoRecoveredItems) => Ok(None),
        Err(e) => Err(format!("{e}")),
    }
}

#[test]
fn criterion_7_overlap_kinds_favor_cold_items() {
    let result = (|| -> Result<(), String> {
        let mut in_wins = 0usize;
        let mut out_wins = 0usize;
        let mut counted = 0usize;
        for (index, data) in ensemble().iter().enumerate() {
            let fan_in = lin_influence(&data.split.train, TanimotoForm::Rooted);
            let fan_out = lout_influence(&data.split.train, TanimotoForm::Rooted);
            let walk_share = low_degree_share(data, &data.walk)
                .map_err(|e| format!("seed {index}: {e}"))?;
            let in_share = low_degree_share(data, &fan_in)
                .map_err(|e| format!("seed {index}: {e}"))?;
            let out_share = low_degree_share(data, &fan_out)
                .map_err(|e| format!("seed {index}: {e}"))?;
            let (Some(walk_share), Some(in_share), Some(out_share)) =
                (walk_share, in_share, out_share)
            else {
                continue; // a scorer recovered nothing; no comparison possible
            };
            counted += 1;
            if in_share >= walk_share {
                in_wins += 1;
            }
            if out_share >= walk_share {
                out_wins += 1;
            }
        }
        verify!(
            counted >= 15,
            "only {counted}/{ENSEMBLE_SEEDS} seeds produced comparable histograms"
        );
        let need = (counted * 7).div_ceil(10);
        verify!(
            in_wins >= need && out_wins >= need,
            "cold-item share was weakly higher on {in_wins} (in-overlap) and {out_wins} \
             (out-overlap) of {counted} seeds; need {need}"
        );
        Ok(())
    })();
    report(
        7,
        "overlap similarities reach cold items at least as often as the walk",
        result,
    );
}

// ---------------------------------------------------------------------------
// criterion 8: fidelity against the original datasets, when present

struct ReferenceDataset {
    name: &'static str,
    thresholds: PurifyThresholds,
    users: usize,
    items: usize,
    ratings: usize,
    links: usize,
}

fn dataset_dir(name: &str) -> Option<PathBuf> {
    let mut candidates = Vec::new();
    if let Ok(root) = std::env::var("CSN_DATA_DIR") {
        candidates.push(PathBuf::from(root).join(name));
    }
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    candidates.push(manifest.join("../../data").join(name));
    candidates.into_iter().find(|dir| {
        dir.join("social.tsv").is_file()
            && (dir.join("behavior.tsv").is_file() || dir.join("ratings.tsv").is_file())
    })
}

#[test]
fn criterion_8_original_data_fidelity() {
    let references = [
        ReferenceDataset {
            name: "epinions",
            thresholds: PurifyThresholds::epinions(),
            users: 4066,
            items: 7649,
            ratings: 154_122,
            links: 217_071,
        },
        ReferenceDataset {
            name: "friendfeed",
            thresholds: PurifyThresholds::friendfeed(),
            users: 4188,
            items: 5700,
            ratings: 96_942,
            links: 386_804,
        },
    ];
    let available: Vec<(&ReferenceDataset, PathBuf)> = references
        .iter()
        .filter_map(|r| dataset_dir(r.name).map(|dir| (r, dir)))
        .collect();
    if available.is_empty() {
        println!(
            "criterion 8: SKIP — original datasets not found under data/ or CSN_DATA_DIR; \
             purified-size and optimum-fidelity checks need them"
        );
        return;
    }
    let result = (|| -> Result<(), String> {
        for (reference, dir) in &available {
            let behavior = if dir.join("behavior.tsv").is_file() {
                dir.join("behavior.tsv")
            } else {
                dir.join("ratings.tsv")
            };
            let loaded = load_network(&dir.join("social.tsv"), &behavior)
                .map_err(|e| format!("{}: {e}", reference.name))?;
            let outcome = purify(&loaded.network, reference.thresholds)
                .map_err(|e| format!("{}: {e}", reference.name))?;
            let net = &outcome.network;
            verify!(
                net.user_count() == reference.users
                    && net.item_count() == reference.items
                    && net.behavior_edge_count() == reference.ratings
                    && net.social_edge_count() == reference.links,
                "{}: purified to {}/{}/{}/{} (users/items/ratings/links), reference is {}/{}/{}/{}",
                reference.name,
                net.user_count(),
                net.item_count(),
                net.behavior_edge_count(),
                net.social_edge_count(),
                reference.users,
                reference.items,
                reference.ratings,
                reference.links
            );
        }
        if std::env::var("CSN_FULL_GRID").is_err() {
            println!(
                "criterion 8: note — purified sizes verified; the multi-hour grid-optimum \
                 fidelity run is gated behind CSN_FULL_GRID=1"
            );
        }
        Ok(())
    })();
    report(8, "original datasets purify to the reference sizes", result);
}

// ---------------------------------------------------------------------------
// criterion 9: byte-identical end-to-end runs

#[test]
fn criterion_9_byte_identical_runs() {
    let result = (|| -> Result<(), String> {
        let tmp = tempfile::tempdir().map_err(|e| format!("{e}"))?;
        let config = r#"
[synth]
users = 70
items = 50
mean_out_degree = 5
mean_items_per_user = 6
copy_probability = 0.7
seed = 11

[split]
ratio = 0.9
seeds = [1, 2]

[influence]
kinds = ["rwr", "lin"]

[grid]
alpha_max = 0.6
beta_max = 0.6
step = 0.3
l = [10, 20]

[metrics]
auc_samples = 5000

[analysis]
bins = 10

[output]
dir = "first"
"#;
        std::fs::write(tmp.path().join("exp.toml"), config).map_err(|e| format!("{e}"))?;
        for out in ["first", "second"] {
            let status = Command::new(env!("CARGO_BIN_EXE_csn"))
                .current_dir(tmp.path())
                .args(["run", "--config", "exp.toml", "--out", out])
                .status()
                .map_err(|e| format!("spawning csn: {e}"))?;
            verify!(status.success(), "run into {out} failed");
        }
        let manifest: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(tmp.path().join("first/manifest.json"))
                .map_err(|e| format!("{e}"))?,
        )
        .map_err(|e| format!("{e}"))?;
        let outputs = manifest["outputs"]
            .as_array()
            .ok_or("manifest lists no outputs")?;
        verify!(outputs.len() >= 10, "only {} artifacts produced", outputs.len());
        for name in outputs {
            let name = name.as_str().ok_or("non-string output name")?;
            let first = std::fs::read(tmp.path().join("first").join(name))
                .map_err(|e| format!("reading first/{name}: {e}"))?;
            let second = std::fs::read(tmp.path().join("second").join(name))
                .map_err(|e| format!("reading second/{name}: {e}"))?;
            verify!(!first.is_empty(), "{name} is empty");
            verify!(first == second, "{name} differs between identical runs");
        }
        Ok(())
    })();
    report(9, "two identical configured runs produce identical bytes", result);
}
