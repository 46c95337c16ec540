//! Nonlinear fusion of preference and influence, and top-L user-based
//! collaborative filtering on the fused similarity.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CsnError, Result};
use crate::network::CoupledNetwork;
use crate::pairs::PairScores;
use crate::similarity::{InfluenceKind, InfluenceMatrix, PreferenceMatrix};

/// One point in the hybrid parameter space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridParams {
    /// Exponent on preference.
    pub alpha: f64,
    /// Exponent on influence.
    pub beta: f64,
    pub kind: InfluenceKind,
    /// Walk continuation probability when `kind` is the walk.
    pub damping: Option<f64>,
    /// Recommendation list length L.
    pub list_length: usize,
}

impl HybridParams {
    pub fn validate(&self) -> Result<()> {
        check_exponents(self.alpha, self.beta)?;
        if self.list_length == 0 {
            return Err(CsnError::InvalidParameter(
                "list length must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

fn check_exponents(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha >= 0.0 && alpha.is_finite()) || !(beta >= 0.0 && beta.is_finite()) {
        return Err(CsnError::InvalidParameter(format!(
            "exponents must be finite and non-negative, got alpha = {alpha}, beta = {beta}"
        )));
    }
    Ok(())
}

/// Fused user-pair similarity S_ij = p_ij^alpha * s_ij^beta.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub alpha: f64,
    pub beta: f64,
    pub scores: PairScores,
}

/// Blend preference and influence with the convention x^0 = 1 (0^0
/// included), so alpha = 0 reduces to pure influence and beta = 0 to pure
/// preference. With both exponents zero every pair scores 1.
pub fn hybrid_similarity(
    preference: &PreferenceMatrix,
    influence: &InfluenceMatrix,
    alpha: f64,
    beta: f64,
) -> Result<SimilarityMatrix> {
    check_exponents(alpha, beta)?;
    let m = preference.scores.user_count();
    if influence.scores.user_count() != m {
        return Err(CsnError::InvalidParameter(format!(
            "preference covers {m} users but influence covers {}",
            influence.scores.user_count()
        )));
    }
    let rows: Vec<Vec<(u32, f64)>> = match (alpha > 0.0, beta > 0.0) {
        // zero pairs on either side annihilate: walk the support intersection
        (true, true) => (0..m as u32)
            .into_par_iter()
            .map(|i| {
                let p_row = preference.scores.row(i);
                let s_row = influence.scores.row(i);
                let mut row = Vec::new();
                let (mut a, mut b) = (0, 0);
                while a < p_row.len() && b < s_row.len() {
                    let (pj, pv) = p_row[a];
                    let (sj, sv) = s_row[b];
                    match pj.cmp(&sj) {
                        std::cmp::Ordering::Less => a += 1,
                        std::cmp::Ordering::Greater => b += 1,
                        std::cmp::Ordering::Equal => {
                            row.push((pj, pv.powf(alpha) * sv.powf(beta)));
                            a += 1;
                            b += 1;
                        }
                    }
                }
                row
            })
            .collect(),
        (true, false) => (0..m as u32)
            .into_par_iter()
            .map(|i| {
                preference.scores.row(i)
                    .iter()
                    .map(|&(j, v)| (j, v.powf(alpha)))
                    .collect()
            })
            .collect(),
        (false, true) => (0..m as u32)
            .into_par_iter()
            .map(|i| {
                influence.scores.row(i)
                    .iter()
                    .map(|&(j, v)| (j, v.powf(beta)))
                    .collect()
            })
            .collect(),
        (false, false) => (0..m as u32)
            .map(|_| (0..m as u32).map(|j| (j, 1.0)).collect())
            .collect(),
    };
    Ok(SimilarityMatrix {
        alpha,
        beta,
        scores: PairScores::from_rows(rows),
    })
}

/// Top-L lists for every user, plus how many lists came out empty.
#[derive(Debug, Clone, PartialEq)]
pub struct RecommendationList {
    /// Per user: up to L (item, score) pairs, scores non-increasing, ties by
    /// ascending item id.
    pub lists: Vec<Vec<(u32, f64)>>,
    /// Users whose every candidate scored zero (no positive-similarity
    /// neighbor contributed an uncollected item).
    pub empty_list_users: usize,
}

impl RecommendationList {
    pub fn list(&self, user: u32) -> &[(u32, f64)] {
        &self.lists[user as usize]
    }

    /// Write "user<TAB>rank<TAB>item<TAB>score" lines, rank starting at 1.
    pub fn write_tsv<W: Write>(
        &self,
        mut w: W,
        user_id_of: impl Fn(u32) -> u64,
        item_id_of: impl Fn(u32) -> u64,
    ) -> io::Result<()> {
        for (u, list) in self.lists.iter().enumerate() {
            for (rank, &(item, score)) in list.iter().enumerate() {
                writeln!(
                    w,
                    "{}\t{}\t{}\t{}",
                    user_id_of(u as u32),
                    rank + 1,
                    item_id_of(item),
                    score
                )?;
            }
        }
        Ok(())
    }
}

/// Predicted score of every candidate item for one user: v_uj = sum over
/// other users l of S_ul * R_lj. Returns positive-scored items the user has
/// not collected in training, ascending by item id.
pub fn score_user(net: &CoupledNetwork, sim: &SimilarityMatrix, user: u32) -> Vec<(u32, f64)> {
    let mut scores = vec![0.0f64; net.item_count()];
    let mut touched: Vec<u32> = Vec::new();
    for &(l, weight) in sim.scores.row(user) {
        if l == user || weight <= 0.0 {
            continue;
        }
        for &j in net.items_of(l) {
            if scores[j as usize] == 0.0 {
                touched.push(j);
            }
            scores[j as usize] += weight;
        }
    }
    touched.sort_unstable();
    touched
        .iter()
        .filter(|&&j| !net.has_behavior(user, j))
        .map(|&j| (j, scores[j as usize]))
        .filter(|&(_, v)| v > 0.0)
        .collect()
}

/// The L best-scored entries of one user's candidate scores.
pub fn top_l(candidates: &[(u32, f64)], l: usize) -> Vec<(u32, f64)> {
    let mut ranked = candidates.to_vec();
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("scores are finite")
            .then(a.0.cmp(&b.0))
    });
    ranked.truncate(l);
    ranked
}

/// User-based CF over the fused similarity: score candidates for every user
/// and keep each user's top L. Deterministic for fixed inputs.
pub fn recommend(
    net: &CoupledNetwork,
    sim: &SimilarityMatrix,
    l: usize,
) -> Result<RecommendationList> {
    if l == 0 {
        return Err(CsnError::InvalidParameter(
            "list length must be at least 1".into(),
        ));
    }
    if sim.scores.user_count() != net.user_count() {
        return Err(CsnError::InvalidParameter(format!(
            "similarity covers {} users but the network has {}",
            sim.scores.user_count(),
            net.user_count()
        )));
    }
    let lists: Vec<Vec<(u32, f64)>> = (0..net.user_count() as u32)
        .into_par_iter()
        .map(|u| top_l(&score_user(net, sim, u), l))
        .collect();
    let empty_list_users = lists.iter().filter(|list| list.is_empty()).count();
    Ok(RecommendationList {
        lists,
        empty_list_users,
    })
}
