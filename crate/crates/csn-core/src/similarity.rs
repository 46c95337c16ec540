//! User-pair similarities on the two layers: social influence from the
//! directed social graph (random walk with restart, or common in-/out-link
//! overlap) and personalized preference from co-collected items (cosine).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CsnError, Result};
use crate::network::CoupledNetwork;
use crate::pairs::PairScores;

/// Walk continuation probability used when none is configured.
pub const DEFAULT_DAMPING: f64 = 0.85;
/// Default max-abs convergence tolerance for the walk iteration.
pub const DEFAULT_WALK_TOL: f64 = 1e-10;
/// Default iteration cap for the walk.
pub const DEFAULT_WALK_MAX_ITERS: usize = 10_000;
/// Stationary-vector entries below this are not stored.
pub const WALK_STORE_THRESHOLD: f64 = 1e-12;

/// Which social-influence metric a matrix holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InfluenceKind {
    /// Random walk with restart over out-links.
    Rwr,
    /// Overlap of in-link neighborhoods.
    Lin,
    /// Overlap of out-link neighborhoods.
    Lout,
}

impl InfluenceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            InfluenceKind::Rwr => "rwr",
            InfluenceKind::Lin => "lin",
            InfluenceKind::Lout => "lout",
        }
    }
}

impl std::fmt::Display for InfluenceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for InfluenceKind {
    type Err = CsnError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rwr" => Ok(InfluenceKind::Rwr),
            "lin" => Ok(InfluenceKind::Lin),
            "lout" => Ok(InfluenceKind::Lout),
            other => Err(CsnError::InvalidParameter(format!(
                "unknown influence kind {other:?} (expected rwr, lin, or lout)"
            ))),
        }
    }
}

/// Denominator form for the link-overlap scores.
///
/// `Rooted` divides the common-neighbor count C by `√a + √b − C` (degrees a,
/// b), clamped into [0, 1]: the raw ratio exceeds 1 — or the denominator
/// reaches 0 — exactly when C ≥ (√a + √b)/2, i.e. the shared neighborhood
/// already outweighs the root-degree sum, and such pairs saturate at 1.
/// `Classic` is the set-overlap ratio C / (a + b − C), in [0, 1] by itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TanimotoForm {
    #[default]
    Rooted,
    Classic,
}

impl std::str::FromStr for TanimotoForm {
    type Err = CsnError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rooted" => Ok(TanimotoForm::Rooted),
            "classic" => Ok(TanimotoForm::Classic),
            other => Err(CsnError::InvalidParameter(format!(
                "unknown overlap form {other:?} (expected rooted or classic)"
            ))),
        }
    }
}

impl std::fmt::Display for TanimotoForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TanimotoForm::Rooted => "rooted",
            TanimotoForm::Classic => "classic",
        })
    }
}

/// Social-influence scores for ordered user pairs.
///
/// All values lie in [0, 1]. LIN and LOUT matrices are symmetric; walk
/// matrices are generally not, and each of their rows is a probability
/// vector (sums to 1 up to the storage threshold).
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceMatrix {
    pub kind: InfluenceKind,
    /// Walk continuation probability; `None` for the overlap metrics.
    pub damping: Option<f64>,
    pub scores: PairScores,
}

impl InfluenceMatrix {
    /// Swap the roles of source and target user. A no-op in value terms for
    /// the symmetric overlap metrics; for the walk it exchanges "influence
    /// exerted" and "influence received".
    pub fn transposed(&self) -> Self {
        Self {
            kind: self.kind,
            damping: self.damping,
            scores: self.scores.transposed(),
        }
    }
}

/// Cosine preference scores; symmetric, diagonal 1 for users with items.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceMatrix {
    pub scores: PairScores,
}

/// Random walk with restart from every source user.
///
/// Row i is the stationary distribution of a walker that, at each step,
/// follows a uniformly random out-link of its current user with probability
/// `damping` and restarts at i otherwise: the fixed point of
/// `s = damping·W·s + (1−damping)·e_i` with column-stochastic W. Iterates
/// until the max-abs change drops to `tol`; every user must have an out-link.
pub fn rwr_influence(
    net: &CoupledNetwork,
    damping: f64,
    tol: f64,
    max_iters: usize,
) -> Result<InfluenceMatrix> {
    if !(damping >= 0.0 && damping < 1.0) {
        return Err(CsnError::InvalidParameter(format!(
            "walk continuation probability must be in [0, 1), got {damping}"
        )));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(CsnError::InvalidParameter(format!(
            "tolerance must be positive and finite, got {tol}"
        )));
    }
    if max_iters == 0 {
        return Err(CsnError::InvalidParameter(
            "max_iters must be at least 1".into(),
        ));
    }
    let m = net.user_count();
    if m == 0 {
        return Err(CsnError::EmptyNetwork);
    }
    for u in 0..m as u32 {
        if net.out_degree(u) == 0 {
            return Err(CsnError::DanglingUser { user: u });
        }
    }

    let rows: Vec<std::result::Result<Vec<(u32, f64)>, CsnError>> = (0..m as u32)
        .into_par_iter()
        .map_init(
            || (vec![0.0f64; m], vec![0.0f64; m]),
            |(current, next), source| {
                current.iter_mut().for_each(|x| *x = 0.0);
                current[source as usize] = 1.0;
                let mut converged = false;
                let mut residual = f64::INFINITY;
                for _ in 0..max_iters {
                    next.iter_mut().for_each(|x| *x = 0.0);
                    for j in 0..m {
                        let mass = current[j];
                        if mass == 0.0 {
                            continue;
                        }
                        let targets = net.out_neighbors(j as u32);
                        let share = damping * mass / targets.len() as f64;
                        for &l in targets {
                            next[l as usize] += share;
                        }
                    }
                    next[source as usize] += 1.0 - damping;
                    residual = current
                        .iter()
                        .zip(next.iter())
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    std::mem::swap(current, next);
                    if residual <= tol {
                        converged = true;
                        break;
                    }
                }
                if !converged {
                    return Err(CsnError::NonConvergence {
                        iterations: max_iters,
                        residual,
                    });
                }
                Ok(current
                    .iter()
                    .enumerate()
                    .filter(|&(_, &v)| v >= WALK_STORE_THRESHOLD)
                    .map(|(j, &v)| (j as u32, v))
                    .collect())
            },
        )
        .collect();

    let rows = rows.into_iter().collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(InfluenceMatrix {
        kind: InfluenceKind::Rwr,
        damping: Some(damping),
        scores: PairScores::from_rows(rows),
    })
}

#[derive(Clone, Copy)]
enum OverlapSide {
    In,
    Out,
}

fn overlap_score(common: u32, deg_a: usize, deg_b: usize, form: TanimotoForm) -> f64 {
    let c = common as f64;
    match form {
        TanimotoForm::Rooted => {
            let denom = (deg_a as f64).sqrt() + (deg_b as f64).sqrt() - c;
            if denom <= 0.0 {
                1.0
            } else {
                (c / denom).min(1.0)
            }
        }
        TanimotoForm::Classic => c / (deg_a + deg_b - common as usize) as f64,
    }
}

/// Shared core for LIN and LOUT: count, for every pair, the users linking to
/// both (In) or linked from both (Out), then score the overlap.
fn overlap_influence(net: &CoupledNetwork, side: OverlapSide, form: TanimotoForm) -> PairScores {
    let m = net.user_count();
    let neighborhood = |u: u32| match side {
        OverlapSide::In => net.in_neighbors(u),
        OverlapSide::Out => net.out_neighbors(u),
    };
    // If w is a shared in-linker of i and j, then j is an out-neighbor of w;
    // dually for shared out-link targets.
    let co_step = |w: u32| match side {
        OverlapSide::In => net.out_neighbors(w),
        OverlapSide::Out => net.in_neighbors(w),
    };
    let rows: Vec<Vec<(u32, f64)>> = (0..m as u32)
        .into_par_iter()
        .map_init(
            || (vec![0u32; m], Vec::<u32>::new()),
            |(counts, touched), i| {
                for &w in neighborhood(i) {
                    for &j in co_step(w) {
                        if j == i {
                            continue;
                        }
                        if counts[j as usize] == 0 {
                            touched.push(j);
                        }
                        counts[j as usize] += 1;
                    }
                }
                let deg_i = neighborhood(i).len();
                let mut row: Vec<(u32, f64)> = touched
                    .iter()
                    .map(|&j| {
                        let common = counts[j as usize];
                        counts[j as usize] = 0;
                        (j, overlap_score(common, deg_i, neighborhood(j).len(), form))
                    })
                    .collect();
                touched.clear();
                row.sort_unstable_by_key(|&(j, _)| j);
                row
            },
        )
        .collect();
    PairScores::from_rows(rows)
}

/// Influence from shared in-linkers: users followed by the same people.
pub fn lin_influence(net: &CoupledNetwork, form: TanimotoForm) -> InfluenceMatrix {
    InfluenceMatrix {
        kind: InfluenceKind::Lin,
        damping: None,
        scores: overlap_influence(net, OverlapSide::In, form),
    }
}

/// Influence from shared out-link targets: users following the same people.
pub fn lout_influence(net: &CoupledNetwork, form: TanimotoForm) -> InfluenceMatrix {
    InfluenceMatrix {
        kind: InfluenceKind::Lout,
        damping: None,
        scores: overlap_influence(net, OverlapSide::Out, form),
    }
}

/// Cosine similarity of collection sets: |common| / √(d_i·d_j). The diagonal
/// is 1 for every user with at least one item; disjoint collections score 0
/// and are not stored.
pub fn cosine_preference(net: &CoupledNetwork) -> PreferenceMatrix {
    let m = net.user_count();
    let rows: Vec<Vec<(u32, f64)>> = (0..m as u32)
        .into_par_iter()
        .map_init(
            || (vec![0u32; m], Vec::<u32>::new()),
            |(counts, touched), i| {
                for &it in net.items_of(i) {
                    for &j in net.users_of(it) {
                        if counts[j as usize] == 0 {
                            touched.push(j);
                        }
                        counts[j as usize] += 1;
                    }
                }
                let deg_i = net.items_of(i).len();
                let mut row: Vec<(u32, f64)> = touched
                    .iter()
                    .map(|&j| {
                        let common = counts[j as usize] as f64;
                        counts[j as usize] = 0;
                        let deg_j = net.items_of(j).len();
                        // product-then-root keeps identical collections at
                        // exactly 1; min guards the last ulp
                        let score = (common / (deg_i as f64 * deg_j as f64).sqrt()).min(1.0);
                        (j, score)
                    })
                    .collect();
                touched.clear();
                row.sort_unstable_by_key(|&(j, _)| j);
                row
            },
        )
        .collect();
    PreferenceMatrix {
        scores: PairScores::from_rows(rows),
    }
}
