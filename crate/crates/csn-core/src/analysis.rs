//! Structural analyses over finished runs: how influence relates to
//! preference across user pairs, the ego network of the most influential
//! user, and the training-degree profile of successfully recommended items.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{CsnError, Result};
use crate::network::CoupledNetwork;
use crate::recommender::RecommendationList;
use crate::evaluation::test_items_by_user;
use crate::similarity::{InfluenceMatrix, PreferenceMatrix};

/// Items with training degree at or below this count as cold.
pub const LOW_DEGREE_THRESHOLD: usize = 5;

/// One logarithmic influence bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationBin {
    /// Geometric center of the bin's influence range.
    pub influence_center: f64,
    /// Mean preference over pairs falling in the bin; 0 when empty.
    pub mean_preference: f64,
    pub pair_count: usize,
}

/// Mean preference as a function of influence, over logarithmic bins
/// spanning the observed influence range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCurve {
    pub bins: Vec<CorrelationBin>,
    /// All ordered pairs with positive influence; bin counts sum to this.
    pub total_pairs: usize,
}

/// Bin every ordered pair (i, j), i ≠ j, with s_ij > 0 by influence and
/// average the pair preferences within each bin.
pub fn influence_preference_curve(
    influence: &InfluenceMatrix,
    preference: &PreferenceMatrix,
    bins: usize,
) -> Result<CorrelationCurve> {
    if bins < 2 {
        return Err(CsnError::InvalidParameter(format!(
            "need at least 2 bins, got {bins}"
        )));
    }
    let m = influence.scores.user_count();
    if preference.scores.user_count() != m {
        return Err(CsnError::InvalidParameter(format!(
            "influence covers {m} users but preference covers {}",
            preference.scores.user_count()
        )));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut total_pairs = 0usize;
    for (i, j, v) in influence.scores.iter() {
        if i == j || v <= 0.0 {
            continue;
        }
        lo = lo.min(v);
        hi = hi.max(v);
        total_pairs += 1;
    }
    if total_pairs == 0 {
        return Err(CsnError::NoPositiveInfluencePairs);
    }

    let log_lo = lo.ln();
    let log_hi = hi.ln();
    let log_span = log_hi - log_lo;
    let index_of = |v: f64| -> usize {
        if log_span <= 0.0 {
            0
        } else {
            (((v.ln() - log_lo) / log_span * bins as f64) as usize).min(bins - 1)
        }
    };
    let mut sums = vec![0.0f64; bins];
    let mut counts = vec![0usize; bins];
    for (i, j, v) in influence.scores.iter() {
        if i == j || v <= 0.0 {
            continue;
        }
        let b = index_of(v);
        sums[b] += preference.scores.get(i, j);
        counts[b] += 1;
    }
    let curve_bins = (0..bins)
        .map(|b| {
            let center = if log_span <= 0.0 {
                lo
            } else {
                let width = log_span / bins as f64;
                (log_lo + width * (b as f64 + 0.5)).exp()
            };
            CorrelationBin {
                influence_center: center,
                mean_preference: if counts[b] > 0 {
                    sums[b] / counts[b] as f64
                } else {
                    0.0
                },
                pair_count: counts[b],
            }
        })
        .collect();
    Ok(CorrelationCurve {
        bins: curve_bins,
        total_pairs,
    })
}

/// Which scalar stands in for "a node's social influence" when the matrix is
/// asymmetric. Column sums total what the node exerts on everyone else (with
/// rows as per-source vectors); row sums total what it receives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeInfluenceConvention {
    #[default]
    ColumnSum,
    RowSum,
}

impl std::str::FromStr for NodeInfluenceConvention {
    type Err = CsnError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "column_sum" | "column" => Ok(NodeInfluenceConvention::ColumnSum),
            "row_sum" | "row" => Ok(NodeInfluenceConvention::RowSum),
            other => Err(CsnError::InvalidParameter(format!(
                "unknown node-influence convention {other:?} (expected column-sum or row-sum)"
            ))),
        }
    }
}

/// Per-node scalar influence under the chosen convention. Sums run over all
/// stored entries, diagonal included where one is stored.
pub fn node_influence_scalars(
    influence: &InfluenceMatrix,
    convention: NodeInfluenceConvention,
) -> Vec<f64> {
    let m = influence.scores.user_count();
    let mut totals = vec![0.0f64; m];
    for (i, j, v) in influence.scores.iter() {
        let node = match convention {
            NodeInfluenceConvention::ColumnSum => j,
            NodeInfluenceConvention::RowSum => i,
        };
        totals[node as usize] += v;
    }
    totals
}

/// The most influential user with its social neighborhood.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EgoNetwork {
    pub center: u32,
    pub convention: NodeInfluenceConvention,
    /// Center plus its social neighbors (either direction), ascending.
    pub nodes: Vec<u32>,
    /// Scalar influence per node, parallel to `nodes`.
    pub node_influence: Vec<f64>,
    /// Induced directed social edges among `nodes`, annotated with the pair
    /// preference.
    pub edges: Vec<(u32, u32, f64)>,
}

/// Extract the ego network of the user with the largest scalar influence;
/// argmax ties break toward the smaller user id.
pub fn extract_ego(
    net: &CoupledNetwork,
    influence: &InfluenceMatrix,
    preference: &PreferenceMatrix,
    convention: NodeInfluenceConvention,
) -> Result<EgoNetwork> {
    let m = net.user_count();
    if m == 0 {
        return Err(CsnError::EmptyNetwork);
    }
    if influence.scores.user_count() != m {
        return Err(CsnError::InvalidParameter(format!(
            "influence covers {} users but the network has {m}",
            influence.scores.user_count()
        )));
    }
    let totals = node_influence_scalars(influence, convention);
    let mut center = 0u32;
    for (u, &t) in totals.iter().enumerate() {
        if t > totals[center as usize] {
            center = u as u32;
        }
    }

    let mut nodes: Vec<u32> = net
        .out_neighbors(center)
        .iter()
        .chain(net.in_neighbors(center))
        .copied()
        .chain(std::iter::once(center))
        .collect();
    nodes.sort_unstable();
    nodes.dedup();

    let node_influence = nodes.iter().map(|&u| totals[u as usize]).collect();
    let edges = nodes
        .iter()
        .flat_map(|&a| {
            net.out_neighbors(a)
                .iter()
                .filter(|b| nodes.binary_search(b).is_ok())
                .map(move |&b| (a, b, preference.scores.get(a, b)))
        })
        .collect();
    Ok(EgoNetwork {
        center,
        convention,
        nodes,
        node_influence,
        edges,
    })
}

/// Training-degree profile of the recommendations that hit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeHistogram {
    /// (training degree, occurrences), ascending by degree, zero rows
    /// omitted.
    pub counts: Vec<(usize, usize)>,
    /// Total successfully recommended occurrences.
    pub total: usize,
    /// Fraction with degree ≤ [`LOW_DEGREE_THRESHOLD`].
    pub low_degree_share: f64,
}

/// Count, for every list entry that was actually held out by that user, the
/// item's degree in the training behavior layer.
pub fn recommended_degree_histogram(
    lists: &RecommendationList,
    test: &[(u32, u32)],
    train: &CoupledNetwork,
) -> Result<DegreeHistogram> {
    let test_items = test_items_by_user(test, lists.lists.len());
    let mut by_degree: std::collections::BTreeMap<usize, usize> = Default::default();
    let mut total = 0usize;
    let mut low = 0usize;
    for (u, list) in lists.lists.iter().enumerate() {
        for &(item, _) in list {
            if test_items[u].binary_search(&item).is_ok() {
                let degree = train.item_degree(item);
                *by_degree.entry(degree).or_default() += 1;
                total += 1;
                if degree <= LOW_DEGREE_THRESHOLD {
                    low += 1;
                }
            }
        }
    }
    if total == 0 {
        return Err(CsnError::NoRecoveredItems);
    }
    Ok(DegreeHistogram {
        counts: by_degree.into_iter().collect(),
        total,
        low_degree_share: low as f64 / total as f64,
    })
}

/// Spearman rank correlation with average ranks on ties; 0 when either side
/// is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "paired samples required");
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let rank = |values: &[f64]| -> Vec<f64> {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
        let mut ranks = vec![0.0; n];
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j + 1 < n && values[order[j + 1]] == values[order[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &idx in &order[i..=j] {
                ranks[idx] = avg;
            }
            i = j + 1;
        }
        ranks
    };
    let rx = rank(x);
    let ry = rank(y);
    let mean = (n as f64 + 1.0) / 2.0;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for i in 0..n {
        let dx = rx[i] - mean;
        let dy = ry[i] - mean;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == 0.0 || var_y == 0.0 {
        return 0.0;
    }
    cov / (var_x.sqrt() * var_y.sqrt())
}

/// CSV rows "influence,mean_preference,pair_count".
pub fn write_curve_csv<W: Write>(mut w: W, curve: &CorrelationCurve) -> io::Result<()> {
    writeln!(w, "influence,mean_preference,pair_count")?;
    for b in &curve.bins {
        writeln!(
            w,
            "{},{},{}",
            b.influence_center, b.mean_preference, b.pair_count
        )?;
    }
    Ok(())
}

/// CSV rows "degree,count".
pub fn write_histogram_csv<W: Write>(mut w: W, hist: &DegreeHistogram) -> io::Result<()> {
    writeln!(w, "degree,count")?;
    for &(degree, count) in &hist.counts {
        writeln!(w, "{degree},{count}")?;
    }
    Ok(())
}

/// CSV rows "user,influence,is_center" for the ego nodes.
pub fn write_ego_csv<W: Write>(
    mut w: W,
    ego: &EgoNetwork,
    user_id_of: impl Fn(u32) -> u64,
) -> io::Result<()> {
    writeln!(w, "user,influence,is_center")?;
    for (&u, &inf) in ego.nodes.iter().zip(&ego.node_influence) {
        writeln!(
            w,
            "{},{},{}",
            user_id_of(u),
            inf,
            if u == ego.center { 1 } else { 0 }
        )?;
    }
    Ok(())
}

/// Graph-exchange text: `node <id> <influence>` lines, then
/// `edge <from> <to> <preference>` lines.
pub fn write_ego_graph<W: Write>(
    mut w: W,
    ego: &EgoNetwork,
    user_id_of: impl Fn(u32) -> u64,
) -> io::Result<()> {
    writeln!(w, "# ego network centered on user {}", user_id_of(ego.center))?;
    for (&u, &inf) in ego.nodes.iter().zip(&ego.node_influence) {
        writeln!(w, "node\t{}\t{}", user_id_of(u), inf)?;
    }
    for &(a, b, p) in &ego.edges {
        writeln!(w, "edge\t{}\t{}\t{}", user_id_of(a), user_id_of(b), p)?;
    }
    Ok(())
}
