//! Coupled-network data model: a directed social layer and a user-item
//! bipartite behavior layer sharing one dense user index.
//!
//! Loading re-indexes raw integer ids into `0..m` / `0..n` and keeps the
//! original ids as a sidecar map so outputs can be written back in the
//! caller's id space.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CsnError, Result};

/// Immutable snapshot of a coupled social network.
///
/// Users are `0..user_count`, items `0..item_count`. The social layer is a
/// directed graph over users; the behavior layer is a bipartite user-item
/// graph. Neighbor lists are sorted ascending and duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoupledNetwork {
    social_out: Vec<Vec<u32>>,
    social_in: Vec<Vec<u32>>,
    user_items: Vec<Vec<u32>>,
    item_users: Vec<Vec<u32>>,
    social_edge_count: usize,
    behavior_edge_count: usize,
}

impl CoupledNetwork {
    /// Build and validate a network from explicit edge sets.
    ///
    /// Rejects self-loops and duplicate edges in the social layer, duplicate
    /// pairs in the behavior layer, and any endpoint outside its index range.
    pub fn from_edges(
        user_count: usize,
        item_count: usize,
        social_edges: &[(u32, u32)],
        behavior_edges: &[(u32, u32)],
    ) -> Result<Self> {
        let mut social_out = vec![Vec::new(); user_count];
        let mut social_in = vec![Vec::new(); user_count];
        for &(i, j) in social_edges {
            if i == j {
                return Err(CsnError::InvalidEdge {
                    from: i as u64,
                    to: j as u64,
                    message: "self-loop in social layer".into(),
                });
            }
            if i as usize >= user_count || j as usize >= user_count {
                return Err(CsnError::InvalidEdge {
                    from: i as u64,
                    to: j as u64,
                    message: format!("user index out of range (user count {user_count})"),
                });
            }
            social_out[i as usize].push(j);
            social_in[j as usize].push(i);
        }
        let mut user_items = vec![Vec::new(); user_count];
        let mut item_users = vec![Vec::new(); item_count];
        for &(u, it) in behavior_edges {
            if u as usize >= user_count || it as usize >= item_count {
                return Err(CsnError::InvalidEdge {
                    from: u as u64,
                    to: it as u64,
                    message: format!(
                        "behavior endpoint out of range (users {user_count}, items {item_count})"
                    ),
                });
            }
            user_items[u as usize].push(it);
            item_users[it as usize].push(u);
        }
        for list in social_out
            .iter_mut()
            .chain(social_in.iter_mut())
            .chain(user_items.iter_mut())
            .chain(item_users.iter_mut())
        {
            list.sort_unstable();
        }
        for (i, list) in social_out.iter().enumerate() {
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(CsnError::InvalidEdge {
                    from: i as u64,
                    to: 0,
                    message: "duplicate social edge".into(),
                });
            }
        }
        for (u, list) in user_items.iter().enumerate() {
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(CsnError::InvalidEdge {
                    from: u as u64,
                    to: 0,
                    message: "duplicate behavior edge".into(),
                });
            }
        }
        Ok(Self {
            social_out,
            social_in,
            user_items,
            item_users,
            social_edge_count: social_edges.len(),
            behavior_edge_count: behavior_edges.len(),
        })
    }

    pub fn user_count(&self) -> usize {
        self.social_out.len()
    }

    pub fn item_count(&self) -> usize {
        self.item_users.len()
    }

    pub fn social_edge_count(&self) -> usize {
        self.social_edge_count
    }

    pub fn behavior_edge_count(&self) -> usize {
        self.behavior_edge_count
    }

    /// Users this user links to.
    pub fn out_neighbors(&self, user: u32) -> &[u32] {
        &self.social_out[user as usize]
    }

    /// Users linking to this user.
    pub fn in_neighbors(&self, user: u32) -> &[u32] {
        &self.social_in[user as usize]
    }

    pub fn out_degree(&self, user: u32) -> usize {
        self.social_out[user as usize].len()
    }

    pub fn in_degree(&self, user: u32) -> usize {
        self.social_in[user as usize].len()
    }

    /// Items collected by this user.
    pub fn items_of(&self, user: u32) -> &[u32] {
        &self.user_items[user as usize]
    }

    /// Users that collected this item (the item's degree is the length).
    pub fn users_of(&self, item: u32) -> &[u32] {
        &self.item_users[item as usize]
    }

    pub fn item_degree(&self, item: u32) -> usize {
        self.item_users[item as usize].len()
    }

    pub fn has_behavior(&self, user: u32, item: u32) -> bool {
        self.user_items[user as usize].binary_search(&item).is_ok()
    }

    pub fn has_social(&self, from: u32, to: u32) -> bool {
        self.social_out[from as usize].binary_search(&to).is_ok()
    }

    /// Directed social edges in ascending (source, target) order.
    pub fn social_edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.social_out
            .iter()
            .enumerate()
            .flat_map(|(i, targets)| targets.iter().map(move |&j| (i as u32, j)))
    }

    /// Behavior edges in ascending (user, item) order.
    pub fn behavior_edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.user_items
            .iter()
            .enumerate()
            .flat_map(|(u, items)| items.iter().map(move |&it| (u as u32, it)))
    }

    /// The same network with every social edge reversed. Both layers keep
    /// their index spaces.
    pub fn reversed_social(&self) -> Self {
        Self {
            social_out: self.social_in.clone(),
            social_in: self.social_out.clone(),
            user_items: self.user_items.clone(),
            item_users: self.item_users.clone(),
            social_edge_count: self.social_edge_count,
            behavior_edge_count: self.behavior_edge_count,
        }
    }
}

/// A loaded network plus the sidecar id maps and sanitation counters.
#[derive(Debug, Clone)]
pub struct LoadedNetwork {
    pub network: CoupledNetwork,
    /// Dense user index -> original id.
    pub user_ids: Vec<u64>,
    /// Dense item index -> original id.
    pub item_ids: Vec<u64>,
    pub social_duplicates: usize,
    pub behavior_duplicates: usize,
    pub self_loops_dropped: usize,
}

impl LoadedNetwork {
    pub fn original_user_id(&self, user: u32) -> u64 {
        self.user_ids[user as usize]
    }

    pub fn original_item_id(&self, item: u32) -> u64 {
        self.item_ids[item as usize]
    }
}

fn parse_edge_file(path: &Path) -> Result<Vec<(u64, u64)>> {
    let file = File::open(path).map_err(|source| CsnError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut edges = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| CsnError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let parse = |field: Option<&str>| -> Result<u64> {
            field
                .ok_or(())
                .and_then(|f| f.parse::<u64>().map_err(|_| ()))
                .map_err(|_| CsnError::Parse {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    message: format!("expected \"source<TAB>target\" integers, got {trimmed:?}"),
                })
        };
        let a = parse(fields.next())?;
        let b = parse(fields.next())?;
        if fields.next().is_some() {
            return Err(CsnError::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                message: format!("trailing fields in {trimmed:?}"),
            });
        }
        edges.push((a, b));
    }
    Ok(edges)
}

/// Load a coupled network from two tab-separated edge-list files.
///
/// The user index is the union of ids seen in either layer. Social self-loops
/// are dropped and duplicate edges deduplicated, both counted in the result.
pub fn load_network(social_path: &Path, behavior_path: &Path) -> Result<LoadedNetwork> {
    let raw_social = parse_edge_file(social_path)?;
    let raw_behavior = parse_edge_file(behavior_path)?;

    let self_loops = raw_social.iter().filter(|(a, b)| a == b).count();
    let mut social: Vec<(u64, u64)> = raw_social.into_iter().filter(|(a, b)| a != b).collect();
    social.sort_unstable();
    let before = social.len();
    social.dedup();
    let social_duplicates = before - social.len();

    let mut behavior = raw_behavior;
    behavior.sort_unstable();
    let before = behavior.len();
    behavior.dedup();
    let behavior_duplicates = before - behavior.len();

    let mut user_ids: Vec<u64> = social
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .chain(behavior.iter().map(|&(u, _)| u))
        .collect();
    user_ids.sort_unstable();
    user_ids.dedup();
    let mut item_ids: Vec<u64> = behavior.iter().map(|&(_, it)| it).collect();
    item_ids.sort_unstable();
    item_ids.dedup();

    let user_index = |id: u64| user_ids.binary_search(&id).expect("id in union") as u32;
    let item_index = |id: u64| item_ids.binary_search(&id).expect("id in union") as u32;

    let social_dense: Vec<(u32, u32)> = social
        .iter()
        .map(|&(a, b)| (user_index(a), user_index(b)))
        .collect();
    let behavior_dense: Vec<(u32, u32)> = behavior
        .iter()
        .map(|&(u, it)| (user_index(u), item_index(it)))
        .collect();

    let network = CoupledNetwork::from_edges(
        user_ids.len(),
        item_ids.len(),
        &social_dense,
        &behavior_dense,
    )?;
    Ok(LoadedNetwork {
        network,
        user_ids,
        item_ids,
        social_duplicates,
        behavior_duplicates,
        self_loops_dropped: self_loops,
    })
}

/// Write edges as "a<TAB>b" lines.
pub fn write_edge_list<W: Write>(
    mut w: W,
    edges: impl IntoIterator<Item = (u64, u64)>,
) -> io::Result<()> {
    for (a, b) in edges {
        writeln!(w, "{a}\t{b}")?;
    }
    Ok(())
}

/// Degree thresholds for iterative purification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PurifyThresholds {
    /// Minimum social out-degree per user.
    pub min_out: usize,
    /// Minimum social in-degree per user.
    pub min_in: usize,
    /// Minimum collected items per user.
    pub min_user_items: usize,
    /// Minimum collectors per item.
    pub min_item_users: usize,
}

impl PurifyThresholds {
    pub const fn new(
        min_out: usize,
        min_in: usize,
        min_user_items: usize,
        min_item_users: usize,
    ) -> Self {
        Self {
            min_out,
            min_in,
            min_user_items,
            min_item_users,
        }
    }

    /// Epinions preset: one out-link, 26 in-links, 7 items per user, 7 users per item.
    pub const fn epinions() -> Self {
        Self::new(1, 26, 7, 7)
    }

    /// Friendfeed preset: one out-link, 2 in-links, 8 items per user, 8 users per item.
    pub const fn friendfeed() -> Self {
        Self::new(1, 2, 8, 8)
    }
}

/// Result of purification: the compacted network and the surviving indices
/// (new dense index -> index in the input network).
#[derive(Debug, Clone)]
pub struct PurifyOutcome {
    pub network: CoupledNetwork,
    pub kept_users: Vec<u32>,
    pub kept_items: Vec<u32>,
    pub rounds: usize,
}

/// Remove users and items below the thresholds until a fixed point.
///
/// Each round removes every user violating the three user predicates and
/// every item with too few collectors; removing a node removes its incident
/// edges in both layers, which can invalidate further nodes, hence the
/// iteration. Errors when no user survives.
pub fn purify(net: &CoupledNetwork, thresholds: PurifyThresholds) -> Result<PurifyOutcome> {
    let m = net.user_count();
    let n = net.item_count();
    let mut user_alive = vec![true; m];
    let mut item_alive = vec![true; n];
    let mut rounds = 0;

    loop {
        let mut changed = false;
        let mut user_doomed = vec![false; m];
        let mut item_doomed = vec![false; n];
        for u in 0..m {
            if !user_alive[u] {
                continue;
            }
            let out = net.out_neighbors(u as u32)
                .iter()
                .filter(|&&v| user_alive[v as usize])
                .count();
            let inn = net.in_neighbors(u as u32)
                .iter()
                .filter(|&&v| user_alive[v as usize])
                .count();
            let items = net.items_of(u as u32)
                .iter()
                .filter(|&&it| item_alive[it as usize])
                .count();
            if out < thresholds.min_out
                || inn < thresholds.min_in
                || items < thresholds.min_user_items
            {
                user_doomed[u] = true;
                changed = true;
            }
        }
        for it in 0..n {
            if !item_alive[it] {
                continue;
            }
            let collectors = net.users_of(it as u32)
                .iter()
                .filter(|&&u| user_alive[u as usize])
                .count();
            if collectors < thresholds.min_item_users {
                item_doomed[it] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        rounds += 1;
        for (alive, doomed) in user_alive.iter_mut().zip(&user_doomed) {
            *alive &= !doomed;
        }
        for (alive, doomed) in item_alive.iter_mut().zip(&item_doomed) {
            *alive &= !doomed;
        }
    }

    let kept_users: Vec<u32> = (0..m as u32).filter(|&u| user_alive[u as usize]).collect();
    if kept_users.is_empty() {
        return Err(CsnError::EmptyPurifyResult);
    }
    let kept_items: Vec<u32> = (0..n as u32).filter(|&it| item_alive[it as usize]).collect();

    let mut user_map = vec![u32::MAX; m];
    for (new, &old) in kept_users.iter().enumerate() {
        user_map[old as usize] = new as u32;
    }
    let mut item_map = vec![u32::MAX; n];
    for (new, &old) in kept_items.iter().enumerate() {
        item_map[old as usize] = new as u32;
    }

    let social: Vec<(u32, u32)> = net
        .social_edges()
        .filter(|&(a, b)| user_alive[a as usize] && user_alive[b as usize])
        .map(|(a, b)| (user_map[a as usize], user_map[b as usize]))
        .collect();
    let behavior: Vec<(u32, u32)> = net
        .behavior_edges()
        .filter(|&(u, it)| user_alive[u as usize] && item_alive[it as usize])
        .map(|(u, it)| (user_map[u as usize], item_map[it as usize]))
        .collect();

    let network = CoupledNetwork::from_edges(kept_users.len(), kept_items.len(), &social, &behavior)?;
    Ok(PurifyOutcome {
        network,
        kept_users,
        kept_items,
        rounds,
    })
}

/// A train/test partition of the behavior layer. The social layer is never
/// split; the train network keeps the full user and item index spaces.
#[derive(Debug, Clone)]
pub struct SplitPair {
    pub train: CoupledNetwork,
    /// Held-out (user, item) pairs, ascending.
    pub test: Vec<(u32, u32)>,
    pub seed: u64,
}

/// Partition behavior edges uniformly at random; `ratio` of them go to train.
///
/// Deterministic for a fixed seed. The train edge count is
/// `floor(ratio * N_R)`.
pub fn split(net: &CoupledNetwork, ratio: f64, seed: u64) -> Result<SplitPair> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(CsnError::RatioOutOfRange(ratio));
    }
    let mut edges: Vec<(u32, u32)> = net.behavior_edges().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    edges.shuffle(&mut rng);
    let train_n = (ratio * edges.len() as f64).floor() as usize;
    let mut test: Vec<(u32, u32)> = edges.split_off(train_n);
    let mut train_edges = edges;
    train_edges.sort_unstable();
    test.sort_unstable();

    let social: Vec<(u32, u32)> = net.social_edges().collect();
    let train = CoupledNetwork::from_edges(
        net.user_count(),
        net.item_count(),
        &social,
        &train_edges,
    )?;
    Ok(SplitPair { train, test, seed })
}

/// Summary statistics of a coupled network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub user_count: usize,
    pub item_count: usize,
    pub rating_count: usize,
    pub social_link_count: usize,
    /// N_R / (|U| * |I|)
    pub rating_sparsity: f64,
    /// N_S / (|U| * (|U| - 1))
    pub social_sparsity: f64,
}

pub fn stats(net: &CoupledNetwork) -> Result<DatasetStats> {
    let m = net.user_count();
    let n = net.item_count();
    if m == 0 || n == 0 {
        return Err(CsnError::EmptyNetwork);
    }
    let rating_count = net.behavior_edge_count();
    let social_link_count = net.social_edge_count();
    let social_pairs = m as f64 * (m as f64 - 1.0);
    Ok(DatasetStats {
        user_count: m,
        item_count: n,
        rating_count,
        social_link_count,
        rating_sparsity: rating_count as f64 / (m as f64 * n as f64),
        social_sparsity: if social_pairs > 0.0 {
            social_link_count as f64 / social_pairs
        } else {
            0.0
        },
    })
}
