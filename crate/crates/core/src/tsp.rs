//! Closed walks that visit every node: an exact Held-Karp solver for small
//! graphs and a nearest-neighbor + 2-opt/Or-opt heuristic with restarts.
//!
//! Both work on the shortest-path metric closure and expand each hop back
//! into real edges, so a returned walk may revisit nodes.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{AllPairs, Graph, NodeId};

pub const EXACT_MAX_NODES: usize = 15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TspError {
    #[error("exact TSP supports at most {EXACT_MAX_NODES} nodes, graph has {0}")]
    TooLarge(usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error("walk is empty")]
    Empty,
    #[error("nodes {0} and {1} are consecutive in the walk but not adjacent")]
    NotAdjacent(NodeId, NodeId),
}

/// A walk over real graph edges. Closed walks repeat their first node at
/// the end, except the single-node walk `[station]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Walk {
    pub nodes: Vec<NodeId>,
    pub total_time: f64,
}

impl Walk {
    pub fn new(g: &Graph, nodes: Vec<NodeId>) -> Result<Self, WalkError> {
        if nodes.is_empty() {
            return Err(WalkError::Empty);
        }
        let mut total_time = 0.0;
        for w in nodes.windows(2) {
            total_time += g
                .edge_time(w[0], w[1])
                .ok_or(WalkError::NotAdjacent(w[0], w[1]))?;
        }
        Ok(Walk { nodes, total_time })
    }

    /// Cumulative travel time at each position of the walk.
    pub fn offsets(&self, g: &Graph) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut t = 0.0;
        out.push(0.0);
        for w in self.nodes.windows(2) {
            t += g.edge_time(w[0], w[1]).expect("walk edges exist");
            out.push(t);
        }
        out
    }

    pub fn is_closed_at(&self, v: NodeId) -> bool {
        self.nodes.first() == Some(&v) && self.nodes.last() == Some(&v)
    }

    pub fn visited(&self) -> BTreeSet<NodeId> {
        self.nodes.iter().copied().collect()
    }

    /// Lexicographically smallest rotation or reflection of the cyclic node
    /// sequence (closing repeat dropped). Equal forms mean the same tour.
    pub fn canonical_form(&self) -> Vec<NodeId> {
        let mut cyc = self.nodes.clone();
        if cyc.len() > 1 && cyc.first() == cyc.last() {
            cyc.pop();
        }
        canonical_cycle(&cyc)
    }
}

pub(crate) fn canonical_cycle(cyc: &[NodeId]) -> Vec<NodeId> {
    let n = cyc.len();
    let mut best: Option<Vec<NodeId>> = None;
    let mut rev = cyc.to_vec();
    rev.reverse();
    for seq in [cyc, &rev[..]] {
        for r in 0..n {
            let cand: Vec<NodeId> = seq[r..].iter().chain(&seq[..r]).copied().collect();
            if best.as_ref().is_none_or(|b| cand < *b) {
                best = Some(cand);
            }
        }
    }
    best.unwrap_or_default()
}

/// TSP solver bound to one graph; caches the metric closure.
pub struct Tsp<'g> {
    g: &'g Graph,
    ap: AllPairs,
}

impl<'g> Tsp<'g> {
    pub fn new(g: &'g Graph) -> Self {
        Tsp {
            g,
            ap: AllPairs::new(g),
        }
    }

    pub fn all_pairs(&self) -> &AllPairs {
        &self.ap
    }

    fn order_cost(&self, order: &[NodeId]) -> f64 {
        let n = order.len();
        (0..n)
            .map(|i| self.ap.dist(order[i], order[(i + 1) % n]))
            .sum()
    }

    /// Expands a closure order (station first) into an edge walk.
    pub fn expand(&self, order: &[NodeId]) -> Walk {
        let station = self.g.station();
        let mut nodes = vec![station];
        if order.len() > 1 {
            for w in order.windows(2) {
                nodes.extend(&self.ap.path(w[0], w[1])[1..]);
            }
            let last = *order.last().unwrap();
            nodes.extend(&self.ap.path(last, station)[1..]);
        }
        Walk::new(self.g, nodes).expect("shortest paths follow graph edges")
    }

    /// Held-Karp over the metric closure.
    pub fn exact(&self) -> Result<Walk, TspError> {
        let n = self.g.len();
        if n > EXACT_MAX_NODES {
            return Err(TspError::TooLarge(n));
        }
        let station = self.g.station();
        let others: Vec<NodeId> = self.g.nodes().filter(|&v| v != station).collect();
        let m = others.len();
        if m == 0 {
            return Ok(self.expand(&[station]));
        }
        let full = 1usize << m;
        let mut dp = vec![f64::INFINITY; full * m];
        let mut from = vec![usize::MAX; full * m];
        for j in 0..m {
            dp[(1 << j) * m + j] = self.ap.dist(station, others[j]);
        }
        for mask in 1..full {
            for j in 0..m {
                let cur = dp[mask * m + j];
                if mask & (1 << j) == 0 || !cur.is_finite() {
                    continue;
                }
                for k in 0..m {
                    if mask & (1 << k) != 0 {
                        continue;
                    }
                    let next = mask | (1 << k);
                    let cand = cur + self.ap.dist(others[j], others[k]);
                    if cand < dp[next * m + k] {
                        dp[next * m + k] = cand;
                        from[next * m + k] = j;
                    }
                }
            }
        }
        let last_mask = full - 1;
        let (mut j, _) = (0..m)
            .map(|j| (j, dp[last_mask * m + j] + self.ap.dist(others[j], station)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let mut mask = last_mask;
        let mut rev = Vec::with_capacity(m);
        loop {
            rev.push(others[j]);
            let prev = from[mask * m + j];
            mask &= !(1 << j);
            if prev == usize::MAX {
                break;
            }
            j = prev;
        }
        let mut order = vec![station];
        order.extend(rev.into_iter().rev());
        Ok(self.expand(&order))
    }

    fn nearest_neighbor(&self, rng: &mut ChaCha8Rng, noise: f64) -> Vec<NodeId> {
        let station = self.g.station();
        let n = self.g.len();
        let mut visited = vec![false; n];
        visited[station] = true;
        let mut order = vec![station];
        let mut cur = station;
        while order.len() < n {
            let mut cands: Vec<(f64, NodeId)> = (0..n)
                .filter(|&v| !visited[v])
                .map(|v| (self.ap.dist(cur, v), v))
                .collect();
            cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let best = cands[0].0;
            let ties: Vec<NodeId> = cands
                .iter()
                .take_while(|c| c.0 <= best + 1e-9)
                .map(|c| c.1)
                .collect();
            let next = if noise > 0.0 && cands.len() > ties.len() && rng.gen_bool(noise) {
                cands[ties.len()].1
            } else {
                *ties.choose(rng).unwrap()
            };
            visited[next] = true;
            order.push(next);
            cur = next;
        }
        order
    }

    fn two_opt(&self, order: &mut [NodeId]) -> bool {
        let n = order.len();
        let d = |a, b| self.ap.dist(a, b);
        let mut improved_any = false;
        loop {
            let mut improved = false;
            for i in 0..n.saturating_sub(2) {
                for j in i + 2..n {
                    let (a, b) = (order[i], order[i + 1]);
                    let (c, e) = (order[j], order[(j + 1) % n]);
                    if a == e {
                        continue;
                    }
                    let delta = d(a, c) + d(b, e) - d(a, b) - d(c, e);
                    if delta < -1e-9 {
                        order[i + 1..=j].reverse();
                        improved = true;
                    }
                }
            }
            if !improved {
                return improved_any;
            }
            improved_any = true;
        }
    }

    fn or_opt(&self, order: &mut Vec<NodeId>) -> bool {
        let n = order.len();
        let d = |a, b| self.ap.dist(a, b);
        for len in 1..=3usize {
            if n < len + 3 {
                continue;
            }
            for i in 1..=n - len {
                let first = order[i];
                let last = order[i + len - 1];
                let prev = order[i - 1];
                let next = order[(i + len) % n];
                let gain = d(prev, first) + d(last, next) - d(prev, next);
                for k in 0..n {
                    if k + 1 >= i && k < i + len {
                        continue;
                    }
                    let a = order[k];
                    let b = order[(k + 1) % n];
                    let fwd = d(a, first) + d(last, b) - d(a, b);
                    let bwd = d(a, last) + d(first, b) - d(a, b);
                    let (add, reversed) = if bwd < fwd { (bwd, true) } else { (fwd, false) };
                    if add < gain - 1e-9 {
                        let mut seg: Vec<NodeId> = order.drain(i..i + len).collect();
                        if reversed {
                            seg.reverse();
                        }
                        // position of `a` after removal
                        let at = if k < i { k + 1 } else { k + 1 - len };
                        order.splice(at..at, seg);
                        return true;
                    }
                }
            }
        }
        false
    }

    fn local_search(&self, order: &mut Vec<NodeId>) {
        loop {
            let a = self.two_opt(order);
            let b = self.or_opt(order);
            if !a && !b {
                break;
            }
        }
        // keep the station in front
        if let Some(pos) = order.iter().position(|&v| v == self.g.station()) {
            order.rotate_left(pos);
        }
    }

    /// Nearest neighbor from the station (random tie-breaking) followed by
    /// 2-opt and Or-opt until no improving move remains.
    pub fn heuristic(&self, seed: u64) -> Walk {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order = self.nearest_neighbor(&mut rng, 0.0);
        let initial = self.order_cost(&order);
        self.local_search(&mut order);
        debug_assert!(self.order_cost(&order) <= initial + 1e-6);
        self.expand(&order)
    }

    fn kick(&self, order: &[NodeId], rng: &mut ChaCha8Rng) -> Vec<NodeId> {
        let n = order.len();
        if n >= 8 {
            // double bridge on positions 1..n
            let mut cuts: Vec<usize> = (0..3).map(|_| rng.gen_range(2..n)).collect();
            cuts.sort_unstable();
            cuts.dedup();
            if cuts.len() == 3 {
                let (a, b, c) = (cuts[0], cuts[1], cuts[2]);
                let mut out = order[..a].to_vec();
                out.extend_from_slice(&order[b..c]);
                out.extend_from_slice(&order[a..b]);
                out.extend_from_slice(&order[c..]);
                return out;
            }
        }
        let mut out = order.to_vec();
        if n >= 3 {
            let i = rng.gen_range(1..n);
            let j = rng.gen_range(1..n);
            out.swap(i, j);
        }
        out
    }

    fn closure_order(&self, walk: &Walk) -> Vec<NodeId> {
        let mut seen = vec![false; self.g.len()];
        let mut order = Vec::new();
        for &v in &walk.nodes {
            if !seen[v] {
                seen[v] = true;
                order.push(v);
            }
        }
        order
    }

    /// Up to `n` pairwise-distinct walks sorted by time. The first attempt
    /// is [`Tsp::heuristic`] with the same seed; later attempts use a noisy
    /// nearest neighbor or a double-bridge kick of an earlier tour. Stops
    /// after `10 * n` attempts.
    pub fn distinct(&self, n: usize, seed: u64) -> Vec<Walk> {
        let mut found: Vec<(Vec<NodeId>, Walk)> = Vec::new();
        let mut keys = BTreeSet::new();
        let budget = 10 * n.max(1);
        for attempt in 0..budget {
            if found.len() >= n {
                break;
            }
            let walk = if attempt == 0 {
                self.heuristic(seed)
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(attempt as u64);
                let mut order = if attempt % 2 == 1 || found.is_empty() {
                    self.nearest_neighbor(&mut rng, 0.15)
                } else {
                    let base = &found[rng.gen_range(0..found.len())].1;
                    let order = self.closure_order(base);
                    self.kick(&order, &mut rng)
                };
                self.local_search(&mut order);
                self.expand(&order)
            };
            let key = walk.canonical_form();
            if keys.insert(key.clone()) {
                found.push((key, walk));
            }
        }
        if found.len() < n {
            log::info!(
                "distinct_tours: found {} of {} requested tours after {} attempts",
                found.len(),
                n,
                budget
            );
        }
        found.sort_by(|a, b| a.1.total_time.total_cmp(&b.1.total_time).then(a.0.cmp(&b.0)));
        found.into_iter().map(|(_, w)| w).collect()
    }
}

pub fn solve_tsp_exact(g: &Graph) -> Result<Walk, TspError> {
    Tsp::new(g).exact()
}

pub fn solve_tsp_heuristic(g: &Graph, seed: u64) -> Walk {
    Tsp::new(g).heuristic(seed)
}

pub fn distinct_tours(g: &Graph, n: usize, seed: u64) -> Vec<Walk> {
    Tsp::new(g).distinct(n, seed)
}
