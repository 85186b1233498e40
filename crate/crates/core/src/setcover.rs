//! Weighted set cover over candidate-tour pools: one covering constraint per
//! graph node, one binary variable per tour.
//!
//! [`exact_cover`] is a depth-first branch and bound. Before searching it
//! drops dominated sets and elements. Each node is pruned by a packing bound
//! over elements that no single set covers together, then by a Lagrangian
//! bound whose multipliers are refined by a few subgradient steps inherited
//! from the parent. Reduced costs at that bound fix sets in or out.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, InstanceParams, NodeId};
use crate::scheduler::{replication_factor, ReplicationMode};
use crate::tours::CandidateTour;

pub const DEFAULT_TIME_LIMIT: Duration = Duration::from_secs(60);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// Number of selected tours.
    TourCount,
    /// Number of UAVs: each tour weighs its replication factor.
    UavCount,
    TotalTime,
    /// Sum of coverage-set sizes.
    TotalCard,
}

impl std::str::FromStr for Objective {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tour-count" => Ok(Objective::TourCount),
            "uav-count" => Ok(Objective::UavCount),
            "total-time" => Ok(Objective::TotalTime),
            "total-card" => Ok(Objective::TotalCard),
            _ => Err(format!("unknown objective {s:?}")),
        }
    }
}

pub fn objective_weight(
    t: &CandidateTour,
    obj: Objective,
    p: &InstanceParams,
    mode: ReplicationMode,
) -> f64 {
    match obj {
        Objective::TourCount => 1.0,
        Objective::UavCount => replication_factor(t, p, mode) as f64,
        Objective::TotalTime => t.time(),
        Objective::TotalCard => t.coverage.len() as f64,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverSet {
    pub tour_id: usize,
    pub elements: BTreeSet<NodeId>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverInstance {
    pub universe: BTreeSet<NodeId>,
    pub sets: Vec<CoverSet>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Proof {
    Optimal,
    Greedy,
    TimeLimitedIncumbent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// Tour ids, ascending.
    pub chosen: Vec<usize>,
    pub objective_value: f64,
    pub proof: Proof,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoverError {
    #[error("candidate pool is empty")]
    EmptyPool,
    #[error("no candidate tour covers nodes {0:?}")]
    Uncovered(Vec<NodeId>),
}

impl CoverInstance {
    pub fn from_pool(
        pool: &[CandidateTour],
        g: &Graph,
        obj: Objective,
        p: &InstanceParams,
        mode: ReplicationMode,
    ) -> Self {
        CoverInstance {
            universe: g.nodes().collect(),
            sets: pool
                .iter()
                .map(|t| CoverSet {
                    tour_id: t.id,
                    elements: t.coverage.clone(),
                    weight: objective_weight(t, obj, p, mode),
                })
                .collect(),
        }
    }

    pub fn uncovered(&self) -> Vec<NodeId> {
        let covered: BTreeSet<NodeId> = self
            .sets
            .iter()
            .flat_map(|s| s.elements.iter().copied())
            .collect();
        self.universe.difference(&covered).copied().collect()
    }

    fn check_feasible(&self) -> Result<(), CoverError> {
        let missing = self.uncovered();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(CoverError::Uncovered(missing))
        }
    }

    /// True when the chosen tour ids cover the universe.
    pub fn is_cover(&self, chosen: &[usize]) -> bool {
        let by_id: BTreeMap<usize, &CoverSet> = self.sets.iter().map(|s| (s.tour_id, s)).collect();
        let mut covered = BTreeSet::new();
        for id in chosen {
            if let Some(s) = by_id.get(id) {
                covered.extend(s.elements.iter().copied());
            }
        }
        self.universe.is_subset(&covered)
    }

    pub fn value_of(&self, chosen: &[usize]) -> f64 {
        let by_id: BTreeMap<usize, f64> = self.sets.iter().map(|s| (s.tour_id, s.weight)).collect();
        chosen.iter().map(|id| by_id[id]).sum()
    }

    /// CPLEX-LP text: `Minimize`, one `>= 1` row per node, all variables
    /// binary. Variables are `x<tour id>`, rows `c<node id>`.
    pub fn to_lp(&self) -> String {
        let mut out = String::new();
        out.push_str("\\ persistent coverage set-cover instance\nMinimize\n obj:");
        for (i, s) in self.sets.iter().enumerate() {
            let sign = if i == 0 { "" } else { " +" };
            let _ = write!(out, "{sign} {} x{}", s.weight, s.tour_id);
        }
        out.push_str("\nSubject To\n");
        for &v in &self.universe {
            let _ = write!(out, " c{v}:");
            let mut first = true;
            for s in self.sets.iter().filter(|s| s.elements.contains(&v)) {
                let _ = write!(out, "{} x{}", if first { "" } else { " +" }, s.tour_id);
                first = false;
            }
            if first {
                out.push_str(" 0 x0");
            }
            out.push_str(" >= 1\n");
        }
        out.push_str("Binary\n");
        for s in &self.sets {
            let _ = writeln!(out, " x{}", s.tour_id);
        }
        out.push_str("End\n");
        out
    }
}

/// Largest newly-covered-per-weight ratio first; ties go to the smaller
/// tour id.
pub fn greedy_cover(ci: &CoverInstance) -> Result<Selection, CoverError> {
    ci.check_feasible()?;
    let mut uncovered: BTreeSet<NodeId> = ci.universe.clone();
    let mut chosen = Vec::new();
    let mut used = vec![false; ci.sets.len()];
    while !uncovered.is_empty() {
        let mut best: Option<(usize, usize)> = None;
        for (i, s) in ci.sets.iter().enumerate() {
            if used[i] {
                continue;
            }
            let gain = s.elements.intersection(&uncovered).count();
            if gain == 0 {
                continue;
            }
            let better = match best {
                None => true,
                Some((bi, bgain)) => {
                    let b = &ci.sets[bi];
                    let lhs = gain as f64 * b.weight;
                    let rhs = bgain as f64 * s.weight;
                    lhs > rhs || (lhs == rhs && s.tour_id < b.tour_id)
                }
            };
            if better {
                best = Some((i, gain));
            }
        }
        let (i, _) = best.expect("feasibility checked above");
        used[i] = true;
        chosen.push(ci.sets[i].tour_id);
        for v in &ci.sets[i].elements {
            uncovered.remove(v);
        }
    }
    chosen.sort_unstable();
    Ok(Selection {
        objective_value: ci.value_of(&chosen),
        chosen,
        proof: Proof::Greedy,
    })
}

/// Dense working copy of an instance after reductions.
struct Reduced {
    n: usize,
    sets: Vec<FixedBitSet>,
    weights: Vec<f64>,
    /// index into the original `CoverInstance::sets`
    origin: Vec<usize>,
    /// sets containing each element
    containing: Vec<Vec<usize>>,
    integral: bool,
}

fn reduce(ci: &CoverInstance) -> Reduced {
    let elems: Vec<NodeId> = ci.universe.iter().copied().collect();
    let index: BTreeMap<NodeId, usize> = elems.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut n = elems.len();
    let mut sets: Vec<FixedBitSet> = Vec::new();
    let mut weights = Vec::new();
    let mut origin = Vec::new();
    for (k, s) in ci.sets.iter().enumerate() {
        let mut bits = FixedBitSet::with_capacity(n);
        for v in &s.elements {
            if let Some(&i) = index.get(v) {
                bits.insert(i);
            }
        }
        if bits.count_ones(..) > 0 {
            sets.push(bits);
            weights.push(s.weight);
            origin.push(k);
        }
    }
    let mut alive_elems: Vec<usize> = (0..n).collect();

    for _round in 0..8 {
        let mut changed = false;

        // Set dominance: drop S_i when some S_j ⊇ S_i with w_j <= w_i.
        let mut order: Vec<usize> = (0..sets.len()).collect();
        order.sort_by(|&a, &b| {
            sets[b]
                .count_ones(..)
                .cmp(&sets[a].count_ones(..))
                .then(weights[a].total_cmp(&weights[b]))
                .then(ci.sets[origin[a]].tour_id.cmp(&ci.sets[origin[b]].tour_id))
        });
        let mut kept: Vec<usize> = Vec::new();
        for &i in &order {
            let dominated = kept
                .iter()
                .any(|&j| weights[j] <= weights[i] && sets[i].is_subset(&sets[j]));
            if !dominated {
                kept.push(i);
            }
        }
        if kept.len() < sets.len() {
            changed = true;
            kept.sort_unstable_by_key(|&i| origin[i]);
            sets = kept.iter().map(|&i| sets[i].clone()).collect();
            weights = kept.iter().map(|&i| weights[i]).collect();
            origin = kept.iter().map(|&i| origin[i]).collect();
        }

        // Element dominance: covering e covers f whenever sets(e) ⊆ sets(f).
        let m = sets.len();
        let mut by_elem: Vec<FixedBitSet> = (0..n).map(|_| FixedBitSet::with_capacity(m)).collect();
        for (s, bits) in sets.iter().enumerate() {
            for e in bits.ones() {
                by_elem[e].insert(s);
            }
        }
        let mut drop = vec![false; n];
        for a in 0..n {
            if drop[a] {
                continue;
            }
            for b in 0..n {
                if a == b || drop[b] {
                    continue;
                }
                let sub = by_elem[a].is_subset(&by_elem[b]);
                if sub && (by_elem[a] != by_elem[b] || a < b) {
                    drop[b] = true;
                }
            }
        }
        if drop.iter().any(|&x| x) {
            changed = true;
            let keep: Vec<usize> = (0..n).filter(|&e| !drop[e]).collect();
            let remap: Vec<usize> = {
                let mut r = vec![usize::MAX; n];
                for (new, &old) in keep.iter().enumerate() {
                    r[old] = new;
                }
                r
            };
            let new_n = keep.len();
            for bits in sets.iter_mut() {
                let mut nb = FixedBitSet::with_capacity(new_n);
                for e in bits.ones() {
                    if remap[e] != usize::MAX {
                        nb.insert(remap[e]);
                    }
                }
                *bits = nb;
            }
            alive_elems = keep.iter().map(|&e| alive_elems[e]).collect();
            n = new_n;
            // sets that lost every element
            let nonempty: Vec<usize> = (0..sets.len()).filter(|&i| sets[i].count_ones(..) > 0).collect();
            if nonempty.len() < sets.len() {
                sets = nonempty.iter().map(|&i| sets[i].clone()).collect();
                weights = nonempty.iter().map(|&i| weights[i]).collect();
                origin = nonempty.iter().map(|&i| origin[i]).collect();
            }
        }
        if !changed {
            break;
        }
    }
    let mut containing = vec![Vec::new(); n];
    for (s, bits) in sets.iter().enumerate() {
        for e in bits.ones() {
            containing[e].push(s);
        }
    }
    let integral = weights.iter().all(|w| w.fract() == 0.0);
    Reduced {
        n,
        sets,
        weights,
        origin,
        containing,
        integral,
    }
}

struct Search<'a> {
    r: &'a Reduced,
    /// elements in descending order of cheapest covering weight
    packing_order: Vec<usize>,
    min_weight: Vec<f64>,
    /// elements sharing a set with each element
    neighborhood: Vec<FixedBitSet>,
    excluded: Vec<bool>,
    chosen: Vec<usize>,
    best: f64,
    best_sets: Vec<usize>,
    deadline: Instant,
    stopped: bool,
    nodes: u64,
    node_limit: u64,
    /// root bound and reduced costs, for fixing sets as the incumbent drops
    root: Option<Bound>,
}

const EPS: f64 = 1e-9;
const ROOT_ITERS: usize = 500;
const NODE_ITERS: usize = 60;

struct Bound {
    value: f64,
    /// reduced cost per set at the best multipliers; infinite when excluded
    reduced: Vec<f64>,
}

impl<'a> Search<'a> {
    fn new(r: &'a Reduced, deadline: Instant, incumbent: f64) -> Self {
        let n = r.n;
        let min_weight: Vec<f64> = (0..n)
            .map(|e| {
                r.containing[e]
                    .iter()
                    .map(|&s| r.weights[s])
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let mut packing_order: Vec<usize> = (0..n).collect();
        packing_order.sort_by(|&a, &b| {
            min_weight[b]
                .total_cmp(&min_weight[a])
                .then(r.containing[a].len().cmp(&r.containing[b].len()))
                .then(a.cmp(&b))
        });
        let neighborhood = (0..n)
            .map(|e| {
                let mut nb = FixedBitSet::with_capacity(n);
                for &s in &r.containing[e] {
                    nb.union_with(&r.sets[s]);
                }
                nb
            })
            .collect();
        Search {
            r,
            packing_order,
            min_weight,
            neighborhood,
            excluded: vec![false; r.sets.len()],
            chosen: Vec::new(),
            best: incumbent,
            best_sets: Vec::new(),
            deadline,
            stopped: false,
            nodes: 0,
            node_limit: u64::MAX,
            root: None,
        }
    }

    fn initial_multipliers(&self) -> Vec<f64> {
        (0..self.r.n)
            .map(|e| {
                self.r.containing[e]
                    .iter()
                    .map(|&s| self.r.weights[s] / self.r.sets[s].count_ones(..) as f64)
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    /// True when no solution with total cost at least `lb` can beat the
    /// incumbent.
    fn dominated(&self, lb: f64) -> bool {
        let lb = if self.r.integral { (lb - 1e-6).ceil() } else { lb };
        lb >= self.best - EPS
    }

    /// Whether the root bound alone rules set `s` out of any improvement.
    fn root_fixed(&self, s: usize) -> bool {
        self.root.as_ref().is_some_and(|b| {
            let c = b.reduced[s];
            c >= 0.0 && self.dominated(b.value + c)
        })
    }

    fn usable(&self, s: usize) -> bool {
        !self.excluded[s] && !self.root_fixed(s)
    }

    /// Non-excluded sets meeting `uncovered`, with the elements they still
    /// cover.
    fn active(&self, uncovered: &FixedBitSet) -> Vec<(usize, Vec<usize>)> {
        (0..self.r.sets.len())
            .filter(|&s| self.usable(s))
            .filter_map(|s| {
                let els: Vec<usize> = self.r.sets[s].intersection(uncovered).collect();
                (!els.is_empty()).then_some((s, els))
            })
            .collect()
    }

    /// Lagrangian value at `u`; fills reduced costs of active sets and the
    /// subgradient on uncovered elements.
    fn evaluate(
        &self,
        u: &[f64],
        uncovered: &FixedBitSet,
        active: &[(usize, Vec<usize>)],
        reduced: &mut [f64],
        sub: &mut [f64],
    ) -> f64 {
        let mut value = 0.0;
        for e in uncovered.ones() {
            value += u[e];
            sub[e] = 1.0;
        }
        for (s, els) in active {
            let c = self.r.weights[*s] - els.iter().map(|&e| u[e]).sum::<f64>();
            reduced[*s] = c;
            if c < 0.0 {
                value += c;
                for &e in els {
                    sub[e] -= 1.0;
                }
            }
        }
        value
    }

    /// Subgradient ascent from `u` (left at the best point found); stops as
    /// soon as the bound prunes the node.
    fn bound(
        &mut self,
        uncovered: &FixedBitSet,
        active: &[(usize, Vec<usize>)],
        cost: f64,
        u: &mut Vec<f64>,
        iters: usize,
    ) -> Bound {
        // inactive sets keep their full weight as reduced cost
        let mut reduced: Vec<f64> = (0..self.r.sets.len())
            .map(|s| {
                if self.excluded[s] {
                    f64::INFINITY
                } else {
                    self.r.weights[s]
                }
            })
            .collect();
        let mut sub = vec![0.0; self.r.n];
        let mut best = Bound {
            value: f64::NEG_INFINITY,
            reduced: Vec::new(),
        };
        let mut best_u = u.clone();
        let target = self.best - cost;
        let patience = if iters > 100 { 15 } else { 4 };
        let mut lambda = 1.0;
        let mut stall = 0;
        for it in 0..iters.max(1) {
            let value = self.evaluate(u, uncovered, active, &mut reduced, &mut sub);
            if iters > 100 && it % 5 == 0 {
                self.repair(uncovered, cost, active, u);
            }
            if value > best.value + EPS {
                best.value = value;
                best.reduced.clone_from(&reduced);
                best_u.clone_from(u);
                stall = 0;
            } else {
                stall += 1;
                if stall >= patience {
                    lambda /= 2.0;
                    stall = 0;
                }
            }
            if self.dominated(cost + best.value) || it + 1 == iters {
                break;
            }
            let norm: f64 = uncovered.ones().map(|e| sub[e] * sub[e]).sum();
            if norm < EPS || lambda < 1e-3 {
                break;
            }
            let step = lambda * (target - value).max(1e-6) / norm;
            for e in uncovered.ones() {
                u[e] = (u[e] + step * sub[e]).max(0.0);
            }
        }
        *u = best_u;
        best
    }

    /// Primal heuristic driven by multipliers `u`: repeatedly take the set
    /// with the best Lagrangian score (`gamma / mu` for positive reduced cost
    /// `gamma`, `gamma * mu` otherwise, `mu` = newly covered elements), then
    /// drop redundant picks, heaviest first. Updates the incumbent.
    fn repair(&mut self, uncovered: &FixedBitSet, cost: f64, active: &[(usize, Vec<usize>)], u: &[f64]) {
        let m = self.r.sets.len();
        let mut mu = vec![0usize; m];
        let mut gamma = vec![0.0f64; m];
        for (s, els) in active {
            mu[*s] = els.len();
            gamma[*s] = self.r.weights[*s] - els.iter().map(|&e| u[e]).sum::<f64>();
        }
        let mut rest = uncovered.clone();
        let mut picks = Vec::new();
        while !rest.is_clear() {
            let mut choice: Option<(f64, usize)> = None;
            for (s, _) in active {
                let s = *s;
                if mu[s] == 0 {
                    continue;
                }
                let score = if gamma[s] > 0.0 {
                    gamma[s] / mu[s] as f64
                } else {
                    gamma[s] * mu[s] as f64
                };
                if choice.is_none_or(|(best, _)| score < best) {
                    choice = Some((score, s));
                }
            }
            let Some((_, s)) = choice else { return };
            picks.push(s);
            let newly: Vec<usize> = self.r.sets[s].intersection(&rest).collect();
            for e in newly {
                rest.set(e, false);
                for &t in &self.r.containing[e] {
                    if mu[t] > 0 {
                        mu[t] -= 1;
                        gamma[t] += u[e];
                    }
                }
            }
        }
        let mut count = vec![0u32; self.r.n];
        for &s in &picks {
            for e in self.r.sets[s].intersection(uncovered) {
                count[e] += 1;
            }
        }
        picks.sort_by(|&a, &b| self.r.weights[b].total_cmp(&self.r.weights[a]).then(a.cmp(&b)));
        let mut kept = Vec::with_capacity(picks.len());
        for s in picks {
            if self.r.sets[s].intersection(uncovered).all(|e| count[e] >= 2) {
                for e in self.r.sets[s].intersection(uncovered) {
                    count[e] -= 1;
                }
            } else {
                kept.push(s);
            }
        }
        let total = cost + kept.iter().map(|&s| self.r.weights[s]).sum::<f64>();
        if total < self.best - EPS {
            self.best = total;
            self.best_sets = self.chosen.iter().copied().chain(kept).collect();
        }
    }

    fn packing_bound(&self, uncovered: &FixedBitSet) -> f64 {
        let mut blocked = FixedBitSet::with_capacity(self.r.n);
        let mut bound = 0.0;
        for &e in &self.packing_order {
            if uncovered.contains(e) && !blocked.contains(e) {
                bound += self.min_weight[e];
                blocked.union_with(&self.neighborhood[e]);
            }
        }
        bound
    }

    fn take(&mut self, s: usize, uncovered: &FixedBitSet, cost: f64, u: &[f64]) {
        let mut rest = uncovered.clone();
        rest.difference_with(&self.r.sets[s]);
        self.chosen.push(s);
        self.search(&rest, cost + self.r.weights[s], u.to_vec(), NODE_ITERS);
        self.chosen.pop();
    }

    fn search(&mut self, uncovered: &FixedBitSet, cost: f64, mut u: Vec<f64>, iters: usize) {
        if self.stopped {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.node_limit || (self.nodes.is_multiple_of(16) && Instant::now() >= self.deadline) {
            self.stopped = true;
            return;
        }
        if uncovered.is_clear() {
            if cost < self.best - EPS {
                self.best = cost;
                self.best_sets = self.chosen.clone();
            }
            return;
        }
        if self.dominated(cost + self.packing_bound(uncovered)) {
            return;
        }
        let active = self.active(uncovered);
        let b = self.bound(uncovered, &active, cost, &mut u, iters);
        if self.dominated(cost + b.value) {
            return;
        }
        self.repair(uncovered, cost, &active, &u);
        if self.nodes == 1 {
            log::debug!("set cover root bound {:.3}, incumbent {}", b.value, self.best);
            self.root = Some(Bound {
                value: b.value,
                reduced: b.reduced.clone(),
            });
        }
        if self.dominated(cost + b.value) {
            return;
        }

        // Reduced-cost fixing: a set whose inclusion (or exclusion) alone
        // lifts the bound past the incumbent is dropped (or forced).
        let mut fixed = Vec::new();
        let mut forced = None;
        for s in 0..self.r.sets.len() {
            if self.excluded[s] {
                continue;
            }
            let c = b.reduced[s];
            if c >= 0.0 {
                if self.dominated(cost + b.value + c) {
                    self.excluded[s] = true;
                    fixed.push(s);
                }
            } else if forced.is_none() && self.dominated(cost + b.value - c) {
                forced = Some(s);
            }
        }
        if let Some(s) = forced {
            self.take(s, uncovered, cost, &u);
        } else {
            self.branch(uncovered, cost, &u, &b.reduced);
        }
        for s in fixed {
            self.excluded[s] = false;
        }
    }

    /// Branches on the uncovered element with the fewest remaining sets,
    /// cheapest reduced cost first. Later siblings exclude earlier choices.
    fn branch(&mut self, uncovered: &FixedBitSet, cost: f64, u: &[f64], reduced: &[f64]) {
        let mut pick: Option<(usize, usize)> = None;
        for e in uncovered.ones() {
            let k = self.r.containing[e]
                .iter()
                .filter(|&&s| self.usable(s))
                .count();
            if pick.is_none_or(|(_, pk)| k < pk) {
                pick = Some((e, k));
            }
        }
        let (e, k) = pick.expect("uncovered is nonempty");
        if k == 0 {
            return;
        }
        let mut options: Vec<usize> = self.r.containing[e]
            .iter()
            .copied()
            .filter(|&s| self.usable(s))
            .collect();
        options.sort_by(|&a, &b| reduced[a].total_cmp(&reduced[b]).then(a.cmp(&b)));
        let mut banned = Vec::with_capacity(options.len());
        for s in options {
            self.take(s, uncovered, cost, u);
            self.excluded[s] = true;
            banned.push(s);
            if self.stopped {
                break;
            }
        }
        for s in banned {
            self.excluded[s] = false;
        }
    }
}

/// Greedy cover followed by removal of sets made redundant by later picks.
fn incumbent(ci: &CoverInstance) -> Result<Selection, CoverError> {
    let mut sel = greedy_cover(ci)?;
    let mut by_weight: Vec<usize> = sel.chosen.clone();
    let weight: BTreeMap<usize, f64> = ci.sets.iter().map(|s| (s.tour_id, s.weight)).collect();
    by_weight.sort_by(|a, b| weight[b].total_cmp(&weight[a]).then(b.cmp(a)));
    for id in by_weight {
        let without: Vec<usize> = sel.chosen.iter().copied().filter(|&x| x != id).collect();
        if ci.is_cover(&without) {
            sel.chosen = without;
        }
    }
    sel.objective_value = ci.value_of(&sel.chosen);
    Ok(sel)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverOptions {
    pub time_limit: Duration,
    /// Deterministic alternative to the wall-clock limit.
    pub node_limit: Option<u64>,
    /// Known covers (tour ids); the cheapest valid one seeds the search.
    pub warm_starts: Vec<Vec<usize>>,
}

impl CoverOptions {
    pub fn new(time_limit: Duration) -> Self {
        CoverOptions {
            time_limit,
            node_limit: None,
            warm_starts: Vec::new(),
        }
    }
}

impl Default for CoverOptions {
    fn default() -> Self {
        CoverOptions::new(DEFAULT_TIME_LIMIT)
    }
}

/// Branch and bound seeded with the greedy incumbent. Returns
/// [`Proof::Optimal`] when the search finishes within `time_limit`.
pub fn exact_cover(ci: &CoverInstance, time_limit: Duration) -> Result<Selection, CoverError> {
    exact_cover_with(ci, &CoverOptions::new(time_limit))
}

pub fn exact_cover_with(ci: &CoverInstance, opts: &CoverOptions) -> Result<Selection, CoverError> {
    let start = Instant::now();
    let mut warm = incumbent(ci)?;
    for ws in &opts.warm_starts {
        let mut chosen = ws.clone();
        chosen.sort_unstable();
        chosen.dedup();
        let known = chosen.iter().all(|id| ci.sets.iter().any(|s| s.tour_id == *id));
        if known && ci.is_cover(&chosen) {
            let value = ci.value_of(&chosen);
            if value < warm.objective_value - EPS {
                warm = Selection {
                    chosen,
                    objective_value: value,
                    proof: Proof::Greedy,
                };
            }
        }
    }
    let r = reduce(ci);
    // The incumbent may use sets dropped as dominated; its value still
    // bounds the search and it is returned when nothing beats it.
    let mut search = Search::new(&r, start + opts.time_limit, warm.objective_value);
    search.node_limit = opts.node_limit.unwrap_or(u64::MAX);
    let mut all = FixedBitSet::with_capacity(r.n);
    all.insert_range(..);
    let u = search.initial_multipliers();
    search.search(&all, 0.0, u, ROOT_ITERS);
    log::debug!(
        "set cover: {} sets ({} after reduction), {} elements after reduction, {} nodes, {:?}",
        ci.sets.len(),
        r.sets.len(),
        r.n,
        search.nodes,
        start.elapsed()
    );
    let mut sel = if search.best_sets.is_empty() {
        warm
    } else {
        let mut chosen: Vec<usize> = search
            .best_sets
            .iter()
            .map(|&s| ci.sets[r.origin[s]].tour_id)
            .collect();
        chosen.sort_unstable();
        Selection {
            objective_value: ci.value_of(&chosen),
            chosen,
            proof: Proof::Optimal,
        }
    };
    sel.proof = if search.stopped {
        Proof::TimeLimitedIncumbent
    } else {
        Proof::Optimal
    };
    debug_assert!(ci.is_cover(&sel.chosen));
    Ok(sel)
}

/// Builds the covering program for a pool (one row per graph node) and
/// solves it exactly within `time_limit`.
pub fn solve_cover(
    pool: &[CandidateTour],
    g: &Graph,
    obj: Objective,
    p: &InstanceParams,
    mode: ReplicationMode,
    time_limit: Duration,
) -> Result<Selection, CoverError> {
    solve_cover_with(pool, g, obj, p, mode, &CoverOptions::new(time_limit))
}

pub fn solve_cover_with(
    pool: &[CandidateTour],
    g: &Graph,
    obj: Objective,
    p: &InstanceParams,
    mode: ReplicationMode,
    opts: &CoverOptions,
) -> Result<Selection, CoverError> {
    if pool.is_empty() {
        return Err(CoverError::EmptyPool);
    }
    let ci = CoverInstance::from_pool(pool, g, obj, p, mode);
    exact_cover_with(&ci, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(universe: &[NodeId], sets: &[(&[NodeId], f64)]) -> CoverInstance {
        CoverInstance {
            universe: universe.iter().copied().collect(),
            sets: sets
                .iter()
                .enumerate()
                .map(|(i, (els, w))| CoverSet {
                    tour_id: i,
                    elements: els.iter().copied().collect(),
                    weight: *w,
                })
                .collect(),
        }
    }

    #[test]
    fn triangle_instance() {
        let ci = inst(&[1, 2, 3], &[(&[1, 2], 1.0), (&[2, 3], 1.0), (&[1, 3], 1.0)]);
        assert_eq!(greedy_cover(&ci).unwrap().chosen.len(), 2);
        let ex = exact_cover(&ci, DEFAULT_TIME_LIMIT).unwrap();
        assert_eq!(ex.objective_value, 2.0);
        assert_eq!(ex.proof, Proof::Optimal);
    }

    #[test]
    fn single_full_set() {
        let ci = inst(&[1, 2, 3], &[(&[1, 2, 3], 5.0)]);
        assert_eq!(greedy_cover(&ci).unwrap().chosen, vec![0]);
        // greedy grabs the cheap singleton first; the exact solver drops it
        let ci = inst(&[1, 2, 3], &[(&[1, 2, 3], 5.0), (&[1], 1.0)]);
        assert_eq!(greedy_cover(&ci).unwrap().chosen, vec![0, 1]);
        assert_eq!(exact_cover(&ci, DEFAULT_TIME_LIMIT).unwrap().chosen, vec![0]);
    }

    #[test]
    fn uncovered_element_is_reported() {
        let ci = inst(&[1, 2, 3], &[(&[1, 2], 1.0)]);
        assert_eq!(greedy_cover(&ci), Err(CoverError::Uncovered(vec![3])));
        assert_eq!(
            exact_cover(&ci, DEFAULT_TIME_LIMIT),
            Err(CoverError::Uncovered(vec![3]))
        );
    }

    #[test]
    fn exact_beats_greedy_on_classic_trap() {
        // greedy takes the big middle set first and needs 3
        let ci = inst(
            &[1, 2, 3, 4, 5, 6],
            &[(&[1, 2, 3], 1.0), (&[4, 5, 6], 1.0), (&[2, 3, 4, 5], 1.0), (&[1], 1.0), (&[6], 1.0)],
        );
        let greedy = greedy_cover(&ci).unwrap();
        let exact = exact_cover(&ci, DEFAULT_TIME_LIMIT).unwrap();
        assert_eq!(greedy.objective_value, 3.0);
        assert_eq!(exact.objective_value, 2.0);

        let ci = inst(
            &[1, 2, 3, 4],
            &[(&[1, 2], 1.0), (&[3, 4], 1.0), (&[1, 3], 1.0), (&[2], 1.0), (&[4], 1.0)],
        );
        let greedy = greedy_cover(&ci).unwrap();
        let exact = exact_cover(&ci, DEFAULT_TIME_LIMIT).unwrap();
        assert!(exact.objective_value <= greedy.objective_value);
        assert_eq!(exact.objective_value, 2.0);
    }

    #[test]
    fn lp_export_lists_every_row() {
        let ci = inst(&[1, 2], &[(&[1, 2], 3.0), (&[2], 1.0)]);
        let lp = ci.to_lp();
        assert!(lp.contains("obj: 3 x0 + 1 x1"));
        assert!(lp.contains(" c1: x0 >= 1"));
        assert!(lp.contains(" c2: x0 + x1 >= 1"));
        assert!(lp.trim_end().ends_with("End"));
    }

    #[test]
    fn zero_time_limit_still_returns_a_cover() {
        let ci = inst(&[1, 2, 3], &[(&[1, 2], 1.0), (&[2, 3], 1.0), (&[1, 3], 1.0)]);
        let sel = exact_cover(&ci, Duration::ZERO).unwrap();
        assert!(ci.is_cover(&sel.chosen));
    }

    #[test]
    fn warm_start_survives_a_zero_node_budget() {
        let ci = inst(
            &[1, 2, 3, 4, 5, 6],
            &[(&[1, 2, 3], 1.0), (&[4, 5, 6], 1.0), (&[2, 3, 4, 5], 1.0), (&[1], 1.0), (&[6], 1.0)],
        );
        let opts = CoverOptions {
            node_limit: Some(0),
            warm_starts: vec![vec![1, 0], vec![99]],
            ..CoverOptions::default()
        };
        let sel = exact_cover_with(&ci, &opts).unwrap();
        assert_eq!(sel.chosen, vec![0, 1]);
        assert_eq!(sel.proof, Proof::TimeLimitedIncumbent);
    }
}
