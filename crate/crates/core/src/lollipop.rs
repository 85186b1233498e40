//! Maximum lollipop tours: a shortest-path stem from the station to an
//! anchor node, then a cycle through the anchor whose nodes are all at
//! least as far from the station as the anchor.
//!
//! Cycles start from a triangle (or a two-node spur when the anchor has no
//! outward triangle) and grow by splicing: a node `u` adjacent to two
//! consecutive cycle nodes `c_i, c_{i+1}` replaces that edge with
//! `c_i -> u -> c_{i+1}`. A cycle is maximal when no splice keeps the tour
//! within the flight budget and every cycle node within the deadline.

use std::collections::HashSet;

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::graph::{within, DistanceMap, Graph, InstanceParams, NodeId};
use crate::tours::{dedup_by_coverage, CandidateTour, Origin};
use crate::tsp::Walk;

/// Default cap on explored cycles per anchor.
pub const DEFAULT_MAX_STATES: usize = 50_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LollipopTour {
    pub anchor: NodeId,
    /// Tree path `station -> anchor`.
    pub stem: Vec<NodeId>,
    /// Cycle through the anchor, anchor first; the closing edge back to the
    /// anchor is implicit. Two entries mean an out-and-back spur.
    pub cycle: Vec<NodeId>,
}

/// Node set of a cycle; two cycles are the same lollipop iff their keys match.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CycleKey(FixedBitSet);

impl CycleKey {
    pub fn new(n: usize, nodes: &[NodeId]) -> Self {
        let mut bits = FixedBitSet::with_capacity(n);
        for &v in nodes {
            bits.insert(v);
        }
        CycleKey(bits)
    }

    pub fn nodes(&self) -> Vec<NodeId> {
        self.0.ones().collect()
    }
}

fn cycle_time(g: &Graph, cycle: &[NodeId]) -> f64 {
    let n = cycle.len();
    if n < 2 {
        return 0.0;
    }
    (0..n)
        .map(|i| {
            g.edge_time(cycle[i], cycle[(i + 1) % n])
                .expect("cycle edges exist")
        })
        .sum()
}

impl LollipopTour {
    fn new(g: &Graph, d: &DistanceMap, cycle: Vec<NodeId>) -> Self {
        let anchor = cycle[0];
        let mut t = LollipopTour {
            anchor,
            stem: d.path_from_root(anchor),
            cycle,
        };
        t.orient(g);
        t
    }

    pub fn is_spur(&self) -> bool {
        self.cycle.len() == 2
    }

    pub fn key(&self, n: usize) -> CycleKey {
        CycleKey::new(n, &self.cycle)
    }

    pub fn cycle_time(&self, g: &Graph) -> f64 {
        cycle_time(g, &self.cycle)
    }

    fn stem_time(&self, d: &DistanceMap) -> f64 {
        d.dist(self.anchor)
    }

    pub fn time(&self, g: &Graph, d: &DistanceMap) -> f64 {
        2.0 * self.stem_time(d) + self.cycle_time(g)
    }

    /// Latest first arrival over the cycle in the stored orientation.
    pub fn max_arrival(&self, g: &Graph, d: &DistanceMap) -> f64 {
        let n = self.cycle.len();
        if n < 2 {
            return self.stem_time(d);
        }
        let closing = g.edge_time(self.cycle[n - 1], self.anchor).unwrap();
        self.stem_time(d) + self.cycle_time(g) - closing
    }

    /// Stores the orientation whose last cycle node is reached earlier.
    fn orient(&mut self, g: &Graph) {
        let n = self.cycle.len();
        if n < 3 {
            return;
        }
        let first = g.edge_time(self.anchor, self.cycle[1]).unwrap();
        let last = g.edge_time(self.cycle[n - 1], self.anchor).unwrap();
        if first > last {
            self.cycle[1..].reverse();
        }
    }

    pub fn is_feasible(&self, g: &Graph, d: &DistanceMap, p: &InstanceParams) -> bool {
        within(self.time(g, d), p.battery) && within(self.max_arrival(g, d), p.latency)
    }

    /// stem, cycle, back to the anchor, stem reversed.
    pub fn walk(&self, g: &Graph) -> Walk {
        let mut nodes = self.stem.clone();
        if self.cycle.len() > 1 {
            nodes.extend(&self.cycle[1..]);
            nodes.push(self.anchor);
        }
        nodes.extend(self.stem.iter().rev().skip(1));
        Walk::new(g, nodes).expect("lollipop edges exist")
    }

    pub fn to_candidate(&self, g: &Graph, p: &InstanceParams) -> CandidateTour {
        CandidateTour::from_walk(self.walk(g), g, p, Origin::Lollipop)
            .expect("feasible lollipop is within budget")
    }

    fn spliced(&self, g: &Graph, d: &DistanceMap, pos: usize, u: NodeId) -> LollipopTour {
        let mut cycle = self.cycle.clone();
        cycle.insert(pos + 1, u);
        LollipopTour::new(g, d, cycle)
    }
}

fn outward_neighbors(g: &Graph, v: NodeId, d: &DistanceMap) -> Vec<NodeId> {
    g.neighbors(v)
        .iter()
        .map(|&(a, _)| a)
        .filter(|&a| a != g.station() && d.dist(a) >= d.dist(v))
        .collect()
}

fn triangles(g: &Graph, v: NodeId, d: &DistanceMap) -> Vec<LollipopTour> {
    let out = outward_neighbors(g, v, d);
    let mut tours = Vec::new();
    for (i, &a) in out.iter().enumerate() {
        for &c in &out[i + 1..] {
            if g.has_edge(a, c) {
                tours.push(LollipopTour::new(g, d, vec![v, a, c]));
            }
        }
    }
    tours
}

fn spurs(g: &Graph, v: NodeId, d: &DistanceMap) -> Vec<LollipopTour> {
    outward_neighbors(g, v, d)
        .into_iter()
        .map(|a| LollipopTour::new(g, d, vec![v, a]))
        .collect()
}

/// Triangles `v, a, c` over pairs of outward neighbors that are adjacent to
/// each other; spurs `v -> a -> v` when no such pair exists.
pub fn initial_cycle(g: &Graph, v: NodeId, d: &DistanceMap) -> Vec<LollipopTour> {
    if v == g.station() {
        return Vec::new();
    }
    let tri = triangles(g, v, d);
    if tri.is_empty() {
        spurs(g, v, d)
    } else {
        tri
    }
}

/// `(pos, u)` pairs: `u` can be spliced between `cycle[pos]` and the next
/// cycle node.
fn splices(t: &LollipopTour, g: &Graph, d: &DistanceMap) -> Vec<(usize, NodeId)> {
    let n = t.cycle.len();
    // a spur has one distinct edge
    let positions = if n == 2 { 1 } else { n };
    let mut out = Vec::new();
    for pos in 0..positions {
        let a = t.cycle[pos];
        let b = t.cycle[(pos + 1) % n];
        let floor = d.dist(a).min(d.dist(b));
        for &(u, _) in g.neighbors(a) {
            if u == g.station() || t.cycle.contains(&u) {
                continue;
            }
            if d.dist(u) >= floor && g.has_edge(u, b) {
                out.push((pos, u));
            }
        }
    }
    out
}

/// Nodes that could be spliced into the cycle, ignoring feasibility.
pub fn expand_candidates(t: &LollipopTour, g: &Graph, d: &DistanceMap) -> Vec<NodeId> {
    let mut out: Vec<NodeId> = splices(t, g, d).into_iter().map(|(_, u)| u).collect();
    out.sort_unstable();
    out.dedup();
    out
}

fn feasible_children(
    t: &LollipopTour,
    g: &Graph,
    d: &DistanceMap,
    p: &InstanceParams,
) -> Vec<LollipopTour> {
    splices(t, g, d)
        .into_iter()
        .map(|(pos, u)| t.spliced(g, d, pos, u))
        .filter(|c| c.is_feasible(g, d, p))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpandLimits {
    /// Maximum number of distinct cycles explored.
    pub max_states: usize,
    /// Stop after this many maximal tours.
    pub max_tours: Option<usize>,
}

impl Default for ExpandLimits {
    fn default() -> Self {
        ExpandLimits {
            max_states: DEFAULT_MAX_STATES,
            max_tours: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expansion {
    pub tours: Vec<LollipopTour>,
    /// True when the state cap stopped the search early.
    pub truncated: bool,
}

/// Every maximal lollipop tour reachable from the initial cycles of `v`,
/// unique by node set. Depth-first with a visited set of [`CycleKey`]s.
pub fn expand_all(
    g: &Graph,
    v: NodeId,
    d: &DistanceMap,
    p: &InstanceParams,
    limits: ExpandLimits,
) -> Expansion {
    let mut result = Expansion {
        tours: Vec::new(),
        truncated: false,
    };
    if v == g.station() || limits.max_tours == Some(0) {
        return result;
    }
    let mut roots: Vec<LollipopTour> = triangles(g, v, d)
        .into_iter()
        .filter(|t| t.is_feasible(g, d, p))
        .collect();
    if roots.is_empty() {
        roots = spurs(g, v, d)
            .into_iter()
            .filter(|t| t.is_feasible(g, d, p))
            .collect();
    }
    let n = g.len();
    let mut visited: HashSet<CycleKey> = HashSet::new();
    let mut stack: Vec<LollipopTour> = Vec::new();
    for t in roots.into_iter().rev() {
        if visited.insert(t.key(n)) {
            stack.push(t);
        }
    }
    let mut states = visited.len();
    while let Some(t) = stack.pop() {
        let children = feasible_children(&t, g, d, p);
        if children.is_empty() {
            result.tours.push(t);
            if limits.max_tours.is_some_and(|m| result.tours.len() >= m) {
                break;
            }
            continue;
        }
        for c in children.into_iter().rev() {
            if states >= limits.max_states {
                result.truncated = true;
                break;
            }
            if visited.insert(c.key(n)) {
                states += 1;
                stack.push(c);
            }
        }
    }
    if result.truncated {
        log::debug!(
            "lollipop enumeration at node {v} hit the {} state cap with {} maximal tours",
            limits.max_states,
            result.tours.len()
        );
    }
    result
}

/// Best strict improvement from reversing a stretch of the cycle or moving
/// one node, using only existing edges.
fn improve_order(t: &LollipopTour, g: &Graph, d: &DistanceMap, p: &InstanceParams) -> Option<LollipopTour> {
    let n = t.cycle.len();
    if n < 4 {
        return None;
    }
    let base = t.cycle_time(g);
    let mut best: Option<(f64, Vec<NodeId>)> = None;
    let mut consider = |cand: Vec<NodeId>| {
        if (0..cand.len()).all(|i| g.has_edge(cand[i], cand[(i + 1) % cand.len()])) {
            let time = cycle_time(g, &cand);
            if time < base - 1e-9 && best.as_ref().is_none_or(|b| time < b.0 - 1e-9) {
                best = Some((time, cand));
            }
        }
    };
    for i in 0..n {
        for j in i + 2..n {
            let mut cand = t.cycle.clone();
            cand[i + 1..=j].reverse();
            consider(cand);
        }
    }
    for k in 0..n {
        for m in 0..n {
            if m == k || (m + 1) % n == k {
                continue;
            }
            let mut cand = t.cycle.clone();
            let node = cand.remove(k);
            let at = if m < k { m + 1 } else { m };
            cand.insert(at, node);
            consider(cand);
        }
    }
    let (_, mut cycle) = best?;
    let pos = cycle.iter().position(|&x| x == t.anchor).unwrap();
    cycle.rotate_left(pos);
    let cand = LollipopTour::new(g, d, cycle);
    cand.is_feasible(g, d, p).then_some(cand)
}

/// Re-tours the cycle's node set, then lets the shorter cycle absorb more
/// nodes by splicing; repeats until neither step applies.
pub fn reoptimize_cycle(
    t: &LollipopTour,
    g: &Graph,
    d: &DistanceMap,
    p: &InstanceParams,
) -> LollipopTour {
    let mut cur = t.clone();
    loop {
        let mut changed = false;
        while let Some(better) = improve_order(&cur, g, d, p) {
            cur = better;
            changed = true;
        }
        let absorbed = feasible_children(&cur, g, d, p).into_iter().min_by(|a, b| {
            a.time(g, d)
                .total_cmp(&b.time(g, d))
                .then_with(|| a.cycle.cmp(&b.cycle))
        });
        if let Some(next) = absorbed {
            cur = next;
            changed = true;
        }
        if !changed {
            return cur;
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LollipopError {
    #[error("nodes not covered by any lollipop or out-and-back tour: {nodes:?}")]
    Uncovered {
        nodes: Vec<NodeId>,
        partial: Vec<CandidateTour>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LollipopConfig {
    /// Tours kept per node once the pool already covers the graph.
    pub per_node_cap: usize,
    pub max_states: usize,
    pub reoptimize: bool,
}

impl Default for LollipopConfig {
    fn default() -> Self {
        LollipopConfig {
            per_node_cap: 10,
            max_states: DEFAULT_MAX_STATES,
            reoptimize: true,
        }
    }
}

/// Farthest-first pool construction: full enumeration per node while the
/// pool leaves nodes uncovered, at most `per_node_cap` tours per node after.
/// Nodes still uncovered get a plain out-and-back along the tree.
pub fn collect_lollipop_pool(
    g: &Graph,
    d: &DistanceMap,
    p: &InstanceParams,
    cfg: LollipopConfig,
) -> Result<Vec<CandidateTour>, LollipopError> {
    let n = g.len();
    let mut order: Vec<NodeId> = g.nodes().filter(|&v| v != g.station()).collect();
    order.sort_by(|&a, &b| d.dist(b).total_cmp(&d.dist(a)).then(a.cmp(&b)));

    let mut pool: Vec<CandidateTour> = Vec::new();
    let mut covered = FixedBitSet::with_capacity(n);
    if n == 1 {
        let station = Walk::new(g, vec![g.station()]).unwrap();
        let t = CandidateTour::from_walk(station, g, p, Origin::Lollipop)
            .expect("zero-time tour is feasible");
        return Ok(vec![t]);
    }
    for &v in &order {
        let full = covered.count_ones(..) == n;
        let limits = ExpandLimits {
            max_states: cfg.max_states,
            max_tours: full.then_some(cfg.per_node_cap),
        };
        for t in expand_all(g, v, d, p, limits).tours {
            let t = if cfg.reoptimize {
                reoptimize_cycle(&t, g, d, p)
            } else {
                t
            };
            let cand = t.to_candidate(g, p);
            for &u in &cand.coverage {
                covered.insert(u);
            }
            pool.push(cand);
        }
    }
    if covered.count_ones(..) < n {
        for v in g.nodes() {
            if covered.contains(v) {
                continue;
            }
            let mut nodes = d.path_from_root(v);
            nodes.extend(&d.path_to_root(v)[1..]);
            let walk = Walk::new(g, nodes).expect("tree paths follow edges");
            if let Ok(t) = CandidateTour::from_walk(walk, g, p, Origin::Lollipop) {
                for &u in &t.coverage {
                    covered.insert(u);
                }
                pool.push(t);
            }
        }
    }
    let pool = dedup_by_coverage(pool);
    if covered.count_ones(..) < n {
        let nodes = g.nodes().filter(|&v| !covered.contains(v)).collect();
        return Err(LollipopError::Uncovered {
            nodes,
            partial: pool,
        });
    }
    Ok(pool)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_grid, build_grid_with_diagonals, shortest_paths, Point};

    fn params(b: f64, t: f64) -> InstanceParams {
        InstanceParams::new(b, 11000.0, t).unwrap()
    }

    fn pts(n: usize) -> Vec<Point> {
        vec![Point { x: 0.0, y: 0.0 }; n]
    }

    #[test]
    fn farthest_grid_corner_has_no_initial_cycle() {
        let g = build_grid(3, 3, 100.0, 0).unwrap();
        let d = shortest_paths(&g);
        assert!(initial_cycle(&g, 8, &d).is_empty());
    }

    #[test]
    fn plain_grid_interior_falls_back_to_spurs() {
        // station at the corner; node 4 (center) has outward neighbors 5 and 7
        let g = build_grid(3, 3, 100.0, 0).unwrap();
        let d = shortest_paths(&g);
        let init = initial_cycle(&g, 4, &d);
        assert_eq!(init.len(), 2);
        assert!(init.iter().all(|t| t.is_spur()));
        assert_eq!(init[0].cycle, vec![4, 5]);
        assert_eq!(init[1].cycle, vec![4, 7]);
    }

    #[test]
    fn triangle_when_outward_neighbors_touch() {
        // 0 - 1, 1 - 2, 1 - 3, 2 - 3
        let g = Graph::new(pts(4), [(0, 1, 1.0), (1, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0)], 0).unwrap();
        let d = shortest_paths(&g);
        let init = initial_cycle(&g, 1, &d);
        assert_eq!(init.len(), 1);
        assert_eq!(init[0].cycle, vec![1, 2, 3]);
        assert_eq!(init[0].walk(&g).nodes, vec![0, 1, 2, 3, 1, 0]);
    }

    /// Diagonal grid, station 1:
    ///
    /// ```text
    ///  0  1  2  3
    ///  4  5  6  7
    ///  8  9 10 11
    /// ```
    /// Anchor 5 with the triangle 5, 9, 10. Nodes 4, 6 and 8 each touch two
    /// consecutive cycle nodes; 11 touches only 10.
    fn fig2_setup() -> (Graph, DistanceMap, LollipopTour) {
        let g = build_grid_with_diagonals(3, 4, 200.0, 1).unwrap();
        let d = shortest_paths(&g);
        let t = LollipopTour::new(&g, &d, vec![5, 9, 10]);
        (g, d, t)
    }

    #[test]
    fn expansion_candidates_follow_adjacency_and_distance() {
        let (g, d, t) = fig2_setup();
        assert_eq!(d.dist(5), 200.0);
        assert_eq!(d.dist(9), 400.0);
        assert_eq!(expand_candidates(&t, &g, &d), vec![4, 6, 8]);
    }

    #[test]
    fn grey_candidate_is_excluded() {
        // 0 station; 0-1 (1), 0-2 (10), 1-2 (1), 1-3 (1), 2-3 (1), 2-4 (1), 3-4 (1)
        // anchor 1 (d=1), triangle 1,2,3 (d(2)=2, d(3)=2). Node 4 has d=3.
        // Node 5 is adjacent to 2 and 3 with d=1.5 via a direct station edge:
        // closer than both splice ends, so it is not a candidate.
        let g = Graph::new(
            pts(6),
            [
                (0, 1, 1.0),
                (0, 2, 10.0),
                (1, 2, 1.0),
                (1, 3, 1.0),
                (2, 3, 1.0),
                (2, 4, 1.0),
                (3, 4, 1.0),
                (0, 5, 1.5),
                (2, 5, 1.0),
                (3, 5, 1.0),
            ],
            0,
        )
        .unwrap();
        let d = shortest_paths(&g);
        let t = LollipopTour::new(&g, &d, vec![1, 2, 3]);
        assert_eq!(expand_candidates(&t, &g, &d), vec![4]);
    }

    #[test]
    fn saturated_cycle_has_no_candidates() {
        let g = Graph::new(pts(4), [(0, 1, 1.0), (1, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0)], 0).unwrap();
        let d = shortest_paths(&g);
        let t = LollipopTour::new(&g, &d, vec![1, 2, 3]);
        assert!(expand_candidates(&t, &g, &d).is_empty());
    }

    #[test]
    fn candidates_ignore_budget() {
        let (g, d, t) = fig2_setup();
        // tight budget: the triangle itself fits, no splice does
        let tight = t.time(&g, &d);
        let p = params(tight, 1e9);
        assert!(t.is_feasible(&g, &d, &p));
        assert!(!expand_candidates(&t, &g, &d).is_empty());
        assert!(feasible_children(&t, &g, &d, &p).is_empty());
    }

    #[test]
    fn star_spur_is_maximal() {
        // station 0 - 1, 1 - 2: only a spur from 1
        let g = Graph::new(pts(3), [(0, 1, 1.0), (1, 2, 1.0)], 0).unwrap();
        let d = shortest_paths(&g);
        let out = expand_all(&g, 1, &d, &params(10.0, 10.0), ExpandLimits::default());
        assert_eq!(out.tours.len(), 1);
        assert!(out.tours[0].is_spur());
        assert_eq!(out.tours[0].walk(&g).nodes, vec![0, 1, 2, 1, 0]);
    }

    #[test]
    fn expanded_tours_are_maximal_and_outward() {
        let g = build_grid_with_diagonals(5, 5, 100.0, 0).unwrap();
        let d = shortest_paths(&g);
        let p = params(1400.0, 1e9);
        let out = expand_all(&g, 6, &d, &p, ExpandLimits::default());
        assert!(!out.tours.is_empty());
        let mut keys = HashSet::new();
        for t in &out.tours {
            assert!(t.is_feasible(&g, &d, &p));
            assert!(feasible_children(t, &g, &d, &p).is_empty());
            assert!(t.cycle.iter().all(|&u| d.dist(u) >= d.dist(6)));
            assert!(keys.insert(t.key(g.len())));
        }
    }

    #[test]
    fn reoptimize_keeps_triangle() {
        let g = Graph::new(pts(4), [(0, 1, 1.0), (1, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0)], 0).unwrap();
        let d = shortest_paths(&g);
        let t = LollipopTour::new(&g, &d, vec![1, 2, 3]);
        assert_eq!(reoptimize_cycle(&t, &g, &d, &params(100.0, 100.0)), t);
    }

    #[test]
    fn reoptimize_shortens_zigzag() {
        // 2x3 block below the station row:
        //   0  1  2
        //   3  4  5
        //   6  7  8
        let g = build_grid_with_diagonals(3, 3, 200.0, 1).unwrap();
        let d = shortest_paths(&g);
        // anchor 4 (closest to the station), zigzag 4-6-3-7-8-5 uses two
        // diagonals where the block perimeter uses none
        let zig = LollipopTour {
            anchor: 4,
            stem: d.path_from_root(4),
            cycle: vec![4, 6, 3, 7, 8, 5],
        };
        assert!(zig.cycle.iter().all(|&u| d.dist(u) >= d.dist(4)));
        // the 1600 perimeter fits, absorbing node 0 or 2 (1883) does not
        let p = params(1800.0, 1e6);
        assert!(zig.is_feasible(&g, &d, &p));
        let better = reoptimize_cycle(&zig, &g, &d, &p);
        assert!(better.time(&g, &d) < zig.time(&g, &d));
        assert_eq!(better.cycle.len(), 6);
        assert!(feasible_children(&better, &g, &d, &p).is_empty());
    }

    #[test]
    fn pool_on_path_is_spurs_and_stems() {
        let g = Graph::new(pts(3), [(0, 1, 1000.0), (1, 2, 1000.0)], 0).unwrap();
        let d = shortest_paths(&g);
        let pool = collect_lollipop_pool(&g, &d, &params(5000.0, 5000.0), LollipopConfig::default())
            .unwrap();
        let covered: HashSet<NodeId> = pool.iter().flat_map(|t| t.coverage.iter().copied()).collect();
        assert_eq!(covered.len(), 3);
        // far node unreachable within b: 2 * 2000 <= 3000 fails
        let err = collect_lollipop_pool(&g, &d, &params(3000.0, 5000.0), LollipopConfig::default())
            .unwrap_err();
        assert!(matches!(err, LollipopError::Uncovered { ref nodes, .. } if nodes == &vec![2]));
    }

    #[test]
    fn zero_cap_stops_once_covered() {
        let g = build_grid_with_diagonals(4, 4, 100.0, 0).unwrap();
        let d = shortest_paths(&g);
        let p = params(1200.0, 1e9);
        let cfg = LollipopConfig {
            per_node_cap: 0,
            ..Default::default()
        };
        let capped = collect_lollipop_pool(&g, &d, &p, cfg).unwrap();
        let full = collect_lollipop_pool(&g, &d, &p, LollipopConfig::default()).unwrap();
        assert!(capped.len() <= full.len());
        for t in &capped {
            t.check(&g, &p).unwrap();
        }
    }
}
