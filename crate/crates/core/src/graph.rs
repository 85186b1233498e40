//! Weighted undirected graphs with a single charging station, instance
//! generators, and shortest-path trees.
//!
//! Edge weights are travel times in seconds at unit speed, so node
//! coordinates and times share a scale. Node ids are dense indices
//! `0..n`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type NodeId = usize;

/// Absolute slack, in seconds, used by every time comparison in the crate.
pub const TIME_EPS: f64 = 1e-6;

/// `value <= limit`, tolerant to floating-point summation order.
#[inline]
pub fn within(value: f64, limit: f64) -> bool {
    value <= limit + TIME_EPS
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("graph has no nodes")]
    Empty,
    #[error("node {0} out of range")]
    NodeOutOfRange(NodeId),
    #[error("self-loop at node {0}")]
    SelfLoop(NodeId),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(NodeId, NodeId),
    #[error("edge ({u}, {v}) has invalid travel time {time}")]
    BadWeight { u: NodeId, v: NodeId, time: f64 },
    #[error("invalid station {0}")]
    InvalidStation(NodeId),
    #[error("graph is not connected: {unreachable} node(s) unreachable from the station")]
    Disconnected { unreachable: usize },
    #[error("invalid grid dimensions {rows}x{cols}")]
    BadDimensions { rows: usize, cols: usize },
    #[error("invalid generator parameter: {0}")]
    BadParameter(String),
    #[error("no connected graph after {0} attempts")]
    ConnectivityNotAchieved(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: NodeId,
    pub v: NodeId,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    coords: Vec<Point>,
    edges: Vec<Edge>,
    adj: Vec<Vec<(NodeId, f64)>>,
    station: NodeId,
}

impl Graph {
    /// Builds and validates a graph. Edges are normalized to `u < v` and
    /// adjacency lists are sorted by neighbor id.
    pub fn new(
        coords: Vec<Point>,
        edges: impl IntoIterator<Item = (NodeId, NodeId, f64)>,
        station: NodeId,
    ) -> Result<Self, GraphError> {
        let n = coords.len();
        if n == 0 {
            return Err(GraphError::Empty);
        }
        if station >= n {
            return Err(GraphError::InvalidStation(station));
        }
        let mut adj: Vec<Vec<(NodeId, f64)>> = vec![Vec::new(); n];
        let mut norm = Vec::new();
        for (u, v, time) in edges {
            if u >= n {
                return Err(GraphError::NodeOutOfRange(u));
            }
            if v >= n {
                return Err(GraphError::NodeOutOfRange(v));
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            if !(time.is_finite() && time > 0.0) {
                return Err(GraphError::BadWeight { u, v, time });
            }
            let (a, b) = if u < v { (u, v) } else { (v, u) };
            adj[a].push((b, time));
            adj[b].push((a, time));
            norm.push(Edge { u: a, v: b, time });
        }
        for (u, list) in adj.iter_mut().enumerate() {
            list.sort_by_key(|x| x.0);
            if let Some(w) = list.windows(2).find(|w| w[0].0 == w[1].0) {
                let (a, b) = if u < w[0].0 { (u, w[0].0) } else { (w[0].0, u) };
                return Err(GraphError::DuplicateEdge(a, b));
            }
        }
        norm.sort_by_key(|e| (e.u, e.v));
        let g = Graph {
            coords,
            edges: norm,
            adj,
            station,
        };
        let unreachable = g.unreachable_from_station();
        if unreachable > 0 {
            return Err(GraphError::Disconnected { unreachable });
        }
        Ok(g)
    }

    fn unreachable_from_station(&self) -> usize {
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::from([self.station]);
        seen[self.station] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        self.len() - count
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn station(&self) -> NodeId {
        self.station
    }

    pub fn nodes(&self) -> std::ops::Range<NodeId> {
        0..self.len()
    }

    pub fn coords(&self) -> &[Point] {
        &self.coords
    }

    pub fn coord(&self, v: NodeId) -> Point {
        self.coords[v]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Neighbors of `v` with travel times, sorted by neighbor id.
    pub fn neighbors(&self, v: NodeId) -> &[(NodeId, f64)] {
        &self.adj[v]
    }

    pub fn edge_time(&self, u: NodeId, v: NodeId) -> Option<f64> {
        let list = self.adj.get(u)?;
        list.binary_search_by(|probe| probe.0.cmp(&v))
            .ok()
            .map(|i| list[i].1)
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.edge_time(u, v).is_some()
    }

    /// Same topology and weights with a different station.
    pub fn with_station(&self, station: NodeId) -> Result<Self, GraphError> {
        if station >= self.len() {
            return Err(GraphError::InvalidStation(station));
        }
        let mut g = self.clone();
        g.station = station;
        Ok(g)
    }
}

/// Flight budget `b`, recharge time `B` and uniform latency deadline `T`,
/// all in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceParams {
    #[serde(rename = "b")]
    pub battery: f64,
    #[serde(rename = "B")]
    pub recharge: f64,
    #[serde(rename = "T")]
    pub latency: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_node_deadline: Option<BTreeMap<NodeId, f64>>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamsError {
    #[error("flight budget b must be positive and finite, got {0}")]
    Battery(f64),
    #[error("recharge time B must be non-negative and finite, got {0}")]
    Recharge(f64),
    #[error("latency T must be positive and finite, got {0}")]
    Latency(f64),
    #[error("per-node deadline of node {node} is {value}, but only a uniform T = {latency} is supported")]
    NonUniformDeadline { node: NodeId, value: f64, latency: f64 },
}

impl InstanceParams {
    pub fn new(battery: f64, recharge: f64, latency: f64) -> Result<Self, ParamsError> {
        let p = InstanceParams {
            battery,
            recharge,
            latency,
            per_node_deadline: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        if !(self.battery.is_finite() && self.battery > 0.0) {
            return Err(ParamsError::Battery(self.battery));
        }
        if !(self.recharge.is_finite() && self.recharge >= 0.0) {
            return Err(ParamsError::Recharge(self.recharge));
        }
        if !(self.latency.is_finite() && self.latency > 0.0) {
            return Err(ParamsError::Latency(self.latency));
        }
        if let Some(map) = &self.per_node_deadline {
            for (&node, &value) in map {
                if value != self.latency {
                    return Err(ParamsError::NonUniformDeadline {
                        node,
                        value,
                        latency: self.latency,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn with_latency(&self, latency: f64) -> Self {
        InstanceParams {
            latency,
            per_node_deadline: None,
            ..self.clone()
        }
    }
}

/// Shortest-path tree rooted at one node.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMap {
    root: NodeId,
    dist: Vec<f64>,
    parent: Vec<Option<NodeId>>,
}

impl DistanceMap {
    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn dist(&self, v: NodeId) -> f64 {
        self.dist[v]
    }

    pub fn dists(&self) -> &[f64] {
        &self.dist
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.parent[v]
    }

    /// Nodes on the tree path `root -> v`, both ends included.
    pub fn path_from_root(&self, v: NodeId) -> Vec<NodeId> {
        let mut path = self.path_to_root(v);
        path.reverse();
        path
    }

    /// Nodes on the tree path `v -> root`, both ends included.
    pub fn path_to_root(&self, v: NodeId) -> Vec<NodeId> {
        let mut path = vec![v];
        let mut cur = v;
        while let Some(p) = self.parent[cur] {
            path.push(p);
            cur = p;
        }
        path
    }

    pub fn is_tree_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.parent[u] == Some(v) || self.parent[v] == Some(u)
    }

    pub fn max_dist(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Copy, Clone, PartialEq)]
struct HeapItem(f64, NodeId);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra from the charging station.
pub fn shortest_paths(g: &Graph) -> DistanceMap {
    shortest_paths_from(g, g.station())
}

/// Dijkstra from an arbitrary source. On equal distances the parent with
/// the smaller id wins, so the tree is a pure function of the graph.
pub fn shortest_paths_from(g: &Graph, source: NodeId) -> DistanceMap {
    let n = g.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapItem(0.0, source));
    while let Some(HeapItem(d, u)) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for &(v, w) in g.neighbors(u) {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                parent[v] = Some(u);
                heap.push(HeapItem(nd, v));
            } else if nd == dist[v] && v != source && parent[v].is_some_and(|p| u < p) {
                parent[v] = Some(u);
            }
        }
    }
    DistanceMap {
        root: source,
        dist,
        parent,
    }
}

/// Shortest-path trees from every node; the metric closure used by the
/// tour solvers.
#[derive(Debug, Clone)]
pub struct AllPairs {
    trees: Vec<DistanceMap>,
}

impl AllPairs {
    pub fn new(g: &Graph) -> Self {
        use rayon::prelude::*;
        let trees = (0..g.len())
            .into_par_iter()
            .map(|s| shortest_paths_from(g, s))
            .collect();
        AllPairs { trees }
    }

    pub fn dist(&self, u: NodeId, v: NodeId) -> f64 {
        self.trees[u].dist(v)
    }

    /// Shortest path `u -> v`, both ends included.
    pub fn path(&self, u: NodeId, v: NodeId) -> Vec<NodeId> {
        // The tree rooted at v stores parents pointing towards v.
        self.trees[v].path_to_root(u)
    }

    pub fn tree(&self, root: NodeId) -> &DistanceMap {
        &self.trees[root]
    }
}

/// 4-connected `rows x cols` grid. Node `r * cols + c` sits at
/// `(c * edge_time, r * edge_time)`.
pub fn build_grid(
    rows: usize,
    cols: usize,
    edge_time: f64,
    station: NodeId,
) -> Result<Graph, GraphError> {
    grid(rows, cols, edge_time, station, false)
}

/// Grid with the two diagonals of every cell added; a diagonal costs
/// `edge_time * sqrt(2)` rounded to whole seconds.
pub fn build_grid_with_diagonals(
    rows: usize,
    cols: usize,
    edge_time: f64,
    station: NodeId,
) -> Result<Graph, GraphError> {
    grid(rows, cols, edge_time, station, true)
}

fn grid(
    rows: usize,
    cols: usize,
    edge_time: f64,
    station: NodeId,
    diagonals: bool,
) -> Result<Graph, GraphError> {
    if rows == 0 || cols == 0 {
        return Err(GraphError::BadDimensions { rows, cols });
    }
    if !(edge_time.is_finite() && edge_time > 0.0) {
        return Err(GraphError::BadParameter(format!("edge_time = {edge_time}")));
    }
    if station >= rows * cols {
        return Err(GraphError::InvalidStation(station));
    }
    let id = |r: usize, c: usize| r * cols + c;
    let mut coords = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            coords.push(Point {
                x: c as f64 * edge_time,
                y: r as f64 * edge_time,
            });
        }
    }
    let diag = (edge_time * std::f64::consts::SQRT_2).round().max(1.0);
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1), edge_time));
            }
            if r + 1 < rows {
                edges.push((id(r, c), id(r + 1, c), edge_time));
            }
            if diagonals && r + 1 < rows {
                if c + 1 < cols {
                    edges.push((id(r, c), id(r + 1, c + 1), diag));
                }
                if c > 0 {
                    edges.push((id(r, c), id(r + 1, c - 1), diag));
                }
            }
        }
    }
    Graph::new(coords, edges, station)
}

/// Grid node nearest the grid centroid; smallest id on ties.
pub fn grid_center(rows: usize, cols: usize) -> NodeId {
    let cr = (rows as f64 - 1.0) / 2.0;
    let cc = (cols as f64 - 1.0) / 2.0;
    let mut best = (f64::INFINITY, 0);
    for r in 0..rows {
        for c in 0..cols {
            let d = (r as f64 - cr).powi(2) + (c as f64 - cc).powi(2);
            if d < best.0 {
                best = (d, r * cols + c);
            }
        }
    }
    best.1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StationPolicy {
    CornerMost,
    CentroidMost,
}

const GEOMETRIC_RETRIES: usize = 100;

/// Uniform points in a `side x side` square joined when closer than
/// `radius`; edge time is the Euclidean distance. Resamples with a derived
/// seed until the graph is connected.
pub fn build_random_geometric(
    n: usize,
    radius: f64,
    side: f64,
    seed: u64,
    policy: StationPolicy,
) -> Result<Graph, GraphError> {
    if n == 0 {
        return Err(GraphError::BadParameter("n must be at least 1".into()));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(GraphError::BadParameter(format!("radius = {radius}")));
    }
    if !(side.is_finite() && side > 0.0) {
        return Err(GraphError::BadParameter(format!("side = {side}")));
    }
    for attempt in 0..GEOMETRIC_RETRIES as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt);
        let coords: Vec<Point> = (0..n)
            .map(|_| Point {
                x: rng.gen_range(0.0..side),
                y: rng.gen_range(0.0..side),
            })
            .collect();
        let mut edges = Vec::new();
        let mut degenerate = false;
        for u in 0..n {
            for v in u + 1..n {
                let d = (coords[u].x - coords[v].x).hypot(coords[u].y - coords[v].y);
                if d <= radius {
                    if d <= 0.0 {
                        degenerate = true;
                    }
                    edges.push((u, v, d));
                }
            }
        }
        if degenerate {
            continue;
        }
        let station = pick_station(&coords, policy);
        match Graph::new(coords, edges, station) {
            Ok(g) => return Ok(g),
            Err(GraphError::Disconnected { .. }) => {
                log::debug!("geometric graph attempt {attempt} disconnected, resampling");
            }
            Err(e) => return Err(e),
        }
    }
    Err(GraphError::ConnectivityNotAchieved(GEOMETRIC_RETRIES))
}

fn pick_station(coords: &[Point], policy: StationPolicy) -> NodeId {
    let target = match policy {
        StationPolicy::CornerMost => Point { x: 0.0, y: 0.0 },
        StationPolicy::CentroidMost => {
            let n = coords.len() as f64;
            Point {
                x: coords.iter().map(|p| p.x).sum::<f64>() / n,
                y: coords.iter().map(|p| p.y).sum::<f64>() / n,
            }
        }
    };
    let mut best = (f64::INFINITY, 0);
    for (i, p) in coords.iter().enumerate() {
        let d = (p.x - target.x).hypot(p.y - target.y);
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> Graph {
        let coords = (0..3)
            .map(|i| Point {
                x: i as f64 * 1000.0,
                y: 0.0,
            })
            .collect();
        Graph::new(coords, [(0, 1, 1000.0), (1, 2, 1000.0)], 0).unwrap()
    }

    /// Bellman-Ford, kept independent of the heap-based search.
    fn bellman_ford(g: &Graph) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; g.len()];
        dist[g.station()] = 0.0;
        for _ in 0..g.len() {
            for e in g.edges() {
                if dist[e.u] + e.time < dist[e.v] {
                    dist[e.v] = dist[e.u] + e.time;
                }
                if dist[e.v] + e.time < dist[e.u] {
                    dist[e.u] = dist[e.v] + e.time;
                }
            }
        }
        dist
    }

    #[test]
    fn grid_counts() {
        let g = build_grid(2, 2, 1000.0, 0).unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(g.num_edges(), 4);
        assert!(g.edges().iter().all(|e| e.time == 1000.0));

        let g = build_grid(1, 1, 1.0, 0).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.num_edges(), 0);

        let g = build_grid(6, 6, 400.0, grid_center(6, 6)).unwrap();
        assert_eq!(g.len(), 36);
        assert_eq!(g.num_edges(), 60);
        // BFS hop count times edge time bounds the geodesic from the center.
        let d = shortest_paths(&g);
        let mut hops = vec![usize::MAX; g.len()];
        hops[g.station()] = 0;
        let mut q = VecDeque::from([g.station()]);
        while let Some(u) = q.pop_front() {
            for &(v, _) in g.neighbors(u) {
                if hops[v] == usize::MAX {
                    hops[v] = hops[u] + 1;
                    q.push_back(v);
                }
            }
        }
        for v in g.nodes() {
            assert_eq!(d.dist(v), hops[v] as f64 * 400.0);
        }
        assert!(d.max_dist() <= 2400.0);
    }

    #[test]
    fn grid_rejects_bad_station() {
        assert_eq!(
            build_grid(2, 2, 1.0, 4),
            Err(GraphError::InvalidStation(4))
        );
        assert!(matches!(
            build_grid(0, 3, 1.0, 0),
            Err(GraphError::BadDimensions { .. })
        ));
    }

    #[test]
    fn diagonal_grid_counts() {
        let g = build_grid_with_diagonals(3, 3, 200.0, 4).unwrap();
        // 12 axis edges + 2 diagonals in each of 4 cells
        assert_eq!(g.num_edges(), 20);
        assert_eq!(g.edge_time(0, 4), Some(283.0));
        assert_eq!(g.edge_time(1, 3), Some(283.0));
    }

    #[test]
    fn grid_center_prefers_smaller_id() {
        assert_eq!(grid_center(6, 6), 14);
        assert_eq!(grid_center(3, 3), 4);
        assert_eq!(grid_center(1, 1), 0);
    }

    #[test]
    fn rejects_invalid_graphs() {
        let pts = vec![Point { x: 0.0, y: 0.0 }; 3];
        assert_eq!(
            Graph::new(pts.clone(), [(0, 0, 1.0)], 0),
            Err(GraphError::SelfLoop(0))
        );
        assert_eq!(
            Graph::new(pts.clone(), [(0, 1, 1.0), (1, 0, 2.0), (1, 2, 1.0)], 0),
            Err(GraphError::DuplicateEdge(0, 1))
        );
        assert!(matches!(
            Graph::new(pts.clone(), [(0, 1, 0.0), (1, 2, 1.0)], 0),
            Err(GraphError::BadWeight { .. })
        ));
        assert!(matches!(
            Graph::new(pts.clone(), [(0, 1, f64::INFINITY), (1, 2, 1.0)], 0),
            Err(GraphError::BadWeight { .. })
        ));
        assert_eq!(
            Graph::new(pts, [(0, 1, 1.0)], 0),
            Err(GraphError::Disconnected { unreachable: 1 })
        );
    }

    #[test]
    fn path_distances() {
        let d = shortest_paths(&path3());
        assert_eq!(d.dists(), &[0.0, 1000.0, 2000.0]);
        assert_eq!(d.path_from_root(2), vec![0, 1, 2]);
        assert_eq!(d.path_to_root(2), vec![2, 1, 0]);
    }

    #[test]
    fn grid_distances_and_tie_break() {
        let g = build_grid(2, 2, 1000.0, 0).unwrap();
        let d = shortest_paths(&g);
        assert_eq!(d.dists(), &[0.0, 1000.0, 1000.0, 2000.0]);
        // node 3 is reachable via 1 or 2 at equal cost; 1 wins
        assert_eq!(d.parent(3), Some(1));
    }

    #[test]
    fn geometric_is_deterministic_and_matches_bellman_ford() {
        let a = build_random_geometric(50, 30.0, 100.0, 42, StationPolicy::CentroidMost).unwrap();
        let b = build_random_geometric(50, 30.0, 100.0, 42, StationPolicy::CentroidMost).unwrap();
        assert_eq!(a, b);
        assert!(a.edges().iter().all(|e| e.time <= 30.0));
        let d = shortest_paths(&a);
        let oracle = bellman_ford(&a);
        for v in a.nodes() {
            assert!((d.dist(v) - oracle[v]).abs() < 1e-9);
        }
        let single = build_random_geometric(1, 5.0, 10.0, 7, StationPolicy::CornerMost).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single.num_edges(), 0);
    }

    #[test]
    fn geometric_fails_when_radius_too_small() {
        assert_eq!(
            build_random_geometric(30, 0.01, 100.0, 1, StationPolicy::CornerMost),
            Err(GraphError::ConnectivityNotAchieved(GEOMETRIC_RETRIES))
        );
    }

    #[test]
    fn params_validation() {
        assert!(InstanceParams::new(5000.0, 11000.0, 2500.0).is_ok());
        assert!(InstanceParams::new(5000.0, 0.0, 2500.0).is_ok());
        assert_eq!(
            InstanceParams::new(0.0, 1.0, 1.0),
            Err(ParamsError::Battery(0.0))
        );
        assert_eq!(
            InstanceParams::new(1.0, -1.0, 1.0),
            Err(ParamsError::Recharge(-1.0))
        );
        let mut p = InstanceParams::new(1.0, 1.0, 10.0).unwrap();
        p.per_node_deadline = Some([(0, 10.0), (1, 10.0)].into());
        assert!(p.validate().is_ok());
        p.per_node_deadline = Some([(0, 10.0), (1, 9.0)].into());
        assert!(matches!(
            p.validate(),
            Err(ParamsError::NonUniformDeadline { node: 1, .. })
        ));
    }

    #[test]
    fn all_pairs_paths() {
        let g = build_grid(3, 3, 10.0, 0).unwrap();
        let ap = AllPairs::new(&g);
        assert_eq!(ap.dist(0, 8), 40.0);
        let p = ap.path(0, 8);
        assert_eq!(p.first(), Some(&0));
        assert_eq!(p.last(), Some(&8));
        assert_eq!(p.len(), 5);
        assert!(p.windows(2).all(|w| g.has_edge(w[0], w[1])));
    }
}
