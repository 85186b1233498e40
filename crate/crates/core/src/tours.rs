//! Candidate tours: battery-feasible closed walks from the station together
//! with the set of nodes they reach within the latency deadline.
//!
//! Pools come from three sources here: segments of TSP walks (greedy
//! partition, longest segment per start node, multi-walk union) and the
//! Dijkstra-tree baseline. Lollipop pools live in [`crate::lollipop`].

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{within, DistanceMap, Graph, InstanceParams, NodeId};
use crate::tsp::Walk;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    TspGreedy,
    TspLp,
    Lollipop,
    Dijkstra,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TourError {
    #[error("walk of {time} s exceeds the flight budget {budget} s")]
    OverBudget { time: f64, budget: f64 },
    #[error("walk must start and end at the station")]
    NotClosed,
    #[error("segment [{start}..={end}] violates the deadline or battery bound")]
    InvalidSegment { start: usize, end: usize },
    #[error("no valid segment starts at walk position {position} (node {node})")]
    NoValidSegment { position: usize, node: NodeId },
    #[error("nodes not covered by any tour: {0:?}")]
    Uncovered(Vec<NodeId>),
}

/// Contiguous slice `walk[start..=end]` of a walk.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start: usize,
    pub nodes: Vec<NodeId>,
    pub duration: f64,
}

impl Segment {
    pub fn from_walk(w: &Walk, offsets: &[f64], start: usize, end: usize) -> Self {
        Segment {
            start,
            nodes: w.nodes[start..=end].to_vec(),
            duration: offsets[end] - offsets[start],
        }
    }

    pub fn first(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn last(&self) -> NodeId {
        *self.nodes.last().unwrap()
    }

    pub fn end(&self) -> usize {
        self.start + self.nodes.len() - 1
    }
}

/// A closed walk from the station with first-arrival times and the nodes it
/// serves (`coverage`: first arrival within `T`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateTour {
    pub id: usize,
    pub origin: Origin,
    pub walk: Walk,
    pub arrival: BTreeMap<NodeId, f64>,
    pub coverage: BTreeSet<NodeId>,
}

impl CandidateTour {
    pub fn from_walk(
        walk: Walk,
        g: &Graph,
        p: &InstanceParams,
        origin: Origin,
    ) -> Result<Self, TourError> {
        if !walk.is_closed_at(g.station()) {
            return Err(TourError::NotClosed);
        }
        if !within(walk.total_time, p.battery) {
            return Err(TourError::OverBudget {
                time: walk.total_time,
                budget: p.battery,
            });
        }
        let mut arrival = BTreeMap::new();
        for (&v, t) in walk.nodes.iter().zip(walk.offsets(g)) {
            arrival.entry(v).or_insert(t);
        }
        let coverage = arrival
            .iter()
            .filter(|&(_, &t)| within(t, p.latency))
            .map(|(&v, _)| v)
            .collect();
        Ok(CandidateTour {
            id: 0,
            origin,
            walk,
            arrival,
            coverage,
        })
    }

    pub fn time(&self) -> f64 {
        self.walk.total_time
    }

    /// Checks the candidate-tour invariants against a graph and parameters.
    pub fn check(&self, g: &Graph, p: &InstanceParams) -> Result<(), String> {
        let recomputed = Walk::new(g, self.walk.nodes.clone()).map_err(|e| e.to_string())?;
        if (recomputed.total_time - self.walk.total_time).abs() > 1e-6 {
            return Err(format!("tour {}: stored time differs from edges", self.id));
        }
        if !self.walk.is_closed_at(g.station()) {
            return Err(format!("tour {}: not closed at the station", self.id));
        }
        if !within(self.time(), p.battery) {
            return Err(format!("tour {}: time {} > b", self.id, self.time()));
        }
        for v in &self.coverage {
            match self.arrival.get(v) {
                Some(&t) if within(t, p.latency) => {}
                _ => return Err(format!("tour {}: node {v} covered late", self.id)),
            }
            if !self.walk.nodes.contains(v) {
                return Err(format!("tour {}: node {v} covered but not visited", self.id));
            }
        }
        Ok(())
    }
}

/// Deadline and budget test: `d(u0) + time(S) <= T` and
/// `d(u0) + d(um) + time(S) <= b`.
pub fn is_valid_segment(s: &Segment, d: &DistanceMap, p: &InstanceParams) -> bool {
    let head = d.dist(s.first());
    within(head + s.duration, p.latency) && within(head + d.dist(s.last()) + s.duration, p.battery)
}

/// Station -> u0 along the shortest-path tree, the segment, then
/// um -> station along the tree.
pub fn segment_to_tour(
    s: &Segment,
    g: &Graph,
    d: &DistanceMap,
    p: &InstanceParams,
    origin: Origin,
) -> Result<CandidateTour, TourError> {
    if !is_valid_segment(s, d, p) {
        return Err(TourError::InvalidSegment {
            start: s.start,
            end: s.end(),
        });
    }
    let mut nodes = d.path_from_root(s.first());
    nodes.extend(&s.nodes[1..]);
    nodes.extend(&d.path_to_root(s.last())[1..]);
    let walk = Walk::new(g, nodes).expect("tree paths and walk slices follow edges");
    CandidateTour::from_walk(walk, g, p, origin)
}

/// Largest `end >= start` with `walk[start..=end]` valid, if any.
fn longest_valid_end(
    w: &Walk,
    offsets: &[f64],
    start: usize,
    d: &DistanceMap,
    p: &InstanceParams,
) -> Option<usize> {
    let head = d.dist(w.nodes[start]);
    let mut best = None;
    for end in start..w.nodes.len() {
        let dur = offsets[end] - offsets[start];
        // both bounds only tighten as the segment grows
        if !within(head + dur, p.latency) || !within(head + dur, p.battery) {
            break;
        }
        let seg = Segment::from_walk(w, offsets, start, end);
        if is_valid_segment(&seg, d, p) {
            best = Some(end);
        }
    }
    best
}

fn union_coverage(tours: &[CandidateTour]) -> BTreeSet<NodeId> {
    tours.iter().flat_map(|t| t.coverage.iter().copied()).collect()
}

fn missing(g: &Graph, covered: &BTreeSet<NodeId>) -> Vec<NodeId> {
    g.nodes().filter(|v| !covered.contains(v)).collect()
}

/// Ordered pass over the walk: repeatedly cut the longest valid segment
/// starting at the first unconsumed position.
pub fn segment_greedy(
    w: &Walk,
    g: &Graph,
    d: &DistanceMap,
    p: &InstanceParams,
) -> Result<Vec<CandidateTour>, TourError> {
    let offsets = w.offsets(g);
    let mut tours = Vec::new();
    let mut pos = 0;
    // The closing station position needs no segment of its own.
    let last = if w.nodes.len() > 1 { w.nodes.len() - 1 } else { 1 };
    while pos < last {
        let end = longest_valid_end(w, &offsets, pos, d, p).ok_or(TourError::NoValidSegment {
            position: pos,
            node: w.nodes[pos],
        })?;
        let seg = Segment::from_walk(w, &offsets, pos, end);
        let mut tour = segment_to_tour(&seg, g, d, p, Origin::TspGreedy)?;
        tour.id = tours.len();
        tours.push(tour);
        pos = end + 1;
    }
    let covered = union_coverage(&tours);
    let uncovered = missing(g, &covered);
    if !uncovered.is_empty() {
        return Err(TourError::Uncovered(uncovered));
    }
    Ok(tours)
}

/// One maximal valid segment per distinct non-station node, starting at the
/// node's first position in the walk.
pub fn longest_segments_per_node(
    w: &Walk,
    g: &Graph,
    d: &DistanceMap,
    p: &InstanceParams,
) -> Vec<CandidateTour> {
    let offsets = w.offsets(g);
    let mut seen = vec![false; g.len()];
    seen[g.station()] = true;
    let mut tours = Vec::new();
    for (pos, &v) in w.nodes.iter().enumerate() {
        if seen[v] {
            continue;
        }
        seen[v] = true;
        match longest_valid_end(w, &offsets, pos, d, p) {
            Some(end) => {
                let seg = Segment::from_walk(w, &offsets, pos, end);
                let mut tour =
                    segment_to_tour(&seg, g, d, p, Origin::TspLp).expect("segment checked valid");
                tour.id = tours.len();
                tours.push(tour);
            }
            None => log::debug!("no valid segment starts at node {v}"),
        }
    }
    tours
}

/// Keeps the fastest tour per coverage set; first occurrence wins ties.
/// Output order follows first appearance and ids are renumbered.
pub fn dedup_by_coverage(tours: Vec<CandidateTour>) -> Vec<CandidateTour> {
    let mut index: HashMap<BTreeSet<NodeId>, usize> = HashMap::new();
    let mut out: Vec<CandidateTour> = Vec::new();
    for t in tours {
        match index.get(&t.coverage) {
            Some(&i) => {
                if t.time() < out[i].time() {
                    out[i] = t;
                }
            }
            None => {
                index.insert(t.coverage.clone(), out.len());
                out.push(t);
            }
        }
    }
    renumber(&mut out);
    out
}

pub fn renumber(tours: &mut [CandidateTour]) {
    for (i, t) in tours.iter_mut().enumerate() {
        t.id = i;
    }
}

/// Longest segments from every walk, de-duplicated by coverage set.
pub fn multi_tsp_pool(
    ws: &[Walk],
    g: &Graph,
    d: &DistanceMap,
    p: &InstanceParams,
) -> Vec<CandidateTour> {
    let all = ws
        .iter()
        .flat_map(|w| longest_segments_per_node(w, g, d, p))
        .collect();
    dedup_by_coverage(all)
}

/// The `|E|` closed walks of the shortest-path tree: one loop through each
/// non-tree edge and one out-and-back per non-station node.
pub fn dijkstra_closed_walks(g: &Graph, d: &DistanceMap) -> Vec<Walk> {
    let mut walks = Vec::with_capacity(g.num_edges());
    for e in g.edges() {
        if d.is_tree_edge(e.u, e.v) {
            continue;
        }
        let mut nodes = d.path_from_root(e.u);
        nodes.extend(d.path_to_root(e.v));
        walks.push(Walk::new(g, nodes).expect("tree paths follow edges"));
    }
    for v in g.nodes() {
        if v == g.station() {
            continue;
        }
        let mut nodes = d.path_from_root(v);
        nodes.extend(&d.path_to_root(v)[1..]);
        walks.push(Walk::new(g, nodes).expect("tree paths follow edges"));
    }
    walks
}

/// Dijkstra-tree baseline pool: closed walks within the flight budget.
pub fn dijkstra_loop_pool(g: &Graph, d: &DistanceMap, p: &InstanceParams) -> Vec<CandidateTour> {
    let mut tours: Vec<CandidateTour> = dijkstra_closed_walks(g, d)
        .into_iter()
        .filter_map(|w| CandidateTour::from_walk(w, g, p, Origin::Dijkstra).ok())
        .collect();
    renumber(&mut tours);
    tours
}
