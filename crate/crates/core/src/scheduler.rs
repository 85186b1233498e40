//! Feasibility classes, tour replication and a discrete-event simulator.
//!
//! Replication: a tour flown by `k` UAVs launched `T` apart, each UAV
//! repeating with period `k*T`, is in the air every `T`. Each UAV needs
//! `time + B` between launches, so `k*T >= time + B`.
//!
//! Simulation semantics: every node is serviced at `t = 0`; a visit at any
//! point of a walk resets that node's age; an age of exactly `T` is still on
//! time. The station is never monitored.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{within, DistanceMap, Graph, InstanceParams, NodeId, TIME_EPS};
use crate::setcover::Selection;
use crate::tours::CandidateTour;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReplicationMode {
    /// `ceil((time + B) / T)` for each tour.
    #[default]
    PerTour,
    /// `ceil((B + b) / T)` for every tour.
    Paper,
}

impl std::str::FromStr for ReplicationMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per-tour" => Ok(ReplicationMode::PerTour),
            "paper" => Ok(ReplicationMode::Paper),
            _ => Err(format!("unknown replication mode {s:?}")),
        }
    }
}

/// `ceil(x / T)` with the time tolerance applied, never below 1.
fn ceil_ratio(x: f64, t: f64) -> u32 {
    let k = ((x - TIME_EPS) / t).ceil();
    k.max(1.0) as u32
}

pub fn replication_factor(t: &CandidateTour, p: &InstanceParams, mode: ReplicationMode) -> u32 {
    match mode {
        ReplicationMode::PerTour => ceil_ratio(t.time() + p.recharge, p.latency),
        ReplicationMode::Paper => ceil_ratio(p.recharge + p.battery, p.latency),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Size {
    Small,
    Large,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    SingleUav,
    Replicated,
    Partitioned,
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityClass {
    pub reachable: bool,
    pub size: Size,
    pub regime: Regime,
    /// `ceil((B + b) / T)`
    pub k: u32,
}

/// `tsp_time` may come from a heuristic; a too-long estimate only moves the
/// instance towards `Large`.
pub fn classify_instance(
    g: &Graph,
    d: &DistanceMap,
    p: &InstanceParams,
    tsp_time: f64,
) -> FeasibilityClass {
    let reachable = g.nodes().all(|v| within(d.dist(v), p.battery / 2.0));
    let size = if within(tsp_time, p.battery) {
        Size::Small
    } else {
        Size::Large
    };
    let cycle = p.recharge + p.battery;
    let regime = if !reachable {
        Regime::Infeasible
    } else if size == Size::Large || !within(p.battery, p.latency) {
        Regime::Partitioned
    } else if within(cycle, p.latency) {
        Regime::SingleUav
    } else {
        Regime::Replicated
    };
    FeasibilityClass {
        reachable,
        size,
        regime,
        k: ceil_ratio(cycle, p.latency),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dispatch {
    pub uav: usize,
    pub tour: usize,
    pub t0: f64,
    pub period: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub dispatches: Vec<Dispatch>,
    /// N
    pub num_uavs: usize,
    /// K
    pub num_tours: usize,
}

fn tour_by_id(pool: &[CandidateTour]) -> BTreeMap<usize, &CandidateTour> {
    pool.iter().map(|t| (t.id, t)).collect()
}

/// `k_i` UAVs per chosen tour, launched at `0, T, 2T, ...` with period
/// `k_i * T`.
pub fn build_schedule(
    sel: &Selection,
    pool: &[CandidateTour],
    p: &InstanceParams,
    mode: ReplicationMode,
) -> Schedule {
    build_schedule_with(sel, pool, p, |t| replication_factor(t, p, mode))
}

/// As [`build_schedule`] with caller-chosen UAV counts. The period is
/// stretched to `time + B` when `k * T` is too short for a full recharge, so
/// undersized counts show up as latency violations rather than battery ones.
pub fn build_schedule_with(
    sel: &Selection,
    pool: &[CandidateTour],
    p: &InstanceParams,
    mut k_of: impl FnMut(&CandidateTour) -> u32,
) -> Schedule {
    let by_id = tour_by_id(pool);
    let mut dispatches = Vec::new();
    let mut uav = 0;
    for id in &sel.chosen {
        let t = by_id[id];
        let k = k_of(t);
        let period = (k as f64 * p.latency).max(t.time() + p.recharge);
        for j in 0..k {
            dispatches.push(Dispatch {
                uav,
                tour: t.id,
                t0: j as f64 * p.latency,
                period,
            });
            uav += 1;
        }
    }
    Schedule {
        num_uavs: uav,
        num_tours: sel.chosen.len(),
        dispatches,
    }
}

pub fn uav_count(
    sel: &Selection,
    pool: &[CandidateTour],
    p: &InstanceParams,
    mode: ReplicationMode,
) -> usize {
    let by_id = tour_by_id(pool);
    sel.chosen
        .iter()
        .map(|id| replication_factor(by_id[id], p, mode) as usize)
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub horizon: f64,
    pub max_age_per_node: BTreeMap<NodeId, f64>,
    pub battery_violations: usize,
    pub latency_violations: usize,
    pub pass: bool,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("dispatch refers to unknown tour {0}")]
    UnknownTour(usize),
    #[error("uav {uav} starts a mission at {start} before returning at {busy_until}")]
    Overlap { uav: usize, start: f64, busy_until: f64 },
    #[error("dispatch for uav {0} has a non-positive period or negative start")]
    BadDispatch(usize),
}

/// Smallest horizon that replays `3` full periods after the last launch
/// phase plus one tour.
pub fn default_horizon(sched: &Schedule, pool: &[CandidateTour]) -> f64 {
    let by_id = tour_by_id(pool);
    let max_period = sched
        .dispatches
        .iter()
        .map(|d| d.period)
        .fold(0.0, f64::max);
    let max_start = sched.dispatches.iter().map(|d| d.t0).fold(0.0, f64::max);
    let max_time = sched
        .dispatches
        .iter()
        .filter_map(|d| by_id.get(&d.tour).map(|t| t.time()))
        .fold(0.0, f64::max);
    max_start + 3.0 * max_period + max_time
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Event {
    time: f64,
    uav: usize,
    mission: usize,
    step: usize,
}

impl Eq for Event {}

impl Ord for Event {
    // min-heap on (time, uav, step)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.uav.cmp(&self.uav))
            .then(other.step.cmp(&self.step))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Replays all missions launched before `horizon` and records every node's
/// largest gap between services.
pub fn simulate(
    sched: &Schedule,
    pool: &[CandidateTour],
    g: &Graph,
    p: &InstanceParams,
    horizon: f64,
) -> Result<SimReport, SimError> {
    simulate_watching(sched, pool, g, p, horizon, None)
}

/// As [`simulate`], but latency is only judged on `watched` nodes.
pub fn simulate_watching(
    sched: &Schedule,
    pool: &[CandidateTour],
    g: &Graph,
    p: &InstanceParams,
    horizon: f64,
    watched: Option<&BTreeSet<NodeId>>,
) -> Result<SimReport, SimError> {
    let by_id = tour_by_id(pool);
    let mut battery_violations = 0;

    // missions: (uav, tour, launch time), checked per UAV for overlap and recharge
    let mut missions: Vec<(usize, &CandidateTour, f64)> = Vec::new();
    for d in &sched.dispatches {
        let t = *by_id.get(&d.tour).ok_or(SimError::UnknownTour(d.tour))?;
        if d.period.is_nan() || d.period <= 0.0 || d.t0 < 0.0 {
            return Err(SimError::BadDispatch(d.uav));
        }
        let mut start = d.t0;
        while start < horizon {
            missions.push((d.uav, t, start));
            start += d.period;
        }
    }
    missions.sort_by(|a, b| a.0.cmp(&b.0).then(a.2.total_cmp(&b.2)));
    for pair in missions.windows(2) {
        let (u0, t0, s0) = pair[0];
        let (u1, _, s1) = pair[1];
        if u0 != u1 {
            continue;
        }
        let back = s0 + t0.time();
        if s1 < back - TIME_EPS {
            return Err(SimError::Overlap {
                uav: u1,
                start: s1,
                busy_until: back,
            });
        }
        if s1 - back < p.recharge - TIME_EPS {
            battery_violations += 1;
        }
    }
    for &(_, t, _) in &missions {
        if !within(t.time(), p.battery) {
            battery_violations += 1;
        }
    }

    let offsets: Vec<Vec<f64>> = missions.iter().map(|(_, t, _)| t.walk.offsets(g)).collect();
    let mut heap: BinaryHeap<Event> = missions
        .iter()
        .enumerate()
        .map(|(m, &(uav, _, start))| Event {
            time: start,
            uav,
            mission: m,
            step: 0,
        })
        .collect();

    let monitored = |v: NodeId| v != g.station() && watched.is_none_or(|w| w.contains(&v));
    let mut last = vec![0.0f64; g.len()];
    let mut max_age = vec![0.0f64; g.len()];
    let mut latency_violations = 0;
    while let Some(ev) = heap.pop() {
        if ev.time > horizon {
            continue;
        }
        let (_, tour, start) = missions[ev.mission];
        let v = tour.walk.nodes[ev.step];
        let gap = ev.time - last[v];
        if gap > max_age[v] {
            max_age[v] = gap;
        }
        if monitored(v) && gap > p.latency + TIME_EPS {
            latency_violations += 1;
        }
        last[v] = ev.time;
        if ev.step + 1 < tour.walk.nodes.len() {
            heap.push(Event {
                time: start + offsets[ev.mission][ev.step + 1],
                step: ev.step + 1,
                ..ev
            });
        }
    }
    for v in g.nodes() {
        let gap = horizon - last[v];
        if gap > max_age[v] {
            max_age[v] = gap;
        }
        if monitored(v) && gap > p.latency + TIME_EPS {
            latency_violations += 1;
        }
    }
    let max_age_per_node: BTreeMap<NodeId, f64> = g
        .nodes()
        .filter(|&v| monitored(v))
        .map(|v| (v, max_age[v]))
        .collect();
    Ok(SimReport {
        horizon,
        pass: battery_violations == 0 && latency_violations == 0,
        max_age_per_node,
        battery_violations,
        latency_violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{shortest_paths, Graph, Point};
    use crate::setcover::Proof;
    use crate::tours::Origin;
    use crate::tsp::Walk;

    fn path3(edge: f64) -> Graph {
        let coords = (0..3).map(|i| Point { x: i as f64, y: 0.0 }).collect();
        Graph::new(coords, [(0, 1, edge), (1, 2, edge)], 0).unwrap()
    }

    fn tour(g: &Graph, p: &InstanceParams, nodes: Vec<NodeId>) -> CandidateTour {
        let w = Walk::new(g, nodes).unwrap();
        CandidateTour::from_walk(w, g, p, Origin::TspGreedy).unwrap()
    }

    fn select(ids: &[usize]) -> Selection {
        Selection {
            chosen: ids.to_vec(),
            objective_value: ids.len() as f64,
            proof: Proof::Optimal,
        }
    }

    #[test]
    fn classification_table() {
        let g = path3(1000.0);
        let d = shortest_paths(&g);
        let p = InstanceParams::new(5000.0, 11000.0, 20000.0).unwrap();
        let c = classify_instance(&g, &d, &p, 4000.0);
        assert_eq!((c.size, c.regime), (Size::Small, Regime::SingleUav));

        let far = path3(1500.0);
        let c = classify_instance(&far, &shortest_paths(&far), &p, 6000.0);
        assert!(!c.reachable);
        assert_eq!(c.regime, Regime::Infeasible);

        let c = classify_instance(&g, &d, &p.with_latency(8000.0), 4000.0);
        assert_eq!((c.regime, c.k), (Regime::Replicated, 2));

        let c = classify_instance(&g, &d, &p.with_latency(4500.0), 4000.0);
        assert_eq!(c.regime, Regime::Partitioned);
    }

    #[test]
    fn replication_examples() {
        let g = path3(1000.0);
        let p = InstanceParams::new(5000.0, 11000.0, 20000.0).unwrap();
        let t4000 = tour(&g, &p, vec![0, 1, 2, 1, 0]);
        assert_eq!(replication_factor(&t4000, &p, ReplicationMode::PerTour), 1);
        let p5 = p.with_latency(5000.0);
        assert_eq!(replication_factor(&t4000, &p5, ReplicationMode::PerTour), 3);
        assert_eq!(replication_factor(&t4000, &p5, ReplicationMode::Paper), 4);

        let g = path3(1250.0);
        let t5000 = tour(&g, &p5, vec![0, 1, 2, 1, 0]);
        assert_eq!(replication_factor(&t5000, &p5, ReplicationMode::PerTour), 4);
    }

    #[test]
    fn three_uavs_suffice_and_two_fail() {
        let g = path3(1000.0);
        let p = InstanceParams::new(5000.0, 11000.0, 5000.0).unwrap();
        let mut t = tour(&g, &p, vec![0, 1, 2, 1, 0]);
        t.id = 7;
        let pool = vec![t];
        let sel = select(&[7]);
        let s = build_schedule(&sel, &pool, &p, ReplicationMode::PerTour);
        assert_eq!(s.num_uavs, 3);
        let t0s: Vec<f64> = s.dispatches.iter().map(|d| d.t0).collect();
        assert_eq!(t0s, vec![0.0, 5000.0, 10000.0]);
        assert!(s.dispatches.iter().all(|d| d.period == 15000.0));
        let h = default_horizon(&s, &pool);
        assert!(simulate(&s, &pool, &g, &p, h).unwrap().pass);

        let short = build_schedule_with(&sel, &pool, &p, |_| 2);
        let r = simulate(&short, &pool, &g, &p, h).unwrap();
        assert!(r.latency_violations > 0);
        assert_eq!(r.battery_violations, 0);
    }

    #[test]
    fn single_uav_regime_passes_and_fails_without_uav() {
        let g = path3(1000.0);
        let p = InstanceParams::new(5000.0, 11000.0, 20000.0).unwrap();
        let pool = vec![tour(&g, &p, vec![0, 1, 2, 1, 0])];
        let sel = select(&[0]);
        let s = build_schedule(&sel, &pool, &p, ReplicationMode::PerTour);
        assert_eq!((s.num_uavs, s.num_tours), (1, 1));
        assert_eq!(s.dispatches[0].period, 20000.0);
        let r = simulate(&s, &pool, &g, &p, default_horizon(&s, &pool)).unwrap();
        assert!(r.pass);
        assert_eq!(r.max_age_per_node[&2], 20000.0);

        let empty = Schedule {
            dispatches: vec![],
            num_uavs: 0,
            num_tours: 0,
        };
        let r = simulate(&empty, &pool, &g, &p, 40000.0).unwrap();
        assert!(r.latency_violations > 0);
    }

    #[test]
    fn one_node_graph_passes_trivially() {
        let g = Graph::new(vec![Point { x: 0.0, y: 0.0 }], [], 0).unwrap();
        let p = InstanceParams::new(5000.0, 11000.0, 2500.0).unwrap();
        let empty = Schedule {
            dispatches: vec![],
            num_uavs: 0,
            num_tours: 0,
        };
        assert!(simulate(&empty, &[], &g, &p, 1e6).unwrap().pass);
    }

    #[test]
    fn overlapping_missions_are_malformed() {
        let g = path3(1000.0);
        let p = InstanceParams::new(5000.0, 11000.0, 20000.0).unwrap();
        let pool = vec![tour(&g, &p, vec![0, 1, 2, 1, 0])];
        let s = Schedule {
            dispatches: vec![Dispatch {
                uav: 0,
                tour: 0,
                t0: 0.0,
                period: 3000.0,
            }],
            num_uavs: 1,
            num_tours: 1,
        };
        assert!(matches!(
            simulate(&s, &pool, &g, &p, 20000.0),
            Err(SimError::Overlap { uav: 0, .. })
        ));
    }

    #[test]
    fn short_turnaround_is_a_battery_violation() {
        let g = path3(1000.0);
        let p = InstanceParams::new(5000.0, 11000.0, 20000.0).unwrap();
        let pool = vec![tour(&g, &p, vec![0, 1, 2, 1, 0])];
        let s = Schedule {
            dispatches: vec![Dispatch {
                uav: 0,
                tour: 0,
                t0: 0.0,
                period: 10000.0,
            }],
            num_uavs: 1,
            num_tours: 1,
        };
        let r = simulate(&s, &pool, &g, &p, 50000.0).unwrap();
        assert!(r.battery_violations > 0);
        assert!(!r.pass);
    }

    #[test]
    fn uav_count_sums_factors() {
        let g = path3(1000.0);
        let p = InstanceParams::new(5000.0, 11000.0, 5000.0).unwrap();
        let mut a = tour(&g, &p, vec![0, 1, 2, 1, 0]);
        let g2 = path3(1250.0);
        let mut b = tour(&g2, &p, vec![0, 1, 2, 1, 0]);
        a.id = 0;
        b.id = 1;
        assert_eq!(uav_count(&select(&[0, 1]), &[a, b], &p, ReplicationMode::PerTour), 7);
    }
}
