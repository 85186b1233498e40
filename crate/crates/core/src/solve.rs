//! End-to-end pipeline: candidate pool, cover, schedule, simulation.
//!
//! Every returned [`Solution`] carries a passing simulation report; a failed
//! simulation is an internal error, never a result.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{shortest_paths, within, DistanceMap, Graph, InstanceParams, NodeId, ParamsError};
use crate::instance::InstanceDoc;
use crate::lollipop::{collect_lollipop_pool, LollipopConfig, LollipopError};
use crate::scheduler::{
    build_schedule, classify_instance, default_horizon, simulate, uav_count, FeasibilityClass,
    ReplicationMode, Schedule, SimReport,
};
use crate::setcover::{
    solve_cover_with, CoverError, CoverOptions, Objective, Proof, Selection, DEFAULT_TIME_LIMIT,
};
use crate::tours::{
    dedup_by_coverage, dijkstra_loop_pool, longest_segments_per_node, renumber, segment_greedy,
    CandidateTour, TourError,
};
use crate::tsp::{Tsp, Walk};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Dijkstra,
    TspGreedy,
    #[serde(rename = "tsp-lp-1")]
    TspLp1,
    #[serde(rename = "tsp-lp-n")]
    TspLpN,
    Lollipop,
    Hybrid,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Dijkstra,
        Method::TspGreedy,
        Method::TspLp1,
        Method::TspLpN,
        Method::Lollipop,
        Method::Hybrid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Dijkstra => "dijkstra",
            Method::TspGreedy => "tsp-greedy",
            Method::TspLp1 => "tsp-lp-1",
            Method::TspLpN => "tsp-lp-n",
            Method::Lollipop => "lollipop",
            Method::Hybrid => "hybrid",
        }
    }

    /// Whether trials with different seeds can differ.
    pub fn is_seeded(self) -> bool {
        !matches!(self, Method::Dijkstra | Method::Lollipop)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub method: Method,
    pub tsp_count: usize,
    pub lollipop_n: usize,
    pub objective: Objective,
    pub replication: ReplicationMode,
    pub seed: u64,
    pub time_limit: Duration,
    /// Deterministic search budget for the cover solver.
    pub node_limit: Option<u64>,
    pub trials: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            method: Method::Hybrid,
            tsp_count: 20,
            lollipop_n: 10,
            objective: Objective::UavCount,
            replication: ReplicationMode::PerTour,
            seed: 0,
            time_limit: DEFAULT_TIME_LIMIT,
            node_limit: None,
            trials: 1,
        }
    }
}

impl RunConfig {
    pub fn with_method(&self, method: Method) -> Self {
        RunConfig {
            method,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if self.trials == 0 {
            return Err(SolveError::Config("trials must be at least 1".into()));
        }
        if self.tsp_count == 0 {
            return Err(SolveError::Config("tsp-count must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error("nodes farther than b/2 from the station: {0:?}")]
    Unreachable(Vec<NodeId>),
    #[error("candidate pool leaves nodes uncovered: {0:?}")]
    Uncovered(Vec<NodeId>),
    #[error("tour construction failed: {0}")]
    Tour(TourError),
    #[error("set cover failed: {0}")]
    Cover(CoverError),
    #[error("internal error: schedule failed simulation: {0}")]
    Simulation(String),
}

impl SolveError {
    /// Errors caused by the instance itself rather than the solver.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            SolveError::Unreachable(_)
                | SolveError::Uncovered(_)
                | SolveError::Tour(_)
                | SolveError::Cover(CoverError::Uncovered(_))
        )
    }
}

impl From<TourError> for SolveError {
    fn from(e: TourError) -> Self {
        match e {
            TourError::Uncovered(nodes) => SolveError::Uncovered(nodes),
            e => SolveError::Tour(e),
        }
    }
}

impl From<CoverError> for SolveError {
    fn from(e: CoverError) -> Self {
        match e {
            CoverError::Uncovered(nodes) => SolveError::Uncovered(nodes),
            e => SolveError::Cover(e),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub method: Method,
    pub objective: Objective,
    pub replication: ReplicationMode,
    pub seed: u64,
    pub instance: InstanceDoc,
    pub class: FeasibilityClass,
    pub pool_size: usize,
    /// Chosen tours; dispatches refer to their ids.
    pub tours: Vec<CandidateTour>,
    pub selection: Selection,
    pub schedule: Schedule,
    #[serde(rename = "N")]
    pub num_uavs: usize,
    #[serde(rename = "K")]
    pub num_tours: usize,
    pub sim: SimReport,
}

impl Solution {
    pub fn proof(&self) -> Proof {
        self.selection.proof
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serialization cannot fail")
    }
}

/// Shared per-instance state: the station tree and the TSP engine.
pub struct Solver<'g> {
    g: &'g Graph,
    p: InstanceParams,
    d: DistanceMap,
    tsp: Tsp<'g>,
}

/// Longest segment per start node plus the greedy cut of every walk, so the
/// pool of a walk set always contains the greedy solution of each walk.
fn segment_pool(ws: &[Walk], g: &Graph, d: &DistanceMap, p: &InstanceParams) -> Vec<CandidateTour> {
    let mut all = Vec::new();
    for w in ws {
        all.extend(longest_segments_per_node(w, g, d, p));
        if let Ok(greedy) = segment_greedy(w, g, d, p) {
            all.extend(greedy);
        }
    }
    dedup_by_coverage(all)
}

fn union_pool(a: &[CandidateTour], b: &[CandidateTour]) -> Vec<CandidateTour> {
    dedup_by_coverage(a.iter().chain(b).cloned().collect())
}

/// Ids of pool tours with the same coverage as each of `tours`, when all
/// are present.
fn match_tours(pool: &[CandidateTour], tours: &[CandidateTour]) -> Option<Vec<usize>> {
    tours
        .iter()
        .map(|t| pool.iter().find(|q| q.coverage == t.coverage).map(|q| q.id))
        .collect()
}

fn covered(pool: &[CandidateTour]) -> BTreeSet<NodeId> {
    pool.iter().flat_map(|t| t.coverage.iter().copied()).collect()
}

impl<'g> Solver<'g> {
    pub fn new(g: &'g Graph, p: &InstanceParams) -> Result<Self, SolveError> {
        p.validate()?;
        let d = shortest_paths(g);
        Ok(Solver {
            g,
            p: p.clone(),
            d,
            tsp: Tsp::new(g),
        })
    }

    pub fn graph(&self) -> &Graph {
        self.g
    }

    pub fn params(&self) -> &InstanceParams {
        &self.p
    }

    pub fn distances(&self) -> &DistanceMap {
        &self.d
    }

    pub fn tsp(&self) -> &Tsp<'g> {
        &self.tsp
    }

    /// Same graph and TSP engine with another latency.
    pub fn with_latency(&self, latency: f64) -> Self {
        Solver {
            g: self.g,
            p: self.p.with_latency(latency),
            d: self.d.clone(),
            tsp: Tsp::new(self.g),
        }
    }

    fn check_reachable(&self) -> Result<(), SolveError> {
        let far: Vec<NodeId> = self
            .g
            .nodes()
            .filter(|&v| !within(self.d.dist(v), self.p.battery / 2.0))
            .collect();
        if far.is_empty() {
            Ok(())
        } else {
            Err(SolveError::Unreachable(far))
        }
    }

    pub fn dijkstra_pool(&self) -> Vec<CandidateTour> {
        dijkstra_loop_pool(self.g, &self.d, &self.p)
    }

    /// Uncovered nodes come back in the error with the partial pool.
    pub fn lollipop_pool(&self, cfg: &RunConfig) -> Result<Vec<CandidateTour>, LollipopError> {
        let lc = LollipopConfig {
            per_node_cap: cfg.lollipop_n,
            ..LollipopConfig::default()
        };
        collect_lollipop_pool(self.g, &self.d, &self.p, lc)
    }

    pub fn tsp_walks(&self, n: usize, seed: u64) -> Vec<Walk> {
        let mut ws = self.tsp.distinct(n, seed);
        // the single-walk methods use attempt 0, which distinct() may have
        // sorted away from the front
        let first = self.tsp.heuristic(seed);
        if let Some(i) = ws.iter().position(|w| w.canonical_form() == first.canonical_form()) {
            let w = ws.remove(i);
            ws.insert(0, w);
        }
        ws
    }

    /// Candidate pool for `cfg.method`. `lollipops` substitutes a
    /// precomputed lollipop pool for this latency.
    pub fn pool(
        &self,
        cfg: &RunConfig,
        lollipops: Option<&[CandidateTour]>,
    ) -> Result<Vec<CandidateTour>, SolveError> {
        let lolli = || -> Vec<CandidateTour> {
            match lollipops {
                Some(pool) => pool.to_vec(),
                None => match self.lollipop_pool(cfg) {
                    Ok(pool) => pool,
                    Err(LollipopError::Uncovered { partial, .. }) => partial,
                },
            }
        };
        let pool = match cfg.method {
            Method::Dijkstra => self.dijkstra_pool(),
            Method::TspGreedy => segment_greedy(&self.tsp.heuristic(cfg.seed), self.g, &self.d, &self.p)?,
            Method::TspLp1 => segment_pool(&[self.tsp.heuristic(cfg.seed)], self.g, &self.d, &self.p),
            Method::TspLpN => segment_pool(&self.tsp_walks(cfg.tsp_count, cfg.seed), self.g, &self.d, &self.p),
            Method::Lollipop => lolli(),
            Method::Hybrid => {
                let tsp = segment_pool(&self.tsp_walks(cfg.tsp_count, cfg.seed), self.g, &self.d, &self.p);
                union_pool(&tsp, &lolli())
            }
        };
        let missing: Vec<NodeId> = {
            let c = covered(&pool);
            self.g.nodes().filter(|v| !c.contains(v)).collect()
        };
        if !missing.is_empty() {
            return Err(SolveError::Uncovered(missing));
        }
        Ok(pool)
    }

    pub fn solve(&self, cfg: &RunConfig) -> Result<Solution, SolveError> {
        self.solve_with(cfg, None, &[])
    }

    /// `warm` holds earlier solutions whose tours are expected in this
    /// method's pool (matched by coverage set); valid ones seed the cover
    /// search, so a method never does worse than a sub-pool method it is
    /// warmed with.
    pub fn solve_with(
        &self,
        cfg: &RunConfig,
        lollipops: Option<&[CandidateTour]>,
        warm: &[&Solution],
    ) -> Result<Solution, SolveError> {
        let start = Instant::now();
        cfg.validate()?;
        self.check_reachable()?;
        let mut pool = self.pool(cfg, lollipops)?;
        renumber(&mut pool);
        for t in &pool {
            t.check(self.g, &self.p).map_err(SolveError::Simulation)?;
        }
        let selection = if cfg.method == Method::TspGreedy {
            let chosen: Vec<usize> = pool.iter().map(|t| t.id).collect();
            Selection {
                objective_value: chosen.len() as f64,
                chosen,
                proof: Proof::Greedy,
            }
        } else {
            // the cover gets what pool construction left of the budget, less
            // a margin for scheduling and simulation
            let left = cfg.time_limit.saturating_sub(start.elapsed());
            let opts = CoverOptions {
                time_limit: left.mul_f64(0.9),
                node_limit: cfg.node_limit,
                warm_starts: warm.iter().filter_map(|s| match_tours(&pool, &s.tours)).collect(),
            };
            solve_cover_with(&pool, self.g, cfg.objective, &self.p, cfg.replication, &opts)?
        };
        let pool_size = pool.len();
        let tsp_time = self.tsp.heuristic(cfg.seed).total_time;
        let class = classify_instance(self.g, &self.d, &self.p, tsp_time);
        let tours: Vec<CandidateTour> = pool
            .into_iter()
            .filter(|t| selection.chosen.binary_search(&t.id).is_ok())
            .collect();
        let schedule = build_schedule(&selection, &tours, &self.p, cfg.replication);
        let horizon = default_horizon(&schedule, &tours);
        let sim = simulate(&schedule, &tours, self.g, &self.p, horizon)
            .map_err(|e| SolveError::Simulation(e.to_string()))?;
        if !sim.pass {
            return Err(SolveError::Simulation(format!(
                "{} latency and {} battery violations",
                sim.latency_violations, sim.battery_violations
            )));
        }
        debug_assert_eq!(
            schedule.num_uavs,
            uav_count(&selection, &tours, &self.p, cfg.replication)
        );
        Ok(Solution {
            method: cfg.method,
            objective: cfg.objective,
            replication: cfg.replication,
            seed: cfg.seed,
            instance: InstanceDoc::from_graph(self.g, &self.p),
            class,
            pool_size,
            num_uavs: schedule.num_uavs,
            num_tours: schedule.num_tours,
            tours,
            selection,
            schedule,
            sim,
        })
    }
}

pub fn solve(g: &Graph, p: &InstanceParams, cfg: &RunConfig) -> Result<Solution, SolveError> {
    Solver::new(g, p)?.solve(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentCell {
    pub method: Method,
    pub latency: f64,
    pub trials: usize,
    /// `None` when any trial was infeasible.
    pub n_mean: Option<f64>,
    pub k_mean: Option<f64>,
    pub seconds_mean: f64,
    /// trials whose cover was not proven optimal
    pub unproven: usize,
    pub error: Option<String>,
}

struct Trial {
    n: usize,
    k: usize,
    seconds: f64,
    proven: bool,
}

/// Methods whose pools nest in this order for a fixed seed; each is warmed
/// with the solutions of those before it.
const CHAIN: [Method; 4] = [Method::TspGreedy, Method::TspLp1, Method::TspLpN, Method::Hybrid];

/// Runs `methods` for one seed, chained methods in pool order.
/// Each method's solution and wall time, in chain order.
type TrialRuns = Vec<(Method, Result<(Solution, f64), SolveError>)>;

fn run_trial(
    solver: &Solver,
    methods: &[Method],
    cfg: &RunConfig,
    seed: u64,
    lollipops: Option<&[CandidateTour]>,
    fixed: &[(Method, Solution)],
) -> TrialRuns {
    let mut out = Vec::new();
    let mut earlier: Vec<Solution> = fixed.iter().map(|(_, s)| s.clone()).collect();
    for &method in CHAIN.iter().filter(|m| methods.contains(m)) {
        let trial_cfg = RunConfig {
            method,
            seed,
            ..cfg.clone()
        };
        let warm: Vec<&Solution> = earlier.iter().collect();
        let start = Instant::now();
        let r = solver.solve_with(&trial_cfg, lollipops, &warm);
        let secs = start.elapsed().as_secs_f64();
        if let Ok(s) = &r {
            earlier.push(s.clone());
        }
        out.push((method, r.map(|s| (s, secs))));
    }
    out
}

/// Every method at every latency, averaged over `cfg.trials` seeds
/// `cfg.seed, cfg.seed + 1, ...`. Unseeded methods run once per latency.
pub fn experiment(
    g: &Graph,
    base: &InstanceParams,
    latencies: &[f64],
    methods: &[Method],
    cfg: &RunConfig,
) -> Result<Vec<ExperimentCell>, SolveError> {
    cfg.validate()?;
    let root = Solver::new(g, base)?;
    let mut cells = Vec::new();
    for &latency in latencies {
        let solver = root.with_latency(latency);
        let needs_lollipops = methods.iter().any(|m| matches!(m, Method::Lollipop | Method::Hybrid));
        let lollipops = needs_lollipops.then(|| match solver.lollipop_pool(cfg) {
            Ok(pool) => pool,
            Err(LollipopError::Uncovered { partial, .. }) => partial,
        });
        let mut results: Vec<(Method, Vec<Result<Trial, SolveError>>)> = Vec::new();

        // unseeded methods: one run each
        let mut fixed: Vec<(Method, Solution)> = Vec::new();
        for &method in methods.iter().filter(|m| !m.is_seeded()) {
            let start = Instant::now();
            let r = solver.solve_with(&cfg.with_method(method), lollipops.as_deref(), &[]);
            let seconds = start.elapsed().as_secs_f64();
            let trial = r.map(|s| {
                let t = Trial {
                    n: s.num_uavs,
                    k: s.num_tours,
                    seconds,
                    proven: s.proof() != Proof::TimeLimitedIncumbent,
                };
                if method == Method::Lollipop {
                    fixed.push((method, s));
                }
                t
            });
            results.push((method, vec![trial]));
        }

        let per_seed: Vec<TrialRuns> = (0..cfg.trials)
            .into_par_iter()
            .map(|i| run_trial(&solver, methods, cfg, cfg.seed + i as u64, lollipops.as_deref(), &fixed))
            .collect();
        let mut chained: Vec<(Method, Vec<Result<Trial, SolveError>>)> = Vec::new();
        for runs in per_seed {
            for (method, r) in runs {
                let trial = r.map(|(s, seconds)| Trial {
                    n: s.num_uavs,
                    k: s.num_tours,
                    seconds,
                    proven: s.proof() != Proof::TimeLimitedIncumbent,
                });
                match chained.iter_mut().find(|(m, _)| *m == method) {
                    Some((_, v)) => v.push(trial),
                    None => chained.push((method, vec![trial])),
                }
            }
        }
        results.extend(chained);

        for &method in methods {
            let (_, trials) = results.iter_mut().find(|(m, _)| *m == method).expect("method ran");
            let mut ok = Vec::new();
            let mut error = None;
            for r in trials.drain(..) {
                match r {
                    Ok(t) => ok.push(t),
                    Err(e) if e.is_infeasible() => {
                        error.get_or_insert_with(|| e.to_string());
                    }
                    Err(e) => return Err(e),
                }
            }
            let mean = |f: &dyn Fn(&Trial) -> f64| ok.iter().map(f).sum::<f64>() / ok.len().max(1) as f64;
            let feasible = error.is_none();
            cells.push(ExperimentCell {
                method,
                latency,
                trials: if method.is_seeded() { cfg.trials } else { 1 },
                n_mean: feasible.then(|| mean(&|t| t.n as f64)),
                k_mean: feasible.then(|| mean(&|t| t.k as f64)),
                seconds_mean: mean(&|t| t.seconds),
                unproven: ok.iter().filter(|t| !t.proven).count(),
                error,
            });
        }
    }
    Ok(cells)
}

/// CSV with one row per method and latency. Wall time is only written when
/// `timing` is set, so the default output is reproducible byte for byte.
pub fn experiment_csv(cells: &[ExperimentCell], timing: bool) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["method", "latency", "trials", "N", "K", "unproven"];
    if timing {
        header.push("time");
    }
    w.write_record(&header).expect("in-memory write");
    for c in cells {
        let fmt = |x: Option<f64>| x.map_or("INFEASIBLE".to_string(), |v| format!("{v:.2}"));
        let mut rec = vec![
            c.method.to_string(),
            format!("{}", c.latency),
            c.trials.to_string(),
            fmt(c.n_mean),
            fmt(c.k_mean),
            c.unproven.to_string(),
        ];
        if timing {
            rec.push(format!("{:.3}", c.seconds_mean));
        }
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub tour: usize,
    pub origin: crate::tours::Origin,
    pub nodes: Vec<NodeId>,
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flight {
    pub uav: usize,
    pub tour: usize,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotData {
    pub station: [f64; 2],
    pub polylines: Vec<Polyline>,
    /// Every mission launched within the simulated horizon.
    pub timeline: Vec<Flight>,
    pub horizon: f64,
}

pub fn plot_data(s: &Solution) -> PlotData {
    let coord = |v: NodeId| {
        let n = s
            .instance
            .nodes
            .iter()
            .find(|r| r.id == v)
            .expect("tour nodes exist in the instance");
        [n.x, n.y]
    };
    let polylines = s
        .tours
        .iter()
        .map(|t| Polyline {
            tour: t.id,
            origin: t.origin,
            nodes: t.walk.nodes.clone(),
            points: t.walk.nodes.iter().map(|&v| coord(v)).collect(),
        })
        .collect();
    let mut timeline = Vec::new();
    for d in &s.schedule.dispatches {
        let time = s
            .tours
            .iter()
            .find(|t| t.id == d.tour)
            .map_or(0.0, |t| t.time());
        let mut start = d.t0;
        while start < s.sim.horizon {
            timeline.push(Flight {
                uav: d.uav,
                tour: d.tour,
                start,
                end: start + time,
            });
            start += d.period;
        }
    }
    timeline.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.uav.cmp(&b.uav)));
    PlotData {
        station: coord(s.instance.station),
        polylines,
        timeline,
        horizon: s.sim.horizon,
    }
}
