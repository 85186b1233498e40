//! Times each pipeline stage for one method and latency on a diagonal grid.
//!
//! usage: probe <method> <latency> [rows] [edge_time]

use std::time::Instant;

use pcover::graph::{build_grid_with_diagonals, grid_center};
use pcover::presets::params;
use pcover::setcover::CoverInstance;
use pcover::solve::{Method, RunConfig, Solver};

fn main() {
    env_logger::init();
    let args: Vec<String> = std::env::args().collect();
    let method: Method = args[1].parse().unwrap();
    let latency: f64 = args[2].parse().unwrap();
    let rows: usize = args.get(3).map_or(10, |s| s.parse().unwrap());
    let edge: f64 = args.get(4).map_or(250.0, |s| s.parse().unwrap());
    let g = build_grid_with_diagonals(rows, rows, edge, grid_center(rows, rows)).unwrap();
    let p = params(latency);
    let solver = Solver::new(&g, &p).unwrap();
    let cfg = RunConfig::default().with_method(method);
    let t = Instant::now();
    let pool = solver.pool(&cfg, None).unwrap();
    eprintln!("pool {} tours in {:.2}s", pool.len(), t.elapsed().as_secs_f64());
    if let Ok(path) = std::env::var("PROBE_LP") {
        let ci = CoverInstance::from_pool(&pool, &g, cfg.objective, &p, cfg.replication);
        std::fs::write(path, ci.to_lp()).unwrap();
    }
    let t = Instant::now();
    let s = solver.solve(&cfg).unwrap();
    eprintln!(
        "N={} K={} proof={:?} total {:.2}s",
        s.num_uavs,
        s.num_tours,
        s.proof(),
        t.elapsed().as_secs_f64()
    );
}
