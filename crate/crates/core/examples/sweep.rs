//! Prints N/K per method and latency on a diagonal grid.
//!
//! usage: sweep [rows] [edge_time] [trials] [time_limit_seconds]

use std::time::Instant;

use pcover::graph::{build_grid_with_diagonals, grid_center};
use pcover::presets::{params, LATENCIES};
use pcover::solve::{experiment, experiment_csv, Method, RunConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let rows: usize = args.get(1).map_or(10, |s| s.parse().unwrap());
    let edge: f64 = args.get(2).map_or(250.0, |s| s.parse().unwrap());
    let trials: usize = args.get(3).map_or(1, |s| s.parse().unwrap());
    let g = build_grid_with_diagonals(rows, rows, edge, grid_center(rows, rows)).unwrap();
    let limit: u64 = args.get(4).map_or(60, |s| s.parse().unwrap());
    let cfg = RunConfig {
        trials,
        time_limit: std::time::Duration::from_secs(limit),
        ..RunConfig::default()
    };
    let start = Instant::now();
    let cells = experiment(&g, &params(LATENCIES[0]), &LATENCIES, &Method::ALL, &cfg).unwrap();
    print!("{}", experiment_csv(&cells, true));
    eprintln!("total {:.1}s", start.elapsed().as_secs_f64());
}
