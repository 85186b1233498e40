//! Named benchmark instances.
//!
//! The grid presets are 8-connected: a 4-connected grid has no outward
//! cycles, so every lollipop there degenerates to an out-and-back.

use crate::graph::{build_grid_with_diagonals, grid_center, Graph, InstanceParams, Point};

pub const BATTERY: f64 = 5000.0;
pub const RECHARGE: f64 = 11000.0;
pub const LATENCIES: [f64; 4] = [2500.0, 3000.0, 5000.0, 20000.0];

/// Edge time of the 6x6 preset.
pub const GRID6_EDGE: f64 = 300.0;
/// Edge time of the 10x10 preset.
pub const GRID10_EDGE: f64 = 250.0;

pub const NAMES: [&str; 4] = ["p3", "grid2x2", "grid6x6", "grid10x10"];

pub fn params(latency: f64) -> InstanceParams {
    InstanceParams::new(BATTERY, RECHARGE, latency).expect("preset parameters are valid")
}

/// Path `0 - 1 - 2` with 1000 s edges, station at `0`.
pub fn path3() -> Graph {
    let coords = (0..3).map(|i| Point { x: i as f64 * 1000.0, y: 0.0 }).collect();
    Graph::new(coords, [(0, 1, 1000.0), (1, 2, 1000.0)], 0).expect("valid preset")
}

/// 4-cycle with 1000 s edges, station at `0`.
pub fn grid2x2() -> Graph {
    crate::graph::build_grid(2, 2, 1000.0, 0).expect("valid preset")
}

pub fn grid6x6() -> Graph {
    build_grid_with_diagonals(6, 6, GRID6_EDGE, grid_center(6, 6)).expect("valid preset")
}

pub fn grid10x10() -> Graph {
    build_grid_with_diagonals(10, 10, GRID10_EDGE, grid_center(10, 10)).expect("valid preset")
}

pub fn by_name(name: &str) -> Option<Graph> {
    match name {
        "p3" => Some(path3()),
        "grid2x2" => Some(grid2x2()),
        "grid6x6" => Some(grid6x6()),
        "grid10x10" => Some(grid10x10()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_reachable_within_half_budget() {
        for name in NAMES {
            let g = by_name(name).unwrap();
            let d = crate::graph::shortest_paths(&g);
            assert!(d.max_dist() <= BATTERY / 2.0, "{name}");
        }
        assert_eq!(grid10x10().len(), 100);
        assert_eq!(grid6x6().len(), 36);
    }
}
