use std::collections::BTreeSet;
use std::time::Duration;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pcover::graph::{build_random_geometric, shortest_paths, AllPairs, StationPolicy};
use pcover::lollipop::{collect_lollipop_pool, expand_all, ExpandLimits, LollipopConfig};
use pcover::scheduler::{
    build_schedule, classify_instance, default_horizon, simulate, ReplicationMode, Regime,
};
use pcover::setcover::{exact_cover, greedy_cover, CoverInstance, CoverSet, Objective, Proof, Selection};
use pcover::solve::{Method, RunConfig, Solver};
use pcover::tours::{
    dijkstra_closed_walks, is_valid_segment, longest_segments_per_node, segment_to_tour, CandidateTour, Origin,
    Segment,
};
use pcover::tsp::Tsp;
use pcover::{Graph, InstanceParams};

const EPS: f64 = 1e-6;

fn graph(n: usize, seed: u64) -> Graph {
    build_random_geometric(n, 1400.0, 2400.0, seed, StationPolicy::CornerMost).unwrap()
}

fn params(battery: f64, latency: f64) -> InstanceParams {
    InstanceParams::new(battery, 11000.0, latency).unwrap()
}

fn union(pool: &[CandidateTour]) -> BTreeSet<usize> {
    pool.iter().flat_map(|t| t.coverage.iter().copied()).collect()
}

fn run(method: Method, seed: u64) -> RunConfig {
    RunConfig {
        method,
        seed,
        tsp_count: 5,
        time_limit: Duration::from_secs(10),
        ..RunConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(160))]

    #[test]
    fn distances_are_a_metric(n in 2usize..25, seed in any::<u64>()) {
        let g = graph(n, seed);
        let d = shortest_paths(&g);
        prop_assert_eq!(d.dist(g.station()), 0.0);
        for e in g.edges() {
            prop_assert!((d.dist(e.u) - d.dist(e.v)).abs() <= e.time + EPS);
        }
        for v in g.nodes() {
            let path = d.path_from_root(v);
            let along: f64 = path.windows(2).map(|w| g.edge_time(w[0], w[1]).unwrap()).sum();
            prop_assert_eq!(along, d.dist(v));
        }
        let ap = AllPairs::new(&g);
        for u in g.nodes() {
            for v in g.nodes() {
                prop_assert!((ap.dist(u, v) - ap.dist(v, u)).abs() <= EPS);
            }
        }
    }

    #[test]
    fn generators_are_pure(n in 1usize..30, seed in any::<u64>()) {
        prop_assert_eq!(graph(n, seed), graph(n, seed));
    }

    #[test]
    fn tsp_walks_are_closed_tours(n in 2usize..9, seed in any::<u64>()) {
        let g = graph(n, seed);
        let tsp = Tsp::new(&g);
        let heur = tsp.heuristic(seed);
        let exact = tsp.exact().unwrap();
        for w in [&heur, &exact] {
            prop_assert!(w.is_closed_at(g.station()));
            prop_assert_eq!(w.visited().len(), g.len());
            let recomputed: f64 = w.nodes.windows(2).map(|p| g.edge_time(p[0], p[1]).unwrap()).sum();
            prop_assert_eq!(recomputed, w.total_time);
        }
        prop_assert!(exact.total_time <= heur.total_time + EPS);
    }

    #[test]
    fn every_pool_respects_budget_and_deadline(
        n in 3usize..14,
        seed in any::<u64>(),
        latency in 1500.0f64..20000.0,
    ) {
        let g = graph(n, seed);
        let p = params(5000.0, latency);
        let solver = Solver::new(&g, &p).unwrap();
        for m in Method::ALL {
            let Ok(pool) = solver.pool(&run(m, seed), None) else { continue };
            for t in &pool {
                prop_assert!(t.check(&g, &p).is_ok(), "{:?}", t.check(&g, &p));
                prop_assert!(t.time() <= p.battery + EPS);
                for v in &t.coverage {
                    prop_assert!(t.arrival[v] <= p.latency + EPS);
                }
            }
        }
    }

    #[test]
    fn raising_budget_or_deadline_never_shrinks_coverage(
        n in 3usize..12,
        seed in any::<u64>(),
        battery in 2500.0f64..6000.0,
        latency in 1000.0f64..8000.0,
        extra_b in 0.0f64..3000.0,
        extra_t in 0.0f64..5000.0,
    ) {
        let g = graph(n, seed);
        let d = shortest_paths(&g);
        let lo = params(battery, latency);
        let hi = params(battery + extra_b, latency + extra_t);
        let walk = Tsp::new(&g).heuristic(seed);
        let small = union(&longest_segments_per_node(&walk, &g, &d, &lo));
        let large = union(&longest_segments_per_node(&walk, &g, &d, &hi));
        prop_assert!(small.is_subset(&large));

        let cfg = LollipopConfig::default();
        let pool = |p: &InstanceParams| match collect_lollipop_pool(&g, &d, p, cfg) {
            Ok(pool) => union(&pool),
            Err(pcover::lollipop::LollipopError::Uncovered { partial, .. }) => union(&partial),
        };
        prop_assert!(pool(&lo).is_subset(&pool(&hi)));
    }

    #[test]
    fn segments_fit_the_remaining_budget(n in 3usize..14, seed in any::<u64>(), latency in 1500.0f64..20000.0) {
        let g = graph(n, seed);
        let d = shortest_paths(&g);
        let p = params(5000.0, latency);
        let walk = Tsp::new(&g).heuristic(seed);
        let offsets = walk.offsets(&g);
        for start in 0..walk.nodes.len() {
            for end in start..walk.nodes.len() {
                let s = Segment::from_walk(&walk, &offsets, start, end);
                if !is_valid_segment(&s, &d, &p) {
                    continue;
                }
                let budget = p.battery - d.dist(s.first()) - d.dist(s.last());
                prop_assert!(s.duration <= budget + EPS);
                let t = segment_to_tour(&s, &g, &d, &p, Origin::TspLp).unwrap();
                let expect = d.dist(s.first()) + s.duration + d.dist(s.last());
                prop_assert!((t.time() - expect).abs() <= EPS);
            }
        }
    }

    #[test]
    fn dijkstra_walks_match_edge_count(n in 2usize..25, seed in any::<u64>()) {
        let g = graph(n, seed);
        let d = shortest_paths(&g);
        prop_assert_eq!(dijkstra_closed_walks(&g, &d).len(), g.num_edges());
    }

    #[test]
    fn lollipops_are_outward_and_unique(
        n in 3usize..14,
        seed in any::<u64>(),
        latency in 1500.0f64..8000.0,
    ) {
        let g = graph(n, seed);
        let d = shortest_paths(&g);
        let p = params(5000.0, latency);
        for v in g.nodes().filter(|&v| v != g.station()) {
            let limits = ExpandLimits { max_states: 5000, max_tours: None };
            let tours = expand_all(&g, v, &d, &p, limits).tours;
            let mut keys = BTreeSet::new();
            for t in &tours {
                prop_assert!(t.cycle.iter().all(|&u| d.dist(u) >= d.dist(v)));
                prop_assert!(t.is_feasible(&g, &d, &p));
                let key = t.key(g.len());
                let mut nodes = t.cycle.clone();
                nodes.sort_unstable();
                prop_assert_eq!(key.nodes(), nodes);
                let mut reversed = t.cycle.clone();
                reversed[1..].reverse();
                prop_assert_eq!(pcover::lollipop::CycleKey::new(g.len(), &reversed), key.clone());
                prop_assert!(keys.insert(key.nodes()));
                let c = t.to_candidate(&g, &p);
                prop_assert!(c.check(&g, &p).is_ok());
            }
        }
    }
}

fn arb_cover() -> impl Strategy<Value = CoverInstance> {
    (1usize..10, 1usize..12).prop_flat_map(|(u, m)| {
        prop::collection::vec((prop::collection::btree_set(0..u, 1..=u), 1u8..5), m).prop_map(move |sets| {
            let mut sets: Vec<CoverSet> = sets
                .into_iter()
                .enumerate()
                .map(|(i, (elements, w))| CoverSet {
                    tour_id: i,
                    elements,
                    weight: w as f64,
                })
                .collect();
            let all = CoverSet {
                tour_id: sets.len(),
                elements: (0..u).collect(),
                weight: u as f64 * 5.0,
            };
            sets.push(all);
            CoverInstance {
                universe: (0..u).collect(),
                sets,
            }
        })
    })
}

fn brute_force(ci: &CoverInstance) -> f64 {
    let m = ci.sets.len();
    (0u32..1 << m)
        .filter_map(|mask| {
            let chosen: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).map(|i| ci.sets[i].tour_id).collect();
            let covered: BTreeSet<usize> = (0..m)
                .filter(|i| mask >> i & 1 == 1)
                .flat_map(|i| ci.sets[i].elements.iter().copied())
                .collect();
            (covered == ci.universe).then(|| chosen.iter().map(|&id| ci.sets[id].weight).sum())
        })
        .fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn exact_cover_is_optimal_and_covers(ci in arb_cover()) {
        let exact = exact_cover(&ci, Duration::from_secs(10)).unwrap();
        let greedy = greedy_cover(&ci).unwrap();
        prop_assert_eq!(exact.proof, Proof::Optimal);
        prop_assert!(exact.objective_value <= greedy.objective_value + EPS);
        prop_assert!((exact.objective_value - brute_force(&ci)).abs() <= EPS);
        for sel in [&exact, &greedy] {
            let covered: BTreeSet<usize> = sel
                .chosen
                .iter()
                .flat_map(|id| ci.sets.iter().find(|s| s.tour_id == *id).unwrap().elements.iter().copied())
                .collect();
            prop_assert_eq!(&covered, &ci.universe);
        }
        prop_assert_eq!(exact, exact_cover(&ci, Duration::from_secs(10)).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn schedules_are_sound(
        n in 2usize..12,
        seed in any::<u64>(),
        latency in 1500.0f64..20000.0,
        uniform in any::<bool>(),
    ) {
        let g = graph(n, seed);
        let p = params(5000.0, latency);
        let mode = if uniform { ReplicationMode::Paper } else { ReplicationMode::PerTour };
        let cfg = RunConfig { replication: mode, ..run(Method::Hybrid, seed) };
        let Ok(s) = Solver::new(&g, &p).unwrap().solve(&cfg) else { return Ok(()) };
        prop_assert!(s.sim.pass);
        let sched = build_schedule(&s.selection, &s.tours, &p, mode);
        prop_assert_eq!(&sched, &s.schedule);
        let horizon = 2.0 * default_horizon(&sched, &s.tours);
        let report = simulate(&sched, &s.tours, &g, &p, horizon).unwrap();
        prop_assert!(report.pass, "{:?}", report);
    }

    #[test]
    fn single_uav_regime_flies_the_tsp_tour(n in 2usize..9, seed in any::<u64>()) {
        let g = build_random_geometric(n, 600.0, 800.0, seed, StationPolicy::CornerMost).unwrap();
        let p = params(5000.0, 16000.0);
        let d = shortest_paths(&g);
        let walk = Tsp::new(&g).heuristic(seed);
        let class = classify_instance(&g, &d, &p, walk.total_time);
        prop_assume!(class.regime == Regime::SingleUav);
        let tour = CandidateTour::from_walk(walk, &g, &p, Origin::TspGreedy).unwrap();
        let sel = Selection { chosen: vec![0], objective_value: 1.0, proof: Proof::Optimal };
        let pool = [tour];
        let sched = build_schedule(&sel, &pool, &p, ReplicationMode::Paper);
        prop_assert_eq!(sched.num_uavs, 1);
        let report = simulate(&sched, &pool, &g, &p, default_horizon(&sched, &pool)).unwrap();
        prop_assert!(report.pass);
    }

    #[test]
    fn uav_count_ignores_pool_ids(
        n in 3usize..12,
        seed in any::<u64>(),
        latency in 1500.0f64..20000.0,
        shuffle in any::<u64>(),
    ) {
        let g = graph(n, seed);
        let p = params(5000.0, latency);
        let solver = Solver::new(&g, &p).unwrap();
        let Ok(pool) = solver.pool(&run(Method::TspLpN, seed), None) else { return Ok(()) };
        let nk = |pool: &[CandidateTour]| {
            let ci = CoverInstance::from_pool(pool, &g, Objective::UavCount, &p, ReplicationMode::PerTour);
            let sel = exact_cover(&ci, Duration::from_secs(10)).unwrap();
            prop_assert_eq!(sel.proof, Proof::Optimal);
            let sched = build_schedule(&sel, pool, &p, ReplicationMode::PerTour);
            Ok((sched.num_uavs, sched.num_tours))
        };
        let before = nk(&pool)?;
        let mut permuted = pool.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(shuffle);
        permuted.shuffle(&mut rng);
        let mut ids: Vec<usize> = (0..permuted.len()).map(|i| i * 7 + 3).collect();
        ids.shuffle(&mut rng);
        for (t, id) in permuted.iter_mut().zip(ids) {
            t.id = id;
        }
        prop_assert_eq!(before, nk(&permuted)?);
    }
}
