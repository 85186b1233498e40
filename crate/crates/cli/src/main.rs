//! `pcover`: generate instances, solve them, sweep latencies, export plot data.
//!
//! Exit codes: 0 solved and verified, 1 usage or internal error, 2 infeasible
//! instance, 3 solved with a time-limited (unproven) cover, 4 I/O error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use pcover::graph::{build_grid, build_grid_with_diagonals, build_random_geometric, grid_center, StationPolicy};
use pcover::instance::{InstanceDoc, InstanceError};
use pcover::presets;
use pcover::scheduler::ReplicationMode;
use pcover::setcover::{Objective, Proof};
use pcover::solve::{experiment, experiment_csv, plot_data, Method, RunConfig, Solution, SolveError, Solver};
use pcover::InstanceParams;

const EXIT_INFEASIBLE: u8 = 2;
const EXIT_TIME_LIMIT: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "pcover", version, about = "Persistent coverage planning for battery-limited UAVs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write an instance file.
    Generate(GenerateArgs),
    /// Solve an instance and write a verified solution.
    Solve(SolveArgs),
    /// Average N and K per method over latencies and seeds, as CSV.
    Experiment(ExperimentArgs),
    /// Tour polylines and the flight timeline of a solution.
    PlotData(PlotDataArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    /// rows x cols lattice
    Grid,
    /// random points joined within a radius
    Geometric,
    /// a named benchmark graph
    Preset,
}

#[derive(Args)]
struct ParamArgs {
    /// flight budget b in seconds
    #[arg(long, default_value_t = presets::BATTERY)]
    battery: f64,
    /// recharge time B in seconds
    #[arg(long, default_value_t = presets::RECHARGE)]
    recharge: f64,
    /// revisit deadline T in seconds
    #[arg(long, default_value_t = 20000.0)]
    latency: f64,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(value_enum)]
    kind: Kind,
    #[arg(long, default_value_t = 6)]
    rows: usize,
    #[arg(long, default_value_t = 6)]
    cols: usize,
    #[arg(long, default_value_t = 300.0)]
    edge_time: f64,
    /// connect diagonal neighbours (time = edge time * sqrt 2)
    #[arg(long)]
    diagonals: bool,
    /// station node; defaults to the grid centre
    #[arg(long)]
    station: Option<usize>,
    #[arg(long, default_value_t = 50)]
    nodes: usize,
    #[arg(long, default_value_t = 1500.0)]
    radius: f64,
    #[arg(long, default_value_t = 5000.0)]
    side: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = PolicyArg::CentroidMost)]
    station_policy: PolicyArg,
    /// preset name: p3, grid2x2, grid6x6, grid10x10
    #[arg(long, default_value = "grid10x10")]
    preset: String,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    CornerMost,
    CentroidMost,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = 20)]
    tsp_count: usize,
    #[arg(long, default_value_t = 10)]
    lollipop_n: usize,
    #[arg(long, default_value = "uav-count")]
    objective: Objective,
    #[arg(long, default_value = "per-tour")]
    replication: ReplicationMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// seconds per solve
    #[arg(long, env = "PCOVER_TIME_LIMIT", default_value_t = 60.0)]
    time_limit: f64,
    /// deterministic cap on cover search nodes
    #[arg(long)]
    node_limit: Option<u64>,
    /// override b from the instance
    #[arg(long)]
    battery: Option<f64>,
    /// override B from the instance
    #[arg(long)]
    recharge: Option<f64>,
}

impl RunArgs {
    fn config(&self, method: Method, trials: usize) -> anyhow::Result<RunConfig> {
        anyhow::ensure!(
            self.time_limit.is_finite() && self.time_limit >= 0.0,
            "time limit must be a non-negative number of seconds"
        );
        Ok(RunConfig {
            method,
            tsp_count: self.tsp_count,
            lollipop_n: self.lollipop_n,
            objective: self.objective,
            replication: self.replication,
            seed: self.seed,
            time_limit: Duration::from_secs_f64(self.time_limit),
            node_limit: self.node_limit,
            trials,
        })
    }

    fn params(&self, base: &InstanceParams, latency: Option<f64>) -> InstanceParams {
        InstanceParams {
            battery: self.battery.unwrap_or(base.battery),
            recharge: self.recharge.unwrap_or(base.recharge),
            latency: latency.unwrap_or(base.latency),
            per_node_deadline: base.per_node_deadline.clone(),
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, default_value = "hybrid")]
    method: Method,
    /// override T from the instance
    #[arg(long)]
    latency: Option<f64>,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    instance: PathBuf,
    /// comma-separated latencies
    #[arg(long, value_delimiter = ',', default_values_t = presets::LATENCIES)]
    latency: Vec<f64>,
    /// comma-separated methods; all by default
    #[arg(long, value_delimiter = ',')]
    method: Vec<Method>,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    /// add a mean wall-time column
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotDataArgs {
    solution: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let error = e.into();
        let code = if let Some(e) = error.downcast_ref::<SolveError>() {
            if e.is_infeasible() {
                EXIT_INFEASIBLE
            } else {
                1
            }
        } else if error.downcast_ref::<InstanceError>().is_some_and(|e| {
            matches!(e, InstanceError::Io { .. } | InstanceError::Json(_))
        }) || error.downcast_ref::<std::io::Error>().is_some()
        {
            EXIT_IO
        } else {
            1
        };
        Failure { code, error }
    }
}

fn io_failure(error: anyhow::Error) -> Failure {
    Failure { code: EXIT_IO, error }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(io_failure),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn generate(a: &GenerateArgs) -> Result<u8, Failure> {
    let params = InstanceParams::new(a.params.battery, a.params.recharge, a.params.latency)?;
    let g = match a.kind {
        Kind::Grid => {
            let station = a.station.unwrap_or_else(|| grid_center(a.rows, a.cols));
            if a.diagonals {
                build_grid_with_diagonals(a.rows, a.cols, a.edge_time, station)?
            } else {
                build_grid(a.rows, a.cols, a.edge_time, station)?
            }
        }
        Kind::Geometric => {
            let policy = match a.station_policy {
                PolicyArg::CornerMost => StationPolicy::CornerMost,
                PolicyArg::CentroidMost => StationPolicy::CentroidMost,
            };
            build_random_geometric(a.nodes, a.radius, a.side, a.seed, policy)?
        }
        Kind::Preset => presets::by_name(&a.preset)
            .ok_or_else(|| anyhow::anyhow!("unknown preset {:?}; known: {:?}", a.preset, presets::NAMES))?,
    };
    InstanceDoc::from_graph(&g, &params).write(&a.out)?;
    eprintln!("wrote {} nodes, {} edges to {}", g.len(), g.num_edges(), a.out.display());
    Ok(0)
}

fn read_instance(path: &Path) -> Result<(pcover::Graph, InstanceParams), Failure> {
    let doc = InstanceDoc::read(path)?;
    Ok(doc.to_graph()?)
}

fn solve(a: &SolveArgs) -> Result<u8, Failure> {
    let (g, base) = read_instance(&a.instance)?;
    let p = a.run.params(&base, a.latency);
    let cfg = a.run.config(a.method, 1)?;
    let start = Instant::now();
    let solver = Solver::new(&g, &p)?;
    let s: Solution = solver.solve(&cfg)?;
    let secs = start.elapsed().as_secs_f64();
    write_output(a.out.as_deref(), &s.to_json())?;
    eprintln!(
        "method={} N={} K={} proof={} sim={} time={:.2}s",
        s.method,
        s.num_uavs,
        s.num_tours,
        serde_json::to_value(s.proof())?.as_str().unwrap_or("?"),
        if s.sim.pass { "pass" } else { "FAIL" },
        secs
    );
    Ok(if s.proof() == Proof::TimeLimitedIncumbent {
        EXIT_TIME_LIMIT
    } else {
        0
    })
}

fn run_experiment(a: &ExperimentArgs) -> Result<u8, Failure> {
    let (g, base) = read_instance(&a.instance)?;
    let p = a.run.params(&base, None);
    let methods = if a.method.is_empty() {
        Method::ALL.to_vec()
    } else {
        a.method.clone()
    };
    let cfg = a.run.config(methods[0], a.trials)?;
    let cells = experiment(&g, &p, &a.latency, &methods, &cfg)?;
    for c in &cells {
        if let Some(e) = &c.error {
            log::warn!("{} at T={}: {e}", c.method, c.latency);
        }
    }
    write_output(a.out.as_deref(), &experiment_csv(&cells, a.timing))?;
    Ok(0)
}

fn run_plot_data(a: &PlotDataArgs) -> Result<u8, Failure> {
    let text = std::fs::read_to_string(&a.solution)
        .with_context(|| format!("cannot read {}", a.solution.display()))
        .map_err(io_failure)?;
    let s: Solution = serde_json::from_str(&text)
        .with_context(|| format!("malformed solution file {}", a.solution.display()))
        .map_err(io_failure)?;
    let data = plot_data(&s);
    write_output(a.out.as_deref(), &serde_json::to_string_pretty(&data)?)?;
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap exits with 2 on usage errors, which would read as "infeasible".
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Solve(a) => solve(a),
        Command::Experiment(a) => run_experiment(a),
        Command::PlotData(a) => run_plot_data(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
