//! Experiment runner behind the `l1pde` binary.
//!
//! Each subcommand reads one config file, runs it, and writes CSV data, a
//! `report.json` with the derived numbers and a `manifest.json` listing every
//! output with its SHA-256. Wall-clock timings appear only in the manifest,
//! so all other outputs are bit-identical across repeated runs.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analytic::{
    exact_elliptic, free_boundary_a1, gaussian_level_radius, support_bound_elliptic, support_bound_parabolic,
    A1Estimate,
};
use crate::applications::graph::{knn_graph, run_graph_diffusion, GraphScenario};
use crate::applications::heat::{run_parabolic, HeatOptions, HeatRun};
use crate::applications::sandpile::{sandpile_solve, sandpile_topple, Region, SandpileProblem};
use crate::applications::signum_gordon::run_signum_gordon;
use crate::config::{
    ConvergenceConfig, FreeBoundaryConfig, GraphConfig, Profile, RunConfig, SandpileConfig, SignumGordonConfig,
    SolveConfig, SolveProblem, SourceNode, StudyKind,
};
use crate::diagnostics::{entropy_check, error_norm, stationary_inclusion_violation, EntropyReport};
use crate::error::{Error, Result};
use crate::field::{boundary_warning, support, Field, Grid, Norm};
use crate::operators::Graph;
use crate::schemes::{dr_solve_stationary, wave_cfl_bound, Scheme, SolverConfig, StationarySolution};
use crate::studies::{
    elliptic_study, free_boundary_study, imex_time_step, signum_gordon_study, synthetic_study,
    traveling_wave_study, TravelingWaveSetup,
};

/// Overrides the default output directory.
pub const OUT_ENV: &str = "L1PDE_OUT";
pub const DEFAULT_OUT: &str = "out";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Exit status for an error: 2 for invalid input, 3 for solver failure,
/// 4 for I/O.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidGrid(_)
        | Error::InvalidField(_)
        | Error::GridMismatch(_)
        | Error::Cfl { .. }
        | Error::InvalidParameter(_)
        | Error::InvalidGraph(_)
        | Error::Parse { .. } => EXIT_CONFIG,
        Error::NotConverged { .. } | Error::Quadrature { .. } | Error::NoSignChange { .. } | Error::ToppleCap { .. } => {
            EXIT_SOLVER
        }
        Error::Io { .. } => EXIT_IO,
    }
}

#[derive(Debug, Parser)]
#[command(name = "l1pde", version, about = "PDEs with an L1 subgradient term")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Heat flow, traveling wave or stationary problem.
    Solve(RunArgs),
    /// Refinement ladder with fitted convergence orders.
    Convergence(RunArgs),
    /// Divisible sandpile odometer, optionally checked against toppling.
    Sandpile(RunArgs),
    /// Diffusion on a weighted graph.
    Graph(RunArgs),
    /// Free-boundary coefficient ladder and quadrature value.
    Freeboundary(RunArgs),
    /// Signum-Gordon evolution.
    SignumGordon(RunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve(_) => "solve",
            Command::Convergence(_) => "convergence",
            Command::Sandpile(_) => "sandpile",
            Command::Graph(_) => "graph",
            Command::Freeboundary(_) => "freeboundary",
            Command::SignumGordon(_) => "signum-gordon",
        }
    }

    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Solve(a)
            | Command::Convergence(a)
            | Command::Sandpile(a)
            | Command::Graph(a)
            | Command::Freeboundary(a)
            | Command::SignumGordon(a) => a,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; defaults to $L1PDE_OUT, then `out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for ladders; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Suppress progress and warnings on stderr.
    #[arg(long)]
    pub quiet: bool,
}

impl RunArgs {
    pub fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_path: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub files: Vec<FileEntry>,
    /// Seconds per phase.
    pub timings: BTreeMap<String, f64>,
}

/// Output directory that records every file it writes.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    files: Vec<FileEntry>,
    timings: BTreeMap<String, f64>,
    quiet: bool,
    warnings: Vec<String>,
    /// Warn when a written field reaches the domain boundary.
    pub boundary_checks: bool,
}

impl Outputs {
    pub fn create(dir: &Path, quiet: bool) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            timings: BTreeMap::new(),
            quiet,
            warnings: Vec::new(),
            boundary_checks: true,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.files.push(FileEntry {
            path: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| Error::InvalidParameter(format!("cannot serialize {name}: {e}")))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn write_field(&mut self, name: &str, u: &Field) -> Result<()> {
        if self.boundary_checks {
            if let Some(w) = boundary_warning(u) {
                self.warn(format!("{name}: {w}"));
            }
        }
        self.write(name, u.to_csv_string().as_bytes())
    }

    pub fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f()?;
        self.timings.insert(phase.to_string(), start.elapsed().as_secs_f64());
        Ok(out)
    }

    pub fn warn(&mut self, message: String) {
        if !self.quiet {
            eprintln!("warning: {message}");
        }
        self.warnings.push(message);
    }

    pub fn progress(&self, message: &str) {
        if !self.quiet {
            eprintln!("{message}");
        }
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    fn finish(self, command: &str, config_path: &Path, config: &RunConfig) -> Result<RunManifest> {
        let manifest = RunManifest {
            tool: "l1pde",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config_path: config_path.display().to_string(),
            config: serde_json::to_value(config)
                .map_err(|e| Error::InvalidParameter(format!("cannot echo config: {e}")))?,
            seed: config.seed(),
            files: self.files,
            timings: self.timings,
        };
        let path = self.dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| Error::InvalidParameter(format!("cannot serialize manifest: {e}")))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(manifest)
    }
}

/// Parses `args` (including the program name) and runs; returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let quiet = cli.command.args().quiet;
    match run(&cli.command) {
        Ok(_) => EXIT_OK,
        Err(e) => {
            if !quiet {
                eprintln!("error: {e}");
            }
            exit_code(&e)
        }
    }
}

/// Runs one subcommand and writes its outputs and manifest.
pub fn run(command: &Command) -> Result<RunManifest> {
    let args = command.args();
    let config = RunConfig::load(&args.config).map_err(|e| match e {
        Error::Io { path, source } => Error::Parse {
            location: path.display().to_string(),
            message: format!("cannot read config: {source}"),
        },
        other => other,
    })?;
    if config.command() != command.name() {
        return Err(Error::parse(
            args.config.display().to_string(),
            format!("config is for `{}`, not `{}`", config.command(), command.name()),
        ));
    }
    let base = args.config.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut out = Outputs::create(&args.out_dir(), args.quiet)?;
    let body = |out: &mut Outputs| -> Result<()> {
        match &config {
            RunConfig::Solve(c) => cmd_solve(c, out),
            RunConfig::Convergence(c) => cmd_convergence(c, out),
            RunConfig::Sandpile(c) => cmd_sandpile(c, out),
            RunConfig::Graph(c) => cmd_graph(c, &base, out),
            RunConfig::Freeboundary(c) => cmd_freeboundary(c, out),
            RunConfig::SignumGordon(c) => cmd_signum_gordon(c, out),
        }
    };
    match args.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidParameter(format!("cannot start {n} threads: {e}")))?;
            pool.install(|| body(&mut out))?
        }
        None => body(&mut out)?,
    }
    out.finish(command.name(), &args.config, &config)
}

fn snapshot_name(k: usize) -> String {
    format!("snapshot_{k:03}.csv")
}

#[derive(Debug, Clone, Serialize)]
pub struct SnapshotEntry {
    pub file: String,
    pub time: f64,
}

/// Support-measure bound with weights `(alpha, 1 - alpha)`.
#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub alpha: f64,
    pub bound: f64,
    pub measured: f64,
    pub holds: bool,
}

pub const BOUND_WEIGHTS: [f64; 4] = [1.0, 0.75, 0.5, 0.25];

#[derive(Debug, Clone, Serialize)]
pub struct ParabolicReport {
    pub problem: SolveProblem,
    pub scheme: Scheme,
    pub tau: f64,
    pub steps: usize,
    pub final_time: f64,
    pub extinction_time: Option<f64>,
    pub final_support_measure: f64,
    pub space_time_support: f64,
    /// `[L1, L2, Linf]`, only with a closed form.
    pub max_errors: Option<[f64; 3]>,
    /// Absent for runs with boundary inflow.
    pub support_bounds: Option<Vec<BoundCheck>>,
    pub entropy: EntropyReport,
    pub snapshots: Vec<SnapshotEntry>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StationaryReport {
    pub tau: f64,
    pub iterations: usize,
    pub residual: f64,
    pub support_measure: f64,
    /// Outermost nonzero points of a 1D solution.
    pub support_ends: Option<(f64, f64)>,
    pub support_bounds: Vec<BoundCheck>,
    pub inclusion_violation: f64,
    /// `[L1, L2, Linf]` against the closed form for the elliptic forcing.
    pub errors: Option<[f64; 3]>,
    pub warnings: Vec<String>,
}

pub enum SolveOutcome {
    Parabolic { run: HeatRun, report: ParabolicReport },
    Stationary { solution: StationarySolution, report: StationaryReport },
}

fn solve_tau(c: &SolveConfig, grid: &Grid) -> f64 {
    if let Some(t) = c.tau {
        return t;
    }
    let h = grid.spacing();
    match c.scheme {
        Scheme::Imex => imex_time_step(grid, c.cfl_fraction.unwrap_or(crate::schemes::IMEX_CFL), c.t_end),
        Scheme::Dr => {
            let step = c.tau_over_h.unwrap_or(1.0) * h;
            if c.t_end > 0.0 {
                c.t_end / (c.t_end / step - 1e-9).ceil()
            } else {
                step
            }
        }
    }
}

fn bounds(measured: f64, bound: impl Fn(f64, f64) -> Result<f64>) -> Result<Vec<BoundCheck>> {
    BOUND_WEIGHTS
        .iter()
        .map(|&alpha| {
            let b = bound(alpha, 1.0 - alpha)?;
            Ok(BoundCheck {
                alpha,
                bound: b,
                measured,
                holds: measured <= b * (1.0 + 1e-9),
            })
        })
        .collect()
}

/// Runs a `solve` config without writing anything.
pub fn run_solve(c: &SolveConfig) -> Result<SolveOutcome> {
    let grid = c.grid.build()?;
    match c.problem {
        SolveProblem::Stationary => run_stationary(c, &grid),
        SolveProblem::Heat | SolveProblem::TravelingWave => run_time_dependent(c, &grid),
    }
}

fn run_time_dependent(c: &SolveConfig, grid: &Grid) -> Result<SolveOutcome> {
    let tau = solve_tau(c, grid);
    let cfg = SolverConfig::new(c.scheme, tau, c.gamma, c.t_end);
    cfg.validate(grid)?;
    let (f, g, mut opts) = match c.problem {
        SolveProblem::TravelingWave => {
            let w = c.traveling_wave.ok_or_else(|| {
                Error::InvalidParameter("traveling-wave problem needs a [traveling_wave] table".into())
            })?;
            if grid.dim() != 1 || c.scheme != Scheme::Imex {
                return Err(Error::InvalidParameter("traveling-wave runs are 1D IMEX".into()));
            }
            let setup = TravelingWaveSetup {
                gamma: c.gamma,
                sigma: w.sigma,
                x_min: grid.x_min(),
                x_max: grid.x_max(),
                x0: w.x0,
                t_end: c.t_end,
                cfl_fraction: crate::schemes::IMEX_CFL,
            };
            let opts = setup.options(grid, c.sample_times.clone())?;
            (Field::zeros(*grid), setup.initial(grid)?, opts)
        }
        _ => (
            c.forcing.build(grid)?,
            c.initial.build(grid)?,
            HeatOptions {
                sample_times: c.sample_times.clone(),
                ..HeatOptions::new()
            },
        ),
    };
    // the energy check needs every step; the written trace is thinned
    opts.trace_every = 1;
    opts.stop_at_extinction = c.stop_at_extinction;
    let run = run_parabolic(&f, &g, &cfg, &opts)?;
    let entropy = entropy_check(&run.trace, c.gamma, tau)?;
    let support_bounds = if c.problem == SolveProblem::Heat && c.gamma > 0.0 {
        Some(bounds(run.space_time_support, |a, b| {
            support_bound_parabolic(&g, &f, c.gamma, a, b, run.final_time)
        })?)
    } else {
        None
    };
    let mut warnings = Vec::new();
    if c.problem != SolveProblem::TravelingWave {
        let last = std::iter::once((run.final_time, &run.final_field));
        for (t, u) in run.snapshots.iter().map(|(t, u)| (*t, u)).chain(last) {
            if let Some(w) = boundary_warning(u) {
                warnings.push(format!("t={t}: {w}"));
            }
        }
    }
    let report = ParabolicReport {
        problem: c.problem,
        scheme: c.scheme,
        tau,
        steps: run.steps,
        final_time: run.final_time,
        extinction_time: run.extinction_time,
        final_support_measure: support(&run.final_field).measure(),
        space_time_support: run.space_time_support,
        max_errors: run.max_errors,
        support_bounds,
        entropy,
        snapshots: run
            .snapshots
            .iter()
            .enumerate()
            .map(|(k, (t, _))| SnapshotEntry { file: snapshot_name(k), time: *t })
            .collect(),
        warnings,
    };
    Ok(SolveOutcome::Parabolic { run, report })
}

fn run_stationary(c: &SolveConfig, grid: &Grid) -> Result<SolveOutcome> {
    let tau = c.tau.unwrap_or(c.tau_over_h.unwrap_or(1.0) * grid.spacing());
    let cfg = SolverConfig::dr(tau, c.gamma, 1.0).with_tol(c.tol).with_max_iters(c.max_iters);
    let f = c.forcing.build(grid)?;
    let solution = dr_solve_stationary(&f, &cfg, &c.initial.build(grid)?)?;
    let u = &solution.u;
    let s = support(u);
    let support_ends = (grid.dim() == 1)
        .then(|| {
            let v = u.values();
            Some((grid.coord(v.iter().position(|&x| x != 0.0)?), grid.coord(v.iter().rposition(|&x| x != 0.0)?)))
        })
        .flatten();
    let support_bounds = if c.gamma > 0.0 {
        bounds(s.measure(), |a, b| support_bound_elliptic(&f, c.gamma, a, b))?
    } else {
        Vec::new()
    };
    let errors = (c.forcing == Profile::Elliptic && grid.dim() == 1 && c.gamma > 0.0 && c.gamma < 1.0).then(|| {
        Norm::ALL.map(|q| error_norm(u, |x, _| exact_elliptic(x, c.gamma).unwrap_or(f64::NAN), q))
    });
    let report = StationaryReport {
        tau,
        iterations: solution.iterations,
        residual: solution.residual,
        support_measure: s.measure(),
        support_ends,
        support_bounds,
        inclusion_violation: stationary_inclusion_violation(u, &f, c.gamma)?,
        errors,
        warnings: boundary_warning(u).into_iter().collect(),
    };
    Ok(SolveOutcome::Stationary { solution, report })
}

fn cmd_solve(c: &SolveConfig, out: &mut Outputs) -> Result<()> {
    // traveling waves touch the boundary by construction
    out.boundary_checks = c.problem != SolveProblem::TravelingWave;
    let outcome = out.time("solve", || run_solve(c))?;
    match outcome {
        SolveOutcome::Parabolic { run, report } => {
            for (k, (_, u)) in run.snapshots.iter().enumerate() {
                out.write_field(&snapshot_name(k), u)?;
            }
            out.write_field("final.csv", &run.final_field)?;
            out.write("trace.csv", run.trace.every(c.trace_every).to_csv().as_bytes())?;
            if !run.boundary.is_empty() {
                let mut s = String::from("time,left,right\n");
                for (t, l, r) in &run.boundary {
                    s.push_str(&format!("{t:.16e},{l:.16e},{r:.16e}\n"));
                }
                out.write("boundary.csv", s.as_bytes())?;
            }
            out.write_json("report.json", &report)?;
        }
        SolveOutcome::Stationary { solution, report } => {
            out.write_field("solution.csv", &solution.u)?;
            out.write_json("report.json", &report)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct ConvergenceReport<T: Serialize> {
    study: StudyKind,
    result: T,
}

fn cmd_convergence(c: &ConvergenceConfig, out: &mut Outputs) -> Result<()> {
    if c.ns.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "a convergence ladder needs at least 4 resolutions, got {}",
            c.ns.len()
        )));
    }
    let ns = &c.ns;
    match c.study {
        StudyKind::TravelingWave => {
            let s = out.time("ladder", || traveling_wave_study(&c.traveling_wave, ns))?;
            out.write("convergence.csv", s.to_csv().as_bytes())?;
            out.write_json("report.json", &ConvergenceReport { study: c.study, result: s })
        }
        StudyKind::Synthetic => {
            let p = c.synthetic.ok_or_else(|| {
                Error::InvalidParameter("synthetic study needs a [synthetic] table".into())
            })?;
            let s = synthetic_study(ns, p.order, p.constant)?;
            out.write("convergence.csv", s.to_csv().as_bytes())?;
            out.write_json("report.json", &ConvergenceReport { study: c.study, result: s })
        }
        StudyKind::Elliptic => {
            let s = out.time("ladder", || elliptic_study(&c.elliptic, ns))?;
            let mut csv = String::from("n,h,e1,e2,einf,left,right,iterations\n");
            for r in &s.rows {
                csv.push_str(&format!(
                    "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                    r.n, r.h, r.errors[0], r.errors[1], r.errors[2], r.support_ends.0, r.support_ends.1, r.iterations
                ));
            }
            out.write("convergence.csv", csv.as_bytes())?;
            out.write_json("report.json", &ConvergenceReport { study: c.study, result: s })
        }
        StudyKind::SignumGordon => {
            let s = out.time("ladder", || signum_gordon_study(&c.signum_gordon, ns))?;
            let mut csv = String::from("n,h,e2\n");
            let len = c.signum_gordon.x_max - c.signum_gordon.x_min;
            for (n, e) in s.ns.iter().zip(&s.errors) {
                csv.push_str(&format!("{},{:.16e},{:.16e}\n", n, len / *n as f64, e));
            }
            out.write("convergence.csv", csv.as_bytes())?;
            out.write_json("report.json", &ConvergenceReport { study: c.study, result: s })
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct ToppleReport {
    sweeps: usize,
    mass_drift: f64,
    occupied_measure: f64,
    jaccard: f64,
}

#[derive(Debug, Clone, Serialize)]
struct SandpileReport {
    iterations: usize,
    support_measure: f64,
    injected_mass: f64,
    mass_relative_error: f64,
    min_value: f64,
    topple: Option<ToppleReport>,
}

pub fn sandpile_problem(c: &SandpileConfig) -> Result<SandpileProblem> {
    let grid = c.grid.build()?;
    let regions = c
        .regions
        .iter()
        .map(|r| {
            Ok(Region {
                mask: r.region.mask(&grid)?,
                alpha: r.alpha,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    SandpileProblem::new(grid, regions)
}

fn cmd_sandpile(c: &SandpileConfig, out: &mut Outputs) -> Result<()> {
    let problem = sandpile_problem(c)?;
    let grid = *problem.grid();
    let cfg = SolverConfig::dr(c.tau_over_h * grid.spacing(), c.gamma, 1.0)
        .with_tol(c.tol)
        .with_max_iters(c.max_iters);
    out.progress("sandpile: stationary solve");
    let sol = out.time("dr_solve", || sandpile_solve(&problem, &cfg))?;
    let topple = if c.topple {
        out.progress("sandpile: toppling");
        let t = out.time("topple", || sandpile_topple(&problem, c.eps_stop, c.max_sweeps))?;
        out.write_field("occupied.csv", &mask_field(&grid, t.occupied.mask())?)?;
        Some(ToppleReport {
            sweeps: t.sweeps,
            mass_drift: t.mass_drift,
            occupied_measure: t.occupied.measure(),
            jaccard: sol.support.jaccard(&t.occupied),
        })
    } else {
        None
    };
    out.write_field("forcing.csv", &problem.forcing())?;
    out.write_field("odometer.csv", &sol.u)?;
    out.write_field("support.csv", &mask_field(&grid, sol.support.mask())?)?;
    out.write_json(
        "report.json",
        &SandpileReport {
            iterations: sol.iterations,
            support_measure: sol.mass.support_measure,
            injected_mass: sol.mass.injected_mass,
            mass_relative_error: sol.mass.relative_error,
            min_value: sol.min_value,
            topple,
        },
    )
}

fn mask_field(grid: &Grid, mask: &[bool]) -> Result<Field> {
    Field::new(*grid, mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect())
}

#[derive(Debug, Clone, Serialize)]
struct GraphReport {
    nodes: usize,
    edges: usize,
    bridges: usize,
    source: usize,
    max_support: usize,
    /// `gamma^-1 ||g||_1` for the unit delta; absent for `gamma = 0`.
    support_bound: Option<f64>,
    extinction_time: Option<f64>,
    steps: usize,
    snapshots: Vec<SnapshotEntry>,
}

/// Graph, source node and latent coordinates (when generated) for a config.
pub fn graph_setup(c: &GraphConfig, base: &Path) -> Result<(Graph, usize, Option<Vec<[f64; 2]>>, usize)> {
    let (graph, latent, leftmost, bridges) = match &c.graph_file {
        Some(p) => {
            let path = base.join(p);
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            (Graph::parse(&text)?, None, None, 0)
        }
        None => {
            let k = knn_graph(&c.knn_spec())?;
            let left = k.leftmost();
            (k.graph, Some(k.latent), Some(left), k.bridges)
        }
    };
    let source = match c.source {
        SourceNode::Index(i) => i,
        SourceNode::Leftmost => leftmost.ok_or_else(|| {
            Error::InvalidParameter("source = \"leftmost\" needs a generated kNN graph".into())
        })?,
    };
    Ok((graph, source, latent, bridges))
}

fn cmd_graph(c: &GraphConfig, base: &Path, out: &mut Outputs) -> Result<()> {
    let (graph, source, latent, bridges) = out.time("build", || graph_setup(c, base))?;
    let sc = GraphScenario {
        graph,
        source,
        gamma: c.gamma,
        tau: c.tau,
        t_end: c.t_end,
        track: if c.track.is_empty() { vec![source] } else { c.track.clone() },
    };
    let run = out.time("diffuse", || run_graph_diffusion(&sc, &c.sample_times))?;
    out.write("graph.txt", sc.graph.to_text().as_bytes())?;
    if let Some(latent) = latent {
        let mut s = String::from("node,x,y\n");
        for (i, p) in latent.iter().enumerate() {
            s.push_str(&format!("{i},{:.16e},{:.16e}\n", p[0], p[1]));
        }
        out.write("latent.csv", s.as_bytes())?;
    }
    let mut snaps = Vec::new();
    for (k, (t, u)) in run.snapshots.iter().enumerate() {
        let mut s = String::from("node,value\n");
        for (i, v) in u.iter().enumerate() {
            s.push_str(&format!("{i},{v:.16e}\n"));
        }
        let name = snapshot_name(k);
        out.write(&name, s.as_bytes())?;
        snaps.push(SnapshotEntry { file: name, time: *t });
    }
    out.write("trace.csv", run.trace.to_csv().as_bytes())?;
    out.write("trajectories.csv", run.trajectories.to_csv().as_bytes())?;
    out.write_json(
        "report.json",
        &GraphReport {
            nodes: sc.graph.node_count(),
            edges: sc.graph.edge_count(),
            bridges,
            source,
            max_support: run.max_support,
            support_bound: (c.gamma > 0.0).then(|| 1.0 / c.gamma),
            extinction_time: run.extinction_time,
            steps: run.steps,
            snapshots: snaps,
        },
    )
}

#[derive(Debug, Clone, Serialize)]
struct FreeBoundaryReport {
    rows: Vec<crate::studies::FreeBoundaryRow>,
    quadrature: A1Estimate,
    /// Radius of the initial support, where `f` equals `gamma`.
    level_radius: Option<f64>,
}

fn cmd_freeboundary(c: &FreeBoundaryConfig, out: &mut Outputs) -> Result<()> {
    let s = c.setup;
    let quadrature = out.time("quadrature", free_boundary_a1)?;
    let rows = out.time("ladder", || free_boundary_study(&s, &c.ns))?;
    let mut csv = String::from("n,a0,a1,beta,a1_left,a1_quadrature\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.n, r.a0, r.a1, r.beta, r.a1_left, quadrature.a1
        ));
    }
    out.write("freeboundary.csv", csv.as_bytes())?;
    out.write_json(
        "report.json",
        &FreeBoundaryReport {
            rows,
            quadrature,
            level_radius: gaussian_level_radius(s.amplitude, s.rate, s.gamma),
        },
    )
}

#[derive(Debug, Clone, Serialize)]
struct SignumGordonReport {
    tau: f64,
    steps: usize,
    final_support_measure: f64,
    snapshots: Vec<SnapshotEntry>,
}

fn cmd_signum_gordon(c: &SignumGordonConfig, out: &mut Outputs) -> Result<()> {
    let grid = c.grid.build()?;
    let g1 = c.initial.build(&grid)?;
    let g2 = c.velocity.build(&grid)?;
    if !(c.t_end > 0.0) {
        return Err(Error::InvalidParameter("t_end must be positive".into()));
    }
    let bound = c.cfl_fraction * wave_cfl_bound(&grid);
    let tau = c.t_end / (c.t_end / bound - 1e-9).ceil();
    let run = out.time("evolve", || run_signum_gordon(&g1, &g2, tau, c.t_end, &c.sample_times, c.trace_every))?;
    for (k, (_, u)) in run.snapshots.iter().enumerate() {
        out.write_field(&snapshot_name(k), u)?;
    }
    out.write_field("final.csv", &run.final_field)?;
    out.write("trace.csv", run.trace.to_csv().as_bytes())?;
    out.write_json(
        "report.json",
        &SignumGordonReport {
            tau,
            steps: run.steps,
            final_support_measure: support(&run.final_field).measure(),
            snapshots: run
                .snapshots
                .iter()
                .enumerate()
                .map(|(k, (t, _))| SnapshotEntry { file: snapshot_name(k), time: *t })
                .collect(),
        },
    )
}
