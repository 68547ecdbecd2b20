//! Run configurations (TOML), one file per run.
//!
//! Every file carries a `command` tag naming the subcommand it drives. Data
//! profiles and region shapes are described declaratively so the file alone
//! reproduces a run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analytic::elliptic_forcing;
use crate::applications::graph::KnnGraphSpec;
use crate::applications::masks::{
    gaussian_smooth, indicator, make_box_mask, make_flower_mask, make_fractal_mask, make_star_mask, StarShape,
};
use crate::error::{Error, Result};
use crate::field::{Field, Grid};
use crate::schemes::{Scheme, DEFAULT_MAX_ITERS, DEFAULT_STATIONARY_TOL};
use crate::studies::{EllipticSetup, FreeBoundarySetup, SignumGordonSetup, TravelingWaveSetup};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "one")]
    pub dim: usize,
    pub n: usize,
    pub x_min: f64,
    pub x_max: f64,
}

fn one() -> usize {
    1
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.dim, self.n, self.x_min, self.x_max)
    }
}

/// A planar region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Shape {
    Box {
        x: (f64, f64),
        y: (f64, f64),
    },
    Star {
        center: [f64; 2],
        r0: f64,
        eps: f64,
        points: u32,
        #[serde(default)]
        phase: f64,
    },
    Flower {
        center: [f64; 2],
        r0: f64,
        petals: u32,
        eps: Option<f64>,
    },
    Snowflake {
        center: [f64; 2],
        radius: f64,
        depth: u32,
    },
}

impl Shape {
    pub fn mask(&self, grid: &Grid) -> Result<Vec<bool>> {
        match *self {
            Shape::Box { x, y } => make_box_mask(grid, x, y),
            Shape::Star { center, r0, eps, points, phase } => {
                make_star_mask(grid, &StarShape { center, r0, eps, points, phase })
            }
            Shape::Flower { center, r0, petals, eps } => make_flower_mask(grid, center, r0, petals, eps),
            Shape::Snowflake { center, radius, depth } => make_fractal_mask(grid, center, radius, depth),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianBump {
    pub amplitude: f64,
    #[serde(default)]
    pub center: [f64; 2],
    pub rate: f64,
}

impl GaussianBump {
    fn eval(&self, x: f64, y: f64) -> f64 {
        let (dx, dy) = (x - self.center[0], y - self.center[1]);
        self.amplitude * (-self.rate * (dx * dx + dy * dy)).exp()
    }
}

/// Initial data or forcing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Profile {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    /// `amplitude exp(-rate |x - center|^2)`.
    Gaussian(GaussianBump),
    Mixture {
        components: Vec<GaussianBump>,
    },
    /// `amplitude (1 - (r / width)^2)^2` inside `r < width`.
    Bump {
        amplitude: f64,
        #[serde(default)]
        center: [f64; 2],
        width: f64,
    },
    /// `(1 + x^2)^(-3/2)`.
    Elliptic,
    /// `amplitude` on a region, optionally blurred by a Gaussian of
    /// `smooth_cells` cells.
    Indicator {
        region: Shape,
        amplitude: f64,
        #[serde(default)]
        smooth_cells: f64,
        #[serde(default = "default_truncate")]
        truncate: f64,
    },
}

fn default_truncate() -> f64 {
    4.0
}

impl Profile {
    pub fn build(&self, grid: &Grid) -> Result<Field> {
        match self {
            Profile::Zero => Ok(Field::zeros(*grid)),
            Profile::Constant { value } => Field::constant(*grid, *value),
            Profile::Gaussian(b) => Field::from_fn(*grid, |x, y| b.eval(x, y)),
            Profile::Mixture { components } => {
                Field::from_fn(*grid, |x, y| components.iter().map(|b| b.eval(x, y)).sum())
            }
            Profile::Bump { amplitude, center, width } => {
                if !(*width > 0.0) {
                    return Err(Error::InvalidParameter(format!("bump width must be positive, got {width}")));
                }
                Field::from_fn(*grid, |x, y| {
                    let r2 = ((x - center[0]).powi(2) + (y - center[1]).powi(2)) / (width * width);
                    if r2 < 1.0 {
                        amplitude * (1.0 - r2).powi(2)
                    } else {
                        0.0
                    }
                })
            }
            Profile::Elliptic => Field::from_fn_1d(*grid, elliptic_forcing),
            Profile::Indicator { region, amplitude, smooth_cells, truncate } => {
                let raw = indicator(grid, &region.mask(grid)?, *amplitude)?;
                if *smooth_cells > 0.0 {
                    gaussian_smooth(&raw, *smooth_cells, *truncate, 1e-12 * amplitude.abs())
                } else {
                    Ok(raw)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveProblem {
    /// Time-dependent forced heat flow.
    Heat,
    /// Stationary problem solved by DR iteration.
    Stationary,
    /// Closed-form traveling wave with Dirichlet data at both ends.
    TravelingWave,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveData {
    pub sigma: f64,
    pub x0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub problem: SolveProblem,
    pub grid: GridConfig,
    #[serde(default = "imex")]
    pub scheme: Scheme,
    pub gamma: f64,
    #[serde(default)]
    pub t_end: f64,
    /// Explicit step; otherwise `cfl_fraction * h^2` for IMEX and
    /// `tau_over_h * h` for DR.
    pub tau: Option<f64>,
    pub cfl_fraction: Option<f64>,
    pub tau_over_h: Option<f64>,
    #[serde(default)]
    pub initial: Profile,
    #[serde(default)]
    pub forcing: Profile,
    #[serde(default)]
    pub sample_times: Vec<f64>,
    #[serde(default = "one")]
    pub trace_every: usize,
    #[serde(default)]
    pub stop_at_extinction: bool,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_iters")]
    pub max_iters: usize,
    pub traveling_wave: Option<WaveData>,
}

fn imex() -> Scheme {
    Scheme::Imex
}

fn default_tol() -> f64 {
    DEFAULT_STATIONARY_TOL
}

fn default_iters() -> usize {
    DEFAULT_MAX_ITERS
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyKind {
    TravelingWave,
    Elliptic,
    SignumGordon,
    Synthetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSetup {
    pub order: f64,
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub study: StudyKind,
    pub ns: Vec<usize>,
    #[serde(default)]
    pub traveling_wave: TravelingWaveSetup,
    #[serde(default)]
    pub elliptic: EllipticSetup,
    #[serde(default)]
    pub signum_gordon: SignumGordonSetup,
    pub synthetic: Option<SyntheticSetup>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub region: Shape,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SandpileConfig {
    pub grid: GridConfig,
    pub regions: Vec<RegionConfig>,
    #[serde(default = "unit")]
    pub gamma: f64,
    #[serde(default = "default_sandpile_tau")]
    pub tau_over_h: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_iters")]
    pub max_iters: usize,
    /// Runs the toppling simulation as a cross-check.
    #[serde(default)]
    pub topple: bool,
    pub eps_stop: Option<f64>,
    #[serde(default = "default_sweeps")]
    pub max_sweeps: usize,
}

fn unit() -> f64 {
    1.0
}

fn default_sandpile_tau() -> f64 {
    0.2
}

fn default_sweeps() -> usize {
    crate::applications::sandpile::DEFAULT_MAX_SWEEPS
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceNode {
    /// Node with the smallest first latent coordinate.
    Leftmost,
    Index(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    #[serde(default)]
    pub seed: u64,
    /// kNN construction; ignored when `graph_file` is given.
    pub knn: Option<KnnSection>,
    /// Edge list, relative to the config file.
    pub graph_file: Option<PathBuf>,
    pub source: SourceNode,
    pub gamma: f64,
    pub tau: f64,
    pub t_end: f64,
    #[serde(default)]
    pub sample_times: Vec<f64>,
    #[serde(default)]
    pub track: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnnSection {
    pub nodes: usize,
    pub ambient_dim: usize,
    pub k: usize,
    pub noise: f64,
}

impl GraphConfig {
    pub fn knn_spec(&self) -> KnnGraphSpec {
        let k = self.knn.unwrap_or(KnnSection {
            nodes: KnnGraphSpec::default().nodes,
            ambient_dim: KnnGraphSpec::default().ambient_dim,
            k: KnnGraphSpec::default().k,
            noise: KnnGraphSpec::default().noise,
        });
        KnnGraphSpec {
            nodes: k.nodes,
            ambient_dim: k.ambient_dim,
            k: k.k,
            noise: k.noise,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeBoundaryConfig {
    pub ns: Vec<usize>,
    #[serde(default)]
    pub setup: FreeBoundarySetup,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignumGordonConfig {
    pub grid: GridConfig,
    #[serde(default)]
    pub initial: Profile,
    #[serde(default)]
    pub velocity: Profile,
    pub t_end: f64,
    /// `tau` as a fraction of the wave bound `h / sqrt(dim)`.
    #[serde(default = "half")]
    pub cfl_fraction: f64,
    #[serde(default)]
    pub sample_times: Vec<f64>,
    #[serde(default = "one")]
    pub trace_every: usize,
}

fn half() -> f64 {
    0.5
}

/// A run configuration tagged by its subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    Solve(SolveConfig),
    Convergence(ConvergenceConfig),
    Sandpile(SandpileConfig),
    Graph(GraphConfig),
    Freeboundary(FreeBoundaryConfig),
    SignumGordon(SignumGordonConfig),
}

impl RunConfig {
    pub fn command(&self) -> &'static str {
        match self {
            RunConfig::Solve(_) => "solve",
            RunConfig::Convergence(_) => "convergence",
            RunConfig::Sandpile(_) => "sandpile",
            RunConfig::Graph(_) => "graph",
            RunConfig::Freeboundary(_) => "freeboundary",
            RunConfig::SignumGordon(_) => "signum-gordon",
        }
    }

    /// Seed for randomized constructions; `None` for deterministic runs.
    pub fn seed(&self) -> Option<u64> {
        match self {
            RunConfig::Graph(g) if g.graph_file.is_none() => Some(g.seed),
            _ => None,
        }
    }

    pub fn parse(text: &str, location: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::parse(location, e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_tagged_solve() {
        let cfg = RunConfig::parse(
            r#"
command = "solve"
problem = "heat"
gamma = 1.0
t_end = 0.1
[grid]
n = 64
x_min = -4.0
x_max = 4.0
[forcing]
type = "gaussian"
amplitude = 2.0
rate = 5.0
"#,
            "test",
        )
        .unwrap();
        match cfg {
            RunConfig::Solve(s) => {
                assert_eq!(s.scheme, Scheme::Imex);
                assert_eq!(s.grid.dim, 1);
                let f = s.forcing.build(&s.grid.build().unwrap()).unwrap();
                assert!((f.max_abs() - 2.0).abs() < 0.05);
            }
            other => panic!("wrong command {}", other.command()),
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = RunConfig::parse(
            "command = \"freeboundary\"\nns = [64]\nbogus = 1\n",
            "test",
        );
        assert!(matches!(err, Err(Error::Parse { .. })));
    }

    #[test]
    fn indicator_region_nested() {
        let p: Profile = toml::from_str(
            "type = \"indicator\"\namplitude = 3.0\nregion = { shape = \"box\", x = [0.25, 0.75], y = [0.25, 0.75] }\n",
        )
        .unwrap();
        let g = Grid::square(16, 0.0, 1.0).unwrap();
        let u = p.build(&g).unwrap();
        assert!((u.integral() - 0.75).abs() < 1e-12);
    }
}
