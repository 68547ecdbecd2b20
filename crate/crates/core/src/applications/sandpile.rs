//! Divisible sandpile: the odometer as a stationary L1 problem, and a
//! direct toppling simulation to check it against.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{support, Field, Grid, SupportSet};
use crate::schemes::{dr_solve_stationary, SolverConfig};

use super::masks::make_box_mask;

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub mask: Vec<bool>,
    pub alpha: f64,
}

/// Forcing `f = sum_j alpha_j chi_{S_j}` on a 2D grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SandpileProblem {
    grid: Grid,
    regions: Vec<Region>,
}

impl SandpileProblem {
    pub fn new(grid: Grid, regions: Vec<Region>) -> Result<Self> {
        if grid.dim() != 2 {
            return Err(Error::InvalidParameter("sandpile needs a 2D grid".into()));
        }
        for (k, r) in regions.iter().enumerate() {
            if r.mask.len() != grid.len() {
                return Err(Error::InvalidParameter(format!("region {k} does not match the grid")));
            }
            if !(r.alpha >= 0.0 && r.alpha.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "region {k} has negative coefficient {}",
                    r.alpha
                )));
            }
        }
        Ok(Self { grid, regions })
    }

    /// Two overlapping unit squares with unit coefficients on `[-1, 1)^2`.
    pub fn two_squares(n: usize) -> Result<Self> {
        let grid = Grid::square(n, -1.0, 1.0)?;
        let a = make_box_mask(&grid, (-0.75, 0.25), (-0.75, 0.25))?;
        let b = make_box_mask(&grid, (-0.25, 0.75), (-0.25, 0.75))?;
        Self::new(
            grid,
            vec![Region { mask: a, alpha: 1.0 }, Region { mask: b, alpha: 1.0 }],
        )
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn forcing(&self) -> Field {
        let mut v = vec![0.0; self.grid.len()];
        for r in &self.regions {
            for (x, &m) in v.iter_mut().zip(&r.mask) {
                if m {
                    *x += r.alpha;
                }
            }
        }
        Field::new(self.grid, v).expect("finite coefficients")
    }

    /// `sum_j alpha_j |S_j|` on the grid.
    pub fn total_mass(&self) -> f64 {
        self.regions
            .iter()
            .map(|r| r.alpha * r.mask.iter().filter(|&&b| b).count() as f64)
            .sum::<f64>()
            * self.grid.cell_measure()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MassIdentity {
    pub support_measure: f64,
    pub injected_mass: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone)]
pub struct SandpileSolution {
    pub u: Field,
    pub support: SupportSet,
    pub iterations: usize,
    pub mass: MassIdentity,
    pub min_value: f64,
}

/// Stationary solve of `Lap u = p(u) - f` (threshold `gamma`, normally 1).
pub fn sandpile_solve(p: &SandpileProblem, cfg: &SolverConfig) -> Result<SandpileSolution> {
    let f = p.forcing();
    let sol = dr_solve_stationary(&f, cfg, &Field::zeros(p.grid))?;
    let s = support(&sol.u);
    let injected = p.total_mass();
    let measure = s.measure();
    let min_value = sol.u.values().iter().copied().fold(f64::INFINITY, f64::min);
    Ok(SandpileSolution {
        support: s,
        iterations: sol.iterations,
        mass: MassIdentity {
            support_measure: measure,
            injected_mass: injected,
            relative_error: if injected > 0.0 {
                (measure - injected).abs() / injected
            } else {
                measure
            },
        },
        min_value,
        u: sol.u,
    })
}

/// Mass above this level counts as a filled cell.
pub const OCCUPIED_LEVEL: f64 = 1.0 - 1e-6;
pub const DEFAULT_MAX_SWEEPS: usize = 10_000_000;

/// Sequential toppling of cell masses (capacity 1) on a periodic grid. Each
/// sweep visits the rows that can hold excess mass, in storage order, and
/// sends a quarter of every excess to each neighbor in place.
#[derive(Debug, Clone)]
pub struct Toppler {
    n: usize,
    mass: Vec<f64>,
    rows: (usize, usize),
    sweeps: usize,
}

impl Toppler {
    /// Initial mass per cell is the forcing value (density in cell units).
    pub fn new(p: &SandpileProblem) -> Self {
        let n = p.grid.n();
        Self {
            n,
            mass: p.forcing().into_values(),
            rows: (0, n - 1),
            sweeps: 0,
        }
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// One sweep; returns the largest excess found.
    pub fn sweep(&mut self) -> f64 {
        let n = self.n;
        let (lo, hi) = self.rows;
        let mut max_excess = 0.0f64;
        let (mut new_lo, mut new_hi) = (usize::MAX, 0usize);
        for i in lo..=hi {
            let up = if i == 0 { n - 1 } else { i - 1 };
            let down = if i == n - 1 { 0 } else { i + 1 };
            for j in 0..n {
                let k = i * n + j;
                let e = self.mass[k] - 1.0;
                if e > 0.0 {
                    max_excess = max_excess.max(e);
                    new_lo = new_lo.min(i);
                    new_hi = new_hi.max(i);
                    self.mass[k] = 1.0;
                    let q = 0.25 * e;
                    let left = if j == 0 { n - 1 } else { j - 1 };
                    let right = if j == n - 1 { 0 } else { j + 1 };
                    self.mass[up * n + j] += q;
                    self.mass[down * n + j] += q;
                    self.mass[i * n + left] += q;
                    self.mass[i * n + right] += q;
                }
            }
        }
        self.rows = if new_lo == usize::MAX {
            (0, 0)
        } else if new_lo == 0 || new_hi == n - 1 {
            (0, n - 1)
        } else {
            (new_lo - 1, new_hi + 1)
        };
        self.sweeps += 1;
        max_excess
    }
}

#[derive(Debug, Clone)]
pub struct ToppleResult {
    pub occupied: SupportSet,
    pub mass: Field,
    pub sweeps: usize,
    /// `|final total - initial total| / initial total`.
    pub mass_drift: f64,
}

/// Topples until the largest excess is at most `eps_stop` (default
/// `1e-10` times the total mass in cell units).
pub fn sandpile_topple(p: &SandpileProblem, eps_stop: Option<f64>, max_sweeps: usize) -> Result<ToppleResult> {
    let mut t = Toppler::new(p);
    let initial = t.total();
    let eps = eps_stop.unwrap_or(1e-10 * initial);
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps_stop must be positive, got {eps}")));
    }
    let mut excess = f64::INFINITY;
    while t.sweeps() < max_sweeps {
        excess = t.sweep();
        if excess <= eps {
            let grid = p.grid;
            let drift = if initial > 0.0 { (t.total() - initial).abs() / initial } else { 0.0 };
            let occupied = SupportSet::from_mask(
                t.mass.iter().map(|&m| m > OCCUPIED_LEVEL).collect(),
                grid.cell_measure(),
            );
            return Ok(ToppleResult {
                occupied,
                sweeps: t.sweeps(),
                mass: Field::new(grid, t.mass)?,
                mass_drift: drift,
            });
        }
    }
    Err(Error::ToppleCap {
        sweeps: t.sweeps(),
        excess,
    })
}
