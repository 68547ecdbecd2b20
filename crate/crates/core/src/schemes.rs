//! Time steppers and stationary solvers.
//!
//! Every scheme ends a step with a soft threshold, so supports are defined by
//! exact zeros. The slice-level steppers ([`ImexStepper`], [`DrSolver`],
//! [`LeapfrogStepper`], [`GraphStepper`]) reuse their buffers and are what the
//! applications drive; the `Field`-level functions are thin wrappers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, Grid};
use crate::operators::{check_threshold, laplacian_into, shrink_scalar, Graph, Resolvent};

/// Stability factor of the explicit heat step: `tau <= IMEX_CFL * h^2`.
pub const IMEX_CFL: f64 = 0.25;
pub const DEFAULT_STATIONARY_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITERS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Imex,
    Dr,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tau: f64,
    pub gamma: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    #[serde(default = "default_tol")]
    pub stationary_tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
}

fn default_tol() -> f64 {
    DEFAULT_STATIONARY_TOL
}

fn default_max_iters() -> usize {
    DEFAULT_MAX_ITERS
}

impl SolverConfig {
    pub fn new(scheme: Scheme, tau: f64, gamma: f64, t_end: f64) -> Self {
        Self {
            tau,
            gamma,
            t_end,
            scheme,
            stationary_tol: DEFAULT_STATIONARY_TOL,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }

    pub fn imex(tau: f64, gamma: f64, t_end: f64) -> Self {
        Self::new(Scheme::Imex, tau, gamma, t_end)
    }

    pub fn dr(tau: f64, gamma: f64, t_end: f64) -> Self {
        Self::new(Scheme::Dr, tau, gamma, t_end)
    }

    /// Stationary DR solve with the default step `tau = h`.
    pub fn stationary(grid: &Grid, gamma: f64) -> Self {
        Self::new(Scheme::Dr, grid.spacing(), gamma, 1.0)
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.stationary_tol = tol;
        self
    }

    pub fn with_max_iters(mut self, iters: usize) -> Self {
        self.max_iters = iters;
        self
    }

    /// Shrink threshold `tau * gamma`.
    pub fn threshold(&self) -> f64 {
        self.tau * self.gamma
    }

    /// Number of steps needed to reach `t_end`.
    pub fn steps(&self) -> usize {
        ((self.t_end / self.tau) - 1e-9).ceil().max(0.0) as usize
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be nonnegative, got {}",
                self.gamma
            )));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "t_end must be positive, got {}",
                self.t_end
            )));
        }
        if !(self.stationary_tol > 0.0) {
            return Err(Error::InvalidParameter("stationary_tol must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be positive".into()));
        }
        if self.scheme == Scheme::Imex {
            check_imex_cfl(grid, self.tau)?;
        }
        Ok(())
    }
}

pub fn imex_cfl_bound(grid: &Grid) -> f64 {
    IMEX_CFL * grid.spacing().powi(2)
}

fn check_imex_cfl(grid: &Grid, tau: f64) -> Result<()> {
    let bound = imex_cfl_bound(grid);
    if tau > bound * (1.0 + 1e-12) {
        return Err(Error::Cfl {
            tau,
            bound,
            rule: "tau <= h^2/4",
        });
    }
    Ok(())
}

/// Boundary treatment for 1D explicit steps. `Dirichlet` supplies ghost
/// values at `x_min - h` and `x_max`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Boundary1d {
    #[default]
    Periodic,
    Dirichlet { left: f64, right: f64 },
}

/// Reusable explicit-diffusion, implicit-L1 stepper.
#[derive(Debug, Clone)]
pub struct ImexStepper {
    grid: Grid,
    tau: f64,
    threshold: f64,
    forcing: Option<Vec<f64>>,
    lap: Vec<f64>,
}

impl ImexStepper {
    pub fn new(grid: &Grid, cfg: &SolverConfig, f: Option<&Field>) -> Result<Self> {
        let mut cfg = *cfg;
        cfg.scheme = Scheme::Imex;
        cfg.validate(grid)?;
        if let Some(f) = f {
            grid.ensure_same(f.grid())?;
        }
        Ok(Self {
            grid: *grid,
            tau: cfg.tau,
            threshold: cfg.threshold(),
            forcing: f
                .filter(|f| !f.is_zero())
                .map(|f| f.values().iter().map(|v| cfg.tau * v).collect()),
            lap: vec![0.0; grid.len()],
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Advances `u` one step in place.
    pub fn step(&mut self, u: &mut [f64], boundary: Boundary1d) -> Result<()> {
        laplacian_into(&self.grid, u, &mut self.lap);
        if let Boundary1d::Dirichlet { left, right } = boundary {
            if self.grid.dim() != 1 {
                return Err(Error::InvalidParameter(
                    "Dirichlet ghost values are only defined in 1D".into(),
                ));
            }
            let n = self.grid.n();
            let inv_h2 = 1.0 / self.grid.spacing().powi(2);
            self.lap[0] = (left - 2.0 * u[0] + u[1]) * inv_h2;
            self.lap[n - 1] = (u[n - 2] - 2.0 * u[n - 1] + right) * inv_h2;
        }
        let tau = self.tau;
        let thr = self.threshold;
        match &self.forcing {
            Some(tf) => {
                for ((v, l), s) in u.iter_mut().zip(&self.lap).zip(tf) {
                    *v = shrink_scalar(*v + tau * l + s, thr);
                }
            }
            None => {
                for (v, l) in u.iter_mut().zip(&self.lap) {
                    *v = shrink_scalar(*v + tau * l, thr);
                }
            }
        }
        Ok(())
    }
}

/// One proximal-gradient step `shrink(u + tau Lap u + tau f, tau gamma)`.
pub fn imex_step(u: &Field, f: &Field, cfg: &SolverConfig) -> Result<Field> {
    u.grid().ensure_same(f.grid())?;
    let mut stepper = ImexStepper::new(u.grid(), cfg, Some(f))?;
    let mut values = u.values().to_vec();
    stepper.step(&mut values, Boundary1d::Periodic)?;
    Field::new(*u.grid(), values)
}

/// Douglas-Rachford iterate pair: `u` after the shrink and the auxiliary `u_tilde`.
#[derive(Debug, Clone, PartialEq)]
pub struct DrState {
    u: Field,
    u_tilde: Field,
}

impl DrState {
    pub fn new(u: Field, u_tilde: Field) -> Result<Self> {
        u.grid().ensure_same(u_tilde.grid())?;
        Ok(Self { u, u_tilde })
    }

    pub fn zero(grid: Grid) -> Self {
        Self {
            u: Field::zeros(grid),
            u_tilde: Field::zeros(grid),
        }
    }

    /// State whose next shrink by `threshold` returns `g` exactly.
    pub fn from_initial(g: &Field, threshold: f64) -> Result<Self> {
        check_threshold(threshold)?;
        let u_tilde = g.map(|v| if v == 0.0 { 0.0 } else { v + threshold.copysign(v) })?;
        Ok(Self {
            u: g.clone(),
            u_tilde,
        })
    }

    pub fn u(&self) -> &Field {
        &self.u
    }

    pub fn u_tilde(&self) -> &Field {
        &self.u_tilde
    }

    pub fn into_parts(self) -> (Field, Field) {
        (self.u, self.u_tilde)
    }
}

/// Sup-norm changes made by one DR step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrUpdate {
    pub du: f64,
    pub du_tilde: f64,
}

impl DrUpdate {
    pub fn max(&self) -> f64 {
        self.du.max(self.du_tilde)
    }
}

/// Reusable Douglas-Rachford stepper with a cached FFT resolvent.
#[derive(Debug, Clone)]
pub struct DrSolver {
    resolvent: Resolvent,
    threshold: f64,
    forcing: Option<Vec<f64>>,
    z: Vec<f64>,
    w: Vec<f64>,
}

impl DrSolver {
    pub fn new(grid: &Grid, cfg: &SolverConfig, f: Option<&Field>) -> Result<Self> {
        let mut cfg = *cfg;
        cfg.scheme = Scheme::Dr;
        cfg.validate(grid)?;
        if let Some(f) = f {
            grid.ensure_same(f.grid())?;
        }
        Ok(Self {
            resolvent: Resolvent::new(grid, cfg.tau)?,
            threshold: cfg.threshold(),
            forcing: f
                .filter(|f| !f.is_zero())
                .map(|f| f.values().iter().map(|v| cfg.tau * v).collect()),
            z: vec![0.0; grid.len()],
            w: vec![0.0; grid.len()],
        })
    }

    pub fn tau(&self) -> f64 {
        self.resolvent.tau()
    }

    /// `u <- shrink(ut)`, `ut <- ut + R(2u - ut + tau f) - u`.
    pub fn step(&mut self, u: &mut [f64], u_tilde: &mut [f64]) -> DrUpdate {
        let thr = self.threshold;
        let mut du = 0.0f64;
        for (i, (uv, &ut)) in u.iter_mut().zip(u_tilde.iter()).enumerate() {
            let un = shrink_scalar(ut, thr);
            du = du.max((un - *uv).abs());
            *uv = un;
            self.z[i] = 2.0 * un - ut;
        }
        if let Some(tf) = &self.forcing {
            for (z, s) in self.z.iter_mut().zip(tf) {
                *z += s;
            }
        }
        self.resolvent.apply_into(&self.z, &mut self.w);
        let mut dut = 0.0f64;
        for ((ut, &w), &un) in u_tilde.iter_mut().zip(&self.w).zip(u.iter()) {
            let delta = w - un;
            dut = dut.max(delta.abs());
            *ut += delta;
        }
        DrUpdate {
            du,
            du_tilde: dut,
        }
    }
}

/// One Douglas-Rachford step; `f = None` means no forcing.
pub fn dr_step(state: &DrState, f: Option<&Field>, cfg: &SolverConfig) -> Result<DrState> {
    let grid = *state.u.grid();
    let mut solver = DrSolver::new(&grid, cfg, f)?;
    let mut u = state.u.values().to_vec();
    let mut ut = state.u_tilde.values().to_vec();
    solver.step(&mut u, &mut ut);
    Ok(DrState {
        u: Field::new(grid, u)?,
        u_tilde: Field::new(grid, ut)?,
    })
}

#[derive(Debug, Clone)]
pub struct StationarySolution {
    pub u: Field,
    pub iterations: usize,
    /// Last successive-iterate change, `max(|du|_inf, |du_tilde|_inf)`.
    pub residual: f64,
}

/// Iterates DR on `-Lap u + gamma p(u) = f` until successive iterates of both
/// `u` and `u_tilde` change by at most `stationary_tol` in sup norm.
pub fn dr_solve_stationary(f: &Field, cfg: &SolverConfig, u0: &Field) -> Result<StationarySolution> {
    let grid = *f.grid();
    grid.ensure_same(u0.grid())?;
    let mut solver = DrSolver::new(&grid, cfg, Some(f))?;
    let (u, ut) = DrState::from_initial(u0, cfg.threshold())?.into_parts();
    let (mut u, mut ut) = (u.into_values(), ut.into_values());
    let mut residual = f64::INFINITY;
    for it in 1..=cfg.max_iters {
        residual = solver.step(&mut u, &mut ut).max();
        if !residual.is_finite() {
            break;
        }
        if residual <= cfg.stationary_tol {
            return Ok(StationarySolution {
                u: Field::new(grid, u)?,
                iterations: it,
                residual,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: cfg.max_iters,
        residual,
        last: Box::new(Field::from_parts(grid, u)),
    })
}

/// Wave CFL used by the leapfrog scheme: `h` in 1D, `h / sqrt 2` in 2D.
pub fn wave_cfl_bound(grid: &Grid) -> f64 {
    grid.spacing() / (grid.dim() as f64).sqrt()
}

fn check_wave_cfl(grid: &Grid, tau: f64) -> Result<()> {
    let bound = wave_cfl_bound(grid);
    if !(tau > 0.0) || tau > bound * (1.0 + 1e-12) {
        return Err(Error::Cfl {
            tau,
            bound,
            rule: "tau <= h / sqrt(dim)",
        });
    }
    Ok(())
}

/// Reusable leapfrog-shrink stepper.
#[derive(Debug, Clone)]
pub struct LeapfrogStepper {
    grid: Grid,
    tau: f64,
    threshold: f64,
    lap: Vec<f64>,
}

impl LeapfrogStepper {
    pub fn new(grid: &Grid, tau: f64, threshold: f64) -> Result<Self> {
        check_wave_cfl(grid, tau)?;
        check_threshold(threshold)?;
        Ok(Self {
            grid: *grid,
            tau,
            threshold,
            lap: vec![0.0; grid.len()],
        })
    }

    /// Signum-Gordon stepper, threshold `tau^2`.
    pub fn signum_gordon(grid: &Grid, tau: f64) -> Result<Self> {
        Self::new(grid, tau, tau * tau)
    }

    /// Overwrites `prev` with the next level computed from `now` and `prev`.
    pub fn step(&mut self, now: &[f64], prev: &mut [f64]) {
        laplacian_into(&self.grid, now, &mut self.lap);
        let t2 = self.tau * self.tau;
        let thr = self.threshold;
        for ((p, &c), &l) in prev.iter_mut().zip(now).zip(&self.lap) {
            *p = shrink_scalar(2.0 * c - *p + t2 * l, thr);
        }
    }
}

/// `shrink(2 u_now - u_prev + tau^2 Lap u_now, threshold)`.
pub fn leapfrog_shrink_step(u_now: &Field, u_prev: &Field, tau: f64, threshold: f64) -> Result<Field> {
    u_now.grid().ensure_same(u_prev.grid())?;
    let mut stepper = LeapfrogStepper::new(u_now.grid(), tau, threshold)?;
    let mut next = u_prev.values().to_vec();
    stepper.step(u_now.values(), &mut next);
    Field::new(*u_now.grid(), next)
}

/// Signum-Gordon leapfrog step with threshold `tau^2`.
pub fn leapfrog_sg_step(u_now: &Field, u_prev: &Field, tau: f64) -> Result<Field> {
    leapfrog_shrink_step(u_now, u_prev, tau, tau * tau)
}

/// Taylor start `shrink(g1 + tau g2 + tau^2/2 Lap g1, tau^2/2)`.
pub fn sg_bootstrap(g1: &Field, g2: &Field, tau: f64) -> Result<Field> {
    g1.grid().ensure_same(g2.grid())?;
    check_wave_cfl(g1.grid(), tau)?;
    let half = 0.5 * tau * tau;
    let lap = crate::operators::laplacian_apply(g1);
    let values = g1
        .values()
        .iter()
        .zip(g2.values())
        .zip(lap.values())
        .map(|((&a, &b), &l)| shrink_scalar(a + tau * b + half * l, half))
        .collect();
    Field::new(*g1.grid(), values)
}

/// Reusable graph diffusion step `shrink(u - tau L u, tau gamma)`.
#[derive(Debug, Clone)]
pub struct GraphStepper<'g> {
    graph: &'g Graph,
    tau: f64,
    threshold: f64,
    lap: Vec<f64>,
}

impl<'g> GraphStepper<'g> {
    pub fn new(graph: &'g Graph, tau: f64, gamma: f64) -> Result<Self> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::Cfl {
                tau,
                bound: 1.0,
                rule: "0 < tau <= 1 for the normalized graph Laplacian",
            });
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma must be nonnegative, got {gamma}")));
        }
        Ok(Self {
            graph,
            tau,
            threshold: tau * gamma,
            lap: vec![0.0; graph.node_count()],
        })
    }

    pub fn step(&mut self, u: &mut [f64]) {
        self.graph.laplacian_into(u, &mut self.lap);
        let (tau, thr) = (self.tau, self.threshold);
        for (v, l) in u.iter_mut().zip(&self.lap) {
            *v = shrink_scalar(*v - tau * l, thr);
        }
    }
}

pub fn graph_imex_step(u: &[f64], g: &Graph, tau: f64, gamma: f64) -> Result<Vec<f64>> {
    if u.len() != g.node_count() {
        return Err(Error::InvalidParameter(format!(
            "vector has {} entries, graph has {} nodes",
            u.len(),
            g.node_count()
        )));
    }
    let mut out = u.to_vec();
    GraphStepper::new(g, tau, gamma)?.step(&mut out);
    Ok(out)
}
