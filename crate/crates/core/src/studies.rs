//! Refinement studies built from the applications: each runs a ladder of
//! resolutions (in parallel) and fits the observed behavior.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{
    elliptic_forcing, elliptic_support_radius, exact_elliptic, traveling_wave, TravelingWaveParams,
};
use crate::applications::heat::{run_heat_1d, HeatOptions};
use crate::applications::signum_gordon::{l2_against_reference, oscillon_initial, run_signum_gordon, sg_time_step};
use crate::diagnostics::{
    convergence_rate, fit_free_exponent, fit_sqrt_boundary, fit_window, left_end, right_end,
    BoundaryEstimator, FitResult,
};
use crate::error::Result;
use crate::field::{Field, Grid};
use crate::schemes::{dr_solve_stationary, SolverConfig, IMEX_CFL};

/// Step `t_end / m` with `m` the smallest count keeping `tau <= frac h^2`.
pub fn imex_time_step(grid: &Grid, frac: f64, t_end: f64) -> f64 {
    t_end / (t_end / (frac * grid.spacing().powi(2)) - 1e-9).ceil()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    /// `[L1, L2, Linf]`.
    pub errors: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    /// Fitted order per norm, `[L1, L2, Linf]`.
    pub slopes: [f64; 3],
    pub fits: Vec<FitResult>,
}

impl ConvergenceStudy {
    pub fn from_rows(rows: Vec<ConvergenceRow>) -> Result<Self> {
        let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
        let mut fits = Vec::with_capacity(3);
        for q in 0..3 {
            let e: Vec<f64> = rows.iter().map(|r| r.errors[q]).collect();
            fits.push(convergence_rate(&hs, &e)?);
        }
        Ok(Self {
            slopes: [fits[0].slope(), fits[1].slope(), fits[2].slope()],
            rows,
            fits,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,h,e1,e2,einf\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                r.n, r.h, r.errors[0], r.errors[1], r.errors[2]
            ));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TravelingWaveSetup {
    pub gamma: f64,
    pub sigma: f64,
    pub x_min: f64,
    pub x_max: f64,
    /// Initial position of the contact point.
    pub x0: f64,
    pub t_end: f64,
    /// `tau <= cfl_fraction h^2`.
    pub cfl_fraction: f64,
}

impl Default for TravelingWaveSetup {
    fn default() -> Self {
        Self {
            gamma: 0.05,
            sigma: 2.0,
            x_min: 0.0,
            x_max: 16.0,
            x0: 2.0,
            t_end: 1.0,
            cfl_fraction: IMEX_CFL,
        }
    }
}

impl TravelingWaveSetup {
    pub fn params(&self) -> Result<TravelingWaveParams> {
        TravelingWaveParams::new(self.gamma, self.sigma)
    }

    /// Exact solution in the lab frame.
    pub fn exact(&self) -> Result<impl Fn(f64, f64) -> f64 + Send + Sync + 'static> {
        let p = self.params()?;
        let x0 = self.x0;
        Ok(move |x: f64, t: f64| traveling_wave(x - x0, t, &p))
    }

    /// Options wiring the closed form into the Dirichlet ghosts and the
    /// error columns.
    pub fn options(&self, grid: &Grid, sample_times: Vec<f64>) -> Result<HeatOptions> {
        let (h, lo, hi) = (grid.spacing(), self.x_min, self.x_max);
        let ghost = self.exact()?;
        let oracle = self.exact()?;
        Ok(HeatOptions {
            sample_times,
            ghosts: Some(Box::new(move |t| (ghost(lo - h, t), ghost(hi, t)))),
            oracle: Some(Box::new(move |x, _, t| oracle(x, t))),
            trace_every: 1,
            ..Default::default()
        })
    }

    pub fn grid(&self, n: usize) -> Result<Grid> {
        Grid::line(n, self.x_min, self.x_max)
    }

    pub fn initial(&self, grid: &Grid) -> Result<Field> {
        let exact = self.exact()?;
        Field::from_fn_1d(*grid, |x| exact(x, 0.0))
    }

    pub fn config(&self, grid: &Grid) -> SolverConfig {
        SolverConfig::imex(imex_time_step(grid, self.cfl_fraction, self.t_end), self.gamma, self.t_end)
    }

    /// Max-over-time errors at one resolution.
    pub fn run_errors(&self, n: usize) -> Result<ConvergenceRow> {
        let grid = self.grid(n)?;
        let mut opts = self.options(&grid, Vec::new())?;
        opts.trace_every = 0;
        let run = run_heat_1d(&Field::zeros(grid), &self.initial(&grid)?, &self.config(&grid), &opts)?;
        Ok(ConvergenceRow {
            n,
            h: grid.spacing(),
            errors: run.max_errors.unwrap_or([f64::NAN; 3]),
        })
    }
}

pub fn traveling_wave_study(setup: &TravelingWaveSetup, ns: &[usize]) -> Result<ConvergenceStudy> {
    let rows = ns.par_iter().map(|&n| setup.run_errors(n)).collect::<Result<Vec<_>>>()?;
    ConvergenceStudy::from_rows(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EllipticSetup {
    pub gamma: f64,
    pub x_min: f64,
    pub x_max: f64,
    /// DR step as a multiple of `h`.
    pub tau_over_h: f64,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for EllipticSetup {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            x_min: -8.0,
            x_max: 8.0,
            tau_over_h: 1.0,
            tol: 1e-10,
            max_iters: 200_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EllipticRow {
    pub n: usize,
    pub h: f64,
    pub errors: [f64; 3],
    /// Outermost nonzero grid points.
    pub support_ends: (f64, f64),
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EllipticStudy {
    pub rows: Vec<EllipticRow>,
    pub slopes: [f64; 3],
    pub support_radius: f64,
}

impl EllipticSetup {
    pub fn run(&self, n: usize) -> Result<(EllipticRow, Field)> {
        let grid = Grid::line(n, self.x_min, self.x_max)?;
        let f = Field::from_fn_1d(grid, elliptic_forcing)?;
        let cfg = SolverConfig::dr(self.tau_over_h * grid.spacing(), self.gamma, 1.0)
            .with_tol(self.tol)
            .with_max_iters(self.max_iters);
        let sol = dr_solve_stationary(&f, &cfg, &Field::zeros(grid))?;
        let gamma = self.gamma;
        let errors = crate::field::Norm::ALL.map(|q| {
            crate::diagnostics::error_norm(&sol.u, |x, _| exact_elliptic(x, gamma).unwrap_or(f64::NAN), q)
        });
        let v = sol.u.values();
        let first = v.iter().position(|&x| x != 0.0);
        let last = v.iter().rposition(|&x| x != 0.0);
        let ends = match (first, last) {
            (Some(a), Some(b)) => (grid.coord(a), grid.coord(b)),
            _ => (f64::NAN, f64::NAN),
        };
        Ok((
            EllipticRow {
                n,
                h: grid.spacing(),
                errors,
                support_ends: ends,
                iterations: sol.iterations,
            },
            sol.u,
        ))
    }
}

pub fn elliptic_study(setup: &EllipticSetup, ns: &[usize]) -> Result<EllipticStudy> {
    let rows = ns
        .par_iter()
        .map(|&n| setup.run(n).map(|r| r.0))
        .collect::<Result<Vec<_>>>()?;
    let conv = ConvergenceStudy::from_rows(
        rows.iter()
            .map(|r| ConvergenceRow { n: r.n, h: r.h, errors: r.errors })
            .collect(),
    )?;
    Ok(EllipticStudy {
        rows,
        slopes: conv.slopes,
        support_radius: elliptic_support_radius(setup.gamma)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FreeBoundarySetup {
    /// Forcing `amplitude exp(-rate x^2)`.
    pub amplitude: f64,
    pub rate: f64,
    pub gamma: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub t_end: f64,
    pub cfl_fraction: f64,
    pub estimator: BoundaryEstimator,
}

impl Default for FreeBoundarySetup {
    fn default() -> Self {
        Self {
            amplitude: 2.0,
            rate: 5.0,
            gamma: 1.0,
            x_min: -8.0,
            x_max: 8.0,
            t_end: 0.02,
            cfl_fraction: IMEX_CFL,
            estimator: BoundaryEstimator::QuadraticContact,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FreeBoundaryRow {
    pub n: usize,
    pub a0: f64,
    pub a1: f64,
    pub beta: f64,
    pub fit: FitResult,
    /// Left end mirrored: `-left` fitted the same way.
    pub a1_left: f64,
}

impl FreeBoundarySetup {
    /// Boundary history `(t, left, right)` of one run, without a field trace.
    pub fn boundary_history(&self, n: usize) -> Result<(Vec<(f64, f64, f64)>, f64)> {
        let grid = Grid::line(n, self.x_min, self.x_max)?;
        let (amp, rate) = (self.amplitude, self.rate);
        let f = Field::from_fn_1d(grid, |x| amp * (-rate * x * x).exp())?;
        let cfg = SolverConfig::imex(imex_time_step(&grid, self.cfl_fraction, self.t_end), self.gamma, self.t_end);
        let mut u = vec![0.0; grid.len()];
        let mut stepper = crate::schemes::ImexStepper::new(&grid, &cfg, Some(&f))?;
        let mut out = Vec::with_capacity(cfg.steps());
        for k in 1..=cfg.steps() {
            stepper.step(&mut u, crate::schemes::Boundary1d::Periodic)?;
            if let (Some(l), Some(r)) = (left_end(&u, &grid, self.estimator), right_end(&u, &grid, self.estimator)) {
                out.push((k as f64 * cfg.tau, l, r));
            }
        }
        Ok((out, cfg.tau))
    }

    pub fn run(&self, n: usize) -> Result<FreeBoundaryRow> {
        let (hist, tau) = self.boundary_history(n)?;
        let times: Vec<f64> = hist.iter().map(|h| h.0).collect();
        let idx = fit_window(&times, tau, self.t_end);
        let t: Vec<f64> = idx.iter().map(|&i| hist[i].0).collect();
        let right: Vec<f64> = idx.iter().map(|&i| hist[i].2).collect();
        let left: Vec<f64> = idx.iter().map(|&i| -hist[i].1).collect();
        let fit = fit_sqrt_boundary(&t, &right)?;
        let free = fit_free_exponent(&t, &right)?;
        let fit_left = fit_sqrt_boundary(&t, &left)?;
        Ok(FreeBoundaryRow {
            n,
            a0: fit.intercept(),
            a1: fit.slope(),
            beta: free.beta,
            a1_left: fit_left.slope(),
            fit,
        })
    }
}

pub fn free_boundary_study(setup: &FreeBoundarySetup, ns: &[usize]) -> Result<Vec<FreeBoundaryRow>> {
    ns.par_iter().map(|&n| setup.run(n)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignumGordonSetup {
    pub amplitude: f64,
    pub width: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub t_end: f64,
    /// `tau <= cfl_fraction h`.
    pub cfl_fraction: f64,
    pub reference_n: usize,
}

impl Default for SignumGordonSetup {
    fn default() -> Self {
        Self {
            amplitude: 0.3,
            width: 0.8,
            x_min: -2.0,
            x_max: 2.0,
            t_end: 1.0,
            cfl_fraction: 0.5,
            reference_n: 32768,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelfConvergenceStudy {
    pub ns: Vec<usize>,
    pub errors: Vec<f64>,
    /// `errors[i] / errors[i + 1]`.
    pub ratios: Vec<f64>,
    pub slope: f64,
    pub reference_support: f64,
}

impl SignumGordonSetup {
    pub fn run(&self, n: usize) -> Result<Field> {
        let grid = Grid::line(n, self.x_min, self.x_max)?;
        let g1 = oscillon_initial(&grid, self.amplitude, self.width)?;
        let tau = sg_time_step(&grid, self.cfl_fraction, self.t_end);
        Ok(run_signum_gordon(&g1, &Field::zeros(grid), tau, self.t_end, &[], 0)?.final_field)
    }
}

pub fn signum_gordon_study(setup: &SignumGordonSetup, ns: &[usize]) -> Result<SelfConvergenceStudy> {
    let mut all: Vec<usize> = ns.to_vec();
    all.push(setup.reference_n);
    let fields = all.par_iter().map(|&n| setup.run(n)).collect::<Result<Vec<_>>>()?;
    let reference = fields.last().expect("reference run");
    let errors = fields[..ns.len()]
        .iter()
        .map(|u| l2_against_reference(u, reference))
        .collect::<Result<Vec<_>>>()?;
    let ratios = errors.windows(2).map(|w| w[0] / w[1]).collect();
    let hs: Vec<f64> = ns.iter().map(|&n| (setup.x_max - setup.x_min) / n as f64).collect();
    let slope = convergence_rate(&hs, &errors)?.slope();
    Ok(SelfConvergenceStudy {
        ns: ns.to_vec(),
        errors,
        ratios,
        slope,
        reference_support: crate::field::support(reference).measure(),
    })
}

/// Ladder against a smooth manufactured error `C h^p`, for checking the
/// fitting path end to end.
pub fn synthetic_study(ns: &[usize], order: f64, constant: f64) -> Result<ConvergenceStudy> {
    let rows = ns
        .iter()
        .map(|&n| {
            let h = 1.0 / n as f64;
            let e = constant * h.powf(order);
            ConvergenceRow { n, h, errors: [e, e, e] }
        })
        .collect();
    ConvergenceStudy::from_rows(rows)
}
