//! Forced heat flow with the L1 term, in one and two dimensions.

use crate::diagnostics::{field_row, left_end, right_end, BoundaryEstimator, DiagnosticsTrace, COL_POWER};
use crate::error::{Error, Result};
use crate::field::{norm_of_slice, Field, Grid, Norm};
use crate::operators::shrink_scalar;
use crate::schemes::{Boundary1d, DrSolver, DrState, ImexStepper, Scheme, SolverConfig};

/// Ghost values `(left, right)` as a function of the time at the start of a step.
pub type GhostValues = Box<dyn Fn(f64) -> (f64, f64) + Send + Sync>;
/// Exact solution `(x, y, t)` used for the error columns.
pub type Oracle = Box<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

#[derive(Default)]
pub struct HeatOptions {
    /// Times at which full snapshots are kept; each is taken at the first
    /// step reaching it.
    pub sample_times: Vec<f64>,
    /// 1D Dirichlet ghost values; periodic when `None` (IMEX only).
    pub ghosts: Option<GhostValues>,
    /// Adds `err_l1`, `err_l2`, `err_linf` columns against this solution.
    pub oracle: Option<Oracle>,
    /// Tracks both ends of a 1D support each step.
    pub track_boundary: Option<BoundaryEstimator>,
    /// Stops at the first step where the solution is identically zero.
    pub stop_at_extinction: bool,
    /// Records a trace row every this many steps (0 disables the trace).
    pub trace_every: usize,
}

impl HeatOptions {
    pub fn new() -> Self {
        Self {
            trace_every: 1,
            ..Default::default()
        }
    }
}

impl std::fmt::Debug for HeatOptions {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HeatOptions")
            .field("sample_times", &self.sample_times)
            .field("ghosts", &self.ghosts.is_some())
            .field("oracle", &self.oracle.is_some())
            .field("track_boundary", &self.track_boundary)
            .field("stop_at_extinction", &self.stop_at_extinction)
            .field("trace_every", &self.trace_every)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub struct HeatRun {
    pub snapshots: Vec<(f64, Field)>,
    pub trace: DiagnosticsTrace,
    pub final_field: Field,
    pub final_time: f64,
    pub steps: usize,
    /// `(t, left, right)` support ends after every step with nonzero solution.
    pub boundary: Vec<(f64, f64, f64)>,
    /// Largest error over all recorded steps, `[L1, L2, Linf]`.
    pub max_errors: Option<[f64; 3]>,
    /// `sum_n tau |S_n|` over steps `n >= 1`.
    pub space_time_support: f64,
    /// Time of the first identically zero step, if one was reached.
    pub extinction_time: Option<f64>,
}

enum Stepper {
    Imex(ImexStepper),
    Dr(DrSolver, Vec<f64>),
}

fn power(grid: &Grid, f: Option<&Field>, u: &[f64], ghosts: Option<(f64, f64)>) -> f64 {
    let cell = grid.cell_measure();
    let mut p = f.map_or(0.0, |f| {
        f.values().iter().zip(u).map(|(a, b)| a * b).sum::<f64>() * cell
    });
    if let Some((gl, gr)) = ghosts {
        let n = u.len();
        p += (u[0] * (gl - u[0]) + u[n - 1] * (gr - u[n - 1])) / grid.spacing();
    }
    p
}

/// Evolves `u_t = Lap u + f - gamma p(u)` from `g` with the configured scheme.
///
/// The trace holds the standard field columns, then `power` (forcing work
/// plus boundary flux, used by the energy check), then the optional error
/// columns, at `t = 0` and after every `trace_every` steps.
pub fn run_parabolic(f: &Field, g: &Field, cfg: &SolverConfig, opts: &HeatOptions) -> Result<HeatRun> {
    let grid = *g.grid();
    grid.ensure_same(f.grid())?;
    cfg.validate(&grid)?;
    if opts.ghosts.is_some() && (grid.dim() != 1 || cfg.scheme != Scheme::Imex) {
        return Err(Error::InvalidParameter(
            "boundary ghost values need a 1D grid and the IMEX scheme".into(),
        ));
    }
    if opts.track_boundary.is_some() && grid.dim() != 1 {
        return Err(Error::InvalidParameter("boundary tracking is 1D only".into()));
    }
    let forcing = (!f.is_zero()).then_some(f);
    let mut u = g.values().to_vec();
    let mut stepper = match cfg.scheme {
        Scheme::Imex => Stepper::Imex(ImexStepper::new(&grid, cfg, forcing)?),
        Scheme::Dr => {
            let ut = DrState::from_initial(g, cfg.threshold())?.into_parts().1.into_values();
            Stepper::Dr(DrSolver::new(&grid, cfg, forcing)?, ut)
        }
    };

    let mut extra = vec![COL_POWER.to_string()];
    if opts.oracle.is_some() {
        extra.extend(["err_l1", "err_l2", "err_linf"].map(String::from));
    }
    let mut trace = DiagnosticsTrace::for_fields(&extra);
    let cell = grid.cell_measure();
    let mut diff = vec![0.0; grid.len()];
    let mut max_errors = opts.oracle.as_ref().map(|_| [0.0f64; 3]);

    let steps = cfg.steps();
    let tau = cfg.tau;
    let mut samples: Vec<f64> = opts.sample_times.clone();
    samples.sort_by(f64::total_cmp);
    let mut next_sample = 0;
    let mut snapshots = Vec::new();
    let mut boundary = Vec::new();
    let mut space_time_support = 0.0;
    let mut extinction_time = None;

    let mut record = |k: usize,
                      u: &[f64],
                      trace: &mut DiagnosticsTrace,
                      max_errors: &mut Option<[f64; 3]>|
     -> Result<()> {
        let t = k as f64 * tau;
        let errs = match &opts.oracle {
            Some(oracle) => {
                for (i, d) in diff.iter_mut().enumerate() {
                    let [x, y] = grid.point(i);
                    *d = u[i] - oracle(x, y, t);
                }
                let e = [
                    norm_of_slice(&diff, cell, Norm::L1),
                    norm_of_slice(&diff, cell, Norm::L2),
                    norm_of_slice(&diff, cell, Norm::Linf),
                ];
                if let Some(m) = max_errors.as_mut() {
                    for q in 0..3 {
                        m[q] = m[q].max(e[q]);
                    }
                }
                Some(e)
            }
            None => None,
        };
        let want_row = opts.trace_every > 0 && (k.is_multiple_of(opts.trace_every) || k == steps);
        if want_row {
            let field = Field::from_parts(grid, u.to_vec());
            let ghosts = opts.ghosts.as_ref().map(|gh| gh(t));
            let mut row = field_row(&field).to_vec();
            row.push(power(&grid, forcing, u, ghosts));
            if let Some(e) = errs {
                row.extend_from_slice(&e);
            }
            trace.push(t, &row)?;
        }
        Ok(())
    };

    record(0, &u, &mut trace, &mut max_errors)?;
    while next_sample < samples.len() && samples[next_sample] <= 0.5 * tau {
        snapshots.push((0.0, Field::from_parts(grid, u.clone())));
        next_sample += 1;
    }

    let threshold = cfg.threshold();
    let mut done = steps;
    for k in 1..=steps {
        let t_prev = (k - 1) as f64 * tau;
        match &mut stepper {
            Stepper::Imex(s) => {
                let bc = match &opts.ghosts {
                    Some(gh) => {
                        let (left, right) = gh(t_prev);
                        Boundary1d::Dirichlet { left, right }
                    }
                    None => Boundary1d::Periodic,
                };
                s.step(&mut u, bc)?;
            }
            Stepper::Dr(s, ut) => {
                // the state at t_k is the shrink of the updated auxiliary iterate
                s.step(&mut u, ut);
                for (a, &b) in u.iter_mut().zip(ut.iter()) {
                    *a = shrink_scalar(b, threshold);
                }
            }
        }
        let t = k as f64 * tau;
        let count = u.iter().filter(|&&v| v != 0.0).count();
        space_time_support += tau * count as f64 * cell;
        if let Some(est) = opts.track_boundary {
            if let (Some(l), Some(r)) = (left_end(&u, &grid, est), right_end(&u, &grid, est)) {
                boundary.push((t, l, r));
            }
        }
        record(k, &u, &mut trace, &mut max_errors)?;
        while next_sample < samples.len() && samples[next_sample] <= t + 0.5 * tau {
            snapshots.push((t, Field::from_parts(grid, u.clone())));
            next_sample += 1;
        }
        if count == 0 && extinction_time.is_none() && !g.is_zero() {
            extinction_time = Some(t);
            if opts.stop_at_extinction {
                done = k;
                if opts.trace_every > 0 && k % opts.trace_every != 0 {
                    let field = Field::from_parts(grid, u.clone());
                    let mut row = field_row(&field).to_vec();
                    row.push(0.0);
                    if max_errors.is_some() {
                        row.extend_from_slice(&[0.0; 3]);
                    }
                    trace.push(t, &row)?;
                }
                break;
            }
        }
    }

    Ok(HeatRun {
        snapshots,
        trace,
        final_field: Field::new(grid, u)?,
        final_time: done as f64 * tau,
        steps: done,
        boundary,
        max_errors,
        space_time_support,
        extinction_time,
    })
}

/// 1D forced heat flow; see [`run_parabolic`].
pub fn run_heat_1d(f: &Field, g: &Field, cfg: &SolverConfig, opts: &HeatOptions) -> Result<HeatRun> {
    if g.grid().dim() != 1 {
        return Err(Error::InvalidParameter("run_heat_1d needs a 1D grid".into()));
    }
    run_parabolic(f, g, cfg, opts)
}

/// 2D decay of compactly supported data with the parabolic Douglas-Rachford
/// scheme, stopping at extinction.
pub fn run_heat_2d_star(g: &Field, cfg: &SolverConfig, sample_times: &[f64]) -> Result<HeatRun> {
    if g.grid().dim() != 2 {
        return Err(Error::InvalidParameter("run_heat_2d_star needs a 2D grid".into()));
    }
    if cfg.scheme != Scheme::Dr {
        return Err(Error::InvalidParameter("run_heat_2d_star uses the DR scheme".into()));
    }
    let opts = HeatOptions {
        sample_times: sample_times.to_vec(),
        stop_at_extinction: true,
        trace_every: 1,
        ..Default::default()
    };
    run_parabolic(&Field::zeros(*g.grid()), g, cfg, &opts)
}

/// L1 distance between two IMEX runs sharing `f`, after every step.
pub fn imex_twin_distances(f: &Field, g1: &Field, g2: &Field, cfg: &SolverConfig) -> Result<Vec<f64>> {
    let grid = *g1.grid();
    grid.ensure_same(g2.grid())?;
    grid.ensure_same(f.grid())?;
    let forcing = (!f.is_zero()).then_some(f);
    let mut s1 = ImexStepper::new(&grid, cfg, forcing)?;
    let mut s2 = ImexStepper::new(&grid, cfg, forcing)?;
    let (mut u, mut v) = (g1.values().to_vec(), g2.values().to_vec());
    let cell = grid.cell_measure();
    let dist = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| (a - b).abs()).sum::<f64>() * cell;
    let mut out = vec![dist(&u, &v)];
    for _ in 0..cfg.steps() {
        s1.step(&mut u, Boundary1d::Periodic)?;
        s2.step(&mut v, Boundary1d::Periodic)?;
        out.push(dist(&u, &v));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_data_stays_zero() {
        let g = Grid::line(32, -8.0, 8.0).unwrap();
        let cfg = SolverConfig::imex(0.2 * g.spacing().powi(2), 1.0, 0.1);
        let run = run_heat_1d(&Field::zeros(g), &Field::zeros(g), &cfg, &HeatOptions::new()).unwrap();
        assert!(run.final_field.is_zero());
        assert_eq!(run.trace.len(), cfg.steps() + 1);
        assert_eq!(run.extinction_time, None);
    }

    #[test]
    fn snapshots_at_requested_times() {
        let g = Grid::line(32, -1.0, 1.0).unwrap();
        let cfg = SolverConfig::imex(5e-4, 0.0, 0.01);
        let u0 = Field::from_fn_1d(g, |x| (-10.0 * x * x).exp()).unwrap();
        let opts = HeatOptions {
            sample_times: vec![0.0, 0.005, 0.01],
            ..HeatOptions::new()
        };
        let run = run_heat_1d(&Field::zeros(g), &u0, &cfg, &opts).unwrap();
        let times: Vec<f64> = run.snapshots.iter().map(|s| s.0).collect();
        assert_eq!(times.len(), 3);
        assert!((times[1] - 0.005).abs() < 1e-12);
    }

    #[test]
    fn large_threshold_extinguishes() {
        let g = Grid::square(16, 0.0, 1.0).unwrap();
        let u0 = Field::from_fn(g, |x, y| ((x - 0.5).powi(2) + (y - 0.5).powi(2) < 0.05) as u8 as f64).unwrap();
        let cfg = SolverConfig::dr(0.01, 200.0, 1.0);
        let run = run_heat_2d_star(&u0, &cfg, &[]).unwrap();
        assert!(run.extinction_time.unwrap() <= 0.011);
        assert!(run.final_field.is_zero());
    }
}
