//! Signum-Gordon equation `u_tt - Lap u = -sign(u)` by leapfrog-shrink.

use crate::diagnostics::DiagnosticsTrace;
use crate::error::{Error, Result};
use crate::field::{norm_of_slice, support, Field, Grid, Norm};
use crate::schemes::{sg_bootstrap, wave_cfl_bound, LeapfrogStepper};

/// Bump `amplitude (1 - (x / width)^2)^2` on `|x| < width` (radial in 2D).
pub fn oscillon_initial(grid: &Grid, amplitude: f64, width: f64) -> Result<Field> {
    if !(width > 0.0) {
        return Err(Error::InvalidParameter(format!("width must be positive, got {width}")));
    }
    Field::from_fn(*grid, |x, y| {
        let r2 = (x * x + y * y) / (width * width);
        if r2 < 1.0 {
            amplitude * (1.0 - r2).powi(2)
        } else {
            0.0
        }
    })
}

/// Largest step `t_end / m <= cfl * h / sqrt(dim)` that lands on `t_end`.
pub fn sg_time_step(grid: &Grid, cfl: f64, t_end: f64) -> f64 {
    let bound = cfl * wave_cfl_bound(grid);
    t_end / (t_end / bound - 1e-9).ceil()
}

#[derive(Debug, Clone)]
pub struct SignumGordonRun {
    pub snapshots: Vec<(f64, Field)>,
    /// Columns `support`, `l2`, `linf` (every `trace_every` steps).
    pub trace: DiagnosticsTrace,
    pub final_field: Field,
    pub steps: usize,
    pub tau: f64,
}

/// Runs from `u(0) = g1`, `u_t(0) = g2` to `t_end`. Records a trace row every
/// `trace_every` steps (0 disables it).
pub fn run_signum_gordon(
    g1: &Field,
    g2: &Field,
    tau: f64,
    t_end: f64,
    sample_times: &[f64],
    trace_every: usize,
) -> Result<SignumGordonRun> {
    let grid = *g1.grid();
    grid.ensure_same(g2.grid())?;
    if !(t_end > 0.0) {
        return Err(Error::InvalidParameter("t_end must be positive".into()));
    }
    let mut stepper = LeapfrogStepper::signum_gordon(&grid, tau)?;
    let steps = ((t_end / tau) - 1e-9).ceil() as usize;
    let cell = grid.cell_measure();
    let mut trace = DiagnosticsTrace::new(&["support", "l2", "linf"]);
    let row = |u: &[f64]| {
        [
            u.iter().filter(|&&v| v != 0.0).count() as f64 * cell,
            norm_of_slice(u, cell, Norm::L2),
            norm_of_slice(u, cell, Norm::Linf),
        ]
    };
    let mut samples = sample_times.to_vec();
    samples.sort_by(f64::total_cmp);
    let mut next = 0;
    let mut snapshots = Vec::new();
    let mut take = |t: f64, u: &[f64], snapshots: &mut Vec<(f64, Field)>| {
        while next < samples.len() && samples[next] <= t + 0.5 * tau {
            snapshots.push((t, Field::from_parts(grid, u.to_vec())));
            next += 1;
        }
    };

    let mut prev = g1.values().to_vec();
    if trace_every > 0 {
        trace.push(0.0, &row(&prev))?;
    }
    take(0.0, &prev, &mut snapshots);
    let mut now = sg_bootstrap(g1, g2, tau)?.into_values();
    for k in 1..=steps {
        let t = k as f64 * tau;
        if k > 1 {
            stepper.step(&now, &mut prev);
            std::mem::swap(&mut now, &mut prev);
        }
        if trace_every > 0 && (k % trace_every == 0 || k == steps) {
            trace.push(t, &row(&now))?;
        }
        take(t, &now, &mut snapshots);
    }
    Ok(SignumGordonRun {
        snapshots,
        trace,
        final_field: Field::new(grid, now)?,
        steps,
        tau,
    })
}

/// L2 distance between a coarse field and a finer reference sampled at the
/// coarse points (the reference resolution must be a multiple).
pub fn l2_against_reference(coarse: &Field, reference: &Field) -> Result<f64> {
    let (gc, gr) = (coarse.grid(), reference.grid());
    if gc.dim() != 1 || gr.dim() != 1 || gr.n() % gc.n() != 0 || gc.x_min() != gr.x_min() || gc.x_max() != gr.x_max() {
        return Err(Error::GridMismatch("reference must refine the coarse 1D grid".into()));
    }
    let stride = gr.n() / gc.n();
    let diff: Vec<f64> = coarse
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| v - reference.values()[i * stride])
        .collect();
    Ok(norm_of_slice(&diff, gc.cell_measure(), Norm::L2))
}

/// Support measure of the final state; convenience for ladders.
pub fn final_support(run: &SignumGordonRun) -> f64 {
    support(&run.final_field).measure()
}
