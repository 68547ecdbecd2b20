//! Post-processing: error norms, least-squares fits, boundary tracking and
//! monitors for contraction, TVD and the energy inequality.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{norm, norm_of_slice, support, total_variation, Field, Grid, Norm};
use crate::operators::laplacian_apply;

pub const COL_L1: &str = "l1";
pub const COL_L2: &str = "l2";
pub const COL_LINF: &str = "linf";
pub const COL_TV: &str = "tv";
pub const COL_SUPPORT: &str = "support";
pub const COL_ENERGY: &str = "energy";
pub const COL_L1_DISTANCE: &str = "l1_distance";
pub const COL_POWER: &str = "power";

/// Columns filled by [`DiagnosticsTrace::push_field`].
pub const FIELD_COLUMNS: [&str; 6] = [COL_L1, COL_L2, COL_LINF, COL_TV, COL_SUPPORT, COL_ENERGY];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

/// Time series of named scalar columns sampled at strictly increasing times.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DiagnosticsTrace {
    times: Vec<f64>,
    columns: Vec<Column>,
}

impl DiagnosticsTrace {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Self {
        Self {
            times: Vec::new(),
            columns: names
                .iter()
                .map(|n| Column {
                    name: n.as_ref().to_string(),
                    values: Vec::new(),
                })
                .collect(),
        }
    }

    /// Trace with the [`FIELD_COLUMNS`] followed by `extra` columns.
    pub fn for_fields<S: AsRef<str>>(extra: &[S]) -> Self {
        let mut names: Vec<String> = FIELD_COLUMNS.iter().map(|s| s.to_string()).collect();
        names.extend(extra.iter().map(|s| s.as_ref().to_string()));
        Self::new(&names)
    }

    pub fn push(&mut self, t: f64, row: &[f64]) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::InvalidParameter(format!(
                "row has {} values, trace has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        if let Some(&last) = self.times.last() {
            if !(t > last) {
                return Err(Error::InvalidParameter(format!(
                    "times must increase strictly: {t} after {last}"
                )));
            }
        }
        self.times.push(t);
        for (c, &v) in self.columns.iter_mut().zip(row) {
            c.values.push(v);
        }
        Ok(())
    }

    /// Appends the standard measurements of `u` followed by `extra` values.
    pub fn push_field(&mut self, t: f64, u: &Field, extra: &[f64]) -> Result<()> {
        let mut row = field_row(u).to_vec();
        row.extend_from_slice(extra);
        self.push(t, &row)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().find(|c| c.name == name).map(|c| c.values.as_slice())
    }

    /// Every `k`-th row plus the last one.
    pub fn every(&self, k: usize) -> DiagnosticsTrace {
        let k = k.max(1);
        let last = self.times.len().saturating_sub(1);
        let keep: Vec<usize> = (0..self.times.len()).filter(|&i| i % k == 0 || i == last).collect();
        DiagnosticsTrace {
            times: keep.iter().map(|&i| self.times[i]).collect(),
            columns: self
                .columns
                .iter()
                .map(|c| Column {
                    name: c.name.clone(),
                    values: keep.iter().map(|&i| c.values[i]).collect(),
                })
                .collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("time");
        for c in &self.columns {
            s.push(',');
            s.push_str(&c.name);
        }
        s.push('\n');
        for (i, t) in self.times.iter().enumerate() {
            s.push_str(&format!("{t:.16e}"));
            for c in &self.columns {
                s.push_str(&format!(",{:.16e}", c.values[i]));
            }
            s.push('\n');
        }
        s
    }
}

/// `[l1, l2, linf, tv, support measure, energy]` of a field.
pub fn field_row(u: &Field) -> [f64; 6] {
    let cell = u.grid().cell_measure();
    [
        norm_of_slice(u.values(), cell, Norm::L1),
        norm_of_slice(u.values(), cell, Norm::L2),
        norm_of_slice(u.values(), cell, Norm::Linf),
        total_variation(u),
        support(u).measure(),
        u.energy(),
    ]
}

/// Discrete Lq norm of `u - oracle` sampled at the grid points.
pub fn error_norm(u: &Field, oracle: impl Fn(f64, f64) -> f64, q: Norm) -> f64 {
    let g = u.grid();
    let diff: Vec<f64> = u
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let [x, y] = g.point(i);
            v - oracle(x, y)
        })
        .collect();
    norm_of_slice(&diff, g.cell_measure(), q)
}

/// Least-squares fit `y = c0 + c1 x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub coefficients: [f64; 2],
    /// Euclidean norm of the residual vector.
    pub residual: f64,
    /// Spectral condition number of the normal matrix.
    pub condition: f64,
}

impl FitResult {
    pub fn intercept(&self) -> f64 {
        self.coefficients[0]
    }

    pub fn slope(&self) -> f64 {
        self.coefficients[1]
    }
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<FitResult> {
    if x.len() != y.len() {
        return Err(Error::InvalidParameter("x and y lengths differ".into()));
    }
    if x.len() < 2 {
        return Err(Error::InvalidParameter("need at least two samples".into()));
    }
    let n = x.len() as f64;
    let xm = x.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - xm).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - xm) * (b - ym)).sum();
    let scale = x.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    if !(sxx > 1e-14 * scale) {
        return Err(Error::InvalidParameter("degenerate design matrix".into()));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let residual = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum::<f64>()
        .sqrt();
    // normal matrix [[n, sum x], [sum x, sum x^2]]
    let (a, b, d) = (n, n * xm, x.iter().map(|v| v * v).sum::<f64>());
    let tr = a + d;
    let disc = ((a - d).powi(2) + 4.0 * b * b).sqrt();
    let (lmax, lmin) = (0.5 * (tr + disc), 0.5 * (tr - disc));
    let condition = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };
    Ok(FitResult {
        coefficients: [intercept, slope],
        residual,
        condition,
    })
}

/// Slope of `log error` against `log h`; the slope is the observed order.
pub fn convergence_rate(hs: &[f64], errors: &[f64]) -> Result<FitResult> {
    if hs.len() != errors.len() || hs.len() < 3 {
        return Err(Error::InvalidParameter(
            "convergence rate needs at least three (h, error) pairs".into(),
        ));
    }
    if hs.iter().chain(errors).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter("spacings and errors must be positive".into()));
    }
    let lx: Vec<f64> = hs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly)
}

fn check_times(times: &[f64], values: &[f64]) -> Result<()> {
    if times.len() != values.len() || times.len() < 3 {
        return Err(Error::InvalidParameter("boundary fit needs at least three samples".into()));
    }
    if times.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidParameter("boundary fit needs positive times".into()));
    }
    Ok(())
}

/// Fit of `a(t) = a0 + a1 t^beta` for fixed `beta`.
pub fn fit_power_boundary(times: &[f64], a: &[f64], beta: f64) -> Result<FitResult> {
    check_times(times, a)?;
    let basis: Vec<f64> = times.iter().map(|t| t.powf(beta)).collect();
    linear_fit(&basis, a)
}

/// Fit of `a(t) = a0 + a1 sqrt t`.
pub fn fit_sqrt_boundary(times: &[f64], a: &[f64]) -> Result<FitResult> {
    fit_power_boundary(times, a, 0.5)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeExponentFit {
    pub beta: f64,
    pub fit: FitResult,
}

pub const BETA_SEARCH: (f64, f64) = (0.2, 1.0);

/// Fit of `a0 + a1 t^beta` minimizing the residual over `beta` in
/// [`BETA_SEARCH`]: a grid scan followed by golden-section refinement.
pub fn fit_free_exponent(times: &[f64], a: &[f64]) -> Result<FreeExponentFit> {
    check_times(times, a)?;
    let resid = |b: f64| fit_power_boundary(times, a, b).map(|f| f.residual).unwrap_or(f64::INFINITY);
    let (lo, hi) = BETA_SEARCH;
    let steps = 800;
    let dx = (hi - lo) / steps as f64;
    let best = (0..=steps)
        .map(|k| lo + k as f64 * dx)
        .min_by(|x, y| resid(*x).total_cmp(&resid(*y)))
        .unwrap();
    let (mut l, mut r) = ((best - dx).max(lo), (best + dx).min(hi));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    while r - l > 1e-9 {
        let m1 = r - phi * (r - l);
        let m2 = l + phi * (r - l);
        if resid(m1) <= resid(m2) {
            r = m2;
        } else {
            l = m1;
        }
    }
    let beta = 0.5 * (l + r);
    Ok(FreeExponentFit {
        beta,
        fit: fit_power_boundary(times, a, beta)?,
    })
}

/// Indices of samples inside the asymptotic fit window
/// `5 tau <= t <= 0.9 t_end`.
pub fn fit_window(times: &[f64], tau: f64, t_end: f64) -> Vec<usize> {
    times
        .iter()
        .enumerate()
        .filter(|(_, &t)| t >= 5.0 * tau * (1.0 - 1e-12) && t <= 0.9 * t_end)
        .map(|(i, _)| i)
        .collect()
}

/// How a sub-cell boundary position is read off a discrete support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryEstimator {
    /// Fits the contact profile `u ~ K (a - x)^2` through the last two
    /// nonzero points.
    #[default]
    QuadraticContact,
    /// Outermost nonzero point plus half a cell.
    CellEdge,
}

fn contact_offset(outer: f64, inner: f64) -> Option<f64> {
    let (s1, s0) = (outer.abs().sqrt(), inner.abs().sqrt());
    (s0 > s1).then(|| s1 / (s0 - s1))
}

/// Right end of the support of a 1D field; `None` if `u` vanishes.
pub fn boundary_location(u: &Field, est: BoundaryEstimator) -> Option<f64> {
    right_end(u.values(), u.grid(), est)
}

/// Left end of the support of a 1D field.
pub fn left_boundary_location(u: &Field, est: BoundaryEstimator) -> Option<f64> {
    left_end(u.values(), u.grid(), est)
}

pub(crate) fn right_end(v: &[f64], g: &Grid, est: BoundaryEstimator) -> Option<f64> {
    let last = v.iter().rposition(|&x| x != 0.0)?;
    let offset = match est {
        BoundaryEstimator::QuadraticContact if last > 0 => contact_offset(v[last], v[last - 1]),
        _ => None,
    };
    Some(g.coord(last) + g.spacing() * offset.unwrap_or(0.5))
}

pub(crate) fn left_end(v: &[f64], g: &Grid, est: BoundaryEstimator) -> Option<f64> {
    let first = v.iter().position(|&x| x != 0.0)?;
    let offset = match est {
        BoundaryEstimator::QuadraticContact if first + 1 < v.len() => {
            contact_offset(v[first], v[first + 1])
        }
        _ => None,
    };
    Some(g.coord(first) - g.spacing() * offset.unwrap_or(0.5))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub passed: bool,
    pub first_violation: Option<usize>,
    /// Largest `series[i+1] - series[i]`.
    pub worst_increase: f64,
}

/// Passes iff `series[i+1] <= series[i] + tolerance` for every `i`.
pub fn monotonicity_check(series: &[f64], tolerance: f64) -> MonotonicityReport {
    let mut first = None;
    let mut worst = f64::NEG_INFINITY;
    for (i, w) in series.windows(2).enumerate() {
        let inc = w[1] - w[0];
        worst = worst.max(inc);
        if inc > tolerance && first.is_none() {
            first = Some(i + 1);
        }
    }
    MonotonicityReport {
        passed: first.is_none(),
        first_violation: first,
        worst_increase: if series.len() < 2 { 0.0 } else { worst },
    }
}

pub const ENTROPY_SLACK: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub passed: bool,
    /// Smallest `rhs + slack - rate`; negative means a violation.
    pub worst_margin: f64,
    pub worst_index: Option<usize>,
    pub slack: f64,
}

/// Checks `(E_{n+1} - E_n) / dt <= -gamma |u_{n+1}|_1 + P_n + slack`, with the
/// energy and L1 columns of the trace and an optional power column `P`
/// (forcing and boundary work). Consecutive rows are one step `tau` apart.
/// The slack is `10 tau` times the largest step-to-step variation of the
/// right-hand side per unit time.
pub fn entropy_check(trace: &DiagnosticsTrace, gamma: f64, tau: f64) -> Result<EntropyReport> {
    let energy = trace
        .column(COL_ENERGY)
        .ok_or_else(|| Error::InvalidParameter("trace has no energy column".into()))?;
    let l1 = trace
        .column(COL_L1)
        .ok_or_else(|| Error::InvalidParameter("trace has no l1 column".into()))?;
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter("tau must be positive".into()));
    }
    let power = trace.column(COL_POWER);
    let t = trace.times();
    let steps = t.len().saturating_sub(1);
    let rhs: Vec<f64> = (0..steps)
        .map(|n| -gamma * l1[n + 1] + power.map_or(0.0, |p| p[n]))
        .collect();
    let variation = rhs
        .windows(2)
        .map(|w| (w[1] - w[0]).abs() / tau)
        .fold(0.0, f64::max);
    let slack = ENTROPY_SLACK * tau * variation;
    let mut worst = f64::INFINITY;
    let mut worst_index = None;
    for n in 0..steps {
        let rate = (energy[n + 1] - energy[n]) / (t[n + 1] - t[n]);
        let margin = rhs[n] + slack - rate;
        if margin < worst {
            worst = margin;
            worst_index = Some(n);
        }
    }
    let margin_tol = 1e-12 * (1.0 + energy.iter().fold(0.0f64, |m, &e| m.max(e)) / tau);
    Ok(EntropyReport {
        passed: steps == 0 || worst >= -margin_tol,
        worst_margin: if steps == 0 { 0.0 } else { worst },
        worst_index,
        slack,
    })
}

/// True when the series rises (weakly) to one maximum and then falls
/// (weakly); plateaus are allowed, a second rise is not.
pub fn is_unimodal(series: &[f64]) -> bool {
    let mut falling = false;
    for w in series.windows(2) {
        if w[1] < w[0] {
            falling = true;
        } else if w[1] > w[0] && falling {
            return false;
        }
    }
    true
}

/// Largest violation of the stationary inclusion `f + Lap u in gamma d|u|`:
/// `(|r| - gamma)^+` where `u = 0`, `|r - gamma sign u|` elsewhere.
pub fn stationary_inclusion_violation(u: &Field, f: &Field, gamma: f64) -> Result<f64> {
    u.grid().ensure_same(f.grid())?;
    let lap = laplacian_apply(u);
    Ok(u.values()
        .iter()
        .zip(f.values())
        .zip(lap.values())
        .map(|((&uv, &fv), &l)| {
            let r = fv + l;
            if uv == 0.0 {
                (r.abs() - gamma).max(0.0)
            } else {
                (r - gamma * uv.signum()).abs()
            }
        })
        .fold(0.0, f64::max))
}

/// `|u - v|_1` with the cell measure.
pub fn l1_distance(u: &Field, v: &Field) -> Result<f64> {
    let d = u.zip_with(v, |a, b| a - b)?;
    Ok(norm(&d, Norm::L1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let hs = [0.1, 0.05, 0.025, 0.0125];
        let es: Vec<f64> = hs.iter().map(|h| 3.0 * h * h).collect();
        let fit = convergence_rate(&hs, &es).unwrap();
        assert!((fit.slope() - 2.0).abs() < 1e-12);
        assert!(convergence_rate(&[0.1], &[1.0]).is_err());
        assert!(convergence_rate(&[0.1, 0.05, 0.02], &[1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn sqrt_law_recovered() {
        let t: Vec<f64> = (1..20).map(|k| k as f64 * 0.001).collect();
        let a: Vec<f64> = t.iter().map(|t| 0.3724 + t.sqrt()).collect();
        let fit = fit_sqrt_boundary(&t, &a).unwrap();
        assert!((fit.intercept() - 0.3724).abs() < 1e-12);
        assert!((fit.slope() - 1.0).abs() < 1e-12);
        let free = fit_free_exponent(&t, &a).unwrap();
        assert!((free.beta - 0.5).abs() < 1e-6);
    }

    #[test]
    fn monotonicity() {
        assert!(monotonicity_check(&[3.0, 2.0, 1.0], 0.0).passed);
        let r = monotonicity_check(&[3.0, 2.0, 2.5, 1.0], 0.1);
        assert_eq!(r.first_violation, Some(2));
    }

    #[test]
    fn unimodal_shapes() {
        assert!(is_unimodal(&[0.0, 1.0, 2.0, 2.0, 1.0, 0.0]));
        assert!(!is_unimodal(&[0.0, 2.0, 1.0, 2.0, 0.0]));
    }

    #[test]
    fn trace_rejects_bad_rows() {
        let mut tr = DiagnosticsTrace::new(&["a"]);
        tr.push(0.0, &[1.0]).unwrap();
        assert!(tr.push(0.0, &[1.0]).is_err());
        assert!(tr.push(1.0, &[1.0, 2.0]).is_err());
        assert!(tr.to_csv().starts_with("time,a\n"));
    }

    #[test]
    fn offset_error() {
        let g = Grid::line(16, 0.0, 1.0).unwrap();
        let u = Field::from_fn_1d(g, |x| x * x + 0.01).unwrap();
        assert!((error_norm(&u, |x, _| x * x, Norm::Linf) - 0.01).abs() < 1e-15);
        assert!(error_norm(&u, |x, _| x * x + 0.01, Norm::L2) < 1e-15);
    }

    #[test]
    fn zero_trace_entropy() {
        let g = Grid::line(8, 0.0, 1.0).unwrap();
        let mut tr = DiagnosticsTrace::for_fields::<&str>(&[]);
        for k in 0..5 {
            tr.push_field(k as f64 * 0.1, &Field::zeros(g), &[]).unwrap();
        }
        assert!(entropy_check(&tr, 1.0, 0.1).unwrap().passed);
    }

    #[test]
    fn cell_edge_boundary() {
        let g = Grid::line(8, 0.0, 8.0).unwrap();
        let u = Field::new(g, vec![0.0, 4.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(boundary_location(&u, BoundaryEstimator::CellEdge), Some(2.5));
        // sqrt profile 2, 1 -> contact one cell further out
        assert_eq!(boundary_location(&u, BoundaryEstimator::QuadraticContact), Some(3.0));
        assert_eq!(left_boundary_location(&u, BoundaryEstimator::CellEdge), Some(0.5));
    }
}
