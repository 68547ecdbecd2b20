//! Closed-form solutions and quantitative predictions used as oracles.

pub mod quadrature;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use quadrature::{bisect, integrate, integrate_with_breaks};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TravelingWaveParams {
    gamma: f64,
    sigma: f64,
}

impl TravelingWaveParams {
    pub fn new(gamma: f64, sigma: f64) -> Result<Self> {
        if !(gamma > 0.0 && sigma > 0.0 && gamma.is_finite() && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "traveling wave needs gamma > 0 and sigma > 0, got ({gamma}, {sigma})"
            )));
        }
        Ok(Self { gamma, sigma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Profile `v(s)` in the moving coordinate `s = x - sigma t`.
    pub fn profile(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let (g, c) = (self.gamma, self.sigma);
        // expm1 keeps the cancellation near the contact point accurate
        g / c * s + g / (c * c) * (-c * s).exp_m1()
    }
}

/// Wave moving right at speed `sigma`, supported on `[sigma t, inf)`.
pub fn traveling_wave(x: f64, t: f64, p: &TravelingWaveParams) -> f64 {
    p.profile(x - p.sigma * t)
}

fn check_elliptic_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("gamma must lie in (0, 1], got {gamma}")))
    }
}

/// Forcing `(1 + x^2)^{-3/2}` of the exact stationary solution.
pub fn elliptic_forcing(x: f64) -> f64 {
    (1.0 + x * x).powf(-1.5)
}

/// Half-width `sqrt(gamma^-2 - 1)` of the exact stationary support.
pub fn elliptic_support_radius(gamma: f64) -> Result<f64> {
    check_elliptic_gamma(gamma)?;
    Ok((gamma.powi(-2) - 1.0).max(0.0).sqrt())
}

/// Exact stationary solution for the forcing [`elliptic_forcing`].
pub fn exact_elliptic(x: f64, gamma: f64) -> Result<f64> {
    let a = elliptic_support_radius(gamma)?;
    if x.abs() > a {
        return Ok(0.0);
    }
    let c = 0.5 * (gamma + 1.0 / gamma);
    Ok((-(1.0 + x * x).sqrt() + 0.5 * gamma * x * x + c).max(0.0))
}

/// Superposition `-1/2 int |x - y| (f(y) - gamma) dy` over the positive set
/// `[lo, hi]`; valid when the solution is one-signed and the compatibility
/// conditions on `f - gamma` hold.
pub fn greens_elliptic_eval(
    x: f64,
    f: impl Fn(f64) -> f64,
    gamma: f64,
    support: (f64, f64),
) -> Result<f64> {
    let (lo, hi) = support;
    if !(hi >= lo) {
        return Err(Error::InvalidParameter(format!("empty interval [{lo}, {hi}]")));
    }
    let r = integrate_with_breaks(
        |y| -0.5 * (x - y).abs() * (f(y) - gamma),
        lo,
        hi,
        &[x],
        1e-12,
    )?;
    Ok(r.value)
}

fn check_weights(gamma: f64, alpha: f64, beta: f64) -> Result<()> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    if !(alpha > 0.0) || beta < 0.0 || (alpha + beta - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "need alpha > 0, beta >= 0, alpha + beta = 1; got ({alpha}, {beta})"
        )));
    }
    Ok(())
}

fn excess_integral(f: &Field, level: f64) -> f64 {
    f.values().iter().map(|v| (v.abs() - level).max(0.0)).sum::<f64>() * f.grid().cell_measure()
}

/// Upper bound `(alpha gamma)^-1 int (|f| - beta gamma)^+` on the measure of
/// any stationary support.
pub fn support_bound_elliptic(f: &Field, gamma: f64, alpha: f64, beta: f64) -> Result<f64> {
    check_weights(gamma, alpha, beta)?;
    Ok(excess_integral(f, beta * gamma) / (alpha * gamma))
}

/// Space-time support bound `(alpha gamma)^-1 (|g|_1 + T int (|f| - beta gamma)^+)`
/// for a time-independent forcing.
pub fn support_bound_parabolic(
    g: &Field,
    f: &Field,
    gamma: f64,
    alpha: f64,
    beta: f64,
    t_end: f64,
) -> Result<f64> {
    check_weights(gamma, alpha, beta)?;
    g.grid().ensure_same(f.grid())?;
    if !(t_end > 0.0) {
        return Err(Error::InvalidParameter(format!("T must be positive, got {t_end}")));
    }
    Ok((excess_integral(g, 0.0) + t_end * excess_integral(f, beta * gamma)) / (alpha * gamma))
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Innermost integral `int_{-inf}^{a sqrt s} y G(x - y, 1 - s) dy` with the
/// heat kernel `G(z, t) = (4 pi t)^{-1/2} exp(-z^2 / 4t)`, in closed form.
fn first_moment(x: f64, s: f64, a: f64) -> f64 {
    let b = a * s.sqrt();
    let sd = (2.0 * (1.0 - s)).sqrt();
    if sd == 0.0 {
        return if x < b { x } else { 0.0 };
    }
    let z = (b - x) / sd;
    x * normal_cdf(z) - sd * normal_pdf(z)
}

const INNER_TOL: f64 = 1e-13;
const CHUNK_TOL: f64 = 1e-11;
const TAIL_TOL: f64 = 1e-15;

/// Rescaled first mass moment `m1(a)`; its zero fixes the coefficient of the
/// `sqrt t` law. Returns the value, the quadrature error estimate, and the
/// upper end of the truncated x-integral.
pub fn m1_rescaled_with_error(a: f64) -> Result<(f64, f64, f64)> {
    if !(a >= 0.0 && a.is_finite()) {
        return Err(Error::InvalidParameter(format!("a must be nonnegative, got {a}")));
    }
    let inner_err = std::cell::Cell::new(0.0f64);
    let inner_fail: std::cell::RefCell<Option<Error>> = Default::default();
    let outer = |x: f64| match integrate(|s| first_moment(x, s, a), 0.0, 1.0, INNER_TOL) {
        Ok(r) => {
            inner_err.set(inner_err.get().max(r.error));
            r.value
        }
        Err(e) => {
            inner_fail.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let (mut total, mut err) = (0.0, 0.0);
    let mut lo = a;
    loop {
        let chunk = integrate(outer, lo, lo + 1.0, CHUNK_TOL);
        if let Some(e) = inner_fail.borrow_mut().take() {
            return Err(e);
        }
        let chunk = chunk?;
        total += chunk.value;
        err += chunk.error;
        lo += 1.0;
        if chunk.value.abs() < TAIL_TOL || lo - a > 60.0 {
            break;
        }
    }
    Ok((total, err + (lo - a) * inner_err.get(), lo))
}

pub fn m1_rescaled(a: f64) -> Result<f64> {
    Ok(m1_rescaled_with_error(a)?.0)
}

pub const A1_BRACKET: (f64, f64) = (0.0, 4.0);
pub const A1_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureReport {
    /// Upper end of the truncated x-integral at the root.
    pub x_truncation: f64,
    /// Estimated absolute quadrature error of `m1` at the root.
    pub quadrature_error: f64,
    pub bisection_tol: f64,
    /// `(a, m1(a))` at the bracket ends.
    pub bracket_samples: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct A1Estimate {
    pub a1: f64,
    pub report: QuadratureReport,
}

/// Root of `m1` on `[0, 4]` by bisection.
pub fn free_boundary_a1() -> Result<A1Estimate> {
    let (lo, hi) = A1_BRACKET;
    let m_lo = m1_rescaled(lo)?;
    let m_hi = m1_rescaled(hi)?;
    if m_lo.signum() == m_hi.signum() {
        let samples = (0..=8)
            .map(|k| {
                let a = lo + (hi - lo) * k as f64 / 8.0;
                m1_rescaled(a).map(|m| (a, m))
            })
            .collect::<Result<Vec<_>>>()?;
        return Err(Error::NoSignChange { samples });
    }
    let a1 = bisect(m1_rescaled, lo, hi, A1_TOL)?;
    let (_, quadrature_error, x_truncation) = m1_rescaled_with_error(a1)?;
    Ok(A1Estimate {
        a1,
        report: QuadratureReport {
            x_truncation,
            quadrature_error,
            bisection_tol: A1_TOL,
            bracket_samples: vec![(lo, m_lo), (hi, m_hi)],
        },
    })
}

/// Small-time law `a(t) = a0 + a1 sqrt t` for a forcing decreasing in `|x|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeBoundaryPrediction {
    pub a0: f64,
    pub a1: f64,
    pub report: QuadratureReport,
}

impl FreeBoundaryPrediction {
    /// `a0` solves `f(a0) = gamma` on `[0, x_max]`.
    pub fn new(f: impl Fn(f64) -> f64, gamma: f64, x_max: f64) -> Result<Self> {
        let a0 = bisect(|x| Ok(f(x) - gamma), 0.0, x_max, 1e-12)?;
        let est = free_boundary_a1()?;
        Ok(Self {
            a0,
            a1: est.a1,
            report: est.report,
        })
    }

    pub fn boundary(&self, t: f64) -> f64 {
        self.a0 + self.a1 * t.max(0.0).sqrt()
    }
}

/// Half-width where `amplitude exp(-rate x^2)` drops to `gamma`.
pub fn gaussian_level_radius(amplitude: f64, rate: f64, gamma: f64) -> Option<f64> {
    (amplitude > gamma).then(|| ((amplitude / gamma).ln() / rate).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wave_value() {
        let p = TravelingWaveParams::new(0.05, 2.0).unwrap();
        let v = traveling_wave(3.0, 1.0, &p);
        let expected = 0.025 + 0.0125 * ((-2.0f64).exp() - 1.0);
        assert!((v - expected).abs() < 1e-15);
        assert_eq!(traveling_wave(2.0, 1.0, &p), 0.0);
        assert!(TravelingWaveParams::new(0.0, 1.0).is_err());
    }

    #[test]
    fn elliptic_values() {
        let a = elliptic_support_radius(0.5).unwrap();
        assert!((a - 3f64.sqrt()).abs() < 1e-15);
        assert!((exact_elliptic(0.0, 0.5).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(exact_elliptic(2.0, 0.5).unwrap(), 0.0);
        assert_eq!(exact_elliptic(0.0, 1.0).unwrap(), 0.0);
        assert!(exact_elliptic(0.0, 1.5).is_err());
        assert!((elliptic_forcing(a) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn green_matches_closed_form_at_origin() {
        let a = 3f64.sqrt();
        let u = greens_elliptic_eval(0.0, elliptic_forcing, 0.5, (-a, a)).unwrap();
        assert!((u - 0.25).abs() < 1e-8);
        let zero = greens_elliptic_eval(0.4, |_| 0.5, 0.5, (-a, a)).unwrap();
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn m1_signs() {
        assert!((m1_rescaled(0.0).unwrap() + 0.25).abs() < 1e-8);
        assert!(m1_rescaled(4.0).unwrap() > 0.0);
    }

    #[test]
    fn weights_validated() {
        let g = crate::field::Grid::line(8, 0.0, 1.0).unwrap();
        let f = Field::zeros(g);
        assert!(support_bound_elliptic(&f, 1.0, 0.0, 1.0).is_err());
        assert!(support_bound_elliptic(&f, 1.0, 0.6, 0.6).is_err());
        assert_eq!(support_bound_elliptic(&f, 1.0, 1.0, 0.0).unwrap(), 0.0);
    }
}
