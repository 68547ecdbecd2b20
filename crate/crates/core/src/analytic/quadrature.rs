//! Adaptive Gauss-Kronrod (7/15 point) quadrature and bisection.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Default absolute tolerance for 1D integrals.
pub const DEFAULT_ABS_TOL: f64 = 1e-10;
const MAX_SEGMENTS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for k in 0..7 {
        let dx = half * XGK[k];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[k] * s;
        if k % 2 == 1 {
            gauss += WG[k / 2] * s;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`, bisecting the
/// segment with the largest error estimate first.
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<Integral> {
    if a == b {
        return Ok(Integral { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let (value, error) = gk15(&mut f, a, b);
    let mut segments = vec![(a, b, value, error)];
    let mut evaluations = 15;
    loop {
        let total: f64 = segments.iter().map(|s| s.2).sum();
        let err: f64 = segments.iter().map(|s| s.3).sum();
        if err <= tol {
            return Ok(Integral { value: total, error: err, evaluations });
        }
        if segments.len() >= MAX_SEGMENTS || !total.is_finite() {
            return Err(Error::Quadrature { estimate: total, error: err });
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap();
        let (lo, hi, _, _) = segments.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Err(Error::Quadrature { estimate: total, error: err });
        }
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        evaluations += 30;
        segments.push((lo, mid, v1, e1));
        segments.push((mid, hi, v2, e2));
    }
}

/// Integrates over `[a, b]` split at interior `breaks` (kinks of the integrand).
pub fn integrate_with_breaks(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: f64,
) -> Result<Integral> {
    let mut pts = vec![a];
    pts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    let pieces = (pts.len() - 1) as f64;
    let mut out = Integral { value: 0.0, error: 0.0, evaluations: 0 };
    for w in pts.windows(2) {
        let part = integrate(&mut f, w[0], w[1], tol / pieces)?;
        out.value += part.value;
        out.error += part.error;
        out.evaluations += part.evaluations;
    }
    Ok(out)
}

/// Root of `f` on `[lo, hi]` by bisection to argument tolerance `tol`.
/// `samples` of `f` are returned in the error when there is no sign change.
pub fn bisect(mut f: impl FnMut(f64) -> Result<f64>, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (f(a)?, f(b)?);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoSignChange { samples: vec![(a, fa), (b, fb)] });
    }
    while b - a > tol {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x.powi(5) - 3.0 * x * x, -1.0, 2.0, 1e-12).unwrap();
        assert!((r.value - (63.0 / 6.0 - 9.0)).abs() < 1e-13);
    }

    #[test]
    fn gaussian_mass() {
        let r = integrate(|x| (-x * x).exp(), -10.0, 10.0, 1e-12).unwrap();
        assert!((r.value - std::f64::consts::PI.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn kink_with_break() {
        let r = integrate_with_breaks(|x: f64| (x - 0.3).abs(), 0.0, 1.0, &[0.3], 1e-12).unwrap();
        assert!((r.value - (0.045 + 0.245)).abs() < 1e-14);
    }

    #[test]
    fn bisection() {
        let r = bisect(|x| Ok(x * x - 2.0), 0.0, 2.0, 1e-12).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-11);
        assert!(matches!(
            bisect(|x| Ok(x * x + 1.0), -1.0, 1.0, 1e-6),
            Err(Error::NoSignChange { .. })
        ));
    }
}
