//! Closed-form kernels `F`, `H` and the auxiliary function `Pi`.

use super::bessel::{i0, i1_ratio};
use crate::error::{Error, Result};

const PI_TOL: f64 = 1e-12;
const MAX_DEPTH: usize = 50;

/// `Pi(s1, s2) = e^{s1+s2} (1 - s2 e^{-s1} int_0^1 e^{-tau s2} I0(2 sqrt(tau s1 s2)) dtau)`.
///
/// Valid whenever `s1 s2 >= 0`.
pub fn pi_func(s1: f64, s2: f64) -> Result<f64> {
    if !(s1.is_finite() && s2.is_finite()) {
        return Err(Error::KernelDomain(format!("Pi({s1}, {s2})")));
    }
    if s1 * s2 < 0.0 {
        return Err(Error::KernelDomain(format!("Pi needs s1 s2 >= 0, got ({s1}, {s2})")));
    }
    if s2 == 0.0 {
        return Ok(s1.exp());
    }
    let p = s1 * s2;
    let g = |tau: f64| (-tau * s2).exp() * i0(2.0 * (tau * p).max(0.0).sqrt());
    let integral = adaptive_simpson(&g, 0.0, 1.0, PI_TOL)?;
    Ok((s1 + s2).exp() * (1.0 - s2 * (-s1).exp() * integral))
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: usize) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if diff.abs() <= 15.0 * tol {
        return Ok(left + right + diff / 15.0);
    }
    if depth == 0 {
        return Err(Error::QuadratureFailure { tol, max_depth: MAX_DEPTH });
    }
    Ok(simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// Coefficients of one `F`/`H` family on `{0 <= y <= x <= 1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FhParams {
    pub q1: f64,
    pub q2: f64,
    pub d1: f64,
    pub d2: f64,
    pub p: f64,
}

impl FhParams {
    pub fn new(q1: f64, q2: f64, d1: f64, d2: f64, p: f64) -> Result<Self> {
        if !(q1 > 0.0 && q2 > 0.0) {
            return Err(Error::NonpositiveSpeed { q1, q2 });
        }
        if p == 0.0 {
            return Err(Error::KernelDomain("boundary reflection p = 0".into()));
        }
        // outside this regime the Bessel argument turns imaginary
        if d1 * d2 < 0.0 {
            return Err(Error::KernelDomain(format!("d1 d2 < 0 (d1 = {d1}, d2 = {d2})")));
        }
        Ok(FhParams { q1, q2, d1, d2, p })
    }

    /// `(F(x, y), H(x, y))`.
    pub fn eval(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let FhParams { q1, q2, d1, d2, p } = *self;
        let rho = q1 / q2;
        let qs = q1 + q2;
        let dm = (x - y).max(0.0);
        let dp = rho * x + y;
        let a = 2.0 * (d1 * d2).sqrt() / qs * (dm * dp).sqrt();
        let s1 = p * q1 * d2 / q2 * dm / qs;
        let s2 = d1 / (p * q1) * (q1 * x + q2 * y) / qs;
        let big_pi = pi_func(s1, s2)?;
        let ia0 = i0(a);
        let r = i1_ratio(a);
        let f = -1.0 / (p * qs)
            * (d1 * q2 / (p * q1) * ia0 + d1 * d2 * dm / qs * r + (p * d2 - d1 * q2 / (p * q1)) * big_pi);
        let h = -1.0 / qs * (d1 / p * ia0 + d1 * d2 * dp / qs * r + (p * d2 * q1 / q2 - d1 / p) * big_pi);
        Ok((f, h))
    }
}

pub fn eval_fh(params: &FhParams, x: f64, y: f64) -> Result<(f64, f64)> {
    params.eval(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pi_edge_cases() {
        assert_relative_eq!(pi_func(0.7, 0.0).unwrap(), 0.7f64.exp());
        assert_relative_eq!(pi_func(0.0, 1.3).unwrap(), 1.0, max_relative = 1e-12);
        assert!(pi_func(1.0, -1.0).is_err());
    }

    #[test]
    fn pi_one_one() {
        // scipy.integrate.quad at epsabs 1e-14
        assert_relative_eq!(pi_func(1.0, 1.0).unwrap(), PI_ONE_ONE, max_relative = 1e-11);
    }

    const PI_ONE_ONE: f64 = 4.834_320_700_633_359;

    #[test]
    fn diagonal_and_boundary() {
        for &(q1, q2, d1, d2, p) in &[(1.0, 1.0, 1.0, 1.0, 1.0), (1.0, 2.0, 0.7, 1.3, 0.8), (2.0, 1.0, 3.0, 2.0, 1.5)] {
            let k = FhParams::new(q1, q2, d1, d2, p).unwrap();
            let (f, _) = k.eval(0.4, 0.4).unwrap();
            assert_relative_eq!(f, -d2 / (q1 + q2), max_relative = 1e-12);
            let (f0, h0) = k.eval(0.6, 0.0).unwrap();
            assert!((q2 * h0 - q1 * p * f0).abs() < 1e-11);
        }
    }

    #[test]
    fn uncoupled_is_zero() {
        let k = FhParams::new(3.0, 2.0, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(k.eval(0.5, 0.25).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn pde_residual_by_differences() {
        let k = FhParams::new(1.0, 2.0, 0.7, 1.3, 0.8).unwrap();
        let h = 1e-5;
        for &(x, y) in &[(0.5, 0.25), (0.8, 0.1), (0.9, 0.6)] {
            let (f, hh) = k.eval(x, y).unwrap();
            let d = |dx: f64, dy: f64| k.eval(x + dx, y + dy).unwrap();
            let fx = (d(h, 0.0).0 - d(-h, 0.0).0) / (2.0 * h);
            let fy = (d(0.0, h).0 - d(0.0, -h).0) / (2.0 * h);
            let hx = (d(h, 0.0).1 - d(-h, 0.0).1) / (2.0 * h);
            let hy = (d(0.0, h).1 - d(0.0, -h).1) / (2.0 * h);
            assert!((2.0 * fx - fy - 1.3 * hh).abs() < 1e-7);
            assert!((2.0 * (hx + hy) - 0.7 * f).abs() < 1e-7);
        }
    }
}
