//! Adaptive Simpson quadrature with Richardson correction.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 48;

/// `∫_a^b f` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut ok = true;
    let v = refine(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH, &mut ok);
    if ok && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Quadrature { a, b, estimate: v })
    }
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    ok: &mut bool,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 {
        *ok = false;
        return left + right + diff / 15.0;
    }
    // Force a few levels so a smooth integrand cannot fool the first test.
    if depth <= MAX_DEPTH - 3 && diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, ok)
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, ok)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn polynomials_and_transcendentals() {
        let v = integrate(|x| 3.0 * x * x, 0.0, 2.0, 1e-12).unwrap();
        assert_abs_diff_eq!(v, 8.0, epsilon = 1e-12);
        let v = integrate(|x: f64| x.sin(), 0.0, core::f64::consts::PI, 1e-11).unwrap();
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-10);
        let v = integrate(|x: f64| (-x * x).exp(), -6.0, 6.0, 1e-11).unwrap();
        assert_abs_diff_eq!(v, core::f64::consts::PI.sqrt(), epsilon = 1e-10);
        assert_eq!(integrate(|x| x, 1.0, 1.0, 1e-10).unwrap(), 0.0);
        let v = integrate(|x| x, 1.0, 0.0, 1e-12).unwrap();
        assert_abs_diff_eq!(v, -0.5, epsilon = 1e-14);
    }

    #[test]
    fn non_integrable_singularity_reports_error() {
        assert!(integrate(|x: f64| 1.0 / x, 0.0, 1.0, 1e-10).is_err());
    }
}
