//! Dormand–Prince 5(4) embedded Runge–Kutta for complex linear systems.
//!
//! Fifth-order propagation with a fourth-order embedded error estimate,
//! first-same-as-last stage reuse, and standard step-size control on the
//! RMS of `|err_i| / (atol + rtol * max(|y_i|, |y_new_i|))`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Fifth-order weights minus embedded fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rel: 1e-10,
            abs: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

/// Integrates `dy/dt = f(t, y)` from `t0` to `t1`.
///
/// `f(t, y, dy)` must overwrite `dy`. Every time in `stops` (ascending,
/// inside `[t0, t1]`) is hit exactly and reported through `on_stop`; so is
/// every accepted step through `on_step`.
#[allow(clippy::too_many_arguments)]
pub fn integrate<F, S, P>(
    mut f: F,
    t0: f64,
    t1: f64,
    y0: &[Complex64],
    tol: Tolerances,
    stops: &[f64],
    mut on_stop: S,
    mut on_step: P,
) -> Result<(Vec<Complex64>, StepStats)>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
    S: FnMut(f64, &[Complex64]),
    P: FnMut(f64, &[Complex64]),
{
    let n = y0.len();
    let mut stats = StepStats::default();
    let mut y = y0.to_vec();
    let mut stop_iter = stops.iter().copied().peekable();
    while let Some(&s) = stop_iter.peek() {
        if s <= t0 {
            on_stop(s, &y);
            stop_iter.next();
        } else {
            break;
        }
    }
    if t1 <= t0 {
        return Ok((y, stats));
    }

    let zero = Complex64::new(0.0, 0.0);
    let mut k1 = vec![zero; n];
    let mut k2 = vec![zero; n];
    let mut k3 = vec![zero; n];
    let mut k4 = vec![zero; n];
    let mut k5 = vec![zero; n];
    let mut k6 = vec![zero; n];
    let mut k7 = vec![zero; n];
    let mut tmp = vec![zero; n];
    let mut y_new = vec![zero; n];

    f(t0, &y, &mut k1);
    stats.rhs_evals += 1;

    let mut t = t0;
    let mut h = initial_step(&y, &k1, tol, t1 - t0);
    let max_steps = 50_000_000usize;

    while t < t1 {
        if stats.accepted + stats.rejected >= max_steps {
            return Err(Error::StepUnderflow { t, h });
        }
        let next_stop = stop_iter.peek().copied().unwrap_or(t1).min(t1);
        let mut step = h;
        let mut lands = false;
        // Also absorb a sliver that would otherwise be left before the stop.
        if t + 1.0001 * step >= next_stop {
            step = next_stop - t;
            lands = true;
        }
        if step <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
            if lands {
                // Degenerate gap between consecutive stops; snap.
                t = next_stop;
                while stop_iter.peek().is_some_and(|&s| s <= t) {
                    on_stop(t, &y);
                    stop_iter.next();
                }
                continue;
            }
            return Err(Error::StepUnderflow { t, h: step });
        }

        for i in 0..n {
            tmp[i] = y[i] + step * A21 * k1[i];
        }
        f(t + C2 * step, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + step * (A31 * k1[i] + A32 * k2[i]);
        }
        f(t + C3 * step, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + step * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(t + C4 * step, &tmp, &mut k4);
        for i in 0..n {
            tmp[i] = y[i] + step * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(t + C5 * step, &tmp, &mut k5);
        for i in 0..n {
            tmp[i] = y[i]
                + step * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let t_new = if lands { next_stop } else { t + step };
        f(t + step, &tmp, &mut k6);
        for i in 0..n {
            y_new[i] = y[i]
                + step * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f(t_new, &y_new, &mut k7);
        stats.rhs_evals += 6;

        let mut acc = 0.0;
        for i in 0..n {
            let e = step
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = tol.abs + tol.rel * y[i].norm().max(y_new[i].norm());
            let r = e.norm() / sc;
            acc += r * r;
        }
        let err = (acc / n as f64).sqrt();

        if err <= 1.0 {
            stats.accepted += 1;
            t = t_new;
            core::mem::swap(&mut y, &mut y_new);
            core::mem::swap(&mut k1, &mut k7);
            on_step(t, &y);
            if lands {
                while stop_iter.peek().is_some_and(|&s| s <= t) {
                    on_stop(t, &y);
                    stop_iter.next();
                }
            }
            let fac = if err == 0.0 {
                FAC_MAX
            } else {
                (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, FAC_MAX)
            };
            // A step shortened to land on a stop says nothing about h.
            let grown = step * fac;
            h = if lands { h.max(grown) } else { grown };
        } else {
            stats.rejected += 1;
            let fac = if err.is_finite() {
                (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0)
            } else {
                FAC_MIN
            };
            h = step * fac;
        }
    }
    Ok((y, stats))
}

fn initial_step(y: &[Complex64], dy: &[Complex64], tol: Tolerances, span: f64) -> f64 {
    let n = y.len() as f64;
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for (a, b) in y.iter().zip(dy) {
        let sc = tol.abs + tol.rel * a.norm();
        d0 += (a.norm() / sc).powi(2);
        d1 += (b.norm() / sc).powi(2);
    }
    let d0 = (d0 / n).sqrt();
    let d1 = (d1 / n).sqrt();
    let h = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h.min(span)
}
