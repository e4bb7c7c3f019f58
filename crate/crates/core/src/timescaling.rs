//! Fast-forward plus time-scaling detuning schedules at fixed drive amplitude.
//!
//! The reference is a fast-forward ramp from `Omega_i` to
//! `Omega_i * Delta_i / Delta_f` at detuning `Delta_i`. Running it on the
//! scaled clock `Lambda(t)` with `dLambda/dt = Omega_i / Omega_ff(Lambda)`
//! turns the drive constant and moves all modulation into the detuning
//! `Delta_i * Omega_i / Omega_ff(Lambda(t))`.
//!
//! `Lambda(t)` is the root of
//! `Lambda + (r - 1) [G(Lambda) + 60 W(Lambda) / (Delta_i^2 T^2)] = t`,
//! `r = Delta_i / Delta_f`, whose left side is strictly increasing exactly
//! when the fast-forward drive stays positive relative to `Omega_i`.

use alloc::format;


use crate::error::{Error, Result};
use crate::pulses::{smoothstep_unchecked, RampSpec};

/// Points in the construction-time feasibility scan.
pub const FEASIBILITY_GRID: usize = 1001;

pub const DEFAULT_SOLVER_TOL: f64 = 1e-12;

const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledClock {
    pub delta_i: f64,
    pub delta_f: f64,
    pub omega_i: f64,
    /// Reference duration `T`.
    pub t_ramp: f64,
    /// Wall-clock duration `(Delta_i / Delta_f + 1) T / 2`.
    pub t_final: f64,
    pub solver_tol: f64,
}

pub fn make_clock(
    delta_i: f64,
    delta_f: f64,
    omega_i: f64,
    t_ramp: f64,
    solver_tol: f64,
) -> Result<ScaledClock> {
    ScaledClock::new(delta_i, delta_f, omega_i, t_ramp, solver_tol)
}

impl ScaledClock {
    pub fn new(
        delta_i: f64,
        delta_f: f64,
        omega_i: f64,
        t_ramp: f64,
        solver_tol: f64,
    ) -> Result<Self> {
        if ![delta_i, delta_f, omega_i, t_ramp, solver_tol]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::Domain("clock parameters must be finite".into()));
        }
        if delta_i == 0.0 || delta_f == 0.0 || delta_i.signum() != delta_f.signum() {
            return Err(Error::Domain(format!(
                "detunings must be nonzero with the same sign, got {delta_i} and {delta_f}"
            )));
        }
        if omega_i == 0.0 {
            return Err(Error::Domain("drive amplitude must be nonzero".into()));
        }
        if t_ramp <= 0.0 {
            return Err(Error::Domain(format!("t_ramp must be > 0, got {t_ramp}")));
        }
        if solver_tol <= 0.0 {
            return Err(Error::Domain(format!("solver_tol must be > 0, got {solver_tol}")));
        }
        let clock = Self {
            delta_i,
            delta_f,
            omega_i,
            t_ramp,
            t_final: 0.5 * (delta_i / delta_f + 1.0) * t_ramp,
            solver_tol,
        };
        clock.check_feasible()?;
        Ok(clock)
    }

    /// `Delta_i / Delta_f`.
    pub fn ratio(&self) -> f64 {
        self.delta_i / self.delta_f
    }

    /// The fast-forward reference ramp the clock runs through.
    pub fn reference_ramp(&self) -> RampSpec {
        RampSpec {
            omega_i: self.omega_i,
            omega_f: self.omega_i * self.ratio(),
            t_ramp: self.t_ramp,
            delta: self.delta_i,
        }
    }

    fn curvature_weight(&self) -> f64 {
        60.0 / (self.delta_i * self.delta_i * self.t_ramp * self.t_ramp)
    }

    /// `Omega_ff(Lambda) / Omega_i`, the derivative of the clock equation.
    pub fn drive_ratio(&self, lambda: f64) -> f64 {
        let s = smoothstep_unchecked((lambda / self.t_ramp).clamp(0.0, 1.0));
        1.0 + (self.ratio() - 1.0) * (s.g + self.curvature_weight() * s.w)
    }

    /// Left side of the clock equation at `lambda`.
    pub fn clock_equation(&self, lambda: f64) -> f64 {
        let s = smoothstep_unchecked((lambda / self.t_ramp).clamp(0.0, 1.0));
        lambda
            + (self.ratio() - 1.0)
                * self.t_ramp
                * (s.g_integral + self.curvature_weight() * s.w_integral)
    }

    fn check_feasible(&self) -> Result<()> {
        let n = FEASIBILITY_GRID - 1;
        let at = |k: usize| self.t_ramp * k as f64 / n as f64;
        let mut prev = 0.0;
        for k in 0..=n {
            let lambda = at(k);
            if self.drive_ratio(lambda) <= 0.0 {
                // Localize the sign change between the last good sample and here.
                let (mut lo, mut hi) = (prev, lambda);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if self.drive_ratio(mid) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return Err(Error::InfeasibleSchedule {
                    lambda: hi,
                    omega_ff: self.omega_i * self.drive_ratio(hi),
                });
            }
            prev = lambda;
        }
        Ok(())
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.t_final).contains(&t) {
            return Err(Error::OutOfRange {
                what: "t",
                value: t,
                min: 0.0,
                max: self.t_final,
            });
        }
        Ok(())
    }

    /// Scaled reference time `Lambda(t)`.
    pub fn lambda_of(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        self.solve(t)
    }

    /// `Lambda(t)` with `t` clamped into `[0, t_final]`, for use inside
    /// Hamiltonian coefficient functions.
    pub fn lambda_clamped(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.t_final);
        match self.solve(t) {
            Ok(l) => l,
            Err(_) => unreachable!("clock equation is monotone on a validated clock"),
        }
    }

    fn solve(&self, t: f64) -> Result<f64> {
        if t == 0.0 {
            return Ok(0.0);
        }
        if t == self.t_final {
            return Ok(self.t_ramp);
        }
        let target_tol = self.solver_tol * self.t_final;
        let (mut lo, mut hi) = (0.0, self.t_ramp);
        let mut x = t * self.t_ramp / self.t_final;
        let mut residual = f64::INFINITY;
        for _ in 0..MAX_ITERATIONS {
            residual = self.clock_equation(x) - t;
            if residual.abs() <= target_tol {
                return Ok(x);
            }
            if residual > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let newton = x - residual / self.drive_ratio(x);
            x = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= f64::EPSILON * self.t_ramp {
                residual = self.clock_equation(x) - t;
                if residual.abs() <= target_tol {
                    return Ok(x);
                }
                break;
            }
        }
        Err(Error::SolverNonConvergence { t, residual })
    }

    /// `S(t) = Omega_i / Omega_ff(Lambda(t)) = dLambda/dt`.
    pub fn scaling_factor(&self, t: f64) -> Result<f64> {
        Ok(1.0 / self.drive_ratio(self.lambda_of(t)?))
    }

    /// Detuning schedule `Delta_i * S(t)`.
    pub fn delta_ff_ts(&self, t: f64) -> Result<f64> {
        Ok(self.delta_i * self.scaling_factor(t)?)
    }

    pub fn scaling_factor_clamped(&self, t: f64) -> f64 {
        1.0 / self.drive_ratio(self.lambda_clamped(t))
    }

    pub fn delta_ff_ts_clamped(&self, t: f64) -> f64 {
        self.delta_i * self.scaling_factor_clamped(t)
    }
}

pub fn lambda_of(clock: &ScaledClock, t: f64) -> Result<f64> {
    clock.lambda_of(t)
}

pub fn delta_ff_ts(clock: &ScaledClock, t: f64) -> Result<f64> {
    clock.delta_ff_ts(t)
}

pub fn scaling_factor(clock: &ScaledClock, t: f64) -> Result<f64> {
    clock.scaling_factor(t)
}
