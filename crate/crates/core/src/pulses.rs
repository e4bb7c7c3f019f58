//! Drive-amplitude ramps and the trajectories derived from them.
//!
//! The reference ramp is `Omega0(t) = Omega_i + (Omega_f - Omega_i) g(t/T)`
//! with the quintic smoothstep `g(s) = 10 s^3 - 15 s^4 + 6 s^5`, whose first
//! and second derivatives vanish at both ends. Every derived quantity
//! (fast-forward drive, counter-diabatic drive, displacements) is evaluated
//! in closed form.

use alloc::format;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::units;

/// Smoothstep polynomial and its companions at `s = t / T`.
///
/// `g_integral` and `w_integral` are the antiderivatives divided by `T`,
/// i.e. `G(t) / T` and `W(t) / T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Smoothstep {
    pub g: f64,
    /// dg/ds
    pub dg: f64,
    /// d²g/ds², equal to `60 w`.
    pub d2g: f64,
    pub g_integral: f64,
    pub w: f64,
    pub w_integral: f64,
}

pub fn smoothstep(s: f64) -> Result<Smoothstep> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::OutOfRange {
            what: "s",
            value: s,
            min: 0.0,
            max: 1.0,
        });
    }
    Ok(smoothstep_unchecked(s))
}

#[inline]
pub(crate) fn smoothstep_unchecked(s: f64) -> Smoothstep {
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let u = 1.0 - s;
    let w = s * u * (1.0 - 2.0 * s);
    Smoothstep {
        g: s3 * (10.0 - 15.0 * s + 6.0 * s2),
        dg: 30.0 * s2 * u * u,
        d2g: 60.0 * w,
        g_integral: s4 * (2.5 - 3.0 * s + s2),
        w,
        // s^2 (1 - s)^2 / 2
        w_integral: 0.5 * s2 * u * u,
    }
}

/// A drive-amplitude ramp problem. Rates in rad/ns, times in ns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampSpec {
    pub omega_i: f64,
    pub omega_f: f64,
    pub t_ramp: f64,
    pub delta: f64,
}

/// Closed-form trajectory values at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampSample {
    pub t: f64,
    pub omega0: f64,
    pub omega0_dot: f64,
    pub omega0_ddot: f64,
    pub omega_ff: f64,
    pub alpha0: f64,
    /// `alpha0_dot / delta`, the imaginary part of `alpha_tilde`.
    pub alpha0_dot_over_delta: f64,
    /// `alpha0_ddot / delta^2 = alpha_ff - alpha0`.
    pub alpha0_ddot_over_delta2: f64,
    pub alpha_ff: f64,
    /// Displacement of the fast-forwarded state, `alpha0 + i alpha0_dot / delta`.
    pub alpha_tilde: Complex64,
    /// Counter-diabatic drive `omega0 - i omega0_dot / delta`.
    pub omega_cd: Complex64,
}

impl RampSpec {
    pub fn new(omega_i: f64, omega_f: f64, t_ramp: f64, delta: f64) -> Result<Self> {
        let spec = Self {
            omega_i,
            omega_f,
            t_ramp,
            delta,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Same as [`RampSpec::new`] with frequencies given as ν in MHz.
    pub fn from_mhz(omega_i_mhz: f64, omega_f_mhz: f64, t_ramp: f64, delta_mhz: f64) -> Result<Self> {
        Self::new(
            units::mhz(omega_i_mhz),
            units::mhz(omega_f_mhz),
            t_ramp,
            units::mhz(delta_mhz),
        )
    }

    fn validate(&self) -> Result<()> {
        let finite = [self.omega_i, self.omega_f, self.t_ramp, self.delta]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Domain(format!("ramp parameters must be finite: {self:?}")));
        }
        if self.t_ramp <= 0.0 {
            return Err(Error::Domain(format!("t_ramp must be > 0, got {}", self.t_ramp)));
        }
        if self.delta == 0.0 {
            return Err(Error::Domain("delta must be nonzero".into()));
        }
        Ok(())
    }

    pub fn sample(&self, t: f64) -> Result<RampSample> {
        if !(0.0..=self.t_ramp).contains(&t) {
            return Err(Error::OutOfRange {
                what: "t",
                value: t,
                min: 0.0,
                max: self.t_ramp,
            });
        }
        Ok(self.sample_clamped(t))
    }

    /// Samples at `t` clamped into `[0, t_ramp]`. Integrator stage times may
    /// overshoot the end by rounding.
    pub fn sample_clamped(&self, t: f64) -> RampSample {
        let t = t.clamp(0.0, self.t_ramp);
        let s = smoothstep_unchecked(t / self.t_ramp);
        let span = self.omega_f - self.omega_i;
        let d = self.delta;
        let omega0 = self.omega_i + span * s.g;
        let omega0_dot = span * s.dg / self.t_ramp;
        let omega0_ddot = span * s.d2g / (self.t_ramp * self.t_ramp);
        let omega_ff = omega0 + omega0_ddot / (d * d);
        RampSample {
            t,
            omega0,
            omega0_dot,
            omega0_ddot,
            omega_ff,
            alpha0: omega0 / d,
            alpha0_dot_over_delta: omega0_dot / (d * d),
            alpha0_ddot_over_delta2: omega0_ddot / (d * d * d),
            alpha_ff: omega_ff / d,
            alpha_tilde: Complex64::new(omega0 / d, omega0_dot / (d * d)),
            omega_cd: Complex64::new(omega0, -omega0_dot / d),
        }
    }

    /// Fast-forward phase rate `b = alpha_ff * alpha0_ddot / delta` (rad/ns).
    pub fn phase_rate(&self, t: f64) -> f64 {
        let s = self.sample_clamped(t);
        s.alpha_ff * s.omega0_ddot / (self.delta * self.delta)
    }

    /// Largest displacement magnitude visited by the reference, fast-forward
    /// and fast-forwarded trajectories, from a dense scan.
    pub fn max_displacement(&self) -> f64 {
        let n = 2000;
        (0..=n)
            .map(|k| {
                let s = self.sample_clamped(self.t_ramp * k as f64 / n as f64);
                s.alpha0
                    .abs()
                    .max(s.alpha_ff.abs())
                    .max(s.alpha_tilde.norm())
            })
            .fold(0.0, f64::max)
    }
}

/// `RampSpec::sample`, as a free function.
pub fn sample_ramp(spec: &RampSpec, t: f64) -> Result<RampSample> {
    spec.sample(t)
}

/// Boundary values of the ramp and its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryReport {
    pub omega0_start: f64,
    pub omega0_end: f64,
    pub omega0_dot_start: f64,
    pub omega0_dot_end: f64,
    pub omega0_ddot_start: f64,
    pub omega0_ddot_end: f64,
    /// `max |d²Omega0/dt²|` over the ramp, attained at `s = 1/2 ± sqrt(3)/6`.
    pub max_abs_omega0_ddot: f64,
}

impl BoundaryReport {
    /// True when all four boundary derivatives are exactly zero.
    pub fn derivatives_vanish(&self) -> bool {
        self.omega0_dot_start == 0.0
            && self.omega0_dot_end == 0.0
            && self.omega0_ddot_start == 0.0
            && self.omega0_ddot_end == 0.0
    }
}

pub fn verify_boundaries(spec: &RampSpec) -> BoundaryReport {
    let a = spec.sample_clamped(0.0);
    let b = spec.sample_clamped(spec.t_ramp);
    // w(s) = s(1-s)(1-2s) peaks in magnitude at s = 1/2 - sqrt(3)/6.
    let s_peak = 0.5 - 3f64.sqrt() / 6.0;
    let peak = spec.sample_clamped(s_peak * spec.t_ramp);
    BoundaryReport {
        omega0_start: a.omega0,
        omega0_end: b.omega0,
        omega0_dot_start: a.omega0_dot,
        omega0_dot_end: b.omega0_dot,
        omega0_ddot_start: a.omega0_ddot,
        omega0_ddot_end: b.omega0_ddot,
        max_abs_omega0_ddot: peak.omega0_ddot.abs(),
    }
}
