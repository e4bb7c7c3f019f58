//! Two Kerr parametric oscillators coupled through a tunable linear coupler.
//!
//! Mode order is always (KPO 1, KPO 2, coupler). Logical bit `k` of KPO `j`
//! selects the coherent state `|(-1)^k alpha_j>`, and the coupler sits at the
//! displacement those amplitudes induce.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fockspace::{
    coherent_state, coherent_tail_mass, fidelity, fidelity_with_density, lowering_operator,
    number_operator, tensor, FockVector, ModeOperator,
};
use crate::integrator::{StepStats, Tolerances};
use crate::operator::ProductOperator;
use crate::propagator::{
    evolve, linear_detuning, max_classical_displacement, resonator_hamiltonian, ClassicalTerm,
    Coefficient, ComplexFn, EvolveOptions, HamiltonianSchedule, RealFn,
};
use crate::quadrature;
use crate::timescaling::{ScaledClock, DEFAULT_SOLVER_TOL};
use crate::units::mhz;

/// Tail mass allowed by the automatic truncation of the three-mode runs.
pub const KPO_TAIL_MASS: f64 = 1e-12;

/// Smallest coupler truncation chosen automatically.
pub const MIN_COUPLER_DIM: usize = 12;

const QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KpoSystemSpec {
    pub kerr: [f64; 2],
    pub pump: [f64; 2],
    pub g_1c: f64,
    pub g_2c: f64,
    pub g_12: f64,
    pub delta_i: f64,
    pub delta_f: f64,
    /// Per-mode truncations; `None` picks one per run.
    pub dims: [Option<usize>; 3],
}

impl KpoSystemSpec {
    pub fn new(
        kerr: [f64; 2],
        pump: [f64; 2],
        g_1c: f64,
        g_2c: f64,
        g_12: f64,
        delta_i: f64,
        delta_f: f64,
    ) -> Result<Self> {
        let spec = Self {
            kerr,
            pump,
            g_1c,
            g_2c,
            g_12,
            delta_i,
            delta_f,
            dims: [None; 3],
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Parameters in MHz (ν = ω/2π).
    #[allow(clippy::too_many_arguments)]
    pub fn from_mhz(
        kerr: [f64; 2],
        pump: [f64; 2],
        g_1c: f64,
        g_2c: f64,
        g_12: f64,
        delta_i: f64,
        delta_f: f64,
    ) -> Result<Self> {
        Self::new(
            kerr.map(mhz),
            pump.map(mhz),
            mhz(g_1c),
            mhz(g_2c),
            mhz(g_12),
            mhz(delta_i),
            mhz(delta_f),
        )
    }

    /// K = 2, p = 8, g_jc = 2, g_12 = 0.02, Δ_c from 200 to 20 (all MHz).
    pub fn reference_device() -> Self {
        Self::from_mhz([2.0, 2.0], [8.0, 8.0], 2.0, 2.0, 0.02, 200.0, 20.0)
            .expect("reference parameters are valid")
    }

    pub fn with_dims(mut self, dims: [Option<usize>; 3]) -> Self {
        self.dims = dims;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.kerr[0],
            self.kerr[1],
            self.pump[0],
            self.pump[1],
            self.g_1c,
            self.g_2c,
            self.g_12,
            self.delta_i,
            self.delta_f,
        ];
        if !all.iter().all(|v| v.is_finite()) {
            return Err(Error::Domain("KPO parameters must be finite".into()));
        }
        for j in 0..2 {
            if self.kerr[j] <= 0.0 {
                return Err(Error::Domain(format!("kerr[{j}] must be > 0")));
            }
            if self.pump[j] < 0.0 {
                return Err(Error::Domain(format!("pump[{j}] must be >= 0")));
            }
        }
        if self.delta_i == 0.0 || self.delta_f == 0.0 {
            return Err(Error::Domain("coupler detunings must be nonzero".into()));
        }
        let [a1, a2] = self.alphas();
        let (l, r) = (self.g_1c * a1, self.g_2c * a2);
        if (l - r).abs() > 1e-12 * l.abs().max(r.abs()) {
            return Err(Error::Domain(format!(
                "balance condition g_1c alpha_1 = g_2c alpha_2 violated ({l} vs {r})"
            )));
        }
        if let Some(j) = self.dims.iter().position(|d| matches!(d, Some(n) if *n < 2)) {
            return Err(Error::InvalidDimension {
                dim: self.dims[j].unwrap_or(0),
                reason: "mode truncation must be at least 2",
            });
        }
        Ok(())
    }

    /// `alpha_j = sqrt(p_j / K_j)`.
    pub fn alphas(&self) -> [f64; 2] {
        [0, 1].map(|j| (self.pump[j] / self.kerr[j]).sqrt())
    }

    fn couplings(&self) -> [f64; 2] {
        [self.g_1c, self.g_2c]
    }

    /// `g_1c alpha_1 + g_2c alpha_2`, the drive the coupler sees in `|~1,1>`.
    pub fn coupler_drive(&self) -> f64 {
        let [a1, a2] = self.alphas();
        self.g_1c * a1 + self.g_2c * a2
    }

    /// `E0 = sum_j K_j alpha_j^4 / 2`.
    pub fn e0(&self) -> f64 {
        let a = self.alphas();
        (0..2).map(|j| self.kerr[j] * a[j].powi(4) / 2.0).sum()
    }

    /// `E1(Delta_c) = 2 alpha_1 alpha_2 (g_12 - g_1c g_2c / Delta_c)`.
    pub fn e1(&self, delta_c: f64) -> f64 {
        let [a1, a2] = self.alphas();
        2.0 * a1 * a2 * (self.g_12 - self.g_1c * self.g_2c / delta_c)
    }

    /// `Delta_c` at which the ZZ coupling vanishes, `g_1c g_2c / g_12`.
    pub fn zz_free_detuning(&self) -> f64 {
        self.g_1c * self.g_2c / self.g_12
    }
}

fn check_detuning(delta_c: f64) -> Result<()> {
    if delta_c == 0.0 || !delta_c.is_finite() {
        return Err(Error::Domain(format!(
            "coupler detuning must be finite and nonzero, got {delta_c}"
        )));
    }
    Ok(())
}

fn check_bit(bit: u8) -> Result<f64> {
    match bit {
        0 => Ok(1.0),
        1 => Ok(-1.0),
        _ => Err(Error::Domain(format!("logical bit must be 0 or 1, got {bit}"))),
    }
}

/// `Delta_j = g_jc^2 / Delta_c` for both KPOs.
pub fn kpo_detuning(spec: &KpoSystemSpec, delta_c: f64) -> Result<[f64; 2]> {
    check_detuning(delta_c)?;
    Ok(spec.couplings().map(|g| g * g / delta_c))
}

/// `alpha_c^± = (g_1c alpha_1 ± g_2c alpha_2) / Delta_c`.
pub fn coupler_amplitude(spec: &KpoSystemSpec, delta_c: f64) -> Result<(f64, f64)> {
    check_detuning(delta_c)?;
    let [a1, a2] = spec.alphas();
    Ok((
        (spec.g_1c * a1 + spec.g_2c * a2) / delta_c,
        (spec.g_1c * a1 - spec.g_2c * a2) / delta_c,
    ))
}

/// Coupler displacement in the logical sector `(k, l)` at detuning `delta_c`.
pub fn sector_coupler_amplitude(spec: &KpoSystemSpec, k: u8, l: u8, delta_c: f64) -> Result<f64> {
    check_detuning(delta_c)?;
    let [a1, a2] = spec.alphas();
    let (s1, s2) = (check_bit(k)?, check_bit(l)?);
    Ok(-(spec.g_1c * s1 * a1 + spec.g_2c * s2 * a2) / delta_c)
}

/// Smallest truncation whose coherent tail mass is below [`KPO_TAIL_MASS`].
pub fn tight_dim(alpha_abs: f64) -> usize {
    let mut dim = 2;
    while coherent_tail_mass(alpha_abs, dim) >= KPO_TAIL_MASS {
        dim += 1;
    }
    dim
}

/// Resolves the truncation for a run whose coupler visits displacements up to
/// `coupler_max`.
pub fn resolve_dims(spec: &KpoSystemSpec, coupler_max: f64) -> [usize; 3] {
    let [a1, a2] = spec.alphas();
    let auto = [
        tight_dim(a1),
        tight_dim(a2),
        tight_dim(coupler_max).max(MIN_COUPLER_DIM),
    ];
    [0, 1, 2].map(|m| spec.dims[m].unwrap_or(auto[m]))
}

/// `|~k,l>` at `Delta_c = delta_i`.
pub fn logical_state(spec: &KpoSystemSpec, k: u8, l: u8, dims: [usize; 3]) -> Result<FockVector> {
    let [a1, a2] = spec.alphas();
    let (s1, s2) = (check_bit(k)?, check_bit(l)?);
    let c = sector_coupler_amplitude(spec, k, l, spec.delta_i)?;
    tensor(&[
        coherent_state(Complex64::new(s1 * a1, 0.0), dims[0])?,
        coherent_state(Complex64::new(s2 * a2, 0.0), dims[1])?,
        coherent_state(Complex64::new(c, 0.0), dims[2])?,
    ])
}

/// Three-mode Hamiltonian
/// `sum_j [-(K_j/2) a_j^dag2 a_j^2 + (p_j/2)(a_j^dag2 + a_j^2) + Delta_j a_j^dag a_j]
///  + Delta_c a_c^dag a_c + sum_j g_jc (a_j^dag a_c + h.c.) + g_12 (a_1^dag a_2 + h.c.)`.
pub fn full_hamiltonian(
    spec: &KpoSystemSpec,
    delta_c: RealFn,
    delta_kpo: [RealFn; 2],
    dims: [usize; 3],
    t_span: (f64, f64),
) -> Result<HamiltonianSchedule> {
    spec.validate()?;
    let [a1, a2] = spec.alphas();
    for (j, a) in [a1, a2].into_iter().enumerate() {
        let tail = coherent_tail_mass(a, dims[j]);
        if tail >= crate::fockspace::TAIL_MASS_LIMIT {
            return Err(Error::TruncationTooSmall {
                alpha_abs: a,
                dim: dims[j],
                tail_mass: tail,
                min_dim: crate::fockspace::min_adequate_dim(a),
            });
        }
    }
    let lower: Vec<ModeOperator> = dims
        .iter()
        .map(|&d| lowering_operator(d))
        .collect::<Result<_>>()?;
    let raise: Vec<ModeOperator> = lower.iter().map(ModeOperator::adjoint).collect();
    let mut h = HamiltonianSchedule::new(&dims, t_span)?;
    let [dk1, dk2] = delta_kpo;
    for (j, dk) in [(0usize, dk1), (1, dk2)] {
        let a2 = lower[j].mul(&lower[j]);
        let ad2 = raise[j].mul(&raise[j]);
        let kerr = ad2.mul(&a2);
        let pump = spec.pump[j] / 2.0;
        h = h
            .with_term(
                ProductOperator::embed(&dims, &[(j, &kerr)])?,
                Coefficient::Constant(-spec.kerr[j] / 2.0),
            )?
            .with_drive(
                ProductOperator::embed(&dims, &[(j, &ad2)])?,
                Arc::new(move |_| Complex64::new(pump, 0.0)),
            )?
            .with_term(
                ProductOperator::embed(&dims, &[(j, &number_operator(dims[j])?)])?,
                Coefficient::Varying(dk),
            )?;
        let g = spec.couplings()[j];
        h = h.with_drive(
            ProductOperator::embed(&dims, &[(j, &raise[j]), (2, &lower[2])])?,
            Arc::new(move |_| Complex64::new(g, 0.0)),
        )?;
    }
    let g12 = spec.g_12;
    h.with_term(
        ProductOperator::embed(&dims, &[(2, &number_operator(dims[2])?)])?,
        Coefficient::Varying(delta_c),
    )?
    .with_drive(
        ProductOperator::embed(&dims, &[(0, &raise[0]), (1, &lower[1])])?,
        Arc::new(move |_| Complex64::new(g12, 0.0)),
    )
}

/// [`full_hamiltonian`] with the KPO detunings slaved to `g_jc^2 / Delta_c(t)`.
pub fn slaved_hamiltonian(
    spec: &KpoSystemSpec,
    delta_c: RealFn,
    dims: [usize; 3],
    t_span: (f64, f64),
) -> Result<HamiltonianSchedule> {
    let [g1, g2] = spec.couplings();
    let d1 = delta_c.clone();
    let d2 = delta_c.clone();
    full_hamiltonian(
        spec,
        delta_c,
        [
            Arc::new(move |t| g1 * g1 / d1(t)),
            Arc::new(move |t| g2 * g2 / d2(t)),
        ],
        dims,
        t_span,
    )
}

/// Fast-forward coupler detuning over a full gate: the time-scaled schedule on
/// `[0, t_g/2]` and its mirror image on `[t_g/2, t_g]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplerSchedule {
    pub clock: ScaledClock,
    pub t_gate: f64,
}

impl CouplerSchedule {
    pub fn half(&self) -> f64 {
        self.clock.t_final
    }

    /// Mirrored wall-clock time mapped onto the first half.
    #[inline]
    fn fold(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.t_gate);
        if t <= self.half() {
            t
        } else {
            self.t_gate - t
        }
    }

    pub fn delta_c(&self, t: f64) -> f64 {
        self.clock.delta_ff_ts_clamped(self.fold(t))
    }

    /// `Lambda` of the folded time.
    pub fn lambda(&self, t: f64) -> f64 {
        self.clock.lambda_clamped(self.fold(t))
    }

    pub fn delta_fn(&self) -> RealFn {
        let s = *self;
        Arc::new(move |t| s.delta_c(t))
    }
}

/// Builds the gate-long coupler schedule for reference duration `t_ramp`.
pub fn coupler_schedule(spec: &KpoSystemSpec, t_ramp: f64) -> Result<CouplerSchedule> {
    spec.validate()?;
    let clock = ScaledClock::new(
        spec.delta_i,
        spec.delta_f,
        spec.coupler_drive(),
        t_ramp,
        DEFAULT_SOLVER_TOL,
    )?;
    Ok(CouplerSchedule {
        clock,
        t_gate: 2.0 * clock.t_final,
    })
}

/// Coupler-only Hamiltonian of sector `(k, l)` together with its scalar energy.
#[derive(Clone)]
pub struct EffectiveCoupler {
    /// `Delta_c (a^dag - x)(a - x) + E_{k,l}(t)`, scalar included.
    pub hamiltonian: HamiltonianSchedule,
    /// `E_{k,l}(t) = E0 ± E1(t)`.
    pub energy: RealFn,
}

/// `E_{k,l}(t)`: `E0 + E1` for equal bits, `E0 - E1` otherwise.
pub fn sector_energy(spec: &KpoSystemSpec, k: u8, l: u8, delta_c: RealFn) -> Result<RealFn> {
    let sign = check_bit(k)? * check_bit(l)?;
    let s = *spec;
    let e0 = spec.e0();
    Ok(Arc::new(move |t| e0 + sign * s.e1(delta_c(t))))
}

pub fn effective_coupler_hamiltonian(
    spec: &KpoSystemSpec,
    k: u8,
    l: u8,
    delta_c: RealFn,
    dim: usize,
    t_span: (f64, f64),
) -> Result<EffectiveCoupler> {
    spec.validate()?;
    let [a1, a2] = spec.alphas();
    let (s1, s2) = (check_bit(k)?, check_bit(l)?);
    let drive = -(spec.g_1c * s1 * a1 + spec.g_2c * s2 * a2);
    let energy = sector_energy(spec, k, l, delta_c.clone())?;
    let hamiltonian = resonator_hamiltonian(
        delta_c,
        Arc::new(move |_| Complex64::new(drive, 0.0)),
        dim,
        t_span,
        ClassicalTerm::Kept,
    )?
    .with_offset(energy.clone());
    Ok(EffectiveCoupler {
        hamiltonian,
        energy,
    })
}

fn integrate_piecewise(f: impl Fn(f64) -> f64, a: f64, b: f64, kink: f64) -> Result<f64> {
    if a < kink && kink < b {
        Ok(quadrature::integrate(&f, a, kink, QUAD_TOL)? + quadrature::integrate(&f, kink, b, QUAD_TOL)?)
    } else {
        quadrature::integrate(&f, a, b, QUAD_TOL)
    }
}

/// Phase-exact coupler state in sector `(k, k)` at gate time `t`.
///
/// On the first half the coupler sits at `±alpha_tilde(Lambda(t))`; on the
/// mirrored half it retraces the path with the conjugate amplitude.
pub fn analytic_coupler_state(
    spec: &KpoSystemSpec,
    k: u8,
    schedule: &CouplerSchedule,
    t: f64,
    dim: usize,
) -> Result<FockVector> {
    let sign = -check_bit(k)?;
    if !(0.0..=schedule.t_gate).contains(&t) {
        return Err(Error::OutOfRange {
            what: "gate time",
            value: t,
            min: 0.0,
            max: schedule.t_gate,
        });
    }
    let ramp = schedule.clock.reference_ramp();
    let energy = sector_energy(spec, k, k, schedule.delta_fn())?;
    let energy_phase = integrate_piecewise(|s| energy(s), 0.0, t, schedule.half())?;
    let lambda = schedule.lambda(t);
    let b = |s: f64| ramp.phase_rate(s);
    let (ff_phase, amp) = if t <= schedule.half() {
        (
            quadrature::integrate(b, 0.0, lambda, QUAD_TOL)?,
            ramp.sample(lambda)?.alpha_tilde,
        )
    } else {
        let full = quadrature::integrate(b, 0.0, ramp.t_ramp, QUAD_TOL)?;
        (
            full + quadrature::integrate(b, lambda, ramp.t_ramp, QUAD_TOL)?,
            ramp.sample(lambda)?.alpha_tilde.conj(),
        )
    };
    Ok(coherent_state(amp * sign, dim)?.scaled(Complex64::from_polar(1.0, -(energy_phase + ff_phase))))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateAngles {
    /// `Theta_ad = 2 ∫_0^{t_g} E1 dt`.
    pub theta_ad: f64,
    /// `theta_ff = E0 t_g + ∫_0^{Lambda(t_g/2)} b`.
    pub theta_ff_global: f64,
    /// `Theta_ff = Theta_ad + 2 ∫_0^{Lambda(t_g/2)} b`.
    pub theta_ff: f64,
    /// `∫_0^{Lambda(t_g/2)} b`.
    pub ff_phase: f64,
}

pub fn gate_angles(spec: &KpoSystemSpec, schedule: &CouplerSchedule) -> Result<GateAngles> {
    let s = *spec;
    let sched = *schedule;
    let e1_integral = integrate_piecewise(
        move |t| s.e1(sched.delta_c(t)),
        0.0,
        schedule.t_gate,
        schedule.half(),
    )?;
    let ramp = schedule.clock.reference_ramp();
    let ff_phase = quadrature::integrate(|x| ramp.phase_rate(x), 0.0, ramp.t_ramp, QUAD_TOL)?;
    let theta_ad = 2.0 * e1_integral;
    Ok(GateAngles {
        theta_ad,
        theta_ff_global: spec.e0() * schedule.t_gate + ff_phase,
        theta_ff: theta_ad + 2.0 * ff_phase,
        ff_phase,
    })
}

/// Coupler detuning used to carry the coupler from `delta_i` to `delta_f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    /// Fast-forward with time scaling.
    FfTs,
    /// Straight line in time.
    Linear,
}

impl ScheduleKind {
    pub fn name(self) -> &'static str {
        match self {
            ScheduleKind::FfTs => "ff_ts",
            ScheduleKind::Linear => "linear",
        }
    }
}

/// Coupler detuning over `[0, t_final]` for the chosen kind.
pub fn displacement_detuning(spec: &KpoSystemSpec, t_final: f64, kind: ScheduleKind) -> Result<RealFn> {
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::Domain(format!("t_f must be > 0, got {t_final}")));
    }
    Ok(match kind {
        ScheduleKind::FfTs => {
            let ratio = spec.delta_i / spec.delta_f;
            let t_ramp = 2.0 * t_final / (ratio + 1.0);
            let clock = ScaledClock::new(
                spec.delta_i,
                spec.delta_f,
                spec.coupler_drive(),
                t_ramp,
                DEFAULT_SOLVER_TOL,
            )?;
            Arc::new(move |t| clock.delta_ff_ts_clamped(t))
        }
        ScheduleKind::Linear => linear_detuning(spec.delta_i, spec.delta_f, t_final),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementOutcome {
    pub t_final: f64,
    pub kind: ScheduleKind,
    /// `1 - |<Psi(t_f)| -alpha_1, -alpha_2, sum_j alpha_j g_jc / Delta_f>|^2`.
    pub infidelity: f64,
    /// Fidelity of the coupler's reduced state with `|sum_j alpha_j g_jc / Delta_f>`.
    pub coupler_fidelity: f64,
    pub dims: [usize; 3],
    pub norm_drift: f64,
    pub step_stats: StepStats,
}

/// Simulates the three-mode system from `|~1,1>` over `[0, t_final]`.
pub fn run_displacement_point(
    spec: &KpoSystemSpec,
    t_final: f64,
    kind: ScheduleKind,
    tol: Tolerances,
) -> Result<DisplacementOutcome> {
    spec.validate()?;
    let delta_c = displacement_detuning(spec, t_final, kind)?;
    let drive: ComplexFn = {
        let d = spec.coupler_drive();
        Arc::new(move |_| Complex64::new(d, 0.0))
    };
    let start = spec.coupler_drive() / spec.delta_i;
    let end = spec.coupler_drive() / spec.delta_f;
    let excursion = max_classical_displacement(&delta_c, &drive, Complex64::new(start, 0.0), (0.0, t_final))?;
    let dims = resolve_dims(spec, excursion.max(end.abs()));
    let h = slaved_hamiltonian(spec, delta_c, dims, (0.0, t_final))?;
    let psi0 = logical_state(spec, 1, 1, dims)?;
    let run = evolve(&h, &psi0, &EvolveOptions::with_tol(tol))?;
    let [a1, a2] = spec.alphas();
    let coupler_target = coherent_state(Complex64::new(end, 0.0), dims[2])?;
    let target = tensor(&[
        coherent_state(Complex64::new(-a1, 0.0), dims[0])?,
        coherent_state(Complex64::new(-a2, 0.0), dims[1])?,
        coupler_target.clone(),
    ])?;
    let infidelity = 1.0 - fidelity(&target, &run.final_state)?;
    let rho = run.final_state.reduced_density_matrix(2);
    Ok(DisplacementOutcome {
        t_final,
        kind,
        infidelity,
        coupler_fidelity: fidelity_with_density(&rho, &coupler_target)?,
        dims,
        norm_drift: run.norm_drift,
        step_stats: run.step_stats,
    })
}

/// Runs every `t_f` in order.
pub fn run_displacement_experiment(
    spec: &KpoSystemSpec,
    t_final_values: &[f64],
    kind: ScheduleKind,
    tol: Tolerances,
) -> Result<Vec<DisplacementOutcome>> {
    t_final_values
        .iter()
        .map(|&t| run_displacement_point(spec, t, kind, tol))
        .collect()
}

#[cfg(test)]
mod tests {
    extern crate std;

    use super::*;
    use crate::fockspace::overlap;
    use crate::units::to_mhz;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    #[test]
    fn reference_device_amplitudes() {
        let spec = KpoSystemSpec::reference_device();
        let [a1, a2] = spec.alphas();
        assert_abs_diff_eq!(a1, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a2, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(to_mhz(spec.zz_free_detuning()), 200.0, epsilon = 1e-9);
        let (p, m) = coupler_amplitude(&spec, mhz(200.0)).unwrap();
        assert_abs_diff_eq!(p, 0.04, epsilon = 1e-14);
        assert_eq!(m, 0.0);
        let (p, _) = coupler_amplitude(&spec, mhz(20.0)).unwrap();
        assert_abs_diff_eq!(p, 0.4, epsilon = 1e-14);
        assert!(coupler_amplitude(&spec, 0.0).is_err());
    }

    #[test]
    fn kpo_detuning_values() {
        let spec = KpoSystemSpec::reference_device();
        let d = kpo_detuning(&spec, mhz(200.0)).unwrap();
        assert_abs_diff_eq!(to_mhz(d[0]), 0.02, epsilon = 1e-12);
        let d = kpo_detuning(&spec, mhz(20.0)).unwrap();
        assert_abs_diff_eq!(to_mhz(d[1]), 0.2, epsilon = 1e-12);
        assert!(kpo_detuning(&spec, 1e300).unwrap()[0] < 1e-300);
        assert!(kpo_detuning(&spec, 0.0).is_err());
    }

    #[test]
    fn unbalanced_spec_is_rejected() {
        assert!(KpoSystemSpec::from_mhz([2.0, 2.0], [8.0, 8.0], 2.0, 3.0, 0.02, 200.0, 20.0).is_err());
        assert!(KpoSystemSpec::from_mhz([0.0, 2.0], [8.0, 8.0], 2.0, 2.0, 0.02, 200.0, 20.0).is_err());
    }

    #[test]
    fn logical_state_overlaps() {
        let spec = KpoSystemSpec::reference_device();
        let dims = resolve_dims(&spec, 0.04);
        let s00 = logical_state(&spec, 0, 0, dims).unwrap();
        let s11 = logical_state(&spec, 1, 1, dims).unwrap();
        let (ac, _) = coupler_amplitude(&spec, spec.delta_i).unwrap();
        let want = (-4.0 * 4.0 - 4.0 * 4.0 - 4.0 * ac * ac).exp();
        assert_abs_diff_eq!(fidelity(&s00, &s11).unwrap(), want, epsilon = 1e-8);
        let s01 = logical_state(&spec, 0, 1, dims).unwrap();
        let rho = s01.reduced_density_matrix(2);
        assert_abs_diff_eq!(rho[(0, 0)].re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s11.mean_photon_number(2), 0.0016, epsilon = 1e-12);
        assert!(logical_state(&spec, 2, 0, dims).is_err());
    }

    #[test]
    fn uncoupled_vacuum_is_stationary() {
        let spec = KpoSystemSpec {
            pump: [0.0, 0.0],
            g_1c: 0.0,
            g_2c: 0.0,
            g_12: 0.0,
            ..KpoSystemSpec::reference_device()
        };
        let dims = [4, 4, 3];
        let zero: RealFn = Arc::new(|_| 0.0);
        let h = full_hamiltonian(&spec, Arc::new(|_| 1.0), [zero.clone(), zero], dims, (0.0, 1.0));
        // Zero pump means alpha = 0, so tiny truncations are fine.
        let h = h.unwrap();
        let psi = FockVector::basis(&dims, 0).unwrap();
        let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
        h.apply(0.0, psi.amps(), &mut out);
        assert!(out.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn full_hamiltonian_is_hermitian_and_matches_dense() {
        let spec = KpoSystemSpec::reference_device();
        let dims = [23, 23, 4];
        let h = slaved_hamiltonian(&spec, Arc::new(|_| mhz(200.0)), dims, (0.0, 1.0)).unwrap();
        assert!(h.hermiticity_defect(0.0) < 1e-12);
        let small = [3, 3, 2];
        let err = slaved_hamiltonian(&spec, Arc::new(|_| mhz(200.0)), small, (0.0, 1.0));
        assert!(matches!(err, Err(Error::TruncationTooSmall { .. })));
    }

    #[test]
    fn full_hamiltonian_kerr_and_coupling_entries() {
        let spec = KpoSystemSpec {
            pump: [0.0, 0.0],
            ..KpoSystemSpec::reference_device()
        };
        let dims = [4, 4, 3];
        let dc = mhz(200.0);
        let h = slaved_hamiltonian(&spec, Arc::new(move |_| dc), dims, (0.0, 1.0)).unwrap();
        let m = h.to_dense(0.0);
        let idx = |i: usize, j: usize, c: usize| (i * 4 + j) * 3 + c;
        // |2,0,0>: Kerr -K/2 * 2 plus 2 Delta_1.
        let want = -spec.kerr[0] + 2.0 * spec.g_1c * spec.g_1c / dc;
        assert_abs_diff_eq!(m[(idx(2, 0, 0), idx(2, 0, 0))].re, want, epsilon = 1e-14);
        // <1,0,0|H|0,0,1> = g_1c.
        assert_abs_diff_eq!(m[(idx(1, 0, 0), idx(0, 0, 1))].re, spec.g_1c, epsilon = 1e-15);
        // <1,0,0|H|0,1,0> = g_12.
        assert_abs_diff_eq!(m[(idx(1, 0, 0), idx(0, 1, 0))].re, spec.g_12, epsilon = 1e-15);
    }

    #[test]
    fn coupler_schedule_shape() {
        let spec = KpoSystemSpec::reference_device();
        let s = coupler_schedule(&spec, 8.0).unwrap();
        assert_abs_diff_eq!(s.t_gate, 88.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.delta_c(0.0), spec.delta_i, epsilon = 1e-12);
        assert_abs_diff_eq!(s.delta_c(44.0), spec.delta_f, epsilon = 1e-12);
        assert_abs_diff_eq!(s.delta_c(88.0), spec.delta_i, epsilon = 1e-12);
        for x in [0.5, 7.0, 21.3, 40.0] {
            assert_abs_diff_eq!(s.delta_c(44.0 + x), s.delta_c(44.0 - x), epsilon = 1e-12);
        }
    }

    #[test]
    fn sector_energies() {
        let spec = KpoSystemSpec::reference_device();
        assert_abs_diff_eq!(spec.e1(spec.zz_free_detuning()), 0.0, epsilon = 1e-15);
        let dc: RealFn = Arc::new(|_| mhz(20.0));
        let e11 = sector_energy(&spec, 1, 1, dc.clone()).unwrap();
        let e01 = sector_energy(&spec, 0, 1, dc).unwrap();
        assert_abs_diff_eq!(e11(0.0) + e01(0.0), 2.0 * spec.e0(), epsilon = 1e-12);
        assert_abs_diff_eq!(e11(0.0) - e01(0.0), 2.0 * spec.e1(mhz(20.0)), epsilon = 1e-12);
    }

    #[test]
    fn effective_ground_state_displacement() {
        let spec = KpoSystemSpec::reference_device();
        let dc = mhz(20.0);
        let dim = 16;
        let eff = effective_coupler_hamiltonian(&spec, 1, 1, Arc::new(move |_| dc), dim, (0.0, 1.0)).unwrap();
        let m = eff.hamiltonian.to_dense(0.0);
        let eig = m.symmetric_eigen();
        let (imin, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
        let ground = eig.eigenvectors.column(imin);
        // <a> of the ground state.
        let mut a_mean = Complex64::new(0.0, 0.0);
        for n in 1..dim {
            a_mean += ground[n - 1].conj() * ground[n] * (n as f64).sqrt();
        }
        let (ap, _) = coupler_amplitude(&spec, dc).unwrap();
        assert_abs_diff_eq!(a_mean.re, ap, epsilon = 1e-9);
        assert_abs_diff_eq!(a_mean.im, 0.0, epsilon = 1e-9);
        let e11 = spec.e0() + spec.e1(dc);
        assert_abs_diff_eq!(eig.eigenvalues[imin], e11, epsilon = 1e-9);
        let psi = coherent_state(Complex64::new(ap, 0.0), dim).unwrap();
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        eff.hamiltonian.apply(0.0, psi.amps(), &mut out);
        for (o, p) in out.iter().zip(psi.amps()) {
            assert_abs_diff_eq!((o - p * e11).norm(), 0.0, epsilon = 1e-9);
        }
        let eff01 = effective_coupler_hamiltonian(&spec, 0, 1, Arc::new(move |_| dc), dim, (0.0, 1.0)).unwrap();
        let vac = FockVector::fock(0, dim).unwrap();
        eff01.hamiltonian.apply(0.0, vac.amps(), &mut out);
        let e01 = spec.e0() - spec.e1(dc);
        assert_abs_diff_eq!((out[0] - e01).norm(), 0.0, epsilon = 1e-12);
        assert!(out[1..].iter().all(|v| v.norm() < 1e-15));
    }

    #[test]
    fn effective_model_matches_analytic_over_gate() {
        let spec = KpoSystemSpec::reference_device();
        let sched = coupler_schedule(&spec, 8.0).unwrap();
        let dim = 16;
        let eff = effective_coupler_hamiltonian(&spec, 1, 1, sched.delta_fn(), dim, (0.0, sched.t_gate)).unwrap();
        let psi0 = analytic_coupler_state(&spec, 1, &sched, 0.0, dim).unwrap();
        let times: Vec<f64> = (0..=8).map(|i| sched.t_gate * i as f64 / 8.0).collect();
        let run = evolve(&eff.hamiltonian, &psi0, &EvolveOptions::default().sampled(times)).unwrap();
        for (t, psi) in &run.trajectory {
            let ana = analytic_coupler_state(&spec, 1, &sched, *t, dim).unwrap();
            let ov = overlap(&ana, psi).unwrap();
            assert!((Complex64::new(1.0, 0.0) - ov).norm() < 1e-6, "t = {t}: {ov}");
        }
    }

    #[test]
    fn constant_schedule_has_zero_adiabatic_angle() {
        let spec = KpoSystemSpec::from_mhz([2.0, 2.0], [8.0, 8.0], 2.0, 2.0, 0.02, 200.0, 200.0).unwrap();
        let sched = coupler_schedule(&spec, 8.0).unwrap();
        let angles = gate_angles(&spec, &sched).unwrap();
        assert_abs_diff_eq!(angles.theta_ad, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(angles.ff_phase, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_sweep_is_stationary() {
        let spec = KpoSystemSpec::from_mhz([2.0, 2.0], [8.0, 8.0], 2.0, 2.0, 0.02, 200.0, 200.0).unwrap();
        for kind in [ScheduleKind::FfTs, ScheduleKind::Linear] {
            let out = run_displacement_point(&spec, 5.0, kind, Tolerances::default()).unwrap();
            assert!(out.infidelity < 1e-9, "{kind:?}: {}", out.infidelity);
        }
    }
}
