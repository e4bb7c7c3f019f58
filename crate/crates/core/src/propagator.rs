//! Hamiltonian schedules and Schrödinger propagation in a truncated Fock
//! space.
//!
//! A [`HamiltonianSchedule`] is a sum of constant operators weighted by
//! scalar functions of time. Hermitian terms carry real coefficients; drive
//! terms `c(t) A + c(t)^* A^dagger` are stored once and expanded on the fly,
//! so every assembled Hamiltonian is Hermitian by construction.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fockspace::{
    coherent_state, default_dim, displaced_fock, displacement_matrix, fidelity, lowering_operator,
    number_operator, FockVector,
};
use crate::integrator::{self, StepStats, Tolerances};
use crate::operator::ProductOperator;
use crate::pulses::RampSpec;
use crate::quadrature;
use crate::timescaling::ScaledClock;

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type ComplexFn = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// Norm drift above which a run is rejected.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;

const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    Varying(RealFn),
}

impl Coefficient {
    #[inline]
    pub fn at(&self, t: f64) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Varying(f) => f(t),
        }
    }
}

/// Whether the scalar part that completes `delta (a^dagger - x^*)(a - x)` is
/// kept. It only changes the global phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClassicalTerm {
    #[default]
    Dropped,
    Kept,
}

#[derive(Clone)]
pub struct HamiltonianSchedule {
    dims: Vec<usize>,
    hermitian: Vec<(ProductOperator, Coefficient)>,
    drives: Vec<(ProductOperator, ComplexFn)>,
    offset: Option<RealFn>,
    t_span: (f64, f64),
}

impl fmt::Debug for HamiltonianSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianSchedule")
            .field("dims", &self.dims)
            .field("hermitian_terms", &self.hermitian.len())
            .field("drive_terms", &self.drives.len())
            .field("offset", &self.offset.is_some())
            .field("t_span", &self.t_span)
            .finish()
    }
}

impl HamiltonianSchedule {
    pub fn new(dims: &[usize], t_span: (f64, f64)) -> Result<Self> {
        crate::fockspace::check_dims(dims)?;
        if !(t_span.0.is_finite() && t_span.1.is_finite()) || t_span.1 < t_span.0 {
            return Err(Error::Domain(format!("invalid time span {t_span:?}")));
        }
        Ok(Self {
            dims: dims.to_vec(),
            hermitian: Vec::new(),
            drives: Vec::new(),
            offset: None,
            t_span,
        })
    }

    fn check_op(&self, op: &ProductOperator) -> Result<()> {
        if op.dims() != self.dims.as_slice() {
            return Err(Error::DimensionMismatch {
                left: self.dims.clone(),
                right: op.dims().to_vec(),
            });
        }
        Ok(())
    }

    /// Adds `coef(t) * op`; `op` must be Hermitian.
    pub fn with_term(mut self, op: ProductOperator, coef: Coefficient) -> Result<Self> {
        self.check_op(&op)?;
        let defect = operator_hermiticity_defect(&op);
        if defect > HERMITIAN_TOL {
            return Err(Error::Domain(format!(
                "Hermitian term has defect {defect:e}; add it as a drive term instead"
            )));
        }
        self.hermitian.push((op, coef));
        Ok(self)
    }

    /// Adds `c(t) op + c(t)^* op^dagger`.
    pub fn with_drive(mut self, op: ProductOperator, coef: ComplexFn) -> Result<Self> {
        self.check_op(&op)?;
        self.drives.push((op, coef));
        Ok(self)
    }

    /// Adds the scalar `offset(t)` times the identity.
    pub fn with_offset(mut self, offset: RealFn) -> Self {
        self.offset = Some(match self.offset.take() {
            Some(prev) => Arc::new(move |t| prev(t) + offset(t)),
            None => offset,
        });
        self
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn t_span(&self) -> (f64, f64) {
        self.t_span
    }

    pub fn offset_at(&self, t: f64) -> f64 {
        self.offset.as_ref().map_or(0.0, |f| f(t))
    }

    /// `y = H(t) x`.
    pub fn apply(&self, t: f64, x: &[Complex64], y: &mut [Complex64]) {
        let off = self.offset_at(t);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = xi * off;
        }
        for (op, coef) in &self.hermitian {
            let c = coef.at(t);
            if c != 0.0 {
                op.apply_add(Complex64::new(c, 0.0), x, y);
            }
        }
        for (op, coef) in &self.drives {
            let c = coef(t);
            if c != Complex64::new(0.0, 0.0) {
                op.apply_add(c, x, y);
                op.apply_adjoint_add(c.conj(), x, y);
            }
        }
    }

    /// Nonzero entries of `H(t)` keyed by `(row, col)`.
    pub fn entries_at(&self, t: f64) -> BTreeMap<(usize, usize), Complex64> {
        let mut m = BTreeMap::new();
        let mut add = |r: usize, c: usize, v: Complex64| {
            *m.entry((r, c)).or_insert(Complex64::new(0.0, 0.0)) += v;
        };
        let off = self.offset_at(t);
        if off != 0.0 {
            for i in 0..self.dims.iter().product() {
                add(i, i, Complex64::new(off, 0.0));
            }
        }
        for (op, coef) in &self.hermitian {
            let c = coef.at(t);
            op.for_each_nonzero(|r, col, v| add(r, col, v * c));
        }
        for (op, coef) in &self.drives {
            let c = coef(t);
            op.for_each_nonzero(|r, col, v| {
                add(r, col, v * c);
                add(col, r, (v * c).conj());
            });
        }
        m
    }

    /// Dense `H(t)`. Only for small spaces.
    pub fn to_dense(&self, t: f64) -> DMatrix<Complex64> {
        let n: usize = self.dims.iter().product();
        let mut h = DMatrix::zeros(n, n);
        for ((r, c), v) in self.entries_at(t) {
            h[(r, c)] = v;
        }
        h
    }

    /// `max |H - H^dagger|` over entries of `H(t)`.
    pub fn hermiticity_defect(&self, t: f64) -> f64 {
        let m = self.entries_at(t);
        let zero = Complex64::new(0.0, 0.0);
        m.iter()
            .map(|(&(r, c), v)| (v - m.get(&(c, r)).copied().unwrap_or(zero).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// `S(t) H(Lambda(t))` on `[0, t_final]` for a schedule defined on
    /// `[0, t_ramp]`.
    pub fn time_scaled(&self, clock: ScaledClock) -> Self {
        let lambda = move |t: f64| clock.lambda_clamped(t);
        let scale = move |t: f64| clock.scaling_factor_clamped(t);
        let hermitian = self
            .hermitian
            .iter()
            .map(|(op, coef)| {
                let coef = coef.clone();
                let f: RealFn = Arc::new(move |t| scale(t) * coef.at(lambda(t)));
                (op.clone(), Coefficient::Varying(f))
            })
            .collect();
        let drives = self
            .drives
            .iter()
            .map(|(op, coef)| {
                let coef = coef.clone();
                let f: ComplexFn = Arc::new(move |t| coef(lambda(t)) * scale(t));
                (op.clone(), f)
            })
            .collect();
        let offset = self.offset.clone().map(|off| {
            let f: RealFn = Arc::new(move |t| scale(t) * off(lambda(t)));
            f
        });
        Self {
            dims: self.dims.clone(),
            hermitian,
            drives,
            offset,
            t_span: (0.0, clock.t_final),
        }
    }
}

fn operator_hermiticity_defect(op: &ProductOperator) -> f64 {
    let mut m: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
    op.for_each_nonzero(|r, c, v| {
        *m.entry((r, c)).or_insert(Complex64::new(0.0, 0.0)) += v;
    });
    let zero = Complex64::new(0.0, 0.0);
    m.iter()
        .map(|(&(r, c), v)| (v - m.get(&(c, r)).copied().unwrap_or(zero).conj()).norm())
        .fold(0.0, f64::max)
}

/// `H(t) = delta(t) a^dagger a - [drive(t) a^dagger + drive(t)^* a]`.
///
/// With [`ClassicalTerm::Kept`] the scalar `|drive|^2 / delta` is added,
/// making `H = delta (a^dagger - x^*)(a - x)` with `x = drive / delta`.
pub fn resonator_hamiltonian(
    delta_fn: RealFn,
    drive_fn: ComplexFn,
    dim: usize,
    t_span: (f64, f64),
    classical: ClassicalTerm,
) -> Result<HamiltonianSchedule> {
    let n = ProductOperator::single(&number_operator(dim)?);
    let a_dag = ProductOperator::single(&lowering_operator(dim)?.adjoint());
    let drive_coef: ComplexFn = {
        let drive_fn = drive_fn.clone();
        Arc::new(move |t| -drive_fn(t))
    };
    let h = HamiltonianSchedule::new(&[dim], t_span)?
        .with_term(n, Coefficient::Varying(delta_fn.clone()))?
        .with_drive(a_dag, drive_coef)?;
    Ok(match classical {
        ClassicalTerm::Dropped => h,
        ClassicalTerm::Kept => h.with_offset(Arc::new(move |t| drive_fn(t).norm_sqr() / delta_fn(t))),
    })
}

fn constant(v: f64) -> RealFn {
    Arc::new(move |_| v)
}

/// Uncorrected reference ramp `delta a^dagger a - Omega0(t)(a^dagger + a)`.
pub fn reference_hamiltonian(spec: &RampSpec, dim: usize) -> Result<HamiltonianSchedule> {
    let s = *spec;
    resonator_hamiltonian(
        constant(spec.delta),
        Arc::new(move |t| Complex64::new(s.sample_clamped(t).omega0, 0.0)),
        dim,
        (0.0, spec.t_ramp),
        ClassicalTerm::Dropped,
    )
}

/// Fast-forward drive `Omega_ff = Omega0 + Omega0'' / delta^2`.
pub fn ff_hamiltonian(spec: &RampSpec, dim: usize, classical: ClassicalTerm) -> Result<HamiltonianSchedule> {
    let s = *spec;
    resonator_hamiltonian(
        constant(spec.delta),
        Arc::new(move |t| Complex64::new(s.sample_clamped(t).omega_ff, 0.0)),
        dim,
        (0.0, spec.t_ramp),
        classical,
    )
}

/// Counter-diabatic drive `Omega0 - i Omega0' / delta`.
pub fn cd_hamiltonian(spec: &RampSpec, dim: usize) -> Result<HamiltonianSchedule> {
    let s = *spec;
    resonator_hamiltonian(
        constant(spec.delta),
        Arc::new(move |t| s.sample_clamped(t).omega_cd),
        dim,
        (0.0, spec.t_ramp),
        ClassicalTerm::Dropped,
    )
}

/// Linear detuning ramp from `delta_i` to `delta_f` over `t_final` at fixed
/// drive `omega_i`.
pub fn linear_detuning_hamiltonian(
    delta_i: f64,
    delta_f: f64,
    omega_i: f64,
    t_final: f64,
    dim: usize,
) -> Result<HamiltonianSchedule> {
    if t_final <= 0.0 {
        return Err(Error::Domain(format!("t_final must be > 0, got {t_final}")));
    }
    resonator_hamiltonian(
        linear_detuning(delta_i, delta_f, t_final),
        Arc::new(move |_| Complex64::new(omega_i, 0.0)),
        dim,
        (0.0, t_final),
        ClassicalTerm::Dropped,
    )
}

/// `delta_i + (delta_f - delta_i) t / t_final`, clamped to the ramp.
pub fn linear_detuning(delta_i: f64, delta_f: f64, t_final: f64) -> RealFn {
    Arc::new(move |t: f64| delta_i + (delta_f - delta_i) * (t / t_final).clamp(0.0, 1.0))
}

/// Fixed drive `omega_i` with detuning `Delta_ff,ts(t)` from the clock.
pub fn ff_ts_hamiltonian(
    clock: &ScaledClock,
    dim: usize,
    classical: ClassicalTerm,
) -> Result<HamiltonianSchedule> {
    let c = *clock;
    let omega_i = clock.omega_i;
    resonator_hamiltonian(
        Arc::new(move |t| c.delta_ff_ts_clamped(t)),
        Arc::new(move |_| Complex64::new(omega_i, 0.0)),
        dim,
        (0.0, clock.t_final),
        classical,
    )
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvolveOptions {
    pub tol: Tolerances,
    /// Ascending times inside the schedule's span at which to record the state.
    pub sample_times: Vec<f64>,
}

impl EvolveOptions {
    pub fn with_tol(tol: Tolerances) -> Self {
        Self {
            tol,
            sample_times: Vec::new(),
        }
    }

    pub fn sampled(mut self, times: Vec<f64>) -> Self {
        self.sample_times = times;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionResult {
    pub final_state: FockVector,
    pub trajectory: Vec<(f64, FockVector)>,
    /// `max |‖psi‖ - ‖psi0‖|` over accepted steps.
    pub norm_drift: f64,
    pub step_stats: StepStats,
}

/// Solves `d psi / dt = -i H(t) psi` over the schedule's span.
///
/// The state is never renormalized; norm drift is reported and a drift above
/// [`NORM_DRIFT_LIMIT`] is an error.
pub fn evolve(
    schedule: &HamiltonianSchedule,
    psi0: &FockVector,
    opts: &EvolveOptions,
) -> Result<EvolutionResult> {
    if psi0.dims() != schedule.dims() {
        return Err(Error::DimensionMismatch {
            left: schedule.dims().to_vec(),
            right: psi0.dims().to_vec(),
        });
    }
    let (t0, t1) = schedule.t_span();
    let mut stops = opts.sample_times.clone();
    if let Some(&bad) = stops.iter().find(|&&s| !(t0..=t1).contains(&s)) {
        return Err(Error::OutOfRange {
            what: "sample time",
            value: bad,
            min: t0,
            max: t1,
        });
    }
    if stops.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("sample times must be ascending".into()));
    }
    stops.dedup();

    let norm0 = psi0.norm();
    let mut drift: f64 = 0.0;
    let mut trajectory = Vec::with_capacity(stops.len());
    let dims = schedule.dims().to_vec();
    let minus_i = Complex64::new(0.0, -1.0);
    let (amps, step_stats) = integrator::integrate(
        |t, y, dy| {
            schedule.apply(t, y, dy);
            for v in dy.iter_mut() {
                *v *= minus_i;
            }
        },
        t0,
        t1,
        psi0.amps(),
        opts.tol,
        &stops,
        |t, y| trajectory.push((t, y.to_vec())),
        |_, y| {
            let n = crate::fockspace::norm_sqr(y).sqrt();
            drift = drift.max((n - norm0).abs());
        },
    )?;
    if drift > NORM_DRIFT_LIMIT {
        return Err(Error::Accuracy { norm_drift: drift });
    }
    let trajectory = trajectory
        .into_iter()
        .map(|(t, a)| Ok((t, FockVector::new(dims.clone(), a)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvolutionResult {
        final_state: FockVector::new(dims, amps)?,
        trajectory,
        norm_drift: drift,
        step_stats,
    })
}

/// Accumulated fast-forward phase `∫_0^t alpha_ff alpha0'' / delta ds`.
pub fn ff_global_phase(spec: &RampSpec, t: f64) -> Result<f64> {
    let s = *spec;
    quadrature::integrate(move |x| s.phase_rate(x), 0.0, t, 1e-10)
}

/// Closed-form fast-forwarded state including its global phase:
/// `e^{-i phi(t)} D(alpha_tilde(t)) sum_n c_n e^{-i n delta t} |n>`.
pub fn analytic_ff_state(spec: &RampSpec, coeffs: &[Complex64], t: f64, dim: usize) -> Result<FockVector> {
    let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::Domain(format!(
            "coefficients must be normalized, sum |c_n|^2 = {norm}"
        )));
    }
    let sample = spec.sample(t)?;
    let rotated: Vec<Complex64> = coeffs
        .iter()
        .enumerate()
        .map(|(n, c)| c * Complex64::from_polar(1.0, -(n as f64) * spec.delta * t))
        .collect();
    let base = FockVector::from_coefficients(&rotated, dim)?;
    let d = displacement_matrix(sample.alpha_tilde, dim)?;
    let phase = ff_global_phase(spec, t)?;
    Ok(d.apply(&base)?.scaled(Complex64::from_polar(1.0, -phase)))
}

/// Largest `|beta(t)|` for the classical amplitude of a driven resonator,
/// `i dbeta/dt = delta(t) beta - drive(t)`, started from `beta0`.
///
/// Coherent states stay coherent under these Hamiltonians, so this bounds the
/// displacement a run from a coherent state visits.
pub fn max_classical_displacement(
    delta_fn: &RealFn,
    drive_fn: &ComplexFn,
    beta0: Complex64,
    t_span: (f64, f64),
) -> Result<f64> {
    let mut max = beta0.norm();
    integrator::integrate(
        |t, y, dy| {
            dy[0] = Complex64::new(0.0, -1.0) * (y[0] * delta_fn(t) - drive_fn(t));
        },
        t_span.0,
        t_span.1,
        &[beta0],
        Tolerances { rel: 1e-9, abs: 1e-12 },
        &[],
        |_, _| {},
        |_, y| max = max.max(y[0].norm()),
    )?;
    Ok(max)
}

/// Which ramp drives a fixed-detuning displacement run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriveKind {
    /// `Omega0(t)` as is.
    Reference,
    /// `Omega_ff(t)`.
    FastForward,
}

/// Truncation for a drive-ramp run from `|alpha0(0)>`, from the classical
/// trajectory under both the reference and fast-forward drives.
pub fn ramp_dim(spec: &RampSpec) -> Result<usize> {
    let s = *spec;
    let beta0 = Complex64::new(s.sample_clamped(0.0).alpha0, 0.0);
    let delta = constant(spec.delta);
    let reference: ComplexFn = Arc::new(move |t| Complex64::new(s.sample_clamped(t).omega0, 0.0));
    let ff: ComplexFn = Arc::new(move |t| Complex64::new(s.sample_clamped(t).omega_ff, 0.0));
    let span = (0.0, spec.t_ramp);
    let m = max_classical_displacement(&delta, &reference, beta0, span)?
        .max(max_classical_displacement(&delta, &ff, beta0, span)?)
        .max(spec.max_displacement());
    Ok(default_dim(m))
}

/// `1 - |<alpha0(T)|psi(T)>|^2` after driving `|alpha0(0)>` with the chosen
/// ramp at fixed detuning.
pub fn drive_ramp_infidelity(spec: &RampSpec, kind: DriveKind, dim: usize, tol: Tolerances) -> Result<f64> {
    let start = spec.sample(0.0)?;
    let end = spec.sample(spec.t_ramp)?;
    let psi0 = coherent_state(Complex64::new(start.alpha0, 0.0), dim)?;
    let target = coherent_state(Complex64::new(end.alpha0, 0.0), dim)?;
    let h = match kind {
        DriveKind::Reference => reference_hamiltonian(spec, dim)?,
        DriveKind::FastForward => ff_hamiltonian(spec, dim, ClassicalTerm::Dropped)?,
    };
    let run = evolve(&h, &psi0, &EvolveOptions::with_tol(tol))?;
    Ok(1.0 - fidelity(&target, &run.final_state)?)
}

/// Truncation for a fixed-drive detuning sweep from `omega_i / delta_i` to
/// `omega_i / delta_f`.
pub fn detuning_dim(delta_fn: &RealFn, omega_i: f64, delta_i: f64, delta_f: f64, t_final: f64) -> Result<usize> {
    let drive: ComplexFn = Arc::new(move |_| Complex64::new(omega_i, 0.0));
    let beta0 = Complex64::new(omega_i / delta_i, 0.0);
    let m = max_classical_displacement(delta_fn, &drive, beta0, (0.0, t_final))?
        .max((omega_i / delta_f).abs());
    Ok(default_dim(m))
}

/// `1 - |<omega_i/delta_f|psi(t_f)>|^2` under a fixed drive and the given
/// detuning schedule, starting from `|omega_i/delta_i>`.
pub fn detuning_sweep_infidelity(
    delta_fn: RealFn,
    omega_i: f64,
    delta_i: f64,
    delta_f: f64,
    t_final: f64,
    dim: usize,
    tol: Tolerances,
) -> Result<f64> {
    let psi0 = coherent_state(Complex64::new(omega_i / delta_i, 0.0), dim)?;
    let target = coherent_state(Complex64::new(omega_i / delta_f, 0.0), dim)?;
    let h = resonator_hamiltonian(
        delta_fn,
        Arc::new(move |_| Complex64::new(omega_i, 0.0)),
        dim,
        (0.0, t_final),
        ClassicalTerm::Dropped,
    )?;
    let run = evolve(&h, &psi0, &EvolveOptions::with_tol(tol))?;
    Ok(1.0 - fidelity(&target, &run.final_state)?)
}

/// Infidelity of the fixed-drive fast-forward + time-scaling run.
pub fn ff_ts_infidelity(clock: &ScaledClock, dim: usize, tol: Tolerances) -> Result<f64> {
    let c = *clock;
    detuning_sweep_infidelity(
        Arc::new(move |t| c.delta_ff_ts_clamped(t)),
        clock.omega_i,
        clock.delta_i,
        clock.delta_f,
        clock.t_final,
        dim,
        tol,
    )
}

/// Infidelity of the linear detuning ramp over the same endpoints.
pub fn linear_infidelity(
    delta_i: f64,
    delta_f: f64,
    omega_i: f64,
    t_final: f64,
    dim: usize,
    tol: Tolerances,
) -> Result<f64> {
    detuning_sweep_infidelity(
        linear_detuning(delta_i, delta_f, t_final),
        omega_i,
        delta_i,
        delta_f,
        t_final,
        dim,
        tol,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdReport {
    pub n: usize,
    pub max_infidelity: f64,
    pub t_at_max: f64,
    pub norm_drift: f64,
}

/// Evolves `D(alpha0(0))|n>` under the counter-diabatic Hamiltonian and
/// reports the worst infidelity against `D(alpha0(t))|n>` over `samples + 1`
/// evenly spaced times.
pub fn cd_drive_check(spec: &RampSpec, n: usize, dim: usize, samples: usize, tol: Tolerances) -> Result<CdReport> {
    let samples = samples.max(1);
    let times: Vec<f64> = (0..=samples)
        .map(|k| spec.t_ramp * k as f64 / samples as f64)
        .collect();
    let psi0 = displaced_fock(Complex64::new(spec.sample(0.0)?.alpha0, 0.0), n, dim)?;
    let h = cd_hamiltonian(spec, dim)?;
    let run = evolve(&h, &psi0, &EvolveOptions::with_tol(tol).sampled(times))?;
    let mut report = CdReport {
        n,
        max_infidelity: 0.0,
        t_at_max: 0.0,
        norm_drift: run.norm_drift,
    };
    for (t, psi) in &run.trajectory {
        let target = displaced_fock(Complex64::new(spec.sample(*t)?.alpha0, 0.0), n, dim)?;
        let inf = 1.0 - fidelity(&target, psi)?;
        if inf > report.max_infidelity {
            report.max_infidelity = inf;
            report.t_at_max = *t;
        }
    }
    Ok(report)
}

/// Boxed scalar function, for callers assembling schedules dynamically.
pub fn boxed_real(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> RealFn {
    Arc::new(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::fockspace::{coherent_state, overlap};
    use crate::timescaling::{make_clock, DEFAULT_SOLVER_TOL};
    use crate::units::mhz;
    use approx::assert_abs_diff_eq;

    #[test]
    fn schedule_is_send_sync() {
        fn check<T: Send + Sync>() {}
        check::<HamiltonianSchedule>();
    }

    fn drive_ramp(t_ramp: f64) -> RampSpec {
        RampSpec::from_mhz(0.0, 120.0, t_ramp, 30.0).unwrap()
    }

    #[test]
    fn displaced_ground_state_is_zero_mode() {
        let delta = mhz(30.0);
        let omega = mhz(12.0);
        let dim = 30;
        let h = resonator_hamiltonian(
            constant(delta),
            Arc::new(move |_| Complex64::new(omega, 0.0)),
            dim,
            (0.0, 1.0),
            ClassicalTerm::Kept,
        )
        .unwrap();
        let psi = coherent_state(Complex64::new(omega / delta, 0.0), dim).unwrap();
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        h.apply(0.3, psi.amps(), &mut out);
        let norm = crate::fockspace::norm_sqr(&out).sqrt();
        assert!(norm < 1e-6 * delta, "norm {norm}");
    }

    #[test]
    fn undriven_hamiltonian_is_diagonal() {
        let delta = 0.7;
        let h = resonator_hamiltonian(
            constant(delta),
            Arc::new(|_| Complex64::new(0.0, 0.0)),
            6,
            (0.0, 1.0),
            ClassicalTerm::Dropped,
        )
        .unwrap();
        let m = h.to_dense(0.0);
        for r in 0..6 {
            for c in 0..6 {
                let want = if r == c { r as f64 * delta } else { 0.0 };
                assert_abs_diff_eq!((m[(r, c)] - Complex64::new(want, 0.0)).norm(), 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn cd_hamiltonian_is_hermitian() {
        let spec = drive_ramp(20.0);
        let h = cd_hamiltonian(&spec, 40).unwrap();
        for t in [0.0, 3.3, 10.0, 17.1, 20.0] {
            assert!(h.hermiticity_defect(t) < 1e-12);
        }
        let m = h.to_dense(5.0);
        // a^dagger coefficient is -Omega_cd; a coefficient its conjugate.
        let s = spec.sample(5.0).unwrap();
        assert_abs_diff_eq!((m[(1, 0)] + s.omega_cd).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((m[(0, 1)] + s.omega_cd.conj()).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn non_hermitian_term_is_rejected() {
        let a = ProductOperator::single(&lowering_operator(4).unwrap());
        let h = HamiltonianSchedule::new(&[4], (0.0, 1.0)).unwrap();
        assert!(h.with_term(a, Coefficient::Constant(1.0)).is_err());
    }

    #[test]
    fn diagonal_evolution_phase() {
        let delta = 1.3;
        let t = 7.0;
        let h = resonator_hamiltonian(
            constant(delta),
            Arc::new(|_| Complex64::new(0.0, 0.0)),
            4,
            (0.0, t),
            ClassicalTerm::Dropped,
        )
        .unwrap();
        let psi0 = FockVector::fock(1, 4).unwrap();
        let run = evolve(&h, &psi0, &EvolveOptions::default()).unwrap();
        let ov = overlap(&psi0, &run.final_state).unwrap();
        let want = Complex64::from_polar(1.0, -delta * t);
        assert_abs_diff_eq!((ov - want).norm(), 0.0, epsilon = 1e-8);
        assert!(run.norm_drift < 1e-8);
    }

    #[test]
    fn zero_hamiltonian_leaves_state() {
        let h = HamiltonianSchedule::new(&[3], (0.0, 5.0)).unwrap();
        let psi0 = FockVector::from_coefficients(
            &[Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)],
            3,
        )
        .unwrap();
        let run = evolve(&h, &psi0, &EvolveOptions::default()).unwrap();
        assert_eq!(run.final_state, psi0);
    }

    #[test]
    fn sampling_records_requested_times() {
        let spec = drive_ramp(20.0);
        let dim = ramp_dim(&spec).unwrap();
        let h = ff_hamiltonian(&spec, dim, ClassicalTerm::Dropped).unwrap();
        let psi0 = FockVector::fock(0, dim).unwrap();
        let times = vec![0.0, 5.0, 10.0, 20.0];
        let run = evolve(&h, &psi0, &EvolveOptions::default().sampled(times.clone())).unwrap();
        let got: Vec<f64> = run.trajectory.iter().map(|(t, _)| *t).collect();
        assert_eq!(got, times);
        assert_eq!(run.trajectory.last().unwrap().1, run.final_state);
        assert!(evolve(&h, &psi0, &EvolveOptions::default().sampled(vec![21.0])).is_err());
        assert!(evolve(&h, &psi0, &EvolveOptions::default().sampled(vec![3.0, 1.0])).is_err());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let spec = drive_ramp(20.0);
        let h = ff_hamiltonian(&spec, 20, ClassicalTerm::Dropped).unwrap();
        let psi0 = FockVector::fock(0, 21).unwrap();
        assert!(matches!(
            evolve(&h, &psi0, &EvolveOptions::default()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn ff_reaches_target_and_reference_does_not() {
        let spec = drive_ramp(20.0);
        let dim = ramp_dim(&spec).unwrap();
        let tol = Tolerances::default();
        let ff = drive_ramp_infidelity(&spec, DriveKind::FastForward, dim, tol).unwrap();
        let reference = drive_ramp_infidelity(&spec, DriveKind::Reference, dim, tol).unwrap();
        assert!(ff < 1e-6, "ff {ff}");
        assert!(reference > 1e-3, "reference {reference}");
    }

    #[test]
    fn analytic_state_boundaries() {
        let spec = drive_ramp(20.0);
        let dim = 40;
        let c = [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)];
        let at0 = analytic_ff_state(&spec, &c, 0.0, dim).unwrap();
        let direct = FockVector::from_coefficients(&c, dim).unwrap();
        for (a, b) in at0.amps().iter().zip(direct.amps()) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-14);
        }
        assert!(analytic_ff_state(&spec, &[Complex64::new(0.5, 0.0)], 1.0, dim).is_err());
        assert!(analytic_ff_state(&spec, &c, 21.0, dim).is_err());
    }

    #[test]
    fn analytic_state_matches_integrator_with_phase() {
        let spec = drive_ramp(20.0);
        let dim = ramp_dim(&spec).unwrap();
        let h = ff_hamiltonian(&spec, dim, ClassicalTerm::Kept).unwrap();
        let psi0 = FockVector::fock(0, dim).unwrap();
        let run = evolve(&h, &psi0, &EvolveOptions::default().sampled(vec![10.0])).unwrap();
        let ana = analytic_ff_state(&spec, &[Complex64::new(1.0, 0.0)], 10.0, dim).unwrap();
        let ov = overlap(&run.trajectory[0].1, &ana).unwrap();
        assert!((Complex64::new(1.0, 0.0) - ov).norm() <= 1e-6, "overlap {ov}");
    }

    #[test]
    fn time_scaled_schedule_tracks_reference() {
        let clock = make_clock(mhz(200.0), mhz(20.0), mhz(80.0), 8.0, DEFAULT_SOLVER_TOL).unwrap();
        let spec = clock.reference_ramp();
        let dim = default_dim(spec.max_displacement());
        let reference = ff_hamiltonian(&spec, dim, ClassicalTerm::Kept).unwrap();
        let scaled = reference.time_scaled(clock);
        let direct = ff_ts_hamiltonian(&clock, dim, ClassicalTerm::Kept).unwrap();
        for t in [0.0, 5.0, 17.0, clock.t_final] {
            let a = scaled.to_dense(t);
            let b = direct.to_dense(t);
            assert!((a - b).iter().all(|v| v.norm() < 1e-12));
        }
    }

    #[test]
    fn classical_displacement_of_static_drive() {
        // Starting at the fixed point, the amplitude never moves.
        let delta = constant(2.0);
        let drive: ComplexFn = Arc::new(|_| Complex64::new(1.0, 0.0));
        let m = max_classical_displacement(&delta, &drive, Complex64::new(0.5, 0.0), (0.0, 10.0)).unwrap();
        assert_abs_diff_eq!(m, 0.5, epsilon = 1e-9);
        // From the origin it circles out to |beta| = 1, seen at step ends only.
        let m = max_classical_displacement(&delta, &drive, Complex64::new(0.0, 0.0), (0.0, 10.0)).unwrap();
        assert!(m <= 1.0 + 1e-9 && m > 0.999, "{m}");
    }

    #[test]
    fn cd_constant_ramp_is_stationary() {
        let spec = RampSpec::from_mhz(60.0, 60.0, 10.0, 30.0).unwrap();
        let r = cd_drive_check(&spec, 0, 24, 20, Tolerances::default()).unwrap();
        assert!(r.max_infidelity < 1e-9);
    }
}
