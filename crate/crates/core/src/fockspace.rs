//! Truncated Fock-space states and single-mode operators.
//!
//! Product states are stored mode-major: the leftmost mode varies slowest,
//! so the flat index of `|i_0, i_1, ..., i_k>` is `sum_m i_m * stride_m` with
//! `stride_k = 1`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Largest coherent-state tail mass a truncation may drop.
pub const TAIL_MASS_LIMIT: f64 = 1e-10;

/// Complex amplitudes over a (possibly multi-mode) truncated number basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    dims: Vec<usize>,
    amps: Vec<Complex64>,
    tail_mass: f64,
}

impl FockVector {
    pub fn new(dims: Vec<usize>, amps: Vec<Complex64>) -> Result<Self> {
        check_dims(&dims)?;
        let len: usize = dims.iter().product();
        if amps.len() != len {
            return Err(Error::DimensionMismatch {
                left: dims,
                right: vec![amps.len()],
            });
        }
        Ok(Self {
            dims,
            amps,
            tail_mass: 0.0,
        })
    }

    /// Number state `|index>` of the product space, with `index` flat.
    pub fn basis(dims: &[usize], index: usize) -> Result<Self> {
        check_dims(dims)?;
        let len: usize = dims.iter().product();
        if index >= len {
            return Err(Error::IndexOutOfRange { index, dim: len });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); len];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self {
            dims: dims.to_vec(),
            amps,
            tail_mass: 0.0,
        })
    }

    /// Single-mode number state `|n>`.
    pub fn fock(n: usize, dim: usize) -> Result<Self> {
        Self::basis(&[dim], n)
    }

    /// Superposition `sum_n c_n |n>` of single-mode number states.
    pub fn from_coefficients(coeffs: &[Complex64], dim: usize) -> Result<Self> {
        if coeffs.len() > dim {
            return Err(Error::IndexOutOfRange {
                index: coeffs.len() - 1,
                dim,
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[..coeffs.len()].copy_from_slice(coeffs);
        Self::new(vec![dim], amps)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amps(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    /// Probability mass dropped by the truncation before renormalization.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn norm(&self) -> f64 {
        norm_sqr(&self.amps).sqrt()
    }

    /// Rescales to unit norm and returns the mass that was missing.
    fn renormalize(&mut self) -> f64 {
        let n2 = norm_sqr(&self.amps);
        let scale = 1.0 / n2.sqrt();
        for a in &mut self.amps {
            *a *= scale;
        }
        (1.0 - n2).max(0.0)
    }

    pub fn scaled(mut self, factor: Complex64) -> Self {
        for a in &mut self.amps {
            *a *= factor;
        }
        self
    }

    /// `<n_mode>` for the given mode.
    pub fn mean_photon_number(&self, mode: usize) -> f64 {
        let strides = strides(&self.dims);
        let dim = self.dims[mode];
        let stride = strides[mode];
        self.amps
            .iter()
            .enumerate()
            .map(|(i, a)| ((i / stride) % dim) as f64 * a.norm_sqr())
            .sum::<f64>()
            / norm_sqr(&self.amps)
    }

    /// Reduced density matrix of one mode, tracing out the rest.
    pub fn reduced_density_matrix(&self, mode: usize) -> DMatrix<Complex64> {
        let strides = strides(&self.dims);
        let dim = self.dims[mode];
        let stride = strides[mode];
        let mut rho = DMatrix::zeros(dim, dim);
        for base in bases_excluding(&self.dims, &[mode]) {
            for r in 0..dim {
                let ar = self.amps[base + r * stride];
                if ar == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..dim {
                    rho[(r, c)] += ar * self.amps[base + c * stride].conj();
                }
            }
        }
        rho
    }
}

/// Dense single-mode operator.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeOperator {
    matrix: DMatrix<Complex64>,
}

impl ModeOperator {
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::InvalidDimension {
                dim: matrix.nrows(),
                reason: "operator must be square and non-empty",
            });
        }
        Ok(Self { matrix })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self {
            matrix: &self.matrix * &other.matrix,
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            matrix: &self.matrix * factor,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            matrix: &self.matrix + &other.matrix,
        }
    }

    pub fn apply(&self, state: &FockVector) -> Result<FockVector> {
        if state.dims != [self.dim()] {
            return Err(Error::DimensionMismatch {
                left: vec![self.dim()],
                right: state.dims.clone(),
            });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        for (r, o) in out.iter_mut().enumerate() {
            for (c, a) in state.amps.iter().enumerate() {
                *o += self.matrix[(r, c)] * a;
            }
        }
        FockVector::new(state.dims.clone(), out)
    }

    /// Nonzero entries as `(row, col, value)`, column-major order.
    pub fn nonzeros(&self) -> Vec<(usize, usize, Complex64)> {
        let n = self.dim();
        let mut out = Vec::new();
        for c in 0..n {
            for r in 0..n {
                let v = self.matrix[(r, c)];
                if v != Complex64::new(0.0, 0.0) {
                    out.push((r, c, v));
                }
            }
        }
        out
    }

    /// `max |A - A^dagger|` over entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for r in 0..n {
            for c in 0..n {
                worst = worst.max((self.matrix[(r, c)] - self.matrix[(c, r)].conj()).norm());
            }
        }
        worst
    }
}

/// Annihilation operator: `<n-1|a|n> = sqrt(n)`.
pub fn lowering_operator(dim: usize) -> Result<ModeOperator> {
    if dim < 2 {
        return Err(Error::InvalidDimension {
            dim,
            reason: "ladder operators need dim >= 2",
        });
    }
    let mut m = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    Ok(ModeOperator { matrix: m })
}

pub fn raising_operator(dim: usize) -> Result<ModeOperator> {
    Ok(lowering_operator(dim)?.adjoint())
}

/// `a^dagger a` with diagonal `0, 1, ..., dim - 1`.
pub fn number_operator(dim: usize) -> Result<ModeOperator> {
    if dim < 2 {
        return Err(Error::InvalidDimension {
            dim,
            reason: "ladder operators need dim >= 2",
        });
    }
    Ok(ModeOperator {
        matrix: DMatrix::from_fn(dim, dim, |r, c| {
            if r == c {
                Complex64::new(r as f64, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }),
    })
}

/// Poisson tail `sum_{n >= dim} e^{-x} x^n / n!` with `x = |alpha|^2`.
pub fn coherent_tail_mass(alpha_abs: f64, dim: usize) -> f64 {
    let x = alpha_abs * alpha_abs;
    if x == 0.0 {
        return if dim == 0 { 1.0 } else { 0.0 };
    }
    // ln p_dim, then walk the recurrence p_{n+1} = p_n x / (n + 1).
    let ln_fact: f64 = (1..=dim).map(|k| (k as f64).ln()).sum();
    let mut term = (-x + dim as f64 * x.ln() - ln_fact).exp();
    let mut sum = 0.0;
    let mut n = dim;
    loop {
        sum += term;
        n += 1;
        term *= x / n as f64;
        if (n as f64 > x && term <= 1e-18 * sum) || term == 0.0 {
            break;
        }
    }
    sum.min(1.0)
}

/// Smallest truncation whose coherent tail mass is below [`TAIL_MASS_LIMIT`].
pub fn min_adequate_dim(alpha_abs: f64) -> usize {
    let mut dim = 1;
    while coherent_tail_mass(alpha_abs, dim) >= TAIL_MASS_LIMIT {
        dim += 1;
    }
    dim
}

/// Default per-mode truncation `ceil(|a|^2 + 8|a| + 12)` for the largest
/// displacement `alpha_max` a run visits.
pub fn default_dim(alpha_max: f64) -> usize {
    let a = alpha_max.abs();
    (a * a + 8.0 * a + 12.0).ceil() as usize
}

fn check_truncation(alpha: Complex64, dim: usize) -> Result<f64> {
    if dim < 1 {
        return Err(Error::InvalidDimension {
            dim,
            reason: "dimension must be at least 1",
        });
    }
    let alpha_abs = alpha.norm();
    let tail_mass = coherent_tail_mass(alpha_abs, dim);
    if tail_mass >= TAIL_MASS_LIMIT {
        return Err(Error::TruncationTooSmall {
            alpha_abs,
            dim,
            tail_mass,
            min_dim: min_adequate_dim(alpha_abs),
        });
    }
    Ok(tail_mass)
}

/// Coherent state `|alpha>` from its number-basis amplitudes.
pub fn coherent_state(alpha: Complex64, dim: usize) -> Result<FockVector> {
    let tail_mass = check_truncation(alpha, dim)?;
    let mut amps = Vec::with_capacity(dim);
    let mut a = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    amps.push(a);
    for n in 1..dim {
        a = a * alpha / (n as f64).sqrt();
        amps.push(a);
    }
    let mut v = FockVector::new(vec![dim], amps)?;
    v.renormalize();
    v.tail_mass = tail_mass;
    Ok(v)
}

/// Truncated `D(alpha) = exp(alpha a^dagger - alpha^* a)`.
///
/// The generator is rotated onto `i|alpha|(a + a^dagger)` by `e^{i theta n}`
/// with `theta = arg(alpha) - pi/2`; the real symmetric tridiagonal
/// `a + a^dagger` is diagonalized and its eigenvalues exponentiated.
pub fn displacement_matrix(alpha: Complex64, dim: usize) -> Result<ModeOperator> {
    check_truncation(alpha, dim)?;
    Ok(ModeOperator {
        matrix: displacement_unchecked(alpha, dim),
    })
}

fn displacement_unchecked(alpha: Complex64, dim: usize) -> DMatrix<Complex64> {
    let r = alpha.norm();
    if r == 0.0 {
        return DMatrix::identity(dim, dim);
    }
    let x = DMatrix::<f64>::from_fn(dim, dim, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64).sqrt()
        } else {
            0.0
        }
    });
    let eig = x.symmetric_eigen();
    let phases: Vec<Complex64> = eig
        .eigenvalues
        .iter()
        .map(|&lam| Complex64::from_polar(1.0, r * lam))
        .collect();
    let theta = alpha.arg() - FRAC_PI_2;
    let rot: Vec<Complex64> = (0..dim)
        .map(|n| Complex64::from_polar(1.0, theta * n as f64))
        .collect();
    let v = &eig.eigenvectors;
    DMatrix::from_fn(dim, dim, |m, n| {
        let mut s = Complex64::new(0.0, 0.0);
        for k in 0..dim {
            s += phases[k] * (v[(m, k)] * v[(n, k)]);
        }
        rot[m] * s * rot[n].conj()
    })
}

/// `D(alpha)|n>`, with the tail mass measured in an enlarged space.
pub fn displaced_fock(alpha: Complex64, n: usize, dim: usize) -> Result<FockVector> {
    if n >= dim {
        return Err(Error::IndexOutOfRange { index: n, dim });
    }
    check_truncation(alpha, dim)?;
    let big = 2 * dim + 16;
    let full = displacement_unchecked(alpha, big);
    let tail_mass: f64 = (dim..big).map(|m| full[(m, n)].norm_sqr()).sum();
    if tail_mass >= TAIL_MASS_LIMIT {
        return Err(Error::TruncationTooSmall {
            alpha_abs: alpha.norm(),
            dim,
            tail_mass,
            min_dim: (dim..big)
                .find(|&d| (d..big).map(|m| full[(m, n)].norm_sqr()).sum::<f64>() < TAIL_MASS_LIMIT)
                .unwrap_or(big),
        });
    }
    let col = displacement_unchecked(alpha, dim).column(n).iter().copied().collect();
    let mut v = FockVector::new(vec![dim], col)?;
    v.renormalize();
    v.tail_mass = tail_mass;
    Ok(v)
}

/// Kronecker product in mode-major order.
pub fn tensor(states: &[FockVector]) -> Result<FockVector> {
    let first = states.first().ok_or(Error::InvalidDimension {
        dim: 0,
        reason: "tensor product of no states",
    })?;
    let mut dims = first.dims.clone();
    let mut amps = first.amps.clone();
    let mut kept = 1.0 - first.tail_mass;
    for s in &states[1..] {
        let mut next = Vec::with_capacity(amps.len() * s.amps.len());
        for a in &amps {
            for b in &s.amps {
                next.push(a * b);
            }
        }
        amps = next;
        dims.extend_from_slice(&s.dims);
        kept *= 1.0 - s.tail_mass;
    }
    Ok(FockVector {
        dims,
        amps,
        tail_mass: 1.0 - kept,
    })
}

/// `<a|b>`.
pub fn overlap(a: &FockVector, b: &FockVector) -> Result<Complex64> {
    if a.dims != b.dims {
        return Err(Error::DimensionMismatch {
            left: a.dims.clone(),
            right: b.dims.clone(),
        });
    }
    Ok(a.amps.iter().zip(&b.amps).map(|(x, y)| x.conj() * y).sum())
}

/// `|<a|b>|^2`, clamped to `[0, 1]`.
pub fn fidelity(a: &FockVector, b: &FockVector) -> Result<f64> {
    Ok(overlap(a, b)?.norm_sqr().clamp(0.0, 1.0))
}

/// `<phi|rho|phi>` for a single-mode density matrix.
pub fn fidelity_with_density(rho: &DMatrix<Complex64>, phi: &FockVector) -> Result<f64> {
    if phi.dims != [rho.nrows()] {
        return Err(Error::DimensionMismatch {
            left: vec![rho.nrows()],
            right: phi.dims.clone(),
        });
    }
    let mut s = Complex64::new(0.0, 0.0);
    for r in 0..rho.nrows() {
        for c in 0..rho.ncols() {
            s += phi.amps[r].conj() * rho[(r, c)] * phi.amps[c];
        }
    }
    Ok(s.re.clamp(0.0, 1.0))
}

pub(crate) fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

pub(crate) fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.is_empty() {
        return Err(Error::InvalidDimension {
            dim: 0,
            reason: "need at least one mode",
        });
    }
    if let Some(&d) = dims.iter().find(|&&d| d == 0) {
        return Err(Error::InvalidDimension {
            dim: d,
            reason: "every mode needs dimension >= 1",
        });
    }
    Ok(())
}

/// Mode strides for mode-major flattening.
pub fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for m in (0..dims.len().saturating_sub(1)).rev() {
        s[m] = s[m + 1] * dims[m + 1];
    }
    s
}

/// Flat indices of every basis state whose digits on `modes` are zero.
pub(crate) fn bases_excluding(dims: &[usize], modes: &[usize]) -> Vec<usize> {
    let strides = strides(dims);
    let mut out = vec![0usize];
    for (m, (&d, &s)) in dims.iter().zip(&strides).enumerate() {
        if modes.contains(&m) {
            continue;
        }
        out = out
            .iter()
            .flat_map(|&b| (0..d).map(move |i| b + i * s))
            .collect();
    }
    out.sort_unstable();
    out
}
