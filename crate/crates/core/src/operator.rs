//! Operators on a product of truncated modes, applied term-wise without
//! materializing the product matrix.
//!
//! A [`ProductOperator`] is a Kronecker product of single-mode factors on a
//! subset of modes with identities elsewhere. Its nonzeros are stored as
//! flat `(row offset, col offset, value)` triples over the acted-on modes;
//! every "spectator" base index (digits zero on the acted-on modes) shifts
//! them into place.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fockspace::{bases_excluding, check_dims, strides, FockVector, ModeOperator};

#[derive(Debug, Clone, PartialEq)]
pub struct ProductOperator {
    dims: Vec<usize>,
    entries: Vec<(usize, usize, Complex64)>,
    bases: Vec<usize>,
}

impl ProductOperator {
    /// Places each `(mode, op)` factor on its mode, identities elsewhere.
    /// Factors must name distinct modes.
    pub fn embed(dims: &[usize], factors: &[(usize, &ModeOperator)]) -> Result<Self> {
        check_dims(dims)?;
        let strides = strides(dims);
        let mut modes: Vec<usize> = Vec::with_capacity(factors.len());
        let mut entries = vec![(0usize, 0usize, Complex64::new(1.0, 0.0))];
        for &(mode, op) in factors {
            if mode >= dims.len() {
                return Err(Error::IndexOutOfRange {
                    index: mode,
                    dim: dims.len(),
                });
            }
            if op.dim() != dims[mode] {
                return Err(Error::DimensionMismatch {
                    left: vec![dims[mode]],
                    right: vec![op.dim()],
                });
            }
            if modes.contains(&mode) {
                return Err(Error::Domain(alloc::format!(
                    "mode {mode} appears twice in one product term"
                )));
            }
            modes.push(mode);
            let nz = op.nonzeros();
            let s = strides[mode];
            entries = entries
                .iter()
                .flat_map(|&(r0, c0, v0)| {
                    nz.iter()
                        .map(move |&(r, c, v)| (r0 + r * s, c0 + c * s, v0 * v))
                })
                .collect();
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));
        Ok(Self {
            dims: dims.to_vec(),
            entries,
            bases: bases_excluding(dims, &modes),
        })
    }

    /// Single-mode operator viewed as a one-mode product operator.
    pub fn single(op: &ModeOperator) -> Self {
        Self::embed(&[op.dim()], &[(0, op)]).expect("single-mode embedding is always valid")
    }

    /// The identity on the product space.
    pub fn identity(dims: &[usize]) -> Result<Self> {
        Self::embed(dims, &[])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Nonzeros of the full product matrix.
    pub fn nnz(&self) -> usize {
        self.entries.len() * self.bases.len()
    }

    pub fn adjoint(&self) -> Self {
        let mut entries: Vec<_> = self
            .entries
            .iter()
            .map(|&(r, c, v)| (c, r, v.conj()))
            .collect();
        entries.sort_by_key(|&(r, c, _)| (r, c));
        Self {
            dims: self.dims.clone(),
            entries,
            bases: self.bases.clone(),
        }
    }

    /// `y += coef * A x`.
    #[inline]
    pub fn apply_add(&self, coef: Complex64, x: &[Complex64], y: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.len());
        debug_assert_eq!(y.len(), self.len());
        for &(r, c, v) in &self.entries {
            let cv = coef * v;
            for &b in &self.bases {
                y[b + r] += cv * x[b + c];
            }
        }
    }

    /// `y += coef * A^dagger x`.
    #[inline]
    pub fn apply_adjoint_add(&self, coef: Complex64, x: &[Complex64], y: &mut [Complex64]) {
        for &(r, c, v) in &self.entries {
            let cv = coef * v.conj();
            for &b in &self.bases {
                y[b + c] += cv * x[b + r];
            }
        }
    }

    pub fn apply(&self, state: &FockVector) -> Result<FockVector> {
        if state.dims() != self.dims.as_slice() {
            return Err(Error::DimensionMismatch {
                left: self.dims.clone(),
                right: state.dims().to_vec(),
            });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.len()];
        self.apply_add(Complex64::new(1.0, 0.0), state.amps(), &mut out);
        FockVector::new(self.dims.clone(), out)
    }

    /// Visits every nonzero `(row, col, value)` of the full matrix.
    pub fn for_each_nonzero(&self, mut f: impl FnMut(usize, usize, Complex64)) {
        for &(r, c, v) in &self.entries {
            for &b in &self.bases {
                f(b + r, b + c, v);
            }
        }
    }

    /// Dense product matrix. Only sensible for small spaces.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        self.for_each_nonzero(|r, c, v| m[(r, c)] += v);
        m
    }
}
