//! Density matrices on the joint `(cavity, qubits…)` space and the maps
//! acting on them.

use num_complex::Complex;

use super::{CavityError, Result};
use crate::linalg::{hermitian_eigen, CMatrix};
use crate::scalar::Real;

/// Tolerances for accepting a matrix as a physical state.
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-9;

/// Hermitian, unit-trace, positive semidefinite matrix with known tensor factors.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T> {
    dims: Vec<usize>,
    matrix: CMatrix<T>,
}

impl<T: Real> DensityMatrix<T> {
    /// Validates hermiticity, trace and positivity.
    pub fn new(matrix: CMatrix<T>, dims: Vec<usize>) -> Result<Self> {
        let dim: usize = dims.iter().product();
        if dim != matrix.dim() {
            return Err(CavityError::InvalidState(format!(
                "matrix is {0}x{0} but subsystem dims multiply to {dim}",
                matrix.dim()
            )));
        }
        let state = Self { dims, matrix };
        let herm = state.matrix.hermiticity_error();
        if herm > T::tol(HERMITIAN_TOL) {
            return Err(CavityError::InvalidState(format!("not Hermitian (error {herm})")));
        }
        let tr = state.trace();
        if (tr - T::one()).abs() > T::tol(TRACE_TOL) {
            return Err(CavityError::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min_eig = state.min_eigenvalue()?;
        if min_eig < -T::tol(POSITIVITY_TOL) {
            return Err(CavityError::InvalidState(format!("negative eigenvalue {min_eig}")));
        }
        Ok(state)
    }

    pub(crate) fn from_parts(matrix: CMatrix<T>, dims: Vec<usize>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), matrix.dim());
        Self { dims, matrix }
    }

    /// `|ψ⟩⟨ψ|` for a normalized state vector.
    pub fn pure(psi: &[Complex<T>], dims: Vec<usize>) -> Result<Self> {
        let norm: T = psi.iter().map(|z| z.norm_sqr()).sum();
        if (norm - T::one()).abs() > T::tol(TRACE_TOL) {
            return Err(CavityError::InvalidState(format!("state vector norm² {norm} differs from 1")));
        }
        Self::new(CMatrix::outer(psi), dims)
    }

    /// Product basis state `|levels[0], levels[1], …⟩`.
    pub fn basis(levels: &[usize], dims: Vec<usize>) -> Result<Self> {
        if levels.len() != dims.len() || levels.iter().zip(&dims).any(|(l, d)| l >= d) {
            return Err(CavityError::InvalidState(format!("levels {levels:?} do not fit dims {dims:?}")));
        }
        let index = levels.iter().zip(&dims).fold(0, |acc, (&l, &d)| acc * d + l);
        let dim: usize = dims.iter().product();
        let mut m = CMatrix::zeros(dim);
        m[(index, index)] = Complex::new(T::one(), T::zero());
        Ok(Self::from_parts(m, dims))
    }

    /// `self ⊗ other`.
    pub fn tensor(&self, other: &Self) -> Self {
        let dims = self.dims.iter().chain(&other.dims).copied().collect();
        Self::from_parts(self.matrix.kron(&other.matrix), dims)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.matrix
    }

    pub fn trace(&self) -> T {
        self.matrix.trace().re
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> T {
        self.matrix.trace_product(&self.matrix).re
    }

    /// `Tr(ρ A)`, real part.
    pub fn expectation(&self, op: &CMatrix<T>) -> T {
        self.matrix.trace_product(op).re
    }

    pub fn populations(&self) -> Vec<T> {
        self.matrix.real_diagonal()
    }

    /// `Σ_{i≠j} |ρ_ij|`.
    pub fn coherence_l1(&self) -> T {
        let n = self.dim();
        let mut s = T::zero();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += self.matrix[(i, j)].norm();
                }
            }
        }
        s
    }

    pub fn hermiticity_error(&self) -> T {
        self.matrix.hermiticity_error()
    }

    pub fn min_eigenvalue(&self) -> Result<T> {
        let eig = hermitian_eigen(&self.matrix).map_err(|e| CavityError::Numerical(e.to_string()))?;
        Ok(eig.values.first().copied().unwrap_or_else(T::zero))
    }
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

/// Reduced state on the subsystems listed in `keep` (in tensor order).
pub fn partial_trace<T: Real>(rho: &DensityMatrix<T>, keep: &[usize]) -> Result<DensityMatrix<T>> {
    let dims = rho.dims();
    let mut sorted = keep.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != keep.len() || sorted.iter().any(|&k| k >= dims.len()) {
        return Err(CavityError::InvalidSelector(format!(
            "{keep:?} is not a set of subsystems of {dims:?}"
        )));
    }
    let st = strides(dims);
    let kept_dims: Vec<usize> = sorted.iter().map(|&k| dims[k]).collect();
    let kept_dim: usize = kept_dims.iter().product();
    let n = rho.dim();
    // (kept index, traced index) of every joint basis state
    let split: Vec<(usize, usize)> = (0..n)
        .map(|i| {
            let (mut kept, mut traced) = (0, 0);
            for (s, (&d, &stride)) in dims.iter().zip(&st).enumerate() {
                let digit = (i / stride) % d;
                if sorted.binary_search(&s).is_ok() {
                    kept = kept * d + digit;
                } else {
                    traced = traced * d + digit;
                }
            }
            (kept, traced)
        })
        .collect();
    let mut out = CMatrix::zeros(kept_dim);
    let m = rho.matrix();
    for i in 0..n {
        let (ki, ti) = split[i];
        for j in 0..n {
            let (kj, tj) = split[j];
            if ti == tj {
                out[(ki, kj)] += m[(i, j)];
            }
        }
    }
    Ok(DensityMatrix::from_parts(out, kept_dims))
}

/// Traces out qubit `qubit` (subsystem `qubit + 1`) and reinstalls `|0⟩⟨0|`.
pub fn apply_reset<T: Real>(rho: &DensityMatrix<T>, qubit: usize) -> Result<DensityMatrix<T>> {
    let slot = qubit + 1;
    let dims = rho.dims();
    if slot >= dims.len() || dims[slot] != 2 {
        return Err(CavityError::InvalidSelector(format!("no qubit {qubit} in dims {dims:?}")));
    }
    let stride = strides(dims)[slot];
    let n = rho.dim();
    let m = rho.matrix();
    let mut out = CMatrix::zeros(n);
    let ground = |i: usize| (i / stride).is_multiple_of(2);
    for i in (0..n).filter(|&i| ground(i)) {
        for j in (0..n).filter(|&j| ground(j)) {
            out[(i, j)] = m[(i, j)] + m[(i + stride, j + stride)];
        }
    }
    Ok(DensityMatrix::from_parts(out, dims.to_vec()))
}

/// `Tr_q(ρ) ⊗ |0⟩⟨0|_q - ρ`, the generator of one reset channel.
pub(crate) fn reset_generator<T: Real>(rho: &CMatrix<T>, dims: &[usize], qubit: usize) -> CMatrix<T> {
    let stride = strides(dims)[qubit + 1];
    let n = rho.dim();
    let mut out = rho.scale_real(-T::one());
    for i in (0..n).filter(|&i| (i / stride).is_multiple_of(2)) {
        for j in (0..n).filter(|&j| (j / stride).is_multiple_of(2)) {
            let add = rho[(i, j)] + rho[(i + stride, j + stride)];
            out[(i, j)] += add;
        }
    }
    out
}
