//! Model parameters, embedded operators and the cavity-qubit Hamiltonian.

use num_complex::Complex;

use super::{CavityError, Result};
use crate::linalg::CMatrix;
use crate::scalar::Real;

/// Default cap on the joint Hilbert-space dimension `d · 2^k`.
pub const DEFAULT_DIM_CAP: usize = 4096;

/// One two-level system coupled to the cavity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitSpec<T> {
    /// Level splitting Δ (angular frequency).
    pub delta: T,
    /// Coupling strength g (energy units).
    pub g: T,
}

/// A `d`-level truncated cavity mode and its qubits.
///
/// Tensor ordering is `(cavity, qubit_1, …, qubit_k)`; qubit level 0 is the
/// ground state.
#[derive(Debug, Clone, PartialEq)]
pub struct CavityModel<T> {
    pub d: usize,
    pub omega_r: T,
    pub qubits: Vec<QubitSpec<T>>,
    pub hbar: T,
    pub dim_cap: usize,
}

impl<T: Real> CavityModel<T> {
    pub fn new(d: usize, omega_r: T, qubits: Vec<QubitSpec<T>>) -> Self {
        Self {
            d,
            omega_r,
            qubits,
            hbar: T::one(),
            dim_cap: DEFAULT_DIM_CAP,
        }
    }

    /// Subsystem dimensions in tensor order.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.d).chain(self.qubits.iter().map(|_| 2)).collect()
    }

    pub fn n_qubits(&self) -> usize {
        self.qubits.len()
    }

    /// Joint dimension, saturating on overflow.
    pub fn dim(&self) -> usize {
        self.qubits
            .iter()
            .fold(self.d, |acc, _| acc.saturating_mul(2))
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(CavityError::InvalidModel(format!("d = {} must be at least 2", self.d)));
        }
        if !(self.hbar > T::zero() && self.hbar.is_finite()) {
            return Err(CavityError::InvalidModel("hbar must be positive".into()));
        }
        if !self.omega_r.is_finite() {
            return Err(CavityError::InvalidModel("omega_r must be finite".into()));
        }
        for (j, q) in self.qubits.iter().enumerate() {
            if !q.delta.is_finite() || !q.g.is_finite() || q.g < T::zero() {
                return Err(CavityError::InvalidModel(format!(
                    "qubit {j}: delta must be finite and g non-negative"
                )));
            }
        }
        let dim = self.dim();
        if self.qubits.len() >= usize::BITS as usize || dim > self.dim_cap {
            return Err(CavityError::DimensionCap { dim, cap: self.dim_cap });
        }
        Ok(())
    }
}

/// Operators embedded in the joint space.
#[derive(Debug, Clone)]
pub struct OperatorSet<T> {
    pub dims: Vec<usize>,
    pub identity: CMatrix<T>,
    /// Cavity lowering operator, `a|n⟩ = √n |n-1⟩`.
    pub a: CMatrix<T>,
    pub a_dag: CMatrix<T>,
    /// `a†a`.
    pub number: CMatrix<T>,
    pub sigma_z: Vec<CMatrix<T>>,
    pub sigma_y: Vec<CMatrix<T>>,
    /// `|1⟩⟨0|` on each qubit.
    pub sigma_plus: Vec<CMatrix<T>>,
    /// `|0⟩⟨1|` on each qubit.
    pub sigma_minus: Vec<CMatrix<T>>,
}

/// Truncated lowering operator on `d` levels.
pub fn lowering<T: Real>(d: usize) -> CMatrix<T> {
    let mut a = CMatrix::zeros(d);
    for n in 1..d {
        a[(n - 1, n)] = Complex::new(T::from_count(n).sqrt(), T::zero());
    }
    a
}

pub fn pauli_z<T: Real>() -> CMatrix<T> {
    CMatrix::from_real_diagonal(&[-T::one(), T::one()])
}

pub fn pauli_y<T: Real>() -> CMatrix<T> {
    let mut m = CMatrix::zeros(2);
    m[(0, 1)] = Complex::new(T::zero(), -T::one());
    m[(1, 0)] = Complex::new(T::zero(), T::one());
    m
}

fn raising_qubit<T: Real>() -> CMatrix<T> {
    let mut m = CMatrix::zeros(2);
    m[(1, 0)] = Complex::new(T::one(), T::zero());
    m
}

/// `I ⊗ … ⊗ op ⊗ … ⊗ I` with `op` on subsystem `slot`.
pub fn embed<T: Real>(op: &CMatrix<T>, slot: usize, dims: &[usize]) -> CMatrix<T> {
    dims.iter().enumerate().fold(CMatrix::identity(1), |acc, (i, &d)| {
        if i == slot {
            acc.kron(op)
        } else {
            acc.kron(&CMatrix::identity(d))
        }
    })
}

pub fn build_operators<T: Real>(model: &CavityModel<T>) -> Result<OperatorSet<T>> {
    model.validate()?;
    let dims = model.dims();
    let a = embed(&lowering(model.d), 0, &dims);
    let a_dag = a.adjoint();
    let number = &a_dag * &a;
    let slots = 1..dims.len();
    let sigma_plus: Vec<_> = slots.clone().map(|s| embed(&raising_qubit(), s, &dims)).collect();
    Ok(OperatorSet {
        identity: CMatrix::identity(model.dim()),
        sigma_z: slots.clone().map(|s| embed(&pauli_z(), s, &dims)).collect(),
        sigma_y: slots.map(|s| embed(&pauli_y(), s, &dims)).collect(),
        sigma_minus: sigma_plus.iter().map(CMatrix::adjoint).collect(),
        sigma_plus,
        dims,
        a,
        a_dag,
        number,
    })
}

/// `H = ħω_r (a†a + ½) + Σ_j [½ħΔ_j σ_j^z + i g_j σ_j^y (a† - a)]`.
pub fn build_hamiltonian<T: Real>(model: &CavityModel<T>) -> Result<CMatrix<T>> {
    let ops = build_operators(model)?;
    Ok(hamiltonian_from(model, &ops))
}

pub(crate) fn hamiltonian_from<T: Real>(model: &CavityModel<T>, ops: &OperatorSet<T>) -> CMatrix<T> {
    let half = T::lit(0.5);
    let mut h = (&ops.number + &ops.identity.scale_real(half)).scale_real(model.hbar * model.omega_r);
    let quadrature = &ops.a_dag - &ops.a;
    for (j, q) in model.qubits.iter().enumerate() {
        h = &h + &ops.sigma_z[j].scale_real(half * model.hbar * q.delta);
        let coupling = (&ops.sigma_y[j] * &quadrature).scale(Complex::new(T::zero(), q.g));
        h = &h + &coupling;
    }
    h
}
