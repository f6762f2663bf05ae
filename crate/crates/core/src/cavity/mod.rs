//! Truncated cavity mode (qudit) coupled to qubits, evolved as a dense
//! density matrix.
//!
//! The Hamiltonian is
//!
//! ```text
//! H = ħω_r (a†a + ½) + Σ_j [ ½ħΔ_j σ_j^z + i g_j σ_j^y (a† - a) ]
//! ```
//!
//! with qubit level 0 the ground state (`σ^z = diag(-1, +1)`). Between unitary
//! steps, selected qubits are reset to `|0⟩` at a Poisson rate, either
//! sampled per trajectory or averaged into a master equation.

mod dynamics;
mod operators;
mod state;

use thiserror::Error;

pub use dynamics::{
    evolve_step, run_ensemble, run_mean_evolution, run_trajectory, EnsembleSeries, ObservableSeries, Propagator,
    ResetProcess, RunMode, SimConfig, Simulator, DEFAULT_TRUNCATION_TOL, STEP_ACCURACY_BOUND, UNITARITY_TOL,
};
pub use operators::{
    build_hamiltonian, build_operators, embed, lowering, pauli_y, pauli_z, CavityModel, OperatorSet, QubitSpec,
    DEFAULT_DIM_CAP,
};
pub use state::{apply_reset, partial_trace, DensityMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CavityError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("Hilbert dimension {dim} exceeds the cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid subsystem selector: {0}")]
    InvalidSelector(String),
    #[error("propagator is not unitary (error {0})")]
    NonUnitary(f64),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("top cavity level population {population} at t = {time} exceeds the truncation tolerance")]
    Truncation { time: f64, population: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, CavityError>;
