//! Time evolution: unitary propagation, stochastic resets and the
//! reset-averaged master equation.

use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;

use super::operators::{hamiltonian_from, build_operators, CavityModel, OperatorSet};
use super::state::{apply_reset, partial_trace, reset_generator, DensityMatrix};
use super::{CavityError, Result};
use crate::gp_noise::stream_rng;
use crate::linalg::{hermitian_eigen, CMatrix};
use crate::scalar::Real;

/// Largest accepted `max|U†U - I|` for a propagator.
pub const UNITARITY_TOL: f64 = 1e-10;

/// Recommended bound on `‖H‖·dt/ħ`.
pub const STEP_ACCURACY_BOUND: f64 = 0.1;

/// Default bound on the population of the top cavity level.
pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-3;

/// `exp(-iH dt/ħ)` for a time-independent Hamiltonian.
#[derive(Debug, Clone)]
pub struct Propagator<T> {
    u: CMatrix<T>,
    u_dag: CMatrix<T>,
}

impl<T: Real> Propagator<T> {
    /// Checks unitarity of an explicit matrix.
    pub fn from_matrix(u: CMatrix<T>) -> Result<Self> {
        let err = u.unitarity_error();
        if !(err <= T::tol(UNITARITY_TOL)) {
            return Err(CavityError::NonUnitary(err.as_f64()));
        }
        let u_dag = u.adjoint();
        Ok(Self { u, u_dag })
    }

    /// Builds the propagator from the eigen-decomposition of `h`.
    pub fn from_hamiltonian(h: &CMatrix<T>, dt: T, hbar: T) -> Result<Self> {
        let eig = hermitian_eigen(h).map_err(|e| CavityError::Numerical(e.to_string()))?;
        let u = eig.map_spectrum(|lambda| {
            let phase = -lambda * dt / hbar;
            Complex::new(phase.cos(), phase.sin())
        });
        Self::from_matrix(u)
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.u
    }
}

/// `ρ ← U ρ U†`.
pub fn evolve_step<T: Real>(rho: &DensityMatrix<T>, propagator: &Propagator<T>) -> DensityMatrix<T> {
    let m = &(&propagator.u * rho.matrix()) * &propagator.u_dag;
    DensityMatrix::from_parts(m, rho.dims().to_vec())
}

/// Poisson-rate reset of selected qubits to `|0⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResetProcess<T> {
    pub rate: T,
    pub targets: Vec<usize>,
}

impl<T: Real> ResetProcess<T> {
    pub fn none() -> Self {
        Self {
            rate: T::zero(),
            targets: Vec::new(),
        }
    }

    pub fn new(rate: T, targets: Vec<usize>) -> Self {
        Self { rate, targets }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if !(self.rate >= T::zero() && self.rate.is_finite()) {
            return Err(CavityError::InvalidConfig(format!("reset rate {} must be non-negative", self.rate)));
        }
        if let Some(&q) = self.targets.iter().find(|&&q| q >= n_qubits) {
            return Err(CavityError::InvalidConfig(format!("reset target {q} but only {n_qubits} qubits")));
        }
        Ok(())
    }
}

/// Step size, horizon and sampling settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<T> {
    pub dt: T,
    pub t_max: T,
    pub seed: u64,
    pub n_trajectories: usize,
    pub record_stride: usize,
    /// Refuse to continue when the top cavity level gains more population
    /// than this over its initial value. `None` disables the guard.
    pub truncation_tol: Option<T>,
}

impl<T: Real> SimConfig<T> {
    pub fn new(dt: T, t_max: T, seed: u64) -> Self {
        Self {
            dt,
            t_max,
            seed,
            n_trajectories: 1,
            record_stride: 1,
            truncation_tol: Some(T::lit(DEFAULT_TRUNCATION_TOL)),
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn with_trajectories(mut self, n: usize) -> Self {
        self.n_trajectories = n;
        self
    }

    pub fn with_truncation_tol(mut self, tol: Option<T>) -> Self {
        self.truncation_tol = tol;
        self
    }

    /// Number of `dt` steps covering `t_max`.
    pub fn n_steps(&self) -> usize {
        (self.t_max / self.dt).round().to_usize().unwrap_or(0)
    }

    pub fn validate(&self, reset: &ResetProcess<T>) -> Result<()> {
        if !(self.dt > T::zero() && self.dt.is_finite()) {
            return Err(CavityError::InvalidConfig("dt must be positive".into()));
        }
        if !(self.t_max >= self.dt && self.t_max.is_finite()) {
            return Err(CavityError::InvalidConfig("t_max must be at least dt".into()));
        }
        if self.n_trajectories == 0 || self.record_stride == 0 {
            return Err(CavityError::InvalidConfig(
                "n_trajectories and record_stride must be positive".into(),
            ));
        }
        if reset.rate * self.dt > T::one() {
            return Err(CavityError::InvalidConfig(format!(
                "rate·dt = {} exceeds 1",
                reset.rate * self.dt
            )));
        }
        Ok(())
    }
}

/// Observables recorded along a run. Purity and l1-coherence refer to the
/// reduced cavity state.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSeries<T> {
    pub times: Vec<T>,
    pub qudit_populations: Vec<Vec<T>>,
    pub qubit_excitations: Vec<Vec<T>>,
    pub photon_number: Vec<T>,
    pub purity: Vec<T>,
    pub coherence_l1: Vec<T>,
    /// Non-fatal diagnostics, e.g. an oversized step.
    pub warnings: Vec<String>,
}

impl<T: Real> ObservableSeries<T> {
    fn empty(warnings: Vec<String>) -> Self {
        Self {
            times: Vec::new(),
            qudit_populations: Vec::new(),
            qubit_excitations: Vec::new(),
            photon_number: Vec::new(),
            purity: Vec::new(),
            coherence_l1: Vec::new(),
            warnings,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `1 - P(cavity in |0⟩)` at each record.
    pub fn qudit_excitation(&self) -> Vec<T> {
        self.qudit_populations.iter().map(|p| T::one() - p[0]).collect()
    }

    /// Column names in row order.
    pub fn header(d: usize, n_qubits: usize) -> Vec<String> {
        let mut h = vec!["time".to_string()];
        h.extend((0..d).map(|i| format!("pop_{i}")));
        h.extend((1..=n_qubits).map(|j| format!("qubit_exc_{j}")));
        h.extend(["photon_number", "purity", "coherence_l1"].map(String::from));
        h
    }

    /// Record `i` flattened in [`Self::header`] order.
    pub fn row(&self, i: usize) -> Vec<T> {
        let mut r = vec![self.times[i]];
        r.extend(&self.qudit_populations[i]);
        r.extend(&self.qubit_excitations[i]);
        r.extend([self.photon_number[i], self.purity[i], self.coherence_l1[i]]);
        r
    }

    fn push_row(&mut self, row: &[T], d: usize, n_qubits: usize) {
        self.times.push(row[0]);
        self.qudit_populations.push(row[1..1 + d].to_vec());
        self.qubit_excitations.push(row[1 + d..1 + d + n_qubits].to_vec());
        let tail = &row[1 + d + n_qubits..];
        self.photon_number.push(tail[0]);
        self.purity.push(tail[1]);
        self.coherence_l1.push(tail[2]);
    }
}

/// What happens between unitary steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    /// Bernoulli resets with probability `rate·dt` per step and target.
    Trajectory { stream: u64 },
    /// Fourth-order integration of the reset-averaged master equation.
    Mean,
}

/// Precomputed model data shared by every run on one `(model, dt)`.
#[derive(Debug, Clone)]
pub struct Simulator<T> {
    pub model: CavityModel<T>,
    pub ops: OperatorSet<T>,
    pub hamiltonian: CMatrix<T>,
    pub propagator: Propagator<T>,
    /// Largest eigenvalue magnitude of `H`.
    pub h_norm: T,
    dt: T,
}

impl<T: Real> Simulator<T> {
    pub fn new(model: &CavityModel<T>, dt: T) -> Result<Self> {
        let ops = build_operators(model)?;
        let hamiltonian = hamiltonian_from(model, &ops);
        let eig = hermitian_eigen(&hamiltonian).map_err(|e| CavityError::Numerical(e.to_string()))?;
        let h_norm = eig.values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let propagator = Propagator::from_hamiltonian(&hamiltonian, dt, model.hbar)?;
        Ok(Self {
            model: model.clone(),
            ops,
            hamiltonian,
            propagator,
            h_norm,
            dt,
        })
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    fn warnings(&self) -> Vec<String> {
        let x = self.h_norm * self.dt / self.model.hbar;
        if x > T::lit(STEP_ACCURACY_BOUND) {
            vec![format!("‖H‖·dt/ħ = {x} exceeds {STEP_ACCURACY_BOUND}; consider a smaller dt")]
        } else {
            Vec::new()
        }
    }

    /// Observables of one state in [`ObservableSeries::header`] order.
    pub fn observe(&self, time: T, rho: &DensityMatrix<T>) -> Result<Vec<T>> {
        let cavity = partial_trace(rho, &[0])?;
        let mut row = vec![time];
        row.extend(cavity.populations());
        for j in 0..self.model.n_qubits() {
            let q = partial_trace(rho, &[j + 1])?;
            row.push(q.populations()[1]);
        }
        row.push(rho.expectation(&self.ops.number));
        row.push(cavity.purity());
        row.push(cavity.coherence_l1());
        Ok(row)
    }

    fn check_truncation(&self, time: T, row: &[T], baseline: T, tol: Option<T>) -> Result<()> {
        if let Some(tol) = tol {
            let top = row[self.model.d];
            if top - baseline > tol {
                return Err(CavityError::Truncation {
                    time: time.as_f64(),
                    population: top.as_f64(),
                });
            }
        }
        Ok(())
    }

    /// `-(i/ħ)[H, ρ] + rate Σ_targets (Tr_q ρ ⊗ |0⟩⟨0| - ρ)`.
    pub fn mean_generator(&self, rho: &CMatrix<T>, reset: &ResetProcess<T>) -> CMatrix<T> {
        let mi = Complex::new(T::zero(), -T::one() / self.model.hbar);
        let mut out = self.hamiltonian.commutator(rho).scale(mi);
        if reset.rate > T::zero() {
            let dims = self.ops.dims.as_slice();
            for &q in &reset.targets {
                out = &out + &reset_generator(rho, dims, q).scale_real(reset.rate);
            }
        }
        out
    }

    fn rk4_step(&self, rho: &CMatrix<T>, reset: &ResetProcess<T>) -> CMatrix<T> {
        let h = self.dt;
        let half = T::lit(0.5);
        let k1 = self.mean_generator(rho, reset);
        let k2 = self.mean_generator(&(rho + &k1.scale_real(half * h)), reset);
        let k3 = self.mean_generator(&(rho + &k2.scale_real(half * h)), reset);
        let k4 = self.mean_generator(&(rho + &k3.scale_real(h)), reset);
        let sum = &(&(&k1 + &k2.scale_real(T::lit(2.0))) + &k3.scale_real(T::lit(2.0))) + &k4;
        rho + &sum.scale_real(h / T::lit(6.0))
    }

    /// Runs one evolution and calls `observer(step, time, ρ)` after every step
    /// (and once for the initial state with step 0).
    pub fn run_observed<F>(
        &self,
        reset: &ResetProcess<T>,
        rho0: &DensityMatrix<T>,
        config: &SimConfig<T>,
        mode: RunMode,
        mut observer: F,
    ) -> Result<ObservableSeries<T>>
    where
        F: FnMut(usize, T, &DensityMatrix<T>),
    {
        reset.validate(self.model.n_qubits())?;
        config.validate(reset)?;
        if (config.dt - self.dt).abs() > T::epsilon() * self.dt {
            return Err(CavityError::InvalidConfig("config dt differs from the simulator dt".into()));
        }
        if rho0.dims() != self.ops.dims.as_slice() {
            return Err(CavityError::InvalidState(format!(
                "initial state dims {:?} do not match model dims {:?}",
                rho0.dims(),
                self.ops.dims
            )));
        }
        let d = self.model.d;
        let nq = self.model.n_qubits();
        let mut series = ObservableSeries::empty(self.warnings());
        let mut rng = match mode {
            RunMode::Trajectory { stream } => Some(stream_rng(config.seed, stream)),
            RunMode::Mean => None,
        };
        let p_reset = (reset.rate * self.dt).as_f64();
        let mut rho = rho0.clone();
        observer(0, T::zero(), &rho);
        let row = self.observe(T::zero(), &rho)?;
        let top0 = row[d];
        series.push_row(&row, d, nq);
        for step in 1..=config.n_steps() {
            rho = match rng.as_mut() {
                Some(rng) => {
                    let mut next = evolve_step(&rho, &self.propagator);
                    for &q in &reset.targets {
                        // one draw per target per step keeps streams aligned across rates
                        let u: f64 = rng.random();
                        if u < p_reset {
                            next = apply_reset(&next, q)?;
                        }
                    }
                    next
                }
                None => DensityMatrix::from_parts(self.rk4_step(rho.matrix(), reset), self.ops.dims.clone()),
            };
            let time = self.dt * T::from_count(step);
            observer(step, time, &rho);
            if step % config.record_stride == 0 {
                let row = self.observe(time, &rho)?;
                self.check_truncation(time, &row, top0, config.truncation_tol)?;
                series.push_row(&row, d, nq);
            }
        }
        Ok(series)
    }
}

/// One stochastic-reset trajectory seeded by `config.seed`.
pub fn run_trajectory<T: Real>(
    model: &CavityModel<T>,
    reset: &ResetProcess<T>,
    rho0: &DensityMatrix<T>,
    config: &SimConfig<T>,
) -> Result<ObservableSeries<T>> {
    Simulator::new(model, config.dt)?.run_observed(reset, rho0, config, RunMode::Trajectory { stream: 0 }, |_, _, _| {})
}

/// Deterministic evolution of the reset-averaged state.
pub fn run_mean_evolution<T: Real>(
    model: &CavityModel<T>,
    reset: &ResetProcess<T>,
    rho0: &DensityMatrix<T>,
    config: &SimConfig<T>,
) -> Result<ObservableSeries<T>> {
    Simulator::new(model, config.dt)?.run_observed(reset, rho0, config, RunMode::Mean, |_, _, _| {})
}

/// Mean and standard error of observables over an ensemble of trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSeries<T> {
    pub mean: ObservableSeries<T>,
    pub std_err: ObservableSeries<T>,
    pub n_trajectories: usize,
}

/// Runs `config.n_trajectories` trajectories on streams `0..n` of
/// `config.seed` and merges them in stream order.
pub fn run_ensemble<T: Real>(
    model: &CavityModel<T>,
    reset: &ResetProcess<T>,
    rho0: &DensityMatrix<T>,
    config: &SimConfig<T>,
) -> Result<EnsembleSeries<T>> {
    let sim = Simulator::new(model, config.dt)?;
    let runs: Vec<ObservableSeries<T>> = (0..config.n_trajectories as u64)
        .into_par_iter()
        .map(|stream| sim.run_observed(reset, rho0, config, RunMode::Trajectory { stream }, |_, _, _| {}))
        .collect::<Result<_>>()?;
    let first = &runs[0];
    let (d, nq) = (model.d, model.n_qubits());
    let len = first.len();
    let width = first.row(0).len();
    // Welford accumulation per entry, in stream order
    let mut mean = vec![vec![T::zero(); width]; len];
    let mut m2 = vec![vec![T::zero(); width]; len];
    for (k, run) in runs.iter().enumerate() {
        let count = T::from_count(k + 1);
        for i in 0..len {
            let row = run.row(i);
            for c in 0..width {
                let delta = row[c] - mean[i][c];
                mean[i][c] += delta / count;
                m2[i][c] += delta * (row[c] - mean[i][c]);
            }
        }
    }
    let n = runs.len();
    let mut mean_series = ObservableSeries::empty(first.warnings.clone());
    let mut err_series = ObservableSeries::empty(Vec::new());
    for i in 0..len {
        mean_series.push_row(&mean[i], d, nq);
        let mut err: Vec<T> = m2[i]
            .iter()
            .map(|&s| {
                if n > 1 {
                    (s / T::from_count(n - 1) / T::from_count(n)).sqrt()
                } else {
                    T::zero()
                }
            })
            .collect();
        err[0] = mean[i][0];
        err_series.push_row(&err, d, nq);
    }
    Ok(EnsembleSeries {
        mean: mean_series,
        std_err: err_series,
        n_trajectories: n,
    })
}

#[cfg(test)]
mod tests {
    use super::super::operators::QubitSpec;
    use super::*;

    fn resonant(d: usize, g: f64) -> CavityModel<f64> {
        CavityModel::new(d, 1.0, vec![QubitSpec { delta: 1.0, g }])
    }

    fn excited_cavity(d: usize) -> DensityMatrix<f64> {
        DensityMatrix::basis(&[1, 0], vec![d, 2]).unwrap()
    }

    #[test]
    fn diagonal_state_is_stationary_under_diagonal_h() {
        let m = CavityModel::new(3, 1.0, vec![QubitSpec { delta: 0.6, g: 0.0 }]);
        let sim = Simulator::new(&m, 0.05).unwrap();
        let mut rho = CMatrix::from_real_diagonal(&[0.1, 0.2, 0.3, 0.15, 0.2, 0.05]);
        rho.hermitize();
        let rho = DensityMatrix::new(rho, vec![3, 2]).unwrap();
        let next = evolve_step(&rho, &sim.propagator);
        assert!(next.matrix().max_abs_diff(rho.matrix()) < 1e-14);
    }

    #[test]
    fn non_unitary_propagator_rejected() {
        let err = Propagator::from_matrix(CMatrix::<f64>::identity(3).scale_real(1.01)).unwrap_err();
        assert!(matches!(err, CavityError::NonUnitary(_)));
    }

    #[test]
    fn uncoupled_populations_constant() {
        let m = CavityModel::new(3, 1.0, vec![QubitSpec { delta: 1.0, g: 0.0 }]);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut psi = vec![Complex::new(0.0, 0.0); 6];
        psi[0] = Complex::new(h, 0.0);
        psi[2] = Complex::new(0.0, h);
        let rho0 = DensityMatrix::pure(&psi, vec![3, 2]).unwrap();
        let cfg = SimConfig::new(0.02, 20.0, 0).with_stride(50);
        let s = run_trajectory(&m, &ResetProcess::none(), &rho0, &cfg).unwrap();
        for pops in &s.qudit_populations {
            assert!((pops[0] - 0.5).abs() < 1e-12 && (pops[1] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn weak_coupling_rabi_period() {
        let g = 0.01;
        let dt = 0.05;
        let cfg = SimConfig::new(dt, 1.5 * std::f64::consts::PI / g, 0).with_stride(4);
        let s = run_trajectory(&resonant(2, g), &ResetProcess::none(), &excited_cavity(2), &cfg).unwrap();
        let exc = s.qudit_excitation();
        // first minimum of the cavity excitation sits at half a period
        let (i_min, _) = exc
            .iter()
            .enumerate()
            .take_while(|(i, _)| s.times[*i] < std::f64::consts::PI / g)
            .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
        let measured = 2.0 * s.times[i_min];
        let analytic = std::f64::consts::PI / g;
        assert!((measured - analytic).abs() / analytic < 0.02, "period {measured} vs {analytic}");
        assert!(s.qubit_excitations[i_min][0] > 0.99);
    }

    #[test]
    fn zero_rate_trajectory_equals_unitary_evolution() {
        let m = resonant(3, 0.05);
        let cfg = SimConfig::new(0.02, 10.0, 5).with_stride(10).with_truncation_tol(None);
        let sim = Simulator::new(&m, 0.02).unwrap();
        let traj = run_trajectory(&m, &ResetProcess::new(0.0, vec![0]), &excited_cavity(3), &cfg).unwrap();
        let mut rho = excited_cavity(3);
        for (k, row_time) in traj.times.iter().enumerate().skip(1) {
            for _ in 0..10 {
                rho = evolve_step(&rho, &sim.propagator);
            }
            let expected = sim.observe(*row_time, &rho).unwrap();
            assert_eq!(traj.row(k), expected);
        }
    }

    #[test]
    fn zero_rate_mean_matches_propagator() {
        let m = resonant(3, 0.05);
        let cfg = SimConfig::new(0.01, 20.0, 0).with_stride(100).with_truncation_tol(None);
        let a = run_trajectory(&m, &ResetProcess::none(), &excited_cavity(3), &cfg).unwrap();
        let b = run_mean_evolution(&m, &ResetProcess::none(), &excited_cavity(3), &cfg).unwrap();
        for i in 0..a.len() {
            for (x, y) in a.row(i).iter().zip(b.row(i)) {
                assert!((x - y).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn trajectories_are_reproducible() {
        let m = resonant(3, 0.05);
        let reset = ResetProcess::new(0.2, vec![0]);
        let cfg = SimConfig::new(0.05, 30.0, 77).with_stride(10).with_truncation_tol(None);
        let a = run_trajectory(&m, &reset, &excited_cavity(3), &cfg).unwrap();
        let b = run_trajectory(&m, &reset, &excited_cavity(3), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn reset_channel_alone_decays_exponentially() {
        let rate: f64 = 0.3;
        let m = CavityModel::new(2, 1.0, vec![QubitSpec { delta: 1.0, g: 0.0 }]);
        let rho0 = DensityMatrix::basis(&[0, 1], vec![2, 2]).unwrap();
        let cfg = SimConfig::new(0.01, 10.0, 0).with_stride(50);
        let s = run_mean_evolution(&m, &ResetProcess::new(rate, vec![0]), &rho0, &cfg).unwrap();
        for (t, exc) in s.times.iter().zip(&s.qubit_excitations) {
            let expected = (-rate * t).exp();
            assert!((exc[0] - expected).abs() <= 0.01 * expected);
        }
    }

    #[test]
    fn config_errors() {
        let m = resonant(2, 0.05);
        let rho0 = excited_cavity(2);
        let cfg = SimConfig::new(0.5, 10.0, 0);
        assert!(run_trajectory(&m, &ResetProcess::new(3.0, vec![0]), &rho0, &cfg).is_err());
        assert!(run_trajectory(&m, &ResetProcess::new(0.1, vec![1]), &rho0, &cfg).is_err());
        assert!(run_trajectory(&m, &ResetProcess::new(-0.1, vec![0]), &rho0, &cfg).is_err());
        let wrong = DensityMatrix::basis(&[1, 0], vec![3, 2]).unwrap();
        assert!(run_trajectory(&m, &ResetProcess::none(), &wrong, &cfg).is_err());
    }

    #[test]
    fn truncation_guard_trips() {
        // |1,e⟩ exchanges with |2,g⟩, the top level of a d=3 cavity
        let m = CavityModel::new(3, 1.0, vec![QubitSpec { delta: 1.0, g: 0.3 }]);
        let rho0 = DensityMatrix::basis(&[1, 1], vec![3, 2]).unwrap();
        let cfg = SimConfig::new(0.02, 10.0, 0);
        assert!(matches!(
            run_mean_evolution(&m, &ResetProcess::none(), &rho0, &cfg),
            Err(CavityError::Truncation { .. })
        ));
        let cfg = cfg.with_truncation_tol(None);
        assert!(run_mean_evolution(&m, &ResetProcess::none(), &rho0, &cfg).is_ok());
    }

    #[test]
    fn large_step_warns() {
        let m = resonant(4, 0.05);
        let cfg = SimConfig::new(0.2, 1.0, 0).with_truncation_tol(None);
        let s = run_mean_evolution(&m, &ResetProcess::none(), &excited_cavity(4), &cfg).unwrap();
        assert_eq!(s.warnings.len(), 1);
    }
}
