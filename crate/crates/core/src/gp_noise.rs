//! Gaussian-process noise on a uniform time grid.
//!
//! A signal `f(t)` with mean `f̄(t)` and autocorrelation `A(t, t')` has density
//! `exp{-½ (f - f̄)ᵀ A⁻¹ (f - f̄)}` once discretized. Paths are drawn as
//! `f̄ + L z` with `L Lᵀ = A` and `z` standard normal. The same noise can drive a
//! classical harmonic oscillator `ẍ = -ω₀² x + f(t)/m`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::Cholesky;
use crate::scalar::Real;

/// Diagonal jitter added before factorization, relative to the kernel variance.
pub const JITTER: f64 = 1e-10;

/// Largest `ω₀·dt` accepted by [`drive_oscillator`].
pub const MAX_OMEGA_DT: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("covariance factorization failed at index {index} even with jitter")]
    Conditioning { index: usize },
    #[error("need at least 2 paths, got {0}")]
    TooFewPaths(usize),
    #[error("paths have inconsistent lengths")]
    RaggedPaths,
    #[error("omega0·dt = {0} exceeds the accuracy guard {MAX_OMEGA_DT}")]
    StepTooLarge(f64),
    #[error("invalid oscillator: {0}")]
    InvalidOscillator(String),
}

pub type Result<T> = std::result::Result<T, NoiseError>;

/// Mean function `f̄(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeanFunction<T> {
    Constant(T),
    Linear { offset: T, slope: T },
    Sinusoid { amplitude: T, omega: T, phase: T },
}

impl<T: Real> MeanFunction<T> {
    pub fn eval(&self, t: T) -> T {
        match *self {
            MeanFunction::Constant(c) => c,
            MeanFunction::Linear { offset, slope } => offset + slope * t,
            MeanFunction::Sinusoid { amplitude, omega, phase } => amplitude * (omega * t + phase).sin(),
        }
    }
}

impl<T: Real> Default for MeanFunction<T> {
    fn default() -> Self {
        MeanFunction::Constant(T::zero())
    }
}

/// Autocorrelation family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    White,
    OrnsteinUhlenbeck,
    SquaredExponential,
}

/// Mean and autocorrelation of a Gaussian-process signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpKernel<T> {
    pub mean: MeanFunction<T>,
    pub kind: KernelKind,
    pub variance: T,
    /// Ignored for white noise.
    pub correlation_time: T,
}

impl<T: Real> GpKernel<T> {
    pub fn white(variance: T) -> Self {
        Self {
            mean: MeanFunction::default(),
            kind: KernelKind::White,
            variance,
            correlation_time: T::one(),
        }
    }

    pub fn ornstein_uhlenbeck(variance: T, correlation_time: T) -> Self {
        Self {
            mean: MeanFunction::default(),
            kind: KernelKind::OrnsteinUhlenbeck,
            variance,
            correlation_time,
        }
    }

    pub fn squared_exponential(variance: T, correlation_time: T) -> Self {
        Self {
            mean: MeanFunction::default(),
            kind: KernelKind::SquaredExponential,
            variance,
            correlation_time,
        }
    }

    pub fn with_mean(mut self, mean: MeanFunction<T>) -> Self {
        self.mean = mean;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.variance > T::zero() && self.variance.is_finite()) {
            return Err(NoiseError::InvalidKernel(format!("variance {} must be positive", self.variance)));
        }
        if self.kind != KernelKind::White && !(self.correlation_time > T::zero() && self.correlation_time.is_finite()) {
            return Err(NoiseError::InvalidKernel(format!(
                "correlation_time {} must be positive",
                self.correlation_time
            )));
        }
        Ok(())
    }

    /// Stationary autocorrelation at time separation `lag` for a grid step `dt`.
    pub fn autocorrelation(&self, lag: T, dt: T) -> T {
        match self.kind {
            KernelKind::White => {
                if lag == T::zero() {
                    self.variance / dt
                } else {
                    T::zero()
                }
            }
            KernelKind::OrnsteinUhlenbeck => self.variance * (-lag.abs() / self.correlation_time).exp(),
            KernelKind::SquaredExponential => {
                let r = lag / self.correlation_time;
                self.variance * (-r * r * T::lit(0.5)).exp()
            }
        }
    }
}

/// Uniform grid `t_i = t0 + i·dt`, `i < n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid<T> {
    pub t0: T,
    pub dt: T,
    pub n: usize,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(t0: T, dt: T, n: usize) -> Result<Self> {
        let grid = Self { t0, dt, n };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(NoiseError::InvalidGrid("n must be at least 1".into()));
        }
        if !(self.dt > T::zero() && self.dt.is_finite()) || !self.t0.is_finite() {
            return Err(NoiseError::InvalidGrid(format!("dt {} must be positive", self.dt)));
        }
        Ok(())
    }

    pub fn time(&self, i: usize) -> T {
        self.t0 + self.dt * T::from_count(i)
    }

    pub fn times(&self) -> Vec<T> {
        (0..self.n).map(|i| self.time(i)).collect()
    }
}

/// One realization of the signal on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath<T> {
    pub values: Vec<T>,
}

/// Row-major `n × n` matrix of `A(t_i, t_j)`. White noise has variance
/// `variance/dt` so impulse statistics do not depend on the grid.
pub fn covariance_matrix<T: Real>(kernel: &GpKernel<T>, grid: &TimeGrid<T>) -> Vec<T> {
    let n = grid.n;
    let mut a = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let lag = grid.dt * T::from_count(i - j);
            let v = kernel.autocorrelation(lag, grid.dt);
            a[i * n + j] = v;
            a[j * n + i] = v;
        }
    }
    a
}

/// Factor `L` with `L Lᵀ = A + jitter·variance·I`.
#[derive(Debug, Clone)]
pub enum CovarianceFactor<T> {
    /// White noise: `L` is diagonal with constant entries.
    Diagonal { n: usize, sigma: T },
    Dense(Cholesky<T>),
}

impl<T: Real> CovarianceFactor<T> {
    pub fn new(kernel: &GpKernel<T>, grid: &TimeGrid<T>) -> Result<Self> {
        kernel.validate()?;
        grid.validate()?;
        let jitter = T::lit(JITTER) * kernel.variance;
        if kernel.kind == KernelKind::White {
            return Ok(CovarianceFactor::Diagonal {
                n: grid.n,
                sigma: (kernel.variance / grid.dt + jitter).sqrt(),
            });
        }
        let mut a = covariance_matrix(kernel, grid);
        for i in 0..grid.n {
            a[i * grid.n + i] += jitter;
        }
        Cholesky::factor(grid.n, &a)
            .map(CovarianceFactor::Dense)
            .map_err(|e| match e {
                crate::linalg::LinalgError::NotPositiveDefinite { index, .. } => NoiseError::Conditioning { index },
                _ => NoiseError::Conditioning { index: 0 },
            })
    }

    pub fn dim(&self) -> usize {
        match self {
            CovarianceFactor::Diagonal { n, .. } => *n,
            CovarianceFactor::Dense(l) => l.dim(),
        }
    }

    pub fn mul_vec(&self, z: &[T]) -> Vec<T> {
        match self {
            CovarianceFactor::Diagonal { sigma, .. } => z.iter().map(|&v| v * *sigma).collect(),
            CovarianceFactor::Dense(l) => l.mul_vec(z),
        }
    }

    /// `L⁻¹ x`.
    pub fn whiten(&self, x: &[T]) -> Vec<T> {
        match self {
            CovarianceFactor::Diagonal { sigma, .. } => x.iter().map(|&v| v / *sigma).collect(),
            CovarianceFactor::Dense(l) => l.solve_lower(x),
        }
    }
}

/// Independent random stream for item `index` under a run seed.
pub(crate) fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn standard_normals<T: Real>(rng: &mut ChaCha8Rng, n: usize) -> Vec<T> {
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            T::lit(z)
        })
        .collect()
}

/// Draws `count` paths; path `i` uses stream `(seed, i)`.
pub fn sample_paths<T: Real>(kernel: &GpKernel<T>, grid: &TimeGrid<T>, count: usize, seed: u64) -> Result<Vec<SamplePath<T>>> {
    let factor = CovarianceFactor::new(kernel, grid)?;
    Ok(sample_with_factor(kernel, grid, &factor, count, seed))
}

/// Same as [`sample_paths`] with a precomputed factor.
pub fn sample_with_factor<T: Real>(
    kernel: &GpKernel<T>,
    grid: &TimeGrid<T>,
    factor: &CovarianceFactor<T>,
    count: usize,
    seed: u64,
) -> Vec<SamplePath<T>> {
    let mean: Vec<T> = grid.times().into_iter().map(|t| kernel.mean.eval(t)).collect();
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let z = standard_normals(&mut rng, grid.n);
            let values = factor.mul_vec(&z).into_iter().zip(&mean).map(|(v, &m)| v + m).collect();
            SamplePath { values }
        })
        .collect()
}

/// Unbiased sample mean and row-major covariance across paths.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalStats<T> {
    pub mean: Vec<T>,
    pub covariance: Vec<T>,
}

impl<T: Real> EmpiricalStats<T> {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn cov(&self, i: usize, j: usize) -> T {
        self.covariance[i * self.dim() + j]
    }

    pub fn variance(&self) -> Vec<T> {
        (0..self.dim()).map(|i| self.cov(i, i)).collect()
    }
}

pub fn empirical_stats<T: Real>(paths: &[SamplePath<T>]) -> Result<EmpiricalStats<T>> {
    if paths.len() < 2 {
        return Err(NoiseError::TooFewPaths(paths.len()));
    }
    let n = paths[0].values.len();
    if paths.iter().any(|p| p.values.len() != n) {
        return Err(NoiseError::RaggedPaths);
    }
    let count = T::from_count(paths.len());
    let mut mean = vec![T::zero(); n];
    for p in paths {
        for (m, &v) in mean.iter_mut().zip(&p.values) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= count;
    }
    let mut covariance = vec![T::zero(); n * n];
    let mut centered = vec![T::zero(); n];
    for p in paths {
        for ((c, &v), &m) in centered.iter_mut().zip(&p.values).zip(&mean) {
            *c = v - m;
        }
        for i in 0..n {
            let ci = centered[i];
            let row = &mut covariance[i * n..(i + 1) * n];
            for (r, &cj) in row.iter_mut().zip(&centered) {
                *r += ci * cj;
            }
        }
    }
    let denom = count - T::one();
    for c in covariance.iter_mut() {
        *c /= denom;
    }
    Ok(EmpiricalStats { mean, covariance })
}

/// Empirical autocorrelation `⟨(f(t) - f̄)(f(t + k·dt) - f̄)⟩` for lags
/// `0..=max_lag`, averaged over paths and over start times.
pub fn empirical_autocovariance<T: Real>(paths: &[SamplePath<T>], mean: &[T], max_lag: usize) -> Vec<T> {
    let n = mean.len();
    (0..=max_lag.min(n.saturating_sub(1)))
        .map(|lag| {
            let mut acc = T::zero();
            let mut count = 0usize;
            for p in paths {
                for i in 0..n - lag {
                    acc += (p.values[i] - mean[i]) * (p.values[i + lag] - mean[i + lag]);
                    count += 1;
                }
            }
            acc / T::from_count(count.max(1))
        })
        .collect()
}

/// Harmonic oscillator `m ẍ = -m ω₀² x + f(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Oscillator<T> {
    pub omega0: T,
    pub mass: T,
    pub x0: T,
    pub v0: T,
}

impl<T: Real> Oscillator<T> {
    pub fn at_rest(omega0: T, mass: T) -> Self {
        Self {
            omega0,
            mass,
            x0: T::zero(),
            v0: T::zero(),
        }
    }

    pub fn energy(&self, x: T, v: T) -> T {
        T::lit(0.5) * self.mass * (v * v + self.omega0 * self.omega0 * x * x)
    }

    fn validate(&self, dt: T) -> Result<()> {
        if !(self.omega0 > T::zero()) || !(self.mass > T::zero()) {
            return Err(NoiseError::InvalidOscillator("omega0 and mass must be positive".into()));
        }
        if self.omega0 * dt > T::lit(MAX_OMEGA_DT) {
            return Err(NoiseError::StepTooLarge((self.omega0 * dt).as_f64()));
        }
        Ok(())
    }
}

/// Positions and velocities per path, sampled on the grid (`n` points, the
/// first being the initial state).
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorEnsemble<T> {
    pub positions: Vec<Vec<T>>,
    pub velocities: Vec<Vec<T>>,
}

impl<T: Real> OscillatorEnsemble<T> {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Ensemble-mean energy at each grid point.
    pub fn mean_energy(&self, osc: &Oscillator<T>) -> Vec<T> {
        let steps = self.positions.first().map_or(0, Vec::len);
        let count = T::from_count(self.len().max(1));
        (0..steps)
            .map(|i| {
                self.positions
                    .iter()
                    .zip(&self.velocities)
                    .map(|(x, v)| osc.energy(x[i], v[i]))
                    .sum::<T>()
                    / count
            })
            .collect()
    }
}

/// Integrates one path with the force held constant over each step at its
/// left-endpoint value. Each step is the exact solution for that constant
/// force: a rotation about the shifted equilibrium `f / (m ω₀²)`.
pub fn integrate_oscillator<T: Real>(osc: &Oscillator<T>, dt: T, force: &[T]) -> (Vec<T>, Vec<T>) {
    let n = force.len();
    let w = osc.omega0;
    let inv_m = T::one() / osc.mass;
    let (c, s) = ((w * dt).cos(), (w * dt).sin());
    let mut xs = Vec::with_capacity(n);
    let mut vs = Vec::with_capacity(n);
    let (mut x, mut v) = (osc.x0, osc.v0);
    for (i, &f_i) in force.iter().enumerate() {
        xs.push(x);
        vs.push(v);
        if i + 1 == n {
            break;
        }
        let a = f_i * inv_m;
        if w > T::zero() {
            let u = x - a / (w * w);
            let (u_next, v_next) = (u * c + v / w * s, v * c - u * w * s);
            x = u_next + a / (w * w);
            v = v_next;
        } else {
            x += v * dt + T::lit(0.5) * a * dt * dt;
            v += a * dt;
        }
    }
    (xs, vs)
}

/// Drives the oscillator with explicit force paths.
pub fn drive_with_forces<T: Real>(osc: &Oscillator<T>, grid: &TimeGrid<T>, forces: &[SamplePath<T>]) -> Result<OscillatorEnsemble<T>> {
    grid.validate()?;
    osc.validate(grid.dt)?;
    if forces.iter().any(|f| f.values.len() != grid.n) {
        return Err(NoiseError::RaggedPaths);
    }
    let (positions, velocities) = forces
        .par_iter()
        .map(|f| integrate_oscillator(osc, grid.dt, &f.values))
        .unzip();
    Ok(OscillatorEnsemble { positions, velocities })
}

/// Drives the oscillator with `count` sampled noise paths.
pub fn drive_oscillator<T: Real>(
    osc: &Oscillator<T>,
    kernel: &GpKernel<T>,
    grid: &TimeGrid<T>,
    count: usize,
    seed: u64,
) -> Result<OscillatorEnsemble<T>> {
    grid.validate()?;
    osc.validate(grid.dt)?;
    let forces = sample_paths(kernel, grid, count, seed)?;
    drive_with_forces(osc, grid, &forces)
}
