//! Elastic-net relaxation for planar tour problems.
//!
//! A closed ring of nodes is pulled toward the cities by an annealed Gaussian
//! attraction while springs between neighbouring nodes keep it short. As the
//! Gaussian width `K` shrinks, each city captures a node and the ring order
//! becomes a tour.

mod energy;
mod geometry;
mod tour;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::scalar::Real;

pub use energy::{
    curvature_bound, data_energy, descent_direction, prior_energy, responsibilities, update_step,
    AssignmentWeights,
};
pub use geometry::{centroid, spread, City, NetNode, Point2};
pub use tour::{baseline_tours, extract_tour, nearest_neighbor_tour, tour_length, two_opt, Tour};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElasticNetError {
    #[error("need at least {need} cities, got {got}")]
    TooFewCities { got: usize, need: usize },
    #[error("city {index} has a non-finite coordinate")]
    NonFiniteCity { index: usize },
    #[error("invalid parameter {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
    #[error("update diverged at node {node}")]
    Diverged { node: usize },
    #[error("invalid tour: {0}")]
    InvalidTour(String),
}

pub type Result<T> = std::result::Result<T, ElasticNetError>;

fn invalid(field: &'static str, reason: impl Into<String>) -> ElasticNetError {
    ElasticNetError::InvalidParameter {
        field,
        reason: reason.into(),
    }
}

/// Spring stiffness, data weight and ring density.
///
/// [`solve`] measures `alpha` against the instance size: the spring weight it
/// actually uses is `alpha / spread²` (see [`ElasticNetParams::scaled_to`]),
/// which makes solutions scale-equivariant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticNetParams<T> {
    pub alpha: T,
    pub beta: T,
    /// Ring nodes per city.
    pub node_ratio: T,
}

impl<T: Real> Default for ElasticNetParams<T> {
    fn default() -> Self {
        Self {
            alpha: T::lit(50.0),
            beta: T::one(),
            node_ratio: T::lit(2.5),
        }
    }
}

impl<T: Real> ElasticNetParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > T::zero() && self.alpha.is_finite()) {
            return Err(invalid("alpha", "must be positive"));
        }
        if !(self.beta > T::zero() && self.beta.is_finite()) {
            return Err(invalid("beta", "must be positive"));
        }
        if !(self.node_ratio >= T::one() && self.node_ratio.is_finite()) {
            return Err(invalid("node_ratio", "must be at least 1"));
        }
        Ok(())
    }

    /// Parameters with the spring weight divided by `spread(cities)²`.
    pub fn scaled_to(&self, cities: &[City<T>]) -> Self {
        let s = spread(cities);
        let s2 = if s > T::zero() { s * s } else { T::one() };
        Self {
            alpha: self.alpha / s2,
            ..*self
        }
    }

    pub fn node_count(&self, n_cities: usize) -> usize {
        (self.node_ratio * T::from_count(n_cities))
            .ceil()
            .to_usize()
            .unwrap_or(n_cities)
            .max(2)
    }
}

/// Geometric annealing of the Gaussian width `K`.
///
/// `step_size` is measured in units of the inverse local curvature bound, so
/// any value in `(0, 1]` is a descent step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealSchedule<T> {
    pub k_start: T,
    pub k_decay: T,
    pub k_min: T,
    pub iters_per_stage: usize,
    pub step_size: T,
}

impl<T: Real> AnnealSchedule<T> {
    /// Default schedule scaled to the instance: `K` from `0.2·spread` down to
    /// `0.01·spread`.
    pub fn for_instance(cities: &[City<T>]) -> Self {
        let s = spread(cities);
        let s = if s > T::zero() { s } else { T::one() };
        Self {
            k_start: T::lit(0.2) * s,
            k_decay: T::lit(0.99),
            k_min: T::lit(0.01) * s,
            iters_per_stage: 10,
            step_size: T::one(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k_min > T::zero()) {
            return Err(invalid("k_min", "must be positive"));
        }
        if !(self.k_start > self.k_min && self.k_start.is_finite()) {
            return Err(invalid("k_start", "must exceed k_min"));
        }
        if !(self.k_decay > T::zero() && self.k_decay < T::one()) {
            return Err(invalid("k_decay", "must lie in (0, 1)"));
        }
        if self.iters_per_stage == 0 {
            return Err(invalid("iters_per_stage", "must be positive"));
        }
        if !(self.step_size > T::zero() && self.step_size.is_finite()) {
            return Err(invalid("step_size", "must be positive"));
        }
        Ok(())
    }

    /// The sequence `k_start, k_start·k_decay, …` while `≥ k_min`.
    pub fn scales(&self) -> impl Iterator<Item = T> + '_ {
        std::iter::successors(Some(self.k_start), move |&k| Some(k * self.k_decay))
            .take_while(move |&k| k >= self.k_min)
    }
}

fn check_cities<T: Real>(cities: &[City<T>], need: usize) -> Result<()> {
    if cities.len() < need {
        return Err(ElasticNetError::TooFewCities {
            got: cities.len(),
            need,
        });
    }
    if let Some(index) = cities.iter().position(|c| !c.is_finite()) {
        return Err(ElasticNetError::NonFiniteCity { index });
    }
    Ok(())
}

/// Places `ceil(node_ratio · #cities)` nodes on a circle of radius
/// `0.1·spread` around the centroid, each coordinate jittered by at most
/// `1e-4·spread`.
pub fn init_ring<T: Real>(cities: &[City<T>], params: &ElasticNetParams<T>, seed: u64) -> Result<Vec<NetNode<T>>> {
    check_cities(cities, 2)?;
    params.validate()?;
    let m = params.node_count(cities.len());
    let center = centroid(cities);
    let s = spread(cities);
    let s = if s > T::zero() { s } else { T::one() };
    let radius = T::lit(0.1) * s;
    let jitter = T::lit(1e-4) * s;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..m)
        .map(|i| {
            let angle = T::lit(std::f64::consts::TAU) * T::from_count(i) / T::from_count(m);
            let jx = T::lit(rng.random_range(-1.0..1.0)) * jitter;
            let jy = T::lit(rng.random_range(-1.0..1.0)) * jitter;
            center + Point2::new(angle.cos() * radius + jx, angle.sin() * radius + jy)
        })
        .collect())
}

/// Energies recorded at the end of one annealing stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageRecord<T> {
    pub stage: usize,
    pub k: T,
    pub prior_energy: T,
    pub data_energy: T,
    pub total: T,
    pub tour_length: T,
}

/// Result of [`solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct Solution<T> {
    pub nodes: Vec<NetNode<T>>,
    pub weights: AssignmentWeights<T>,
    pub trace: Vec<StageRecord<T>>,
    pub tour: Tour<T>,
}

/// Runs `iters` descent steps at fixed `k`, returning the energy after each.
pub fn relax_at_scale<T: Real>(
    nodes: &mut Vec<NetNode<T>>,
    cities: &[City<T>],
    params: &ElasticNetParams<T>,
    k: T,
    step_size: T,
    iters: usize,
) -> Result<Vec<T>> {
    let mut energies = Vec::with_capacity(iters);
    for _ in 0..iters {
        let step = step_size / curvature_bound(nodes, cities, params.alpha, params.beta, k);
        *nodes = update_step(nodes, cities, params.alpha, params.beta, k, step)?;
        energies.push(prior_energy(nodes, params.alpha) + data_energy(nodes, cities, params.beta, k));
    }
    Ok(energies)
}

/// Anneals the ring from `k_start` to `k_min` and extracts the final tour.
/// Recorded energies use the scaled spring weight.
pub fn solve<T: Real>(
    cities: &[City<T>],
    params: &ElasticNetParams<T>,
    schedule: &AnnealSchedule<T>,
    seed: u64,
) -> Result<Solution<T>> {
    check_cities(cities, 2)?;
    schedule.validate()?;
    let mut nodes = init_ring(cities, params, seed)?;
    let params = &params.scaled_to(cities);
    let mut trace = Vec::new();
    let mut last_k = schedule.k_start;
    for (stage, k) in schedule.scales().enumerate() {
        relax_at_scale(&mut nodes, cities, params, k, schedule.step_size, schedule.iters_per_stage)?;
        let prior = prior_energy(&nodes, params.alpha);
        let data = data_energy(&nodes, cities, params.beta, k);
        trace.push(StageRecord {
            stage,
            k,
            prior_energy: prior,
            data_energy: data,
            total: prior + data,
            tour_length: extract_tour(&nodes, cities).length(),
        });
        last_k = k;
    }
    let weights = responsibilities(&nodes, cities, last_k);
    let tour = extract_tour(&nodes, cities);
    Ok(Solution {
        nodes,
        weights,
        trace,
        tour,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point2<f64> {
        Point2::new(x, y)
    }

    fn square() -> Vec<Point2<f64>> {
        vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)]
    }

    #[test]
    fn ring_initialization() {
        let params = ElasticNetParams::default();
        let nodes = init_ring(&square(), &params, 5).unwrap();
        assert_eq!(nodes.len(), 10);
        let c = centroid(&square());
        assert_eq!(c, p(0.5, 0.5));
        for w in &nodes {
            assert!(w.dist(c) <= 0.1 * 2f64.sqrt() + 1e-3);
        }
        assert_eq!(nodes, init_ring(&square(), &params, 5).unwrap());
        assert_ne!(nodes, init_ring(&square(), &params, 6).unwrap());

        let two = init_ring(&[p(0.0, 0.0), p(1.0, 0.0)], &params, 1).unwrap();
        assert_eq!(two.len(), 5);
        for w in &two {
            assert!((w.dist(p(0.5, 0.0)) - 0.1).abs() <= 1e-3);
        }
    }

    #[test]
    fn ring_rejects_bad_input() {
        let params = ElasticNetParams::default();
        assert!(matches!(
            init_ring(&[p(0.0, 0.0)], &params, 0),
            Err(ElasticNetError::TooFewCities { got: 1, need: 2 })
        ));
        assert!(init_ring(&[p(0.0, 0.0), p(f64::NAN, 0.0)], &params, 0).is_err());
        let bad = ElasticNetParams { alpha: -1.0, ..params };
        assert!(init_ring(&square(), &bad, 0).is_err());
    }

    #[test]
    fn schedule_validation() {
        let mut s = AnnealSchedule::for_instance(&square());
        assert!(s.validate().is_ok());
        s.k_decay = 1.0;
        assert!(s.validate().is_err());
        let mut s = AnnealSchedule::for_instance(&square());
        s.k_min = s.k_start * 2.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn unit_square_solves_to_perimeter() {
        let cities = square();
        let sol = solve(&cities, &ElasticNetParams::default(), &AnnealSchedule::for_instance(&cities), 3).unwrap();
        assert!((sol.tour.length() - 4.0).abs() < 1e-12);
        for m in 0..4 {
            let s: f64 = sol.weights.row(m).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn solve_is_deterministic() {
        let cities = vec![p(0.1, 0.2), p(0.8, 0.3), p(0.5, 0.9), p(0.2, 0.7), p(0.9, 0.9)];
        let sched = AnnealSchedule::for_instance(&cities);
        let a = solve(&cities, &ElasticNetParams::default(), &sched, 42).unwrap();
        let b = solve(&cities, &ElasticNetParams::default(), &sched, 42).unwrap();
        assert_eq!(a.trace, b.trace);
    }
}
