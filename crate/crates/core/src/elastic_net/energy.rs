//! Energies, soft assignments and gradient steps of the elastic net.
//!
//! Total energy for a ring of nodes `w_n` and cities `φ_m`:
//!
//! ```text
//! E = (α/2) Σ_n |w_{n+1} - w_n|²  -  (β/2) Σ_m log Σ_n exp(-|w_n - φ_m|² / 2K²)
//! ```

use super::geometry::{City, NetNode, Point2};
use super::{ElasticNetError, Result};
use crate::scalar::Real;

/// Soft city-to-node assignment weights; row `m` holds city `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentWeights<T> {
    n_nodes: usize,
    lambda: Vec<T>,
}

impl<T: Real> AssignmentWeights<T> {
    pub fn n_cities(&self) -> usize {
        if self.n_nodes == 0 {
            0
        } else {
            self.lambda.len() / self.n_nodes
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn row(&self, city: usize) -> &[T] {
        &self.lambda[city * self.n_nodes..(city + 1) * self.n_nodes]
    }

    pub fn get(&self, city: usize, node: usize) -> T {
        self.lambda[city * self.n_nodes + node]
    }

    /// Total weight pulling on each node, `Σ_m λ[m][n]`.
    pub fn node_loads(&self) -> Vec<T> {
        let mut loads = vec![T::zero(); self.n_nodes];
        for row in self.lambda.chunks(self.n_nodes) {
            for (l, &w) in loads.iter_mut().zip(row) {
                *l += w;
            }
        }
        loads
    }
}

#[inline]
fn neighbours(n: usize, len: usize) -> (usize, usize) {
    ((n + len - 1) % len, (n + 1) % len)
}

/// Spring energy `(α/2) Σ |w_{n+1} - w_n|²` on the closed ring.
pub fn prior_energy<T: Real>(nodes: &[NetNode<T>], alpha: T) -> T {
    if nodes.len() < 2 {
        return T::zero();
    }
    let sum: T = (0..nodes.len())
        .map(|n| nodes[(n + 1) % nodes.len()].dist_sqr(nodes[n]))
        .sum();
    alpha * T::lit(0.5) * sum
}

/// `log Σ_n exp(-d²_n / 2k²)` for one city, evaluated with max-subtraction.
fn log_sum_gauss<T: Real>(nodes: &[NetNode<T>], city: City<T>, inv_two_k2: T) -> T {
    let mut max = T::neg_infinity();
    for &w in nodes {
        max = max.max(-w.dist_sqr(city) * inv_two_k2);
    }
    if max == T::neg_infinity() {
        return max;
    }
    let s: T = nodes
        .iter()
        .map(|&w| (-w.dist_sqr(city) * inv_two_k2 - max).exp())
        .sum();
    max + s.ln()
}

/// Data energy `-(β/2) Σ_m log Σ_n exp(-|w_n - φ_m|² / 2k²)`.
///
/// With `k = 1/√2` the Gaussian is `exp(-|w - φ|²)`.
pub fn data_energy<T: Real>(nodes: &[NetNode<T>], cities: &[City<T>], beta: T, k: T) -> T {
    let inv = T::one() / (T::lit(2.0) * k * k);
    let sum: T = cities
        .iter()
        .map(|&c| log_sum_gauss(nodes, c, inv))
        .sum();
    -beta * T::lit(0.5) * sum
}

/// Normalized Gaussian responsibilities `λ[m][n]`.
pub fn responsibilities<T: Real>(nodes: &[NetNode<T>], cities: &[City<T>], k: T) -> AssignmentWeights<T> {
    let n_nodes = nodes.len();
    let inv = T::one() / (T::lit(2.0) * k * k);
    let mut lambda = Vec::with_capacity(cities.len() * n_nodes);
    let mut row = vec![T::zero(); n_nodes];
    for &c in cities {
        let mut max = T::neg_infinity();
        for (r, &w) in row.iter_mut().zip(nodes) {
            *r = -w.dist_sqr(c) * inv;
            max = max.max(*r);
        }
        let mut total = T::zero();
        for r in row.iter_mut() {
            *r = (*r - max).exp();
            total += *r;
        }
        lambda.extend(row.iter().map(|&r| r / total));
    }
    AssignmentWeights { n_nodes, lambda }
}

/// `-∇E` with respect to every node.
pub fn descent_direction<T: Real>(
    nodes: &[NetNode<T>],
    cities: &[City<T>],
    alpha: T,
    beta: T,
    k: T,
) -> Vec<Point2<T>> {
    let len = nodes.len();
    let weights = responsibilities(nodes, cities, k);
    let pull = beta / (T::lit(2.0) * k * k);
    let mut dir = vec![Point2::zero(); len];
    for (m, &city) in cities.iter().enumerate() {
        for (n, (d, &w)) in dir.iter_mut().zip(nodes).enumerate() {
            let lam = weights.get(m, n);
            if lam > T::zero() {
                *d += (city - w) * (pull * lam);
            }
        }
    }
    if len >= 2 {
        for (n, d) in dir.iter_mut().enumerate() {
            let (prev, next) = neighbours(n, len);
            let lap = nodes[next] + nodes[prev] - nodes[n] * T::lit(2.0);
            *d += lap * alpha;
        }
    }
    dir
}

/// One explicit gradient step `w ← w - step·∇E`.
pub fn update_step<T: Real>(
    nodes: &[NetNode<T>],
    cities: &[City<T>],
    alpha: T,
    beta: T,
    k: T,
    step_size: T,
) -> Result<Vec<NetNode<T>>> {
    let dir = descent_direction(nodes, cities, alpha, beta, k);
    nodes
        .iter()
        .zip(dir)
        .enumerate()
        .map(|(node, (&w, d))| {
            let next = w + d * step_size;
            if next.is_finite() {
                Ok(next)
            } else {
                Err(ElasticNetError::Diverged { node })
            }
        })
        .collect()
}

/// Local curvature bound of the energy: `β/(2k²) max_n Σ_m λ[m][n] + 4α`.
///
/// Steps of `1 / bound` are descent steps.
pub fn curvature_bound<T: Real>(nodes: &[NetNode<T>], cities: &[City<T>], alpha: T, beta: T, k: T) -> T {
    let loads = responsibilities(nodes, cities, k).node_loads();
    let max_load = loads.into_iter().fold(T::zero(), T::max);
    beta / (T::lit(2.0) * k * k) * max_load + T::lit(4.0) * alpha
}
