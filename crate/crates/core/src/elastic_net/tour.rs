//! Closed tours: extraction from a relaxed ring and simple baselines.

use std::cmp::Ordering;

use super::geometry::{City, NetNode};
use super::{ElasticNetError, Result};
use crate::scalar::Real;

/// Closed tour visiting every city once.
#[derive(Debug, Clone, PartialEq)]
pub struct Tour<T> {
    order: Vec<usize>,
    length: T,
}

impl<T: Real> Tour<T> {
    /// Validates `order` as a permutation of `0..cities.len()` and measures it.
    pub fn new(order: Vec<usize>, cities: &[City<T>]) -> Result<Self> {
        if order.len() != cities.len() {
            return Err(ElasticNetError::InvalidTour(format!(
                "tour has {} entries for {} cities",
                order.len(),
                cities.len()
            )));
        }
        let mut seen = vec![false; cities.len()];
        for &c in &order {
            if c >= cities.len() || std::mem::replace(&mut seen[c], true) {
                return Err(ElasticNetError::InvalidTour(format!("city {c} repeated or out of range")));
            }
        }
        let length = tour_length(&order, cities);
        Ok(Self { order, length })
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn length(&self) -> T {
        self.length
    }

    pub fn into_order(self) -> Vec<usize> {
        self.order
    }
}

/// Euclidean length of the closed cycle through `order`.
pub fn tour_length<T: Real>(order: &[usize], cities: &[City<T>]) -> T {
    if order.len() < 2 {
        return T::zero();
    }
    (0..order.len())
        .map(|i| cities[order[i]].dist(cities[order[(i + 1) % order.len()]]))
        .sum()
}

/// Reads a city order off the ring: each city goes to its nearest node (lower
/// index on ties); cities sharing a node are ordered by their projection on
/// the local ring direction.
pub fn extract_tour<T: Real>(nodes: &[NetNode<T>], cities: &[City<T>]) -> Tour<T> {
    let len = nodes.len();
    let mut keyed: Vec<(usize, T, usize)> = cities
        .iter()
        .enumerate()
        .map(|(ci, &c)| {
            let mut best = 0;
            let mut best_d = T::infinity();
            for (ni, &w) in nodes.iter().enumerate() {
                let d = w.dist_sqr(c);
                if d < best_d {
                    best_d = d;
                    best = ni;
                }
            }
            let proj = if len >= 2 {
                let dir = nodes[(best + 1) % len] - nodes[(best + len - 1) % len];
                (c - nodes[best]).dot(dir)
            } else {
                T::zero()
            };
            (best, proj, ci)
        })
        .collect();
    keyed.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal))
            .then(a.2.cmp(&b.2))
    });
    let order: Vec<usize> = keyed.into_iter().map(|(_, _, c)| c).collect();
    let length = tour_length(&order, cities);
    Tour { order, length }
}

/// Greedy nearest-neighbour tour starting at city 0.
pub fn nearest_neighbor_tour<T: Real>(cities: &[City<T>]) -> Tour<T> {
    let n = cities.len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    if n == 0 {
        return Tour { order, length: T::zero() };
    }
    let mut current = 0;
    visited[0] = true;
    order.push(0);
    for _ in 1..n {
        let mut best = usize::MAX;
        let mut best_d = T::infinity();
        for (j, &c) in cities.iter().enumerate() {
            if !visited[j] {
                let d = cities[current].dist_sqr(c);
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
        }
        visited[best] = true;
        order.push(best);
        current = best;
    }
    let length = tour_length(&order, cities);
    Tour { order, length }
}

/// First-improvement 2-opt descent to a local optimum.
pub fn two_opt<T: Real>(start: &Tour<T>, cities: &[City<T>]) -> Tour<T> {
    let mut order = start.order.clone();
    let n = order.len();
    if n < 4 {
        return start.clone();
    }
    let d = |a: usize, b: usize| cities[a].dist(cities[b]);
    let eps = T::tol(1e-12);
    let mut improved = true;
    while improved {
        improved = false;
        for i in 0..n - 1 {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b) = (order[i], order[i + 1]);
                let (c, e) = (order[j], order[(j + 1) % n]);
                let delta = d(a, c) + d(b, e) - d(a, b) - d(c, e);
                if delta < -eps {
                    order[i + 1..=j].reverse();
                    improved = true;
                }
            }
        }
    }
    let length = tour_length(&order, cities);
    Tour { order, length }
}

/// Nearest-neighbour and 2-opt reference tours (≥ 3 cities).
pub fn baseline_tours<T: Real>(cities: &[City<T>]) -> Result<(Tour<T>, Tour<T>)> {
    if cities.len() < 3 {
        return Err(ElasticNetError::TooFewCities {
            got: cities.len(),
            need: 3,
        });
    }
    let nn = nearest_neighbor_tour(cities);
    let opt = two_opt(&nn, cities);
    Ok((nn, opt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elastic_net::Point2;
    use approx::assert_abs_diff_eq;

    fn p(x: f64, y: f64) -> Point2<f64> {
        Point2::new(x, y)
    }

    #[test]
    fn identity_when_cities_sit_on_nodes() {
        let cities = vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)];
        let t = extract_tour(&cities, &cities);
        assert_eq!(t.order(), &[0, 1, 2, 3]);
        assert_abs_diff_eq!(t.length(), 4.0, epsilon = 1e-15);
    }

    #[test]
    fn reversed_ring_reverses_tour() {
        let cities = vec![p(0.0, 0.0), p(2.0, 0.1), p(2.5, 1.0), p(0.4, 1.5), p(-0.5, 0.8)];
        let nodes: Vec<_> = (0..10)
            .map(|i| {
                let a = i as f64 / 10.0 * std::f64::consts::TAU;
                p(1.0 + 1.4 * a.cos(), 0.7 + 0.9 * a.sin())
            })
            .collect();
        let fwd = extract_tour(&nodes, &cities);
        let mut rev_nodes = nodes.clone();
        rev_nodes.reverse();
        let rev = extract_tour(&rev_nodes, &cities);
        let mut expected = fwd.order().to_vec();
        expected.reverse();
        assert_eq!(rev.order(), expected.as_slice());
        assert_abs_diff_eq!(rev.length(), fwd.length(), epsilon = 1e-12);
    }

    #[test]
    fn shared_node_ordered_by_projection() {
        let nodes = vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)];
        // both near node 1; ring direction there is node2 - node0 = (1, 1)
        let cities = vec![p(1.05, 0.05), p(0.95, -0.05), p(0.0, 1.0)];
        let t = extract_tour(&nodes, &cities);
        assert_eq!(t.order(), &[1, 0, 2]);
    }

    #[test]
    fn triangle_baselines_agree() {
        let cities = vec![p(0.0, 0.0), p(3.0, 0.0), p(0.0, 4.0)];
        let (nn, opt) = baseline_tours(&cities).unwrap();
        assert_abs_diff_eq!(nn.length(), 12.0, epsilon = 1e-12);
        assert_abs_diff_eq!(opt.length(), 12.0, epsilon = 1e-12);
        assert!(baseline_tours(&cities[..2]).is_err());
    }

    #[test]
    fn tour_validation() {
        let cities = vec![p(0.0, 0.0), p(1.0, 0.0), p(0.0, 1.0)];
        assert!(Tour::new(vec![0, 1, 1], &cities).is_err());
        assert!(Tour::new(vec![0, 1], &cities).is_err());
        assert!(Tour::new(vec![0, 1, 3], &cities).is_err());
        assert!(Tour::new(vec![2, 0, 1], &cities).is_ok());
    }
}
