use std::ops::{Add, AddAssign, Mul, Sub};

use crate::scalar::Real;

/// Point or displacement in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Point2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y
    }

    pub fn norm_sqr(self) -> T {
        self.dot(self)
    }

    pub fn dist_sqr(self, other: Self) -> T {
        (self - other).norm_sqr()
    }

    pub fn dist(self, other: Self) -> T {
        self.dist_sqr(other).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl<T: Real> Add for Point2<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl<T: Real> AddAssign for Point2<T> {
    fn add_assign(&mut self, rhs: Self) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl<T: Real> Sub for Point2<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl<T: Real> Mul<T> for Point2<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

/// A city to be visited.
pub type City<T> = Point2<T>;

/// A node `w(r_n)` of the elastic ring.
pub type NetNode<T> = Point2<T>;

pub fn centroid<T: Real>(points: &[Point2<T>]) -> Point2<T> {
    let mut c = Point2::zero();
    for &p in points {
        c += p;
    }
    c * (T::one() / T::from_count(points.len().max(1)))
}

/// Diagonal of the axis-aligned bounding box; the instance length scale.
pub fn spread<T: Real>(points: &[Point2<T>]) -> T {
    if points.is_empty() {
        return T::zero();
    }
    let (mut lo, mut hi) = (points[0], points[0]);
    for p in points {
        lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    hi.dist(lo)
}
