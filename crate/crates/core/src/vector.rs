use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// A point or vector in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlaneVector {
    pub x: f64,
    pub y: f64,
}

impl PlaneVector {
    pub const ZERO: PlaneVector = PlaneVector { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        PlaneVector { x, y }
    }

    /// Counterclockwise rotation by a right angle: (x, y) -> (-y, x).
    #[inline]
    pub fn perp(self) -> Self {
        PlaneVector::new(-self.y, self.x)
    }

    #[inline]
    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Rotates counterclockwise by `angle` radians.
    pub fn rotate(self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        PlaneVector::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl Add for PlaneVector {
    type Output = PlaneVector;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        PlaneVector::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for PlaneVector {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for PlaneVector {
    type Output = PlaneVector;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        PlaneVector::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl SubAssign for PlaneVector {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        self.x -= rhs.x;
        self.y -= rhs.y;
    }
}

impl Neg for PlaneVector {
    type Output = PlaneVector;
    #[inline]
    fn neg(self) -> Self {
        PlaneVector::new(-self.x, -self.y)
    }
}

impl Mul<f64> for PlaneVector {
    type Output = PlaneVector;
    #[inline]
    fn mul(self, rhs: f64) -> Self {
        PlaneVector::new(self.x * rhs, self.y * rhs)
    }
}

impl Mul<PlaneVector> for f64 {
    type Output = PlaneVector;
    #[inline]
    fn mul(self, rhs: PlaneVector) -> PlaneVector {
        PlaneVector::new(self * rhs.x, self * rhs.y)
    }
}

impl From<(f64, f64)> for PlaneVector {
    fn from((x, y): (f64, f64)) -> Self {
        PlaneVector::new(x, y)
    }
}

impl From<[f64; 2]> for PlaneVector {
    fn from([x, y]: [f64; 2]) -> Self {
        PlaneVector::new(x, y)
    }
}
