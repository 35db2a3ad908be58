use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use super::rat::Rat;

/// Planar vector over a scalar flavor (`f64` or [`Rat`]).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

pub type Vec2f = Vec2<f64>;
pub type Vec2q = Vec2<Rat>;

impl<T> Vec2<T> {
    pub const fn new(x: T, y: T) -> Self {
        Vec2 { x, y }
    }
}

impl Vec2f {
    pub const ZERO: Vec2f = Vec2 { x: 0.0, y: 0.0 };

    pub fn dot(self, o: Vec2f) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the cross product (the 2×2 determinant `[self o]`).
    pub fn cross(self, o: Vec2f) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_inf(self) -> f64 {
        self.x.abs().max(self.y.abs())
    }

    pub fn scale(self, c: f64) -> Vec2f {
        Vec2::new(self.x * c, self.y * c)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn rotate(self, angle: f64) -> Vec2f {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl Vec2q {
    pub fn zero() -> Self {
        Vec2::new(Rat::zero(), Rat::zero())
    }

    pub fn to_f64(&self) -> Vec2f {
        Vec2::new(self.x.to_f64(), self.y.to_f64())
    }

    pub fn norm_sq(&self) -> Rat {
        &self.x * &self.x + &self.y * &self.y
    }

    pub fn scale(&self, c: &Rat) -> Vec2q {
        Vec2::new(&self.x * c, &self.y * c)
    }
}

impl Add for Vec2f {
    type Output = Vec2f;
    fn add(self, o: Vec2f) -> Vec2f {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2f {
    type Output = Vec2f;
    fn sub(self, o: Vec2f) -> Vec2f {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Vec2f {
    type Output = Vec2f;
    fn neg(self) -> Vec2f {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<Vec2f> for f64 {
    type Output = Vec2f;
    fn mul(self, v: Vec2f) -> Vec2f {
        v.scale(self)
    }
}

impl AddAssign for Vec2f {
    fn add_assign(&mut self, o: Vec2f) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl SubAssign for Vec2f {
    fn sub_assign(&mut self, o: Vec2f) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

impl<'a> Add<&'a Vec2q> for &'a Vec2q {
    type Output = Vec2q;
    fn add(self, o: &'a Vec2q) -> Vec2q {
        Vec2::new(&self.x + &o.x, &self.y + &o.y)
    }
}

impl<'a> Sub<&'a Vec2q> for &'a Vec2q {
    type Output = Vec2q;
    fn sub(self, o: &'a Vec2q) -> Vec2q {
        Vec2::new(&self.x - &o.x, &self.y - &o.y)
    }
}

impl Neg for Vec2q {
    type Output = Vec2q;
    fn neg(self) -> Vec2q {
        Vec2::new(-self.x, -self.y)
    }
}

impl AddAssign<&Vec2q> for Vec2q {
    fn add_assign(&mut self, o: &Vec2q) {
        self.x += &o.x;
        self.y += &o.y;
    }
}

impl std::iter::Sum for Vec2f {
    fn sum<I: Iterator<Item = Vec2f>>(iter: I) -> Vec2f {
        iter.fold(Vec2f::ZERO, |a, b| a + b)
    }
}
