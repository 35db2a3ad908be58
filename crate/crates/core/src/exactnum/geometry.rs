use std::f64::consts::TAU;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::vec2::{Vec2, Vec2f};
use crate::error::Error;

/// Determinants smaller than this are treated as colinear.
pub const COLINEAR_TOL: f64 = 1e-12;

/// A unit direction in the plane, stored by its angle in `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Direction {
    angle: f64,
    unit: Vec2f,
}

impl Direction {
    pub fn from_angle(angle: f64) -> Direction {
        let mut a = angle.rem_euclid(TAU);
        if a >= TAU {
            a = 0.0;
        }
        Direction { angle: a, unit: Vec2::new(a.cos(), a.sin()) }
    }

    pub fn from_degrees(deg: f64) -> Direction {
        Direction::from_angle(deg.to_radians())
    }

    /// Normalises a nonzero vector. Returns `None` for the zero vector.
    pub fn from_vector(v: Vec2f) -> Option<Direction> {
        if v.norm() == 0.0 || !v.is_finite() {
            return None;
        }
        Some(Direction::from_angle(v.y.atan2(v.x)))
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn degrees(&self) -> f64 {
        self.angle.to_degrees()
    }

    pub fn unit(&self) -> Vec2f {
        self.unit
    }

    pub fn opposite(&self) -> Direction {
        Direction::from_angle(self.angle + std::f64::consts::PI)
    }

    /// Shortest angular distance in `[0, π]`.
    pub fn angular_distance(&self, other: &Direction) -> f64 {
        let d = (self.angle - other.angle).rem_euclid(TAU);
        d.min(TAU - d)
    }
}

impl Serialize for Direction {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            angle: f64,
        }
        Repr { angle: self.angle }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Direction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            angle: f64,
        }
        let r = Repr::deserialize(d)?;
        Ok(Direction::from_angle(r.angle))
    }
}

/// The closed sector `{v : <u,v> >= (1-ε)|u||v|}` around a direction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub center: Direction,
    pub epsilon: f64,
}

impl Sector {
    pub fn new(center: Direction, epsilon: f64) -> Result<Sector, Error> {
        if !(epsilon > 0.0 && epsilon <= 2.0) {
            return Err(Error::Precondition(format!("sector epsilon must lie in (0, 2], got {epsilon}")));
        }
        Ok(Sector { center, epsilon })
    }

    pub fn contains(&self, v: Vec2f) -> bool {
        sector_contains(self, v)
    }
}

/// Membership in a sector. The zero vector is always inside.
pub fn sector_contains(s: &Sector, v: Vec2f) -> bool {
    s.center.unit().dot(v) >= (1.0 - s.epsilon) * v.norm()
}

/// Solves `x = a·u + b·v` and returns `(a, b)` when both coefficients are strictly positive.
pub fn in_positive_span(u: Vec2f, v: Vec2f, x: Vec2f) -> Result<Option<(f64, f64)>, Error> {
    let (a, b) = solve_basis(u, v, x)?;
    Ok((a > 0.0 && b > 0.0).then_some((a, b)))
}

/// Coordinates of `x` in the basis `(u, v)`, regardless of sign.
pub fn solve_basis(u: Vec2f, v: Vec2f, x: Vec2f) -> Result<(f64, f64), Error> {
    let det = u.cross(v);
    if det.abs() < COLINEAR_TOL {
        return Err(Error::ColinearBasis);
    }
    Ok((x.cross(v) / det, u.cross(x) / det))
}

/// Euclidean distance from `x` to the open ray `{c·u : c > 0}`.
pub fn cone_distance(x: Vec2f, u: Vec2f) -> f64 {
    let t = x.dot(u) / u.dot(u);
    if t <= 0.0 {
        x.norm()
    } else {
        (x - u.scale(t)).norm()
    }
}
