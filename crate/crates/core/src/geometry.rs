//! Minimal 2D vector math used by the track world.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// 2D point / vector with f64 components.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector at `angle` radians from the +x axis.
    pub fn from_angle(angle: f64) -> Self {
        Self::new(angle.cos(), angle.sin())
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    /// Counter-clockwise perpendicular (the "left" normal of a direction).
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    /// Normalized copy; zero vector stays zero.
    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        if n <= f64::EPSILON {
            Vec2::ZERO
        } else {
            self / n
        }
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Rotate by `angle` radians counter-clockwise.
    pub fn rotated(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    fn div(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x / rhs, self.y / rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Normalize an angle to the half-open interval (-pi, pi].
pub fn normalize_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    // (pi - a) mod 2pi lands in [0, 2pi); pi minus that is in (-pi, pi].
    PI - (PI - a).rem_euclid(2.0 * PI)
}

/// Closest point to `p` on the segment `a`..`b`, returned as the clamped
/// parameter t in [0, 1] along the segment.
pub fn project_on_segment(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq <= f64::EPSILON {
        return 0.0;
    }
    ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0)
}

/// Distance along a ray (origin `o`, unit direction `d`) to its intersection
/// with the segment `a`..`b`, if the intersection exists and lies forward.
pub fn ray_segment_intersection(o: Vec2, d: Vec2, a: Vec2, b: Vec2) -> Option<f64> {
    let v = b - a;
    let denom = d.cross(v);
    if denom.abs() <= 1e-300 {
        return None; // parallel
    }
    let ao = a - o;
    let t = ao.cross(v) / denom; // along the ray
    let u = ao.cross(d) / denom; // along the segment
    if t >= 0.0 && (0.0..=1.0).contains(&u) {
        Some(t)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn angle_normalization_range() {
        for k in -20..=20 {
            let a = 0.37 * k as f64;
            let n = normalize_angle(a);
            assert!(n > -PI && n <= PI, "normalize({a}) = {n} out of range");
            // Same angle modulo 2pi.
            assert_relative_eq!((a - n).rem_euclid(2.0 * PI), 0.0, epsilon = 1e-9);
        }
        assert_eq!(normalize_angle(PI), PI);
        assert_eq!(normalize_angle(-PI), PI);
        assert_eq!(normalize_angle(3.0 * PI), PI);
    }

    #[test]
    fn segment_projection_clamps() {
        let a = Vec2::new(0.0, 0.0);
        let b = Vec2::new(2.0, 0.0);
        assert_eq!(project_on_segment(Vec2::new(1.0, 5.0), a, b), 0.5);
        assert_eq!(project_on_segment(Vec2::new(-3.0, 1.0), a, b), 0.0);
        assert_eq!(project_on_segment(Vec2::new(9.0, -1.0), a, b), 1.0);
    }

    #[test]
    fn ray_hits_segment() {
        let o = Vec2::ZERO;
        let d = Vec2::new(1.0, 0.0);
        let t = ray_segment_intersection(o, d, Vec2::new(3.0, -1.0), Vec2::new(3.0, 2.0));
        assert_relative_eq!(t.unwrap(), 3.0, epsilon = 1e-12);
        // Behind the origin.
        assert!(ray_segment_intersection(o, d, Vec2::new(-3.0, -1.0), Vec2::new(-3.0, 2.0))
            .is_none());
        // Parallel.
        assert!(ray_segment_intersection(o, d, Vec2::new(1.0, 1.0), Vec2::new(5.0, 1.0))
            .is_none());
    }
}
