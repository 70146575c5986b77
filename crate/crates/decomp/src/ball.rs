//! Balls and their pairwise intersection circles.

use prismatica_core::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball {
    pub center: Vec3,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec3, radius: f64) -> Self {
        Ball { center, radius }
    }

    #[inline]
    pub fn contains(&self, p: Vec3) -> bool {
        self.center.dist_sq(p) <= self.radius * self.radius
    }

    #[inline]
    pub fn contains_strict(&self, p: Vec3) -> bool {
        self.center.dist_sq(p) < self.radius * self.radius
    }

    /// Interval of z cut out of the vertical column at `(x, y)`, if any.
    #[inline]
    pub fn column_interval(&self, x: f64, y: f64) -> Option<(f64, f64)> {
        let dx = x - self.center.x;
        let dy = y - self.center.y;
        let rad = self.radius * self.radius - dx * dx - dy * dy;
        if rad < 0.0 {
            None
        } else {
            let s = rad.sqrt();
            Some((self.center.z - s, self.center.z + s))
        }
    }

    /// Closed ball versus closed axis-aligned box.
    pub fn meets_box(&self, lo: Vec3, hi: Vec3) -> bool {
        let mut d2 = 0.0;
        for (c, l, h) in [
            (self.center.x, lo.x, hi.x),
            (self.center.y, lo.y, hi.y),
            (self.center.z, lo.z, hi.z),
        ] {
            let g = if c < l { l - c } else if c > h { c - h } else { 0.0 };
            d2 += g * g;
        }
        d2 <= self.radius * self.radius
    }
}

/// A circle in 3D: center, radius, and an orthonormal in-plane basis.
#[derive(Debug, Clone, Copy)]
pub struct Circle3 {
    pub center: Vec3,
    pub radius: f64,
    pub e1: Vec3,
    pub e2: Vec3,
}

impl Circle3 {
    #[inline]
    pub fn point(&self, theta: f64) -> Vec3 {
        self.center + self.e1 * (self.radius * theta.cos()) + self.e2 * (self.radius * theta.sin())
    }

    /// Angles where the circle crosses the boundary sphere of `b`
    /// (solutions of `alpha cos t + beta sin t = gamma`), unsorted.
    pub fn sphere_crossings(&self, b: &Ball) -> Vec<f64> {
        let q = self.center - b.center;
        let alpha = 2.0 * self.radius * self.e1.dot(q);
        let beta = 2.0 * self.radius * self.e2.dot(q);
        let gamma = b.radius * b.radius - q.norm_sq() - self.radius * self.radius;
        let m = alpha.hypot(beta);
        if m < 1e-300 {
            return Vec::new(); // concentric in-plane: no isolated crossings
        }
        let ratio = gamma / m;
        if ratio.abs() > 1.0 {
            return Vec::new();
        }
        let base = beta.atan2(alpha);
        let off = ratio.acos();
        vec![wrap_angle(base + off), wrap_angle(base - off)]
    }
}

/// Horizontal great circle of a ball: the silhouette of its surface under
/// vertical projection.
pub fn equator(b: &Ball) -> Circle3 {
    Circle3 {
        center: b.center,
        radius: b.radius,
        e1: Vec3::new(1.0, 0.0, 0.0),
        e2: Vec3::new(0.0, 1.0, 0.0),
    }
}

/// Intersection circle of two ball boundaries, when the spheres cross
/// properly (not nested, not disjoint, not tangent).
pub fn pair_circle(a: &Ball, b: &Ball) -> Option<Circle3> {
    let axis = b.center - a.center;
    let d2 = axis.norm_sq();
    if d2 < 1e-300 {
        return None;
    }
    let d = d2.sqrt();
    if d >= a.radius + b.radius || d <= (a.radius - b.radius).abs() {
        return None;
    }
    let t = (d2 + a.radius * a.radius - b.radius * b.radius) / (2.0 * d2);
    let rad2 = a.radius * a.radius - t * t * d2;
    if rad2 <= 0.0 {
        return None;
    }
    let m = axis / d;
    // In-plane basis: any unit vector orthogonal to m and its complement.
    let seed = if m.x.abs() < 0.9 { Vec3::new(1.0, 0.0, 0.0) } else { Vec3::new(0.0, 1.0, 0.0) };
    let e1 = m.cross(seed).normalized();
    let e2 = m.cross(e1);
    Some(Circle3 { center: a.center + axis * t, radius: rad2.sqrt(), e1, e2 })
}

/// Wraps an angle into `[0, 2pi)`.
#[inline]
pub fn wrap_angle(t: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut v = t % two_pi;
    if v < 0.0 {
        v += two_pi;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_circle_of_symmetric_unit_balls() {
        let a = Ball::new(Vec3::new(-0.5, 0.0, 0.0), 1.0);
        let b = Ball::new(Vec3::new(0.5, 0.0, 0.0), 1.0);
        let c = pair_circle(&a, &b).unwrap();
        assert!((c.center.x - 0.0).abs() < 1e-12);
        assert!((c.radius - (1.0f64 - 0.25).sqrt()).abs() < 1e-12);
        // Every circle point is on both spheres.
        for k in 0..16 {
            let p = c.point(k as f64 * 0.4);
            assert!((p.dist(a.center) - 1.0).abs() < 1e-12);
            assert!((p.dist(b.center) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn crossings_land_on_the_sphere() {
        let a = Ball::new(Vec3::new(0.0, 0.0, 0.0), 1.0);
        let b = Ball::new(Vec3::new(1.0, 0.3, 0.2), 0.9);
        let c = equator(&a);
        let ts = c.sphere_crossings(&b);
        assert_eq!(ts.len(), 2);
        for t in ts {
            let p = c.point(t);
            assert!((p.dist(b.center) - b.radius).abs() < 1e-9);
        }
    }

    #[test]
    fn nested_and_far_pairs_have_no_circle() {
        let a = Ball::new(Vec3::ZERO, 2.0);
        assert!(pair_circle(&a, &Ball::new(Vec3::new(0.1, 0.0, 0.0), 0.5)).is_none());
        assert!(pair_circle(&a, &Ball::new(Vec3::new(9.0, 0.0, 0.0), 1.0)).is_none());
    }
}
