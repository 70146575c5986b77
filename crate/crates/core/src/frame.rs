//! Per-slope reference frame.
//!
//! For a slope `(a, b)` let `u = (1, a, b)` be the direction shared by all
//! lines of that slope, and `H` the plane through the origin orthogonal to
//! `u`. `H` carries the orthonormal frame
//!
//! ```text
//! v1 = (-a, 1, 0) / sqrt(1 + a^2)
//! v2 = u x v1 / |u x v1| = (-b, -a*b, 1 + a^2) / sqrt((1 + a^2)(1 + a^2 + b^2))
//! ```
//!
//! `(v1, v2, u/|u|)` is right-handed. Projecting along `u` onto `H` kills
//! exactly the `u`-component, so distances between a point and a line of
//! slope `(a, b)` reduce to plane distances between their projections.

use crate::vec3::Vec3;

#[derive(Debug, Clone, Copy)]
pub struct FrameH {
    pub a: f64,
    pub b: f64,
    /// Unnormalized axis direction (1, a, b).
    pub u: Vec3,
    pub v1: Vec3,
    pub v2: Vec3,
}

impl FrameH {
    pub fn new(a: f64, b: f64) -> Self {
        let u = Vec3::new(1.0, a, b);
        let s1 = (1.0 + a * a).sqrt();
        let v1 = Vec3::new(-a, 1.0, 0.0) / s1;
        let s2 = ((1.0 + a * a) * (1.0 + a * a + b * b)).sqrt();
        let v2 = Vec3::new(-b, -a * b, 1.0 + a * a) / s2;
        FrameH { a, b, u, v1, v2 }
    }

    /// Frame coordinates of the projection of `p` onto `H` along `u`.
    /// Because `v1, v2` are orthogonal to `u`, the projection step cancels
    /// and plain dot products suffice.
    #[inline]
    pub fn project_point(&self, p: Vec3) -> (f64, f64) {
        (p.dot(self.v1), p.dot(self.v2))
    }

    /// Inverse of `project_point` restricted to `H`.
    #[inline]
    pub fn lift(&self, x: f64, y: f64) -> Vec3 {
        self.v1 * x + self.v2 * y
    }

    /// Projection of `p` onto `H` along `u`, as a 3D point.
    #[inline]
    pub fn pierce(&self, p: Vec3) -> Vec3 {
        p - self.u * (p.dot(self.u) / self.u.norm_sq())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_orthonormal(fr: &FrameH) {
        assert!((fr.v1.norm() - 1.0).abs() < 1e-12);
        assert!((fr.v2.norm() - 1.0).abs() < 1e-12);
        assert!(fr.v1.dot(fr.v2).abs() < 1e-12);
        assert!(fr.v1.dot(fr.u).abs() < 1e-12);
        assert!(fr.v2.dot(fr.u).abs() < 1e-12);
        // Right-handed: v1 x v2 points along +u.
        assert!(fr.v1.cross(fr.v2).dot(fr.u) > 0.0);
    }

    #[test]
    fn axis_aligned_frames() {
        let fr = FrameH::new(0.0, 0.0);
        assert_eq!(fr.v1, Vec3::new(0.0, 1.0, 0.0));
        assert_eq!(fr.v2, Vec3::new(0.0, 0.0, 1.0));
        assert_orthonormal(&fr);

        let fr = FrameH::new(1.0, 0.0);
        let s = 1.0 / 2.0f64.sqrt();
        assert!((fr.v1 - Vec3::new(-s, s, 0.0)).norm() < 1e-12);
        assert!((fr.v2 - Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-12);
        assert_orthonormal(&fr);
    }

    #[test]
    fn skew_frames_are_orthonormal() {
        for &(a, b) in &[(0.5, -1.25), (-3.0, 2.0), (1e3, -1e3), (0.0, 7.0)] {
            assert_orthonormal(&FrameH::new(a, b));
        }
    }

    #[test]
    fn projection_example() {
        let fr = FrameH::new(0.0, 0.0);
        assert_eq!(fr.project_point(Vec3::new(5.0, 3.0, 4.0)), (3.0, 4.0));
    }

    #[test]
    fn projection_preserves_pythagoras() {
        let fr = FrameH::new(0.7, -0.3);
        let p = Vec3::new(1.3, -2.0, 0.9);
        let (x, y) = fr.project_point(p);
        let along = p.dot(fr.u) / fr.u.norm();
        assert!((p.norm_sq() - (x * x + y * y + along * along)).abs() < 1e-9);
    }
}
