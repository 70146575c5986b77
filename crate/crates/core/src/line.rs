//! Line parameterizations.
//!
//! A non-steep line (one whose direction has a usable x-component) carries
//! two coordinate forms, interchangeable for a fixed slope `(a, b)`:
//!
//! * equation form `LineEq`: the line is `y = a*x + c_e`, `z = b*x + d_e`;
//! * frame form `LinePoint`: `(c, d)` are the coordinates of the line's
//!   piercing point through the slope's reference plane, expressed in that
//!   plane's orthonormal frame (see [`crate::frame::FrameH`]).
//!
//! The frame form is the one all distance costs and bisector surfaces are
//! written in; the equation form is what generators and parsers produce.
//! For a fixed slope the two offset pairs are related by an invertible
//! linear map, so conversions round-trip exactly up to floating error.

use crate::error::GeomError;
use crate::frame::FrameH;
use crate::tol::TAU_DIR;
use crate::vec3::Vec3;

/// A line in anchor + direction form. Directions are not required to be
/// normalized; orientation is canonicalized (dir.x > 0) on conversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line3 {
    pub anchor: Vec3,
    pub dir: Vec3,
}

impl Line3 {
    pub fn new(anchor: Vec3, dir: Vec3) -> Self {
        Line3 { anchor, dir }
    }

    /// Distance from a point, via the cross-product formula. This is the
    /// oracle path; structured code goes through the frame form.
    pub fn dist_point(&self, p: Vec3) -> f64 {
        (p - self.anchor).cross(self.dir).norm() / self.dir.norm()
    }

    pub fn point_at(&self, t: f64) -> Vec3 {
        self.anchor + self.dir * t
    }
}

/// Equation-form coordinates: `y = a*x + c, z = b*x + d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineEq {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

/// Frame-form coordinates: slope `(a, b)` plus the piercing point of the
/// line through the slope's reference plane, in that plane's frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinePoint {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl LineEq {
    /// Rejects steep lines: `|dir.x| <= TAU_DIR * |dir|`.
    pub fn from_line(l: &Line3) -> Result<LineEq, GeomError> {
        let n = l.dir.norm();
        if l.dir.x.abs() <= TAU_DIR * n {
            return Err(GeomError::SteepLine);
        }
        let a = l.dir.y / l.dir.x;
        let b = l.dir.z / l.dir.x;
        let c = l.anchor.y - l.anchor.x * a;
        let d = l.anchor.z - l.anchor.x * b;
        Ok(LineEq { a, b, c, d })
    }

    /// Anchor at x = 0, direction (1, a, b): orientation is canonical
    /// (positive x travel).
    pub fn to_line(&self) -> Line3 {
        Line3::new(Vec3::new(0.0, self.c, self.d), Vec3::new(1.0, self.a, self.b))
    }

    pub fn to_frame_form(&self) -> LinePoint {
        let fr = FrameH::new(self.a, self.b);
        let p0 = Vec3::new(0.0, self.c, self.d);
        let (c, d) = fr.project_point(p0);
        LinePoint { a: self.a, b: self.b, c, d }
    }
}

impl LinePoint {
    pub fn from_line(l: &Line3) -> Result<LinePoint, GeomError> {
        Ok(LineEq::from_line(l)?.to_frame_form())
    }

    pub fn to_eq_form(&self) -> LineEq {
        let fr = FrameH::new(self.a, self.b);
        let q = fr.lift(self.c, self.d);
        LineEq {
            a: self.a,
            b: self.b,
            c: q.y - self.a * q.x,
            d: q.z - self.b * q.x,
        }
    }

    pub fn to_line(&self) -> Line3 {
        self.to_eq_form().to_line()
    }

    pub fn dist_point(&self, p: Vec3) -> f64 {
        let fr = FrameH::new(self.a, self.b);
        let (x, y) = fr.project_point(p);
        ((x - self.c).powi(2) + (y - self.d).powi(2)).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn x_axis_is_origin_in_both_forms() {
        let l = Line3::new(Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0));
        let eq = LineEq::from_line(&l).unwrap();
        assert_eq!((eq.a, eq.b, eq.c, eq.d), (0.0, 0.0, 0.0, 0.0));
        let fp = eq.to_frame_form();
        assert_eq!((fp.a, fp.b, fp.c, fp.d), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn steep_line_rejected() {
        let l = Line3::new(Vec3::ZERO, Vec3::new(1e-9, 1.0, 0.5));
        assert_eq!(LineEq::from_line(&l), Err(GeomError::SteepLine));
    }

    #[test]
    fn frame_distance_matches_cross_product() {
        let l = Line3::new(Vec3::new(0.3, -1.2, 0.7), Vec3::new(0.8, -0.4, 1.9));
        let fp = LinePoint::from_line(&l).unwrap();
        let p = Vec3::new(2.0, 0.5, -3.0);
        assert!((fp.dist_point(p) - l.dist_point(p)).abs() < 1e-9);
    }
}
