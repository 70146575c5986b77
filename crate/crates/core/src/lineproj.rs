//! Signed distance from a projected query line to data-line points.
//!
//! Fix a slope pair `(a, b)` and its frame. A second (query) line `L`
//! that is not parallel to `u = (1, a, b)` projects along `u` onto the
//! frame plane as a line `proj(L)`. For data lines of slope `(a, b)`,
//! identified with their frame offsets `(c, d)`, the *signed* distance
//! from `(c, d)` to `proj(L)` is an affine map
//!
//! ```text
//! f_L(c, d) = xi * c + eta * d + zeta,     xi^2 + eta^2 = 1,
//! ```
//!
//! whose absolute value is the plane distance and whose sign matches the
//! spatial orientation `sign((dir_l x dir_L) . (anchor_L - anchor_l))` of
//! the pair (positive side consistent across the family). Differences
//! `xi_L - xi_L'` control which of two projected lines a far-away column
//! `c` favors.

use crate::frame::FrameH;
use crate::line::{Line3, LinePoint};
use crate::tol;

/// A query line projected along the frame direction onto the frame plane,
/// stored as the unit-normal affine form of the signed distance.
#[derive(Debug, Clone, Copy)]
pub struct ProjectedLine {
    pub xi: f64,
    pub eta: f64,
    pub zeta: f64,
}

impl ProjectedLine {
    /// Projects `l` along `u = (1, a, b)`. Errors when `l` is parallel to
    /// `u` (the projection degenerates to a point).
    pub fn new(fr: &FrameH, l: &Line3) -> Result<Self, crate::GeomError> {
        let e1 = l.dir.dot(fr.v1);
        let e2 = l.dir.dot(fr.v2);
        let n = (e1 * e1 + e2 * e2).sqrt();
        if tol::near_zero(n, l.dir.norm()) {
            return Err(crate::GeomError::DegenerateProjection);
        }
        // Normal to the projected direction (e1, e2), rotated so that the
        // sign of the affine form matches the spatial orientation of the
        // pair (see relative_orientation).
        let xi = e2 / n;
        let eta = -e1 / n;
        let q1 = l.anchor.dot(fr.v1);
        let q2 = l.anchor.dot(fr.v2);
        Ok(ProjectedLine { xi, eta, zeta: -(xi * q1 + eta * q2) })
    }

    /// Signed distance from the frame point `(c, d)` to the projected line.
    #[inline]
    pub fn signed_dist(&self, c: f64, d: f64) -> f64 {
        self.xi * c + self.eta * d + self.zeta
    }

    /// Unsigned distance; equals the 3D distance between the two lines
    /// when the data line has the frame's slope.
    #[inline]
    pub fn dist(&self, c: f64, d: f64) -> f64 {
        self.signed_dist(c, d).abs()
    }
}

/// Signed distance from a frame-form data line to the projected query line.
#[inline]
pub fn f_lambda(fr: &FrameH, pl: &ProjectedLine, data: &LinePoint) -> f64 {
    debug_assert!(
        (fr.a - data.a).abs() < 1e-12 && (fr.b - data.b).abs() < 1e-12,
        "data line slope must match the frame"
    );
    pl.signed_dist(data.c, data.d)
}

/// Coefficient gap `xi - xi'` between two projected lines: the slope, in
/// the first offset `c`, of the difference of their signed distances at a
/// common `d`.
#[inline]
pub fn beta_value(a: &ProjectedLine, b: &ProjectedLine) -> f64 {
    a.xi - b.xi
}

/// Spatial orientation of a skew pair: sign of
/// `(dir_l x dir_L) . (anchor_L - anchor_l)`. Zero for intersecting or
/// parallel pairs.
#[inline]
pub fn relative_orientation(l: &Line3, big: &Line3) -> f64 {
    let n = l.dir.cross(big.dir);
    let v = n.dot(big.anchor - l.anchor);
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vec3::Vec3;

    #[test]
    fn y_axis_against_horizontal_frame() {
        // Frame (0,0): v1 = (0,1,0), v2 = (0,0,1), u = x-axis. The y-axis
        // projects to the d = 0 axis; distance from (c, d) is |d|.
        let fr = FrameH::new(0.0, 0.0);
        let yaxis = Line3 { anchor: Vec3::ZERO, dir: Vec3::new(0.0, 1.0, 0.0) };
        let pl = ProjectedLine::new(&fr, &yaxis).unwrap();
        for (c, d) in [(0.0, 0.5), (3.0, -2.0), (-1.0, 0.0)] {
            assert!((pl.dist(c, d) - d.abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn sign_matches_spatial_orientation() {
        let fr = FrameH::new(0.3, -0.7);
        let q = Line3 {
            anchor: Vec3::new(0.2, -1.0, 0.4),
            dir: Vec3::new(0.1, 1.0, -0.3).normalized(),
        };
        let pl = ProjectedLine::new(&fr, &q).unwrap();
        for (c, d) in [(0.0, 0.0), (1.0, -2.0), (-3.0, 0.7), (2.0, 2.0)] {
            let data = LinePoint { a: fr.a, b: fr.b, c, d };
            let l3 = data.to_line();
            let sd = f_lambda(&fr, &pl, &data);
            let orient = relative_orientation(&l3, &q);
            if sd.abs() > 1e-9 {
                assert_eq!(sd.signum(), orient, "c={c} d={d}");
            }
            // Magnitude is the true line-line distance.
            let n = l3.dir.cross(q.dir);
            let true_d = n.dot(q.anchor - l3.anchor).abs() / n.norm();
            assert!((sd.abs() - true_d).abs() < 1e-9);
        }
    }
}
