//! Ball-crossing predicates for the lower half of a vertical plane's line.
//!
//! A non-vertical line `l` spans a unique vertical plane `V(l)`; its
//! *lower half* `l^-` is the halfplane of `V(l)` on and below `l`.
//! Whether a ball `B(p, r)` meets `l^-` decomposes into closed one-sided
//! tests in two scalars measured in an orthonormal frame of `V(l)`:
//!
//! * `delta`  - signed distance from `p` to the plane `V(l)`,
//! * `height` - signed elevation of `p` over `l` inside `V(l)`, along the
//!   in-plane transverse axis `w` (which always has `w.z > 0`).
//!
//! With `s = sqrt(r^2 - delta^2)` the half-chord of the cut disk,
//!
//! * ball meets `l`   iff  `|delta| <= r`  and  `|height| <= s`,
//! * ball meets `l^-` iff  `|delta| <= r`  and  `height <= s`
//!   (equivalently: it meets `l`, or the plane cuts it with the center
//!   already below the line).
//!
//! The same scalars give the two tangent translates `height -+ s` of the
//! line within `V(l)`, the ingredient for lower-tangency envelopes.

use crate::line::Line3;
use crate::tol;
use crate::vec3::Vec3;

/// Scalar geometry of one ball against one line's vertical plane.
#[derive(Debug, Clone, Copy)]
pub struct BallPlaneScalars {
    /// Signed plane distance from the center to `V(l)`.
    pub delta: f64,
    /// Signed elevation of the center over the line within `V(l)`;
    /// positive means the center sits above `l`.
    pub height: f64,
    pub radius: f64,
}

/// Computes the `(delta, height)` scalars of `center` against `l`.
/// Requires `l` to be non-vertical (`dir.x` or `dir.y` nonzero).
pub fn ball_plane_scalars(l: &Line3, center: Vec3, radius: f64) -> BallPlaneScalars {
    // Horizontal normal of the vertical plane through l.
    let n = Vec3::new(l.dir.y, -l.dir.x, 0.0);
    let nn = n.norm();
    debug_assert!(nn > tol::TAU_DIR * l.dir.norm(), "vertical line has no vertical plane");
    let nh = n / nn;
    // In-plane transverse axis; w.z = (dx^2 + dy^2) / (nn * |dir|) > 0,
    // so w always points to the upper side of l within V(l).
    let w = nh.cross(l.dir.normalized());
    debug_assert!(w.z > 0.0);
    let rel = center - l.anchor;
    BallPlaneScalars { delta: rel.dot(nh), height: rel.dot(w), radius }
}

impl BallPlaneScalars {
    /// The vertical plane cuts the ball (closed).
    #[inline]
    pub fn plane_cuts(&self) -> bool {
        self.delta.abs() <= self.radius
    }

    /// Center on or below the line within the plane (closed).
    #[inline]
    pub fn center_below(&self) -> bool {
        self.height <= 0.0
    }

    /// Half-chord of the cut disk; `None` when the plane misses the ball.
    #[inline]
    pub fn half_chord(&self) -> Option<f64> {
        let rad = self.radius * self.radius - self.delta * self.delta;
        if rad < 0.0 {
            None
        } else {
            Some(rad.sqrt())
        }
    }

    /// The cut disk reaches down to the line or further (closed); false
    /// when the plane misses the ball entirely.
    #[inline]
    pub fn disk_reaches_line(&self) -> bool {
        match self.half_chord() {
            Some(s) => self.height <= s,
            None => false,
        }
    }

    /// The ball meets the full line `l`: `|height| <= half_chord`.
    #[inline]
    pub fn meets_line(&self) -> bool {
        match self.half_chord() {
            Some(s) => self.height.abs() <= s,
            None => false,
        }
    }

    /// The ball meets the lower halfplane `l^-`, composed from the
    /// one-sided pieces: it meets `l` itself, or the plane cuts it while
    /// the center hangs below the line.
    #[inline]
    pub fn meets_lower_half(&self) -> bool {
        self.meets_line() || (self.plane_cuts() && self.center_below())
    }

    /// Elevations of the two tangent translates of `l` within `V(l)`:
    /// the line shifted to elevation `e` cuts the ball iff `e` lies
    /// between them.
    #[inline]
    pub fn tangent_elevations(&self) -> Option<(f64, f64)> {
        self.half_chord().map(|s| (self.height - s, self.height + s))
    }
}

/// Distance oracle for the full line: cross-product formula, independent
/// of the plane decomposition.
#[inline]
pub fn ball_meets_line_oracle(l: &Line3, center: Vec3, radius: f64) -> bool {
    l.dist_point(center) <= radius
}

/// Distance oracle for the lower halfplane: explicit closest point of
/// `l^-` (project onto the plane, clamp the elevation to <= 0), then a
/// plain Euclidean comparison.
pub fn ball_meets_lower_oracle(l: &Line3, center: Vec3, radius: f64) -> bool {
    let n = Vec3::new(l.dir.y, -l.dir.x, 0.0).normalized();
    let dh = l.dir.normalized();
    let w = n.cross(dh);
    let rel = center - l.anchor;
    let t = rel.dot(dh);
    let e = rel.dot(w).min(0.0);
    let closest = l.anchor + dh * t + w * e;
    center.dist(closest) <= radius
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xaxis() -> Line3 {
        Line3 { anchor: Vec3::ZERO, dir: Vec3::new(1.0, 0.0, 0.0) }
    }

    #[test]
    fn ball_straddling_x_axis() {
        // Center (0,0,1), r = 2: cut disk spans z in [-1, 3], so it meets
        // both the line and the lower halfplane.
        let s = ball_plane_scalars(&xaxis(), Vec3::new(0.0, 0.0, 1.0), 2.0);
        assert!((s.delta - 0.0).abs() < 1e-12);
        assert!((s.height - 1.0).abs() < 1e-12);
        assert!(s.plane_cuts());
        assert!(!s.center_below());
        assert!(s.meets_line());
        assert!(s.meets_lower_half());
        let (lo, hi) = s.tangent_elevations().unwrap();
        assert!((lo + 1.0).abs() < 1e-12 && (hi - 3.0).abs() < 1e-12);
    }

    #[test]
    fn high_ball_misses_lower_half() {
        // Center (0,0,3), r = 1: plane cuts, but the disk bottoms out at
        // z = 2, above the line.
        let s = ball_plane_scalars(&xaxis(), Vec3::new(0.0, 0.0, 3.0), 1.0);
        assert!(s.plane_cuts());
        assert!(!s.disk_reaches_line());
        assert!(!s.meets_line());
        assert!(!s.meets_lower_half());
    }

    #[test]
    fn low_ball_meets_lower_half_only() {
        // Center (0,0,-3), r = 1: below the line, disjoint from it.
        let s = ball_plane_scalars(&xaxis(), Vec3::new(0.0, 0.0, -3.0), 1.0);
        assert!(!s.meets_line());
        assert!(s.center_below());
        assert!(s.meets_lower_half());
    }

    #[test]
    fn composition_matches_oracles() {
        // Both composed predicates must agree with their distance oracles
        // on a deterministic grid around a skew line.
        let l = Line3 {
            anchor: Vec3::new(0.3, -0.2, 0.9),
            dir: Vec3::new(1.0, 0.7, -0.4).normalized(),
        };
        for ix in -3..=3 {
            for iy in -3..=3 {
                for iz in -3..=3 {
                    let c = Vec3::new(ix as f64 * 0.6, iy as f64 * 0.6, iz as f64 * 0.6);
                    let r = 0.8;
                    let s = ball_plane_scalars(&l, c, r);
                    assert_eq!(s.meets_line(), ball_meets_line_oracle(&l, c, r), "{c:?}");
                    assert_eq!(s.meets_lower_half(), ball_meets_lower_oracle(&l, c, r), "{c:?}");
                    // Disjunctive form equals the direct inequality form.
                    let direct = s.plane_cuts()
                        && match s.half_chord() {
                            Some(h) => s.height <= h,
                            None => false,
                        };
                    assert_eq!(s.meets_lower_half(), direct);
                }
            }
        }
    }
}
