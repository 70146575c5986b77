//! Reduced distance costs and bisector surfaces over line space.
//!
//! With `(x_p, y_p)` the frame projection of a site `p` at slope `(a, b)`
//! and `(c, d)` a line's frame offsets,
//!
//! ```text
//! dist(p, l)^2 = (x_p - c)^2 + (y_p - d)^2                     (plane distance)
//!              = g_p - 2 c x_p - 2 d y_p + c^2 + d^2,   g_p = x_p^2 + y_p^2
//! ```
//!
//! so the reduced cost `f_p = g_p - 2 c x_p - 2 d y_p` compares sites
//! exactly (the `c^2 + d^2` term is shared). For two sites the tie locus in
//! the `d` coordinate is the graph
//!
//! ```text
//! d = (g_q - g_p) / (2 (y_q - y_p)) - ((x_q - x_p) / (y_q - y_p)) * c,
//! ```
//!
//! padded to +/- infinity according to the sign of `y_q - y_p` so that
//! `f_p <= f_q` is exactly the slab between the padded lower and upper
//! graphs. The `c` coordinate has the mirrored family with `x` and `y`
//! roles swapped.

use crate::frame::FrameH;
use crate::line::LinePoint;
use crate::tol;
use crate::vec3::Vec3;

/// Frame projection of `p` plus its squared norm `g_p`.
#[inline]
pub fn site_coords(fr: &FrameH, p: Vec3) -> (f64, f64, f64) {
    let (x, y) = fr.project_point(p);
    (x, y, x * x + y * y)
}

/// Reduced cost `f_p(l)`; smaller means closer, offset by the common
/// `c^2 + d^2` term.
#[inline]
pub fn reduced_cost(fr: &FrameH, p: Vec3, lp: &LinePoint) -> f64 {
    let (x, y, g) = site_coords(fr, p);
    g - 2.0 * lp.c * x - 2.0 * lp.d * y
}

/// Squared point-line distance through the frame identity.
#[inline]
pub fn dist_sq(fr: &FrameH, p: Vec3, lp: &LinePoint) -> f64 {
    let (x, y) = fr.project_point(p);
    (x - lp.c) * (x - lp.c) + (y - lp.d) * (y - lp.d)
}

/// `p` is at least as close to the line as `q` (closed comparison).
#[inline]
pub fn closer_or_tied(fr: &FrameH, p: Vec3, q: Vec3, lp: &LinePoint) -> bool {
    reduced_cost(fr, p, lp) <= reduced_cost(fr, q, lp)
}

/// Finite bisector value in `d`: the offset at which lines of slope
/// `(a, b)` and first offset `c` are equidistant from `p` and `q`.
/// Errors when the projected ordinates coincide (bisector at infinity).
pub fn bisector_d(p: Vec3, q: Vec3, a: f64, b: f64, c: f64) -> Result<f64, crate::GeomError> {
    let fr = FrameH::new(a, b);
    let (xp, yp, gp) = site_coords(&fr, p);
    let (xq, yq, gq) = site_coords(&fr, q);
    let dy = yq - yp;
    if tol::near_zero(dy, tol::scale(yp, yq)) {
        return Err(crate::GeomError::DegenerateBisector);
    }
    Ok((gq - gp) / (2.0 * dy) - ((xq - xp) / dy) * c)
}

/// Upper `d`-bound of the slab where `p` beats `q`: the bisector graph
/// when `y_q > y_p`, `+inf` otherwise.
#[inline]
pub fn bisector_d_upper(fr: &FrameH, p: Vec3, q: Vec3, c: f64) -> f64 {
    let (xp, yp, gp) = site_coords(fr, p);
    let (xq, yq, gq) = site_coords(fr, q);
    let dy = yq - yp;
    if dy > 0.0 {
        (gq - gp) / (2.0 * dy) - ((xq - xp) / dy) * c
    } else {
        f64::INFINITY
    }
}

/// Lower `d`-bound of the slab where `p` beats `q`: the bisector graph
/// when `y_q < y_p`, `-inf` otherwise.
#[inline]
pub fn bisector_d_lower(fr: &FrameH, p: Vec3, q: Vec3, c: f64) -> f64 {
    let (xp, yp, gp) = site_coords(fr, p);
    let (xq, yq, gq) = site_coords(fr, q);
    let dy = yq - yp;
    if dy < 0.0 {
        (gq - gp) / (2.0 * dy) - ((xq - xp) / dy) * c
    } else {
        f64::NEG_INFINITY
    }
}

/// Mirrored family: upper `c`-bound at fixed `d`, padded by the sign of
/// `x_q - x_p`.
#[inline]
pub fn bisector_c_upper(fr: &FrameH, p: Vec3, q: Vec3, d: f64) -> f64 {
    let (xp, yp, gp) = site_coords(fr, p);
    let (xq, yq, gq) = site_coords(fr, q);
    let dx = xq - xp;
    if dx > 0.0 {
        (gq - gp) / (2.0 * dx) - ((yq - yp) / dx) * d
    } else {
        f64::INFINITY
    }
}

/// Mirrored family: lower `c`-bound at fixed `d`.
#[inline]
pub fn bisector_c_lower(fr: &FrameH, p: Vec3, q: Vec3, d: f64) -> f64 {
    let (xp, yp, gp) = site_coords(fr, p);
    let (xq, yq, gq) = site_coords(fr, q);
    let dx = xq - xp;
    if dx < 0.0 {
        (gq - gp) / (2.0 * dx) - ((yq - yp) / dx) * d
    } else {
        f64::NEG_INFINITY
    }
}

/// `d`-offset at which a line of slope `(a, b)`, first offset `c`, is
/// tangent to the sphere from below; `None` when the sphere's projected
/// disk misses the `c`-column.
#[inline]
pub fn tangency_d_below(fr: &FrameH, center: Vec3, radius: f64, c: f64) -> Option<f64> {
    let (x, y) = fr.project_point(center);
    let rad = radius * radius - (x - c) * (x - c);
    if rad < 0.0 {
        None
    } else {
        Some(y - rad.sqrt())
    }
}

/// Tangent-from-above mirror of [`tangency_d_below`].
#[inline]
pub fn tangency_d_above(fr: &FrameH, center: Vec3, radius: f64, c: f64) -> Option<f64> {
    let (x, y) = fr.project_point(center);
    let rad = radius * radius - (x - c) * (x - c);
    if rad < 0.0 {
        None
    } else {
        Some(y + rad.sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduced_cost_identity() {
        let lp = LinePoint { a: 0.4, b: -0.2, c: 1.1, d: -0.6 };
        let fr = FrameH::new(lp.a, lp.b);
        let p = Vec3::new(0.3, 2.0, -1.0);
        let f = reduced_cost(&fr, p, &lp);
        let d2 = dist_sq(&fr, p, &lp);
        assert!((d2 - (f + lp.c * lp.c + lp.d * lp.d)).abs() < 1e-9);
    }

    #[test]
    fn vertical_pair_bisector() {
        // Sites (0,0,0) and (0,0,2); at slope (0,0) the bisector in d sits
        // on the plane z = 1.
        let p = Vec3::ZERO;
        let q = Vec3::new(0.0, 0.0, 2.0);
        let psi = bisector_d(p, q, 0.0, 0.0, 0.0).unwrap();
        assert!((psi - 1.0).abs() < 1e-12);
        // Any c leaves it unchanged (x_p = x_q = 0).
        let psi5 = bisector_d(p, q, 0.0, 0.0, 5.0).unwrap();
        assert!((psi5 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn slab_matches_cost_order() {
        let p = Vec3::ZERO;
        let q = Vec3::new(0.0, 0.0, 2.0);
        let near = LinePoint { a: 0.0, b: 0.0, c: 5.0, d: 0.5 };
        let far = LinePoint { a: 0.0, b: 0.0, c: 5.0, d: 1.5 };
        let fr = FrameH::new(0.0, 0.0);
        assert!(closer_or_tied(&fr, p, q, &near));
        assert!(!closer_or_tied(&fr, p, q, &far));
        // Same answer through the padded slab.
        for lp in [near, far] {
            let lo = bisector_d_lower(&fr, p, q, lp.c);
            let hi = bisector_d_upper(&fr, p, q, lp.c);
            let inside = lo <= lp.d && lp.d <= hi;
            assert_eq!(inside, closer_or_tied(&fr, p, q, &lp));
        }
    }

    #[test]
    fn tangency_brackets_center_column() {
        let fr = FrameH::new(0.0, 0.0);
        let center = Vec3::new(0.0, 1.0, 2.0);
        // Column through the projected center: tangents at y +- r.
        let lo = tangency_d_below(&fr, center, 0.5, 1.0).unwrap();
        let hi = tangency_d_above(&fr, center, 0.5, 1.0).unwrap();
        assert!((lo - 1.5).abs() < 1e-12);
        assert!((hi - 2.5).abs() < 1e-12);
        assert!(tangency_d_below(&fr, center, 0.5, 2.0).is_none());
    }
}
