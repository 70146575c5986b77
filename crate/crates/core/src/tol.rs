//! Centralized tolerances. All geometric comparisons are relative with
//! floor 1.0, so coordinates of magnitude below one compare absolutely.

/// Relative tolerance for geometric coordinate comparisons.
pub const TAU_GEOM: f64 = 1e-9;

/// Relative tolerance below which a line direction's x-component makes the
/// slope parameterization unusable.
pub const TAU_DIR: f64 = 1e-7;

/// Scale used by relative comparisons: `max(1, |x|, |y|)`.
#[inline]
pub fn scale(x: f64, y: f64) -> f64 {
    1.0f64.max(x.abs()).max(y.abs())
}

/// `x == y` up to relative `TAU_GEOM`.
#[inline]
pub fn rel_eq(x: f64, y: f64) -> bool {
    (x - y).abs() <= TAU_GEOM * scale(x, y)
}

/// `x <= y` up to relative `TAU_GEOM` slack.
#[inline]
pub fn rel_le(x: f64, y: f64) -> bool {
    x - y <= TAU_GEOM * scale(x, y)
}

/// True when `x` is within the tangency band around zero at the given scale.
#[inline]
pub fn near_zero(x: f64, s: f64) -> bool {
    x.abs() <= TAU_GEOM * 1.0f64.max(s)
}
