//! Boundary structure of a union of balls: exposed arcs of the pairwise
//! intersection circles, exposed silhouette (equator) arcs, triple-point
//! vertices, and a sampled face census.
//!
//! A point of a circle is *exposed* when it lies outside the interior of
//! every ball other than the (one or two) balls whose surfaces carry the
//! circle. Splitting each circle at its crossings with the other sphere
//! boundaries and classifying each sub-arc by its midpoint yields exactly
//! the arcs of the union boundary.

use crate::ball::{equator, pair_circle, Ball, Circle3};
use prismatica_core::Vec3;
use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcKind {
    /// Intersection circle of balls `(i, j)`, `i < j`.
    Pair(usize, usize),
    /// Horizontal silhouette circle of ball `i`.
    Equator(usize),
}

/// A circular arc `t in [t0, t1]` (radians, `t1 > t0`, full circle when
/// `t1 - t0 == 2 pi`).
#[derive(Debug, Clone)]
pub struct SourceArc {
    pub circle: Circle3,
    pub t0: f64,
    pub t1: f64,
    pub kind: ArcKind,
}

impl SourceArc {
    #[inline]
    pub fn midpoint(&self) -> Vec3 {
        self.circle.point(0.5 * (self.t0 + self.t1))
    }
}

/// `p` lies outside the open interior of every ball except those listed.
pub fn exposed(p: Vec3, balls: &[Ball], skip: &[usize]) -> bool {
    balls
        .iter()
        .enumerate()
        .all(|(k, b)| skip.contains(&k) || !b.contains_strict(p))
}

/// Splits `circle` at its crossings with every other sphere boundary and
/// keeps the sub-arcs whose midpoints pass `keep`.
fn subarcs(
    circle: &Circle3,
    kind: ArcKind,
    balls: &[Ball],
    skip: &[usize],
    keep: impl Fn(Vec3) -> bool,
) -> Vec<SourceArc> {
    let mut cuts: Vec<f64> = Vec::new();
    for (k, b) in balls.iter().enumerate() {
        if skip.contains(&k) {
            continue;
        }
        cuts.extend(circle.sphere_crossings(b));
    }
    let mut out = Vec::new();
    if cuts.is_empty() {
        if keep(circle.point(0.0)) {
            out.push(SourceArc { circle: *circle, t0: 0.0, t1: TAU, kind });
        }
        return out;
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let m = cuts.len();
    for i in 0..m {
        let t0 = cuts[i];
        let t1 = if i + 1 < m { cuts[i + 1] } else { cuts[0] + TAU };
        if t1 - t0 < 1e-12 {
            continue;
        }
        if keep(circle.point(0.5 * (t0 + t1))) {
            out.push(SourceArc { circle: *circle, t0, t1, kind });
        }
    }
    out
}

/// Sub-arcs whose midpoints are exposed: the arcs of the union boundary.
fn exposed_subarcs(
    circle: &Circle3,
    kind: ArcKind,
    balls: &[Ball],
    skip: &[usize],
) -> Vec<SourceArc> {
    subarcs(circle, kind, balls, skip, |p| exposed(p, balls, skip))
}

/// Every sub-arc, buried or exposed: the edges of the full arrangement
/// carried by `circle`.
pub fn all_subarcs(
    circle: &Circle3,
    kind: ArcKind,
    balls: &[Ball],
    skip: &[usize],
) -> Vec<SourceArc> {
    subarcs(circle, kind, balls, skip, |_| true)
}

/// Census of the union boundary.
#[derive(Debug, Clone)]
pub struct UnionBoundary {
    /// Exposed arcs of pairwise intersection circles.
    pub pair_arcs: Vec<SourceArc>,
    /// Exposed silhouette arcs (per-ball equators).
    pub silhouette_arcs: Vec<SourceArc>,
    /// Triple points on the boundary.
    pub vertex_count: usize,
    /// Connected exposed patches over all spheres (sampled estimate).
    pub face_count: usize,
    /// Number of properly crossing sphere pairs.
    pub crossing_pairs: usize,
}

impl UnionBoundary {
    /// Total boundary feature count: vertices + arcs + faces.
    pub fn complexity(&self) -> usize {
        self.vertex_count + self.pair_arcs.len() + self.face_count
    }
}

/// Builds the boundary census of the union of `balls`.
pub fn build_union_balls(balls: &[Ball]) -> UnionBoundary {
    let n = balls.len();
    let mut pair_arcs = Vec::new();
    let mut silhouette_arcs = Vec::new();
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut crossing_pairs = 0usize;

    for i in 0..n {
        for j in (i + 1)..n {
            let Some(c) = pair_circle(&balls[i], &balls[j]) else { continue };
            crossing_pairs += 1;
            pair_arcs.extend(exposed_subarcs(&c, ArcKind::Pair(i, j), balls, &[i, j]));
            // Triple candidates: crossings of this circle with a third
            // sphere that survive exposure against everything else.
            for (k, b) in balls.iter().enumerate() {
                if k == i || k == j {
                    continue;
                }
                for t in c.sphere_crossings(b) {
                    let p = c.point(t);
                    if exposed(p, balls, &[i, j, k]) {
                        vertices.push(p);
                    }
                }
            }
        }
    }
    for i in 0..n {
        let c = equator(&balls[i]);
        silhouette_arcs.extend(exposed_subarcs(&c, ArcKind::Equator(i), balls, &[i]));
    }

    // Each triple point was generated once per incident circle pair; dedup
    // on rounded coordinates.
    let mut keys: Vec<(i64, i64, i64)> = vertices
        .iter()
        .map(|p| {
            (
                (p.x * 1e6).round() as i64,
                (p.y * 1e6).round() as i64,
                (p.z * 1e6).round() as i64,
            )
        })
        .collect();
    keys.sort_unstable();
    keys.dedup();
    let vertex_count = keys.len();

    let face_count = face_census(balls);

    UnionBoundary { pair_arcs, silhouette_arcs, vertex_count, face_count, crossing_pairs }
}

/// Counts connected exposed patches per sphere by flood-filling a
/// Fibonacci lattice of surface samples (neighbors = samples within twice
/// the lattice spacing). A sampled estimate: patches thinner than the
/// lattice spacing can be missed or split.
fn face_census(balls: &[Ball]) -> usize {
    const M: usize = 360;
    let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
    let mut total = 0usize;
    let mut pts: Vec<Vec3> = Vec::with_capacity(M);
    for (i, b) in balls.iter().enumerate() {
        pts.clear();
        for k in 0..M {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / M as f64;
            let rho = (1.0 - z * z).sqrt();
            let th = golden * k as f64;
            let dir = Vec3::new(rho * th.cos(), rho * th.sin(), z);
            let p = b.center + dir * b.radius;
            if exposed(p, balls, &[i]) {
                pts.push(p);
            }
        }
        if pts.is_empty() {
            continue;
        }
        // Lattice spacing ~ sqrt(4 pi / M) * r; link samples within 2x.
        let link = 2.0 * b.radius * (4.0 * std::f64::consts::PI / M as f64).sqrt();
        let mut parent: Vec<usize> = (0..pts.len()).collect();
        fn find(parent: &mut Vec<usize>, mut a: usize) -> usize {
            while parent[a] != a {
                parent[a] = parent[parent[a]];
                a = parent[a];
            }
            a
        }
        for a in 0..pts.len() {
            for c in (a + 1)..pts.len() {
                if pts[a].dist_sq(pts[c]) <= link * link {
                    let ra = find(&mut parent, a);
                    let rc = find(&mut parent, c);
                    if ra != rc {
                        parent[ra] = rc;
                    }
                }
            }
        }
        let mut roots: Vec<usize> = (0..pts.len()).map(|a| find(&mut parent, a)).collect();
        roots.sort_unstable();
        roots.dedup();
        total += roots.len();
    }
    total
}
