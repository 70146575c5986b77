//! Curtain envelopes over arrangement edges and the vertical
//! visibilities their breakpoints witness.
//!
//! The curtain of an edge e is the union of upward vertical rays from its
//! points. Every sphere cap cuts the curtain in a curve over the edge
//! parameter; the first boundary hit above e(t) is the lower envelope of
//! those curves. Where the envelope switches curves, two caps meet at one
//! point, which therefore lies on an intersection circle or a silhouette:
//! a vertical visibility with e as bottom edge. Enumerating the envelope
//! breakpoints over every edge acting as bottom yields the full
//! visibility set of the target region.

use std::collections::BTreeMap;

use prismatica_core::rng::rng_for;
use prismatica_core::{GeomError, Vec3};
use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::ball::{equator, pair_circle, Ball};
use crate::cutting::{ball_cutting, cutting_sample_size, CuttingVariant};
use crate::overlay::{OverlayVd, VdMode};
use crate::union::{all_subarcs, build_union_balls, ArcKind, SourceArc};

/// Chebyshev seeds per curve pair when bracketing envelope breakpoints.
const SEEDS: usize = 64;
/// Grid resolution for locating cap-domain boundaries (footprint
/// clearance zeros) along an edge; the clearance needs no square roots,
/// so a fine uniform scan is cheap and keeps narrow domain slivers from
/// slipping between the Chebyshev seeds.
const SIL_GRID: usize = 4096;
/// Geometric tolerance: breakpoints closer than this to the bottom edge,
/// or ties wider than this, are discarded.
const TAU_GEOM: f64 = 1e-7;
/// Recursion depth cap; deeper nodes are solved directly.
const MAX_DEPTH: usize = 12;

/// Which region's visibilities are wanted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// Complement of the union: only exposed edges, free witnesses.
    Complement,
    /// Every arrangement cell: all edges, witnesses classified per cell.
    FullArrangement,
}

/// A boundary edge up to its carrying circle: the intersection circle of
/// a sphere pair, or one sphere's vertical silhouette.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EdgeKey {
    Pair(usize, usize),
    Sil(usize),
}

impl EdgeKey {
    fn of(kind: ArcKind) -> EdgeKey {
        match kind {
            ArcKind::Pair(i, j) => EdgeKey::Pair(i, j),
            ArcKind::Equator(i) => EdgeKey::Sil(i),
        }
    }

    fn remap(self, ids: &[usize]) -> EdgeKey {
        match self {
            EdgeKey::Pair(i, j) => {
                let (a, b) = (ids[i], ids[j]);
                EdgeKey::Pair(a.min(b), a.max(b))
            }
            EdgeKey::Sil(i) => EdgeKey::Sil(ids[i]),
        }
    }
}

/// One breakpoint of a curtain envelope.
#[derive(Debug, Clone)]
pub struct Breakpoint {
    /// Edge parameter of the witness column.
    pub t: f64,
    pub x: f64,
    pub y: f64,
    /// Bottom of the witness: the edge point.
    pub z_lo: f64,
    /// Top of the witness: the envelope value.
    pub z_hi: f64,
    /// Edge the breakpoint lies on.
    pub upper: EdgeKey,
    /// The envelope switched curves because one ended on a silhouette,
    /// not because two caps crossed.
    pub silhouette: bool,
}

/// A vertical visibility between two edges.
#[derive(Debug, Clone)]
pub struct Visibility {
    pub lower: EdgeKey,
    pub upper: EdgeKey,
    pub x: f64,
    pub y: f64,
    pub z_lo: f64,
    pub z_hi: f64,
    /// Balls containing the witness; empty in complement mode.
    pub cell: Vec<usize>,
}

/// Deduplication key: edge pair plus the witness column rounded to 1e-6.
pub type VisKey = (EdgeKey, EdgeKey, i64, i64);

impl Visibility {
    pub fn key(&self) -> VisKey {
        (self.lower, self.upper, (self.x * 1e6).round() as i64, (self.y * 1e6).round() as i64)
    }
}

/// One cap curve over the edge parameter.
#[derive(Debug, Clone, Copy)]
struct Cap {
    ball: usize,
    upper: bool,
}

struct Curtain<'a> {
    edge: &'a SourceArc,
    balls: &'a [Ball],
    region: Region,
    caps: Vec<Cap>,
}

impl<'a> Curtain<'a> {
    fn new(edge: &'a SourceArc, balls: &'a [Ball], region: Region) -> Self {
        // Conservative activity filter: the ball's footprint disk must
        // reach the circle's xy bounding box.
        let c = &edge.circle;
        let rx = (c.e1.x * c.radius).hypot(c.e2.x * c.radius);
        let ry = (c.e1.y * c.radius).hypot(c.e2.y * c.radius);
        let (xl, xh) = (c.center.x - rx, c.center.x + rx);
        let (yl, yh) = (c.center.y - ry, c.center.y + ry);
        let mut caps = Vec::new();
        for (k, b) in balls.iter().enumerate() {
            if b.center.x + b.radius < xl
                || b.center.x - b.radius > xh
                || b.center.y + b.radius < yl
                || b.center.y - b.radius > yh
            {
                continue;
            }
            caps.push(Cap { ball: k, upper: false });
            if region == Region::FullArrangement {
                caps.push(Cap { ball: k, upper: true });
            }
        }
        Curtain { edge, balls, region, caps }
    }

    #[inline]
    fn at(&self, t: f64) -> Vec3 {
        self.edge.circle.point(t)
    }

    /// Cap value above the edge point at `t`, if the cap is defined there
    /// and strictly above the edge.
    fn cap_above(&self, cap: Cap, t: f64) -> Option<f64> {
        let p = self.at(t);
        let b = &self.balls[cap.ball];
        let (lo, hi) = b.column_interval(p.x, p.y)?;
        let z = if cap.upper { hi } else { lo };
        (z > p.z + TAU_GEOM).then_some(z)
    }

    /// Envelope value at `t`: the first boundary hit going up.
    fn first_hit(&self, t: f64) -> Option<f64> {
        self.caps.iter().filter_map(|&c| self.cap_above(c, t)).min_by(|a, b| a.total_cmp(b))
    }

    /// Whether the edge can play bottom at `t`: free (or cell-interior)
    /// space must lie immediately above the edge point. In the complement
    /// a pair edge qualifies only on the upper caps of both carriers; in
    /// the full arrangement every edge bounds the cell above it.
    fn bottom_valid(&self, t: f64) -> bool {
        if self.region == Region::FullArrangement {
            return true;
        }
        match self.edge.kind {
            ArcKind::Equator(_) => true,
            ArcKind::Pair(i, j) => {
                let z = self.at(t).z;
                z >= self.balls[i].center.z - TAU_GEOM && z >= self.balls[j].center.z - TAU_GEOM
            }
        }
    }

    /// Validates a candidate breakpoint and fills in the witness.
    fn accept(&self, t: f64, z_hi: f64, upper: EdgeKey, silhouette: bool) -> Option<Breakpoint> {
        let p = self.at(t);
        if !(z_hi > p.z + TAU_GEOM) || !self.bottom_valid(t) {
            return None;
        }
        // Must be on the envelope: nothing strictly below it.
        if let Some(env) = self.first_hit(t) {
            if z_hi > env + TAU_GEOM {
                return None;
            }
        } else {
            return None;
        }
        // No cap may cross the open witness, and in the complement both
        // endpoints must be on the union boundary.
        for b in self.balls {
            if let Some((lo, hi)) = b.column_interval(p.x, p.y) {
                for z in [lo, hi] {
                    if z > p.z + TAU_GEOM && z < z_hi - TAU_GEOM {
                        return None;
                    }
                }
            }
        }
        if self.region == Region::Complement {
            let top = Vec3::new(p.x, p.y, z_hi);
            if self.balls.iter().any(|b| deep_inside(b, p) || deep_inside(b, top)) {
                return None;
            }
        }
        Some(Breakpoint { t, x: p.x, y: p.y, z_lo: p.z, z_hi, upper, silhouette })
    }
}

/// Strictly inside with a tolerance margin scaled to the radius.
fn deep_inside(b: &Ball, p: Vec3) -> bool {
    p.dist(b.center) < b.radius - TAU_GEOM
}

/// Breakpoints of the lower envelope of the cap curves inside the upward
/// curtain of `edge`. Pair breakpoints are located by bracketed bisection
/// from Chebyshev seeds on the cap difference; silhouette breakpoints
/// from sign changes of the footprint clearance. Buried or blocked
/// candidates validate against the full set and drop out, so an edge
/// inside the union yields an empty list in complement mode.
pub fn curtain_envelope(edge: &SourceArc, balls: &[Ball], region: Region) -> Vec<Breakpoint> {
    let cu = Curtain::new(edge, balls, region);
    let (t0, t1) = (edge.t0, edge.t1);

    let mut out: Vec<Breakpoint> = Vec::new();
    let carriers: Vec<usize> = match edge.kind {
        ArcKind::Pair(i, j) => vec![i, j],
        ArcKind::Equator(i) => vec![i],
    };

    // Footprint-clearance zeros per active ball: where its caps appear
    // or vanish over the edge. Carriers stay at zero clearance along the
    // whole edge and are skipped.
    let mut active: Vec<usize> = cu.caps.iter().map(|c| c.ball).collect();
    active.dedup();
    let mut boundaries: Vec<(usize, f64)> = Vec::new();
    let step = (t1 - t0) / SIL_GRID as f64;
    for &k in &active {
        if carriers.contains(&k) {
            continue;
        }
        let b = &cu.balls[k];
        let clear = |t: f64| {
            let p = cu.at(t);
            let dx = p.x - b.center.x;
            let dy = p.y - b.center.y;
            dx * dx + dy * dy - b.radius * b.radius
        };
        let mut prev = clear(t0);
        for g in 1..=SIL_GRID {
            let t = t0 + step * g as f64;
            let cur = clear(t);
            if prev != 0.0 && prev.signum() != cur.signum() {
                let (mut lo, mut hi, flo) = (t - step, t, prev);
                for _ in 0..80 {
                    let tm = 0.5 * (lo + hi);
                    if clear(tm).signum() == flo.signum() {
                        lo = tm;
                    } else {
                        hi = tm;
                    }
                }
                // Keep the inside-footprint endpoint, where the grazing
                // cap still exists and can carry the envelope.
                boundaries.push((k, if flo < 0.0 { lo } else { hi }));
            }
            prev = cur;
        }
    }

    let mid = 0.5 * (t0 + t1);
    let half = 0.5 * (t1 - t0);
    let mut nodes: Vec<f64> = (0..SEEDS)
        .map(|j| mid + half * (std::f64::consts::PI * (j as f64 + 0.5) / SEEDS as f64).cos())
        .collect();
    nodes.push(t0);
    nodes.push(t1);
    // Domain boundaries as extra nodes keep curve definedness constant
    // within each window, so crossings hugging a silhouette still meet a
    // sign check on the defined side.
    nodes.extend(boundaries.iter().map(|&(_, t)| t));
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());

    // Crossings of two caps from different balls.
    for a in 0..cu.caps.len() {
        for b in (a + 1)..cu.caps.len() {
            let (ca, cb) = (cu.caps[a], cu.caps[b]);
            if ca.ball == cb.ball {
                continue;
            }
            let diff = |t: f64| -> Option<f64> {
                Some(cu.cap_above(ca, t)? - cu.cap_above(cb, t)?)
            };
            for w in nodes.windows(2) {
                let (ta, tb) = (w[0], w[1]);
                // A window end where one curve is undefined still may
                // hide a crossing next to the domain boundary: shrink to
                // the defined part before testing for a sign change.
                let (lo0, hi0, fa, fb) = match (diff(ta), diff(tb)) {
                    (Some(fa), Some(fb)) => (ta, tb, fa, fb),
                    (Some(fa), None) => {
                        let (mut dl, mut dh) = (ta, tb);
                        for _ in 0..60 {
                            let tm = 0.5 * (dl + dh);
                            if diff(tm).is_some() {
                                dl = tm;
                            } else {
                                dh = tm;
                            }
                        }
                        let Some(fd) = diff(dl) else { continue };
                        (ta, dl, fa, fd)
                    }
                    (None, Some(fb)) => {
                        let (mut dl, mut dh) = (ta, tb);
                        for _ in 0..60 {
                            let tm = 0.5 * (dl + dh);
                            if diff(tm).is_some() {
                                dh = tm;
                            } else {
                                dl = tm;
                            }
                        }
                        let Some(fd) = diff(dh) else { continue };
                        (dh, tb, fd, fb)
                    }
                    (None, None) => continue,
                };
                if fa == 0.0 || fa.signum() == fb.signum() {
                    continue;
                }
                let (mut lo, mut hi, flo) = (lo0, hi0, fa);
                for _ in 0..80 {
                    let tm = 0.5 * (lo + hi);
                    match diff(tm) {
                        Some(fm) if fm.signum() == flo.signum() => lo = tm,
                        Some(_) => hi = tm,
                        None => break,
                    }
                }
                let t = 0.5 * (lo + hi);
                let Some(z) = cu.cap_above(ca, t) else { continue };
                let key =
                    EdgeKey::Pair(ca.ball.min(cb.ball), ca.ball.max(cb.ball));
                if let Some(bp) = cu.accept(t, z, key, false) {
                    out.push(bp);
                }
            }
        }
    }

    // Curve endpoints on silhouettes: the witness column grazes a ball.
    for &(k, t) in &boundaries {
        if let Some(bp) = cu.accept(t, cu.balls[k].center.z, EdgeKey::Sil(k), true) {
            out.push(bp);
        }
    }
    out
}

/// Balls strictly containing the point, sorted: the arrangement cell
/// label of a witness.
fn witness_cell(balls: &[Ball], x: f64, y: f64, z: f64) -> Vec<usize> {
    let p = Vec3::new(x, y, z);
    balls
        .iter()
        .enumerate()
        .filter(|(_, b)| b.contains_strict(p))
        .map(|(k, _)| k)
        .collect()
}

/// Edges of the target region that can carry a bottom point.
fn region_edges(balls: &[Ball], region: Region) -> Vec<SourceArc> {
    match region {
        Region::Complement => {
            let u = build_union_balls(balls);
            let mut arcs = u.pair_arcs;
            arcs.extend(u.silhouette_arcs);
            arcs
        }
        Region::FullArrangement => {
            let mut arcs = Vec::new();
            for i in 0..balls.len() {
                for j in (i + 1)..balls.len() {
                    if let Some(c) = pair_circle(&balls[i], &balls[j]) {
                        arcs.extend(all_subarcs(&c, ArcKind::Pair(i, j), balls, &[i, j]));
                    }
                }
                let c = equator(&balls[i]);
                arcs.extend(all_subarcs(&c, ArcKind::Equator(i), balls, &[i]));
            }
            arcs
        }
    }
}

/// Every vertical visibility of the region, by enumerating curtain
/// breakpoints over all edges acting as bottom. Deterministic order.
pub fn visibilities_bruteforce(balls: &[Ball], region: Region) -> Vec<Visibility> {
    let mut seen: BTreeMap<VisKey, Visibility> = BTreeMap::new();
    for edge in &region_edges(balls, region) {
        let lower = EdgeKey::of(edge.kind);
        for bp in curtain_envelope(edge, balls, region) {
            let cell = match region {
                Region::Complement => Vec::new(),
                Region::FullArrangement => {
                    witness_cell(balls, bp.x, bp.y, 0.5 * (bp.z_lo + bp.z_hi))
                }
            };
            let v = Visibility {
                lower,
                upper: bp.upper,
                x: bp.x,
                y: bp.y,
                z_lo: bp.z_lo,
                z_hi: bp.z_hi,
                cell,
            };
            seen.entry(v.key()).or_insert(v);
        }
    }
    seen.into_values().collect()
}

/// Exact validity of a candidate witness against the whole set: both
/// endpoints on the union boundary, the open segment crossed by no cap,
/// and the bottom edge locally below free space.
fn witness_valid(balls: &[Ball], v: &Visibility) -> bool {
    let bot = Vec3::new(v.x, v.y, v.z_lo);
    let top = Vec3::new(v.x, v.y, v.z_hi);
    if balls.iter().any(|b| deep_inside(b, bot) || deep_inside(b, top)) {
        return false;
    }
    for b in balls {
        if let Some((lo, hi)) = b.column_interval(v.x, v.y) {
            for z in [lo, hi] {
                if z > v.z_lo + TAU_GEOM && z < v.z_hi - TAU_GEOM {
                    return false;
                }
            }
        }
    }
    if let EdgeKey::Pair(i, j) = v.lower {
        if v.z_lo < balls[i].center.z - TAU_GEOM || v.z_lo < balls[j].center.z - TAU_GEOM {
            return false;
        }
    }
    true
}

/// Complement visibilities by randomized divide and conquer: below the
/// cutoff solve directly, otherwise cut the complement of a sample and
/// recurse per cell on the balls that can touch it. Every witness lies
/// inside one cell's closure, so no visibility is lost; subset leaves can
/// over-report, and a final exact check against the whole set prunes
/// those.
pub fn visibilities_recursive(
    balls: &[Ball],
    r: usize,
    n0: usize,
    seed: u64,
) -> Result<Vec<Visibility>, GeomError> {
    let mut rng = rng_for(seed, 7);
    let ids: Vec<usize> = (0..balls.len()).collect();
    let mut acc: BTreeMap<VisKey, Visibility> = BTreeMap::new();
    recurse(balls, ids, r, n0, &mut rng, 0, &mut acc)?;
    Ok(acc.into_values().filter(|v| witness_valid(balls, v)).collect())
}

fn solve_node(
    balls: &[Ball],
    ids: &[usize],
    acc: &mut BTreeMap<VisKey, Visibility>,
) {
    let sub: Vec<Ball> = ids.iter().map(|&i| balls[i]).collect();
    for mut v in visibilities_bruteforce(&sub, Region::Complement) {
        v.lower = v.lower.remap(ids);
        v.upper = v.upper.remap(ids);
        acc.entry(v.key()).or_insert(v);
    }
}

fn recurse(
    balls: &[Ball],
    ids: Vec<usize>,
    r: usize,
    n0: usize,
    rng: &mut ChaCha12Rng,
    depth: usize,
    acc: &mut BTreeMap<VisKey, Visibility>,
) -> Result<(), GeomError> {
    let n = ids.len();
    if n <= n0 || depth >= MAX_DEPTH || cutting_sample_size(n, 2 * r) >= n {
        solve_node(balls, &ids, acc);
        return Ok(());
    }
    let sub: Vec<Ball> = ids.iter().map(|&i| balls[i]).collect();
    let cut = ball_cutting(&sub, 2 * r, CuttingVariant::ComplementOfUnion, rng.gen())?;
    let mut children: Vec<Vec<usize>> = Vec::with_capacity(cut.vd.cells.len());
    for (ci, cell) in cut.vd.cells.iter().enumerate() {
        if !cut.containing[ci].is_empty() {
            continue;
        }
        let mut child: Vec<usize> = cut.conflicts[ci].clone();
        for &si in &cut.sample {
            let b = &sub[si];
            if b.meets_box(cell.bbox_lo, cell.bbox_hi) {
                child.push(si);
            }
        }
        child.sort_unstable();
        child.dedup();
        if child.len() >= n {
            solve_node(balls, &ids, acc);
            return Ok(());
        }
        children.push(child.into_iter().map(|k| ids[k]).collect());
    }
    for child in children {
        recurse(balls, child, r, n0, rng, depth + 1, acc)?;
    }
    Ok(())
}

/// Size census of one region's vertical decomposition.
#[derive(Debug, Clone, Copy)]
pub struct AssemblyCounts {
    pub prisms: usize,
    pub base_cells: usize,
    pub union_vertices: usize,
    pub union_arcs: usize,
    pub union_faces: usize,
    pub visibilities: usize,
}

/// Builds the region's prism decomposition and counts its features next
/// to the boundary census and the visibility total the prism count
/// tracks.
pub fn vd_assemble_and_count(balls: &[Ball], region: Region) -> (OverlayVd, AssemblyCounts) {
    let mode = match region {
        Region::Complement => VdMode::Complement,
        Region::FullArrangement => VdMode::FullArrangement,
    };
    let vd = OverlayVd::build(balls, mode);
    let vis = visibilities_bruteforce(balls, region);
    let c = vd.counts();
    let counts = AssemblyCounts {
        prisms: c.prisms,
        base_cells: c.base_cells,
        union_vertices: c.union_vertices,
        union_arcs: c.union_arcs,
        union_faces: c.union_faces,
        visibilities: vis.len(),
    };
    (vd, counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_balls(n: usize, side: f64, seed: u64) -> Vec<Ball> {
        let mut rng = rng_for(seed, 1);
        (0..n)
            .map(|_| {
                Ball::new(
                    Vec3::new(
                        rng.gen::<f64>() * side,
                        rng.gen::<f64>() * side,
                        rng.gen::<f64>() * side,
                    ),
                    1.0,
                )
            })
            .collect()
    }

    /// First boundary hit above `(x, y, z)`, by direct column arithmetic.
    fn first_hit_direct(balls: &[Ball], x: f64, y: f64, z: f64, region: Region) -> Option<(usize, bool, f64)> {
        let mut best: Option<(usize, bool, f64)> = None;
        for (k, b) in balls.iter().enumerate() {
            if let Some((lo, hi)) = b.column_interval(x, y) {
                for (zc, up) in [(lo, false), (hi, true)] {
                    if region == Region::Complement && up {
                        continue;
                    }
                    if zc > z + TAU_GEOM && best.map_or(true, |(_, _, bz)| zc < bz) {
                        best = Some((k, up, zc));
                    }
                }
            }
        }
        best
    }

    #[test]
    fn single_ball_has_no_visibilities() {
        let balls = [Ball::new(Vec3::ZERO, 1.0)];
        assert!(visibilities_bruteforce(&balls, Region::Complement).is_empty());
    }

    #[test]
    fn stacked_ball_yields_silhouette_breakpoints() {
        // One ball hovering over another, offset so the upper footprint
        // crosses the lower equator: the curtain over the equator sees the
        // upper ball appear and disappear, nothing else.
        let balls = [
            Ball::new(Vec3::ZERO, 1.0),
            Ball::new(Vec3::new(0.4, 0.15, 2.4), 1.0),
        ];
        let vis = visibilities_bruteforce(&balls, Region::Complement);
        let sil: Vec<&Visibility> = vis
            .iter()
            .filter(|v| v.lower == EdgeKey::Sil(0) && v.upper == EdgeKey::Sil(1))
            .collect();
        assert_eq!(sil.len(), 2, "{vis:?}");
        for v in sil {
            assert!((v.z_hi - balls[1].center.z).abs() < 1e-9);
            let d = ((v.x - balls[1].center.x).powi(2) + (v.y - balls[1].center.y).powi(2)).sqrt();
            assert!((d - 1.0).abs() < 1e-6, "witness column grazes the upper ball");
        }
    }

    #[test]
    fn crossing_caps_meet_on_their_circle() {
        // Two wide balls overlapping above a low one, far enough apart
        // that their lower caps trade places over the low equator: the
        // switch points are cap crossings, on the upper pair's circle.
        let balls = [
            Ball::new(Vec3::ZERO, 1.0),
            Ball::new(Vec3::new(-0.45, 0.03, 2.6), 1.4),
            Ball::new(Vec3::new(1.45, -0.02, 2.58), 1.4),
        ];
        let vis = visibilities_bruteforce(&balls, Region::Complement);
        let cross: Vec<&Visibility> =
            vis.iter().filter(|v| v.upper == EdgeKey::Pair(1, 2)).collect();
        assert!(!cross.is_empty(), "{vis:?}");
        for v in cross {
            let p = Vec3::new(v.x, v.y, v.z_hi);
            assert!((p.dist(balls[1].center) - 1.4).abs() < 1e-6);
            assert!((p.dist(balls[2].center) - 1.4).abs() < 1e-6);
            assert!(v.lower == EdgeKey::Sil(0));
            assert!((v.z_lo).abs() < 1e-9);
        }
    }

    #[test]
    fn bruteforce_matches_dense_scan_oracle() {
        // Independent route: walk each boundary edge densely, track the
        // identity of the first cap hit above it, and bisect every
        // identity change. Compare witness columns pairwise.
        for seed in 0..3u64 {
            let balls = random_balls(10, 3.2, 70 + seed);
            let vis = visibilities_bruteforce(&balls, Region::Complement);

            let mut oracle: Vec<(f64, f64)> = Vec::new();
            let u = build_union_balls(&balls);
            let mut arcs = u.pair_arcs.clone();
            arcs.extend(u.silhouette_arcs.clone());
            for e in &arcs {
                let m = 2000;
                let cu = Curtain::new(e, &balls, Region::Complement);
                // None: t cannot play bottom. Some(None): valid column,
                // empty envelope. Some(Some(id)): first cap hit above.
                let idat = |t: f64| -> Option<Option<(usize, bool)>> {
                    let p = e.circle.point(t);
                    if !cu.bottom_valid(t) {
                        return None;
                    }
                    Some(
                        first_hit_direct(&balls, p.x, p.y, p.z, Region::Complement)
                            .map(|(k, up, _)| (k, up)),
                    )
                };
                let mut check = |ta: f64, tb: f64| {
                    let (ia, ib) = (idat(ta), idat(tb));
                    let (Some(ia), Some(ib)) = (ia, ib) else { return };
                    if ia == ib {
                        return;
                    }
                    let (mut lo, mut hi) = (ta, tb);
                    for _ in 0..60 {
                        let tm = 0.5 * (lo + hi);
                        if idat(tm) == Some(ia) {
                            lo = tm;
                        } else {
                            hi = tm;
                        }
                    }
                    // The envelope may exist on only one side of the
                    // event (a cap appearing or vanishing); probe both.
                    let z_at = |t: f64| {
                        let p = e.circle.point(t);
                        first_hit_direct(&balls, p.x, p.y, p.z, Region::Complement)
                            .map(|(_, _, z)| z - p.z)
                    };
                    let gap = match (z_at(lo), z_at(hi)) {
                        (Some(a), Some(b)) => a.min(b),
                        (Some(a), None) | (None, Some(a)) => a,
                        (None, None) => return,
                    };
                    // Identity changes at the very edge of the witness
                    // gap (top touching bottom) are not visibilities.
                    if gap > 1e-5 {
                        let p = e.circle.point(0.5 * (lo + hi));
                        oracle.push((p.x, p.y));
                    }
                };
                let w = (e.t1 - e.t0) / m as f64;
                for s in 0..m {
                    check(e.t0 + w * s as f64, e.t0 + w * (s + 1) as f64);
                }
                // Cap-meets-edge slivers hug the arc endpoints; rescan
                // the outermost windows at much finer resolution.
                for s in 0..2000 {
                    let f = w / 2000.0;
                    check(e.t0 + f * s as f64, e.t0 + f * (s + 1) as f64);
                    check(e.t1 - w + f * s as f64, e.t1 - w + f * (s + 1) as f64);
                }
            }
            for &(ox, oy) in &oracle {
                assert!(
                    vis.iter().any(|v| (v.x - ox).abs() < 1e-4 && (v.y - oy).abs() < 1e-4),
                    "seed {seed}: oracle witness ({ox}, {oy}) unmatched"
                );
            }
            for v in &vis {
                assert!(
                    oracle.iter().any(|&(ox, oy)| (v.x - ox).abs() < 1e-4 && (v.y - oy).abs() < 1e-4),
                    "seed {seed}: visibility at ({}, {}) unseen by scan",
                    v.x,
                    v.y
                );
            }
        }
    }

    #[test]
    fn witnesses_ray_march_clean() {
        let balls = random_balls(18, 4.0, 33);
        let vis = visibilities_bruteforce(&balls, Region::Complement);
        assert!(!vis.is_empty());
        for v in &vis {
            for k in 0..1000 {
                let z = v.z_lo + (v.z_hi - v.z_lo) * (k as f64 + 0.5) / 1000.0;
                let p = Vec3::new(v.x, v.y, z);
                assert!(
                    balls.iter().all(|b| !deep_inside(b, p)),
                    "witness interior enters a ball"
                );
            }
            if let EdgeKey::Pair(i, j) = v.lower {
                assert!(v.z_lo >= balls[i].center.z - TAU_GEOM);
                assert!(v.z_lo >= balls[j].center.z - TAU_GEOM);
            }
        }
    }

    #[test]
    fn recursive_matches_bruteforce_sets() {
        for seed in 0..4u64 {
            let n = 28 + (seed as usize % 2) * 9;
            let side = 2.1 * (n as f64).cbrt();
            let balls = random_balls(n, side, 200 + seed);
            let brute: Vec<VisKey> =
                visibilities_bruteforce(&balls, Region::Complement).iter().map(|v| v.key()).collect();
            let rec: Vec<VisKey> = visibilities_recursive(&balls, 4, 24, 900 + seed)
                .unwrap()
                .iter()
                .map(|v| v.key())
                .collect();
            assert_eq!(brute, rec, "seed {seed} n {n}");
        }
    }

    #[test]
    fn full_arrangement_labels_witnesses_by_cell() {
        // Two small balls inside the footprint of a big one, one of them
        // poking out sideways: silhouette alignments put one visibility
        // pair inside the big ball and another in the outer cell.
        let balls = [
            Ball::new(Vec3::new(-0.95, 0.02, 1.1), 0.7),
            Ball::new(Vec3::new(0.35, -0.03, 1.25), 0.7),
            Ball::new(Vec3::ZERO, 1.6),
        ];
        let vis = visibilities_bruteforce(&balls, Region::FullArrangement);
        let mut labels: Vec<Vec<usize>> = vis.iter().map(|v| v.cell.clone()).collect();
        labels.sort();
        labels.dedup();
        for want in [vec![], vec![2]] {
            assert!(labels.contains(&want), "no visibility in cell {want:?}: {vis:?}");
        }
        // The buried pair: both small equators, witness inside the big
        // ball only.
        assert!(vis.iter().any(|v| v.lower == EdgeKey::Sil(0)
            && v.upper == EdgeKey::Sil(1)
            && v.cell == vec![2]));
        // Witnesses stay inside their labeled cell.
        for v in &vis {
            for k in 0..200 {
                let z = v.z_lo + (v.z_hi - v.z_lo) * (k as f64 + 0.5) / 200.0;
                let cell = witness_cell(&balls, v.x, v.y, z);
                assert_eq!(cell, v.cell, "witness of {v:?} leaves its cell");
            }
        }
    }

    #[test]
    fn assembly_counts_cover_boundary_and_visibilities() {
        let balls = random_balls(24, 4.6, 91);
        let (vd, counts) = vd_assemble_and_count(&balls, Region::Complement);
        assert_eq!(counts.prisms, vd.cells.len());
        assert!(counts.prisms >= counts.union_arcs);
        assert!(counts.visibilities > 0);
        // The prism count tracks boundary size plus visibilities at desk
        // scale within a generous constant.
        let feat = counts.union_arcs + counts.union_vertices + counts.visibilities + balls.len();
        assert!(counts.prisms <= 60 * feat, "{counts:?}");
        assert!(counts.prisms * 60 >= feat, "{counts:?}");
    }
}
