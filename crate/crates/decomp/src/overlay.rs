//! Vertical decomposition of a ball arrangement through a planar overlay.
//!
//! Every boundary feature relevant to vertical columns projects to the
//! xy-plane as an arc of an ellipse (tilted intersection circles) or of a
//! circle (equator silhouettes). The overlay splits those projections
//! into x-monotone pieces, finds every pairwise crossing, and erects a
//! slab structure over the event abscissas. Inside one slab the active
//! pieces never cross, so a point's 2D cell is `(slab, gap index)` where
//! the gap index is the rank of its `y` among the active pieces' values
//! at the query's own `x` - an exact test, no stored geometry is
//! approximated. Adjacent slab cells whose shared border segment carries
//! no event are the same trapezoid and get union-found together.
//!
//! The third dimension is resolved per column: in complement mode the
//! cell is the rank of the query's free z-interval among the merged ball
//! intervals of its column; in full-arrangement mode it is the rank among
//! all sphere-cap values. Both are combinatorially constant over a
//! trapezoid, which is what makes `(trapezoid, rank)` a partition into
//! pseudo-prisms.

use crate::ball::Ball;
use crate::union::{build_union_balls, ArcKind, SourceArc, UnionBoundary};
use prismatica_core::Vec3;
use std::collections::HashMap;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VdMode {
    /// Decompose the complement of the union.
    Complement,
    /// Decompose all of space into arrangement prisms.
    FullArrangement,
}

/// Projected arc: `(x, y)(t) = (cx, cy) + (ax, ay) cos t + (bx, by) sin t`.
#[derive(Debug, Clone)]
struct ProjCurve {
    cx: f64,
    cy: f64,
    ax: f64,
    bx: f64,
    ay: f64,
    by: f64,
    rx: f64,
    phix: f64,
    /// Balls whose surfaces carry the source arc.
    source_balls: Vec<usize>,
}

impl ProjCurve {
    fn from_arc(arc: &SourceArc) -> Self {
        let c = &arc.circle;
        let source_balls = match arc.kind {
            ArcKind::Pair(i, j) => vec![i, j],
            ArcKind::Equator(i) => vec![i],
        };
        let ax = c.e1.x * c.radius;
        let bx = c.e2.x * c.radius;
        ProjCurve {
            cx: c.center.x,
            cy: c.center.y,
            ax,
            bx,
            ay: c.e1.y * c.radius,
            by: c.e2.y * c.radius,
            rx: ax.hypot(bx),
            phix: bx.atan2(ax),
            source_balls,
        }
    }

    #[inline]
    fn x_at(&self, t: f64) -> f64 {
        self.cx + self.ax * t.cos() + self.bx * t.sin()
    }

    #[inline]
    fn y_at(&self, t: f64) -> f64 {
        self.cy + self.ay * t.cos() + self.by * t.sin()
    }
}

/// One x-monotone piece of a projected curve.
#[derive(Debug, Clone)]
struct MonoPiece {
    curve: u32,
    t0: f64,
    t1: f64,
    xmin: f64,
    xmax: f64,
    /// `floor((t_mid - phix) / pi)`: which half-period the piece lives in.
    khalf: i64,
}

impl MonoPiece {
    /// Parameter value of the piece at abscissa `x` (clamped into range).
    fn t_at_x(&self, c: &ProjCurve, x: f64) -> f64 {
        let u = ((x - c.cx) / c.rx).clamp(-1.0, 1.0).acos();
        let v = if self.khalf.rem_euclid(2) == 0 {
            PI * self.khalf as f64 + u
        } else {
            PI * (self.khalf + 1) as f64 - u
        };
        (c.phix + v).clamp(self.t0, self.t1)
    }

    #[inline]
    fn y_at_x(&self, c: &ProjCurve, x: f64) -> f64 {
        c.y_at(self.t_at_x(c, x))
    }

    /// Exact y-extent of the piece over `[xl, xh]`.
    fn y_extent(&self, c: &ProjCurve, xl: f64, xh: f64) -> (f64, f64) {
        let ta = self.t_at_x(c, xl);
        let tb = self.t_at_x(c, xh);
        let (tl, th) = if ta <= tb { (ta, tb) } else { (tb, ta) };
        let mut lo = c.y_at(tl).min(c.y_at(th));
        let mut hi = c.y_at(tl).max(c.y_at(th));
        let phiy = c.by.atan2(c.ay);
        let mut k = ((tl - phiy) / PI).ceil() as i64;
        loop {
            let t = phiy + PI * k as f64;
            if t > th {
                break;
            }
            if t >= tl {
                let y = c.y_at(t);
                lo = lo.min(y);
                hi = hi.max(y);
            }
            k += 1;
        }
        (lo, hi)
    }
}

/// Splits one source arc into x-monotone pieces; drops degenerate
/// (vertical segment) projections, which have measure-zero columns.
fn split_arc(curve_idx: u32, c: &ProjCurve, t0: f64, t1: f64, out: &mut Vec<MonoPiece>) {
    if c.rx < 1e-9 {
        return;
    }
    let mut brks = vec![t0];
    let mut k = ((t0 - c.phix) / PI).floor() as i64 + 1;
    loop {
        let t = c.phix + PI * k as f64;
        if t >= t1 - 1e-12 {
            break;
        }
        if t > t0 + 1e-12 {
            brks.push(t);
        }
        k += 1;
    }
    brks.push(t1);
    for w in brks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a < 1e-12 {
            continue;
        }
        let xm0 = c.x_at(a);
        let xm1 = c.x_at(b);
        let khalf = (((0.5 * (a + b)) - c.phix) / PI).floor() as i64;
        out.push(MonoPiece {
            curve: curve_idx,
            t0: a,
            t1: b,
            xmin: xm0.min(xm1),
            xmax: xm0.max(xm1),
            khalf,
        });
    }
}

/// All crossing abscissas of two x-monotone pieces over their shared
/// x-range, by sign changes on a Chebyshev sample plus bisection.
fn piece_crossings(
    a: &MonoPiece,
    ca: &ProjCurve,
    b: &MonoPiece,
    cb: &ProjCurve,
) -> Vec<(f64, f64)> {
    let lo = a.xmin.max(b.xmin);
    let hi = a.xmax.min(b.xmax);
    if hi - lo < 1e-12 {
        return Vec::new();
    }
    const K: usize = 48;
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut xs = [0.0f64; K + 1];
    for (i, x) in xs.iter_mut().enumerate() {
        *x = mid - half * (PI * i as f64 / K as f64).cos();
    }
    xs[0] = lo;
    xs[K] = hi;
    let g = |x: f64| a.y_at_x(ca, x) - b.y_at_x(cb, x);
    let gs: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    let bisect = |mut xl: f64, mut xh: f64, mut gl: f64| -> f64 {
        for _ in 0..60 {
            let xm = 0.5 * (xl + xh);
            let gm = g(xm);
            if gm == 0.0 {
                return xm;
            }
            if gm.signum() == gl.signum() {
                xl = xm;
                gl = gm;
            } else {
                xh = xm;
            }
        }
        0.5 * (xl + xh)
    };
    let mut out = Vec::new();
    let push = |x: f64, out: &mut Vec<(f64, f64)>| out.push((x, a.y_at_x(ca, x)));
    for i in 1..=K {
        let (prev, cur) = (gs[i - 1], gs[i]);
        if cur == 0.0 {
            push(xs[i], &mut out);
            continue;
        }
        if prev != 0.0 && prev.signum() != cur.signum() {
            push(bisect(xs[i - 1], xs[i], prev), &mut out);
        }
    }
    // Near-tangencies: a same-sign dip of |g| can hide a double crossing
    // between adjacent samples. Hunt the local minimum; if it dips through
    // zero, extract both roots, otherwise record the touch as an event (a
    // harmless extra slab boundary).
    for i in 1..K {
        let (gm1, g0, gp1) = (gs[i - 1], gs[i], gs[i + 1]);
        if g0 == 0.0 || gm1 == 0.0 || gp1 == 0.0 {
            continue;
        }
        let s = g0.signum();
        if gm1.signum() != s || gp1.signum() != s {
            continue;
        }
        if g0.abs() > gm1.abs() || g0.abs() > gp1.abs() {
            continue;
        }
        let (mut xl, mut xh) = (xs[i - 1], xs[i + 1]);
        for _ in 0..80 {
            let m1 = xl + (xh - xl) / 3.0;
            let m2 = xh - (xh - xl) / 3.0;
            if s * g(m1) < s * g(m2) {
                xh = m2;
            } else {
                xl = m1;
            }
        }
        let xm = 0.5 * (xl + xh);
        let gm = g(xm);
        if gm.signum() != s {
            push(bisect(xs[i - 1], xm, gm1), &mut out);
            push(bisect(xm, xs[i + 1], gm), &mut out);
        } else if gm == 0.0 || gm.abs() < 1e-10 * (1.0 + a.y_at_x(ca, xm).abs()) {
            push(xm, &mut out);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Located {
    /// Query point is interior to this ball (complement mode only).
    InsideBall(usize),
    /// Index into `OverlayVd::cells`.
    Cell(usize),
}

/// One pseudo-prism of the decomposition.
#[derive(Debug, Clone)]
pub struct PrismCell {
    /// A point interior to the cell.
    pub rep: Vec3,
    pub bbox_lo: Vec3,
    pub bbox_hi: Vec3,
    /// Ball whose upper cap is the cell floor (complement mode).
    pub floor_ball: Option<usize>,
    /// Ball whose lower cap is the cell ceiling (complement mode).
    pub ceil_ball: Option<usize>,
    /// Balls carrying the cell's floor, ceiling, and side curtains.
    pub defining: Vec<usize>,
}

/// Aggregate size census of one decomposition.
#[derive(Debug, Clone, Copy)]
pub struct VdCounts {
    pub prisms: usize,
    pub base_cells: usize,
    pub union_vertices: usize,
    pub union_arcs: usize,
    pub union_faces: usize,
    pub crossing_pairs: usize,
    pub visibility_pairs: usize,
}

pub struct OverlayVd {
    pub mode: VdMode,
    pub balls: Vec<Ball>,
    pub boundary: UnionBoundary,
    curves: Vec<ProjCurve>,
    pieces: Vec<MonoPiece>,
    /// Slab boundary abscissas, sorted.
    xs: Vec<f64>,
    /// Active piece ids per slab, sorted by y at the slab midpoint.
    slabs: Vec<Vec<u32>>,
    /// Flattened (slab, gap) -> canonical trapezoid id.
    gap_offset: Vec<usize>,
    canon2d: Vec<u32>,
    /// (canonical 2d id, z-rank) -> cell index.
    cell_ids: HashMap<(u32, u32), u32>,
    pub cells: Vec<PrismCell>,
    pub domain_lo: Vec3,
    pub domain_hi: Vec3,
}

/// Merged occupied z-intervals of the column at `(x, y)`, with the balls
/// attaining each interval's endpoints.
fn column_blocks(balls: &[Ball], x: f64, y: f64) -> Vec<(f64, f64, usize, usize)> {
    let mut ivs: Vec<(f64, f64, usize)> = Vec::new();
    for (i, b) in balls.iter().enumerate() {
        if let Some((lo, hi)) = b.column_interval(x, y) {
            ivs.push((lo, hi, i));
        }
    }
    ivs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut out: Vec<(f64, f64, usize, usize)> = Vec::new();
    for (lo, hi, i) in ivs {
        match out.last_mut() {
            Some(last) if lo <= last.1 => {
                if hi > last.1 {
                    last.1 = hi;
                    last.3 = i;
                }
            }
            _ => out.push((lo, hi, i, i)),
        }
    }
    out
}

/// Sorted cap values of the column at `(x, y)`: `(z, ball, is_upper_cap)`.
fn column_caps(balls: &[Ball], x: f64, y: f64) -> Vec<(f64, usize, bool)> {
    let mut caps = Vec::new();
    for (i, b) in balls.iter().enumerate() {
        if let Some((lo, hi)) = b.column_interval(x, y) {
            caps.push((lo, i, false));
            caps.push((hi, i, true));
        }
    }
    caps.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    caps
}

impl OverlayVd {
    pub fn build(balls: &[Ball], mode: VdMode) -> OverlayVd {
        Self::build_in(balls, mode, &[])
    }

    /// Like `build`, but the certificate domain is enlarged to also cover
    /// `enclose` (fattened by 1). Cell boxes then certify location and
    /// conflicts for any point near the larger set, not just near `balls`.
    pub fn build_in(balls: &[Ball], mode: VdMode, enclose: &[Ball]) -> OverlayVd {
        let boundary = build_union_balls(balls);
        let mut curves: Vec<ProjCurve> = Vec::new();
        let mut pieces: Vec<MonoPiece> = Vec::new();
        let add_arc = |arc: &SourceArc, curves: &mut Vec<ProjCurve>, pieces: &mut Vec<MonoPiece>| {
            let c = ProjCurve::from_arc(arc);
            let idx = curves.len() as u32;
            split_arc(idx, &c, arc.t0, arc.t1, pieces);
            curves.push(c);
        };
        match mode {
            VdMode::Complement => {
                for a in boundary.pair_arcs.iter().chain(boundary.silhouette_arcs.iter()) {
                    add_arc(a, &mut curves, &mut pieces);
                }
            }
            VdMode::FullArrangement => {
                use crate::ball::{equator, pair_circle};
                use std::f64::consts::TAU;
                for i in 0..balls.len() {
                    for j in (i + 1)..balls.len() {
                        if let Some(c) = pair_circle(&balls[i], &balls[j]) {
                            let arc =
                                SourceArc { circle: c, t0: 0.0, t1: TAU, kind: ArcKind::Pair(i, j) };
                            add_arc(&arc, &mut curves, &mut pieces);
                        }
                    }
                    let arc = SourceArc {
                        circle: equator(&balls[i]),
                        t0: 0.0,
                        t1: TAU,
                        kind: ArcKind::Equator(i),
                    };
                    add_arc(&arc, &mut curves, &mut pieces);
                }
            }
        }

        // Events: piece endpoints and pairwise crossings.
        let mut events: Vec<(f64, f64)> = Vec::new();
        for p in &pieces {
            let c = &curves[p.curve as usize];
            events.push((c.x_at(p.t0), c.y_at(p.t0)));
            events.push((c.x_at(p.t1), c.y_at(p.t1)));
        }
        let exts: Vec<(f64, f64)> = pieces
            .iter()
            .map(|p| p.y_extent(&curves[p.curve as usize], p.xmin, p.xmax))
            .collect();
        let mut order: Vec<usize> = (0..pieces.len()).collect();
        order.sort_by(|&a, &b| pieces[a].xmin.partial_cmp(&pieces[b].xmin).unwrap());
        for (oi, &i) in order.iter().enumerate() {
            let pi = &pieces[i];
            let ci = &curves[pi.curve as usize];
            let (ylo_i, yhi_i) = exts[i];
            for &j in order.iter().skip(oi + 1) {
                let pj = &pieces[j];
                if pj.xmin > pi.xmax {
                    break;
                }
                if pi.curve == pj.curve {
                    continue;
                }
                let (ylo_j, yhi_j) = exts[j];
                if ylo_j > yhi_i || yhi_j < ylo_i {
                    continue;
                }
                events.extend(piece_crossings(pi, ci, pj, &curves[pj.curve as usize]));
            }
        }

        // Slab boundaries: dedup abscissas, gather ordinates per boundary.
        events.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut xs: Vec<f64> = Vec::new();
        let mut border_ys: Vec<Vec<f64>> = Vec::new();
        for (x, y) in events {
            let is_new = match xs.last() {
                Some(&px) => x - px > 1e-9 * (1.0 + x.abs()),
                None => true,
            };
            if is_new {
                xs.push(x);
                border_ys.push(vec![y]);
            } else {
                border_ys.last_mut().unwrap().push(y);
            }
        }

        // Active piece lists per slab, ordered at the slab midpoint.
        let nslabs = xs.len() + 1;
        let mut slabs: Vec<Vec<u32>> = vec![Vec::new(); nslabs];
        if !xs.is_empty() {
            for (i, p) in pieces.iter().enumerate() {
                let tl = 1e-9 * (1.0 + p.xmin.abs());
                let th = 1e-9 * (1.0 + p.xmax.abs());
                let s0 = xs.partition_point(|&x| x <= p.xmin + tl);
                let s1 = xs.partition_point(|&x| x < p.xmax - th);
                for slab in slabs.iter_mut().take(s1 + 1).skip(s0) {
                    slab.push(i as u32);
                }
            }
        }
        for (s, slab) in slabs.iter_mut().enumerate() {
            if slab.is_empty() {
                continue;
            }
            let lo = if s == 0 { f64::NEG_INFINITY } else { xs[s - 1] };
            let hi = if s == xs.len() { f64::INFINITY } else { xs[s] };
            let xm = if lo.is_finite() && hi.is_finite() {
                0.5 * (lo + hi)
            } else if lo.is_finite() {
                lo + 1.0
            } else if hi.is_finite() {
                hi - 1.0
            } else {
                0.0
            };
            slab.sort_by(|&a, &b| {
                let pa = &pieces[a as usize];
                let pb = &pieces[b as usize];
                let ya = pa.y_at_x(&curves[pa.curve as usize], xm);
                let yb = pb.y_at_x(&curves[pb.curve as usize], xm);
                ya.partial_cmp(&yb).unwrap().then(a.cmp(&b))
            });
        }

        // Union-find over (slab, gap) pairs across borders without a
        // separating event.
        let mut gap_offset = vec![0usize; nslabs + 1];
        for s in 0..nslabs {
            gap_offset[s + 1] = gap_offset[s] + slabs[s].len() + 1;
        }
        let total2d = gap_offset[nslabs];
        let mut parent: Vec<u32> = (0..total2d as u32).collect();
        fn find(parent: &mut [u32], mut a: u32) -> u32 {
            while parent[a as usize] != a {
                parent[a as usize] = parent[parent[a as usize] as usize];
                a = parent[a as usize];
            }
            a
        }
        let eval_border = |slab: &[u32], x: f64, pieces: &[MonoPiece], curves: &[ProjCurve]| -> Vec<f64> {
            let mut v: Vec<f64> = slab
                .iter()
                .map(|&i| {
                    let p = &pieces[i as usize];
                    p.y_at_x(&curves[p.curve as usize], x)
                })
                .collect();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v
        };
        for (b, &xb) in xs.iter().enumerate() {
            let left = b;
            let right = b + 1;
            let ly = eval_border(&slabs[left], xb, &pieces, &curves);
            let ry = eval_border(&slabs[right], xb, &pieces, &curves);
            let evs = &border_ys[b];
            let gap_iv = |v: &Vec<f64>, g: usize| -> (f64, f64) {
                let lo = if g == 0 { f64::NEG_INFINITY } else { v[g - 1] };
                let hi = if g == v.len() { f64::INFINITY } else { v[g] };
                (lo, hi)
            };
            for gl in 0..=ly.len() {
                let (llo, lhi) = gap_iv(&ly, gl);
                for gr in 0..=ry.len() {
                    let (rlo, rhi) = gap_iv(&ry, gr);
                    let lo = llo.max(rlo);
                    let hi = lhi.min(rhi);
                    if !(lo < hi) {
                        continue;
                    }
                    let blocked = evs.iter().any(|&ey| ey >= lo - 1e-12 && ey <= hi + 1e-12);
                    if blocked {
                        continue;
                    }
                    let a = (gap_offset[left] + gl) as u32;
                    let c = (gap_offset[right] + gr) as u32;
                    let ra = find(&mut parent, a);
                    let rc = find(&mut parent, c);
                    if ra != rc {
                        parent[ra as usize] = rc;
                    }
                }
            }
        }
        let mut canon2d: Vec<u32> = vec![0; total2d];
        let mut canon_map: HashMap<u32, u32> = HashMap::new();
        for i in 0..total2d as u32 {
            let r = find(&mut parent, i);
            let next = canon_map.len() as u32;
            let id = *canon_map.entry(r).or_insert(next);
            canon2d[i as usize] = id;
        }
        let n2d = canon_map.len();

        // Domain box: every ball fattened by 1, or a unit box when empty.
        let mut dlo = Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut dhi = Vec3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for b in balls.iter().chain(enclose.iter()) {
            let r = b.radius + 1.0;
            dlo.x = dlo.x.min(b.center.x - r);
            dlo.y = dlo.y.min(b.center.y - r);
            dlo.z = dlo.z.min(b.center.z - r);
            dhi.x = dhi.x.max(b.center.x + r);
            dhi.y = dhi.y.max(b.center.y + r);
            dhi.z = dhi.z.max(b.center.z + r);
        }
        if balls.is_empty() && enclose.is_empty() {
            dlo = Vec3::new(-1.0, -1.0, -1.0);
            dhi = Vec3::new(1.0, 1.0, 1.0);
        }

        let mut vd = OverlayVd {
            mode,
            balls: balls.to_vec(),
            boundary,
            curves,
            pieces,
            xs,
            slabs,
            gap_offset,
            canon2d,
            cell_ids: HashMap::new(),
            cells: Vec::new(),
            domain_lo: dlo,
            domain_hi: dhi,
        };
        vd.assemble_cells(n2d);
        vd
    }

    /// Representative (x, y) and per-trapezoid metadata, then one cell per
    /// z-rank of the representative column.
    fn assemble_cells(&mut self, n2d: usize) {
        // Collect, per canonical trapezoid, its member (slab, gap) pairs.
        let mut members: Vec<Vec<(u32, u32)>> = vec![Vec::new(); n2d];
        for s in 0..self.slabs.len() {
            for g in 0..=self.slabs[s].len() {
                let flat = self.gap_offset[s] + g;
                members[self.canon2d[flat] as usize].push((s as u32, g as u32));
            }
        }
        for (t, mem) in members.iter().enumerate() {
            let (rep_x, rep_y) = self.rep_point_2d(mem);
            // 2D bbox of the trapezoid.
            let (mut xlo, mut xhi) = (f64::INFINITY, f64::NEG_INFINITY);
            let (mut ylo, mut yhi) = (f64::INFINITY, f64::NEG_INFINITY);
            let mut side_balls: Vec<usize> = Vec::new();
            for &(s, g) in mem {
                let s = s as usize;
                let g = g as usize;
                let slo = if s == 0 { self.domain_lo.x } else { self.xs[s - 1] };
                let shi = if s == self.xs.len() { self.domain_hi.x } else { self.xs[s] };
                xlo = xlo.min(slo);
                xhi = xhi.max(shi);
                let active = &self.slabs[s];
                if g == 0 {
                    ylo = self.domain_lo.y;
                } else {
                    let p = &self.pieces[active[g - 1] as usize];
                    let c = &self.curves[p.curve as usize];
                    let (e0, _) = p.y_extent(c, slo.max(p.xmin), shi.min(p.xmax));
                    ylo = ylo.min(e0);
                    side_balls.extend(c.source_balls.iter().copied());
                }
                if g == active.len() {
                    yhi = self.domain_hi.y;
                } else {
                    let p = &self.pieces[active[g] as usize];
                    let c = &self.curves[p.curve as usize];
                    let (_, e1) = p.y_extent(c, slo.max(p.xmin), shi.min(p.xmax));
                    yhi = yhi.max(e1);
                    side_balls.extend(c.source_balls.iter().copied());
                }
            }
            side_balls.sort_unstable();
            side_balls.dedup();

            match self.mode {
                VdMode::Complement => {
                    // Complement floors are upper caps; ceilings lower caps.
                    let blocks = column_blocks(&self.balls, rep_x, rep_y);
                    let ngaps = blocks.len() + 1;
                    for k in 0..ngaps {
                        let (zlo, floor) = if k == 0 {
                            (self.domain_lo.z, None)
                        } else {
                            (blocks[k - 1].1, Some((blocks[k - 1].3, true)))
                        };
                        let (zhi, ceil) = if k == blocks.len() {
                            (self.domain_hi.z, None)
                        } else {
                            (blocks[k].0, Some((blocks[k].2, false)))
                        };
                        self.push_cell(
                            t as u32,
                            k as u32,
                            rep_x,
                            rep_y,
                            zlo,
                            zhi,
                            floor,
                            ceil,
                            (xlo, xhi, ylo, yhi),
                            &side_balls,
                        );
                    }
                }
                VdMode::FullArrangement => {
                    let caps = column_caps(&self.balls, rep_x, rep_y);
                    let nlayers = caps.len() + 1;
                    for k in 0..nlayers {
                        let (zlo, floor) = if k == 0 {
                            (self.domain_lo.z, None)
                        } else {
                            (caps[k - 1].0, Some((caps[k - 1].1, caps[k - 1].2)))
                        };
                        let (zhi, ceil) = if k == caps.len() {
                            (self.domain_hi.z, None)
                        } else {
                            (caps[k].0, Some((caps[k].1, caps[k].2)))
                        };
                        self.push_cell(
                            t as u32,
                            k as u32,
                            rep_x,
                            rep_y,
                            zlo,
                            zhi,
                            floor,
                            ceil,
                            (xlo, xhi, ylo, yhi),
                            &side_balls,
                        );
                    }
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn push_cell(
        &mut self,
        trap: u32,
        k: u32,
        rep_x: f64,
        rep_y: f64,
        zlo: f64,
        zhi: f64,
        floor: Option<(usize, bool)>,
        ceil: Option<(usize, bool)>,
        bbox2d: (f64, f64, f64, f64),
        side_balls: &[usize],
    ) {
        let (xlo, xhi, ylo, yhi) = bbox2d;
        // Certified z-range of the cell: cap height is monotone in the
        // horizontal distance to the ball axis, so its extreme over the 2D
        // bbox is attained at the nearest or farthest rectangle point.
        let rho_range = |b: &Ball| -> (f64, f64) {
            let cx = b.center.x.clamp(xlo, xhi);
            let cy = b.center.y.clamp(ylo, yhi);
            let dmin = (cx - b.center.x).hypot(cy - b.center.y);
            let fx = (b.center.x - xlo).abs().max((b.center.x - xhi).abs());
            let fy = (b.center.y - ylo).abs().max((b.center.y - yhi).abs());
            (dmin, fx.hypot(fy))
        };
        let cap_bounds = |i: usize, upper: bool| -> (f64, f64) {
            let b = &self.balls[i];
            let (rmin, rmax) = rho_range(b);
            let s_near = (b.radius * b.radius - rmin * rmin).max(0.0).sqrt();
            let s_far = (b.radius * b.radius - rmax * rmax).max(0.0).sqrt();
            if upper {
                (b.center.z + s_far, b.center.z + s_near)
            } else {
                (b.center.z - s_near, b.center.z - s_far)
            }
        };
        let zmin = match floor {
            Some((i, upper)) => cap_bounds(i, upper).0.max(self.domain_lo.z),
            None => self.domain_lo.z,
        };
        let zmax = match ceil {
            Some((i, upper)) => cap_bounds(i, upper).1.min(self.domain_hi.z),
            None => self.domain_hi.z,
        };
        let floor_ball = floor.map(|(i, _)| i);
        let ceil_ball = ceil.map(|(i, _)| i);
        let rep_z = if zlo.is_finite() && zhi.is_finite() {
            0.5 * (zlo + zhi)
        } else if zlo.is_finite() {
            zlo + 1.0
        } else if zhi.is_finite() {
            zhi - 1.0
        } else {
            0.0
        };
        let mut defining = side_balls.to_vec();
        defining.extend(floor_ball.iter().copied());
        defining.extend(ceil_ball.iter().copied());
        defining.sort_unstable();
        defining.dedup();
        let idx = self.cells.len() as u32;
        self.cell_ids.insert((trap, k), idx);
        self.cells.push(PrismCell {
            rep: Vec3::new(rep_x, rep_y, rep_z),
            bbox_lo: Vec3::new(xlo, ylo, zmin),
            bbox_hi: Vec3::new(xhi, yhi, zmax),
            floor_ball,
            ceil_ball,
            defining,
        });
    }

    /// Representative 2D point of a trapezoid: midpoint of its first
    /// member gap at that member slab's midpoint.
    fn rep_point_2d(&self, members: &[(u32, u32)]) -> (f64, f64) {
        let (s, g) = members[0];
        let s = s as usize;
        let g = g as usize;
        let lo = if s == 0 { f64::NEG_INFINITY } else { self.xs[s - 1] };
        let hi = if s == self.xs.len() { f64::INFINITY } else { self.xs[s] };
        let xm = if lo.is_finite() && hi.is_finite() {
            0.5 * (lo + hi)
        } else if lo.is_finite() {
            lo + 1.0
        } else if hi.is_finite() {
            hi - 1.0
        } else {
            0.0
        };
        let active = &self.slabs[s];
        let yv = |idx: usize| -> f64 {
            let p = &self.pieces[active[idx] as usize];
            p.y_at_x(&self.curves[p.curve as usize], xm)
        };
        let ym = if active.is_empty() {
            0.0
        } else if g == 0 {
            yv(0) - 1.0
        } else if g == active.len() {
            yv(active.len() - 1) + 1.0
        } else {
            0.5 * (yv(g - 1) + yv(g))
        };
        (xm, ym)
    }

    /// Exact point location. Points on cell boundaries (a measure-zero
    /// set) resolve to an adjacent cell.
    pub fn locate(&self, p: Vec3) -> Located {
        let s = self.xs.partition_point(|&x| x < p.x);
        let active = &self.slabs[s];
        let mut g = 0usize;
        for &pi in active {
            let piece = &self.pieces[pi as usize];
            let c = &self.curves[piece.curve as usize];
            let x = p.x.clamp(piece.xmin, piece.xmax);
            if piece.y_at_x(c, x) < p.y {
                g += 1;
            }
        }
        let trap = self.canon2d[self.gap_offset[s] + g];
        match self.mode {
            VdMode::Complement => {
                if let Some(i) = self.balls.iter().position(|b| b.contains(p)) {
                    return Located::InsideBall(i);
                }
                let blocks = column_blocks(&self.balls, p.x, p.y);
                let k = blocks.partition_point(|b| b.1 < p.z);
                match self.cell_ids.get(&(trap, k as u32)) {
                    Some(&i) => Located::Cell(i as usize),
                    None => Located::Cell(usize::MAX),
                }
            }
            VdMode::FullArrangement => {
                let caps = column_caps(&self.balls, p.x, p.y);
                let k = caps.partition_point(|c| c.0 < p.z);
                match self.cell_ids.get(&(trap, k as u32)) {
                    Some(&i) => Located::Cell(i as usize),
                    None => Located::Cell(usize::MAX),
                }
            }
        }
    }

    /// Balls meeting the cell's certified bounding box: a superset of the
    /// balls actually crossing the cell.
    pub fn conflicts_against(&self, cell: usize, others: &[Ball]) -> Vec<usize> {
        let c = &self.cells[cell];
        others
            .iter()
            .enumerate()
            .filter(|(_, b)| b.meets_box(c.bbox_lo, c.bbox_hi))
            .map(|(i, _)| i)
            .collect()
    }

    /// Ordered (floor ball, ceiling ball) pairs over all complement cells:
    /// each means the floor ball's top surface sees the ceiling ball's
    /// bottom surface along some vertical segment.
    pub fn visibility_pairs(&self) -> Vec<(usize, usize)> {
        let mut v: Vec<(usize, usize)> = self
            .cells
            .iter()
            .filter_map(|c| match (c.floor_ball, c.ceil_ball) {
                (Some(a), Some(b)) => Some((a, b)),
                _ => None,
            })
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn counts(&self) -> VdCounts {
        VdCounts {
            prisms: self.cells.len(),
            base_cells: {
                let mut ids: Vec<u32> = self.canon2d.clone();
                ids.sort_unstable();
                ids.dedup();
                ids.len()
            },
            union_vertices: self.boundary.vertex_count,
            union_arcs: self.boundary.pair_arcs.len(),
            union_faces: self.boundary.face_count,
            crossing_pairs: self.boundary.crossing_pairs,
            visibility_pairs: self.visibility_pairs().len(),
        }
    }
}
