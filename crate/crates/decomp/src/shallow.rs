//! Shallow-cell extraction in the four-dimensional space of spheres.
//!
//! Each line induces the surface `w = dist(center, line)` over sphere
//! centers `(x, y, z)`; a sphere-point `(center, w)` has depth equal to
//! the number of surfaces strictly below it. The structure covers every
//! in-domain sphere-point of depth at most `n/r` with boxy cells, each
//! crossed by at most `n/r` surfaces of the full family.
//!
//! Cells are octree boxes crossed with the levels of the sample
//! arrangement: the level-`j` cell over a box holds the sphere-points
//! with exactly `j` sample surfaces strictly below, so sample surfaces
//! bound cells and never cross them, and membership is an exact rank
//! count. Crossing and depth tests bracket each surface's exact value
//! range over the box: the range minimum solves the line-to-box distance
//! (piecewise-quadratic in the line parameter) and the maximum sits at a
//! box corner by convexity. The brackets are conservative on fat boxes
//! and sharpen to the truth as refinement shrinks them.

use prismatica_core::rng::rng_for;
use prismatica_core::{GeomError, Line3, Vec3};
use rand::seq::SliceRandom;

/// Distance-to-line surface over sphere centers.
#[derive(Debug, Clone)]
pub struct OmegaSurface {
    pub line: Line3,
}

impl OmegaSurface {
    pub fn value(&self, center: Vec3) -> f64 {
        self.line.dist_point(center)
    }

    /// Exact value range over an axis box.
    pub fn range_over_box(&self, lo: Vec3, hi: Vec3) -> (f64, f64) {
        let mn = min_dist_line_box(&self.line, lo, hi);
        let corners = box_corners(lo, hi);
        let mx = corners.iter().map(|&c| self.value(c)).fold(0.0, f64::max);
        (mn, mx)
    }
}

fn box_corners(lo: Vec3, hi: Vec3) -> [Vec3; 8] {
    [
        Vec3::new(lo.x, lo.y, lo.z),
        Vec3::new(hi.x, lo.y, lo.z),
        Vec3::new(lo.x, hi.y, lo.z),
        Vec3::new(hi.x, hi.y, lo.z),
        Vec3::new(lo.x, lo.y, hi.z),
        Vec3::new(hi.x, lo.y, hi.z),
        Vec3::new(lo.x, hi.y, hi.z),
        Vec3::new(hi.x, hi.y, hi.z),
    ]
}

fn clamp_to_box(p: Vec3, lo: Vec3, hi: Vec3) -> Vec3 {
    Vec3::new(p.x.clamp(lo.x, hi.x), p.y.clamp(lo.y, hi.y), p.z.clamp(lo.z, hi.z))
}

/// Exact distance from a full line to an axis box. The squared distance
/// from the moving point `anchor + t dir` to the box is convex piecewise
/// quadratic in `t` with breakpoints where a coordinate crosses a box
/// wall, so the minimum is at a breakpoint or at a segment's interior
/// vertex.
fn min_dist_line_box(line: &Line3, lo: Vec3, hi: Vec3) -> f64 {
    let a = [line.anchor.x, line.anchor.y, line.anchor.z];
    let d = [line.dir.x, line.dir.y, line.dir.z];
    let bl = [lo.x, lo.y, lo.z];
    let bh = [hi.x, hi.y, hi.z];
    let mut ts: Vec<f64> = Vec::with_capacity(8);
    for k in 0..3 {
        if d[k] != 0.0 {
            ts.push((bl[k] - a[k]) / d[k]);
            ts.push((bh[k] - a[k]) / d[k]);
        }
    }
    ts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    ts.dedup();
    let eval = |t: f64| {
        let p = line.point_at(t);
        (p - clamp_to_box(p, lo, hi)).norm()
    };
    let mut cand: Vec<f64> = ts.clone();
    // Interior vertex of each segment's quadratic, taken from the active
    // clamp pattern at the segment midpoint.
    let mut seg_reps: Vec<f64> = Vec::with_capacity(ts.len() + 1);
    if ts.is_empty() {
        seg_reps.push(0.0);
    } else {
        seg_reps.push(ts[0] - 1.0);
        for i in 0..ts.len() - 1 {
            seg_reps.push(0.5 * (ts[i] + ts[i + 1]));
        }
        seg_reps.push(ts[ts.len() - 1] + 1.0);
    }
    for (si, &tm) in seg_reps.iter().enumerate() {
        let p = line.point_at(tm);
        let mut qa = 0.0;
        let mut qb = 0.0;
        let mut free = true;
        for k in 0..3 {
            let pk = a[k] + tm * d[k];
            let bound = if pk < bl[k] {
                bl[k]
            } else if pk > bh[k] {
                bh[k]
            } else {
                continue;
            };
            free = false;
            qa += d[k] * d[k];
            qb += 2.0 * (a[k] - bound) * d[k];
        }
        if free {
            // The moving point is inside the box's coordinate slabs; the
            // line meets the box.
            let _ = p;
            return 0.0;
        }
        if qa > 0.0 {
            let t_star = -qb / (2.0 * qa);
            let (s_lo, s_hi) = if ts.is_empty() {
                (f64::NEG_INFINITY, f64::INFINITY)
            } else if si == 0 {
                (f64::NEG_INFINITY, ts[0])
            } else if si == ts.len() {
                (ts[ts.len() - 1], f64::INFINITY)
            } else {
                (ts[si - 1], ts[si])
            };
            if t_star > s_lo && t_star < s_hi {
                cand.push(t_star);
            }
        }
    }
    cand.iter().map(|&t| eval(t)).fold(f64::INFINITY, f64::min)
}

/// One shallow cell: the sphere-points over an octree box with exactly
/// `level` sample surfaces strictly below.
#[derive(Debug, Clone)]
pub struct ShallowCell {
    pub lo: Vec3,
    pub hi: Vec3,
    pub level: usize,
    /// Full-family surfaces that may pass through the cell's interior.
    pub crossing: Vec<usize>,
    /// Full-family surfaces certainly passing entirely below the cell.
    pub below: usize,
}

#[derive(Debug, Clone)]
pub struct ShallowCellSet {
    pub cells: Vec<ShallowCell>,
    /// Depth and crossing threshold `ceil(n / r)`.
    pub threshold: usize,
    pub sample: Vec<usize>,
    sample_lines: Vec<Line3>,
    pub attempts: usize,
    pub domain_lo: Vec3,
    pub domain_hi: Vec3,
}

impl ShallowCellSet {
    /// Exact membership: half-open box test plus the rank of `w` among the
    /// sample surface values at `center`, so in-domain points land in at
    /// most one cell.
    pub fn cell_contains(&self, idx: usize, center: Vec3, w: f64) -> bool {
        let cell = &self.cells[idx];
        center.x >= cell.lo.x
            && center.x < cell.hi.x
            && center.y >= cell.lo.y
            && center.y < cell.hi.y
            && center.z >= cell.lo.z
            && center.z < cell.hi.z
            && self.sample_level(center, w) == cell.level
    }

    /// Sample surfaces strictly below the sphere-point.
    pub fn sample_level(&self, center: Vec3, w: f64) -> usize {
        self.sample_lines.iter().filter(|l| l.dist_point(center) < w).count()
    }

    /// The unique containing cell of an in-domain sphere-point, if it is
    /// shallow enough to be covered.
    pub fn locate(&self, center: Vec3, w: f64) -> Option<usize> {
        (0..self.cells.len()).find(|&i| self.cell_contains(i, center, w))
    }
}

const MAX_ATTEMPTS: usize = 20;
const MAX_BOXES: usize = 150_000;
const DEPTH_CAP: usize = 12;

/// Sample size `min(n, ceil(3 r log2 r))`, matching the cutting sampler.
pub fn shallow_sample_size(n: usize, r: usize) -> usize {
    let lg = (r.max(2) as f64).log2();
    n.min((3.0 * r as f64 * lg).ceil() as usize)
}

/// Covers the at-most-`n/r`-deep part of sphere space over the lines'
/// natural domain with cells crossed by at most `n/r` surfaces.
pub fn shallow_cells(lines: &[Line3], r: usize, seed: u64) -> Result<ShallowCellSet, GeomError> {
    let n = lines.len();
    let k = n.div_ceil(r);
    let surfaces: Vec<OmegaSurface> = lines.iter().map(|l| OmegaSurface { line: l.clone() }).collect();
    let (domain_lo, domain_hi) = domain_box(lines);
    let s = shallow_sample_size(n, r);
    let mut rng = rng_for(seed, 101);
    let mut ids: Vec<usize> = (0..n).collect();
    for attempt in 0..MAX_ATTEMPTS {
        ids.shuffle(&mut rng);
        let sample: Vec<usize> = ids[..s].to_vec();
        if let Some(cells) = try_build(&surfaces, &sample, k, domain_lo, domain_hi) {
            let sample_lines = sample.iter().map(|&i| lines[i].clone()).collect();
            return Ok(ShallowCellSet {
                cells,
                threshold: k,
                sample,
                sample_lines,
                attempts: attempt + 1,
                domain_lo,
                domain_hi,
            });
        }
    }
    Err(GeomError::CuttingFailure { attempts: MAX_ATTEMPTS })
}

fn domain_box(lines: &[Line3]) -> (Vec3, Vec3) {
    let mut lo = Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut hi = Vec3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for l in lines {
        for p in [l.anchor, l.point_at(1.0), l.point_at(-1.0)] {
            lo = Vec3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
            hi = Vec3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
        }
    }
    let diag = (hi - lo).norm().max(1.0);
    let pad = 0.25 * diag + 0.5;
    (
        Vec3::new(lo.x - pad, lo.y - pad, lo.z - pad),
        Vec3::new(hi.x + pad, hi.y + pad, hi.z + pad),
    )
}

/// Position of `x` after all strictly smaller entries of ascending `v`.
fn count_below(v: &[f64], x: f64) -> usize {
    v.partition_point(|&e| e < x)
}

fn try_build(
    surfaces: &[OmegaSurface],
    sample: &[usize],
    k: usize,
    domain_lo: Vec3,
    domain_hi: Vec3,
) -> Option<Vec<ShallowCell>> {
    let n = surfaces.len();
    let s = sample.len();
    let mut in_sample = vec![false; n];
    for &i in sample {
        in_sample[i] = true;
    }
    let mut cells = Vec::new();
    let mut stack = vec![(domain_lo, domain_hi, 0usize)];
    let mut boxes = 0usize;
    while let Some((lo, hi, depth)) = stack.pop() {
        boxes += 1;
        if boxes > MAX_BOXES {
            return None;
        }
        let ranges: Vec<(f64, f64)> = surfaces.iter().map(|s| s.range_over_box(lo, hi)).collect();
        let mut smn: Vec<f64> = sample.iter().map(|&i| ranges[i].0).collect();
        let mut smx: Vec<f64> = sample.iter().map(|&i| ranges[i].1).collect();
        smn.sort_by(|p, q| p.partial_cmp(q).unwrap());
        smx.sort_by(|p, q| p.partial_cmp(q).unwrap());
        // Pointwise rank brackets among the sample. A surface can only pass
        // through level-j interiors for j between its brackets; sample
        // surfaces coincide with a level boundary and never cross.
        let rank_brackets: Vec<(usize, usize)> = ranges
            .iter()
            .map(|&(mn, mx)| (count_below(&smx, mn), count_below(&smn, mx)))
            .collect();
        let mut kept: Vec<ShallowCell> = Vec::new();
        let mut needs_split = false;
        for level in 0..=s {
            // Sound floor and ceiling brackets for the level's boundary
            // values anywhere over the box.
            let floor_lb = if level == 0 { 0.0 } else { smn[level - 1] };
            let ceil_ub = if level == s { f64::INFINITY } else { smx[level] };
            let below = ranges.iter().filter(|&&(_, mx)| mx <= floor_lb).count();
            if below > k {
                // Every point of the cell has over k surfaces below; deeper
                // levels only more so.
                break;
            }
            let crossing: Vec<usize> = (0..n)
                .filter(|&i| {
                    !in_sample[i]
                        && rank_brackets[i].0 <= level
                        && level <= rank_brackets[i].1
                        && ranges[i].0 < ceil_ub
                        && ranges[i].1 > floor_lb
                })
                .collect();
            if crossing.len() > k {
                if depth < DEPTH_CAP {
                    needs_split = true;
                    break;
                }
                // Contract violation that refinement can no longer fix.
                return None;
            }
            kept.push(ShallowCell { lo, hi, level, crossing, below });
        }
        if needs_split {
            let mid = (lo + hi) * 0.5;
            for cx in 0..2 {
                for cy in 0..2 {
                    for cz in 0..2 {
                        let clo = Vec3::new(
                            if cx == 0 { lo.x } else { mid.x },
                            if cy == 0 { lo.y } else { mid.y },
                            if cz == 0 { lo.z } else { mid.z },
                        );
                        let chi = Vec3::new(
                            if cx == 0 { mid.x } else { hi.x },
                            if cy == 0 { mid.y } else { hi.y },
                            if cz == 0 { mid.z } else { hi.z },
                        );
                        stack.push((clo, chi, depth + 1));
                    }
                }
            }
        } else {
            cells.extend(kept);
        }
    }
    Some(cells)
}

/// Depth of a sphere-point: surfaces passing strictly below it.
pub fn sphere_point_depth(lines: &[Line3], center: Vec3, w: f64) -> usize {
    lines.iter().filter(|l| l.dist_point(center) < w).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_lines(n: usize, seed: u64) -> Vec<Line3> {
        let mut rng = rng_for(seed, 55);
        (0..n)
            .map(|_| {
                Line3::new(
                    Vec3::new(
                        rng.gen_range(-2.0..2.0),
                        rng.gen_range(-2.0..2.0),
                        rng.gen_range(-2.0..2.0),
                    ),
                    Vec3::new(
                        1.0,
                        rng.gen_range(-0.8..0.8),
                        rng.gen_range(-0.8..0.8),
                    ),
                )
            })
            .collect()
    }

    #[test]
    fn line_box_distance_matches_dense_scan() {
        let mut rng = rng_for(132, 4);
        for _ in 0..60 {
            let l = Line3::new(
                Vec3::new(
                    rng.gen_range(-3.0..3.0),
                    rng.gen_range(-3.0..3.0),
                    rng.gen_range(-3.0..3.0),
                ),
                Vec3::new(
                    rng.gen_range(0.2..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ),
            );
            let lo = Vec3::new(
                rng.gen_range(-2.0..0.0),
                rng.gen_range(-2.0..0.0),
                rng.gen_range(-2.0..0.0),
            );
            let hi = lo + Vec3::new(
                rng.gen_range(0.3..2.0),
                rng.gen_range(0.3..2.0),
                rng.gen_range(0.3..2.0),
            );
            let exact = min_dist_line_box(&l, lo, hi);
            let mut scan = f64::INFINITY;
            for i in 0..4000 {
                let t = -20.0 + 40.0 * (i as f64) / 4000.0;
                let p = l.point_at(t);
                scan = scan.min((p - clamp_to_box(p, lo, hi)).norm());
            }
            assert!(exact <= scan + 1e-9, "exact {exact} scan {scan}");
            assert!(scan - exact < 2e-2, "exact {exact} scan {scan}");
        }
    }

    #[test]
    fn tiny_family_contract_holds() {
        let lines = random_lines(4, 21);
        let set = shallow_cells(&lines, 2, 77).unwrap();
        let k = set.threshold;
        assert_eq!(k, 2);
        for cell in &set.cells {
            assert!(cell.crossing.len() <= k);
            assert!(cell.below <= k);
        }
    }

    #[test]
    fn shallow_points_covered_once() {
        let lines = random_lines(40, 2200);
        let r = 4;
        let set = shallow_cells(&lines, r, 11).unwrap();
        let k = set.threshold;
        let mut rng = rng_for(2201, 8);
        let mut shallow_seen = 0;
        for _ in 0..800 {
            let c = Vec3::new(
                rng.gen_range(set.domain_lo.x..set.domain_hi.x),
                rng.gen_range(set.domain_lo.y..set.domain_hi.y),
                rng.gen_range(set.domain_lo.z..set.domain_hi.z),
            );
            let w = rng.gen_range(0.0..3.0);
            let depth = sphere_point_depth(&lines, c, w);
            let hits = (0..set.cells.len()).filter(|&i| set.cell_contains(i, c, w)).count();
            if depth <= k {
                assert_eq!(hits, 1, "depth {depth} point covered {hits} times");
                shallow_seen += 1;
            } else {
                assert!(hits <= 1, "depth {depth} point covered {hits} times");
            }
        }
        assert!(shallow_seen > 50);
    }

    #[test]
    fn crossing_lists_contain_sampled_crossers() {
        let lines = random_lines(30, 990);
        let set = shallow_cells(&lines, 3, 5).unwrap();
        let s = set.sample.len();
        let mut rng = rng_for(991, 2);
        for cell in set.cells.iter().step_by(11) {
            // A surface value observed strictly between the cell's bounding
            // sample values at an interior center witnesses a crossing.
            for _ in 0..50 {
                let c = Vec3::new(
                    rng.gen_range(cell.lo.x..cell.hi.x),
                    rng.gen_range(cell.lo.y..cell.hi.y),
                    rng.gen_range(cell.lo.z..cell.hi.z),
                );
                let mut vals: Vec<f64> =
                    set.sample.iter().map(|&i| lines[i].dist_point(c)).collect();
                vals.sort_by(|p, q| p.partial_cmp(q).unwrap());
                let floor = if cell.level == 0 { 0.0 } else { vals[cell.level - 1] };
                let ceil = if cell.level == s { f64::INFINITY } else { vals[cell.level] };
                for (i, l) in lines.iter().enumerate() {
                    if set.sample.contains(&i) {
                        continue;
                    }
                    let v = l.dist_point(c);
                    if v > floor && v < ceil {
                        assert!(
                            cell.crossing.contains(&i),
                            "surface {i} seen inside cell but not listed"
                        );
                    }
                }
            }
        }
    }
}
