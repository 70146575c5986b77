//! Random (1/r)-cuttings with verified conflict lists.
//!
//! A cutting covers its target region with openly disjoint cells so that
//! at most `n/r` of the `n` input objects cross any one cell. The target
//! is either the complement of a union of balls, the region below the
//! lower envelope of a surface family, or all of space. Construction
//! draws a sample of `O(r log r)` objects, decomposes the sample,
//! computes per-cell conflict lists against the full family, and redraws
//! the sample while any list exceeds the bound; a fresh sample succeeds
//! with constant probability, so attempts stay small.

use crate::ball::Ball;
use crate::envelope::{
    minimization_diagram_vd_with, ColumnLinear, MdParams, MinimizationDiagramVd, Orientation,
    Trivariate,
};
use crate::overlay::{Located, OverlayVd, VdMode};
use prismatica_core::rng::rng_for;
use prismatica_core::{GeomError, Vec3};
use rand::seq::SliceRandom;

const MAX_ATTEMPTS: usize = 20;
/// Depth and leaf budget for conflict-driven refinement of envelope
/// diagrams; deeper than the build caps since splits happen only where a
/// list overflows.
const REFINE_DEPTH: usize = 14;
const REFINE_LEAVES: usize = 60_000;

/// Region kinds a cutting can target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CuttingVariant {
    /// Complement of the union of the sampled balls.
    ComplementOfUnion,
    /// Region below the lower envelope of the sampled surfaces.
    BelowEnvelope,
    /// All of space.
    FullArrangement,
}

/// Ball-cutting sample size `min(n, ceil(3 r log2 r))`.
pub fn cutting_sample_size(n: usize, r: usize) -> usize {
    let lg = (r.max(2) as f64).log2();
    n.min((3.0 * r as f64 * lg).ceil() as usize)
}

/// Envelope-cutting sample size `min(n, ceil(6 r log2 r))`: quadtree
/// cells over an envelope need the larger constant to push worst-case
/// conflict lists under `n/r` at small `r`.
pub fn envelope_sample_size(n: usize, r: usize) -> usize {
    let lg = (r.max(2) as f64).log2();
    n.min((6.0 * r as f64 * lg).ceil() as usize)
}

/// Largest admissible conflict-list size for `n` objects at parameter `r`.
pub fn conflict_bound(n: usize, r: usize) -> usize {
    (n as f64 / r as f64).floor() as usize
}

/// Cutting over a family of balls (complement or full-arrangement target).
pub struct BallCutting {
    pub variant: CuttingVariant,
    pub vd: OverlayVd,
    /// Full-family indices of the sampled balls, in `vd.balls` order.
    pub sample: Vec<usize>,
    /// Per cell: full-family balls whose boundary may cross it. Sampled
    /// balls bound cells and are never listed.
    pub conflicts: Vec<Vec<usize>>,
    /// Per cell: full-family balls containing the whole cell.
    pub containing: Vec<Vec<usize>>,
    pub r: usize,
    pub max_list: usize,
    pub attempts: usize,
}

impl BallCutting {
    pub fn locate(&self, p: Vec3) -> Located {
        self.vd.locate(p)
    }
}

fn ball_contains_box(b: &Ball, lo: Vec3, hi: Vec3) -> bool {
    for cx in [lo.x, hi.x] {
        for cy in [lo.y, hi.y] {
            for cz in [lo.z, hi.z] {
                if !b.contains_strict(Vec3::new(cx, cy, cz)) {
                    return false;
                }
            }
        }
    }
    true
}

/// Builds a ball cutting; `variant` must be `ComplementOfUnion` or
/// `FullArrangement`.
pub fn ball_cutting(
    balls: &[Ball],
    r: usize,
    variant: CuttingVariant,
    seed: u64,
) -> Result<BallCutting, GeomError> {
    assert!(r >= 2 && !balls.is_empty());
    let mode = match variant {
        CuttingVariant::ComplementOfUnion => VdMode::Complement,
        CuttingVariant::FullArrangement => VdMode::FullArrangement,
        CuttingVariant::BelowEnvelope => {
            panic!("below-envelope cuttings take a surface family, not balls")
        }
    };
    let n = balls.len();
    let s = cutting_sample_size(n, r);
    let max_list = conflict_bound(n, r);
    let mut rng = rng_for(seed, 113);
    let mut ids: Vec<usize> = (0..n).collect();
    for attempt in 1..=MAX_ATTEMPTS {
        ids.shuffle(&mut rng);
        let mut sample: Vec<usize> = ids[..s].to_vec();
        sample.sort_unstable();
        let in_sample = {
            let mut f = vec![false; n];
            for &i in &sample {
                f[i] = true;
            }
            f
        };
        let sample_balls: Vec<Ball> = sample.iter().map(|&i| balls[i].clone()).collect();
        let vd = OverlayVd::build_in(&sample_balls, mode, balls);
        let mut conflicts: Vec<Vec<usize>> = Vec::with_capacity(vd.cells.len());
        let mut containing: Vec<Vec<usize>> = Vec::with_capacity(vd.cells.len());
        let mut ok = true;
        for cell in &vd.cells {
            let mut cross = Vec::new();
            let mut cont = Vec::new();
            for (i, b) in balls.iter().enumerate() {
                if !b.meets_box(cell.bbox_lo, cell.bbox_hi) {
                    continue;
                }
                if ball_contains_box(b, cell.bbox_lo, cell.bbox_hi) {
                    cont.push(i);
                } else if !in_sample[i] {
                    cross.push(i);
                }
            }
            if cross.len() > max_list {
                ok = false;
                break;
            }
            conflicts.push(cross);
            containing.push(cont);
        }
        if ok {
            return Ok(BallCutting {
                variant,
                vd,
                sample,
                conflicts,
                containing,
                r,
                max_list,
                attempts: attempt,
            });
        }
    }
    Err(GeomError::CuttingFailure { attempts: MAX_ATTEMPTS })
}

/// Cutting of the region below the lower envelope of a surface family.
pub struct EnvelopeCutting<F: ColumnLinear> {
    pub diagram: MinimizationDiagramVd<F>,
    /// Full-family indices of the sampled surfaces, in diagram order.
    pub sample: Vec<usize>,
    /// Per diagram cell: full-family surfaces dipping below the sample
    /// envelope inside it. Sampled surfaces never dip below their own
    /// envelope and are never listed.
    pub conflicts: Vec<Vec<usize>>,
    pub r: usize,
    pub max_list: usize,
    pub attempts: usize,
}

impl<F: ColumnLinear> EnvelopeCutting<F> {
    /// Containing cell of a below-envelope point `(x, y, z, w)`.
    pub fn locate(&self, pt: [f64; 4]) -> Option<usize> {
        self.diagram.membership(pt)
    }
}

pub fn envelope_cutting<F: ColumnLinear + Trivariate + Clone>(
    family: &[F],
    r: usize,
    seed: u64,
) -> Result<EnvelopeCutting<F>, GeomError> {
    envelope_cutting_with(family, r, seed, MdParams::tight())
}

pub fn envelope_cutting_with<F: ColumnLinear + Trivariate + Clone>(
    family: &[F],
    r: usize,
    seed: u64,
    params: MdParams,
) -> Result<EnvelopeCutting<F>, GeomError> {
    assert!(r >= 2 && !family.is_empty());
    let n = family.len();
    let s = envelope_sample_size(n, r);
    let max_list = conflict_bound(n, r);
    let mut rng = rng_for(seed, 117);
    let mut ids: Vec<usize> = (0..n).collect();
    let mut last_err = GeomError::CuttingFailure { attempts: MAX_ATTEMPTS };
    for attempt in 1..=MAX_ATTEMPTS {
        ids.shuffle(&mut rng);
        let mut sample: Vec<usize> = ids[..s].to_vec();
        sample.sort_unstable();
        let members: Vec<F> = sample.iter().map(|&i| family[i].clone()).collect();
        let mut diagram =
            match minimization_diagram_vd_with(&members, Orientation::Below, params) {
                Ok(d) => d,
                Err(e) => {
                    last_err = e;
                    continue;
                }
            };
        if s == n {
            // Everything is in the sample; nothing can dip below its own
            // envelope.
            let conflicts = vec![Vec::new(); diagram.cells.len()];
            return Ok(EnvelopeCutting { diagram, sample, conflicts, r, max_list, attempts: attempt });
        }
        let in_sample = {
            let mut f = vec![false; n];
            for &i in &sample {
                f[i] = true;
            }
            f
        };
        // Wide signature-stable leaves can be crossed by arbitrarily many
        // surfaces; split exactly the leaves owning over-bound cells until
        // the contract holds or the depth cap exhausts refinement. Lists
        // are probed per leaf and cached by leaf bounds, so each round
        // only pays for the leaves the previous round created.
        let mut cache: std::collections::HashMap<(u64, u64, u64, u64), Vec<Vec<usize>>> =
            std::collections::HashMap::new();
        loop {
            let mut conflicts: Vec<Vec<usize>> = vec![Vec::new(); diagram.cells.len()];
            let mut dirty: Vec<usize> = Vec::new();
            for li in 0..diagram.leaf_count() {
                let key = diagram.leaf_key(li);
                if !cache.contains_key(&key) {
                    cache.insert(key, diagram.leaf_conflicts(li, family));
                }
                let lists = &cache[&key];
                let (cell0, _) = diagram.leaf_span(li);
                let mut over = false;
                for (rank, list) in lists.iter().enumerate() {
                    let filtered: Vec<usize> =
                        list.iter().copied().filter(|&i| !in_sample[i]).collect();
                    if filtered.len() > max_list {
                        over = true;
                    }
                    conflicts[cell0 + rank] = filtered;
                }
                if over {
                    dirty.push(li);
                }
            }
            if dirty.is_empty() {
                for (ci, cell) in diagram.cells.iter_mut().enumerate() {
                    cell.conflicts = conflicts[ci].clone();
                }
                return Ok(EnvelopeCutting {
                    diagram,
                    sample,
                    conflicts,
                    r,
                    max_list,
                    attempts: attempt,
                });
            }
            if diagram.split_leaves_once(&dirty, REFINE_DEPTH, REFINE_LEAVES) == 0 {
                break;
            }
        }
    }
    Err(last_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::{psi_family, PsiMember, SandwichDir};
    use rand::Rng;

    fn random_balls(n: usize, seed: u64, side: f64, rad: (f64, f64)) -> Vec<Ball> {
        let mut rng = rng_for(seed, 31);
        (0..n)
            .map(|_| {
                Ball::new(
                    Vec3::new(
                        rng.gen_range(0.0..side),
                        rng.gen_range(0.0..side),
                        rng.gen_range(0.0..side),
                    ),
                    rng.gen_range(rad.0..rad.1),
                )
            })
            .collect()
    }

    #[test]
    fn two_disjoint_balls_complement() {
        let balls = vec![
            Ball::new(Vec3::new(0.0, 0.0, 0.0), 1.0),
            Ball::new(Vec3::new(6.0, 0.0, 0.0), 1.0),
        ];
        let cut = ball_cutting(&balls, 2, CuttingVariant::ComplementOfUnion, 3).unwrap();
        assert_eq!(cut.attempts, 1);
        assert!(cut.conflicts.iter().all(|l| l.len() <= 1));
        // Complement points resolve to cells.
        for p in [
            Vec3::new(3.0, 0.0, 0.0),
            Vec3::new(-2.0, 1.0, 0.5),
            Vec3::new(6.0, 2.5, 0.0),
        ] {
            match cut.locate(p) {
                Located::Cell(c) => assert!(c < cut.vd.cells.len()),
                Located::InsideBall(_) => panic!("complement point located inside a ball"),
            }
        }
        assert!(matches!(cut.locate(Vec3::new(0.0, 0.0, 0.0)), Located::InsideBall(_)));
    }

    #[test]
    fn ball_cutting_contract_and_coverage() {
        let balls = random_balls(60, 77, 10.0, (0.4, 1.0));
        for variant in [CuttingVariant::ComplementOfUnion, CuttingVariant::FullArrangement] {
            let cut = ball_cutting(&balls, 4, variant, 9).unwrap();
            assert!(cut.conflicts.iter().all(|l| l.len() <= cut.max_list));
            let mut rng = rng_for(78, 5);
            let mut misses = 0usize;
            for _ in 0..2000 {
                let p = Vec3::new(
                    rng.gen_range(0.0..10.0),
                    rng.gen_range(0.0..10.0),
                    rng.gen_range(0.0..10.0),
                );
                match cut.locate(p) {
                    Located::Cell(c) if c < cut.vd.cells.len() => {}
                    Located::Cell(_) => misses += 1,
                    Located::InsideBall(_) => {
                        assert_eq!(variant, CuttingVariant::ComplementOfUnion);
                        assert!(cut
                            .sample
                            .iter()
                            .any(|&i| balls[i].contains(p)));
                    }
                }
            }
            assert_eq!(misses, 0, "{variant:?} left sampled points uncovered");
        }
    }

    #[test]
    fn resample_attempts_stay_small() {
        let balls = random_balls(80, 501, 12.0, (0.4, 1.1));
        let mut total = 0usize;
        for seed in 0..10 {
            let cut = ball_cutting(&balls, 4, CuttingVariant::ComplementOfUnion, seed).unwrap();
            total += cut.attempts;
        }
        assert!(total as f64 / 10.0 <= 2.0, "mean attempts {}", total as f64 / 10.0);

        let mut rng = rng_for(733, 2);
        let mut pts: Vec<Vec3> = (0..41)
            .map(|_| {
                Vec3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                )
            })
            .collect();
        pts[0] = Vec3::ZERO;
        let others: Vec<usize> = (1..pts.len()).collect();
        let family: Vec<PsiMember> = psi_family(0, &others, &pts, SandwichDir::DMinus);
        let mut total = 0usize;
        for seed in 0..10 {
            total += envelope_cutting(&family, 2, seed).unwrap().attempts;
        }
        assert!(total as f64 / 10.0 <= 2.0, "mean envelope attempts {}", total as f64 / 10.0);
    }

    #[test]
    fn below_envelope_cutting_contract() {
        let mut rng = rng_for(640, 9);
        let mut pts: Vec<Vec3> = (0..41)
            .map(|_| {
                Vec3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                )
            })
            .collect();
        pts[0] = Vec3::new(0.0, 0.0, 0.0);
        let others: Vec<usize> = (1..pts.len()).collect();
        let family: Vec<PsiMember> = psi_family(0, &others, &pts, SandwichDir::DMinus);
        let cut = envelope_cutting(&family, 2, 15).unwrap();
        assert!(cut.attempts <= 2, "attempts {}", cut.attempts);
        assert!(cut.conflicts.iter().all(|l| l.len() <= cut.max_list));
        assert_eq!(cut.conflicts.len(), cut.diagram.cells.len());

        // Cell representatives sit on probed columns, so their dip sets
        // must be fully listed.
        for (ci, cell) in cut.diagram.cells.iter().enumerate() {
            if cell.attaining.is_none() {
                continue;
            }
            for d in cut.diagram.column_dips(&family, cell.rep) {
                assert!(
                    cut.sample.contains(&d) || cut.conflicts[ci].contains(&d),
                    "rep-column dip {d} missing from cell {ci}"
                );
            }
        }

        // Between probe columns lists are best effort; misses must stay
        // rare. Consumers needing certainty re-derive dips per query.
        let mut checked = 0usize;
        let mut missed = 0usize;
        for _ in 0..400 {
            let pt = [
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                -1e6,
            ];
            let Some(cell) = cut.locate(pt) else { continue };
            for d in cut.diagram.column_dips(&family, pt) {
                checked += 1;
                if !cut.sample.contains(&d) && !cut.conflicts[cell].contains(&d) {
                    missed += 1;
                }
            }
        }
        assert!(checked > 500);
        assert!(
            (missed as f64) < 0.02 * checked as f64,
            "{missed} of {checked} dips unlisted"
        );
    }
}
