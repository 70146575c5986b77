//! Vertical visibility among balls.
//!
//! An ordered pair (i, j) is *vertically visible* when some open vertical
//! segment runs from the top hemisphere of ball i up to the bottom
//! hemisphere of ball j without entering any ball of the set. Each free
//! prism of the complement decomposition witnesses exactly one such pair
//! (its floor and ceiling), so enumerating prisms reports the full set.

use std::collections::BTreeSet;

use prismatica_core::rng::rng_for;
use prismatica_core::Vec3;
use rand::seq::index::sample;
use rand_chacha::ChaCha12Rng;

use crate::ball::Ball;
use crate::overlay::{OverlayVd, VdMode};

/// Subproblem size at which recursion switches to direct enumeration.
const LEAF: usize = 24;
/// Random sample size drawn at internal recursion nodes.
const SAMPLE: usize = 12;
/// Hard recursion depth cap; deeper nodes are solved directly.
const MAX_DEPTH: usize = 12;

/// All vertically visible ordered pairs, by direct enumeration of the
/// free prisms of the complement decomposition.
pub fn visible_pairs(balls: &[Ball]) -> BTreeSet<(usize, usize)> {
    OverlayVd::build(balls, VdMode::Complement)
        .visibility_pairs()
        .into_iter()
        .collect()
}

/// All vertically visible ordered pairs, by randomized divide and conquer.
///
/// Internal nodes decompose the complement of a small random sample; every
/// witness segment lies inside a single prism of that decomposition, so
/// recursing on each prism's conflicting and defining balls preserves all
/// pairs. Leaves enumerate directly, which may over-report relative to the
/// full set; a final per-pair check against every ball that can reach the
/// gap between the two discards the spurious ones.
pub fn visible_pairs_recursive(balls: &[Ball], seed: u64) -> BTreeSet<(usize, usize)> {
    let mut rng = rng_for(seed, 0);
    let ids: Vec<usize> = (0..balls.len()).collect();
    let mut cand = BTreeSet::new();
    recurse(balls, ids, &mut rng, 0, &mut cand);
    cand.retain(|&(i, j)| pair_visible(balls, i, j));
    cand
}

fn recurse(
    balls: &[Ball],
    ids: Vec<usize>,
    rng: &mut ChaCha12Rng,
    depth: usize,
    out: &mut BTreeSet<(usize, usize)>,
) {
    let n = ids.len();
    if n <= LEAF || depth >= MAX_DEPTH {
        solve_node(balls, &ids, out);
        return;
    }
    let sub: Vec<Ball> = ids.iter().map(|&i| balls[i]).collect();
    let picks = sample(rng, n, SAMPLE).into_vec();
    let sample_balls: Vec<Ball> = picks.iter().map(|&k| sub[k]).collect();
    let vd = OverlayVd::build_in(&sample_balls, VdMode::Complement, &sub);

    let mut children: Vec<Vec<usize>> = Vec::with_capacity(vd.cells.len());
    for (ci, cell) in vd.cells.iter().enumerate() {
        if let (Some(f), Some(c)) = (cell.floor_ball, cell.ceil_ball) {
            out.insert((ids[picks[f]], ids[picks[c]]));
        }
        let mut child: Vec<usize> =
            vd.conflicts_against(ci, &sub).into_iter().map(|k| ids[k]).collect();
        child.extend(cell.defining.iter().map(|&s| ids[picks[s]]));
        child.sort_unstable();
        child.dedup();
        if child.len() >= n {
            // The sample failed to split this subproblem; solving it
            // directly keeps the recursion finite.
            solve_node(balls, &ids, out);
            return;
        }
        children.push(child);
    }
    for child in children {
        recurse(balls, child, rng, depth + 1, out);
    }
}

fn solve_node(balls: &[Ball], ids: &[usize], out: &mut BTreeSet<(usize, usize)>) {
    let sub: Vec<Ball> = ids.iter().map(|&i| balls[i]).collect();
    let vd = OverlayVd::build(&sub, VdMode::Complement);
    for (f, c) in vd.visibility_pairs() {
        out.insert((ids[f], ids[c]));
    }
}

/// Exact visibility test for one ordered pair against the whole set.
///
/// A segment from the top of ball i to the bottom of ball j runs over the
/// overlap of their shadows at heights between the two centers, so only
/// balls meeting that box can block. The pair is visible iff it is visible
/// among {i, j} and those potential blockers, decided by a decomposition
/// of that small set.
fn pair_visible(balls: &[Ball], i: usize, j: usize) -> bool {
    let (bi, bj) = (&balls[i], &balls[j]);
    if bi.center.z > bj.center.z {
        return false;
    }
    let lo = Vec3::new(
        (bi.center.x - bi.radius).max(bj.center.x - bj.radius),
        (bi.center.y - bi.radius).max(bj.center.y - bj.radius),
        bi.center.z,
    );
    let hi = Vec3::new(
        (bi.center.x + bi.radius).min(bj.center.x + bj.radius),
        (bi.center.y + bi.radius).min(bj.center.y + bj.radius),
        bj.center.z,
    );
    if lo.x > hi.x || lo.y > hi.y {
        return false;
    }
    let mut local = vec![*bi, *bj];
    for (k, b) in balls.iter().enumerate() {
        if k != i && k != j && b.meets_box(lo, hi) {
            local.push(*b);
        }
    }
    let vd = OverlayVd::build(&local, VdMode::Complement);
    vd.visibility_pairs().iter().any(|&(f, c)| f == 0 && c == 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_balls(n: usize, side: f64, seed: u64) -> Vec<Ball> {
        let mut rng = rng_for(seed, 1);
        (0..n)
            .map(|_| Ball {
                center: Vec3::new(
                    rng.gen::<f64>() * side,
                    rng.gen::<f64>() * side,
                    rng.gen::<f64>() * side,
                ),
                radius: 1.0,
            })
            .collect()
    }

    #[test]
    fn stacked_triple_skips_blocked_pair() {
        // Three balls on one vertical line: only adjacent pairs see each
        // other; the outer pair is blocked by the middle ball.
        let balls = vec![
            Ball { center: Vec3::new(0.0, 0.0, 0.0), radius: 1.0 },
            Ball { center: Vec3::new(0.0, 0.0, 3.0), radius: 1.0 },
            Ball { center: Vec3::new(0.0, 0.0, 6.0), radius: 1.0 },
        ];
        let vis = visible_pairs(&balls);
        assert!(vis.contains(&(0, 1)));
        assert!(vis.contains(&(1, 2)));
        assert!(!vis.contains(&(0, 2)));
    }

    #[test]
    fn offset_triple_sees_around_blocker() {
        // The middle ball is shifted far enough sideways that the outer
        // pair shares an unobstructed column.
        let balls = vec![
            Ball { center: Vec3::new(0.0, 0.0, 0.0), radius: 1.0 },
            Ball { center: Vec3::new(1.9, 0.0, 3.0), radius: 1.0 },
            Ball { center: Vec3::new(0.0, 0.0, 6.0), radius: 1.0 },
        ];
        let vis = visible_pairs(&balls);
        assert!(vis.contains(&(0, 2)));
    }

    #[test]
    fn pair_check_agrees_with_enumeration() {
        for seed in 0..4u64 {
            let balls = random_balls(14, 5.0, 90 + seed);
            let vis = visible_pairs(&balls);
            for i in 0..balls.len() {
                for j in 0..balls.len() {
                    if i == j {
                        continue;
                    }
                    assert_eq!(
                        pair_visible(&balls, i, j),
                        vis.contains(&(i, j)),
                        "pair ({i}, {j}) seed {seed}"
                    );
                }
            }
        }
    }

    #[test]
    fn recursive_matches_bruteforce() {
        for seed in 0..6u64 {
            let n = 30 + (seed as usize % 3) * 5;
            let side = 2.0 * (n as f64).cbrt();
            let balls = random_balls(n, side, 40 + seed);
            let direct = visible_pairs(&balls);
            let rec = visible_pairs_recursive(&balls, 1000 + seed);
            assert_eq!(direct, rec, "seed {seed} n {n}");
        }
    }
}
