//! Minimization diagrams of small families that are linear in one
//! coordinate of line space, and their boxy vertical decompositions.
//!
//! Restricted to the column over a fixed slope pair `(x, y)`, a member is
//! a line `A(x, y) + B(x, y) * z` in the remaining coordinates `(z, w)`,
//! or a +-infinity pad where it stops constraining. The diagram of a
//! family decomposes the region on one side of the envelope into prisms:
//! an adaptive quadtree over the arctangent-compactified slope square,
//! crossed with the envelope's breakpoint intervals along `z`.
//!
//! Membership and interval rank are recomputed exactly on the query's own
//! column, so the cells cover the region and are disjoint by construction.
//! Quadtree probes only decide where leaves stop splitting; a leaf whose
//! probe signatures still disagree at the depth cap keeps approximate
//! metadata but exact membership.

use prismatica_core::{cost, FrameH, GeomError, Vec3};
use std::collections::BTreeSet;

/// Families are meant to stay constant-size; larger inputs still build
/// but the leaf guard below may truncate refinement.
pub const N_ENV: usize = 16;

const SIG_FRACS: [f64; 3] = [1.0 / 6.0, 0.5, 5.0 / 6.0];

/// Refinement and conflict-probing knobs. Depth caps bound the quadtree:
/// `soft_depth` stops splits that would only chase attaining order,
/// `hard_depth` stops everything. The conflict grid is `grid x grid`
/// interior columns plus corners and edge midpoints. `conflict_slack`
/// widens the rank window unioned per probe column: positive slack
/// over-reports near rank boundaries (robust lists for consumers that
/// tolerate supersets), zero mirrors `membership` exactly (tight lists
/// for cutting contracts).
#[derive(Debug, Clone, Copy)]
pub struct MdParams {
    pub soft_depth: usize,
    pub hard_depth: usize,
    pub max_leaves: usize,
    pub conflict_grid: usize,
    pub conflict_slack: usize,
}

impl Default for MdParams {
    fn default() -> Self {
        MdParams {
            soft_depth: 5,
            hard_depth: 8,
            max_leaves: 20_000,
            conflict_grid: 5,
            conflict_slack: 1,
        }
    }
}

impl MdParams {
    /// Coarse settings for recursion nodes that verify conflict lists at
    /// query time and only need the contract to hold statistically.
    pub fn coarse() -> Self {
        MdParams { soft_depth: 2, hard_depth: 4, max_leaves: 800, conflict_grid: 4, ..Self::default() }
    }

    /// Tight conflict lists: per probe column, exactly the intervals the
    /// cell occupies there. The initial build stays coarse so the leaf
    /// budget is spent by conflict-driven refinement, not by chasing
    /// signature disagreements uniformly.
    pub fn tight() -> Self {
        MdParams {
            conflict_slack: 0,
            soft_depth: 3,
            hard_depth: 5,
            max_leaves: 60_000,
            ..Self::default()
        }
    }
}

/// Member restricted to one column: a line in `(z, w)` or a pad.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MemberLine {
    Finite { a0: f64, a1: f64 },
    PlusInf,
    MinusInf,
}

/// Surface linear in the column coordinate once the slope frame is
/// fixed.
pub trait ColumnLinear {
    fn member_line(&self, fr: &FrameH) -> MemberLine;
}

/// Pointwise surface evaluation; +-infinity on padded columns.
pub trait Trivariate {
    fn value(&self, x: f64, y: f64, z: f64) -> f64;
}

/// Exact envelope value and attaining member, ties to the lowest index.
pub fn envelope_eval<F: Trivariate>(
    family: &[F],
    x: f64,
    y: f64,
    z: f64,
) -> Result<(f64, usize), GeomError> {
    let mut best: Option<(f64, usize)> = None;
    for (i, f) in family.iter().enumerate() {
        let v = f.value(x, y, z);
        if best.map_or(true, |(bv, _)| v < bv) {
            best = Some((v, i));
        }
    }
    best.ok_or(GeomError::EmptyFamily)
}

/// Which side of the envelope the diagram decomposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// `w <= min` over the family; lower envelope, pads at `+inf` inert.
    Below,
    /// `w >= max` over the family; upper envelope, pads at `-inf` inert.
    Above,
}

/// One prism of the diagram: a slope leaf times one breakpoint interval,
/// semi-unbounded in `w` on the decomposed side.
#[derive(Debug, Clone)]
pub struct MDPrism {
    /// Envelope-attaining member over the cell, if any member is finite
    /// here.
    pub attaining: Option<usize>,
    /// Surface bounding the cell from below in `w`.
    pub floor: Option<usize>,
    /// Surface bounding the cell from above in `w`.
    pub ceil: Option<usize>,
    /// Slope box of the owning leaf, in raw slope coordinates.
    pub base_lo: [f64; 2],
    pub base_hi: [f64; 2],
    /// Interval rank along `z` within the leaf.
    pub rank: usize,
    /// Interior representative `(x, y, z, w)`.
    pub rep: [f64; 4],
    /// Checked surfaces crossing the cell; identity indices are the
    /// caller's (see [`MinimizationDiagramVd::fill_conflicts`]).
    pub conflicts: Vec<usize>,
}

/// Column signature: the envelope's attaining sequence left to right.
#[derive(Debug, Clone, PartialEq)]
enum ColSig {
    /// A collapsing pad empties the region over this column.
    Empty,
    /// No finite member and no collapsing pad; the whole column is in.
    Free,
    Seq(Vec<u32>),
}

impl ColSig {
    fn count(&self) -> usize {
        match self {
            ColSig::Empty => 0,
            ColSig::Free => 1,
            ColSig::Seq(v) => v.len(),
        }
    }
}

/// Signatures are interchangeable when they produce the same cell
/// structure. Single-interval leaves never split on attaining identity:
/// the slab's shape does not depend on who attains it.
fn sig_equivalent(a: &ColSig, b: &ColSig) -> bool {
    let (ca, cb) = (a.count(), b.count());
    ca == cb && (ca <= 1 || a == b)
}

/// Envelope over one column in min-space: `Above` diagrams negate their
/// members so both orientations share the lower-envelope machinery.
#[derive(Debug, Clone)]
enum ColumnEnv {
    Collapsed,
    Free,
    Pieces {
        breaks: Vec<f64>,
        ids: Vec<u32>,
        /// Attaining line per interval, min-space coefficients.
        lines: Vec<(f64, f64)>,
    },
}

impl ColumnEnv {
    fn sig(&self) -> ColSig {
        match self {
            ColumnEnv::Collapsed => ColSig::Empty,
            ColumnEnv::Free => ColSig::Free,
            ColumnEnv::Pieces { ids, .. } => ColSig::Seq(ids.clone()),
        }
    }

    fn count(&self) -> usize {
        match self {
            ColumnEnv::Collapsed => 0,
            ColumnEnv::Free => 1,
            ColumnEnv::Pieces { ids, .. } => ids.len(),
        }
    }

    fn rank_of(&self, z: f64) -> usize {
        match self {
            ColumnEnv::Pieces { breaks, .. } => breaks.partition_point(|&b| b < z),
            _ => 0,
        }
    }
}

fn min_space(line: MemberLine, orientation: Orientation) -> MemberLine {
    match orientation {
        Orientation::Below => line,
        Orientation::Above => match line {
            MemberLine::Finite { a0, a1 } => MemberLine::Finite { a0: -a0, a1: -a1 },
            MemberLine::PlusInf => MemberLine::MinusInf,
            MemberLine::MinusInf => MemberLine::PlusInf,
        },
    }
}

fn column_env<F: ColumnLinear>(family: &[F], fr: &FrameH, orientation: Orientation) -> ColumnEnv {
    let mut lines: Vec<(f64, f64, u32)> = Vec::with_capacity(family.len());
    for (i, f) in family.iter().enumerate() {
        match min_space(f.member_line(fr), orientation) {
            MemberLine::Finite { a0, a1 } => lines.push((a0, a1, i as u32)),
            MemberLine::MinusInf => return ColumnEnv::Collapsed,
            MemberLine::PlusInf => {}
        }
    }
    if lines.is_empty() {
        return ColumnEnv::Free;
    }
    let (breaks, ids) = lower_envelope(lines.clone());
    let lines = ids
        .iter()
        .map(|&id| {
            let &(a0, a1, _) = lines.iter().find(|&&(_, _, i)| i == id).unwrap();
            (a0, a1)
        })
        .collect();
    ColumnEnv::Pieces { breaks, ids, lines }
}

/// Lower envelope of lines `(a0, a1, id)`: interval breakpoints
/// (ascending) and the attaining id per interval, left to right. Among
/// coincident lines the lowest id wins; among parallel lines the lowest
/// one.
fn lower_envelope(mut ls: Vec<(f64, f64, u32)>) -> (Vec<f64>, Vec<u32>) {
    ls.sort_by(|p, q| {
        p.1.partial_cmp(&q.1)
            .unwrap()
            .then(p.0.partial_cmp(&q.0).unwrap())
            .then(p.2.cmp(&q.2))
    });
    ls.dedup_by(|later, first| later.1 == first.1);
    // Pieces run left to right in decreasing slope; `start` is where a
    // piece takes over from the piece below it on the stack.
    let mut stack: Vec<(usize, f64)> = Vec::new();
    for i in (0..ls.len()).rev() {
        let (a0, a1, _) = ls[i];
        let mut start = f64::NEG_INFINITY;
        while let Some(&(j, sj)) = stack.last() {
            let (b0, b1, _) = ls[j];
            let z = (a0 - b0) / (b1 - a1);
            if z <= sj {
                stack.pop();
            } else {
                start = z;
                break;
            }
        }
        stack.push((i, start));
    }
    let breaks = stack.iter().skip(1).map(|&(_, s)| s).collect();
    let ids = stack.iter().map(|&(i, _)| ls[i].2).collect();
    (breaks, ids)
}

/// Member value `m` at or below envelope value `e` at `z`, where `z` may
/// be an infinite interval endpoint (compared in the limit).
fn leq_at(m0: f64, m1: f64, e0: f64, e1: f64, z: f64) -> bool {
    if z == f64::NEG_INFINITY {
        m1 > e1 || (m1 == e1 && m0 <= e0)
    } else if z == f64::INFINITY {
        m1 < e1 || (m1 == e1 && m0 <= e0)
    } else {
        m0 + m1 * z <= e0 + e1 * z
    }
}

/// Interior representative `(z, w)` of one interval of a column envelope.
fn rep_zw(env: &ColumnEnv, rank: usize, orientation: Orientation) -> (f64, f64) {
    match env {
        ColumnEnv::Pieces { breaks, lines, .. } if rank < lines.len() => {
            let lo = if rank == 0 { f64::NEG_INFINITY } else { breaks[rank - 1] };
            let hi = if rank == breaks.len() { f64::INFINITY } else { breaks[rank] };
            let z = match (lo.is_finite(), hi.is_finite()) {
                (true, true) => 0.5 * (lo + hi),
                (true, false) => lo + 1.0,
                (false, true) => hi - 1.0,
                (false, false) => 0.0,
            };
            let (e0, e1) = lines[rank];
            let v = e0 + e1 * z;
            let w = match orientation {
                Orientation::Below => v - 1.0,
                Orientation::Above => -v + 1.0,
            };
            (z, w)
        }
        _ => (0.0, 0.0),
    }
}

#[derive(Debug, Clone)]
struct Leaf {
    s_lo: f64,
    s_hi: f64,
    t_lo: f64,
    t_hi: f64,
    sig: ColSig,
    /// Cells are `cell0 .. cell0 + sig.count()`.
    cell0: usize,
}

#[derive(Debug, Clone)]
enum QNode {
    Split { s_mid: f64, t_mid: f64, kids: [usize; 4] },
    Leaf(usize),
}

/// Vertical decomposition of the region on one side of a family's
/// envelope.
#[derive(Debug, Clone)]
pub struct MinimizationDiagramVd<F: ColumnLinear> {
    pub family: Vec<F>,
    pub orientation: Orientation,
    pub cells: Vec<MDPrism>,
    params: MdParams,
    nodes: Vec<QNode>,
    leaves: Vec<Leaf>,
}

/// Builds the diagram with default parameters. Coincident member
/// surfaces are rejected; they would make attaining ids ambiguous.
pub fn minimization_diagram_vd<F: ColumnLinear + Clone>(
    family: &[F],
    orientation: Orientation,
) -> Result<MinimizationDiagramVd<F>, GeomError> {
    minimization_diagram_vd_with(family, orientation, MdParams::default())
}

pub fn minimization_diagram_vd_with<F: ColumnLinear + Clone>(
    family: &[F],
    orientation: Orientation,
    params: MdParams,
) -> Result<MinimizationDiagramVd<F>, GeomError> {
    const DEGEN_PROBES: [(f64, f64); 3] = [(0.13, -0.27), (0.61, 0.43), (-0.52, 0.87)];
    for i in 0..family.len() {
        for j in i + 1..family.len() {
            let mut finite_match = false;
            let distinguishable = DEGEN_PROBES.iter().any(|&(x, y)| {
                let fr = FrameH::new(x, y);
                match (family[i].member_line(&fr), family[j].member_line(&fr)) {
                    (
                        MemberLine::Finite { a0: p0, a1: p1 },
                        MemberLine::Finite { a0: q0, a1: q1 },
                    ) => {
                        if p0 == q0 && p1 == q1 {
                            finite_match = true;
                            false
                        } else {
                            true
                        }
                    }
                    (a, b) => a != b,
                }
            });
            if !distinguishable && finite_match {
                return Err(GeomError::DegenerateFamily);
            }
        }
    }
    Ok(MinimizationDiagramVd::build(family.to_vec(), orientation, params))
}

impl<F: ColumnLinear> MinimizationDiagramVd<F> {
    pub fn build(family: Vec<F>, orientation: Orientation, params: MdParams) -> Self {
        let mut dg = MinimizationDiagramVd {
            family,
            orientation,
            cells: Vec::new(),
            params,
            nodes: Vec::new(),
            leaves: Vec::new(),
        };
        let half = std::f64::consts::FRAC_PI_2;
        dg.subdivide(-half, half, -half, half, 0);
        dg.make_cells();
        dg
    }

    fn signature(&self, s: f64, t: f64) -> ColSig {
        let fr = FrameH::new(s.tan(), t.tan());
        column_env(&self.family, &fr, self.orientation).sig()
    }

    /// Returns the node index. Splits while the 3x3 probe signatures
    /// disagree, with a soft cap once only attaining order (not cell
    /// count) varies and a hard cap plus a global leaf guard after that.
    fn subdivide(&mut self, s_lo: f64, s_hi: f64, t_lo: f64, t_hi: f64, depth: usize) -> usize {
        let probe = |f: f64, lo: f64, hi: f64| lo + f * (hi - lo);
        let mut sigs = Vec::with_capacity(9);
        for ft in SIG_FRACS {
            for fs in SIG_FRACS {
                sigs.push(self.signature(probe(fs, s_lo, s_hi), probe(ft, t_lo, t_hi)));
            }
        }
        let center = sigs[4].clone();
        let all_equal = sigs.iter().all(|s| s == &sigs[0]);
        let counts_equal = sigs.iter().all(|s| sig_equivalent(s, &sigs[0]));
        let stop = all_equal
            || depth >= self.params.hard_depth
            || (counts_equal && depth >= self.params.soft_depth)
            || self.leaves.len() >= self.params.max_leaves;
        if stop {
            self.leaves.push(Leaf { s_lo, s_hi, t_lo, t_hi, sig: center, cell0: 0 });
            self.nodes.push(QNode::Leaf(self.leaves.len() - 1));
            return self.nodes.len() - 1;
        }
        let s_mid = 0.5 * (s_lo + s_hi);
        let t_mid = 0.5 * (t_lo + t_hi);
        let slot = self.nodes.len();
        self.nodes.push(QNode::Split { s_mid, t_mid, kids: [0; 4] });
        let kids = [
            self.subdivide(s_lo, s_mid, t_lo, t_mid, depth + 1),
            self.subdivide(s_mid, s_hi, t_lo, t_mid, depth + 1),
            self.subdivide(s_lo, s_mid, t_mid, t_hi, depth + 1),
            self.subdivide(s_mid, s_hi, t_mid, t_hi, depth + 1),
        ];
        match &mut self.nodes[slot] {
            QNode::Split { kids: k, .. } => *k = kids,
            QNode::Leaf(_) => unreachable!(),
        }
        slot
    }

    fn make_cells(&mut self) {
        let mut cells = Vec::new();
        for leaf in &mut self.leaves {
            leaf.cell0 = cells.len();
            let s = 0.5 * (leaf.s_lo + leaf.s_hi);
            let t = 0.5 * (leaf.t_lo + leaf.t_hi);
            let (x, y) = (s.tan(), t.tan());
            let fr = FrameH::new(x, y);
            let env = column_env(&self.family, &fr, self.orientation);
            let base_lo = [leaf.s_lo.tan(), leaf.t_lo.tan()];
            let base_hi = [leaf.s_hi.tan(), leaf.t_hi.tan()];
            let n = leaf.sig.count();
            for rank in 0..n {
                let attaining = match &env {
                    ColumnEnv::Pieces { ids, .. } if rank < ids.len() => {
                        Some(ids[rank] as usize)
                    }
                    _ => None,
                };
                let (floor, ceil) = match self.orientation {
                    Orientation::Below => (None, attaining),
                    Orientation::Above => (attaining, None),
                };
                let (z, w) = rep_zw(&env, rank, self.orientation);
                cells.push(MDPrism {
                    attaining,
                    floor,
                    ceil,
                    base_lo,
                    base_hi,
                    rank,
                    rep: [x, y, z, w],
                    conflicts: Vec::new(),
                });
            }
        }
        self.cells = cells;
    }

    /// Owning leaf of a cell index.
    pub fn cell_leaf(&self, cell: usize) -> usize {
        self.leaves.partition_point(|l| l.cell0 <= cell) - 1
    }

    /// Splits each given leaf into its four quadrants (no recursive
    /// resplitting), rebuilding all cells and discarding their conflict
    /// lists. Leaves at `hard_depth`, or once the leaf count passes
    /// `max_leaves`, are left alone; returns how many leaves were split.
    pub fn split_leaves_once(
        &mut self,
        leaf_ids: &[usize],
        hard_depth: usize,
        max_leaves: usize,
    ) -> usize {
        let mut node_of = vec![usize::MAX; self.leaves.len()];
        for (ni, n) in self.nodes.iter().enumerate() {
            if let QNode::Leaf(li) = n {
                node_of[*li] = ni;
            }
        }
        let mut ids: Vec<usize> = leaf_ids.to_vec();
        ids.sort_unstable();
        ids.dedup();
        let mut split = 0usize;
        for li in ids {
            let (s_lo, s_hi, t_lo, t_hi) = {
                let l = &self.leaves[li];
                (l.s_lo, l.s_hi, l.t_lo, l.t_hi)
            };
            let depth = (std::f64::consts::PI / (s_hi - s_lo)).log2().round() as usize;
            if depth >= hard_depth || self.leaves.len() >= max_leaves {
                continue;
            }
            let s_mid = 0.5 * (s_lo + s_hi);
            let t_mid = 0.5 * (t_lo + t_hi);
            let mut kids = [0usize; 4];
            for (k, (sl, sh, tl, th)) in [
                (s_lo, s_mid, t_lo, t_mid),
                (s_mid, s_hi, t_lo, t_mid),
                (s_lo, s_mid, t_mid, t_hi),
                (s_mid, s_hi, t_mid, t_hi),
            ]
            .into_iter()
            .enumerate()
            {
                let sig = self.signature(0.5 * (sl + sh), 0.5 * (tl + th));
                self.leaves.push(Leaf { s_lo: sl, s_hi: sh, t_lo: tl, t_hi: th, sig, cell0: 0 });
                self.nodes.push(QNode::Leaf(self.leaves.len() - 1));
                kids[k] = self.nodes.len() - 1;
            }
            self.nodes[node_of[li]] = QNode::Split { s_mid, t_mid, kids };
            split += 1;
        }
        if split > 0 {
            let mut keep = vec![false; self.leaves.len()];
            for n in &self.nodes {
                if let QNode::Leaf(li) = n {
                    keep[*li] = true;
                }
            }
            let mut remap = vec![usize::MAX; self.leaves.len()];
            let mut new_leaves = Vec::with_capacity(self.leaves.len());
            for (i, l) in std::mem::take(&mut self.leaves).into_iter().enumerate() {
                if keep[i] {
                    remap[i] = new_leaves.len();
                    new_leaves.push(l);
                }
            }
            self.leaves = new_leaves;
            for n in &mut self.nodes {
                if let QNode::Leaf(li) = n {
                    *li = remap[*li];
                }
            }
            self.make_cells();
        }
        split
    }

    fn leaf_at(&self, s: f64, t: f64) -> &Leaf {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                QNode::Leaf(li) => return &self.leaves[*li],
                QNode::Split { s_mid, t_mid, kids } => {
                    let i = (s >= *s_mid) as usize + 2 * ((t >= *t_mid) as usize);
                    at = kids[i];
                }
            }
        }
    }

    /// Cell containing `(x, y, z, w)`, or `None` outside the region.
    /// Exact on the query's own column; the interval rank clamps into the
    /// leaf's cell range when a depth-capped leaf disagrees with it.
    pub fn membership(&self, pt: [f64; 4]) -> Option<usize> {
        let [x, y, z, w] = pt;
        let leaf = self.leaf_at(x.atan(), y.atan());
        let fr = FrameH::new(x, y);
        let env = column_env(&self.family, &fr, self.orientation);
        let inside = match &env {
            ColumnEnv::Collapsed => false,
            ColumnEnv::Free => true,
            ColumnEnv::Pieces { lines, .. } => {
                let k = env.rank_of(z);
                let (e0, e1) = lines[k.min(lines.len() - 1)];
                let v = match self.orientation {
                    Orientation::Below => w,
                    Orientation::Above => -w,
                };
                v <= e0 + e1 * z
            }
        };
        if !inside || leaf.sig.count() == 0 {
            return None;
        }
        let rank = env.rank_of(z).min(leaf.sig.count() - 1);
        Some(leaf.cell0 + rank)
    }

    /// Spec'd location entry point: unique containing cell and its
    /// conflict list.
    pub fn locate_and_conflicts(&self, pt: [f64; 4]) -> Result<(usize, &[usize]), GeomError> {
        match self.membership(pt) {
            Some(c) => Ok((c, &self.cells[c].conflicts)),
            None => Err(GeomError::NotInRegion),
        }
    }

    /// Fills every cell's conflict list with the indices of `checked`
    /// surfaces crossing it, and returns the largest list size.
    ///
    /// Per probe column the dip test is exact: a line enters the interval
    /// `[lo, hi]` under (over) the envelope piece iff it does so at an
    /// endpoint. Across the leaf it samples a grid plus the corners and
    /// edge midpoints. Ranks pad by one interval either side, and by the
    /// whole column when the column's interval count disagrees with the
    /// leaf's, so lists over-report near rank boundaries rather than miss
    /// crossers. Consumers that need certainty re-derive the dip set on
    /// the query's own column and fall back when it is not covered.
    pub fn fill_conflicts<G: ColumnLinear>(&mut self, checked: &[G]) -> usize {
        let mut max = 0;
        for li in 0..self.leaves.len() {
            let lists = self.leaf_conflicts(li, checked);
            let cell0 = self.leaves[li].cell0;
            for (rank, list) in lists.into_iter().enumerate() {
                max = max.max(list.len());
                self.cells[cell0 + rank].conflicts = list;
            }
        }
        max
    }

    /// Number of quadtree leaves backing the cells.
    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    /// Cell range of one leaf: `(first cell, cell count)`.
    pub fn leaf_span(&self, li: usize) -> (usize, usize) {
        let l = &self.leaves[li];
        (l.cell0, l.sig.count())
    }

    /// Identity of a leaf by its slope-square bounds; stable across the
    /// reindexing that `split_leaves_once` performs.
    pub fn leaf_key(&self, li: usize) -> (u64, u64, u64, u64) {
        let l = &self.leaves[li];
        (l.s_lo.to_bits(), l.s_hi.to_bits(), l.t_lo.to_bits(), l.t_hi.to_bits())
    }

    /// Conflict lists of one leaf, one per rank cell, by probe columns.
    pub fn leaf_conflicts<G: ColumnLinear>(&self, li: usize, checked: &[G]) -> Vec<Vec<usize>> {
        let leaf = &self.leaves[li];
        let n = leaf.sig.count();
        let mut acc: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        if n == 0 {
            return Vec::new();
        }
        let g = self.params.conflict_grid;
        let mut fracs: Vec<(f64, f64)> = Vec::with_capacity(g * g + 8);
        for i in 0..g {
            for j in 0..g {
                fracs.push((
                    (2.0 * j as f64 + 1.0) / (2.0 * g as f64),
                    (2.0 * i as f64 + 1.0) / (2.0 * g as f64),
                ));
            }
        }
        fracs.extend_from_slice(&[
            (0.0, 0.0),
            (1.0, 0.0),
            (0.0, 1.0),
            (1.0, 1.0),
            (0.5, 0.0),
            (0.5, 1.0),
            (0.0, 0.5),
            (1.0, 0.5),
        ]);
        for &(fs, ft) in &fracs {
            let s = leaf.s_lo + fs * (leaf.s_hi - leaf.s_lo);
            let t = leaf.t_lo + ft * (leaf.t_hi - leaf.t_lo);
            let fr = FrameH::new(s.tan(), t.tan());
            let env = column_env(&self.family, &fr, self.orientation);
            let cnt = env.count();
            if cnt == 0 {
                continue;
            }
            // dips[m][k]: checked member m enters interval k's cell.
            let mut dips: Vec<Vec<bool>> = Vec::with_capacity(checked.len());
            for gm in checked {
                let line = min_space(gm.member_line(&fr), self.orientation);
                let row = match (&env, line) {
                    (_, MemberLine::MinusInf) => vec![true; cnt],
                    (_, MemberLine::PlusInf) => vec![false; cnt],
                    (ColumnEnv::Free, MemberLine::Finite { .. }) => vec![true; cnt],
                    (ColumnEnv::Pieces { breaks, lines, .. }, MemberLine::Finite { a0, a1 }) => {
                        (0..cnt)
                            .map(|k| {
                                let (e0, e1) = lines[k];
                                let lo = if k == 0 {
                                    f64::NEG_INFINITY
                                } else {
                                    breaks[k - 1]
                                };
                                let hi =
                                    if k == breaks.len() { f64::INFINITY } else { breaks[k] };
                                leq_at(a0, a1, e0, e1, lo) || leq_at(a0, a1, e0, e1, hi)
                            })
                            .collect()
                    }
                    (ColumnEnv::Collapsed, _) => unreachable!(),
                };
                dips.push(row);
            }
            let slack = self.params.conflict_slack;
            for rank in 0..n {
                // `membership` clamps the column rank into the leaf: the
                // cell covers interval `rank` when below the leaf's top
                // rank, and every interval from `n - 1` up when it is
                // the top rank. Positive slack widens around that.
                let (k_lo, k_hi) = if slack > 0 && cnt != n {
                    (0, cnt - 1)
                } else if rank < n - 1 {
                    if rank < cnt {
                        (rank.saturating_sub(slack), (rank + slack).min(cnt - 1))
                    } else {
                        continue;
                    }
                } else if cnt >= n {
                    ((n - 1).saturating_sub(slack), cnt - 1)
                } else {
                    continue;
                };
                let set = &mut acc[rank];
                for (m, row) in dips.iter().enumerate() {
                    if row[k_lo..=k_hi].iter().any(|&d| d) {
                        set.insert(m);
                    }
                }
            }
        }
        acc.into_iter().map(|s| s.into_iter().collect()).collect()
    }

    /// Exact dip set of `checked` on the query's own column and interval:
    /// the surfaces a conflict list must contain for this query. Empty
    /// when the point is out of region.
    pub fn column_dips<G: ColumnLinear>(&self, checked: &[G], pt: [f64; 4]) -> Vec<usize> {
        let [x, y, z, _] = pt;
        let fr = FrameH::new(x, y);
        let env = column_env(&self.family, &fr, self.orientation);
        let cnt = env.count();
        if cnt == 0 {
            return Vec::new();
        }
        let k = env.rank_of(z).min(cnt - 1);
        let mut out = Vec::new();
        for (m, gm) in checked.iter().enumerate() {
            let dip = match (&env, min_space(gm.member_line(&fr), self.orientation)) {
                (_, MemberLine::MinusInf) => true,
                (_, MemberLine::PlusInf) => false,
                (ColumnEnv::Free, MemberLine::Finite { .. }) => true,
                (ColumnEnv::Pieces { breaks, lines, .. }, MemberLine::Finite { a0, a1 }) => {
                    let (e0, e1) = lines[k];
                    let lo = if k == 0 { f64::NEG_INFINITY } else { breaks[k - 1] };
                    let hi = if k == breaks.len() { f64::INFINITY } else { breaks[k] };
                    leq_at(a0, a1, e0, e1, lo) || leq_at(a0, a1, e0, e1, hi)
                }
                (ColumnEnv::Collapsed, _) => false,
            };
            if dip {
                out.push(m);
            }
        }
        out
    }
}

/// The four slab sides of a sandwich region around a base site.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SandwichDir {
    /// Below the lower envelope of upper `d`-bisectors.
    DMinus,
    /// Above the upper envelope of lower `d`-bisectors.
    DPlus,
    /// Below the lower envelope of upper `c`-bisectors.
    CMinus,
    /// Above the upper envelope of lower `c`-bisectors.
    CPlus,
}

pub const SANDWICH_DIRS: [SandwichDir; 4] =
    [SandwichDir::DMinus, SandwichDir::DPlus, SandwichDir::CMinus, SandwichDir::CPlus];

impl SandwichDir {
    pub fn orientation(self) -> Orientation {
        match self {
            SandwichDir::DMinus | SandwichDir::CMinus => Orientation::Below,
            SandwichDir::DPlus | SandwichDir::CPlus => Orientation::Above,
        }
    }

    /// Maps a line point `(a, b, c, d)` into the diagram's abstract
    /// `(x, y, z, w)` coordinates: `d`-sided diagrams decompose along `c`
    /// and read the envelope in `d`; `c`-sided ones swap the two.
    pub fn map_point(self, lp: [f64; 4]) -> [f64; 4] {
        let [a, b, c, d] = lp;
        match self {
            SandwichDir::DMinus | SandwichDir::DPlus => [a, b, c, d],
            SandwichDir::CMinus | SandwichDir::CPlus => [a, b, d, c],
        }
    }
}

/// Bisector surface between a base site `p` and another site `q`, in one
/// of the four sandwich directions.
#[derive(Debug, Clone)]
pub struct PsiMember {
    pub p: Vec3,
    pub q: Vec3,
    /// Caller's identity for `q`.
    pub q_id: usize,
    pub dir: SandwichDir,
}

impl ColumnLinear for PsiMember {
    fn member_line(&self, fr: &FrameH) -> MemberLine {
        let (v0, v1) = match self.dir {
            SandwichDir::DMinus => (
                cost::bisector_d_upper(fr, self.p, self.q, 0.0),
                cost::bisector_d_upper(fr, self.p, self.q, 1.0),
            ),
            SandwichDir::DPlus => (
                cost::bisector_d_lower(fr, self.p, self.q, 0.0),
                cost::bisector_d_lower(fr, self.p, self.q, 1.0),
            ),
            SandwichDir::CMinus => (
                cost::bisector_c_upper(fr, self.p, self.q, 0.0),
                cost::bisector_c_upper(fr, self.p, self.q, 1.0),
            ),
            SandwichDir::CPlus => (
                cost::bisector_c_lower(fr, self.p, self.q, 0.0),
                cost::bisector_c_lower(fr, self.p, self.q, 1.0),
            ),
        };
        if v0 == f64::INFINITY {
            MemberLine::PlusInf
        } else if v0 == f64::NEG_INFINITY {
            MemberLine::MinusInf
        } else {
            MemberLine::Finite { a0: v0, a1: v1 - v0 }
        }
    }
}

impl Trivariate for PsiMember {
    fn value(&self, x: f64, y: f64, z: f64) -> f64 {
        let fr = FrameH::new(x, y);
        match self.member_line(&fr) {
            MemberLine::Finite { a0, a1 } => a0 + a1 * z,
            MemberLine::PlusInf => f64::INFINITY,
            MemberLine::MinusInf => f64::NEG_INFINITY,
        }
    }
}

/// Bisector family of a base site against every other sample site, in
/// one direction.
pub fn psi_family(p_id: usize, sample: &[usize], pts: &[Vec3], dir: SandwichDir) -> Vec<PsiMember> {
    sample
        .iter()
        .filter(|&&q| q != p_id)
        .map(|&q| PsiMember { p: pts[p_id], q: pts[q], q_id: q, dir })
        .collect()
}

/// The four decompositions sandwiching the region where the base site is
/// the nearest sample site. Conflict lists carry global point ids.
#[derive(Debug, Clone)]
pub struct SandwichDecomps {
    pub p_id: usize,
    pub diagrams: [MinimizationDiagramVd<PsiMember>; 4],
    /// Largest conflict list over all cells of all four diagrams.
    pub max_conflict: usize,
}

/// Builds the four sandwich decompositions for `p_id` against the sample,
/// with conflicts measured against the full point set.
pub fn sandwich_decompositions(
    p_id: usize,
    sample: &[usize],
    pts: &[Vec3],
) -> Result<SandwichDecomps, GeomError> {
    let all: Vec<usize> = (0..pts.len()).collect();
    let mut out: Vec<MinimizationDiagramVd<PsiMember>> = Vec::with_capacity(4);
    let mut max_conflict = 0;
    for dir in SANDWICH_DIRS {
        let fam = psi_family(p_id, sample, pts, dir);
        let mut dg = minimization_diagram_vd(&fam, dir.orientation())?;
        let checked = psi_family(p_id, &all, pts, dir);
        let mx = dg.fill_conflicts(&checked);
        for cell in dg.cells.iter_mut() {
            cell.conflicts = cell.conflicts.iter().map(|&m| checked[m].q_id).collect();
        }
        max_conflict = max_conflict.max(mx);
        out.push(dg);
    }
    let mut it = out.into_iter();
    let diagrams = [
        it.next().unwrap(),
        it.next().unwrap(),
        it.next().unwrap(),
        it.next().unwrap(),
    ];
    Ok(SandwichDecomps { p_id, diagrams, max_conflict })
}

impl SandwichDecomps {
    /// Cell of each of the four diagrams containing the line point, or
    /// `NotInRegion` when the base site is not its nearest sample site.
    pub fn locate(&self, lp: [f64; 4]) -> Result<[usize; 4], GeomError> {
        let mut cells = [0usize; 4];
        for (k, dg) in self.diagrams.iter().enumerate() {
            let pt = SANDWICH_DIRS[k].map_point(lp);
            cells[k] = dg.membership(pt).ok_or(GeomError::NotInRegion)?;
        }
        Ok(cells)
    }

    pub fn contains(&self, lp: [f64; 4]) -> bool {
        self.locate(lp).is_ok()
    }
}
