//! Space decompositions over families of balls: the boundary census of a
//! union, vertical decompositions of its complement and of the full
//! arrangement, lower-envelope minimization diagrams, random cuttings
//! with conflict lists, and a point-enclosure hierarchy.

pub mod ball;
pub mod curtain;
pub mod cutting;
pub mod envelope;
pub mod shallow;
pub mod overlay;
pub mod union;
pub mod visibility;

pub use ball::Ball;
pub use curtain::{
    curtain_envelope, vd_assemble_and_count, visibilities_bruteforce, visibilities_recursive,
    AssemblyCounts, Breakpoint, EdgeKey, Region, Visibility,
};
pub use cutting::{
    ball_cutting, conflict_bound, cutting_sample_size, envelope_cutting, envelope_sample_size,
    BallCutting,
    CuttingVariant, EnvelopeCutting,
};
pub use overlay::{Located, OverlayVd, PrismCell, VdCounts, VdMode};
pub use shallow::{shallow_cells, ShallowCellSet};
pub use union::{build_union_balls, UnionBoundary};
