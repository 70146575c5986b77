//! Primitive geometry for vertical-decomposition and line nearest-neighbor
//! structures: 3D vectors, non-steep line parameterizations, the per-slope
//! orthonormal reference frame, reduced distance costs and their bisector
//! surfaces, line projections onto the frame plane, and the sphere/line
//! side predicates that the search structures compose.
//!
//! Every predicate here is closed (tangency counts as contact) and every
//! comparison uses the relative tolerances in [`tol`].

pub mod cost;
pub mod error;
pub mod frame;
pub mod line;
pub mod lineproj;
pub mod rng;
pub mod spherepred;
pub mod tol;
pub mod vec3;

pub use error::GeomError;
pub use frame::FrameH;
pub use line::{Line3, LineEq, LinePoint};
pub use lineproj::ProjectedLine;
pub use vec3::Vec3;
