//! Numerical laboratory for outer and symplectic billiards on smooth strongly
//! convex planar bodies (and centered ellipsoids in `R^{2n}`).
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificate;
pub mod curve;
pub mod error;
pub mod io;
mod lsq;
pub mod octagon;
pub mod outer;
mod roots;
pub mod search;
pub mod svg;
pub mod symplectic;

pub use curve::{BoundaryPoint, ConvexBoundary, CurveModel, CurveShape, FourierTerm, Vec2};
pub use error::{BilliardError, Result};
pub use outer::{Mat2, OuterOrbit, OuterStep};
