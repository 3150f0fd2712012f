//! Periodic field arithmetic on the torus: transforms, multipliers, the
//! inverse divergence, norms and mollifiers.

pub mod field;
pub mod grid;
pub mod mollify;
pub mod norms;
pub mod ops;

pub use field::{Field, Flags, Rank};
pub use grid::Grid;
pub use norms::NormReport;
pub use ops::{Scalar, Spec, Tensor, Vector};
