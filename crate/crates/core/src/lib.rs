//! Interior-point methods for symmetric cone programs that follow the
//! geometry of the cone: geodesics, the symmetric divergence, and
//! subspace-projected Newton directions.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod geometry;
pub mod harness;
pub mod jordan;
pub mod linalg;
pub mod random;
pub mod solver;
pub mod subspace;

pub use error::{Error, Result};
pub use jordan::{BlockKind, Cone, ConeAutomorphism, Element};
