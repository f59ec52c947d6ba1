//! First eigenpairs of the p-Laplacian on eccentric annuli.
//!
//! The crate meshes `B_{R1}(0) \ closed B_{R0}(s e1)`, minimizes the discrete
//! Rayleigh quotient to get the first eigenvalue and eigenfunction, evaluates
//! the inner- and outer-boundary shape-derivative integrals for `d lambda/ds`,
//! and cross-checks everything against a radial shooting solver.

pub mod banded;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod mesh;
pub mod radial;
pub mod shape;
pub mod solver;

pub use error::{Error, Result};
pub use geometry::AnnulusSpec;
pub use mesh::{BoundaryTag, Mesh};
pub use solver::{EigenResult, InitialField, ScalarField, SolverConfig};
