//! Harmonic analysis on groups of truncated path signatures.
//!
//! The crate builds the free nilpotent Lie algebra g_N(R^d) inside the
//! truncated tensor algebra, computes signatures of piecewise-linear paths,
//! classifies coadjoint orbits in general position, constructs polarizations
//! and evaluates the Fourier inversion and Plancherel formulas numerically.

pub mod cli;
pub mod coadjoint;
pub mod error;
pub mod fourier;
pub mod lie_basis;
pub mod linalg;
pub mod polarization;
pub mod signatures;
pub mod tensor_algebra;

pub use coadjoint::{Functional, JumpData};
pub use error::{Error, Result};
pub use lie_basis::{build_layered_basis, witt_dimension, BasisConvention, BracketTree, Flavor, GroupSpec, LayeredBasis};
pub use polarization::Subalgebra;
pub use tensor_algebra::{GradedElement, Role};
