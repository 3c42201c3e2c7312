//! Numerical core for Fisher-regularised quantum hydrodynamics.
//!
//! Wavefunctions are propagated with spectral split-step schemes and pushed
//! through the Madelung map, where continuity and Hamilton–Jacobi residuals,
//! functional Poisson brackets and a set of linearity and reversibility
//! stress tests are evaluated.

// `!(x > 0.0)` rejects NaN along with non-positive values; index loops read
// closer to the stencils than iterator chains.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod brackets;
pub mod error;
pub mod fields;
pub mod functionals;
pub mod grid;
pub mod propagate;
pub mod residuals;
pub mod states;
pub mod stresstests;

pub use error::{Error, Result};
pub use fields::{PhysicalConstants, WaveField};
pub use grid::{make_grid, Grid};
