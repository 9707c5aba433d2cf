//! Discrete weak-membrane, spin and elastic lattice energies with
//! space-dependent truncation coefficients, and numerical evaluation of the
//! homogenized surface and bulk densities through finite cell problems.
//!
//! * [`lattice`]: geometry, coefficient fields, lattice functions.
//! * [`energies`]: `F_eps`, `E_eps`, `H_eps`, fidelity and cut-off blending.
//! * [`spin_cell`]: surface density `phi(nu)` via exact minimum cuts.
//! * [`elastic_cell`]: bulk densities via the quadratic cell problem.
//! * [`membrane`]: weak-membrane minimization, thresholding, maximal
//!   function and Lipschitz truncation.

pub mod cell;
pub mod elastic_cell;
pub mod energies;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod maxflow;
pub mod membrane;
pub mod par;
pub mod spin_cell;
pub mod verify;

pub use error::{Error, Result};
