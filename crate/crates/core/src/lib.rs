//! Numerical toolkit for a small compact set in `R^{2n}` that cannot be
//! squeezed into the symplectic cylinder, and for lower bounds on regular
//! coisotropic capacities of the ball.
//!
//! The crate builds the Lagrangian `L̃ = √2·U·L` and the sphere map `u` whose
//! union is the set `X`, computes action spectra and their products, measures
//! sampled sets (box-counting dimension, containment, shadows), constructs
//! area-preserving planar embeddings by Moser's method, and integrates
//! Hamiltonian flows for displacement-energy experiments.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;
pub mod smooth;
pub mod symplectic;
pub mod lagrangian;
pub mod spectrum;
pub mod cone;
pub mod analysis;
pub mod io;
pub mod moser;
pub mod squeeze;
pub mod hamiltonian;

pub use error::{Error, Result};
