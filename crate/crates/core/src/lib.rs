//! Proximal calculus on Riemannian manifolds.
//!
//! The crate is organized bottom-up:
//!
//! * [`manifold`]: concrete manifolds with exponential/log maps, distances,
//!   parallel transport and cut-locus classification.
//! * [`calculus`]: scalar fields, proximal subgradient certificates,
//!   subdifferential probing, and the density / mean-value searches.
//! * [`envelope`]: Moreau–Yosida envelopes, the Borwein–Preiss perturbation
//!   procedure and nearest points of closed sets.
//! * [`solvers`]: decrease and solvability checks, circumcenters, K-constant
//!   certification and fixed-point solvers for perturbed maps.
//! * [`harness`]: the scenario registry, run records and report export used
//!   by the `rprox` binary.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod envelope;
pub mod error;
pub mod harness;
pub mod manifold;
pub mod optim;
pub mod sampling;
pub mod solvers;

pub use error::{Error, Result};
pub use manifold::{Manifold, Point, TangentVector, Vector};
