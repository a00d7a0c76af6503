//! Symbolic and numerical engine for the resolvent algebra of a
//! finite-dimensional symplectic space.
//!
//! * [`symplectic`]: spaces `(X, σ)` and test vectors.
//! * [`expr`]: noncommutative expressions in `R(z, f)`, parser, printer and a
//!   terminating simplifier.
//! * [`fock`]: truncated Fock representation, resolvent matrices, expression
//!   evaluation, compression and Schur-constant extraction.
//! * [`verify`]: residual checks with a truncation-convergence protocol.
//! * [`cohomology`]: cocycle extraction, coboundary solving and improved
//!   generator families.
//! * [`config`]: JSON configuration shared by the suite and the pipeline.

// Tolerance checks are written `!(x <= tol)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cohomology;
pub mod config;
pub mod expr;
pub mod fock;
pub mod symplectic;
pub mod verify;

pub use num_complex::Complex64;
