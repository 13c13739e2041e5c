//! A numerical laboratory for convex variational energies with (p,q)-growth.
//!
//! The crate discretizes energies `F(u) = ∫ F(x,Du) - f·u` on rectangular
//! domains and provides the machinery to probe their structure at desk scale:
//!
//! - [`integrand`]: density families, growth-hypothesis audits, the example
//!   library, Fenchel and V-functional helpers;
//! - [`mesh`]: simplicial meshes, piecewise-affine gradients, quadrature and
//!   norms;
//! - [`covering`]: Whitney and Whitney–Besicovitch cube families with a
//!   smooth partition of unity;
//! - [`mollify`]: kernels, the cover-weighted two-scale approximant, and its
//!   convergence diagnostics;
//! - [`solver`]: energy minimization over Dirichlet classes and the
//!   regularization path;
//! - [`besov`]: difference-quotient seminorms and exponent bookkeeping;
//! - [`lavrentiev`]: two-class gap estimation experiments.
//!
//! See the book under `book/` for a guided tour.

pub mod error;
pub mod expr;
pub mod geometry;
pub mod integrand;
pub mod mat;

pub mod besov;
pub mod covering;
pub mod lavrentiev;
pub mod mesh;
pub mod mollify;
pub mod solver;

pub use error::{Error, Result};
