//! Knockoff variable selection with composite null hypotheses
//! (`|β_j| ≤ δ` or `β_j ≤ δ`) in fixed-design Gaussian linear models.
//!
//! The pipeline is: build knockoffs for a column-normalized design
//! ([`knockoff`]), estimate coefficients for the augmented design
//! ([`estimators`]), form antisymmetric statistics and select with the
//! knockoff+ threshold ([`inference`]). [`pipeline`] ties these together per
//! method, [`simbench`] runs synthetic experiments and [`cli`] is the
//! command-line front end.

pub mod cli;
pub mod error;
pub mod estimators;
pub mod inference;
pub mod knockoff;
pub mod linalg;
pub mod pipeline;
pub mod simbench;

pub use error::{Error, Result};
pub use knockoff::{build_knockoffs, KnockoffModel, SVariant};
pub use linalg::{Matrix, SymmetricMatrix};
pub use pipeline::{run_method, MethodSpec, SelectionContext};
