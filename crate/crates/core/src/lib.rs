//! Sparsified simultaneous confidence intervals (SSCI) and model confidence
//! bounds (MCB) for high-dimensional linear regression.
//!
//! The pipeline: select a model with a stable selector (SPSP over a penalized
//! solution path, or cross-validation), refit it by least squares, residual
//! bootstrap the two-stage estimator, trim the most outlying bootstrap
//! estimates, and take coordinatewise min/max over the retained draws. The
//! intervals are sparse: covariates never selected by a retained draw collapse
//! to `[0, 0]`, and the significant/plausible split induces a lower and upper
//! bound model trapping the truth.
//!
//! Module map:
//!
//! - [`data`]: dataset representation, CSV/JSON ingestion, standardization,
//!   least-squares solves
//! - [`path`]: pathwise coordinate descent for lasso, adaptive lasso, SCAD,
//!   and MCP with KKT verification
//! - [`select`]: SPSP path partitioning, cross-validated selectors, and the
//!   two-stage (select + refit) estimator
//! - [`bootstrap`]: deterministic residual bootstrap ensembles
//! - [`ssci`]: interval construction, covariate classification, model
//!   confidence bounds, and the Bonferroni oracle reference
//! - [`sim`]: data-generating processes and the Monte-Carlo study driver
//!
//! Bootstrap replicates and Monte-Carlo replicates are data-parallel; the
//! `parallel` feature (on by default) runs them on a rayon pool. Disabling it
//! yields a dependency-free sequential build with bit-identical results.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod bootstrap;
pub mod data;
pub mod error;
pub mod par;
pub mod path;
pub mod rng;
pub mod select;
pub mod sim;
pub mod ssci;

pub use error::{Error, Result};
