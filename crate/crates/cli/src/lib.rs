//! CLI for sparsified simultaneous confidence intervals: `fit` runs the
//! pipeline on a CSV dataset and writes a JSON report (plus optional SVG
//! plots); `simulate` runs a Monte-Carlo study on a builtin example design
//! and writes a metrics CSV with a provenance block.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
pub mod output;
pub mod plot;
