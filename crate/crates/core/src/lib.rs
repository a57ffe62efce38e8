//! Weather-dependent transmission line ratings and hourly N−1
//! security-constrained DC optimal power flow.
//!
//! The crate is organised as a pipeline:
//!
//! - [`network`] loads buses, branches, generators and hourly series.
//! - [`geo`] projects coordinates and measures conductor and wind angles.
//! - [`weather`] holds gridded hourly weather with nearest-cell lookup.
//! - [`rating`] turns weather into SLR, AAR and DLR limits.
//! - [`factors`] computes PTDF and LODF matrices.
//! - [`dispatch`] builds and solves single-hour DC-OPF linear programs.
//! - [`scopf`] adds post-contingency rows by screening until N−1 secure.
//! - [`pipeline`] runs many hours and regimes in parallel and reports.
//!
//! [`lp`] is the bounded-variable simplex used by the dispatch layer.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dispatch;
pub mod factors;
pub mod geo;
pub mod lp;
pub mod network;
pub mod pipeline;
pub mod rating;
pub mod scopf;
pub mod weather;
