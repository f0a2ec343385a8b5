//! Power-efficient joint user scheduling and power allocation for C-RAN
//! downlinks.
//!
//! A cloud radio access network splits radio heads from a centralized
//! processing pool. Serving a user request means picking a slot and
//! subcarrier, activating a subset of radio heads, meeting a minimum SINR
//! with as little transmit power as possible, and paying for the compute the
//! request occupies in the pool - all before the request's deadline expires.
//!
//! This crate provides:
//!
//! - [`model`]: domain types, SINR evaluation, and constraint validation;
//! - [`cost`]: weighted power accounting for radio heads and the pool;
//! - [`scenario`]: seeded random instance generation;
//! - [`lp`]: the exact per-slot power-control LP;
//! - [`dp`]: the optimal finite-horizon solver with a brute-force oracle;
//! - [`greedy`]: the polynomial-time two-phase online scheduler;
//! - [`baseline`]: the all-heads-on comparison heuristic;
//! - [`harness`]: Monte Carlo sweeps over scenario parameters;
//! - [`config`]: the text configuration format used by the CLI.
//!
//! The `book/` directory of the repository walks through the model and the
//! algorithms chapter by chapter; its code snippets compile against this
//! crate as doc-tests (see [`guide`]).

pub mod baseline;
pub mod config;
pub mod cost;
pub mod dp;
pub mod greedy;
pub mod guide;
pub mod harness;
pub mod lp;
pub mod model;
pub mod scenario;
