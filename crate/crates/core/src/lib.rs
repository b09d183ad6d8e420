//! Economically optimal sample sizes under publication incentives.
//!
//! A study's expected income is `IF · TPR(s)`, where `TPR` is the rate of
//! publishable (significant) outcomes at per-group sample size `s`, and its
//! cost is `s`. The profit-maximizing `s` is the equilibrium sample size
//! (ESS). This crate computes ESS together with power, publishable rate and
//! positive predictive value at that optimum, optionally under conditional
//! equivalence testing, and aggregates them over sampled populations of
//! research niches. A Monte Carlo simulator of actual t-tests checks every
//! analytic rate.
//!
//! Modules, bottom-up:
//! - [`numerics`]: t-test and TOST power from the noncentral t distribution
//! - [`model`]: profit curves, ESS/SSS extraction, sweeps
//! - [`montecarlo`]: simulated studies as an independent oracle
//! - [`scenarios`]: sampled parameter populations and emergent power
//! - [`cli`]: the `esslab` command-line front end

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod numerics;
pub mod output;
pub mod rng;
pub mod scenarios;
pub mod special;

pub use error::Error;
pub use model::{CetParams, EquilibriumResult, ModelParams, ProfitCurve, SampleGrid};
pub use numerics::{compute_power, compute_tost_power, noncentral_t_cdf, Design, PowerQuery, TostQuery};
