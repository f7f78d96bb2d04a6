//! Conditional independence testing with the maximal nonlinear conditional
//! correlation (MNCC).
//!
//! The crate estimates `ρ(z)`, the largest nontrivial canonical correlation
//! between histogram-basis expansions of `X` and `Y` under kernel weights
//! centred at `Z = z`, aggregates it over an evaluation grid into the
//! statistic `T = n hᵈ c_K Σ_k f̂_Z(z_k) ρ̂²(z_k)`, and calibrates `T`
//! against a Monte-Carlo null law, its normal approximation, or a local
//! bootstrap.

// `!(x > y)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod basis;
pub mod bootstrap;
pub mod cli;
pub mod error;
pub mod io;
pub mod kernel;
pub mod linalg;
pub mod mncc;
pub mod nulldist;
pub mod quad;
pub mod rng;
pub mod sample;
pub mod simulate;
pub mod special;
pub mod teststat;
pub mod tuning;

pub use error::{MnccError, Result};
pub use sample::Sample;
