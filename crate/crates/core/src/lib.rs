//! Ensemble inference for age-structured rotavirus transmission models.
//!
//! Five compartmental model variants are fitted to weekly age-stratified
//! case counts by Metropolis-Hastings under a negative binomial observation
//! model, combined by BIC-weighted model averaging, and projected forward
//! under two-dose vaccination.

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::too_many_arguments
)]
#![cfg_attr(test, allow(clippy::field_reassign_with_default))]

pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod inference;
pub mod io;
pub mod metrics;
pub mod model;
pub mod observation;
pub mod par;
pub mod pipeline;
pub mod solver;

pub use error::{Error, Result};
