//! Decomposition of wind-fleet output into turbine count, rotor size,
//! available wind power and conversion efficiency.
//!
//! Entry points: [`fleet::preprocess`], [`powerflux::PinEngine`],
//! [`decomp::multiplicative_decomposition`] and [`pipeline::run_pipeline`].

// `!(x > 0.0)` is used deliberately so NaN fails positivity checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calendar;
pub mod config;
pub mod decomp;
pub mod error;
pub mod fleet;
pub mod pipeline;
pub mod plots;
pub mod powerflux;
pub mod series;
pub mod sum;
pub mod synth;
pub mod trends;
pub mod validate;
pub mod windgrid;

pub use error::{Error, Result};

// Book chapters are compiled as doctests so their snippets stay current.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/overview.md")]
    mod overview {}
    #[doc = include_str!("../../../book/src/fleet.md")]
    mod fleet {}
    #[doc = include_str!("../../../book/src/windgrid.md")]
    mod windgrid {}
    #[doc = include_str!("../../../book/src/input-power.md")]
    mod input_power {}
    #[doc = include_str!("../../../book/src/decomposition.md")]
    mod decomposition {}
    #[doc = include_str!("../../../book/src/trends.md")]
    mod trends {}
    #[doc = include_str!("../../../book/src/validation.md")]
    mod validation {}
    #[doc = include_str!("../../../book/src/synthetic.md")]
    mod synthetic {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
