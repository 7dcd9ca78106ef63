//! Configuration, pipelines and file emitters behind the `rqt` binary.

// `!(a > b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod plot;

pub use commands::Outcome;
pub use config::{Overrides, RunConfig};
pub use error::CliError;
pub use pipeline::Problem;

/// Built-in configuration for figure 1, 2 or 3.
pub fn preset(figure: u8) -> Option<&'static str> {
    match figure {
        1 => Some(include_str!("../presets/fig1.toml")),
        2 => Some(include_str!("../presets/fig2.toml")),
        3 => Some(include_str!("../presets/fig3.toml")),
        _ => None,
    }
}
