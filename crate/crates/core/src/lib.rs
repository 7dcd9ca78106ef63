//! Relativistic quantum trajectories of a spinless particle in one
//! dimension.
//!
//! Pipeline: a Klein–Gordon solution pair ([`klein_gordon`]) gives the
//! reduced action and conjugate momentum ([`reduced_action`]); the law of
//! motion ẋ P = E − V − m0²c⁴/(E − V) then yields trajectories
//! ([`trajectory`]), which [`analysis`] inspects for nodes, de Broglie
//! wavelengths and residuals of the third-order equation of motion.

// `!(a > b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod export;
pub mod klein_gordon;
pub mod model;
pub mod numerics;
pub mod potential;
pub mod reduced_action;
pub mod setup;
pub mod trajectory;

pub use error::{Error, Result};
pub use model::Regime;
pub use numerics::Grid;
pub use potential::Potential;
pub use setup::{Direction, HiddenParams, PhysicalSetup};
