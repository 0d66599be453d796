//! Solvers for media strategies — a signal function paired with a causal
//! narrative — chosen to maximize consumers' anticipatory utility.
//!
//! Consumers observe signals, adopt the supplied narrative (a causal model
//! naming which of {state, action} drive the outcome), fit it to the
//! long-run joint distribution their own behavior generates, and act to
//! maximize the resulting subjective value. The library models this loop,
//! enumerates consumer equilibria, and optimizes the media's choice for
//! homogeneous populations, screened menus, competitive markets, and mixed
//! rational/non-rational populations.

pub mod error;
pub mod model;
pub mod scenarios;
pub mod equilibrium;
pub mod optimizer;
pub mod generator;
pub mod typedist;
pub mod menu;
pub mod competitive;
pub mod mix;
pub mod serialize;

pub use error::{ModelError, Result};
