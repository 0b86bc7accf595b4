//! Actor-critic-identifier (ACI) reinforcement-learning speed controller for
//! electric vehicles.
//!
//! The controller learns a quadratic value function (critic) and policy
//! (actor) online by driving the HJB residual to zero, while a neural
//! identifier with RISE feedback estimates the unknown drift dynamics. The
//! crate also provides the plants the controller is exercised on, a PID
//! baseline, energy accounting, and the gain conditions of the stability
//! analysis.

pub mod actor;
pub mod config;
pub mod cost;
pub mod critic;
pub mod cycle;
pub mod error;
pub mod gains;
pub mod hjb;
pub mod identifier;
pub mod io;
pub mod lqr;
pub mod plant;
pub mod runner;
pub mod sim;
pub mod state;

pub use error::{Error, Result};
pub use gains::{GainConstants, GainSet, ValidationReport};
pub use state::SystemState;
