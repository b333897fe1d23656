//! Diner Dash: a restaurant-management MDP with a 57-way discrete action space, a scripted
//! expert, decomposed factor-graph imitation policies (DPGM), a behaviour-cloning baseline
//! and an evaluation harness.

pub mod baselines;
pub mod dpgm;
pub mod error;
pub mod expert;
pub mod harness;
pub mod nn;
pub mod policy;
pub mod rng;
pub mod sim;
pub mod trajectory;

pub use error::{Error, Result};
