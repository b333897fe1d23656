//! The Diner Dash restaurant MDP: six tables, a seven-slot waiting queue and one waitress.

pub mod action;
pub mod config;
pub mod env;
pub mod state;

pub use action::{Action, NUM_ACTIONS};
pub use config::{EnvConfig, Rewards, NUM_TABLES, QUEUE_SLOTS};
pub use env::{Env, Event, StepInfo, StepResult};
pub use state::{decode, layout, EnvState, Hands, Observation, Stage, StateVec, STATE_DIM};
