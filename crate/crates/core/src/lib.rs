//! Execution and verification engine for hierarchical discrete-event actor
//! models with superdense time, synchronous port fixed points, modal models
//! and explicit-state LTL model checking.

#![allow(clippy::result_large_err)]

pub mod analysis;
pub mod exec;
pub mod fire;
pub mod frontend;
pub mod model;
pub mod postfire;
pub mod queue;
mod state;
#[cfg(test)]
mod testutil;

pub use state::SystemState;
