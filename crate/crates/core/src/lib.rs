//! Two-type diffusion-limited annihilating systems (DLAS).
//!
//! A-particles and B-particles perform continuous-time random walks at rates
//! `lambda_a` and `lambda_b`; when particles of opposite type meet, both are
//! destroyed. This crate holds the simulation engines, the coupled
//! constructions used to compare systems pathwise, the exact distributional
//! recursion on the directed regular tree, and the closed-form bounds used in
//! one dimension. It is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod couplings;
pub mod engine;
mod error;
pub mod graph;
pub mod math;
pub mod queue;
pub mod rng;
pub mod table;
pub mod tree;

pub use error::{Error, Result};
pub use graph::{Graph, GraphSpec, Move, Site};
