//! Dual-map deep Q-learning navigation core.
//!
//! Everything in this crate is pure computation over owned values: the
//! 10×10 decision map and the global exploration map, a procedural world
//! simulator with a synthetic grayscale camera, a fixed-architecture
//! double-input Q-network with hand-written backpropagation and Adam, the
//! DQN / double-DQN / extended double-DQN learners, and the mission and
//! decay-experiment harness. File formats and the CLI live in the `navq`
//! companion crate.

#![no_std]

#[cfg(test)]
extern crate std;

extern crate alloc;

pub mod agents;
pub mod error;
pub mod eval;
pub mod gridmap;
pub mod math;
pub mod neuralnet;
pub mod rng;
pub mod worldsim;

pub use error::{Error, Result};
pub use gridmap::{Action, CellState, ConstraintClass, GlobalMap, GridCoord, LocalMap, Reward};
