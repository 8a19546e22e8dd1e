//! File formats, rendering and the command-line front end for `navq-core`.
//!
//! World, global-map, checkpoint and report documents are JSON; training
//! logs, mission tables and decay summaries are CSV; route traces are SVG
//! and camera frames binary PGM.

pub mod cli;
pub mod commands;
pub mod config;
pub mod formats;
pub mod render;
pub mod tables;

pub use config::{MissionSelection, RunConfig};
