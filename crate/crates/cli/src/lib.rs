//! Configuration, serialization, and subcommands for the contour simulator.

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod io;

pub use config::{ConfigError, SimConfig};
