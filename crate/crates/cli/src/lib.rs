//! Experiment harness behind the `swarm` binary.

pub mod commands;
pub mod metrics;
pub mod presets;
pub mod render;
