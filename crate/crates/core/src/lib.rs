//! Simulation and learning toolkit for collision-free gathering and
//! mutual-visibility patterns in swarms of fat, opaque robots.
//!
//! * [`geometry`]: disk occlusion, mutual visibility, sensor census.
//! * [`env`]: the swarm MDP and its reward signals.
//! * [`nn`]: small MLPs with analytic gradients, Gaussian policy, checkpoints.
//! * [`ppo`]: clipped PPO training.
//! * [`discovery`]: base/auxiliary policy chains and pattern validation.
//! * [`oracle`]: brute-force references for the geometry.

pub mod config;
pub mod discovery;
pub mod env;
pub mod geometry;
pub mod nn;
pub mod oracle;
pub mod ppo;
pub mod seeds;

pub use env::{GoalSpec, InitialConfig, InitialKind, RewardMode, SwarmConfig, SwarmEnv, SwarmState};
pub use geometry::{Disk, OcclusionVerdict, Vec2};
