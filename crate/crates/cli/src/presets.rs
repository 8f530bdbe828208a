//! The six reference experiments.

use swarm_core::config::ExperimentConfig;
use swarm_core::{InitialKind, RewardMode, SwarmConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub id: &'static str,
    pub swarm_size: usize,
    pub reward_mode: RewardMode,
    pub initial_kind: InitialKind,
}

pub const PRESETS: [ExperimentSpec; 6] = [
    ExperimentSpec {
        id: "A",
        swarm_size: 6,
        reward_mode: RewardMode::PredefinedPoint,
        initial_kind: InitialKind::Packed,
    },
    ExperimentSpec {
        id: "B",
        swarm_size: 8,
        reward_mode: RewardMode::PredefinedPoint,
        initial_kind: InitialKind::Scattered,
    },
    ExperimentSpec {
        id: "C",
        swarm_size: 10,
        reward_mode: RewardMode::PredefinedPoint,
        initial_kind: InitialKind::Distributed,
    },
    ExperimentSpec {
        id: "D",
        swarm_size: 6,
        reward_mode: RewardMode::UndefinedPoint,
        initial_kind: InitialKind::Packed,
    },
    ExperimentSpec {
        id: "E",
        swarm_size: 8,
        reward_mode: RewardMode::UndefinedPoint,
        initial_kind: InitialKind::Scattered,
    },
    ExperimentSpec {
        id: "F",
        swarm_size: 10,
        reward_mode: RewardMode::UndefinedPoint,
        initial_kind: InitialKind::Distributed,
    },
];

/// Case-insensitive lookup.
pub fn preset(id: &str) -> Option<&'static ExperimentSpec> {
    PRESETS.iter().find(|p| p.id.eq_ignore_ascii_case(id))
}

impl ExperimentSpec {
    /// Default world with this experiment's size, mode and layout. The scan
    /// radius follows the reward mode.
    pub fn config(&self) -> ExperimentConfig {
        let swarm = SwarmConfig {
            r_scan: self.reward_mode.default_scan_radius(),
            ..SwarmConfig::with_n(self.swarm_size)
        };
        ExperimentConfig::new(&swarm, self.reward_mode, self.initial_kind)
    }
}
