//! Experiment configuration files.
//!
//! ```toml
//! [world]
//! x_w = 20.0
//! y_w = 20.0
//! v_min = -0.5
//! v_max = 0.5
//! dt = 1.0
//!
//! [swarm]
//! n = 4
//! r_bot = 1.0
//! r_scan = 6.0       # omit for unbounded sensing
//! delta_s = 3.0
//!
//! [reward]
//! mode = "predefined_point"   # or "undefined_point"
//! goal_radius = 20.0          # optional, defaults to N * (2 r_bot + delta_s)
//!
//! [init]
//! kind = "packed"             # scattered | distributed | packed
//! epsilon = 2.0               # optional, defaults to 2 r_bot
//!
//! [ppo]                       # HyperParams, all optional
//! epochs = 600
//!
//! [discovery]                 # DiscoveryConfig, all optional
//! schedule = [0.99, 0.90]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discovery::{DiscoveryConfig, StartSpec};
use crate::env::{EnvError, GoalSpec, InitialKind, RewardMode, SwarmConfig, SwarmEnv};
use crate::ppo::HyperParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Arena half-extents and motion limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldSection {
    pub x_w: f64,
    pub y_w: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwarmSection {
    pub n: usize,
    pub r_bot: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_scan: Option<f64>,
    pub delta_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardSection {
    pub mode: RewardMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSection {
    pub kind: InitialKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub world: WorldSection,
    pub swarm: SwarmSection,
    pub reward: RewardSection,
    pub init: InitSection,
    #[serde(default)]
    pub ppo: HyperParams,
    #[serde(default)]
    pub discovery: DiscoveryConfig,
}

impl ExperimentConfig {
    pub fn new(cfg: &SwarmConfig, mode: RewardMode, kind: InitialKind) -> Self {
        Self {
            world: WorldSection {
                x_w: cfg.x_w,
                y_w: cfg.y_w,
                v_min: cfg.v_min,
                v_max: cfg.v_max,
                dt: cfg.dt,
            },
            swarm: SwarmSection {
                n: cfg.n,
                r_bot: cfg.r_bot,
                r_scan: cfg.r_scan,
                delta_s: cfg.delta_s,
            },
            reward: RewardSection { mode, goal_radius: None },
            init: InitSection { kind, epsilon: None },
            ppo: HyperParams::default(),
            discovery: DiscoveryConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment config always serializes")
    }

    pub fn swarm_config(&self) -> SwarmConfig {
        SwarmConfig {
            n: self.swarm.n,
            r_bot: self.swarm.r_bot,
            r_scan: self.swarm.r_scan,
            delta_s: self.swarm.delta_s,
            x_w: self.world.x_w,
            y_w: self.world.y_w,
            v_min: self.world.v_min,
            v_max: self.world.v_max,
            dt: self.world.dt,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.swarm_config().validate().map_err(|e: EnvError| ConfigError::Invalid(e.to_string()))?;
        self.ppo.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.discovery.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if let Some(r) = self.reward.goal_radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(ConfigError::Invalid("goal_radius must be positive".into()));
            }
        }
        if let Some(e) = self.init.epsilon {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(ConfigError::Invalid("epsilon must be nonnegative".into()));
            }
        }
        Ok(())
    }

    pub fn goal(&self) -> GoalSpec {
        self.reward
            .goal_radius
            .map_or_else(|| GoalSpec::default_for(&self.swarm_config()), |radius| GoalSpec { radius })
    }

    pub fn start(&self) -> StartSpec {
        StartSpec {
            kind: self.init.kind,
            epsilon: self.init.epsilon.unwrap_or(2.0 * self.swarm.r_bot),
        }
    }

    /// Environment with the base training horizon.
    pub fn env(&self) -> Result<SwarmEnv, ConfigError> {
        SwarmEnv::new(self.swarm_config(), self.reward.mode, self.ppo.horizon)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[world]
x_w = 20.0
y_w = 20.0
v_min = -0.5
v_max = 0.5
dt = 1.0

[swarm]
n = 3
r_bot = 1.0
r_scan = 6.0
delta_s = 3.0

[reward]
mode = "undefined_point"

[init]
kind = "scattered"
"#;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.swarm.n, 3);
        assert_eq!(c.ppo, HyperParams::default());
        assert_eq!(c.discovery, DiscoveryConfig::default());
        assert_eq!(c.goal().radius, 15.0);
        assert_eq!(c.start().epsilon, 2.0);
        assert_eq!(c.swarm_config(), SwarmConfig::with_n(3));
        assert_eq!(ExperimentConfig::new(&SwarmConfig::with_n(3), RewardMode::UndefinedPoint, InitialKind::Scattered), c);
    }

    #[test]
    fn round_trip() {
        let mut c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        c.ppo.epochs = 3;
        c.reward.goal_radius = Some(9.0);
        c.swarm.r_scan = None;
        let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_unknown_and_invalid_fields() {
        assert!(matches!(
            ExperimentConfig::from_toml(&format!("{MINIMAL}\n[ppo]\nepochz = 3\n")),
            Err(ConfigError::Parse(_))
        ));
        assert!(matches!(
            ExperimentConfig::from_toml(&format!("{MINIMAL}\n[ppo]\ngamma = 1.5\n")),
            Err(ConfigError::Invalid(_))
        ));
        assert!(ExperimentConfig::from_toml("[swarm]\nn = 2\n").is_err());
        let negative = MINIMAL.replace("delta_s = 3.0", "delta_s = -3.0");
        assert!(matches!(ExperimentConfig::from_toml(&negative), Err(ConfigError::Invalid(_))));
    }
}
