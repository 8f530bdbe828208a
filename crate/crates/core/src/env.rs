//! The swarm MDP: world stepping, potential-difference rewards, and
//! initial-state generation.
//!
//! The state is the list of robot centers and the action is one velocity per
//! robot. The per-step reward is `C(next) - C(current)` for a composite signal
//! `C`, so an episode's return telescopes to `C(final) - C(initial)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, Vec2, VisibilityCensus};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("action has {got} components, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("could not place robot {robot} without overlap after {retries} retries")]
    PlacementFailure { robot: usize, retries: usize },
    #[error("invalid swarm configuration: {0}")]
    InvalidConfig(String),
    #[error("state contains non-finite coordinates")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    /// Gather at the origin; composite signal uses `C_close`.
    PredefinedPoint,
    /// Gather anywhere; composite signal uses `C_nclose`.
    UndefinedPoint,
}

impl RewardMode {
    /// Default sensing range for the mode: short for origin gathering,
    /// unbounded when no gathering point is given.
    pub fn default_scan_radius(self) -> Option<f64> {
        match self {
            RewardMode::PredefinedPoint => Some(6.0),
            RewardMode::UndefinedPoint => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwarmConfig {
    pub n: usize,
    pub r_bot: f64,
    /// `None` means unbounded sensing range.
    pub r_scan: Option<f64>,
    pub delta_s: f64,
    pub x_w: f64,
    pub y_w: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub dt: f64,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        Self {
            n: 4,
            r_bot: 1.0,
            r_scan: Some(6.0),
            delta_s: 3.0,
            x_w: 20.0,
            y_w: 20.0,
            v_min: -0.5,
            v_max: 0.5,
            dt: 1.0,
        }
    }
}

impl SwarmConfig {
    pub fn with_n(n: usize) -> Self {
        Self {
            n,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |msg: &str| Err(EnvError::InvalidConfig(msg.to_string()));
        let finite = [self.r_bot, self.delta_s, self.x_w, self.y_w, self.v_min, self.v_max, self.dt];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("all numeric fields must be finite");
        }
        if self.n == 0 {
            return bad("swarm must contain at least one robot");
        }
        if !(self.r_bot > 0.0 && 2.0 * self.r_bot <= self.delta_s) {
            return bad("require 0 < 2*r_bot <= delta_s");
        }
        if self.v_min >= self.v_max {
            return bad("require v_min < v_max");
        }
        if self.x_w <= 2.0 * self.r_bot || self.y_w <= 2.0 * self.r_bot {
            return bad("world half-extents must exceed 2*r_bot");
        }
        if self.dt <= 0.0 {
            return bad("dt must be positive");
        }
        if let Some(r) = self.r_scan {
            if !(r > 0.0) {
                return bad("r_scan must be positive");
            }
        }
        Ok(())
    }

    /// Distance from the origin to a world corner.
    pub fn half_diagonal(&self) -> f64 {
        self.x_w.hypot(self.y_w)
    }

    /// Clamps a center into the box that keeps the whole body inside the world.
    pub fn clamp_center(&self, p: Vec2) -> Vec2 {
        Vec2::new(
            p.x.clamp(-self.x_w + self.r_bot, self.x_w - self.r_bot),
            p.y.clamp(-self.y_w + self.r_bot, self.y_w - self.r_bot),
        )
    }

    pub fn center_in_bounds(&self, p: Vec2) -> bool {
        p.x.abs() <= self.x_w - self.r_bot && p.y.abs() <= self.y_w - self.r_bot
    }

    pub fn action_dim(&self) -> usize {
        2 * self.n
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmState {
    pub positions: Vec<Vec2>,
    pub step_index: usize,
}

impl SwarmState {
    pub fn new(positions: Vec<Vec2>) -> Self {
        Self {
            positions,
            step_index: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.positions.len()
    }

    pub fn is_finite(&self) -> bool {
        self.positions.iter().all(|p| p.is_finite())
    }

    pub fn census(&self, cfg: &SwarmConfig) -> VisibilityCensus {
        geometry::visibility_census(&self.positions, cfg.r_bot, cfg.r_scan)
    }

    pub fn collision_pairs(&self, cfg: &SwarmConfig) -> Vec<(usize, usize)> {
        geometry::collision_pairs(&self.positions, cfg.r_bot)
    }

    pub fn mutually_visible(&self, i: usize, j: usize, cfg: &SwarmConfig) -> Result<bool, geometry::GeometryError> {
        geometry::mutually_visible(&self.positions, cfg.r_bot, i, j)
    }

    /// The same positions with the step counter reset to zero.
    pub fn restarted(&self) -> Self {
        Self::new(self.positions.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmAction {
    pub velocities: Vec<Vec2>,
}

impl SwarmAction {
    /// Interprets `flat` as `[vx_0, vy_0, vx_1, vy_1, ...]`.
    pub fn from_flat(flat: &[f64], n: usize) -> Result<Self, EnvError> {
        if flat.len() != 2 * n {
            return Err(EnvError::DimensionMismatch {
                expected: 2 * n,
                got: flat.len(),
            });
        }
        let velocities = flat.chunks_exact(2).map(|c| Vec2::new(c[0], c[1])).collect();
        Ok(Self { velocities })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            velocities: vec![Vec2::ZERO; n],
        }
    }

    pub fn clamped(&self, cfg: &SwarmConfig) -> Self {
        let c = |v: f64| v.clamp(cfg.v_min, cfg.v_max);
        Self {
            velocities: self.velocities.iter().map(|v| Vec2::new(c(v.x), c(v.y))).collect(),
        }
    }
}

/// Normalizing weights for the five signals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalWeights {
    pub w_close: f64,
    pub w_safety: f64,
    pub w_neighbors: f64,
    pub w_visible: f64,
    pub w_nclose: f64,
}

impl SignalWeights {
    /// Each weight is the reciprocal of the largest value its summed quantity
    /// can take inside the world. Pair terms are zero for a single robot.
    pub fn derived(cfg: &SwarmConfig) -> Self {
        let n = cfg.n as f64;
        let ordered_pairs = n * (n - 1.0);
        let per_pair = |denom: f64| if ordered_pairs > 0.0 { 1.0 / (ordered_pairs * denom) } else { 0.0 };
        Self {
            w_close: 1.0 / (n * cfg.half_diagonal()),
            w_safety: per_pair((cfg.delta_s + cfg.r_bot).sqrt()),
            w_neighbors: per_pair(1.0),
            w_visible: per_pair(1.0),
            w_nclose: per_pair(2.0 * cfg.half_diagonal()),
        }
    }
}

/// `1 - w_close * sum ||P_n||`.
pub fn signal_close(state: &SwarmState, weights: &SignalWeights) -> f64 {
    let total: f64 = state.positions.iter().map(|p| p.norm()).sum();
    1.0 - weights.w_close * total
}

/// Per-pair safety measure. Zero below the safe distance, peaks at the safe
/// distance and decays to zero at `2*delta_s + r_bot`.
pub fn f_safe(dist: f64, cfg: &SwarmConfig) -> f64 {
    let f_d = dist - cfg.delta_s;
    if f_d < 0.0 {
        0.0
    } else {
        (cfg.delta_s + cfg.r_bot - f_d).max(0.0).sqrt()
    }
}

/// Sum of [`f_safe`] over ordered pairs.
pub fn signal_safety(state: &SwarmState, weights: &SignalWeights, cfg: &SwarmConfig) -> f64 {
    let p = &state.positions;
    let mut total = 0.0;
    for i in 0..p.len() {
        for j in (i + 1)..p.len() {
            total += 2.0 * f_safe(p[i].distance(p[j]), cfg);
        }
    }
    weights.w_safety * total
}

pub fn signal_neighbors(census: &VisibilityCensus, weights: &SignalWeights) -> f64 {
    weights.w_neighbors * census.total_all() as f64
}

pub fn signal_visible(census: &VisibilityCensus, weights: &SignalWeights) -> f64 {
    weights.w_visible * census.total_visible() as f64
}

/// `1 - w_nclose * sum ||P_i - P_j||` over ordered pairs.
pub fn signal_nclose(state: &SwarmState, weights: &SignalWeights) -> f64 {
    let p = &state.positions;
    let mut total = 0.0;
    for i in 0..p.len() {
        for j in (i + 1)..p.len() {
            total += 2.0 * p[i].distance(p[j]);
        }
    }
    1.0 - weights.w_nclose * total
}

/// The four signals that make up a composite reward signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalBreakdown {
    /// `C_close` or `C_nclose` depending on the mode.
    pub gathering: f64,
    pub safety: f64,
    pub neighbors: f64,
    pub visible: f64,
}

impl SignalBreakdown {
    pub fn total(&self) -> f64 {
        self.gathering + self.safety + self.neighbors + self.visible
    }
}

pub fn signal_breakdown(
    state: &SwarmState,
    mode: RewardMode,
    weights: &SignalWeights,
    cfg: &SwarmConfig,
) -> SignalBreakdown {
    let census = state.census(cfg);
    let gathering = match mode {
        RewardMode::PredefinedPoint => signal_close(state, weights),
        RewardMode::UndefinedPoint => signal_nclose(state, weights),
    };
    SignalBreakdown {
        gathering,
        safety: signal_safety(state, weights, cfg),
        neighbors: signal_neighbors(&census, weights),
        visible: signal_visible(&census, weights),
    }
}

pub fn composite_signal(
    state: &SwarmState,
    mode: RewardMode,
    weights: &SignalWeights,
    cfg: &SwarmConfig,
) -> f64 {
    signal_breakdown(state, mode, weights, cfg).total()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepStatus {
    Running,
    /// At least one pair of robots overlaps. Ends the episode.
    FailureTerminal,
    HorizonTruncated,
}

impl StepStatus {
    pub fn is_done(self) -> bool {
        self != StepStatus::Running
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next_state: SwarmState,
    pub reward: f64,
    pub status: StepStatus,
    /// Composite signal of `next_state`.
    pub signal: f64,
}

/// Gathering target for [`goal_reached`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalSpec {
    pub radius: f64,
}

impl GoalSpec {
    pub fn default_for(cfg: &SwarmConfig) -> Self {
        Self {
            radius: cfg.n as f64 * (2.0 * cfg.r_bot + cfg.delta_s),
        }
    }
}

/// Immutable environment description. Stepping is a pure function of the
/// state and action, so one `SwarmEnv` can be shared by many rollout workers.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmEnv {
    pub cfg: SwarmConfig,
    pub mode: RewardMode,
    pub weights: SignalWeights,
    pub horizon: usize,
}

impl SwarmEnv {
    pub fn new(cfg: SwarmConfig, mode: RewardMode, horizon: usize) -> Result<Self, EnvError> {
        cfg.validate()?;
        let weights = SignalWeights::derived(&cfg);
        Ok(Self {
            cfg,
            mode,
            weights,
            horizon,
        })
    }

    pub fn with_horizon(&self, horizon: usize) -> Self {
        Self {
            horizon,
            ..self.clone()
        }
    }

    pub fn signal(&self, state: &SwarmState) -> f64 {
        composite_signal(state, self.mode, &self.weights, &self.cfg)
    }

    pub fn step(&self, state: &SwarmState, action: &[f64]) -> Result<StepOutcome, EnvError> {
        let current = self.signal(state);
        self.step_from(state, current, action)
    }

    /// Like [`SwarmEnv::step`] with the composite signal of `state` already
    /// known.
    pub fn step_from(
        &self,
        state: &SwarmState,
        current_signal: f64,
        action: &[f64],
    ) -> Result<StepOutcome, EnvError> {
        let n = state.n();
        if action.len() != 2 * n {
            return Err(EnvError::DimensionMismatch {
                expected: 2 * n,
                got: action.len(),
            });
        }
        let cfg = &self.cfg;
        let positions = state
            .positions
            .iter()
            .zip(action.chunks_exact(2))
            .map(|(p, v)| {
                let v = Vec2::new(v[0].clamp(cfg.v_min, cfg.v_max), v[1].clamp(cfg.v_min, cfg.v_max));
                cfg.clamp_center(*p + v * cfg.dt)
            })
            .collect();
        let next_state = SwarmState {
            positions,
            step_index: state.step_index + 1,
        };
        if !next_state.is_finite() {
            return Err(EnvError::NonFinite);
        }
        let signal = self.signal(&next_state);
        let status = if geometry::has_collision(&next_state.positions, cfg.r_bot) {
            StepStatus::FailureTerminal
        } else if next_state.step_index >= self.horizon {
            StepStatus::HorizonTruncated
        } else {
            StepStatus::Running
        };
        Ok(StepOutcome {
            next_state,
            reward: signal - current_signal,
            status,
            signal,
        })
    }

    pub fn observation(&self, state: &SwarmState) -> Vec<f64> {
        observation(state, &self.cfg)
    }

    pub fn goal_reached(&self, state: &SwarmState, goal: &GoalSpec) -> bool {
        goal_reached(state, self.mode, &self.cfg, goal)
    }
}

/// Pure-function form of [`SwarmEnv::step`].
pub fn step(
    state: &SwarmState,
    action: &SwarmAction,
    mode: RewardMode,
    weights: &SignalWeights,
    cfg: &SwarmConfig,
    horizon: usize,
) -> Result<StepOutcome, EnvError> {
    let flat: Vec<f64> = action.velocities.iter().flat_map(|v| [v.x, v.y]).collect();
    let env = SwarmEnv {
        cfg: cfg.clone(),
        mode,
        weights: *weights,
        horizon,
    };
    env.step(state, &flat)
}

/// Positions scaled by the world half-extents, `[x_0/x_w, y_0/y_w, ...]`.
pub fn observation(state: &SwarmState, cfg: &SwarmConfig) -> Vec<f64> {
    state
        .positions
        .iter()
        .flat_map(|p| [p.x / cfg.x_w, p.y / cfg.y_w])
        .collect()
}

/// Collision-free, fully mutually visible, and gathered within the goal
/// radius (around the origin, or as maximum pairwise spread).
pub fn goal_reached(state: &SwarmState, mode: RewardMode, cfg: &SwarmConfig, goal: &GoalSpec) -> bool {
    let p = &state.positions;
    if geometry::has_collision(p, cfg.r_bot) {
        return false;
    }
    let gathered = match mode {
        RewardMode::PredefinedPoint => p.iter().all(|c| c.norm() <= goal.radius),
        RewardMode::UndefinedPoint => {
            (0..p.len()).all(|i| ((i + 1)..p.len()).all(|j| p[i].distance(p[j]) <= goal.radius))
        }
    };
    if !gathered {
        return false;
    }
    (0..p.len()).all(|i| {
        ((i + 1)..p.len()).all(|j| geometry::sees_fully(p, cfg.r_bot, i, j) && geometry::sees_fully(p, cfg.r_bot, j, i))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    /// Evenly spaced on a circle around the origin.
    Scattered,
    /// Split into two groups near opposite corners.
    Distributed,
    /// Tightly spaced rows of at most six robots.
    Packed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialConfig {
    pub kind: InitialKind,
    /// Half-width of the uniform noise added to each anchor coordinate.
    pub epsilon: f64,
    pub seed: u64,
}

/// Maximum number of fresh noise draws per robot before giving up.
pub const PLACEMENT_RETRIES: usize = 100;

/// Robots per row in the packed layout.
const PACKED_ROW: usize = 6;

/// Noise-free anchor points for a layout.
pub fn anchors(kind: InitialKind, cfg: &SwarmConfig) -> Vec<Vec2> {
    let n = cfg.n;
    match kind {
        InitialKind::Scattered => {
            let radius = 0.9 * cfg.x_w.min(cfg.y_w);
            (0..n)
                .map(|i| {
                    let theta = std::f64::consts::TAU * i as f64 / n as f64;
                    Vec2::new(radius * theta.cos(), radius * theta.sin())
                })
                .collect()
        }
        InitialKind::Distributed => {
            let first = n.div_ceil(2);
            let pitch = 2.0 * cfg.r_bot + cfg.delta_s;
            let inset = cfg.r_bot + cfg.delta_s;
            let corner = Vec2::new(-cfg.x_w + inset, -cfg.y_w + inset);
            let grid = |count: usize| -> Vec<Vec2> {
                let cols = (count as f64).sqrt().ceil().max(1.0) as usize;
                (0..count)
                    .map(|k| Vec2::new((k % cols) as f64 * pitch, (k / cols) as f64 * pitch))
                    .collect()
            };
            let mut out: Vec<Vec2> = grid(first).into_iter().map(|o| corner + o).collect();
            out.extend(grid(n - first).into_iter().map(|o| -(corner + o)));
            out
        }
        InitialKind::Packed => {
            let pitch = 2.0 * cfg.r_bot + cfg.delta_s / 2.0;
            let rows = n.div_ceil(PACKED_ROW);
            let center = Vec2::new(0.0, -0.5 * cfg.y_w);
            let mut out = Vec::with_capacity(n);
            for row in 0..rows {
                let in_row = (n - row * PACKED_ROW).min(PACKED_ROW);
                let y = center.y - (row as f64 - (rows - 1) as f64 / 2.0) * pitch;
                for k in 0..in_row {
                    let x = center.x + (k as f64 - (in_row - 1) as f64 / 2.0) * pitch;
                    out.push(Vec2::new(x, y));
                }
            }
            out
        }
    }
}

/// Draws one initial state: anchors plus independent `U(-eps, eps)` noise on
/// each coordinate. A robot that lands on an already placed robot gets a new
/// noise draw.
pub fn sample_initial_state<R: Rng + ?Sized>(
    kind: InitialKind,
    epsilon: f64,
    cfg: &SwarmConfig,
    rng: &mut R,
) -> Result<SwarmState, EnvError> {
    cfg.validate()?;
    let mut placed: Vec<Vec2> = Vec::with_capacity(cfg.n);
    for (robot, anchor) in anchors(kind, cfg).into_iter().enumerate() {
        let mut attempt = 0;
        let pos = loop {
            let noise = if epsilon > 0.0 {
                Vec2::new(rng.random_range(-epsilon..=epsilon), rng.random_range(-epsilon..=epsilon))
            } else {
                Vec2::ZERO
            };
            let candidate = cfg.clamp_center(anchor + noise);
            let clear = placed
                .iter()
                .all(|q| q.distance(candidate) >= 2.0 * cfg.r_bot - geometry::TANGENCY_TOL);
            if clear {
                break candidate;
            }
            attempt += 1;
            if attempt > PLACEMENT_RETRIES || epsilon == 0.0 {
                return Err(EnvError::PlacementFailure {
                    robot,
                    retries: attempt - 1,
                });
            }
        };
        placed.push(pos);
    }
    Ok(SwarmState::new(placed))
}

/// Deterministic reset from the seed stored in `init`.
pub fn reset(init: &InitialConfig, cfg: &SwarmConfig) -> Result<SwarmState, EnvError> {
    let mut rng = ChaCha8Rng::seed_from_u64(init.seed);
    sample_initial_state(init.kind, init.epsilon, cfg, &mut rng)
}
