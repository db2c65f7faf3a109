//! Mission configuration (JSON).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamic::MemoryMode;
use crate::follower::KinodynamicLimits;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Greedy,
    #[serde(alias = "MADP")]
    Madp,
    #[default]
    #[serde(alias = "MADA")]
    Mada,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Greedy, Strategy::Madp, Strategy::Mada];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Greedy => "greedy",
            Strategy::Madp => "madp",
            Strategy::Mada => "mada",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "greedy" => Ok(Strategy::Greedy),
            "madp" => Ok(Strategy::Madp),
            "mada" => Ok(Strategy::Mada),
            _ => Err(ConfigError::Invalid(format!("unknown strategy {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObstacleSpeed {
    /// A third of the robot's top speed and half its turn rate.
    #[default]
    Slow,
    /// The robot's own limits.
    Fast,
}

impl ObstacleSpeed {
    pub fn name(self) -> &'static str {
        match self {
            ObstacleSpeed::Slow => "slow",
            ObstacleSpeed::Fast => "fast",
        }
    }

    /// Linear and angular speed for obstacles given the robot limits.
    pub fn profile(self, v_max: f64, w_max: f64) -> (f64, f64) {
        match self {
            ObstacleSpeed::Slow => (v_max / 3.0, w_max / 2.0),
            ObstacleSpeed::Fast => (v_max, w_max),
        }
    }
}

impl fmt::Display for ObstacleSpeed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Axis-aligned rectangle in meters: `[x0, y0, x1, y1]`.
pub type Region = [f64; 4];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MissionConfig {
    pub strategy: Strategy,
    /// Density above which an area is impassable, in [0, 1].
    pub o_th: f64,
    /// Safety inflation as a multiple of the robot radius.
    pub safety_factor: f64,
    pub memory_mode: MemoryMode,
    pub projections: bool,
    /// Seconds of extrapolation when `projections` is on.
    pub projection_horizon: f64,
    /// Sensing range in meters.
    pub r_v: f64,
    pub v_max: f64,
    pub w_max: f64,
    pub dv: f64,
    pub dw: f64,
    pub robot_radius: f64,
    pub control_period: f64,
    /// Mission time limit in seconds.
    pub timeout: f64,
    pub n_obstacles: usize,
    pub obstacle_speed: ObstacleSpeed,
    /// Obstacle rectangle length and width in meters.
    pub obstacle_size: [f64; 2],
    /// Robot start `[x, y, theta]`; the scenario default when absent.
    pub robot_start: Option<[f64; 3]>,
    /// Regions obstacles are spawned in; anywhere free when empty.
    pub spawn_regions: Vec<Region>,
    /// Seconds without any reachable goal before the mission is declared blocked.
    pub blocked_patience: f64,
    /// Seconds without moving more than two cells before the current
    /// target is given up.
    pub stall_patience: f64,
    /// Include wall-clock planning time in trace records.
    pub trace_timing: bool,
}

impl Default for MissionConfig {
    fn default() -> Self {
        let limits = KinodynamicLimits::default();
        Self {
            strategy: Strategy::Mada,
            o_th: 0.1,
            safety_factor: 1.5,
            memory_mode: MemoryMode::KeepPointsForgetEmptyAreas,
            projections: false,
            projection_horizon: 2.0,
            r_v: 30.0,
            v_max: limits.v_max,
            w_max: limits.w_max,
            dv: limits.dv,
            dw: limits.dw,
            robot_radius: limits.radius,
            control_period: 0.1,
            timeout: 600.0,
            n_obstacles: 0,
            obstacle_speed: ObstacleSpeed::Slow,
            obstacle_size: [0.6, 0.4],
            robot_start: None,
            spawn_regions: Vec::new(),
            blocked_patience: 20.0,
            stall_patience: 30.0,
            trace_timing: false,
        }
    }
}

impl MissionConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: MissionConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if !(0.0..=1.0).contains(&self.o_th) {
            return bad("o_th must lie in [0, 1]");
        }
        if !(self.control_period > 0.0) || !(self.timeout > 0.0) {
            return bad("control_period and timeout must be positive");
        }
        let positive = [self.v_max, self.w_max, self.dv, self.dw, self.robot_radius, self.r_v];
        if positive.iter().any(|v| !(*v > 0.0)) {
            return bad("v_max, w_max, dv, dw, robot_radius and r_v must be positive");
        }
        if !(self.safety_factor >= 0.0)
            || !(self.projection_horizon >= 0.0)
            || !(self.blocked_patience >= 0.0)
            || !(self.stall_patience > 0.0)
        {
            return bad(
                "safety_factor, projection_horizon and blocked_patience must be non-negative, stall_patience positive",
            );
        }
        if self.obstacle_size.iter().any(|v| !(*v > 0.0)) {
            return bad("obstacle_size must be positive");
        }
        if self.spawn_regions.iter().any(|r| !(r[0] < r[2] && r[1] < r[3])) {
            return bad("spawn regions must be [x0, y0, x1, y1] with x0 < x1 and y0 < y1");
        }
        Ok(())
    }

    pub fn limits(&self) -> KinodynamicLimits {
        KinodynamicLimits { v_max: self.v_max, w_max: self.w_max, dv: self.dv, dw: self.dw, radius: self.robot_radius }
    }

    /// Safety inflation in meters.
    pub fn safety(&self) -> f64 {
        self.safety_factor * self.robot_radius
    }
}
