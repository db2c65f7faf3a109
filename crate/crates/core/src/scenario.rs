//! Built-in scenarios and map loading.

use std::path::Path;

use thiserror::Error;

use crate::config::{MissionConfig, Region};
use crate::grid::{GridError, GridMap, DEFAULT_RESOLUTION};

const SCENARIO_1: &str = include_str!("../scenarios/scenario-1.map");
const SCENARIO_2: &str = include_str!("../scenarios/scenario-2.map");

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read map {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("bad map {path}: {source}")]
    Map { path: String, source: GridError },
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub map: GridMap,
    /// Default robot pose `[x, y, theta]`.
    pub start: Option<[f64; 3]>,
    pub spawn_regions: Vec<Region>,
    /// Preset sensing range, mission time limit and obstacle counts.
    pub r_v: Option<f64>,
    pub timeout: Option<f64>,
    pub obstacle_counts: Vec<usize>,
}

pub const PRESET_NAMES: [&str; 2] = ["scenario-1", "scenario-2"];

/// Office-like floor, 24 m x 16 m: three rooms over a corridor over two
/// wide rooms.
pub fn scenario_1() -> Scenario {
    Scenario {
        name: "scenario-1".into(),
        map: GridMap::parse(SCENARIO_1, DEFAULT_RESOLUTION).expect("built-in map parses"),
        start: Some([2.0, 7.2, 0.0]),
        spawn_regions: vec![[0.6, 8.8, 11.6, 15.4], [12.6, 8.8, 23.4, 15.4], [4.0, 6.6, 23.4, 7.8]],
        r_v: Some(30.0),
        timeout: Some(600.0),
        obstacle_counts: vec![10, 25],
    }
}

/// Larger floor, 60 m x 40 m: two halls joined by a narrow corridor, a long
/// corridor below them and a row of side rooms.
pub fn scenario_2() -> Scenario {
    Scenario {
        name: "scenario-2".into(),
        map: GridMap::parse(SCENARIO_2, DEFAULT_RESOLUTION).expect("built-in map parses"),
        start: Some([4.0, 23.4, 0.0]),
        spawn_regions: vec![[0.6, 0.6, 23.4, 21.4], [36.6, 0.6, 59.4, 21.4], [2.0, 22.6, 58.0, 24.2]],
        r_v: Some(10.0),
        timeout: Some(2400.0),
        obstacle_counts: vec![20, 40],
    }
}

pub fn preset(name: &str) -> Option<Scenario> {
    match name {
        "scenario-1" => Some(scenario_1()),
        "scenario-2" => Some(scenario_2()),
        _ => None,
    }
}

impl Scenario {
    /// A plain map without preset defaults.
    pub fn from_map(name: impl Into<String>, map: GridMap) -> Self {
        Self {
            name: name.into(),
            map,
            start: None,
            spawn_regions: Vec::new(),
            r_v: None,
            timeout: None,
            obstacle_counts: Vec::new(),
        }
    }

    /// A preset name or a map file path.
    pub fn load(spec: &str) -> Result<Self, ScenarioError> {
        if let Some(s) = preset(spec) {
            if !Path::new(spec).exists() {
                return Ok(s);
            }
        }
        let text = std::fs::read_to_string(spec).map_err(|source| ScenarioError::Io { path: spec.into(), source })?;
        let map = GridMap::parse(&text, DEFAULT_RESOLUTION)
            .map_err(|source| ScenarioError::Map { path: spec.into(), source })?;
        let name = Path::new(spec).file_stem().and_then(|s| s.to_str()).unwrap_or(spec).to_string();
        Ok(Self::from_map(name, map))
    }

    /// Preset configuration values for keys the user left at their defaults
    /// (sensing range, time limit, start pose and spawn regions).
    pub fn apply_defaults(&self, cfg: &mut MissionConfig) {
        let base = MissionConfig::default();
        if let Some(r_v) = self.r_v {
            if cfg.r_v == base.r_v {
                cfg.r_v = r_v;
            }
        }
        if let Some(t) = self.timeout {
            if cfg.timeout == base.timeout {
                cfg.timeout = t;
            }
        }
        if cfg.robot_start.is_none() {
            cfg.robot_start = self.start;
        }
        if cfg.spawn_regions.is_empty() {
            cfg.spawn_regions = self.spawn_regions.clone();
        }
    }
}
