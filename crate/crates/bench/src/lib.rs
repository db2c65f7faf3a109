//! Fixtures shared by the planning benchmarks.

use mada_core::{CellPos, GridMap, MissionConfig, Scenario};

/// Every `stride`-th free cell of the map, a stand-in for sensed obstacles.
pub fn scattered_obstacles(map: &GridMap, stride: usize) -> Vec<CellPos> {
    (0..map.len()).filter(|&i| !map.occupancy()[i]).step_by(stride.max(1)).map(|i| map.pos(i)).collect()
}

/// Preset scenario with its defaults applied to `cfg`.
pub fn preset(name: &str, mut cfg: MissionConfig) -> (Scenario, MissionConfig) {
    let s = Scenario::load(name).expect("preset exists");
    s.apply_defaults(&mut cfg);
    (s, cfg)
}
