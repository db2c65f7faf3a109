//! Reactive path following: pick a destination on the path, then steer
//! toward it within the kinodynamic limits.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::fmm::ScalarField;
use crate::grid::{CellPos, GridMap};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub x: f64,
    pub y: f64,
    /// Heading in (-pi, pi].
    pub theta: f64,
    pub v: f64,
    pub w: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KinodynamicLimits {
    pub v_max: f64,
    pub w_max: f64,
    /// Largest speed increase per control period.
    pub dv: f64,
    /// Largest angular speed change per control period.
    pub dw: f64,
    pub radius: f64,
}

impl Default for KinodynamicLimits {
    fn default() -> Self {
        Self { v_max: 0.5, w_max: 1.5, dv: 0.1, dw: 0.3, radius: 0.18 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DestinationChoice {
    /// Position of the destination in the path.
    pub index: usize,
    pub dest: CellPos,
    /// Clearance at the destination relative to the best clearance on the path.
    pub clearance_factor: f64,
}

/// Angle wrapped into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Index of the path cell closest to `(x, y)`; ties go to the earlier cell.
pub fn nearest_index(path: &[CellPos], map: &GridMap, x: f64, y: f64) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (k, c) in path.iter().enumerate() {
        let (cx, cy) = map.center(*c);
        let d = (cx - x).hypot(cy - y);
        if d < best.0 {
            best = (d, k);
        }
    }
    best.1
}

/// Distance from each path cell to the closest dynamic obstacle cell
/// (infinite without obstacles).
pub fn obstacle_distances(path: &[CellPos], obstacles: &[CellPos], map: &GridMap) -> Vec<f64> {
    path.iter().map(|p| obstacles.iter().map(|o| map.metric_dist(*p, *o)).fold(f64::INFINITY, f64::min)).collect()
}

/// Walks forward from the path cell nearest the robot while the robot stays
/// within each cell's static clearance less the robot footprint and within
/// its obstacle clearance minus two robot radii. The footprint term keeps
/// the whole body, not just its centre, off the walls on the straight drive
/// to the destination.
pub fn select_destination(
    path: &[CellPos],
    robot: &RobotState,
    map: &GridMap,
    dso: &ScalarField,
    obstacles: &[CellPos],
    limits: &KinodynamicLimits,
) -> DestinationChoice {
    assert!(!path.is_empty(), "destination needs a path");
    let d_do = obstacle_distances(path, obstacles, map);
    let clearance = |k: usize| dso.get(path[k]).min(d_do[k]);
    let max_clearance = (0..path.len()).map(clearance).fold(0.0, f64::max);
    let factor = |k: usize| if max_clearance > 0.0 { (clearance(k) / max_clearance).clamp(0.0, 1.0) } else { 0.0 };

    let body = limits.radius + map.resolution() * std::f64::consts::SQRT_2 / 2.0;
    let start = nearest_index(path, map, robot.x, robot.y);
    let mut chosen = start;
    for k in start..path.len() {
        let (cx, cy) = map.center(path[k]);
        let d = (cx - robot.x).hypot(cy - robot.y);
        if d <= dso.get(path[k]) - body && d <= d_do[k] - 2.0 * limits.radius {
            chosen = k;
        } else {
            break;
        }
    }
    DestinationChoice { index: chosen, dest: path[chosen], clearance_factor: factor(chosen) }
}

/// Linear and angular speed toward `(dx, dy)`.
pub fn compute_velocities(
    robot: &RobotState,
    dest: (f64, f64),
    clearance_factor: f64,
    limits: &KinodynamicLimits,
) -> (f64, f64) {
    let bearing = (dest.1 - robot.y).atan2(dest.0 - robot.x);
    let dtheta = wrap_angle(bearing - robot.theta);
    let w = (limits.w_max * dtheta).clamp(robot.w - limits.dw, robot.w + limits.dw).clamp(-limits.w_max, limits.w_max);
    let v = if dtheta == 0.0 {
        limits.v_max.min(robot.v + limits.dv)
    } else if dtheta.abs() >= PI / 2.0 {
        0.0
    } else {
        let v = limits.v_max * clearance_factor.clamp(0.0, 1.0) * (1.0 - w.abs() / limits.w_max);
        v.min(robot.v + limits.dv)
    };
    (v.clamp(0.0, limits.v_max), w)
}
