//! Velocity map and path planning around obstacles and dense areas.

use std::collections::VecDeque;

use thiserror::Error;

use crate::dynamic::{inflate_mask, DynamicArea};
use crate::fmm::{self, FmmError, ScalarField, VelocityField};
use crate::grid::{CellPos, GridMap};

/// Speed given to non-dense area cells whose literal value would be zero.
pub const AREA_SPEED_FLOOR: f64 = 0.1;

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("goal {0} is not traversable")]
    GoalBlocked(CellPos),
    #[error("goal unreachable from {0}")]
    Unreachable(CellPos),
    #[error(transparent)]
    Fmm(#[from] FmmError),
}

/// Everything the velocity map depends on.
#[derive(Clone, Debug)]
pub struct PlannerInputs<'a> {
    pub map: &'a GridMap,
    pub dso: &'a ScalarField,
    /// Static clearance (meters) below which a free cell is treated as a
    /// static obstacle for planning.
    pub static_margin: f64,
    /// Dynamic obstacle cells (optionally with projected cells).
    pub obstacles: &'a [CellPos],
    pub areas: &'a [DynamicArea],
    pub o_th: f64,
    /// Inflation (meters) applied to obstacle and dense-area cells.
    pub safety: f64,
    /// Cells never zeroed by obstacles or areas (the robot's own cells).
    pub exempt: &'a [CellPos],
}

impl PlannerInputs<'_> {
    pub fn n_do_max(&self) -> usize {
        self.areas.iter().map(|a| a.n_do).max().unwrap_or(0)
    }
}

/// Which rule fixed a cell's speed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpeedCase {
    Static,
    Obstacle,
    DenseArea,
    Area,
    Free,
}

/// Per-cell speed with the rule that produced it.
#[derive(Clone, Debug)]
pub struct VelocityMap {
    pub field: VelocityField,
    pub cases: Vec<SpeedCase>,
}

/// Clearance map with robot-footprint margin applied: cells closer than
/// `margin` to a static obstacle count as blocked.
pub fn static_blocked(map: &GridMap, dso: &ScalarField, margin: f64) -> Vec<bool> {
    map.occupancy().iter().zip(dso.values()).map(|(&occ, &d)| occ || d < margin).collect()
}

pub fn build_velocity_map(inp: &PlannerInputs<'_>) -> VelocityMap {
    let map = inp.map;
    let (w, h) = (map.width(), map.height());
    let n = map.len();
    let radius = inp.safety / map.resolution();
    let n_do_max = inp.n_do_max() as f64;

    let mut exempt = vec![false; n];
    for c in inp.exempt {
        exempt[map.index(*c)] = true;
    }

    let mut obstacle = vec![false; n];
    for c in inp.obstacles {
        obstacle[map.index(*c)] = true;
    }
    let obstacle = inflate_mask(&obstacle, w, h, radius);

    let mut dense = vec![false; n];
    // Slowest speed over the non-dense areas covering each cell.
    let mut area_speed = vec![f64::INFINITY; n];
    for a in inp.areas {
        if a.is_dense(inp.o_th) {
            for c in &a.member_cells {
                dense[map.index(*c)] = true;
            }
        } else {
            let s = (n_do_max - a.n_do as f64).max(AREA_SPEED_FLOOR);
            for c in &a.member_cells {
                let i = map.index(*c);
                area_speed[i] = area_speed[i].min(s);
            }
        }
    }
    let dense = inflate_mask(&dense, w, h, radius);

    let blocked = static_blocked(map, inp.dso, inp.static_margin);
    let mut values = vec![0.0; n];
    let mut cases = vec![SpeedCase::Static; n];
    for i in 0..n {
        let (v, case) = if map.occupancy()[i] || (blocked[i] && !exempt[i]) {
            (0.0, SpeedCase::Static)
        } else if obstacle[i] && !exempt[i] {
            (0.0, SpeedCase::Obstacle)
        } else if dense[i] && !exempt[i] {
            (0.0, SpeedCase::DenseArea)
        } else if area_speed[i].is_finite() {
            (area_speed[i], SpeedCase::Area)
        } else {
            (inp.dso.values()[i] + n_do_max + 1.0, SpeedCase::Free)
        };
        values[i] = v;
        cases[i] = case;
    }
    VelocityMap { field: VelocityField::new(w, h, map.resolution(), values), cases }
}

/// Descends the arrival-time field of a wavefront grown from `goal` until
/// it reaches `robot`.
pub fn plan_on(speed: &VelocityField, goal: CellPos, robot: CellPos) -> Result<Vec<CellPos>, PlanError> {
    if speed.get(goal) <= 0.0 {
        return Err(PlanError::GoalBlocked(goal));
    }
    let field = fmm::solve_until(&[goal], speed, robot)?;
    if !field.is_reached(robot) {
        return Err(PlanError::Unreachable(robot));
    }
    Ok(fmm::descend(&field, robot)?)
}

/// Path from `robot` to `goal`, robot first.
pub fn plan_path(inp: &PlannerInputs<'_>, goal: CellPos, robot: CellPos) -> Result<Vec<CellPos>, PlanError> {
    plan_on(&build_velocity_map(inp).field, goal, robot)
}

/// 4-connected components of positive-speed cells; zero-speed cells get
/// `u32::MAX`.
pub fn passable_components(speed: &VelocityField) -> Vec<u32> {
    let (w, h) = (speed.width(), speed.height());
    let vals = speed.values();
    let mut comp = vec![u32::MAX; vals.len()];
    let mut next = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..vals.len() {
        if vals[start] <= 0.0 || comp[start] != u32::MAX {
            continue;
        }
        comp[start] = next;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            let (c, r) = (i % w, i / w);
            let mut visit = |j: usize| {
                if vals[j] > 0.0 && comp[j] == u32::MAX {
                    comp[j] = next;
                    queue.push_back(j);
                }
            };
            if c > 0 {
                visit(i - 1);
            }
            if c + 1 < w {
                visit(i + 1);
            }
            if r > 0 {
                visit(i - w);
            }
            if r + 1 < h {
                visit(i + w);
            }
        }
        next += 1;
    }
    comp
}

/// Whether no positive-speed path joins `a` and `b`.
pub fn edge_traverses_dense(inp: &PlannerInputs<'_>, a: CellPos, b: CellPos) -> bool {
    let vm = build_velocity_map(inp);
    let comp = passable_components(&vm.field);
    let (ia, ib) = (inp.map.index(a), inp.map.index(b));
    comp[ia] == u32::MAX || comp[ia] != comp[ib]
}
