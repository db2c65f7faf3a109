//! Closed-loop mission runs: world, controller, metrics and trace.

use std::io::{self, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, MissionConfig};
use crate::follower::RobotState;
use crate::mission::{static_margin, Mission, MissionStatus};
use crate::partition::{plan_offline, OfflinePlan, PartitionError};
use crate::scenario::Scenario;
use crate::world::{detect_collision, integrate, min_obstacle_distance, sense, spawn_obstacles, ObstacleSim};

/// Obstacles are never spawned closer than this (meters) to the robot.
pub const SPAWN_KEEP_OUT: f64 = 1.5;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error("robot start ({0}, {1}) is not a free cell")]
    BadStart(f64, f64),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MissionMetrics {
    pub status: MissionStatus,
    pub collided: bool,
    pub collision_time: Option<f64>,
    pub path_length: f64,
    pub mission_time: f64,
    pub steps: usize,
    pub observed_ratio: f64,
    pub seen_cells: usize,
    pub discarded_cells: usize,
    pub reachable_cells: usize,
    pub max_plan_ms: f64,
    pub mean_plan_ms: f64,
    /// Mean over steps of the surface distance to the closest obstacle.
    pub mean_min_obstacle_dist: Option<f64>,
    pub min_obstacle_dist: Option<f64>,
}

impl MissionMetrics {
    /// Copy with the wall-clock fields zeroed, for reproducibility checks.
    pub fn without_timing(&self) -> Self {
        Self { max_plan_ms: 0.0, mean_plan_ms: 0.0, ..self.clone() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceHeader {
    pub map_name: String,
    pub map: String,
    pub config: MissionConfig,
    pub seed: u64,
    pub partitions: usize,
    pub reachable_cells: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AreaRecord {
    pub hull: Vec<[f64; 2]>,
    pub density: f64,
    pub n_do: usize,
    pub dense: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    /// Pose after applying the command: `[x, y, theta]`.
    pub robot: [f64; 3],
    pub cmd: [f64; 2],
    pub goal: Option<[usize; 2]>,
    pub partition: Option<usize>,
    pub waiting: bool,
    pub seen: usize,
    pub discarded: usize,
    pub seen_delta: Vec<usize>,
    /// `[x, y, theta, half_length, half_width]` per obstacle.
    pub obstacles: Vec<[f64; 5]>,
    pub areas: Vec<AreaRecord>,
    pub min_obstacle_dist: Option<f64>,
    pub status: MissionStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub plan_ms: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TraceLine {
    Header(TraceHeader),
    Step(StepRecord),
}

/// Robot start pose: the configured one, else the cell of greatest clearance.
pub fn start_pose(cfg: &MissionConfig, plan: &OfflinePlan, scenario: &Scenario) -> Result<RobotState, RunError> {
    let map = &scenario.map;
    let [x, y, theta] = match cfg.robot_start {
        Some(s) => s,
        None => {
            let (c, _) = plan.dso.argmax().ok_or(RunError::BadStart(0.0, 0.0))?;
            let (x, y) = map.center(c);
            [x, y, 0.0]
        }
    };
    match map.cell_at(x, y) {
        Some(c) if map.is_free(c) => Ok(RobotState { x, y, theta, v: 0.0, w: 0.0 }),
        _ => Err(RunError::BadStart(x, y)),
    }
}

/// Offline stage for a scenario and configuration.
pub fn offline(scenario: &Scenario, cfg: &MissionConfig) -> Result<OfflinePlan, RunError> {
    let margin = static_margin(cfg.robot_radius, scenario.map.resolution());
    Ok(plan_offline(&scenario.map, margin, cfg.v_max)?)
}

/// Runs one mission. `cfg` is used as given; preset defaults are applied
/// by the caller. Trace lines go to `trace` when present.
pub fn run_mission(
    scenario: &Scenario,
    cfg: &MissionConfig,
    seed: u64,
    trace: Option<&mut dyn Write>,
) -> Result<MissionMetrics, RunError> {
    cfg.validate()?;
    let plan = offline(scenario, cfg)?;
    run_with_plan(scenario, &plan, cfg, seed, trace)
}

pub fn run_with_plan(
    scenario: &Scenario,
    plan: &OfflinePlan,
    cfg: &MissionConfig,
    seed: u64,
    mut trace: Option<&mut dyn Write>,
) -> Result<MissionMetrics, RunError> {
    let map = &scenario.map;
    let robot = start_pose(cfg, plan, scenario)?;
    let profile = cfg.obstacle_speed.profile(cfg.v_max, cfg.w_max);
    let mut obstacles: Vec<ObstacleSim> = spawn_obstacles(
        map,
        cfg.n_obstacles,
        &cfg.spawn_regions,
        cfg.obstacle_size,
        profile,
        (robot.x, robot.y),
        SPAWN_KEEP_OUT,
        seed,
    );
    let mut mission = Mission::new(map, plan, cfg, robot);
    let reachable_cells = mission.reachable().iter().filter(|r| **r).count();

    if let Some(w) = trace.as_deref_mut() {
        let header = TraceHeader {
            map_name: scenario.name.clone(),
            map: map.to_text(),
            config: cfg.clone(),
            seed,
            partitions: plan.partitioning.len(),
            reachable_cells,
        };
        serde_json::to_writer(&mut *w, &TraceLine::Header(header))?;
        w.write_all(b"\n")?;
    }

    let dt = cfg.control_period;
    let mut metrics = MissionMetrics { reachable_cells, ..Default::default() };
    let mut plan_ms_sum = 0.0;
    let mut dist_sum = 0.0;
    let mut dist_n = 0usize;
    let mut step = 0usize;
    loop {
        let now = step as f64 * dt;
        let robot_cell = map.cell_at(mission.robot.x, mission.robot.y).expect("robot stays on the map");
        let sensed = sense(map, robot_cell, cfg.r_v, &obstacles);
        let started = Instant::now();
        let report = mission.step(&sensed, now);
        let plan_ms = started.elapsed().as_secs_f64() * 1e3;
        plan_ms_sum += plan_ms;
        metrics.max_plan_ms = metrics.max_plan_ms.max(plan_ms);

        let running = mission.status() == MissionStatus::Running;
        let (v, w) = if running { report.command } else { (0.0, 0.0) };
        let before = mission.robot;
        if running {
            mission.robot = integrate(before, v, w, dt);
            for o in &mut obstacles {
                o.step(map, dt);
            }
            metrics.path_length += (mission.robot.x - before.x).hypot(mission.robot.y - before.y);
            if detect_collision(&mission.robot, cfg.robot_radius, &obstacles, map) {
                metrics.collided = true;
                metrics.collision_time = Some(now + dt);
                mission.set_status(MissionStatus::Collision);
            }
        }
        let min_dist = min_obstacle_distance(&mission.robot, cfg.robot_radius, &obstacles);
        if let Some(d) = min_dist {
            dist_sum += d;
            dist_n += 1;
            metrics.min_obstacle_dist = Some(metrics.min_obstacle_dist.map_or(d, |m: f64| m.min(d)));
        }
        step += 1;

        if let Some(wr) = trace.as_deref_mut() {
            let rec = StepRecord {
                step: step - 1,
                t: if running { now + dt } else { now },
                robot: [mission.robot.x, mission.robot.y, mission.robot.theta],
                cmd: [v, w],
                goal: report.goal.map(|g| [g.col, g.row]),
                partition: report.partition,
                waiting: report.waiting,
                seen: mission.mask.seen_count(),
                discarded: mission.mask.discarded_count(),
                seen_delta: report.seen_delta,
                obstacles: obstacles.iter().map(|o| [o.x, o.y, o.theta, o.half_len, o.half_wid]).collect(),
                areas: mission
                    .areas()
                    .iter()
                    .map(|a| AreaRecord {
                        hull: a.hull.iter().map(|p| [p.x, p.y]).collect(),
                        density: a.density,
                        n_do: a.n_do,
                        dense: a.is_dense(cfg.o_th),
                    })
                    .collect(),
                min_obstacle_dist: min_dist,
                status: mission.status(),
                plan_ms: cfg.trace_timing.then_some(plan_ms),
            };
            serde_json::to_writer(&mut *wr, &TraceLine::Step(rec))?;
            wr.write_all(b"\n")?;
        }
        if mission.status() != MissionStatus::Running {
            metrics.mission_time = if running { now + dt } else { now };
            break;
        }
    }
    metrics.status = mission.status();
    metrics.steps = step;
    metrics.observed_ratio = mission.observed_ratio();
    metrics.seen_cells = mission.mask.seen_count();
    metrics.discarded_cells = mission.mask.discarded_count();
    metrics.mean_plan_ms = plan_ms_sum / step.max(1) as f64;
    metrics.mean_min_obstacle_dist = (dist_n > 0).then(|| dist_sum / dist_n as f64);
    Ok(metrics)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridMap;

    fn two_rooms() -> Scenario {
        let mut text = String::new();
        for r in 0..30 {
            for c in 0..50 {
                let wall = r == 0 || r == 29 || c == 0 || c == 49 || (c == 25 && !(12..18).contains(&r));
                text.push(if wall { '#' } else { '.' });
            }
            text.push('\n');
        }
        Scenario::from_map("two-rooms", GridMap::parse(&text, 0.2).unwrap())
    }

    #[test]
    fn static_world_is_fully_monitored() {
        let s = two_rooms();
        for strategy in crate::config::Strategy::ALL {
            let cfg = MissionConfig { strategy, r_v: 4.0, robot_start: Some([1.0, 1.0, 0.0]), ..Default::default() };
            let m = run_mission(&s, &cfg, 1, None).unwrap();
            assert_eq!(m.status, MissionStatus::Complete, "{strategy}: {m:?}");
            assert_eq!(m.observed_ratio, 1.0);
            assert!(!m.collided);
        }
    }

    #[test]
    fn traces_repeat_exactly() {
        let s = two_rooms();
        let cfg = MissionConfig { r_v: 4.0, n_obstacles: 3, timeout: 60.0, ..Default::default() };
        let mut a = Vec::new();
        let mut b = Vec::new();
        let ma = run_mission(&s, &cfg, 7, Some(&mut a)).unwrap();
        let mb = run_mission(&s, &cfg, 7, Some(&mut b)).unwrap();
        assert_eq!(a, b);
        assert_eq!(ma.without_timing(), mb.without_timing());
    }
}
