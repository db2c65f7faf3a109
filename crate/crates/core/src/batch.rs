//! Parameter sweeps: expand a grid of factors over maps and seeds, run the
//! missions in parallel and aggregate the metrics per configuration.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{MissionConfig, ObstacleSpeed, Strategy};
use crate::dynamic::MemoryMode;
use crate::mission::MissionStatus;
use crate::partition::OfflinePlan;
use crate::scenario::{Scenario, ScenarioError};
use crate::sim::{offline, run_with_plan, MissionMetrics, RunError};

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("sweep parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// Seeds as an explicit list or a count starting at zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    Count(u64),
    List(Vec<u64>),
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds::List(Vec::new())
    }
}

impl Seeds {
    pub fn values(&self) -> Vec<u64> {
        match self {
            Seeds::Count(n) => (0..*n).collect(),
            Seeds::List(v) => v.clone(),
        }
    }
}

/// Factor levels; an empty list keeps the base value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub strategy: Vec<Strategy>,
    pub o_th: Vec<f64>,
    pub safety_factor: Vec<f64>,
    pub memory_mode: Vec<MemoryMode>,
    pub projections: Vec<bool>,
    pub n_obstacles: Vec<usize>,
    pub obstacle_speed: Vec<ObstacleSpeed>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sweep {
    /// Preset names or map files.
    pub maps: Vec<String>,
    pub base: MissionConfig,
    pub grid: Grid,
    pub seeds: Seeds,
}

impl Sweep {
    pub fn from_json(text: &str) -> Result<Self, BatchError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Every configuration of the grid, in a fixed order, before preset
    /// defaults are applied.
    pub fn configs(&self) -> Vec<MissionConfig> {
        fn levels<T: Clone>(v: &[T], base: T) -> Vec<T> {
            if v.is_empty() {
                vec![base]
            } else {
                v.to_vec()
            }
        }
        let b = &self.base;
        let g = &self.grid;
        let mut out = Vec::new();
        for strategy in levels(&g.strategy, b.strategy) {
            for o_th in levels(&g.o_th, b.o_th) {
                for safety_factor in levels(&g.safety_factor, b.safety_factor) {
                    for memory_mode in levels(&g.memory_mode, b.memory_mode) {
                        for projections in levels(&g.projections, b.projections) {
                            for n_obstacles in levels(&g.n_obstacles, b.n_obstacles) {
                                for obstacle_speed in levels(&g.obstacle_speed, b.obstacle_speed) {
                                    out.push(MissionConfig {
                                        strategy,
                                        o_th,
                                        safety_factor,
                                        memory_mode,
                                        projections,
                                        n_obstacles,
                                        obstacle_speed,
                                        ..b.clone()
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// One line of `runs.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub map: String,
    pub strategy: Strategy,
    pub o_th: f64,
    pub safety: f64,
    pub memory_mode: MemoryMode,
    pub projections: bool,
    pub n_obstacles: usize,
    pub speed: ObstacleSpeed,
    pub seed: u64,
    pub observed_ratio: Option<f64>,
    pub collided: Option<bool>,
    pub path_length: Option<f64>,
    pub mission_time: Option<f64>,
    pub max_plan_ms: Option<f64>,
    pub mean_min_obstacle_dist: Option<f64>,
    /// Mission status, or `error` when the run could not start.
    pub status: String,
}

/// One record of `runs.jsonl`: the row plus full metrics or the error.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub map: String,
    pub seed: u64,
    pub config: MissionConfig,
    pub metrics: Option<MissionMetrics>,
    pub error: Option<String>,
}

impl RunRecord {
    pub fn row(&self) -> RunRow {
        let c = &self.config;
        let m = self.metrics.as_ref();
        RunRow {
            map: self.map.clone(),
            strategy: c.strategy,
            o_th: c.o_th,
            safety: c.safety_factor,
            memory_mode: c.memory_mode,
            projections: c.projections,
            n_obstacles: c.n_obstacles,
            speed: c.obstacle_speed,
            seed: self.seed,
            observed_ratio: m.map(|m| m.observed_ratio),
            collided: m.map(|m| m.collided),
            path_length: m.map(|m| m.path_length),
            mission_time: m.map(|m| m.mission_time),
            max_plan_ms: m.map(|m| m.max_plan_ms),
            mean_min_obstacle_dist: m.and_then(|m| m.mean_min_obstacle_dist),
            status: m.map_or("error", |m| m.status.name()).to_string(),
        }
    }
}

pub const RUN_COLUMNS: [&str; 16] = [
    "map",
    "strategy",
    "o_th",
    "safety",
    "memory_mode",
    "projections",
    "n_obstacles",
    "speed",
    "seed",
    "observed_ratio",
    "collided",
    "path_length",
    "mission_time",
    "max_plan_ms",
    "mean_min_obstacle_dist",
    "status",
];

/// Metrics summarized per configuration; `collided` aggregates as 0/1.
pub const SUMMARY_METRICS: [&str; 6] =
    ["observed_ratio", "collided", "path_length", "mission_time", "max_plan_ms", "mean_min_obstacle_dist"];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

/// Quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl Stats {
    /// `None` for an empty sample.
    pub fn of(values: &[f64]) -> Option<Stats> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Stats {
            n: v.len(),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            median: quantile(&v, 0.5),
            q1: quantile(&v, 0.25),
            q3: quantile(&v, 0.75),
        })
    }
}

/// Aggregate of the runs sharing a map and configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfigSummary {
    pub key: RunRow,
    pub runs: usize,
    pub failed: usize,
    pub collisions: usize,
    pub metrics: BTreeMap<&'static str, Option<Stats>>,
}

impl ConfigSummary {
    pub fn stat(&self, metric: &str) -> Option<Stats> {
        self.metrics.get(metric).copied().flatten()
    }

    pub fn collision_rate(&self) -> f64 {
        let done = self.runs - self.failed;
        if done == 0 {
            0.0
        } else {
            self.collisions as f64 / done as f64
        }
    }
}

fn metric_value(m: &MissionMetrics, name: &str) -> Option<f64> {
    match name {
        "observed_ratio" => Some(m.observed_ratio),
        "collided" => Some(if m.collided { 1.0 } else { 0.0 }),
        "path_length" => Some(m.path_length),
        "mission_time" => Some(m.mission_time),
        "max_plan_ms" => Some(m.max_plan_ms),
        "mean_min_obstacle_dist" => m.mean_min_obstacle_dist,
        _ => None,
    }
}

/// Groups records by everything but the seed, in first-seen order.
pub fn summarize(records: &[RunRecord]) -> Vec<ConfigSummary> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        let key = serde_json::to_string(&(&r.map, &r.config)).expect("config serializes");
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    order
        .iter()
        .map(|k| {
            let rs = &groups[k];
            let mut key = rs[0].row();
            key.seed = 0;
            let done: Vec<&MissionMetrics> = rs.iter().filter_map(|r| r.metrics.as_ref()).collect();
            let metrics = SUMMARY_METRICS
                .iter()
                .map(|&name| {
                    let vals: Vec<f64> = done.iter().filter_map(|m| metric_value(m, name)).collect();
                    (name, Stats::of(&vals))
                })
                .collect();
            ConfigSummary {
                key,
                runs: rs.len(),
                failed: rs.len() - done.len(),
                collisions: done.iter().filter(|m| m.collided).count(),
                metrics,
            }
        })
        .collect()
}

struct Job {
    map: usize,
    plan: usize,
    config: MissionConfig,
    seed: u64,
}

/// Runs the sweep on `jobs` threads (0 = all cores). Records come back in
/// sweep order whatever the thread count.
pub fn run_sweep(sweep: &Sweep, jobs: usize) -> Result<Vec<RunRecord>, BatchError> {
    let scenarios = sweep.maps.iter().map(|m| Scenario::load(m)).collect::<Result<Vec<_>, _>>()?;
    let seeds = sweep.seeds.values();
    let configs = sweep.configs();

    // Offline plans depend on the map, the robot radius and v_max only.
    let mut plans: Vec<Result<OfflinePlan, String>> = Vec::new();
    let mut plan_keys: Vec<(usize, u64, u64)> = Vec::new();
    let mut work = Vec::new();
    for (mi, scenario) in scenarios.iter().enumerate() {
        for cfg in &configs {
            let mut cfg = cfg.clone();
            scenario.apply_defaults(&mut cfg);
            let key = (mi, cfg.robot_radius.to_bits(), cfg.v_max.to_bits());
            let plan = match plan_keys.iter().position(|k| *k == key) {
                Some(p) => p,
                None => {
                    plan_keys.push(key);
                    plans.push(offline(scenario, &cfg).map_err(|e| e.to_string()));
                    plans.len() - 1
                }
            };
            for &seed in &seeds {
                work.push(Job { map: mi, plan, config: cfg.clone(), seed });
            }
        }
    }

    let run = |job: &Job| {
        let scenario = &scenarios[job.map];
        let outcome = match &plans[job.plan] {
            Err(e) => Err(e.clone()),
            Ok(plan) => job
                .config
                .validate()
                .map_err(RunError::from)
                .and_then(|_| run_with_plan(scenario, plan, &job.config, job.seed, None))
                .map_err(|e| e.to_string()),
        };
        let (metrics, error) = match outcome {
            Ok(m) => (Some(m), None),
            Err(e) => (None, Some(e)),
        };
        RunRecord { map: scenario.name.clone(), seed: job.seed, config: job.config.clone(), metrics, error }
    };
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(|e| BatchError::Pool(e.to_string()))?;
    Ok(pool.install(|| work.par_iter().map(run).collect()))
}

/// Writes `runs.csv`, `runs.jsonl` and `summary.csv` into `dir`.
pub fn write_outputs(dir: &Path, records: &[RunRecord]) -> Result<(), BatchError> {
    fs::create_dir_all(dir)?;

    let mut runs = csv::WriterBuilder::new().has_headers(false).from_path(dir.join("runs.csv"))?;
    runs.write_record(RUN_COLUMNS)?;
    for r in records {
        runs.serialize(r.row())?;
    }
    runs.flush()?;

    let mut jsonl = io::BufWriter::new(fs::File::create(dir.join("runs.jsonl"))?);
    for r in records {
        serde_json::to_writer(&mut jsonl, r).map_err(io::Error::from)?;
        jsonl.write_all(b"\n")?;
    }
    jsonl.flush()?;

    let mut summary = csv::Writer::from_path(dir.join("summary.csv"))?;
    let mut header: Vec<String> =
        RUN_COLUMNS[..8].iter().map(|s| s.to_string()).chain(["runs", "failed"].map(String::from)).collect();
    for m in SUMMARY_METRICS {
        for s in ["mean", "median", "q1", "q3"] {
            header.push(format!("{m}_{s}"));
        }
    }
    summary.write_record(&header)?;
    for s in summarize(records) {
        let k = &s.key;
        let mut rec = vec![
            k.map.clone(),
            k.strategy.to_string(),
            k.o_th.to_string(),
            k.safety.to_string(),
            k.memory_mode.to_string(),
            k.projections.to_string(),
            k.n_obstacles.to_string(),
            k.speed.to_string(),
            s.runs.to_string(),
            s.failed.to_string(),
        ];
        for m in SUMMARY_METRICS {
            match s.stat(m) {
                Some(st) => rec.extend([st.mean, st.median, st.q1, st.q3].map(|v| v.to_string())),
                None => rec.extend(std::iter::repeat_n(String::new(), 4)),
            }
        }
        summary.write_record(&rec)?;
    }
    summary.flush()?;
    Ok(())
}

/// Completed runs that ended in `status`.
pub fn count_status(records: &[RunRecord], status: MissionStatus) -> usize {
    records.iter().filter(|r| r.metrics.as_ref().is_some_and(|m| m.status == status)).count()
}
