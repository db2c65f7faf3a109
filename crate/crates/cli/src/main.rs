use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use mada_core::batch::{run_sweep, summarize, write_outputs, Sweep};
use mada_core::partition::star_shape_ratio;
use mada_core::render::render_trace;
use mada_core::sim::{offline, run_mission};
use mada_core::{MissionConfig, Scenario};

#[derive(Parser)]
#[command(name = "mada", version, about = "Monitoring planner and simulator for scenes with moving obstacles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one mission; writes PREFIX.trace.jsonl and PREFIX.metrics.json.
    Run {
        /// Map file or preset name (scenario-1, scenario-2).
        #[arg(long)]
        map: String,
        /// JSON mission config; defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a parameter sweep; writes runs.csv, runs.jsonl and summary.csv into DIR.
    Batch {
        #[arg(long)]
        sweep: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads, 0 for one per core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Partition a map; writes PREFIX.labels.txt, PREFIX.graph.txt,
    /// PREFIX.partitions.json and PREFIX.pgm.
    Partition {
        #[arg(long)]
        map: String,
        /// Config supplying robot_radius and v_max.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a trace to PGM frames, one every K steps plus the last.
    Render {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, default_value_t = 10)]
        every: usize,
        /// Pixels per map cell.
        #[arg(long, default_value_t = 2)]
        scale: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: Option<&Path>) -> Result<MissionConfig> {
    match path {
        None => Ok(MissionConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            MissionConfig::from_json(&text).with_context(|| format!("config {}", p.display()))
        }
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

fn run(map: &str, config: Option<&Path>, seed: u64, out: &Path) -> Result<()> {
    let scenario = Scenario::load(map)?;
    let mut cfg = load_config(config)?;
    scenario.apply_defaults(&mut cfg);
    let trace_path = with_suffix(out, ".trace.jsonl");
    ensure_parent(&trace_path)?;
    let mut trace =
        BufWriter::new(File::create(&trace_path).with_context(|| format!("creating {}", trace_path.display()))?);
    let metrics = run_mission(&scenario, &cfg, seed, Some(&mut trace))?;
    trace.flush()?;
    let metrics_path = with_suffix(out, ".metrics.json");
    fs::write(&metrics_path, serde_json::to_string_pretty(&metrics)? + "\n")?;
    println!(
        "{} {} seed {}: {} observed {:.3} time {:.1} s path {:.1} m max plan {:.1} ms",
        scenario.name,
        cfg.strategy,
        seed,
        metrics.status.name(),
        metrics.observed_ratio,
        metrics.mission_time,
        metrics.path_length,
        metrics.max_plan_ms
    );
    Ok(())
}

fn batch(sweep: &Path, out: &Path, jobs: usize) -> Result<()> {
    let text = fs::read_to_string(sweep).with_context(|| format!("reading sweep {}", sweep.display()))?;
    let sweep = Sweep::from_json(&text).with_context(|| format!("sweep {}", sweep.display()))?;
    let records = run_sweep(&sweep, jobs)?;
    write_outputs(out, &records)?;
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    for r in records.iter().filter(|r| r.error.is_some()) {
        eprintln!("{} seed {}: {}", r.map, r.seed, r.error.as_deref().unwrap_or_default());
    }
    println!(
        "{} runs, {} failed, {} configurations -> {}",
        records.len(),
        failed,
        summarize(&records).len(),
        out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct PartitionInfo {
    id: usize,
    seed: [usize; 2],
    seed_xy: [f64; 2],
    cells: usize,
    d_min: f64,
    d_max: f64,
}

#[derive(Serialize)]
struct PartitionReport {
    map: String,
    resolution: f64,
    star_shape_ratio: f64,
    partitions: Vec<PartitionInfo>,
}

fn partition(map: &str, config: Option<&Path>, out: &Path) -> Result<()> {
    let scenario = Scenario::load(map)?;
    let cfg = load_config(config)?;
    let plan = offline(&scenario, &cfg)?;
    let parts = &plan.partitioning;
    let grid = &scenario.map;
    ensure_parent(out)?;
    fs::write(with_suffix(out, ".labels.txt"), parts.label_text())?;
    fs::write(with_suffix(out, ".graph.txt"), plan.graph.edge_text())?;
    let report = PartitionReport {
        map: scenario.name.clone(),
        resolution: grid.resolution(),
        star_shape_ratio: star_shape_ratio(parts, grid),
        partitions: parts
            .partitions
            .iter()
            .map(|p| {
                let (x, y) = grid.center(p.seed);
                PartitionInfo {
                    id: p.id,
                    seed: [p.seed.col, p.seed.row],
                    seed_xy: [x, y],
                    cells: p.members.len(),
                    d_min: p.d_min,
                    d_max: p.d_max,
                }
            })
            .collect(),
    };
    fs::write(with_suffix(out, ".partitions.json"), serde_json::to_string_pretty(&report)? + "\n")?;

    // Walls black, unlabeled cells white, partitions in spread-out grays.
    let n = parts.len().max(1);
    let mut pgm = format!("P5\n{} {}\n255\n", grid.width(), grid.height()).into_bytes();
    pgm.extend((0..grid.len()).map(|i| {
        if grid.occupancy()[i] {
            0u8
        } else {
            match parts.label_at(i) {
                None => 255,
                Some(l) => (40 + (l * 97 % n) * 180 / n) as u8,
            }
        }
    }));
    fs::write(with_suffix(out, ".pgm"), pgm)?;
    println!(
        "{}: {} partitions, {} edges, star-shape ratio {:.3}",
        scenario.name,
        parts.len(),
        plan.graph.edges.len(),
        report.star_shape_ratio
    );
    Ok(())
}

fn render(trace: &Path, every: usize, scale: usize, out: &Path) -> Result<()> {
    if every == 0 {
        bail!("--every must be at least 1");
    }
    let file = File::open(trace).with_context(|| format!("opening trace {}", trace.display()))?;
    let frames = render_trace(BufReader::new(file), every, scale, out)?;
    println!("{} frames -> {}", frames.len(), out.display());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { map, config, seed, out } => run(&map, config.as_deref(), seed, &out),
        Command::Batch { sweep, out, jobs } => batch(&sweep, &out, jobs),
        Command::Partition { map, config, out } => partition(&map, config.as_deref(), &out),
        Command::Render { trace, every, scale, out } => render(&trace, every, scale, &out),
    }
}
