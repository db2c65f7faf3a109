//! Acceptance criteria, run in one sequential test so that the timing
//! criterion is not disturbed by other work. Each criterion prints one
//! PASS/FAIL line straight to stderr, so the lines show up even when the
//! harness captures test output.

use std::collections::{BTreeSet, HashMap};
use std::io::Write;
use std::time::Instant;

use pathfinding::directed::dijkstra::dijkstra_all;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mada_core::batch::{quantile, run_sweep, Grid, RunRecord, Seeds, Sweep};
use mada_core::dynamic::DynamicArea;
use mada_core::fmm::{distance_transform, solve, solve_labeled};
use mada_core::follower::{compute_velocities, wrap_angle};
use mada_core::high_level::wait_time;
use mada_core::low_level::{build_velocity_map, PlannerInputs, SpeedCase, AREA_SPEED_FLOOR};
use mada_core::mission::static_margin;
use mada_core::partition::{star_shape_ratio, Partition};
use mada_core::sim::{offline, run_mission, run_with_plan};
use mada_core::{
    plan_offline, CellPos, GridMap, KinodynamicLimits, MemoryMode, MissionConfig, MissionStatus, ObstacleSpeed,
    RobotState, Scenario, Strategy, VelocityField,
};

struct Outcome {
    id: usize,
    pass: bool,
    detail: String,
}

fn report(out: &mut Vec<Outcome>, id: usize, pass: bool, detail: String) {
    let line = format!("{} criterion {id:>2}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    std::io::stderr().write_all(line.as_bytes()).unwrap();
    out.push(Outcome { id, pass, detail });
}

/// Bordered map with random wall rectangles.
fn random_map(rng: &mut ChaCha8Rng, w: usize, h: usize, blocks: usize, res: f64) -> GridMap {
    let mut occ = vec![false; w * h];
    for r in 0..h {
        for c in 0..w {
            occ[r * w + c] = r == 0 || c == 0 || r == h - 1 || c == w - 1;
        }
    }
    for _ in 0..blocks {
        let (bw, bh) = (rng.gen_range(1..6), rng.gen_range(1..6));
        let (x, y) = (rng.gen_range(1..w - 1), rng.gen_range(1..h - 1));
        for r in y..(y + bh).min(h - 1) {
            for c in x..(x + bw).min(w - 1) {
                occ[r * w + c] = true;
            }
        }
    }
    let text: String =
        (0..h).map(|r| (0..w).map(|c| if occ[r * w + c] { '#' } else { '.' }).collect::<String>() + "\n").collect();
    GridMap::parse(&text, res).unwrap()
}

fn free_cells(map: &GridMap) -> Vec<CellPos> {
    (0..map.len()).filter(|&i| !map.occupancy()[i]).map(|i| map.pos(i)).collect()
}

/// Moves the marcher allows: 4-neighbours, plus diagonals whose two
/// flanking cells are free. Costs in nanometres of a unit-spacing grid.
fn moves(map: &GridMap, c: CellPos) -> Vec<(CellPos, u64)> {
    const ORTHO: u64 = 1_000_000_000;
    const DIAG: u64 = 1_414_213_562;
    let (w, h) = (map.width() as i64, map.height() as i64);
    let free = |x: i64, y: i64| x >= 0 && y >= 0 && x < w && y < h && map.is_free(CellPos::new(x as usize, y as usize));
    let (x, y) = (c.col as i64, c.row as i64);
    let mut out = Vec::new();
    for (dx, dy) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1), (-1, -1), (1, 1), (1, -1), (-1, 1)] {
        let (nx, ny) = (x + dx, y + dy);
        if !free(nx, ny) {
            continue;
        }
        if dx != 0 && dy != 0 {
            if free(x + dx, y) && free(x, y + dy) {
                out.push((CellPos::new(nx as usize, ny as usize), DIAG));
            }
        } else {
            out.push((CellPos::new(nx as usize, ny as usize), ORTHO));
        }
    }
    out
}

fn criterion_1(out: &mut Vec<Outcome>) {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut worst_rel, mut worst_multi, mut cells) = (0.0f64, 0.0f64, 0usize);
    let mut reach_mismatch = 0usize;
    for _ in 0..50 {
        let map = random_map(&mut rng, 30, 30, 12, 1.0);
        let free = free_cells(&map);
        let speed = VelocityField::from_map(&map);
        let k = rng.gen_range(2..6);
        let sources: Vec<CellPos> =
            (0..k).map(|_| free[rng.gen_range(0..free.len())]).collect::<BTreeSet<_>>().into_iter().collect();
        let singles: Vec<_> = sources.iter().map(|s| solve(&[*s], &speed).unwrap()).collect();
        for (s, t) in sources.iter().zip(&singles) {
            let mut dij: HashMap<CellPos, u64> =
                dijkstra_all(s, |c| moves(&map, *c)).into_iter().map(|(c, (_, d))| (c, d)).collect();
            dij.insert(*s, 0);
            for c in &free {
                let v = t.get(*c);
                match dij.get(c) {
                    None => reach_mismatch += usize::from(v.is_finite()),
                    Some(&0) => reach_mismatch += usize::from(v != 0.0),
                    Some(&d) => {
                        let d = d as f64 * 1e-9;
                        worst_rel = worst_rel.max((v - d).abs() / d);
                        cells += 1;
                    }
                }
            }
        }
        let joint = solve_labeled(&sources, &speed).unwrap();
        for i in 0..map.len() {
            let best = singles.iter().map(|f| f.values()[i]).fold(f64::INFINITY, f64::min);
            let v = joint.field.values()[i];
            if best.is_finite() || v.is_finite() {
                worst_multi = worst_multi.max((v - best).abs());
            }
        }
    }
    let secs = started.elapsed().as_secs_f64();
    let pass = worst_rel <= 0.08 && worst_multi <= 1e-9 && reach_mismatch == 0 && secs < 10.0;
    report(
        out,
        1,
        pass,
        format!(
            "FMM vs 8-connected Dijkstra on 50 maps: max rel err {:.4} over {cells} cells (<= 0.08), reach mismatches {reach_mismatch}, \
             multi-source vs pointwise min {worst_multi:.1e} (<= 1e-9), {secs:.1} s (< 10 s)",
            worst_rel
        ),
    );
}

/// Free cells the marcher can reach from any of `seeds`.
fn reachable_from(map: &GridMap, seeds: &[CellPos]) -> Vec<bool> {
    let mut seen = vec![false; map.len()];
    let mut stack: Vec<CellPos> = seeds.to_vec();
    for s in seeds {
        seen[map.index(*s)] = true;
    }
    while let Some(c) = stack.pop() {
        for (n, _) in moves(map, c) {
            if !seen[map.index(n)] {
                seen[map.index(n)] = true;
                stack.push(n);
            }
        }
    }
    seen
}

fn partition_faults(map: &GridMap, cfg: &MissionConfig) -> Result<(usize, f64), String> {
    let plan =
        plan_offline(map, static_margin(cfg.robot_radius, map.resolution()), cfg.v_max).map_err(|e| e.to_string())?;
    let parts = &plan.partitioning;
    let seeds: Vec<CellPos> = parts.partitions.iter().map(|p| p.seed).collect();
    if seeds.iter().collect::<BTreeSet<_>>().len() != seeds.len() {
        return Err("duplicate seeds".into());
    }
    let mut owner: Vec<Option<usize>> = vec![None; map.len()];
    for p in &parts.partitions {
        if !p.members.contains(&p.seed) || parts.label(p.seed) != Some(p.id) {
            return Err(format!("partition {} does not own its seed", p.id));
        }
        if p.d_min > p.d_max {
            return Err(format!("partition {}: d_min {} > d_max {}", p.id, p.d_min, p.d_max));
        }
        for &c in &p.members {
            let i = map.index(c);
            if owner[i].replace(p.id).is_some() {
                return Err(format!("cell {c:?} in two partitions"));
            }
        }
    }
    let reach = reachable_from(map, &seeds);
    for i in 0..map.len() {
        if reach[i] != owner[i].is_some() {
            return Err(format!("cell {:?}: reachable {} labeled {}", map.pos(i), reach[i], owner[i].is_some()));
        }
    }
    Ok((parts.len(), star_shape_ratio(parts, map)))
}

fn criterion_2(out: &mut Vec<Outcome>) {
    let mut faults = Vec::new();
    let s1 = Scenario::load("scenario-1").unwrap();
    let mut cfg = MissionConfig::default();
    s1.apply_defaults(&mut cfg);
    let mut stars = Vec::new();
    match partition_faults(&s1.map, &cfg) {
        Ok((_, star)) => stars.push(star),
        Err(e) => faults.push(format!("scenario-1: {e}")),
    }
    let s1_star = stars.first().copied().unwrap_or(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut maps = 0;
    while maps < 20 {
        let (w, h, blocks) = (rng.gen_range(30..70), rng.gen_range(30..70), rng.gen_range(0..20));
        let map = random_map(&mut rng, w, h, blocks, 0.2);
        match partition_faults(&map, &cfg) {
            Ok((_, star)) => stars.push(star),
            // Clutter can leave no cell with enough clearance for a seed.
            Err(e) if e.contains("no partition seeds") => continue,
            Err(e) => faults.push(format!("random map {maps}: {e}")),
        }
        maps += 1;
    }
    let mean_star = stars.iter().sum::<f64>() / stars.len().max(1) as f64;
    let min_star = stars.iter().copied().fold(f64::INFINITY, f64::min);
    let pass = faults.is_empty() && s1_star >= 0.9 && mean_star >= 0.9;
    report(
        out,
        2,
        pass,
        format!(
            "partitions on scenario-1 + 20 random maps: {} faults{}; star-shape scenario-1 {s1_star:.3}, mean {mean_star:.3}, min {min_star:.3} (>= 0.9)",
            faults.len(),
            faults.first().map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
    );
}

fn criterion_3(out: &mut Vec<Outcome>) {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let (mut checked, mut faults) = (0usize, Vec::<String>::new());
    let s1 = Scenario::load("scenario-1").unwrap();
    for trial in 0..120 {
        let map = if trial % 10 == 0 { s1.map.clone() } else { random_map(&mut rng, 40, 40, 10, 0.2) };
        let res = map.resolution();
        let dso = distance_transform(&map);
        let free = free_cells(&map);
        let margin = static_margin(0.18, res);
        let obstacles: Vec<CellPos> = (0..rng.gen_range(0..15)).map(|_| free[rng.gen_range(0..free.len())]).collect();
        let areas: Vec<DynamicArea> = (0..rng.gen_range(0..6))
            .map(|_| {
                let c = free[rng.gen_range(0..free.len())];
                let (hw, hh) = (rng.gen_range(0..6), rng.gen_range(0..6));
                let member_cells = free
                    .iter()
                    .copied()
                    .filter(|f| f.col.abs_diff(c.col) <= hw && f.row.abs_diff(c.row) <= hh)
                    .collect();
                DynamicArea {
                    hull: Vec::new(),
                    member_cells,
                    n_do: rng.gen_range(1..8),
                    density: rng.gen_range(0.0..0.4),
                    source_tracks: Vec::new(),
                    forced_dense: rng.gen_bool(0.1),
                }
            })
            .collect();
        let robot = free[rng.gen_range(0..free.len())];
        let exempt: Vec<CellPos> =
            free.iter().copied().filter(|f| f.col.abs_diff(robot.col) <= 1 && f.row.abs_diff(robot.row) <= 1).collect();
        let o_th = rng.gen_range(0.0..0.3);
        let safety = rng.gen_range(0.0..0.6);
        let inp = PlannerInputs {
            map: &map,
            dso: &dso,
            static_margin: margin,
            obstacles: &obstacles,
            areas: &areas,
            o_th,
            safety,
            exempt: &exempt,
        };
        let vm = build_velocity_map(&inp);
        let without_dense: Vec<DynamicArea> = areas.iter().filter(|a| !a.is_dense(o_th)).cloned().collect();
        let base = build_velocity_map(&PlannerInputs { areas: &without_dense, ..inp.clone() });

        let n_do_max = areas.iter().map(|a| a.n_do).max().unwrap_or(0) as f64;
        let r2 = (safety / res).powi(2) + 1e-9;
        let near = |c: CellPos, set: &[CellPos]| {
            set.iter().any(|o| {
                let (dc, dr) = (c.col as f64 - o.col as f64, c.row as f64 - o.row as f64);
                dc * dc + dr * dr <= r2
            })
        };
        let dense_cells: Vec<CellPos> =
            areas.iter().filter(|a| a.is_dense(o_th)).flat_map(|a| a.member_cells.iter().copied()).collect();
        for i in 0..map.len() {
            let c = map.pos(i);
            let ex = exempt.contains(&c);
            let (want, case) = if map.occupancy()[i] || (dso.values()[i] < margin && !ex) {
                (0.0, SpeedCase::Static)
            } else if !ex && near(c, &obstacles) {
                (0.0, SpeedCase::Obstacle)
            } else if !ex && near(c, &dense_cells) {
                (0.0, SpeedCase::DenseArea)
            } else if let Some(s) = areas
                .iter()
                .filter(|a| !a.is_dense(o_th) && a.member_cells.contains(&c))
                .map(|a| (n_do_max - a.n_do as f64).max(AREA_SPEED_FLOOR))
                .reduce(f64::min)
            {
                (s, SpeedCase::Area)
            } else {
                (dso.values()[i] + n_do_max + 1.0, SpeedCase::Free)
            };
            let got = vm.field.values()[i];
            if got != want || vm.cases[i] != case {
                faults.push(format!("trial {trial} cell {c:?}: got {got} {:?}, want {want} {case:?}", vm.cases[i]));
            }
            // Dense areas only ever add zero-speed cells on top of the rest.
            let added = got == 0.0 && base.field.values()[i] != 0.0;
            if added != (case == SpeedCase::DenseArea) {
                faults.push(format!("trial {trial} cell {c:?}: dense-area addition mismatch"));
            }
            checked += 1;
        }
    }
    report(
        out,
        3,
        faults.is_empty(),
        format!(
            "velocity map case table on 120 random configurations, {checked} cells checked, {} mismatches{}",
            faults.len(),
            faults.first().map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
    );
}

fn criterion_4(out: &mut Vec<Outcome>) {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut faults = Vec::new();
    for k in 0..100_000 {
        let limits = if k % 2 == 0 {
            KinodynamicLimits::default()
        } else {
            KinodynamicLimits {
                v_max: rng.gen_range(0.1..2.0),
                w_max: rng.gen_range(0.2..3.0),
                dv: rng.gen_range(0.01..0.5),
                dw: rng.gen_range(0.01..1.0),
                radius: 0.2,
            }
        };
        let robot = RobotState {
            x: rng.gen_range(-10.0..10.0),
            y: rng.gen_range(-10.0..10.0),
            theta: rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
            v: rng.gen_range(0.0..=limits.v_max),
            w: rng.gen_range(-limits.w_max..=limits.w_max),
        };
        let dest = (robot.x + rng.gen_range(-5.0..5.0), robot.y + rng.gen_range(-5.0..5.0));
        let factor = rng.gen_range(0.0..=1.0);
        let (v, w) = compute_velocities(&robot, dest, factor, &limits);
        let dtheta = wrap_angle((dest.1 - robot.y).atan2(dest.0 - robot.x) - robot.theta);
        let eps = 1e-12;
        let ok = (0.0..=limits.v_max + eps).contains(&v)
            && w.abs() <= limits.w_max + eps
            && v - robot.v <= limits.dv + eps
            && (w - robot.w).abs() <= limits.dw + eps
            && (dtheta.abs() < std::f64::consts::FRAC_PI_2 || v == 0.0);
        if !ok {
            faults.push(format!("{robot:?} -> {dest:?}: v {v} w {w}"));
        }
    }
    report(
        out,
        4,
        faults.is_empty(),
        format!(
            "follower on 100000 random (state, destination) pairs: {} limit violations{}",
            faults.len(),
            faults.first().map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
    );
}

fn criterion_5(out: &mut Vec<Outcome>) {
    let mut mismatches = Vec::new();
    let s1 = Scenario::load("scenario-1").unwrap();
    let rooms = {
        let mut text = String::new();
        for r in 0..30 {
            for c in 0..50 {
                text.push(if r == 0 || r == 29 || c == 0 || c == 49 || (c == 25 && !(12..18).contains(&r)) {
                    '#'
                } else {
                    '.'
                });
            }
            text.push('\n');
        }
        Scenario::from_map("two-rooms", GridMap::parse(&text, 0.2).unwrap())
    };
    let cases = [
        (&s1, Strategy::Mada, true, 25, 3u64, 300.0),
        (&s1, Strategy::Greedy, false, 25, 9, 300.0),
        (&s1, Strategy::Madp, false, 10, 1, 300.0),
        (&rooms, Strategy::Mada, false, 6, 17, 600.0),
    ];
    for (scenario, strategy, projections, n, seed, timeout) in cases {
        let mut cfg = MissionConfig { strategy, projections, n_obstacles: n, ..MissionConfig::default() };
        scenario.apply_defaults(&mut cfg);
        cfg.timeout = timeout;
        let runs: Vec<Vec<u8>> = (0..2)
            .map(|_| {
                let mut buf = Vec::new();
                run_mission(scenario, &cfg, seed, Some(&mut buf)).unwrap();
                buf
            })
            .collect();
        if runs[0] != runs[1] || runs[0].is_empty() {
            mismatches.push(format!("{} {} seed {seed}", scenario.name, strategy.name()));
        }
    }
    report(
        out,
        5,
        mismatches.is_empty(),
        format!("byte-identical traces on {} repeated runs; mismatches: {mismatches:?}", cases.len()),
    );
}

fn criterion_6(out: &mut Vec<Outcome>) {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut worst: f64 = 0.0;
    for id in 0..100 {
        let d_max = rng.gen_range(0.0..40.0);
        let p = Partition {
            id,
            seed: CellPos::new(rng.gen_range(0..100), rng.gen_range(0..100)),
            members: Vec::new(),
            d_min: rng.gen_range(0.0..=d_max),
            d_max,
        };
        let v_max = rng.gen_range(0.05..3.0);
        let want = 2.0 * d_max / v_max;
        let got = wait_time(&p, v_max);
        worst = worst.max(if want == 0.0 { got.abs() } else { ((got - want) / want).abs() });
    }
    report(
        out,
        6,
        worst <= 1e-12,
        format!("waiting budget on 100 random partitions: max relative error {worst:.1e} (<= 1e-12)"),
    );
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile(&v, 0.5)
}

struct Cell {
    runs: usize,
    errors: usize,
    collisions: usize,
    observed: Vec<f64>,
    distance: Vec<f64>,
}

impl Cell {
    fn of(records: &[RunRecord]) -> Cell {
        let ok: Vec<_> = records.iter().filter_map(|r| r.metrics.as_ref()).collect();
        Cell {
            runs: records.len(),
            errors: records.len() - ok.len(),
            collisions: ok.iter().filter(|m| m.collided).count(),
            observed: ok.iter().map(|m| m.observed_ratio).collect(),
            distance: ok.iter().filter_map(|m| m.mean_min_obstacle_dist).collect(),
        }
    }

    fn collision_rate(&self) -> f64 {
        self.collisions as f64 / self.runs.max(1) as f64
    }
}

fn dense_sweep(strategies: Vec<Strategy>, projections: bool) -> Sweep {
    let base = MissionConfig {
        n_obstacles: 25,
        obstacle_speed: ObstacleSpeed::Slow,
        safety_factor: 1.5,
        o_th: 0.1,
        memory_mode: MemoryMode::KeepPointsForgetEmptyAreas,
        projections,
        ..MissionConfig::default()
    };
    Sweep {
        maps: vec!["scenario-1".into()],
        base,
        grid: Grid { strategy: strategies, ..Grid::default() },
        seeds: Seeds::Count(20),
    }
}

fn criteria_7_to_10(out: &mut Vec<Outcome>) {
    let started = Instant::now();
    let plain = run_sweep(&dense_sweep(vec![Strategy::Greedy, Strategy::Madp, Strategy::Mada], false), 0).unwrap();
    let projected = run_sweep(&dense_sweep(vec![Strategy::Mada], true), 0).unwrap();
    let by = |s: Strategy| -> Vec<RunRecord> { plain.iter().filter(|r| r.config.strategy == s).cloned().collect() };
    let (greedy, madp, mada, mada_p) = (
        Cell::of(&by(Strategy::Greedy)),
        Cell::of(&by(Strategy::Madp)),
        Cell::of(&by(Strategy::Mada)),
        Cell::of(&projected),
    );
    let errors = greedy.errors + madp.errors + mada.errors + mada_p.errors;
    let minutes = started.elapsed().as_secs_f64() / 60.0;
    std::io::stderr()
        .write_all(
            format!(
                "     dense scenario-1 sweep: 80 runs in {minutes:.1} min, {errors} errors\n     \
                 {:<7} median observed / collisions / median mean obstacle distance\n",
                "",
            )
            .as_bytes(),
        )
        .unwrap();
    for (name, c) in [("greedy", &greedy), ("madp", &madp), ("mada", &mada), ("mada+p", &mada_p)] {
        let line = format!(
            "     {name:<7} {:.3} / {:>2} of {} / {:.2} m\n",
            median(&c.observed),
            c.collisions,
            c.runs,
            median(&c.distance)
        );
        std::io::stderr().write_all(line.as_bytes()).unwrap();
    }

    let (m_greedy, m_madp, m_mada) = (median(&greedy.observed), median(&madp.observed), median(&mada.observed));
    report(
        out,
        7,
        errors == 0 && m_mada >= m_madp + 0.10 && (m_mada - m_greedy).abs() <= 0.10,
        format!(
            "median observed ratio MADA {m_mada:.3} >= MADP {m_madp:.3} + 0.10, |MADA - Greedy {m_greedy:.3}| = {:.3} <= 0.10",
            (m_mada - m_greedy).abs()
        ),
    );
    let (c_greedy, c_mada, c_madp) = (greedy.collision_rate(), mada.collision_rate(), madp.collision_rate());
    report(
        out,
        8,
        errors == 0 && c_greedy >= c_mada && c_mada >= c_madp,
        format!("collision rate Greedy {c_greedy:.2} >= MADA {c_mada:.2} >= MADP {c_madp:.2}"),
    );
    let (d_madp, d_mada, d_greedy) = (median(&madp.distance), median(&mada.distance), median(&greedy.distance));
    report(
        out,
        9,
        errors == 0 && d_madp >= d_mada && d_mada >= d_greedy,
        format!("median mean obstacle distance MADP {d_madp:.2} >= MADA {d_mada:.2} >= Greedy {d_greedy:.2} m"),
    );
    let c_mada_p = mada_p.collision_rate();
    let m_mada_p = median(&mada_p.observed);
    report(
        out,
        10,
        errors == 0 && c_mada_p <= 0.75 * c_mada && m_mada - m_mada_p <= 0.15,
        format!(
            "projections: MADA collision rate {c_mada:.2} -> {c_mada_p:.2} (<= {:.2}), median observed {m_mada:.3} -> {m_mada_p:.3} (drop <= 0.15)",
            0.75 * c_mada
        ),
    );
}

fn criteria_11_and_12(out: &mut Vec<Outcome>) {
    let mut max_ms: f64 = 0.0;
    let mut worst = String::new();
    let mut sanity_faults = Vec::new();
    for name in ["scenario-1", "scenario-2"] {
        let scenario = Scenario::load(name).unwrap();
        let mut probe = MissionConfig::default();
        scenario.apply_defaults(&mut probe);
        let plan = offline(&scenario, &probe).unwrap();
        for strategy in [Strategy::Greedy, Strategy::Madp, Strategy::Mada] {
            for n_obstacles in [0usize, 25] {
                if name == "scenario-1" && n_obstacles > 0 {
                    continue;
                }
                let mut cfg = MissionConfig { strategy, n_obstacles, ..MissionConfig::default() };
                scenario.apply_defaults(&mut cfg);
                let m = run_with_plan(&scenario, &plan, &cfg, 0, None).unwrap();
                if name == "scenario-2" && m.max_plan_ms > max_ms {
                    max_ms = m.max_plan_ms;
                    worst = format!("{} with {n_obstacles} obstacles", strategy.name());
                }
                if n_obstacles == 0 && (m.observed_ratio != 1.0 || m.collided || m.status != MissionStatus::Complete) {
                    sanity_faults.push(format!(
                        "{name} {}: {} observed {:.4} collided {}",
                        strategy.name(),
                        m.status.name(),
                        m.observed_ratio,
                        m.collided
                    ));
                }
            }
        }
    }
    let cells = {
        let s = Scenario::load("scenario-2").unwrap();
        (s.map.width(), s.map.height())
    };
    report(
        out,
        11,
        max_ms < 100.0 && cells.0 <= 400 && cells.1 <= 400,
        format!("max planning step on scenario-2 ({}x{} cells): {max_ms:.1} ms ({worst}) < 100 ms", cells.0, cells.1),
    );
    report(
        out,
        12,
        sanity_faults.is_empty(),
        format!(
            "zero obstacles, 3 strategies x 2 scenarios: observed 1.0 without collisions; faults: {sanity_faults:?}"
        ),
    );
}

#[test]
fn acceptance_criteria() {
    let mut out = Vec::new();
    criterion_1(&mut out);
    criterion_2(&mut out);
    criterion_3(&mut out);
    criterion_4(&mut out);
    criterion_5(&mut out);
    criterion_6(&mut out);
    criteria_11_and_12(&mut out);
    criteria_7_to_10(&mut out);
    out.sort_by_key(|o| o.id);
    let failed: Vec<String> = out.iter().filter(|o| !o.pass).map(|o| format!("{}: {}", o.id, o.detail)).collect();
    assert!(failed.is_empty(), "failed criteria:\n{}", failed.join("\n"));
}
