//! Simulated world: moving obstacles, robot kinematics, sensing and
//! collision checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::Region;
use crate::follower::RobotState;
use crate::geometry::{interiors_intersect, oriented_rect, point_polygon_distance, Point};
use crate::grid::{visible_cells_in, CellPos, GridMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstacleMode {
    Still,
    Straight,
    TurnLeft,
    TurnRight,
}

impl ObstacleMode {
    const ALL: [ObstacleMode; 4] = [Self::Still, Self::Straight, Self::TurnLeft, Self::TurnRight];

    /// Duration range in seconds.
    pub fn duration(self) -> (f64, f64) {
        match self {
            Self::Still => (5.0, 15.0),
            Self::Straight => (5.0, 20.0),
            Self::TurnLeft | Self::TurnRight => (1.0, 3.0),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ObstacleSim {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub half_len: f64,
    pub half_wid: f64,
    pub mode: ObstacleMode,
    pub mode_timer: f64,
    pub speed: f64,
    pub turn_rate: f64,
    rng: ChaCha8Rng,
}

impl ObstacleSim {
    /// Obstacle with its own random stream.
    pub fn new(id: usize, pose: (f64, f64, f64), size: [f64; 2], profile: (f64, f64), rng: ChaCha8Rng) -> Self {
        let mut o = Self {
            id,
            x: pose.0,
            y: pose.1,
            theta: pose.2,
            half_len: size[0] / 2.0,
            half_wid: size[1] / 2.0,
            mode: ObstacleMode::Still,
            mode_timer: 0.0,
            speed: profile.0,
            turn_rate: profile.1,
            rng,
        };
        o.draw_mode();
        o
    }

    pub fn polygon(&self) -> [Point; 4] {
        oriented_rect(self.x, self.y, self.theta, self.half_len, self.half_wid)
    }

    fn draw_mode(&mut self) {
        self.mode = ObstacleMode::ALL[self.rng.gen_range(0..4)];
        let (lo, hi) = self.mode.duration();
        self.mode_timer = self.rng.gen_range(lo..=hi);
    }

    fn command(&self) -> (f64, f64) {
        match self.mode {
            ObstacleMode::Still => (0.0, 0.0),
            ObstacleMode::Straight => (self.speed, 0.0),
            ObstacleMode::TurnLeft => (self.speed, self.turn_rate),
            ObstacleMode::TurnRight => (self.speed, -self.turn_rate),
        }
    }

    /// Advances one period. A move that would touch a static obstacle is
    /// cancelled and a new maneuver drawn.
    pub fn step(&mut self, map: &GridMap, dt: f64) {
        if self.mode_timer <= 0.0 {
            self.draw_mode();
        }
        let (v, w) = self.command();
        let next = integrate(RobotState { x: self.x, y: self.y, theta: self.theta, v, w }, v, w, dt);
        let poly = oriented_rect(next.x, next.y, next.theta, self.half_len, self.half_wid);
        if polygon_hits_static(&poly, map) {
            self.draw_mode();
        } else {
            self.x = next.x;
            self.y = next.y;
            self.theta = next.theta;
            self.mode_timer -= dt;
        }
    }
}

fn cell_square(map: &GridMap, c: CellPos) -> [Point; 4] {
    let res = map.resolution();
    let (x0, y0) = (c.col as f64 * res, c.row as f64 * res);
    [Point::new(x0, y0), Point::new(x0 + res, y0), Point::new(x0 + res, y0 + res), Point::new(x0, y0 + res)]
}

/// Cells overlapping the bounding box of `poly`, clamped to the map;
/// `None` when the box leaves the map.
fn bbox_cells(poly: &[Point], map: &GridMap, pad: f64) -> Option<(usize, usize, usize, usize)> {
    let res = map.resolution();
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in poly {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    let (wm, hm) = (map.width() as f64 * res, map.height() as f64 * res);
    if x0 - pad < 0.0 || y0 - pad < 0.0 || x1 + pad > wm || y1 + pad > hm {
        return None;
    }
    let c0 = ((x0 - pad) / res).floor() as usize;
    let r0 = ((y0 - pad) / res).floor() as usize;
    let c1 = (((x1 + pad) / res).floor() as usize).min(map.width() - 1);
    let r1 = (((y1 + pad) / res).floor() as usize).min(map.height() - 1);
    Some((c0, c1, r0, r1))
}

/// Whether a convex polygon overlaps an occupied cell or leaves the map.
pub fn polygon_hits_static(poly: &[Point], map: &GridMap) -> bool {
    let Some((c0, c1, r0, r1)) = bbox_cells(poly, map, 0.0) else { return true };
    for row in r0..=r1 {
        for col in c0..=c1 {
            let c = CellPos::new(col, row);
            if map.is_occupied(c) && interiors_intersect(poly, &cell_square(map, c)) {
                return true;
            }
        }
    }
    false
}

/// Cells whose centers lie inside the obstacle rectangle.
pub fn obstacle_cells(o: &ObstacleSim, map: &GridMap) -> Vec<CellPos> {
    let poly = o.polygon();
    let Some((c0, c1, r0, r1)) =
        bbox_cells(&poly, map, 0.0).or_else(|| Some((0, map.width() - 1, 0, map.height() - 1)))
    else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for row in r0..=r1 {
        for col in c0..=c1 {
            let c = CellPos::new(col, row);
            let (x, y) = map.center(c);
            if crate::geometry::contains(&poly, Point::new(x, y)) {
                out.push(c);
            }
        }
    }
    out
}

/// Unicycle update with midpoint heading; the result's `v`/`w` are the
/// applied command.
pub fn integrate(s: RobotState, v: f64, w: f64, dt: f64) -> RobotState {
    let mid = s.theta + 0.5 * w * dt;
    RobotState {
        x: s.x + v * mid.cos() * dt,
        y: s.y + v * mid.sin() * dt,
        theta: crate::follower::wrap_angle(s.theta + w * dt),
        v,
        w,
    }
}

/// Robot disk against obstacle rectangles and occupied cells; contact
/// counts as collision.
pub fn detect_collision(robot: &RobotState, radius: f64, obstacles: &[ObstacleSim], map: &GridMap) -> bool {
    let p = Point::new(robot.x, robot.y);
    if obstacles.iter().any(|o| point_polygon_distance(&o.polygon(), p) <= radius) {
        return true;
    }
    let disk = [Point::new(robot.x - radius, robot.y - radius), Point::new(robot.x + radius, robot.y + radius)];
    let Some((c0, c1, r0, r1)) = bbox_cells(&disk, map, 0.0) else { return true };
    for row in r0..=r1 {
        for col in c0..=c1 {
            let c = CellPos::new(col, row);
            if map.is_occupied(c) && point_polygon_distance(&cell_square(map, c), p) <= radius {
                return true;
            }
        }
    }
    false
}

/// Surface distance from the robot disk to the closest obstacle rectangle.
pub fn min_obstacle_distance(robot: &RobotState, radius: f64, obstacles: &[ObstacleSim]) -> Option<f64> {
    let p = Point::new(robot.x, robot.y);
    obstacles.iter().map(|o| (point_polygon_distance(&o.polygon(), p) - radius).max(0.0)).min_by(f64::total_cmp)
}

/// What the robot perceives in one frame.
#[derive(Clone, Debug, Default)]
pub struct Sensed {
    /// Cells in view, row-major.
    pub visible: Vec<CellPos>,
    /// Visible cells covered by moving obstacles.
    pub obstacle_cells: Vec<CellPos>,
}

/// 360 degree sensing from the robot's cell with obstacles rasterized into
/// the occupancy.
pub fn sense(map: &GridMap, robot_cell: CellPos, r_v: f64, obstacles: &[ObstacleSim]) -> Sensed {
    let mut occ = map.occupancy().to_vec();
    let mut dynamic = vec![false; map.len()];
    for o in obstacles {
        for c in obstacle_cells(o, map) {
            let i = map.index(c);
            if !occ[i] {
                occ[i] = true;
                dynamic[i] = true;
            }
        }
    }
    let ri = map.index(robot_cell);
    occ[ri] = map.occupancy()[ri];
    dynamic[ri] = false;
    let visible =
        visible_cells_in(&occ, map.width(), map.height(), map.resolution(), robot_cell, r_v).unwrap_or_default();
    let obstacle_cells = visible.iter().copied().filter(|c| dynamic[map.index(*c)]).collect();
    Sensed { visible, obstacle_cells }
}

/// Random obstacle placement inside the regions (whole map when empty),
/// clear of static obstacles and at least `keep_out` meters from `avoid`.
#[allow(clippy::too_many_arguments)]
pub fn spawn_obstacles(
    map: &GridMap,
    n: usize,
    regions: &[Region],
    size: [f64; 2],
    profile: (f64, f64),
    avoid: (f64, f64),
    keep_out: f64,
    seed: u64,
) -> Vec<ObstacleSim> {
    let mut init = ChaCha8Rng::seed_from_u64(seed);
    let whole = [0.0, 0.0, map.width() as f64 * map.resolution(), map.height() as f64 * map.resolution()];
    let regions: Vec<Region> = if regions.is_empty() { vec![whole] } else { regions.to_vec() };
    let mut out = Vec::with_capacity(n);
    for id in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(id as u64 + 1);
        let mut pose = None;
        for _ in 0..10_000 {
            let r = regions[init.gen_range(0..regions.len())];
            let x = init.gen_range(r[0]..r[2]);
            let y = init.gen_range(r[1]..r[3]);
            let theta = init.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            let poly = oriented_rect(x, y, theta, size[0] / 2.0, size[1] / 2.0);
            if (x - avoid.0).hypot(y - avoid.1) >= keep_out && !polygon_hits_static(&poly, map) {
                pose = Some((x, y, theta));
                break;
            }
        }
        if let Some(p) = pose {
            out.push(ObstacleSim::new(id, p, size, profile, rng));
        }
    }
    out
}
