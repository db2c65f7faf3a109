//! Moving-obstacle tracking and dynamic areas.
//!
//! Visible obstacle cells that are not part of the static map are clustered
//! into detections, matched to tracks, and each track's recent positions are
//! wrapped in a convex hull. Overlapping hulls merge into one area whose
//! density is the share of its cells covered by obstacles believed present.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use pathfinding::prelude::{kuhn_munkres_min, Matrix};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{contains, convex_hull, interiors_intersect, Point};
use crate::grid::{CellPos, GridMap};

#[derive(Debug, Error, PartialEq)]
pub enum DynamicError {
    #[error("unknown memory mode {0:?}")]
    UnknownMode(String),
}

/// What happens to known areas when the robot looks at them again.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MemoryMode {
    /// Keep every point and every area.
    #[serde(rename = "memorize_all", alias = "i")]
    MemorizeAll,
    /// Hide an area while it is in view and empty; keep its points.
    #[default]
    #[serde(rename = "keep_points", alias = "ii")]
    KeepPointsForgetEmptyAreas,
    /// Drop an area and its tracks once seen empty.
    #[serde(rename = "forget_all", alias = "iii")]
    ForgetAll,
    /// Ignore every area while any part of it is in view.
    #[serde(rename = "forget_in_los", alias = "iv")]
    ForgetInLoS,
}

impl MemoryMode {
    pub const ALL: [MemoryMode; 4] =
        [Self::MemorizeAll, Self::KeepPointsForgetEmptyAreas, Self::ForgetAll, Self::ForgetInLoS];

    pub fn name(self) -> &'static str {
        match self {
            Self::MemorizeAll => "memorize_all",
            Self::KeepPointsForgetEmptyAreas => "keep_points",
            Self::ForgetAll => "forget_all",
            Self::ForgetInLoS => "forget_in_los",
        }
    }
}

impl fmt::Display for MemoryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MemoryMode {
    type Err = DynamicError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "memorize_all" | "i" => Ok(Self::MemorizeAll),
            "keep_points" | "ii" => Ok(Self::KeepPointsForgetEmptyAreas),
            "forget_all" | "iii" => Ok(Self::ForgetAll),
            "forget_in_los" | "iv" => Ok(Self::ForgetInLoS),
            other => Err(DynamicError::UnknownMode(other.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub t: f64,
    pub cell: CellPos,
    /// Metric centroid of the detection.
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObstacleTrack {
    pub id: u64,
    pub history: Vec<TrackPoint>,
    pub last_seen: f64,
    /// Meters per second.
    pub velocity: (f64, f64),
    /// Cells of the most recent detection.
    pub footprint: Vec<CellPos>,
    /// Half extents (meters) of the most recent detection's bounding box.
    pub half_extent: (f64, f64),
    /// False once the last known position has been seen empty.
    pub present: bool,
    /// Hidden from planning by the memory mode.
    pub suppressed: bool,
}

impl ObstacleTrack {
    pub fn last(&self) -> &TrackPoint {
        self.history.last().expect("history is never empty")
    }

    pub fn speed(&self) -> f64 {
        self.velocity.0.hypot(self.velocity.1)
    }
}

/// One 8-connected cluster of obstacle cells.
#[derive(Clone, Debug, PartialEq)]
pub struct Detection {
    pub cells: Vec<CellPos>,
    pub x: f64,
    pub y: f64,
    pub cell: CellPos,
    pub half_extent: (f64, f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackingParams {
    /// Minimum association radius (meters).
    pub gate_min: f64,
    /// Fastest plausible obstacle speed (m/s), widens the gate over time.
    pub speed_bound: f64,
    /// Time span (seconds) for the velocity finite difference.
    pub velocity_baseline: f64,
    /// Tracks unseen this long whose last position was seen empty are dropped.
    pub stale_after: f64,
    /// History older than this is dropped (except under `MemorizeAll`).
    pub history_window: f64,
    /// Share of an area's cells that must be in view for it to count as seen.
    pub seen_fraction: f64,
}

impl Default for TrackingParams {
    fn default() -> Self {
        Self {
            gate_min: 1.0,
            speed_bound: 0.5,
            velocity_baseline: 1.0,
            stale_after: 30.0,
            history_window: 60.0,
            seen_fraction: 0.9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DynamicArea {
    /// Counterclockwise, metric coordinates.
    pub hull: Vec<Point>,
    /// Free cells whose centers lie in the hull, row-major.
    #[serde(skip)]
    pub member_cells: Vec<CellPos>,
    pub n_do: usize,
    pub density: f64,
    pub source_tracks: Vec<u64>,
    /// Always treated as dense regardless of the threshold.
    pub forced_dense: bool,
}

impl DynamicArea {
    pub fn is_dense(&self, o_th: f64) -> bool {
        self.forced_dense || self.density > o_th
    }
}

/// Groups obstacle cells by 8-connectivity, ordered by first cell.
pub fn cluster_detections(cells: &[CellPos], map: &GridMap) -> Vec<Detection> {
    let mut marked = vec![false; map.len()];
    let mut sorted: Vec<CellPos> = cells.iter().copied().filter(|c| map.contains(*c)).collect();
    sorted.sort_by_key(|c| map.index(*c));
    sorted.dedup();
    for c in &sorted {
        marked[map.index(*c)] = true;
    }
    let res = map.resolution();
    let mut out = Vec::new();
    for &start in &sorted {
        if !marked[map.index(start)] {
            continue;
        }
        marked[map.index(start)] = false;
        let mut group = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(cur) = queue.pop_front() {
            for n in map.neighbors8(cur) {
                let j = map.index(n);
                if marked[j] {
                    marked[j] = false;
                    group.push(n);
                    queue.push_back(n);
                }
            }
        }
        group.sort_by_key(|c| map.index(*c));
        let n = group.len() as f64;
        let (sx, sy) = group.iter().fold((0.0, 0.0), |(ax, ay), c| {
            let (x, y) = map.center(*c);
            (ax + x, ay + y)
        });
        let (x, y) = (sx / n, sy / n);
        let cell = map.cell_at(x, y).unwrap_or(group[0]);
        let (c0, c1) = group.iter().fold((usize::MAX, 0), |(lo, hi), c| (lo.min(c.col), hi.max(c.col)));
        let (r0, r1) = group.iter().fold((usize::MAX, 0), |(lo, hi), c| (lo.min(c.row), hi.max(c.row)));
        let half_extent = ((c1 - c0 + 1) as f64 * res / 2.0, (r1 - r0 + 1) as f64 * res / 2.0);
        out.push(Detection { cells: group, x, y, cell, half_extent });
    }
    out
}

const UNMATCHED_COST: i64 = 1_000_000_000_000;
const INFEASIBLE_COST: i64 = 2 * UNMATCHED_COST;

/// Matches detections to tracks minimizing total centroid distance among
/// pairs inside each track's gate; returns the track index per detection.
/// The number of matches is maximized first.
pub fn associate(
    detections: &[Detection],
    tracks: &[ObstacleTrack],
    now: f64,
    params: &TrackingParams,
) -> Vec<Option<usize>> {
    let nd = detections.len();
    if nd == 0 {
        return Vec::new();
    }
    let nt = tracks.len();
    let mut rows = Vec::with_capacity(nd);
    for d in detections {
        let mut row = Vec::with_capacity(nt + nd);
        for t in tracks {
            let last = t.last();
            let gate = params.gate_min.max(params.speed_bound * (now - t.last_seen));
            let dist = (d.x - last.x).hypot(d.y - last.y);
            row.push(if dist <= gate { (dist * 1e6).round() as i64 } else { INFEASIBLE_COST });
        }
        row.extend(std::iter::repeat_n(UNMATCHED_COST, nd));
        rows.push(row);
    }
    let matrix = Matrix::from_rows(rows).expect("rows have equal length");
    let (_, assignment) = kuhn_munkres_min(&matrix);
    assignment.iter().enumerate().map(|(i, &j)| (j < nt && matrix[(i, j)] < UNMATCHED_COST).then_some(j)).collect()
}

fn estimate_velocity(history: &[TrackPoint], baseline: f64) -> (f64, f64) {
    let Some(last) = history.last() else { return (0.0, 0.0) };
    let reference = history.iter().rev().find(|p| p.t <= last.t - baseline).unwrap_or(&history[0]);
    let dt = last.t - reference.t;
    if dt <= 1e-9 {
        (0.0, 0.0)
    } else {
        ((last.x - reference.x) / dt, (last.y - reference.y) / dt)
    }
}

/// Folds one frame of obstacle cells into the track list. `visible` flags
/// every cell in view this frame (used to notice vacated positions).
pub fn track_obstacles(
    detected: &[CellPos],
    visible: &[bool],
    map: &GridMap,
    mut tracks: Vec<ObstacleTrack>,
    next_id: &mut u64,
    now: f64,
    params: &TrackingParams,
) -> Vec<ObstacleTrack> {
    let detections = cluster_detections(detected, map);
    let matches = associate(&detections, &tracks, now, params);
    let mut updated = vec![false; tracks.len()];
    for (d, m) in detections.iter().zip(&matches) {
        let point = TrackPoint { t: now, cell: d.cell, x: d.x, y: d.y };
        match *m {
            Some(j) => {
                let t = &mut tracks[j];
                if now > t.last().t {
                    t.history.push(point);
                } else {
                    *t.history.last_mut().expect("non-empty") = point;
                }
                t.last_seen = now;
                t.footprint = d.cells.clone();
                t.half_extent = d.half_extent;
                t.present = true;
                t.velocity = estimate_velocity(&t.history, params.velocity_baseline);
                updated[j] = true;
            }
            None => {
                tracks.push(ObstacleTrack {
                    id: *next_id,
                    history: vec![point],
                    last_seen: now,
                    velocity: (0.0, 0.0),
                    footprint: d.cells.clone(),
                    half_extent: d.half_extent,
                    present: true,
                    suppressed: false,
                });
                *next_id += 1;
            }
        }
    }
    for (t, _) in tracks.iter_mut().zip(&updated).filter(|(_, u)| !**u) {
        if t.present && t.footprint.iter().any(|c| visible.get(map.index(*c)).copied().unwrap_or(false)) {
            t.present = false;
        }
    }
    tracks
}

/// Drops old history points and stale tracks.
pub fn prune_tracks(tracks: &mut Vec<ObstacleTrack>, now: f64, mode: MemoryMode, params: &TrackingParams) {
    if mode == MemoryMode::MemorizeAll {
        return;
    }
    tracks.retain(|t| t.present || now - t.last_seen <= params.stale_after);
    for t in tracks.iter_mut() {
        let cutoff = now - params.history_window;
        let keep_from = t.history.iter().position(|p| p.t >= cutoff).unwrap_or(t.history.len() - 1);
        if keep_from > 0 {
            t.history.drain(..keep_from);
        }
    }
}

/// Hull corner points for a track: each distinct history cell expanded by
/// the track's footprint extent.
fn track_points(t: &ObstacleTrack, map: &GridMap) -> Vec<Point> {
    let (hx, hy) = t.half_extent;
    let mut cells: Vec<CellPos> = t.history.iter().map(|p| p.cell).collect();
    cells.sort_by_key(|c| map.index(*c));
    cells.dedup();
    let mut pts = Vec::with_capacity(cells.len() * 4);
    for c in cells {
        let (x, y) = map.center(c);
        pts.extend([
            Point::new(x - hx, y - hy),
            Point::new(x + hx, y - hy),
            Point::new(x + hx, y + hy),
            Point::new(x - hx, y + hy),
        ]);
    }
    pts
}

/// Free cells whose centers lie in the convex polygon.
pub fn rasterize(hull: &[Point], map: &GridMap) -> Vec<CellPos> {
    if hull.is_empty() {
        return Vec::new();
    }
    let res = map.resolution();
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in hull {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    let c0 = ((x0 / res - 0.5).ceil().max(0.0)) as usize;
    let r0 = ((y0 / res - 0.5).ceil().max(0.0)) as usize;
    let c1 = (x1 / res - 0.5).floor();
    let r1 = (y1 / res - 0.5).floor();
    if c1 < 0.0 || r1 < 0.0 {
        return Vec::new();
    }
    let c1 = (c1 as usize).min(map.width() - 1);
    let r1 = (r1 as usize).min(map.height() - 1);
    let mut out = Vec::new();
    for row in r0..=r1 {
        for col in c0..=c1 {
            let c = CellPos::new(col, row);
            let (x, y) = map.center(c);
            if map.is_free(c) && contains(hull, Point::new(x, y)) {
                out.push(c);
            }
        }
    }
    out
}

/// Cells covered by footprints of obstacles believed present.
pub fn present_obstacle_mask(tracks: &[ObstacleTrack], map: &GridMap) -> Vec<bool> {
    let mut mask = vec![false; map.len()];
    for t in tracks.iter().filter(|t| t.present) {
        for c in &t.footprint {
            mask[map.index(*c)] = true;
        }
    }
    mask
}

fn finish_area(hull: Vec<Point>, mut sources: Vec<u64>, occupied: &[bool], map: &GridMap) -> DynamicArea {
    let member_cells = rasterize(&hull, map);
    let n_do = member_cells.iter().filter(|c| occupied[map.index(**c)]).count();
    let density = if member_cells.is_empty() { 0.0 } else { (n_do as f64 / member_cells.len() as f64).min(1.0) };
    sources.sort();
    DynamicArea { hull, member_cells, n_do, density, source_tracks: sources, forced_dense: false }
}

/// One hull per track, with overlapping hulls merged, for every track
/// including suppressed ones.
pub fn build_all_areas(tracks: &[ObstacleTrack], map: &GridMap) -> Vec<DynamicArea> {
    let mut groups: Vec<(Vec<Point>, Vec<Point>, Vec<u64>)> = tracks
        .iter()
        .map(|t| {
            let pts = track_points(t, map);
            (convex_hull(&pts), pts, vec![t.id])
        })
        .collect();
    loop {
        let mut merged = false;
        'scan: for i in 0..groups.len() {
            for j in i + 1..groups.len() {
                if interiors_intersect(&groups[i].0, &groups[j].0) {
                    let (_, pts_j, ids_j) = groups.remove(j);
                    let g = &mut groups[i];
                    g.1.extend(pts_j);
                    g.2.extend(ids_j);
                    g.0 = convex_hull(&g.1);
                    merged = true;
                    break 'scan;
                }
            }
        }
        if !merged {
            break;
        }
    }
    let occupied = present_obstacle_mask(tracks, map);
    groups.into_iter().map(|(hull, _, ids)| finish_area(hull, ids, &occupied, map)).collect()
}

/// Areas for planning: built from tracks that are not suppressed.
pub fn build_areas(tracks: &[ObstacleTrack], map: &GridMap) -> Vec<DynamicArea> {
    let active: Vec<ObstacleTrack> = tracks.iter().filter(|t| !t.suppressed).cloned().collect();
    let occupied = present_obstacle_mask(tracks, map);
    build_all_areas(&active, map)
        .into_iter()
        .map(|a| {
            let hull = a.hull;
            finish_area(hull, a.source_tracks, &occupied, map)
        })
        .collect()
}

/// Applies the memory policy given the cells currently in view and returns
/// the areas to plan with plus the surviving tracks.
pub fn apply_memory_mode(
    tracks: Vec<ObstacleTrack>,
    visible: &[bool],
    mode: MemoryMode,
    map: &GridMap,
    params: &TrackingParams,
) -> (Vec<DynamicArea>, Vec<ObstacleTrack>) {
    let mut tracks = tracks;
    if mode != MemoryMode::MemorizeAll {
        let all = build_all_areas(&tracks, map);
        let occupied = present_obstacle_mask(&tracks, map);
        let mut forget: Vec<u64> = Vec::new();
        for area in &all {
            let n = area.member_cells.len();
            let in_view = area.member_cells.iter().filter(|c| visible[map.index(**c)]).count();
            let fully_seen = n > 0 && in_view as f64 >= params.seen_fraction * n as f64;
            let has_obstacle = area.member_cells.iter().any(|c| occupied[map.index(*c)]);
            let suppress = match mode {
                MemoryMode::MemorizeAll => false,
                MemoryMode::KeepPointsForgetEmptyAreas => {
                    if has_obstacle {
                        false
                    } else if fully_seen {
                        true
                    } else {
                        // Unchanged unless seen again.
                        continue;
                    }
                }
                MemoryMode::ForgetAll => {
                    if fully_seen && !has_obstacle {
                        forget.extend(&area.source_tracks);
                    }
                    continue;
                }
                MemoryMode::ForgetInLoS => in_view > 0,
            };
            for t in tracks.iter_mut().filter(|t| area.source_tracks.contains(&t.id)) {
                t.suppressed = suppress;
            }
        }
        if !forget.is_empty() {
            tracks.retain(|t| !forget.contains(&t.id));
        }
    }
    let areas = build_areas(&tracks, map);
    (areas, tracks)
}

/// Morphological dilation by a disk of `safety` meters.
pub fn inflate(cells: &[CellPos], map: &GridMap, safety: f64) -> Vec<CellPos> {
    let mut mask = vec![false; map.len()];
    for c in cells {
        mask[map.index(*c)] = true;
    }
    let out = inflate_mask(&mask, map.width(), map.height(), safety / map.resolution());
    (0..map.len()).filter(|&i| out[i]).map(|i| map.pos(i)).collect()
}

/// Dilation of a row-major mask by a disk of `radius` cells.
pub fn inflate_mask(mask: &[bool], width: usize, height: usize, radius: f64) -> Vec<bool> {
    if radius < 1.0 {
        return mask.to_vec();
    }
    let ri = radius.floor() as i64;
    let r2 = radius * radius + 1e-9;
    let offsets: Vec<(i64, i64)> = (-ri..=ri)
        .flat_map(|dr| (-ri..=ri).map(move |dc| (dc, dr)))
        .filter(|&(dc, dr)| (dc * dc + dr * dr) as f64 <= r2)
        .collect();
    let mut out = mask.to_vec();
    let (w, h) = (width as i64, height as i64);
    for (i, _) in mask.iter().enumerate().filter(|(_, m)| **m) {
        let (c, r) = ((i % width) as i64, (i / width) as i64);
        for &(dc, dr) in &offsets {
            let (nc, nr) = (c + dc, r + dr);
            if nc >= 0 && nr >= 0 && nc < w && nr < h {
                out[(nr * w + nc) as usize] = true;
            }
        }
    }
    out
}

/// Speeds below this (m/s) count as standing still.
pub const STILL_SPEED: f64 = 0.05;

/// Cells swept by present obstacles moving at their estimated velocity for
/// `horizon` seconds, each extrapolation stopping at the first static
/// obstacle.
pub fn project_tracks(tracks: &[ObstacleTrack], map: &GridMap, horizon: f64) -> Vec<CellPos> {
    let mut mask = vec![false; map.len()];
    if horizon <= 0.0 {
        return Vec::new();
    }
    let res = map.resolution();
    for t in tracks.iter().filter(|t| t.present && t.history.len() >= 2) {
        let last = *t.last();
        let mut mark_shifted = |dc: i64, dr: i64| {
            for c in &t.footprint {
                if let Some(p) = map.cell(c.col as i64 + dc, c.row as i64 + dr) {
                    if map.is_free(p) {
                        mask[map.index(p)] = true;
                    }
                }
            }
        };
        let speed = t.speed();
        if speed < STILL_SPEED {
            mark_shifted(0, 0);
            continue;
        }
        let dt = (0.5 * res / speed).min(0.1);
        let steps = (horizon / dt).ceil() as usize;
        for k in 1..=steps {
            let s = (k as f64 * dt).min(horizon);
            let (x, y) = (last.x + t.velocity.0 * s, last.y + t.velocity.1 * s);
            let Some(cell) = map.cell_at(x, y) else { break };
            if map.is_occupied(cell) {
                break;
            }
            mark_shifted(cell.col as i64 - last.cell.col as i64, cell.row as i64 - last.cell.row as i64);
        }
    }
    (0..map.len()).filter(|&i| mask[i]).map(|i| map.pos(i)).collect()
}

/// Owns the track list across frames.
#[derive(Clone, Debug)]
pub struct AreaTracker {
    pub tracks: Vec<ObstacleTrack>,
    pub areas: Vec<DynamicArea>,
    pub mode: MemoryMode,
    pub params: TrackingParams,
    next_id: u64,
}

impl AreaTracker {
    pub fn new(mode: MemoryMode, params: TrackingParams) -> Self {
        Self { tracks: Vec::new(), areas: Vec::new(), mode, params, next_id: 0 }
    }

    /// Tracks only; areas are left untouched.
    pub fn observe(&mut self, detected: &[CellPos], visible: &[bool], map: &GridMap, now: f64) {
        let tracks = std::mem::take(&mut self.tracks);
        self.tracks = track_obstacles(detected, visible, map, tracks, &mut self.next_id, now, &self.params);
        prune_tracks(&mut self.tracks, now, self.mode, &self.params);
    }

    /// Tracks, then rebuilds areas under the memory mode.
    pub fn update(&mut self, detected: &[CellPos], visible: &[bool], map: &GridMap, now: f64) {
        self.observe(detected, visible, map, now);
        let tracks = std::mem::take(&mut self.tracks);
        let (areas, tracks) = apply_memory_mode(tracks, visible, self.mode, map, &self.params);
        self.tracks = tracks;
        self.areas = areas;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open(w: usize, h: usize) -> GridMap {
        GridMap::new(w, h, 0.1).unwrap()
    }

    fn track_at(id: u64, map: &GridMap, cells: &[(usize, usize, f64)]) -> ObstacleTrack {
        let history: Vec<TrackPoint> = cells
            .iter()
            .map(|&(c, r, t)| {
                let cell = CellPos::new(c, r);
                let (x, y) = map.center(cell);
                TrackPoint { t, cell, x, y }
            })
            .collect();
        let last = *history.last().unwrap();
        ObstacleTrack {
            id,
            velocity: estimate_velocity(&history, 1.0),
            last_seen: last.t,
            footprint: vec![last.cell],
            half_extent: (0.05, 0.05),
            history,
            present: true,
            suppressed: false,
        }
    }

    #[test]
    fn memory_mode_names_round_trip() {
        for m in MemoryMode::ALL {
            assert_eq!(m.name().parse::<MemoryMode>().unwrap(), m);
        }
        assert_eq!("v".parse::<MemoryMode>(), Err(DynamicError::UnknownMode("v".into())));
    }

    #[test]
    fn clusters_split_by_gap() {
        let map = open(10, 10);
        let cells = [CellPos::new(1, 1), CellPos::new(2, 2), CellPos::new(6, 6), CellPos::new(6, 7)];
        let d = cluster_detections(&cells, &map);
        assert_eq!(d.len(), 2);
        assert_eq!(d[0].cells.len(), 2);
        assert!((d[1].x - 0.65).abs() < 1e-12 && (d[1].y - 0.7).abs() < 1e-12);
        assert_eq!(d[1].half_extent, (0.05, 0.1));
    }

    #[test]
    fn no_detections_leave_tracks_alone() {
        let map = open(10, 10);
        let tracks = vec![track_at(0, &map, &[(3, 3, 0.0)])];
        let mut next = 1;
        let out = track_obstacles(&[], &[false; 100], &map, tracks.clone(), &mut next, 0.1, &TrackingParams::default());
        assert_eq!(out, tracks);
    }

    #[test]
    fn detection_inside_gate_extends_track() {
        let map = open(40, 10);
        let tracks = vec![track_at(0, &map, &[(5, 5, 0.0)])];
        let mut next = 1;
        let out = track_obstacles(
            &[CellPos::new(8, 5)],
            &vec![true; 400],
            &map,
            tracks,
            &mut next,
            0.1,
            &TrackingParams::default(),
        );
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].history.len(), 2);
        assert_eq!(next, 1);
        // Far detection spawns a new track.
        let out = track_obstacles(
            &[CellPos::new(30, 5)],
            &vec![true; 400],
            &map,
            out,
            &mut next,
            0.2,
            &TrackingParams::default(),
        );
        assert_eq!(out.len(), 2);
        assert_eq!(out[1].id, 1);
        assert!(!out[0].present);
    }

    fn brute_assign(dets: &[Detection], tracks: &[ObstacleTrack], now: f64, p: &TrackingParams) -> (usize, f64) {
        fn rec(
            i: usize,
            dets: &[Detection],
            tracks: &[ObstacleTrack],
            used: &mut Vec<bool>,
            now: f64,
            p: &TrackingParams,
        ) -> (usize, f64) {
            if i == dets.len() {
                return (0, 0.0);
            }
            let mut best = rec(i + 1, dets, tracks, used, now, p);
            for j in 0..tracks.len() {
                if used[j] {
                    continue;
                }
                let l = tracks[j].last();
                let d = (dets[i].x - l.x).hypot(dets[i].y - l.y);
                if d > p.gate_min.max(p.speed_bound * (now - tracks[j].last_seen)) {
                    continue;
                }
                used[j] = true;
                let (m, c) = rec(i + 1, dets, tracks, used, now, p);
                used[j] = false;
                let cand = (m + 1, c + d);
                if cand.0 > best.0 || (cand.0 == best.0 && cand.1 < best.1 - 1e-9) {
                    best = cand;
                }
            }
            best
        }
        rec(0, dets, tracks, &mut vec![false; tracks.len()], now, p)
    }

    #[test]
    fn assignment_matches_exhaustive_search() {
        use rand::{Rng, SeedableRng};
        let map = open(30, 30);
        let params = TrackingParams::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..300 {
            let nt = rng.gen_range(0..=4);
            let nd = rng.gen_range(0..=4);
            let tracks: Vec<ObstacleTrack> = (0..nt)
                .map(|i| track_at(i as u64, &map, &[(rng.gen_range(0..30), rng.gen_range(0..30), 0.0)]))
                .collect();
            let dets: Vec<Detection> = (0..nd)
                .map(|_| {
                    let c = CellPos::new(rng.gen_range(0..30), rng.gen_range(0..30));
                    let (x, y) = map.center(c);
                    Detection { cells: vec![c], x, y, cell: c, half_extent: (0.05, 0.05) }
                })
                .collect();
            let got = associate(&dets, &tracks, 0.1, &params);
            let mut used = vec![false; nt];
            let mut total = 0.0;
            let mut count = 0;
            for (i, m) in got.iter().enumerate() {
                if let Some(j) = *m {
                    assert!(!used[j]);
                    used[j] = true;
                    let l = tracks[j].last();
                    total += (dets[i].x - l.x).hypot(dets[i].y - l.y);
                    count += 1;
                }
            }
            let (bm, bc) = brute_assign(&dets, &tracks, 0.1, &params);
            assert_eq!(count, bm);
            assert!((total - bc).abs() < 1e-5, "{total} vs {bc}");
        }
    }

    #[test]
    fn crossed_pair_assignment() {
        let map = open(30, 10);
        let tracks = vec![track_at(0, &map, &[(5, 5, 0.0)]), track_at(1, &map, &[(10, 5, 0.0)])];
        let dets = cluster_detections(&[CellPos::new(11, 5), CellPos::new(6, 8)], &map);
        // dets sorted row-major: (11,5) first.
        assert_eq!(associate(&dets, &tracks, 0.1, &TrackingParams::default()), vec![Some(1), Some(0)]);
    }

    #[test]
    fn stationary_obstacle_area_is_its_footprint() {
        let map = open(20, 20);
        let mut t = track_at(0, &map, &[(5, 5, 0.0), (5, 5, 0.1), (5, 5, 0.2)]);
        t.footprint = vec![CellPos::new(4, 5), CellPos::new(5, 5), CellPos::new(6, 5)];
        t.half_extent = (0.15, 0.05);
        let areas = build_areas(&[t], &map);
        assert_eq!(areas.len(), 1);
        assert_eq!(areas[0].member_cells, vec![CellPos::new(4, 5), CellPos::new(5, 5), CellPos::new(6, 5)]);
        assert_eq!(areas[0].density, 1.0);
    }

    #[test]
    fn collinear_history_gives_thick_segment() {
        let map = open(30, 10);
        let t = track_at(0, &map, &[(2, 5, 0.0), (6, 5, 1.0), (10, 5, 2.0)]);
        let areas = build_areas(std::slice::from_ref(&t), &map);
        let a = &areas[0];
        assert!(a.hull.len() >= 4);
        for p in &t.history {
            assert!(contains(&a.hull, Point::new(p.x, p.y)));
        }
        assert_eq!(a.member_cells.len(), 9);
        assert!((a.density - 1.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn overlapping_hulls_merge() {
        let map = open(30, 30);
        let a = track_at(0, &map, &[(2, 5, 0.0), (10, 5, 1.0)]);
        let b = track_at(1, &map, &[(6, 2, 0.0), (6, 10, 1.0)]);
        let c = track_at(2, &map, &[(25, 25, 0.0)]);
        let areas = build_areas(&[a, b, c], &map);
        assert_eq!(areas.len(), 2);
        assert_eq!(areas[0].source_tracks, vec![0, 1]);
        for i in 0..areas.len() {
            for j in i + 1..areas.len() {
                assert!(!interiors_intersect(&areas[i].hull, &areas[j].hull));
            }
        }
    }

    #[test]
    fn memorize_all_is_identity() {
        let map = open(20, 20);
        let tracks = vec![track_at(0, &map, &[(3, 3, 0.0), (8, 3, 1.0)])];
        let (areas, out) = apply_memory_mode(
            tracks.clone(),
            &vec![false; 400],
            MemoryMode::MemorizeAll,
            &map,
            &TrackingParams::default(),
        );
        assert_eq!(out, tracks);
        assert_eq!(areas, build_areas(&tracks, &map));
    }

    #[test]
    fn keep_points_retains_occupied_area() {
        let map = open(20, 20);
        let tracks = vec![track_at(0, &map, &[(3, 3, 0.0), (8, 3, 1.0)])];
        let (areas, out) = apply_memory_mode(
            tracks,
            &vec![true; 400],
            MemoryMode::KeepPointsForgetEmptyAreas,
            &map,
            &TrackingParams::default(),
        );
        assert_eq!(areas.len(), 1);
        assert!(!out[0].suppressed);
    }

    #[test]
    fn keep_points_hides_then_restores() {
        let map = open(20, 20);
        let mut t = track_at(0, &map, &[(3, 3, 0.0), (8, 3, 1.0)]);
        t.present = false;
        let params = TrackingParams::default();
        let (areas, tracks) =
            apply_memory_mode(vec![t], &vec![true; 400], MemoryMode::KeepPointsForgetEmptyAreas, &map, &params);
        assert!(areas.is_empty());
        assert_eq!(tracks[0].history.len(), 2);
        let mut tracks = tracks;
        tracks[0].present = true;
        let (areas, _) =
            apply_memory_mode(tracks, &vec![true; 400], MemoryMode::KeepPointsForgetEmptyAreas, &map, &params);
        assert_eq!(areas.len(), 1);
    }

    #[test]
    fn forget_all_drops_empty_area_and_history() {
        let map = open(40, 20);
        let mut gone = track_at(0, &map, &[(3, 3, 0.0), (8, 3, 1.0)]);
        gone.present = false;
        let stays = track_at(1, &map, &[(30, 10, 0.0), (34, 10, 1.0)]);
        let mut visible = vec![false; 800];
        for r in 0..10 {
            for c in 0..15 {
                visible[r * 40 + c] = true;
            }
        }
        let (areas, tracks) = apply_memory_mode(
            vec![gone, stays.clone()],
            &visible,
            MemoryMode::ForgetAll,
            &map,
            &TrackingParams::default(),
        );
        assert_eq!(tracks, vec![stays.clone()]);
        assert_eq!(areas, build_areas(&[stays], &map));
    }

    #[test]
    fn forget_in_los_hides_only_while_visible() {
        let map = open(20, 20);
        let tracks = vec![track_at(0, &map, &[(3, 3, 0.0), (8, 3, 1.0)])];
        let mut visible = vec![false; 400];
        visible[3 * 20 + 5] = true;
        let params = TrackingParams::default();
        let (areas, tracks) = apply_memory_mode(tracks, &visible, MemoryMode::ForgetInLoS, &map, &params);
        assert!(areas.is_empty());
        let (areas, _) = apply_memory_mode(tracks, &vec![false; 400], MemoryMode::ForgetInLoS, &map, &params);
        assert_eq!(areas.len(), 1);
    }

    #[test]
    fn inflation_shapes() {
        let map = open(9, 9);
        let c = [CellPos::new(4, 4)];
        assert_eq!(inflate(&c, &map, 0.0), c.to_vec());
        let plus = inflate(&c, &map, 0.1);
        assert_eq!(plus.len(), 5);
        let r = 0.18 * 1.5;
        let big = inflate(&c, &map, r);
        for i in 0..map.len() {
            let p = map.pos(i);
            assert_eq!(big.contains(&p), map.metric_dist(p, c[0]) <= r + 1e-9, "{p}");
        }
    }

    #[test]
    fn projection_cases() {
        let map = open(60, 20);
        let still = track_at(0, &map, &[(5, 5, 0.0), (5, 5, 1.0)]);
        assert!(project_tracks(std::slice::from_ref(&still), &map, 0.0).is_empty());
        assert_eq!(project_tracks(&[still], &map, 2.0), vec![CellPos::new(5, 5)]);

        // 1 m/s east for 2 s from (0.55, 1.05).
        let mover = track_at(1, &map, &[(5, 10, 0.0), (15, 10, 1.0)]);
        assert!((mover.velocity.0 - 1.0).abs() < 1e-9);
        let cells = project_tracks(&[mover], &map, 2.0);
        for c in &cells {
            let (x, y) = map.center(*c);
            let along = x.clamp(1.55, 3.55);
            assert!((x - along).hypot(y - 1.05) <= 0.1 + 1e-9, "{c}");
        }
        assert!(cells.contains(&CellPos::new(35, 10)));
    }

    #[test]
    fn projection_stops_at_walls() {
        let mut map = open(60, 20);
        for r in 0..20 {
            map.set_occupied(CellPos::new(25, r), true);
        }
        let mover = track_at(1, &map, &[(5, 10, 0.0), (15, 10, 1.0)]);
        let cells = project_tracks(&[mover], &map, 2.0);
        assert!(cells.iter().all(|c| c.col < 25));
        assert!(cells.contains(&CellPos::new(24, 10)));
    }
}
