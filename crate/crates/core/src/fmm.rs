//! Fast Marching solver for `|∇T| F = 1` on a regular grid, and steepest
//! descent path extraction over the resulting arrival-time field.
//!
//! The scheme is first-order upwind with two stencils: the orthogonal
//! 4-neighbour stencil and the same stencil rotated by 45° (spacing `√2·h`).
//! Each cell keeps the smaller of the two estimates. Diagonal neighbours only
//! contribute when both cells flanking the diagonal are passable, so fronts
//! never squeeze between two touching obstacles.
//!
//! Multi-source solves track which source each value came from. A cell may
//! hold values for several sources near a collision line; values are only
//! combined from the same source, so the multi-source field is the pointwise
//! minimum of the single-source fields.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use smallvec::SmallVec;
use thiserror::Error;

use crate::grid::{CellPos, GridMap};

/// Arrival time of cells no front reached.
pub const UNREACHED: f64 = f64::INFINITY;

/// Label value for cells no front reached.
pub const NO_LABEL: u32 = u32::MAX;

/// Extra fronts are carried this many cell-crossing times beyond the best
/// value at a cell before being dropped. A dropped value can still leak into
/// a neighbour's two-axis update, with an error that shrinks about fourfold
/// per cell; at 8 crossings it no longer reaches cells the front wins.
const LABEL_MARGIN_CROSSINGS: f64 = 8.0;

/// Cheaper margin for the distance transform, where only the minimum matters.
const DISTANCE_MARGIN_CROSSINGS: f64 = 4.0;

#[derive(Debug, Error, PartialEq)]
pub enum FmmError {
    #[error("at least one source is required")]
    NoSources,
    #[error("source {0} lies outside the field")]
    SourceOutOfBounds(CellPos),
    #[error("source {0} has zero speed")]
    ZeroSpeedSource(CellPos),
    #[error("start cell {0} was not reached by any front")]
    Unreached(CellPos),
    #[error("descent stalled at {0} with positive value")]
    LocalMinimum(CellPos),
}

/// Per-cell arrival time (or distance) field.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    width: usize,
    height: usize,
    spacing: f64,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn filled(width: usize, height: usize, spacing: f64, value: f64) -> Self {
        Self { width, height, spacing, values: vec![value; width * height] }
    }

    pub fn from_values(width: usize, height: usize, spacing: f64, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), width * height, "field shape mismatch");
        Self { width, height, spacing, values }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, p: CellPos) -> f64 {
        self.values[p.row * self.width + p.col]
    }

    #[inline]
    pub fn is_reached(&self, p: CellPos) -> bool {
        self.get(p).is_finite()
    }

    /// Largest finite value and its cell; ties go to the lowest row-major index.
    pub fn argmax(&self) -> Option<(CellPos, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &v) in self.values.iter().enumerate() {
            if v.is_finite() && best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        best.map(|(i, v)| (self.pos(i), v))
    }

    fn pos(&self, i: usize) -> CellPos {
        CellPos::new(i % self.width, i / self.width)
    }
}

/// Per-cell front speed. Zero marks an impassable cell.
#[derive(Clone, Debug, PartialEq)]
pub struct VelocityField {
    width: usize,
    height: usize,
    spacing: f64,
    values: Vec<f64>,
}

impl VelocityField {
    pub fn new(width: usize, height: usize, spacing: f64, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), width * height, "field shape mismatch");
        debug_assert!(values.iter().all(|v| *v >= 0.0), "speeds must be non-negative");
        Self { width, height, spacing, values }
    }

    /// Speed 1 on free cells, 0 on occupied ones.
    pub fn from_map(map: &GridMap) -> Self {
        let values = map.occupancy().iter().map(|&o| if o { 0.0 } else { 1.0 }).collect();
        Self::new(map.width(), map.height(), map.resolution(), values)
    }

    pub fn uniform(width: usize, height: usize, spacing: f64, speed: f64) -> Self {
        Self::new(width, height, spacing, vec![speed; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, p: CellPos) -> f64 {
        self.values[p.row * self.width + p.col]
    }
}

/// Result of a labeled multi-source solve.
#[derive(Clone, Debug)]
pub struct LabeledField {
    pub field: ScalarField,
    /// Index into the source list of the front that reached each cell first,
    /// or [`NO_LABEL`].
    pub labels: Vec<u32>,
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    t: f64,
    index: usize,
    label: u32,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.t.total_cmp(&other.t).then(self.index.cmp(&other.index)).then(self.label.cmp(&other.label))
    }
}

type Finals = SmallVec<[(u32, f64); 2]>;

struct Marcher<'a> {
    speed: &'a VelocityField,
    finals: Vec<Finals>,
    best: Vec<f64>,
    label: Vec<u32>,
    heap: BinaryHeap<Reverse<Entry>>,
    margin_crossings: f64,
}

const ORTHO: [(i64, i64); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
const DIAG: [(i64, i64); 4] = [(-1, -1), (1, 1), (1, -1), (-1, 1)];

impl<'a> Marcher<'a> {
    fn new(speed: &'a VelocityField, margin_crossings: f64) -> Self {
        let n = speed.values.len();
        Self {
            speed,
            finals: vec![Finals::new(); n],
            best: vec![UNREACHED; n],
            label: vec![NO_LABEL; n],
            heap: BinaryHeap::new(),
            margin_crossings,
        }
    }

    #[inline]
    fn at(&self, col: i64, row: i64) -> Option<usize> {
        neighbour(self.speed, col, row)
    }

    #[inline]
    fn value(&self, index: Option<usize>, label: u32) -> f64 {
        index.and_then(|i| self.finals[i].iter().find(|(l, _)| *l == label).map(|(_, t)| *t)).unwrap_or(UNREACHED)
    }

    #[inline]
    fn margin(&self, index: usize) -> f64 {
        self.margin_crossings * self.speed.spacing / self.speed.values[index]
    }

    /// Upwind estimate for `label` at cell `index` from that label's final values.
    fn estimate(&self, index: usize, label: u32) -> f64 {
        upwind(self.speed, index, |i| self.value(Some(i), label))
    }

    /// Marches until the heap empties or a cell accepted by `stop` is
    /// finalized first; returns that cell.
    fn run(&mut self, stop: impl Fn(usize) -> bool) -> Option<usize> {
        let w = self.speed.width;
        while let Some(Reverse(Entry { t, index, label })) = self.heap.pop() {
            if self.finals[index].iter().any(|(l, _)| *l == label) {
                continue;
            }
            let first = !self.best[index].is_finite();
            if !first && t > self.best[index] + self.margin(index) {
                continue;
            }
            self.finals[index].push((label, t));
            if first {
                self.best[index] = t;
                self.label[index] = label;
                if stop(index) {
                    return Some(index);
                }
            }
            let (col, row) = ((index % w) as i64, (index / w) as i64);
            for (dc, dr) in ORTHO.iter().chain(DIAG.iter()) {
                let Some(n) = self.at(col + dc, row + dr) else { continue };
                if self.speed.values[n] <= 0.0 || self.finals[n].iter().any(|(l, _)| *l == label) {
                    continue;
                }
                let cand = self.estimate(n, label);
                if !cand.is_finite() {
                    continue;
                }
                if self.best[n].is_finite() && cand > self.best[n] + self.margin(n) {
                    continue;
                }
                self.heap.push(Reverse(Entry { t: cand, index: n, label }));
            }
        }
        None
    }
}

#[inline]
fn neighbour(speed: &VelocityField, col: i64, row: i64) -> Option<usize> {
    let (w, h) = (speed.width as i64, speed.height as i64);
    (col >= 0 && row >= 0 && col < w && row < h).then(|| (row * w + col) as usize)
}

/// Two-stencil upwind estimate at `index` from final neighbour values given
/// by `value`.
#[inline]
fn upwind(speed: &VelocityField, index: usize, value: impl Fn(usize) -> f64) -> f64 {
    let (w, h) = (speed.width, speed.height);
    let (col, row) = (index % w, index / w);
    let f = speed.spacing / speed.values[index];
    let (left, right, up, down) = (col > 0, col + 1 < w, row > 0, row + 1 < h);
    let get = |ok: bool, i: usize| if ok { value(i) } else { UNREACHED };
    let open = |ok: bool, i: usize| ok && speed.values[i] > 0.0;

    let t_ortho = solve_quadratic(
        get(left, index.wrapping_sub(1)).min(get(right, index + 1)),
        get(up, index.wrapping_sub(w)).min(get(down, index + w)),
        f,
    );

    let (l, r) = (open(left, index.wrapping_sub(1)), open(right, index + 1));
    let (u, d) = (open(up, index.wrapping_sub(w)), open(down, index + w));
    let diag = |ok: bool, i: usize| if ok { value(i) } else { UNREACHED };
    let t_diag = solve_quadratic(
        diag(l && u, index.wrapping_sub(w + 1)).min(diag(r && d, index + w + 1)),
        diag(r && u, (index + 1).wrapping_sub(w)).min(diag(l && d, index + w - 1)),
        f * std::f64::consts::SQRT_2,
    );
    t_ortho.min(t_diag)
}

/// Single-source march. With one front no value is ever pruned, so this
/// matches the labeled march while skipping its per-cell label lists.
struct SingleMarcher<'a> {
    speed: &'a VelocityField,
    t: Vec<f64>,
    done: Vec<bool>,
    /// Keyed by the bit pattern of the (non-negative) time, which orders
    /// like the time itself, then by index.
    heap: BinaryHeap<Reverse<(u64, u32)>>,
}

impl<'a> SingleMarcher<'a> {
    fn new(speed: &'a VelocityField, source: usize) -> Self {
        let n = speed.values.len();
        let mut t = vec![UNREACHED; n];
        t[source] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((0f64.to_bits(), source as u32)));
        Self { speed, t, done: vec![false; n], heap }
    }

    fn run(&mut self, stop: impl Fn(usize) -> bool) -> Option<usize> {
        let speed = self.speed;
        let w = speed.width;
        while let Some(Reverse((bits, index))) = self.heap.pop() {
            let (t, index) = (f64::from_bits(bits), index as usize);
            if self.done[index] {
                continue;
            }
            self.done[index] = true;
            self.t[index] = t;
            if stop(index) {
                return Some(index);
            }
            let (col, row) = ((index % w) as i64, (index / w) as i64);
            for (dc, dr) in ORTHO.iter().chain(DIAG.iter()) {
                let Some(n) = neighbour(speed, col + dc, row + dr) else { continue };
                if speed.values[n] <= 0.0 || self.done[n] {
                    continue;
                }
                let cand = upwind(speed, n, |i| if self.done[i] { self.t[i] } else { UNREACHED });
                if cand < self.t[n] {
                    self.t[n] = cand;
                    self.heap.push(Reverse((cand.to_bits(), n as u32)));
                }
            }
        }
        None
    }

    /// Final values; cells still tentative are reported unreached.
    fn finish(mut self) -> Vec<f64> {
        for (t, done) in self.t.iter_mut().zip(&self.done) {
            if !done {
                *t = UNREACHED;
            }
        }
        self.t
    }
}

/// First-order upwind update along two perpendicular axes with neighbour
/// minima `a`, `b` and crossing time `f`.
#[inline]
fn solve_quadratic(a: f64, b: f64, f: f64) -> f64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    if !lo.is_finite() {
        return UNREACHED;
    }
    if !hi.is_finite() || hi - lo >= f {
        return lo + f;
    }
    let d = hi - lo;
    0.5 * (lo + hi + (2.0 * f * f - d * d).sqrt())
}

fn seed(marcher: &mut Marcher<'_>, sources: &[CellPos]) -> Result<(), FmmError> {
    let speed = marcher.speed;
    if sources.is_empty() {
        return Err(FmmError::NoSources);
    }
    for (k, &s) in sources.iter().enumerate() {
        let index = check_source(speed, s)?;
        marcher.heap.push(Reverse(Entry { t: 0.0, index, label: k as u32 }));
    }
    Ok(())
}

fn check_source(speed: &VelocityField, s: CellPos) -> Result<usize, FmmError> {
    if s.col >= speed.width || s.row >= speed.height {
        return Err(FmmError::SourceOutOfBounds(s));
    }
    if speed.get(s) <= 0.0 {
        return Err(FmmError::ZeroSpeedSource(s));
    }
    Ok(s.row * speed.width + s.col)
}

fn single<'a>(sources: &[CellPos], speed: &'a VelocityField) -> Result<Option<SingleMarcher<'a>>, FmmError> {
    match sources {
        [s] => Ok(Some(SingleMarcher::new(speed, check_source(speed, *s)?))),
        _ => Ok(None),
    }
}

/// Arrival times from the given sources over the speed field.
pub fn solve(sources: &[CellPos], speed: &VelocityField) -> Result<ScalarField, FmmError> {
    Ok(solve_labeled(sources, speed)?.field)
}

/// Arrival times plus, for each cell, the index of the source whose front
/// got there first.
pub fn solve_labeled(sources: &[CellPos], speed: &VelocityField) -> Result<LabeledField, FmmError> {
    if let Some(mut m) = single(sources, speed)? {
        m.run(|_| false);
        let t = m.finish();
        let labels = t.iter().map(|v| if v.is_finite() { 0 } else { NO_LABEL }).collect();
        return Ok(LabeledField {
            field: ScalarField::from_values(speed.width, speed.height, speed.spacing, t),
            labels,
        });
    }
    let mut m = Marcher::new(speed, LABEL_MARGIN_CROSSINGS);
    seed(&mut m, sources)?;
    m.run(|_| false);
    Ok(LabeledField {
        field: ScalarField::from_values(speed.width, speed.height, speed.spacing, m.best),
        labels: m.label,
    })
}

/// Like [`solve`] but stops as soon as `target` is finalized. Cells not yet
/// finalized at that point are reported as [`UNREACHED`]; every finalized cell
/// has a value no larger than the target's.
pub fn solve_until(sources: &[CellPos], speed: &VelocityField, target: CellPos) -> Result<ScalarField, FmmError> {
    let stop = (target.col < speed.width && target.row < speed.height).then(|| target.row * speed.width + target.col);
    if let Some(mut m) = single(sources, speed)? {
        m.run(|i| Some(i) == stop);
        return Ok(ScalarField::from_values(speed.width, speed.height, speed.spacing, m.finish()));
    }
    let mut m = Marcher::new(speed, LABEL_MARGIN_CROSSINGS);
    seed(&mut m, sources)?;
    m.run(|i| Some(i) == stop);
    Ok(ScalarField::from_values(speed.width, speed.height, speed.spacing, m.best))
}

/// Like [`solve`] but stops at the first cell with `targets[index]` set,
/// returning it with the partial field.
pub fn solve_until_any(
    sources: &[CellPos],
    speed: &VelocityField,
    targets: &[bool],
) -> Result<(ScalarField, Option<CellPos>), FmmError> {
    let w = speed.width;
    let is_target = |i: usize| targets.get(i).copied().unwrap_or(false);
    if let Some(mut m) = single(sources, speed)? {
        let hit = m.run(is_target);
        let field = ScalarField::from_values(speed.width, speed.height, speed.spacing, m.finish());
        return Ok((field, hit.map(|i| CellPos::new(i % w, i / w))));
    }
    let mut m = Marcher::new(speed, LABEL_MARGIN_CROSSINGS);
    seed(&mut m, sources)?;
    let hit = m.run(is_target);
    let field = ScalarField::from_values(speed.width, speed.height, speed.spacing, m.best);
    Ok((field, hit.map(|i| CellPos::new(i % w, i / w))))
}

/// Distance (meters) from every cell to the nearest occupied cell, with unit
/// speed on free cells. Occupied cells hold 0. A map without obstacles gets
/// the map diagonal everywhere.
pub fn distance_transform(map: &GridMap) -> ScalarField {
    let sources: Vec<CellPos> = map.occupied_cells().collect();
    if sources.is_empty() {
        let diag = ((map.width() * map.width() + map.height() * map.height()) as f64).sqrt() * map.resolution();
        return ScalarField::filled(map.width(), map.height(), map.resolution(), diag);
    }
    let speed = VelocityField::uniform(map.width(), map.height(), map.resolution(), 1.0);
    let mut m = Marcher::new(&speed, DISTANCE_MARGIN_CROSSINGS);
    seed(&mut m, &sources).expect("occupied cells are valid unit-speed sources");
    m.run(|_| false);
    ScalarField::from_values(speed.width, speed.height, speed.spacing, m.best)
}

/// Steepest descent over the 8-neighbourhood from `start` to a zero cell.
/// Each step strictly decreases the field value; diagonal steps require both
/// flanking cells to be reached.
pub fn descend(field: &ScalarField, start: CellPos) -> Result<Vec<CellPos>, FmmError> {
    let (w, h) = (field.width as i64, field.height as i64);
    let reached = |c: i64, r: i64| c >= 0 && r >= 0 && c < w && r < h && field.values[(r * w + c) as usize].is_finite();
    if start.col >= field.width || start.row >= field.height || !field.is_reached(start) {
        return Err(FmmError::Unreached(start));
    }
    let mut path = vec![start];
    let mut cur = start;
    let limit = field.values.len();
    while field.get(cur) > 0.0 {
        if path.len() > limit {
            return Err(FmmError::LocalMinimum(cur));
        }
        let here = field.get(cur);
        let (c, r) = (cur.col as i64, cur.row as i64);
        let mut best: Option<(f64, usize)> = None;
        for (dc, dr) in ORTHO.iter().chain(DIAG.iter()) {
            let (nc, nr) = (c + dc, r + dr);
            if !reached(nc, nr) {
                continue;
            }
            if *dc != 0 && *dr != 0 && !(reached(c + dc, r) && reached(c, r + dr)) {
                continue;
            }
            let idx = (nr * w + nc) as usize;
            let v = field.values[idx];
            if v >= here {
                continue;
            }
            let slope = (here - v) / if *dc != 0 && *dr != 0 { std::f64::consts::SQRT_2 } else { 1.0 };
            let better = match best {
                None => true,
                Some((s, bi)) => slope > s || (slope == s && idx < bi),
            };
            if better {
                best = Some((slope, idx));
            }
        }
        let Some((_, idx)) = best else {
            return Err(FmmError::LocalMinimum(cur));
        };
        cur = field.pos(idx);
        path.push(cur);
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free(w: usize, h: usize) -> VelocityField {
        VelocityField::uniform(w, h, 1.0, 1.0)
    }

    #[test]
    fn quadratic_cases() {
        assert_eq!(solve_quadratic(UNREACHED, UNREACHED, 1.0), UNREACHED);
        assert_eq!(solve_quadratic(2.0, UNREACHED, 1.0), 3.0);
        assert_eq!(solve_quadratic(0.0, 5.0, 1.0), 1.0);
        let t = solve_quadratic(1.0, 1.0, 1.0);
        assert!((t - (1.0 + 0.5f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn source_is_zero_and_neighbours_exact() {
        let f = solve(&[CellPos::new(5, 5)], &free(11, 11)).unwrap();
        assert_eq!(f.get(CellPos::new(5, 5)), 0.0);
        assert_eq!(f.get(CellPos::new(6, 5)), 1.0);
        assert!((f.get(CellPos::new(6, 6)) - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn free_space_tracks_euclidean_distance() {
        let (w, h) = (41, 41);
        let src = CellPos::new(20, 20);
        let f = solve(&[src], &free(w, h)).unwrap();
        let mut worst: f64 = 0.0;
        let mut far: f64 = 0.0;
        for r in 0..h {
            for c in 0..w {
                let p = CellPos::new(c, r);
                let e = p.dist(src);
                let v = f.get(p);
                assert!(v >= e - 1e-9, "below euclidean at {p}: {v} < {e}");
                if e > 0.0 {
                    worst = worst.max((v - e) / e);
                }
                if e >= 10.0 {
                    far = far.max((v - e) / e);
                }
            }
        }
        // First-order error peaks near the source at knight-move offsets.
        assert!(worst < 0.06, "worst relative error {worst}");
        assert!(far < 0.03, "far-field relative error {far}");
    }

    #[test]
    fn zero_speed_everywhere_but_source() {
        let mut v = vec![0.0; 25];
        v[12] = 1.0;
        let speed = VelocityField::new(5, 5, 1.0, v);
        let f = solve(&[CellPos::new(2, 2)], &speed).unwrap();
        assert_eq!(f.values().iter().filter(|v| v.is_finite()).count(), 1);
    }

    #[test]
    fn argument_errors() {
        let speed = VelocityField::new(2, 1, 1.0, vec![0.0, 1.0]);
        assert_eq!(solve(&[], &speed), Err(FmmError::NoSources));
        assert_eq!(solve(&[CellPos::new(0, 0)], &speed), Err(FmmError::ZeroSpeedSource(CellPos::new(0, 0))));
        assert_eq!(solve(&[CellPos::new(5, 0)], &speed), Err(FmmError::SourceOutOfBounds(CellPos::new(5, 0))));
    }

    #[test]
    fn no_propagation_through_diagonal_pinch() {
        let map = GridMap::parse(".#\n#.", 1.0).unwrap();
        let f = solve(&[CellPos::new(0, 0)], &VelocityField::from_map(&map)).unwrap();
        assert!(!f.is_reached(CellPos::new(1, 1)));
    }

    #[test]
    fn distance_transform_single_obstacle_rings() {
        let mut map = GridMap::new(11, 11, 1.0).unwrap();
        map.set_occupied(CellPos::new(5, 5), true);
        let d = distance_transform(&map);
        assert_eq!(d.get(CellPos::new(5, 5)), 0.0);
        for k in 1..5 {
            assert!(d.get(CellPos::new(5 + k + 1, 5)) > d.get(CellPos::new(5 + k, 5)));
            assert!(d.get(CellPos::new(5, 5 - k - 1)) > d.get(CellPos::new(5, 5 - k)));
        }
    }

    #[test]
    fn distance_transform_corridor_centerline() {
        let map = GridMap::parse("#######\n.......\n.......\n.......\n#######", 1.0).unwrap();
        let d = distance_transform(&map);
        for c in 0..7 {
            let col: Vec<f64> = (1..4).map(|r| d.get(CellPos::new(c, r))).collect();
            assert!(col[1] >= col[0] && col[1] >= col[2]);
        }
    }

    #[test]
    fn distance_transform_without_obstacles() {
        let map = GridMap::new(3, 4, 0.5).unwrap();
        let d = distance_transform(&map);
        assert!(d.values().iter().all(|v| (*v - 2.5).abs() < 1e-12));
    }

    #[test]
    fn descend_from_source() {
        let f = solve(&[CellPos::new(1, 1)], &free(4, 4)).unwrap();
        assert_eq!(descend(&f, CellPos::new(1, 1)).unwrap(), vec![CellPos::new(1, 1)]);
    }

    #[test]
    fn descend_unreached() {
        let map = GridMap::parse("..#..", 1.0).unwrap();
        let f = solve(&[CellPos::new(0, 0)], &VelocityField::from_map(&map)).unwrap();
        assert_eq!(descend(&f, CellPos::new(4, 0)), Err(FmmError::Unreached(CellPos::new(4, 0))));
    }

    #[test]
    fn descend_local_minimum_detected() {
        let f = ScalarField::from_values(3, 1, 1.0, vec![0.0, 5.0, 1.0]);
        assert_eq!(descend(&f, CellPos::new(2, 0)), Err(FmmError::LocalMinimum(CellPos::new(2, 0))));
    }

    #[test]
    fn descend_around_wall() {
        let map = GridMap::parse(
            ".......\n\
             ...#...\n\
             ...#...\n\
             ...#...\n\
             .......",
            1.0,
        )
        .unwrap();
        let f = solve(&[CellPos::new(6, 2)], &VelocityField::from_map(&map)).unwrap();
        let path = descend(&f, CellPos::new(0, 2)).unwrap();
        assert_eq!(*path.last().unwrap(), CellPos::new(6, 2));
        assert!(path.iter().all(|p| map.is_free(*p)));
        for w in path.windows(2) {
            assert!(f.get(w[1]) < f.get(w[0]));
        }
    }

    #[test]
    fn solve_until_stops_at_target() {
        let speed = free(50, 50);
        let target = CellPos::new(10, 10);
        let partial = solve_until(&[CellPos::new(5, 5)], &speed, target).unwrap();
        let full = solve(&[CellPos::new(5, 5)], &speed).unwrap();
        assert_eq!(partial.get(target), full.get(target));
        assert!(!partial.is_reached(CellPos::new(49, 49)));
        let path = descend(&partial, target).unwrap();
        assert_eq!(path, descend(&full, target).unwrap());
    }

    #[test]
    fn solve_until_any_finds_nearest_target() {
        let speed = free(30, 30);
        let mut targets = vec![false; 900];
        targets[20 * 30 + 20] = true;
        targets[5 * 30 + 12] = true;
        let (field, hit) = solve_until_any(&[CellPos::new(5, 5)], &speed, &targets).unwrap();
        assert_eq!(hit, Some(CellPos::new(12, 5)));
        assert!(!field.is_reached(CellPos::new(20, 20)));
        let none = solve_until_any(&[CellPos::new(5, 5)], &speed, &vec![false; 900]).unwrap();
        assert_eq!(none.1, None);
    }

    #[test]
    fn labels_split_between_sources() {
        let lf = solve_labeled(&[CellPos::new(0, 0), CellPos::new(9, 0)], &free(10, 1)).unwrap();
        assert_eq!(&lf.labels[..5], &[0, 0, 0, 0, 0]);
        assert_eq!(&lf.labels[5..], &[1, 1, 1, 1, 1]);
    }
}
