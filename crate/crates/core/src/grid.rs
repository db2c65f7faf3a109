//! Static occupancy grid, metric/cell conversions, line-of-sight visibility,
//! observed-space bookkeeping and frontier extraction.

use std::fmt;

use thiserror::Error;

/// Resolution applied when a map file has no `resolution` header.
pub const DEFAULT_RESOLUTION: f64 = 0.1;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("map text is empty")]
    Empty,
    #[error("line {line}: expected {expected} cells, found {found}")]
    Ragged { line: usize, expected: usize, found: usize },
    #[error("line {line}, column {col}: unknown map character {ch:?}")]
    UnknownChar { line: usize, col: usize, ch: char },
    #[error("invalid resolution header: {0}")]
    BadResolution(String),
    #[error("grid dimensions must be positive (got {width}x{height})")]
    BadDimensions { width: usize, height: usize },
    #[error("pose {0} is not a free cell")]
    InvalidPose(CellPos),
    #[error("visibility range must be positive, got {0}")]
    BadRange(f64),
}

/// A cell index on the grid. Row 0 is the first line of the map file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct CellPos {
    pub col: usize,
    pub row: usize,
}

impl CellPos {
    pub const fn new(col: usize, row: usize) -> Self {
        Self { col, row }
    }

    /// Euclidean distance in cells.
    pub fn dist(self, other: CellPos) -> f64 {
        let dc = self.col as f64 - other.col as f64;
        let dr = self.row as f64 - other.row as f64;
        (dc * dc + dr * dr).sqrt()
    }
}

impl fmt::Display for CellPos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.col, self.row)
    }
}

/// The static world model: a rectangular occupancy grid with metric resolution.
///
/// Metric coordinates put the origin at the outer corner of cell `(0, 0)`;
/// x grows with the column and y with the row, so cell `(c, r)` has its
/// center at `((c + 0.5) * res, (r + 0.5) * res)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridMap {
    width: usize,
    height: usize,
    resolution: f64,
    occupied: Vec<bool>,
}

impl GridMap {
    pub fn new(width: usize, height: usize, resolution: f64) -> Result<Self, GridError> {
        if width == 0 || height == 0 {
            return Err(GridError::BadDimensions { width, height });
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(GridError::BadResolution(resolution.to_string()));
        }
        Ok(Self { width, height, resolution, occupied: vec![false; width * height] })
    }

    /// Build from a row-major occupancy vector.
    pub fn from_cells(width: usize, height: usize, resolution: f64, occupied: Vec<bool>) -> Result<Self, GridError> {
        let mut map = Self::new(width, height, resolution)?;
        if occupied.len() != width * height {
            return Err(GridError::BadDimensions { width, height });
        }
        map.occupied = occupied;
        Ok(map)
    }

    /// Parse the plain-text map format: `#` occupied, `.` free, one row per
    /// line, optionally preceded by a `resolution <meters>` line.
    pub fn parse(text: &str, default_resolution: f64) -> Result<Self, GridError> {
        let mut resolution = default_resolution;
        let mut rows: Vec<(usize, &str)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if rows.is_empty() && line.trim_start().starts_with("resolution") {
                let value = line.trim_start()["resolution".len()..].trim();
                resolution = value.parse::<f64>().map_err(|_| GridError::BadResolution(value.to_string()))?;
                continue;
            }
            if line.is_empty() && rows.is_empty() {
                continue;
            }
            rows.push((i + 1, line));
        }
        while rows.last().is_some_and(|(_, l)| l.is_empty()) {
            rows.pop();
        }
        let Some(&(_, first)) = rows.first() else {
            return Err(GridError::Empty);
        };
        let width = first.chars().count();
        if width == 0 {
            return Err(GridError::Empty);
        }
        let mut occupied = Vec::with_capacity(width * rows.len());
        for &(line_no, line) in &rows {
            let found = line.chars().count();
            if found != width {
                return Err(GridError::Ragged { line: line_no, expected: width, found });
            }
            for (col, ch) in line.chars().enumerate() {
                occupied.push(match ch {
                    '#' => true,
                    '.' => false,
                    other => return Err(GridError::UnknownChar { line: line_no, col: col + 1, ch: other }),
                });
            }
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(GridError::BadResolution(resolution.to_string()));
        }
        Self::from_cells(width, rows.len(), resolution, occupied)
    }

    /// Render back to the text format (with a resolution header).
    pub fn to_text(&self) -> String {
        let mut out = format!("resolution {}\n", self.resolution);
        for row in 0..self.height {
            for col in 0..self.width {
                out.push(if self.occupied[row * self.width + col] { '#' } else { '.' });
            }
            out.push('\n');
        }
        out
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupied
    }

    #[inline]
    pub fn index(&self, p: CellPos) -> usize {
        debug_assert!(self.contains(p));
        p.row * self.width + p.col
    }

    #[inline]
    pub fn pos(&self, index: usize) -> CellPos {
        CellPos { col: index % self.width, row: index / self.width }
    }

    #[inline]
    pub fn contains(&self, p: CellPos) -> bool {
        p.col < self.width && p.row < self.height
    }

    /// Checked construction from signed coordinates; never wraps.
    #[inline]
    pub fn cell(&self, col: i64, row: i64) -> Option<CellPos> {
        (col >= 0 && row >= 0 && (col as usize) < self.width && (row as usize) < self.height)
            .then(|| CellPos::new(col as usize, row as usize))
    }

    #[inline]
    pub fn is_occupied(&self, p: CellPos) -> bool {
        self.occupied[self.index(p)]
    }

    #[inline]
    pub fn is_free(&self, p: CellPos) -> bool {
        self.contains(p) && !self.is_occupied(p)
    }

    pub fn set_occupied(&mut self, p: CellPos, value: bool) {
        let i = self.index(p);
        self.occupied[i] = value;
    }

    pub fn free_count(&self) -> usize {
        self.occupied.iter().filter(|o| !**o).count()
    }

    pub fn occupied_cells(&self) -> impl Iterator<Item = CellPos> + '_ {
        self.occupied.iter().enumerate().filter(|(_, o)| **o).map(|(i, _)| self.pos(i))
    }

    /// Metric center of a cell.
    pub fn center(&self, p: CellPos) -> (f64, f64) {
        ((p.col as f64 + 0.5) * self.resolution, (p.row as f64 + 0.5) * self.resolution)
    }

    /// Cell containing a metric point, if inside the map.
    pub fn cell_at(&self, x: f64, y: f64) -> Option<CellPos> {
        if !(x.is_finite() && y.is_finite()) {
            return None;
        }
        self.cell((x / self.resolution).floor() as i64, (y / self.resolution).floor() as i64)
    }

    /// Metric distance between two cell centers.
    pub fn metric_dist(&self, a: CellPos, b: CellPos) -> f64 {
        a.dist(b) * self.resolution
    }

    pub fn neighbors4(&self, p: CellPos) -> impl Iterator<Item = CellPos> + '_ {
        const D: [(i64, i64); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];
        D.iter().filter_map(move |&(dc, dr)| self.cell(p.col as i64 + dc, p.row as i64 + dr))
    }

    pub fn neighbors8(&self, p: CellPos) -> impl Iterator<Item = CellPos> + '_ {
        const D: [(i64, i64); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];
        D.iter().filter_map(move |&(dc, dr)| self.cell(p.col as i64 + dc, p.row as i64 + dr))
    }
}

/// Bresenham traversal from `a` to `b`, inclusive of both endpoints.
pub fn bresenham(a: CellPos, b: CellPos) -> Vec<CellPos> {
    let mut out = Vec::new();
    bresenham_walk(a, b, |p, _| {
        out.push(p);
        true
    });
    out
}

/// Walks the Bresenham line from `a` to `b`. The visitor receives each cell
/// and, for diagonal steps, the two cells flanking the step. Returns false if
/// the visitor stopped the walk.
fn bresenham_walk(a: CellPos, b: CellPos, mut visit: impl FnMut(CellPos, Option<(CellPos, CellPos)>) -> bool) -> bool {
    let (mut x, mut y) = (a.col as i64, a.row as i64);
    let (x1, y1) = (b.col as i64, b.row as i64);
    let dx = (x1 - x).abs();
    let dy = -(y1 - y).abs();
    let sx = if x < x1 { 1 } else { -1 };
    let sy = if y < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    if !visit(a, None) {
        return false;
    }
    while x != x1 || y != y1 {
        let e2 = 2 * err;
        let (px, py) = (x, y);
        let mut moved_x = false;
        let mut moved_y = false;
        if e2 >= dy {
            err += dy;
            x += sx;
            moved_x = true;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
            moved_y = true;
        }
        let corner = (moved_x && moved_y)
            .then(|| (CellPos::new(x as usize, py as usize), CellPos::new(px as usize, y as usize)));
        if !visit(CellPos::new(x as usize, y as usize), corner) {
            return false;
        }
    }
    true
}

/// Whether `to` is visible from `from`: every cell strictly between them on the
/// Bresenham line is free, and no diagonal step squeezes between two occupied
/// cells. The target itself may be occupied.
pub fn line_of_sight(map: &GridMap, from: CellPos, to: CellPos) -> bool {
    line_of_sight_with(map.occupancy(), map.width(), from, to)
}

fn line_of_sight_with(occ: &[bool], width: usize, from: CellPos, to: CellPos) -> bool {
    let idx = |p: CellPos| p.row * width + p.col;
    bresenham_walk(from, to, |p, corner| {
        if let Some((c1, c2)) = corner {
            if occ[idx(c1)] && occ[idx(c2)] {
                return false;
            }
        }
        p == from || p == to || !occ[idx(p)]
    })
}

/// Cells visible from `from` within `range` meters (360° field of view).
/// Occupied cells that terminate a ray are included. Sorted row-major.
pub fn visible_cells(map: &GridMap, from: CellPos, range: f64) -> Result<Vec<CellPos>, GridError> {
    visible_cells_in(map.occupancy(), map.width(), map.height(), map.resolution(), from, range)
}

/// Same as [`visible_cells`] but over an arbitrary occupancy layer of the
/// same shape (e.g. static map plus dynamic obstacles).
pub fn visible_cells_in(
    occ: &[bool],
    width: usize,
    height: usize,
    resolution: f64,
    from: CellPos,
    range: f64,
) -> Result<Vec<CellPos>, GridError> {
    if !(range > 0.0) {
        return Err(GridError::BadRange(range));
    }
    if from.col >= width || from.row >= height || occ[from.row * width + from.col] {
        return Err(GridError::InvalidPose(from));
    }
    let r = range / resolution;
    let ri = r.floor() as i64;
    let r2 = r * r;
    let c0 = from.col as i64;
    let r0 = from.row as i64;
    let row_lo = (r0 - ri).max(0);
    let row_hi = (r0 + ri).min(height as i64 - 1);
    let col_lo = (c0 - ri).max(0);
    let col_hi = (c0 + ri).min(width as i64 - 1);
    let mut out = Vec::new();
    for row in row_lo..=row_hi {
        for col in col_lo..=col_hi {
            let (dc, dr) = ((col - c0) as f64, (row - r0) as f64);
            if dc * dc + dr * dr > r2 + 1e-9 {
                continue;
            }
            let p = CellPos::new(col as usize, row as usize);
            if line_of_sight_with(occ, width, from, p) {
                out.push(p);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Observation {
    Unseen,
    Seen,
    /// Given up on after an occlusion outlasted the wait budget.
    Discarded,
}

/// Per-cell monitoring state over a mission.
#[derive(Clone, Debug)]
pub struct ObservedMask {
    width: usize,
    states: Vec<Observation>,
    seen: usize,
    discarded: usize,
}

impl ObservedMask {
    pub fn new(map: &GridMap) -> Self {
        Self { width: map.width(), states: vec![Observation::Unseen; map.len()], seen: 0, discarded: 0 }
    }

    pub fn state(&self, p: CellPos) -> Observation {
        self.states[p.row * self.width + p.col]
    }

    pub fn state_at(&self, index: usize) -> Observation {
        self.states[index]
    }

    pub fn is_unseen(&self, p: CellPos) -> bool {
        self.state(p) == Observation::Unseen
    }

    /// Marks free cells as seen, including previously discarded ones.
    /// Occupied cells are skipped. Returns the indices that changed.
    pub fn mark_seen<I>(&mut self, map: &GridMap, cells: I) -> Vec<usize>
    where
        I: IntoIterator<Item = CellPos>,
    {
        let mut changed = Vec::new();
        for p in cells {
            let i = map.index(p);
            if !map.occupancy()[i] && self.states[i] != Observation::Seen {
                if self.states[i] == Observation::Discarded {
                    self.discarded -= 1;
                }
                self.states[i] = Observation::Seen;
                self.seen += 1;
                changed.push(i);
            }
        }
        changed
    }

    /// Marks unseen cells as discarded; returns how many changed.
    pub fn discard<I>(&mut self, map: &GridMap, cells: I) -> usize
    where
        I: IntoIterator<Item = CellPos>,
    {
        let mut n = 0;
        for p in cells {
            let i = map.index(p);
            if self.states[i] == Observation::Unseen {
                self.states[i] = Observation::Discarded;
                self.discarded += 1;
                n += 1;
            }
        }
        n
    }

    pub fn seen_count(&self) -> usize {
        self.seen
    }

    pub fn discarded_count(&self) -> usize {
        self.discarded
    }
}

/// Seen free cells 4-adjacent to at least one free unseen cell. Row-major.
pub fn frontier_cells(mask: &ObservedMask, map: &GridMap) -> Vec<CellPos> {
    (0..map.len())
        .filter(|&i| !map.occupancy()[i] && mask.state_at(i) == Observation::Seen)
        .map(|i| map.pos(i))
        .filter(|&p| map.neighbors4(p).any(|n| map.is_free(n) && mask.is_unseen(n)))
        .collect()
}
