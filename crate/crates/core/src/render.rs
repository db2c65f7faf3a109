//! Grayscale snapshots of a mission trace as binary PGM frames.

use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::geometry::{contains, oriented_rect, Point};
use crate::grid::{GridError, GridMap};
use crate::sim::{StepRecord, TraceHeader, TraceLine};

#[derive(Debug, Error)]
pub enum RenderError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("trace line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("trace has no header line")]
    MissingHeader,
    #[error("bad map in trace header: {0}")]
    Map(#[from] GridError),
    #[error("every must be at least 1")]
    BadEvery,
}

pub const WALL: u8 = 0;
pub const ROBOT: u8 = 20;
pub const OBSTACLE: u8 = 50;
pub const DENSE_EDGE: u8 = 80;
pub const UNSEEN: u8 = 120;
pub const AREA_EDGE: u8 = 150;
pub const TRAIL: u8 = 190;
pub const SEEN: u8 = 240;

/// A grayscale image, row 0 at the top (map row 0).
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Frame {
    pub fn write_pgm<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "P5\n{} {}\n255\n", self.width, self.height)?;
        w.write_all(&self.pixels)
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }
}

/// Draws frames at `scale` pixels per cell.
pub struct Renderer {
    map: GridMap,
    scale: usize,
    robot_radius: f64,
    seen: Vec<bool>,
    trail: Vec<(f64, f64)>,
}

impl Renderer {
    pub fn new(header: &TraceHeader, scale: usize) -> Result<Self, RenderError> {
        let map = GridMap::parse(&header.map, crate::grid::DEFAULT_RESOLUTION)?;
        let seen = vec![false; map.len()];
        Ok(Self { map, scale: scale.max(1), robot_radius: header.config.robot_radius, seen, trail: Vec::new() })
    }

    /// Folds one step into the replayed state.
    pub fn apply(&mut self, step: &StepRecord) {
        for &i in &step.seen_delta {
            if let Some(s) = self.seen.get_mut(i) {
                *s = true;
            }
        }
        self.trail.push((step.robot[0], step.robot[1]));
    }

    fn pixel_size(&self) -> f64 {
        self.map.resolution() / self.scale as f64
    }

    fn to_pixel(&self, x: f64, y: f64) -> (i64, i64) {
        let p = self.pixel_size();
        ((x / p).floor() as i64, (y / p).floor() as i64)
    }

    pub fn draw(&self, step: &StepRecord) -> Frame {
        let (w, h) = (self.map.width() * self.scale, self.map.height() * self.scale);
        let mut px = vec![0u8; w * h];
        for y in 0..h {
            for x in 0..w {
                let i = (y / self.scale) * self.map.width() + x / self.scale;
                px[y * w + x] = if self.map.occupancy()[i] {
                    WALL
                } else if self.seen[i] {
                    SEEN
                } else {
                    UNSEEN
                };
            }
        }
        let mut frame = Frame { width: w, height: h, pixels: px };
        let ps = self.pixel_size();

        for a in &step.areas {
            let shade = if a.dense { DENSE_EDGE } else { AREA_EDGE };
            let n = a.hull.len();
            for k in 0..n {
                let (p, q) = (a.hull[k], a.hull[(k + 1) % n]);
                self.line(&mut frame, (p[0], p[1]), (q[0], q[1]), shade);
            }
        }
        for pair in self.trail.windows(2) {
            self.line(&mut frame, pair[0], pair[1], TRAIL);
        }
        for o in &step.obstacles {
            let poly = oriented_rect(o[0], o[1], o[2], o[3], o[4]);
            self.fill(&mut frame, &poly, OBSTACLE);
        }
        let r = step.robot;
        let radius = self.robot_radius.max(0.5 * ps);
        let (x0, y0) = self.to_pixel(r[0] - radius, r[1] - radius);
        let (x1, y1) = self.to_pixel(r[0] + radius, r[1] + radius);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let (cx, cy) = ((x as f64 + 0.5) * ps, (y as f64 + 0.5) * ps);
                if (cx - r[0]).hypot(cy - r[1]) <= radius {
                    put(&mut frame, x, y, ROBOT);
                }
            }
        }
        frame
    }

    fn line(&self, frame: &mut Frame, a: (f64, f64), b: (f64, f64), shade: u8) {
        let ps = self.pixel_size();
        let len = (b.0 - a.0).hypot(b.1 - a.1);
        let n = (len / (0.5 * ps)).ceil().max(1.0) as usize;
        for k in 0..=n {
            let t = k as f64 / n as f64;
            let (x, y) = self.to_pixel(a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1));
            put(frame, x, y, shade);
        }
    }

    fn fill(&self, frame: &mut Frame, poly: &[Point], shade: u8) {
        let ps = self.pixel_size();
        let (mut lo, mut hi) = ((f64::INFINITY, f64::INFINITY), (f64::NEG_INFINITY, f64::NEG_INFINITY));
        for p in poly {
            lo = (lo.0.min(p.x), lo.1.min(p.y));
            hi = (hi.0.max(p.x), hi.1.max(p.y));
        }
        let (x0, y0) = self.to_pixel(lo.0, lo.1);
        let (x1, y1) = self.to_pixel(hi.0, hi.1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                if contains(poly, Point::new((x as f64 + 0.5) * ps, (y as f64 + 0.5) * ps)) {
                    put(frame, x, y, shade);
                }
            }
        }
    }
}

fn put(frame: &mut Frame, x: i64, y: i64, shade: u8) {
    if x >= 0 && y >= 0 && (x as usize) < frame.width && (y as usize) < frame.height {
        frame.pixels[y as usize * frame.width + x as usize] = shade;
    }
}

/// Writes `frame_NNNNNN.pgm` for every `every`-th step and the last one.
/// Returns the written paths.
pub fn render_trace<R: BufRead>(trace: R, every: usize, scale: usize, out: &Path) -> Result<Vec<PathBuf>, RenderError> {
    if every == 0 {
        return Err(RenderError::BadEvery);
    }
    fs::create_dir_all(out)?;
    let mut renderer: Option<Renderer> = None;
    let mut written = Vec::new();
    let mut pending: Option<StepRecord> = None;
    let emit = |r: &Renderer, s: &StepRecord, written: &mut Vec<PathBuf>| -> Result<(), RenderError> {
        let path = out.join(format!("frame_{:06}.pgm", s.step));
        r.draw(s).write_pgm(io::BufWriter::new(fs::File::create(&path)?))?;
        written.push(path);
        Ok(())
    };
    for (n, line) in trace.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: TraceLine =
            serde_json::from_str(&line).map_err(|source| RenderError::Json { line: n + 1, source })?;
        match parsed {
            TraceLine::Header(h) => renderer = Some(Renderer::new(&h, scale)?),
            TraceLine::Step(s) => {
                let r = renderer.as_mut().ok_or(RenderError::MissingHeader)?;
                r.apply(&s);
                if s.step % every == 0 {
                    emit(r, &s, &mut written)?;
                    pending = None;
                } else {
                    pending = Some(s);
                }
            }
        }
    }
    let r = renderer.ok_or(RenderError::MissingHeader)?;
    if let Some(s) = pending {
        emit(&r, &s, &mut written)?;
    }
    Ok(written)
}
