//! Planar helpers: monotone-chain convex hull and convex polygon tests.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, o: Point) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }
}

/// Cross product of `(a - o) × (b - o)`; positive for a counterclockwise turn.
#[inline]
pub fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Andrew's monotone chain. Returns the hull counterclockwise with collinear
/// points dropped, starting from the lexicographically smallest point.
/// Degenerate inputs give one (coincident) or two (collinear) vertices.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| a.x == b.x && a.y == b.y);
    if pts.len() <= 2 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(pts.len() + 1);
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Point inside or on a counterclockwise convex polygon.
pub fn contains(poly: &[Point], p: Point) -> bool {
    const EPS: f64 = 1e-9;
    match poly.len() {
        0 => false,
        1 => poly[0].dist(p) <= EPS,
        2 => {
            let (a, b) = (poly[0], poly[1]);
            cross(a, b, p).abs() <= EPS * a.dist(b).max(1.0)
                && p.x >= a.x.min(b.x) - EPS
                && p.x <= a.x.max(b.x) + EPS
                && p.y >= a.y.min(b.y) - EPS
                && p.y <= a.y.max(b.y) + EPS
        }
        n => (0..n).all(|i| cross(poly[i], poly[(i + 1) % n], p) >= -EPS),
    }
}

/// Whether two convex polygons have overlapping interiors (touching along an
/// edge or at a vertex does not count). Separating axis test.
pub fn interiors_intersect(a: &[Point], b: &[Point]) -> bool {
    if a.len() < 3 || b.len() < 3 {
        return false;
    }
    !(has_separating_edge(a, b) || has_separating_edge(b, a))
}

fn has_separating_edge(a: &[Point], b: &[Point]) -> bool {
    const EPS: f64 = 1e-9;
    let n = a.len();
    (0..n).any(|i| {
        let (p, q) = (a[i], a[(i + 1) % n]);
        b.iter().all(|&v| cross(p, q, v) <= EPS)
    })
}

/// Area of a simple polygon (positive when counterclockwise).
pub fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a.x * b.y - b.x * a.y
        })
        .sum::<f64>()
        * 0.5
}

/// Corners of a rectangle centered at `(x, y)` with heading `theta` and the
/// given half extents, counterclockwise.
pub fn oriented_rect(x: f64, y: f64, theta: f64, half_len: f64, half_wid: f64) -> [Point; 4] {
    let (s, c) = theta.sin_cos();
    let corner = |l: f64, w: f64| Point::new(x + l * c - w * s, y + l * s + w * c);
    [corner(-half_len, -half_wid), corner(half_len, -half_wid), corner(half_len, half_wid), corner(-half_len, half_wid)]
}

/// Distance from a point to a convex polygon (0 when inside).
pub fn point_polygon_distance(poly: &[Point], p: Point) -> f64 {
    if contains(poly, p) {
        return 0.0;
    }
    let n = poly.len();
    (0..n).map(|i| point_segment_distance(p, poly[i], poly[(i + 1) % n])).fold(f64::INFINITY, f64::min)
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    p.dist(Point::new(a.x + t * dx, a.y + t * dy))
}
