//! Offline scenario decomposition.
//!
//! Seeds are the clearance maxima of the static distance transform, picked
//! greedily with a square suppression window sized by each seed's clearance.
//! Partitions are grown by racing fronts from all seeds at once, with the
//! clearance itself as front speed, so fronts move fast through open space
//! and meet inside doors and narrow passages. Adjacent partitions become
//! graph vertices joined by travel-time edges.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::fmm::{self, FmmError, ScalarField, VelocityField, NO_LABEL};
use crate::grid::{line_of_sight, CellPos, GridMap};

#[derive(Debug, Error, PartialEq)]
pub enum PartitionError {
    #[error("no partition seeds")]
    NoSeeds,
    #[error("seed {0} is not a free cell")]
    BadSeed(CellPos),
    #[error(transparent)]
    Fmm(#[from] FmmError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    pub id: usize,
    pub seed: CellPos,
    /// Member cells, row-major.
    pub members: Vec<CellPos>,
    /// Distance (meters) from the seed to the closest boundary cell.
    pub d_min: f64,
    /// Distance (meters) from the seed to the farthest member.
    pub d_max: f64,
}

/// All partitions plus the per-cell label map.
#[derive(Clone, Debug)]
pub struct Partitioning {
    width: usize,
    pub partitions: Vec<Partition>,
    labels: Vec<u32>,
}

impl Partitioning {
    pub fn label(&self, p: CellPos) -> Option<usize> {
        self.label_at(p.row * self.width + p.col)
    }

    pub fn label_at(&self, index: usize) -> Option<usize> {
        let l = self.labels[index];
        (l != NO_LABEL).then_some(l as usize)
    }

    pub fn len(&self) -> usize {
        self.partitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partitions.is_empty()
    }

    pub fn get(&self, id: usize) -> &Partition {
        &self.partitions[id]
    }

    /// Row-major label text: one integer per cell, `-1` for unlabeled.
    pub fn label_text(&self) -> String {
        let mut out = String::new();
        for row in self.labels.chunks(self.width) {
            let line: Vec<String> =
                row.iter().map(|&l| if l == NO_LABEL { "-1".to_string() } else { l.to_string() }).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    /// Travel time between the two seeds at maximum speed (seconds).
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdjacencyGraph {
    pub vertex_count: usize,
    /// Edges with `a < b`, sorted.
    pub edges: Vec<Edge>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl AdjacencyGraph {
    pub fn from_edges(vertex_count: usize, mut edges: Vec<Edge>) -> Self {
        edges.sort_by_key(|x| (x.a, x.b));
        let mut adjacency = vec![Vec::new(); vertex_count];
        for e in &edges {
            adjacency[e.a].push((e.b, e.cost));
            adjacency[e.b].push((e.a, e.cost));
        }
        for list in &mut adjacency {
            list.sort_by_key(|x| x.0);
        }
        Self { vertex_count, edges, adjacency }
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adjacency[v]
    }

    /// One `i j c_t` line per edge.
    pub fn edge_text(&self) -> String {
        self.edges.iter().map(|e| format!("{} {} {}\n", e.a, e.b, e.cost)).collect()
    }
}

/// Greedy clearance maxima. Each pick suppresses the square window of
/// half-width equal to its clearance; picks stop once the best remaining
/// clearance falls below `min_clearance` (meters).
pub fn extract_partition_seeds(dso: &ScalarField, min_clearance: f64) -> Vec<(CellPos, f64)> {
    let (w, h) = (dso.width(), dso.height());
    let mut work: Vec<f64> = dso.values().iter().map(|v| if v.is_finite() { *v } else { 0.0 }).collect();
    let mut seeds = Vec::new();
    loop {
        let mut best: Option<(usize, f64)> = None;
        for (i, &v) in work.iter().enumerate() {
            if v > 0.0 && best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        let Some((index, value)) = best else { break };
        if value < min_clearance {
            break;
        }
        let seed = CellPos::new(index % w, index / w);
        seeds.push((seed, value));
        let half = (value / dso.spacing() + 1e-9).floor() as usize;
        let (c0, c1) = (seed.col.saturating_sub(half), (seed.col + half).min(w - 1));
        let (r0, r1) = (seed.row.saturating_sub(half), (seed.row + half).min(h - 1));
        for r in r0..=r1 {
            work[r * w + c0..=r * w + c1].fill(0.0);
        }
    }
    seeds
}

/// Grows one partition per seed with the clearance field as front speed.
pub fn compute_partitions(seeds: &[CellPos], dso: &ScalarField, map: &GridMap) -> Result<Partitioning, PartitionError> {
    if seeds.is_empty() {
        return Err(PartitionError::NoSeeds);
    }
    if let Some(&bad) = seeds.iter().find(|s| !map.is_free(**s)) {
        return Err(PartitionError::BadSeed(bad));
    }
    let speed_values: Vec<f64> = dso
        .values()
        .iter()
        .zip(map.occupancy())
        .map(|(&d, &occ)| if occ || !d.is_finite() { 0.0 } else { d })
        .collect();
    let speed = VelocityField::new(map.width(), map.height(), map.resolution(), speed_values);
    let labeled = fmm::solve_labeled(seeds, &speed)?;
    let labels = labeled.labels;

    let mut members: Vec<Vec<CellPos>> = vec![Vec::new(); seeds.len()];
    for (i, &l) in labels.iter().enumerate() {
        if l != NO_LABEL {
            members[l as usize].push(map.pos(i));
        }
    }
    let partitions = members
        .into_iter()
        .enumerate()
        .map(|(id, cells)| {
            let seed = seeds[id];
            let mut d_min = f64::INFINITY;
            let mut d_max: f64 = 0.0;
            for &c in &cells {
                let d = map.metric_dist(seed, c);
                d_max = d_max.max(d);
                let on_boundary = is_boundary(map, &labels, c, id as u32);
                if on_boundary {
                    d_min = d_min.min(d);
                }
            }
            if !d_min.is_finite() {
                d_min = d_max;
            }
            Partition { id, seed, members: cells, d_min, d_max }
        })
        .collect();
    Ok(Partitioning { width: map.width(), partitions, labels })
}

fn is_boundary(map: &GridMap, labels: &[u32], c: CellPos, id: u32) -> bool {
    let interior = c.col > 0 && c.row > 0 && c.col + 1 < map.width() && c.row + 1 < map.height();
    !interior || map.neighbors4(c).any(|n| labels[map.index(n)] != id)
}

/// Edges between partitions sharing a 4-adjacent pair of cells; cost is the
/// seed-to-seed Euclidean distance over `v_max`.
pub fn build_adjacency_graph(parts: &Partitioning, map: &GridMap, v_max: f64) -> AdjacencyGraph {
    let mut pairs = BTreeSet::new();
    let (w, h) = (map.width(), map.height());
    for row in 0..h {
        for col in 0..w {
            let i = row * w + col;
            let Some(a) = parts.label_at(i) else { continue };
            let mut check = |j: usize| {
                if let Some(b) = parts.label_at(j) {
                    if a != b {
                        pairs.insert((a.min(b), a.max(b)));
                    }
                }
            };
            if col + 1 < w {
                check(i + 1);
            }
            if row + 1 < h {
                check(i + w);
            }
        }
    }
    let edges = pairs
        .into_iter()
        .map(|(a, b)| Edge { a, b, cost: map.metric_dist(parts.partitions[a].seed, parts.partitions[b].seed) / v_max })
        .collect();
    AdjacencyGraph::from_edges(parts.len(), edges)
}

/// Fraction of partition boundary cells with a clear line of sight to their
/// seed, over all partitions.
pub fn star_shape_ratio(parts: &Partitioning, map: &GridMap) -> f64 {
    let mut total = 0usize;
    let mut clear = 0usize;
    for p in &parts.partitions {
        for &c in &p.members {
            if is_boundary(map, &parts.labels, c, p.id as u32) {
                total += 1;
                if line_of_sight(map, p.seed, c) {
                    clear += 1;
                }
            }
        }
    }
    if total == 0 {
        1.0
    } else {
        clear as f64 / total as f64
    }
}

/// Everything the online planner needs from the static map.
#[derive(Clone, Debug)]
pub struct OfflinePlan {
    pub dso: ScalarField,
    pub partitioning: Partitioning,
    pub graph: AdjacencyGraph,
}

/// Distance transform, seeds, partitions and graph in one go.
pub fn plan_offline(map: &GridMap, min_seed_clearance: f64, v_max: f64) -> Result<OfflinePlan, PartitionError> {
    let dso = fmm::distance_transform(map);
    let seeds: Vec<CellPos> = extract_partition_seeds(&dso, min_seed_clearance).into_iter().map(|(s, _)| s).collect();
    let partitioning = compute_partitions(&seeds, &dso, map)?;
    let graph = build_adjacency_graph(&partitioning, map, v_max);
    Ok(OfflinePlan { dso, partitioning, graph })
}
