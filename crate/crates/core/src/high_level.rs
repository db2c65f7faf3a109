//! Partition-level decisions: the shortest-path tree over the adjacency
//! graph, branch costs, partition choice, goal cell and waiting budget.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};

use thiserror::Error;

use crate::fmm::ScalarField;
use crate::grid::{CellPos, GridMap, Observation, ObservedMask};
use crate::partition::{AdjacencyGraph, Partition, Partitioning};

#[derive(Debug, Error, PartialEq)]
pub enum HighLevelError {
    #[error("root partition {0} is blocked")]
    RootBlocked(usize),
    #[error("partition {0} has no unseen cells left")]
    NothingToSee(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanTree {
    pub root: usize,
    /// Parent of every vertex in the tree; `None` for the root and for
    /// vertices outside it.
    pub parent: Vec<Option<usize>>,
    /// Tree distance (seconds) from the root, infinite outside the tree.
    pub dist: Vec<f64>,
    /// Root-to-leaf vertex sequences, sorted lexicographically.
    pub branches: Vec<Vec<usize>>,
}

impl PlanTree {
    pub fn contains(&self, v: usize) -> bool {
        self.dist[v].is_finite()
    }

    /// Vertex sequence from the root to `v`.
    pub fn path_to(&self, v: usize) -> Option<Vec<usize>> {
        if !self.contains(v) {
            return None;
        }
        let mut path = vec![v];
        let mut cur = v;
        while let Some(p) = self.parent[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        Some(path)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GoalDecision {
    pub partition: usize,
    pub goal: CellPos,
    pub wait_budget: f64,
}

#[derive(Clone, Copy, PartialEq)]
struct QueueItem(f64, usize);

impl Eq for QueueItem {}

impl PartialOrd for QueueItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QueueItem {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Dijkstra over non-blocked vertices. Equal-cost alternatives keep the
/// parent found first.
pub fn build_tree(graph: &AdjacencyGraph, root: usize, blocked: &[bool]) -> Result<PlanTree, HighLevelError> {
    let n = graph.vertex_count;
    let is_blocked = |v: usize| blocked.get(v).copied().unwrap_or(false);
    if is_blocked(root) {
        return Err(HighLevelError::RootBlocked(root));
    }
    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[root] = 0.0;
    heap.push(Reverse(QueueItem(0.0, root)));
    while let Some(Reverse(QueueItem(d, v))) = heap.pop() {
        if done[v] {
            continue;
        }
        done[v] = true;
        for &(u, c) in graph.neighbors(v) {
            if is_blocked(u) || done[u] {
                continue;
            }
            let nd = d + c;
            if nd < dist[u] {
                dist[u] = nd;
                parent[u] = Some(v);
                heap.push(Reverse(QueueItem(nd, u)));
            }
        }
    }
    let mut has_child = vec![false; n];
    for p in parent.iter().flatten() {
        has_child[*p] = true;
    }
    let mut tree = PlanTree { root, parent, dist, branches: Vec::new() };
    let mut branches: Vec<Vec<usize>> =
        (0..n).filter(|&v| tree.contains(v) && !has_child[v]).filter_map(|v| tree.path_to(v)).collect();
    branches.sort();
    tree.branches = branches;
    Ok(tree)
}

/// Per-partition monitoring cost. The bracketed factor is clamped at zero.
pub fn monitoring_cost(r_v: f64, d_min: f64, d_max: f64, unseen: usize, total: usize) -> f64 {
    if r_v >= d_max {
        return 1.0;
    }
    let ratio = if total == 0 { 0.0 } else { unseen as f64 / total as f64 };
    r_v * ratio * ((d_min / r_v) * (d_max / r_v) - 1.0).max(0.0)
}

/// Unseen cell count per partition.
pub fn unseen_counts(parts: &Partitioning, mask: &ObservedMask) -> Vec<usize> {
    parts
        .partitions
        .iter()
        .map(|p| p.members.iter().filter(|c| mask.state(**c) == Observation::Unseen).count())
        .collect()
}

/// Sum of seed-to-seed distances along the branch, in meters.
pub fn branch_length(branch: &[usize], parts: &Partitioning, map: &GridMap) -> f64 {
    branch.windows(2).map(|w| map.metric_dist(parts.get(w[0]).seed, parts.get(w[1]).seed)).sum()
}

/// Travel plus monitoring cost of a branch, in seconds.
pub fn branch_cost(
    branch: &[usize],
    parts: &Partitioning,
    map: &GridMap,
    unseen: &[usize],
    r_v: f64,
    v_max: f64,
) -> f64 {
    let c_t = branch_length(branch, parts, map) / v_max;
    let c_m: f64 = branch
        .iter()
        .map(|&j| {
            let p = parts.get(j);
            monitoring_cost(r_v, p.d_min, p.d_max, unseen[j], p.members.len())
        })
        .sum();
    c_t + c_m
}

/// Index of the cheapest branch; ties go to the lexicographically smaller
/// vertex sequence.
pub fn select_branch(branches: &[Vec<usize>], costs: &[f64]) -> Option<usize> {
    (0..branches.len().min(costs.len()))
        .min_by(|&a, &b| costs[a].total_cmp(&costs[b]).then_with(|| branches[a].cmp(&branches[b])))
}

/// Branch indices ordered by cost with the same tie rule as [`select_branch`].
pub fn rank_branches(branches: &[Vec<usize>], costs: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..branches.len().min(costs.len())).collect();
    order.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]).then_with(|| branches[a].cmp(&branches[b])));
    order
}

/// First partition along the branch that still has unseen cells.
pub fn select_partition(branch: &[usize], unseen: &[usize]) -> Option<usize> {
    branch.iter().copied().find(|&j| unseen[j] > 0)
}

/// Goal cell inside partition `p`: its seed when the whole partition fits in
/// the sensing range, otherwise the cell closest to the robot (by `dr`) in
/// the smallest 4-connected group of unseen cells.
pub fn compute_goal(
    p: &Partition,
    r_v: f64,
    dr: &ScalarField,
    mask: &ObservedMask,
    map: &GridMap,
) -> Result<CellPos, HighLevelError> {
    if r_v >= p.d_max {
        return Ok(p.seed);
    }
    let groups = unseen_groups(p, mask, map);
    let smallest = groups
        .iter()
        .min_by(|a, b| a.len().cmp(&b.len()).then(map.index(a[0]).cmp(&map.index(b[0]))))
        .ok_or(HighLevelError::NothingToSee(p.id))?;
    let goal = smallest
        .iter()
        .copied()
        .min_by(|a, b| dr.get(*a).total_cmp(&dr.get(*b)).then(map.index(*a).cmp(&map.index(*b))))
        .expect("groups are non-empty");
    Ok(goal)
}

/// 4-connected groups of unseen member cells, each sorted row-major; groups
/// ordered by their first cell.
pub fn unseen_groups(p: &Partition, mask: &ObservedMask, map: &GridMap) -> Vec<Vec<CellPos>> {
    let mut in_set = vec![false; map.len()];
    for &c in &p.members {
        if mask.state(c) == Observation::Unseen {
            in_set[map.index(c)] = true;
        }
    }
    let mut groups = Vec::new();
    for &c in &p.members {
        let i = map.index(c);
        if !in_set[i] {
            continue;
        }
        in_set[i] = false;
        let mut group = vec![c];
        let mut queue = VecDeque::from([c]);
        while let Some(cur) = queue.pop_front() {
            for n in map.neighbors4(cur) {
                let j = map.index(n);
                if in_set[j] {
                    in_set[j] = false;
                    group.push(n);
                    queue.push_back(n);
                }
            }
        }
        group.sort_by_key(|c| map.index(*c));
        groups.push(group);
    }
    groups
}

/// Waiting budget at a goal before occluded cells are given up.
pub fn wait_time(p: &Partition, v_max: f64) -> f64 {
    2.0 * p.d_max / v_max
}
