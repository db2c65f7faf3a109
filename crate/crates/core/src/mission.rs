//! Per-step mission control: sense, update dynamic areas, choose a goal,
//! plan, follow, wait for occluded cells and detect the end of the mission.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::config::{MissionConfig, Strategy};
use crate::dynamic::{project_tracks, AreaTracker, DynamicArea, TrackingParams};
use crate::fmm::{self, VelocityField};
use crate::follower::{compute_velocities, nearest_index, select_destination, KinodynamicLimits, RobotState};
use crate::geometry::{convex_hull, Point};
use crate::grid::{line_of_sight, CellPos, GridMap, Observation, ObservedMask};
use crate::high_level::{
    branch_cost, build_tree, compute_goal, rank_branches, unseen_counts, unseen_groups, wait_time, GoalDecision,
};
use crate::low_level::{build_velocity_map, passable_components, plan_on, PlannerInputs};
use crate::partition::OfflinePlan;
use crate::world::Sensed;

/// A replacement goal must be this much cheaper than the current one.
pub const GOAL_HYSTERESIS: f64 = 0.9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissionStatus {
    #[default]
    Running,
    Complete,
    Blocked,
    Timeout,
    Collision,
}

impl MissionStatus {
    pub fn name(self) -> &'static str {
        match self {
            MissionStatus::Running => "running",
            MissionStatus::Complete => "complete",
            MissionStatus::Blocked => "blocked",
            MissionStatus::Timeout => "timeout",
            MissionStatus::Collision => "collision",
        }
    }
}

/// Static clearance below which a cell cannot host the robot's center.
pub fn static_margin(radius: f64, resolution: f64) -> f64 {
    radius + resolution * std::f64::consts::SQRT_2 / 2.0
}

/// Free cells in the connected component of `start` over labeled cells.
pub fn reachable_cells(plan: &OfflinePlan, map: &GridMap, start: CellPos) -> Vec<bool> {
    let labeled = |c: CellPos| plan.partitioning.label(c).is_some();
    let mut seen = vec![false; map.len()];
    let start = if labeled(start) {
        Some(start)
    } else {
        (0..map.len())
            .map(|i| map.pos(i))
            .filter(|c| labeled(*c))
            .min_by(|a, b| map.metric_dist(*a, start).total_cmp(&map.metric_dist(*b, start)))
    };
    let Some(start) = start else { return seen };
    seen[map.index(start)] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(c) = queue.pop_front() {
        for n in map.neighbors4(c) {
            let i = map.index(n);
            if !seen[i] && labeled(n) {
                seen[i] = true;
                queue.push_back(n);
            }
        }
    }
    seen
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalKind {
    /// A partition seed, seeing the whole partition from there.
    Seed,
    /// The nearest cell of the smallest unseen group.
    Group,
    /// The nearest cell next to unseen space.
    Frontier,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActiveGoal {
    pub decision: GoalDecision,
    pub kind: GoalKind,
    /// Cell originally chosen, before snapping onto reachable space.
    pub target: CellPos,
    /// Cost of the branch the goal came from.
    pub cost: f64,
}

/// What the controller did in one step.
#[derive(Clone, Debug, Default)]
pub struct StepReport {
    pub command: (f64, f64),
    pub goal: Option<CellPos>,
    pub partition: Option<usize>,
    pub waiting: bool,
    /// Cells newly marked seen this step.
    pub seen_delta: Vec<usize>,
    /// Cells discarded this step.
    pub discarded: usize,
    pub replanned: bool,
}

#[derive(Clone, Debug)]
pub struct Mission<'a> {
    map: &'a GridMap,
    plan: &'a OfflinePlan,
    cfg: MissionConfig,
    limits: KinodynamicLimits,
    margin: f64,
    reachable: Vec<bool>,
    reachable_count: usize,
    pub robot: RobotState,
    pub mask: ObservedMask,
    tracker: AreaTracker,
    areas: Vec<DynamicArea>,
    partition_hulls: Vec<Vec<Point>>,
    goal: Option<ActiveGoal>,
    /// Partitions whose seed was reached without finishing them.
    force_groups: Vec<bool>,
    path: Vec<CellPos>,
    planned_goal: Option<CellPos>,
    planned_speed: Vec<f64>,
    wait_elapsed: f64,
    clock: f64,
    idle_since: Option<f64>,
    /// Where the robot last made headway and when.
    progress: Option<(f64, f64, f64)>,
    status: MissionStatus,
    /// Times dynamic areas were (re)built; stays 0 under Greedy.
    pub area_builds: u64,
}

impl<'a> Mission<'a> {
    pub fn new(map: &'a GridMap, plan: &'a OfflinePlan, cfg: &MissionConfig, robot: RobotState) -> Self {
        let start = map.cell_at(robot.x, robot.y).unwrap_or(CellPos::new(0, 0));
        let reachable = reachable_cells(plan, map, start);
        let reachable_count = reachable.iter().filter(|r| **r).count();
        let partition_hulls = plan
            .partitioning
            .partitions
            .iter()
            .map(|p| {
                let res = map.resolution();
                let pts: Vec<Point> = p
                    .members
                    .iter()
                    .flat_map(|c| {
                        let (x0, y0) = (c.col as f64 * res, c.row as f64 * res);
                        [
                            Point::new(x0, y0),
                            Point::new(x0 + res, y0),
                            Point::new(x0, y0 + res),
                            Point::new(x0 + res, y0 + res),
                        ]
                    })
                    .collect();
                convex_hull(&pts)
            })
            .collect();
        Self {
            map,
            plan,
            cfg: cfg.clone(),
            limits: cfg.limits(),
            margin: static_margin(cfg.robot_radius, map.resolution()),
            reachable,
            reachable_count,
            robot,
            mask: ObservedMask::new(map),
            tracker: AreaTracker::new(cfg.memory_mode, TrackingParams::default()),
            areas: Vec::new(),
            partition_hulls,
            goal: None,
            force_groups: vec![false; plan.partitioning.len()],
            path: Vec::new(),
            planned_goal: None,
            planned_speed: Vec::new(),
            wait_elapsed: 0.0,
            clock: 0.0,
            idle_since: None,
            progress: None,
            status: MissionStatus::Running,
            area_builds: 0,
        }
    }

    pub fn status(&self) -> MissionStatus {
        self.status
    }

    /// Ends the mission from outside (collision).
    pub fn set_status(&mut self, status: MissionStatus) {
        if self.status == MissionStatus::Running {
            self.status = status;
        }
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn goal(&self) -> Option<&ActiveGoal> {
        self.goal.as_ref()
    }

    pub fn path(&self) -> &[CellPos] {
        &self.path
    }

    pub fn areas(&self) -> &[DynamicArea] {
        &self.areas
    }

    pub fn reachable(&self) -> &[bool] {
        &self.reachable
    }

    /// Seen share of the reachable cells.
    pub fn observed_ratio(&self) -> f64 {
        if self.reachable_count == 0 {
            return 1.0;
        }
        let seen =
            (0..self.map.len()).filter(|&i| self.reachable[i] && self.mask.state_at(i) == Observation::Seen).count();
        seen as f64 / self.reachable_count as f64
    }

    fn reachable_unseen(&self) -> usize {
        (0..self.map.len()).filter(|&i| self.reachable[i] && self.mask.state_at(i) == Observation::Unseen).count()
    }

    fn stop_command(&self) -> (f64, f64) {
        let w = 0.0f64.clamp(self.robot.w - self.limits.dw, self.robot.w + self.limits.dw);
        (0.0, w.clamp(-self.limits.w_max, self.limits.w_max))
    }

    /// Cells the robot's body covers, kept open in the velocity map.
    fn exempt_cells(&self) -> Vec<CellPos> {
        let res = self.map.resolution();
        let reach = self.cfg.robot_radius + res;
        let k = (reach / res).ceil() as i64;
        let Some(rc) = self.map.cell_at(self.robot.x, self.robot.y) else { return Vec::new() };
        // Inside the static margin only cells no closer to the walls than
        // the robot's own stay open, so paths lead out of the margin and
        // never along it.
        let dso = &self.plan.dso;
        let floor = dso.get(rc).min(self.margin);
        let mut out = Vec::new();
        for dr in -k..=k {
            for dc in -k..=k {
                if let Some(c) = self.map.cell(rc.col as i64 + dc, rc.row as i64 + dr) {
                    let (x, y) = self.map.center(c);
                    if self.map.is_free(c) && dso.get(c) >= floor && (x - self.robot.x).hypot(y - self.robot.y) <= reach
                    {
                        out.push(c);
                    }
                }
            }
        }
        out
    }

    /// Whole partitions holding a tracked obstacle, except the robot's own.
    fn partition_areas(&self, robot_part: Option<usize>) -> Vec<DynamicArea> {
        let parts = &self.plan.partitioning;
        let mut n_do = vec![0usize; parts.len()];
        let mut sources: Vec<Vec<u64>> = vec![Vec::new(); parts.len()];
        for t in self.tracker.tracks.iter().filter(|t| t.present) {
            let mut hit = Vec::new();
            for c in &t.footprint {
                if let Some(p) = parts.label(*c) {
                    n_do[p] += 1;
                    if !hit.contains(&p) {
                        hit.push(p);
                    }
                }
            }
            for p in hit {
                sources[p].push(t.id);
            }
        }
        (0..parts.len())
            .filter(|&p| n_do[p] > 0 && Some(p) != robot_part)
            .map(|p| {
                let members = parts.get(p).members.clone();
                DynamicArea {
                    hull: self.partition_hulls[p].clone(),
                    density: n_do[p] as f64 / members.len() as f64,
                    member_cells: members,
                    n_do: n_do[p],
                    source_tracks: std::mem::take(&mut sources[p]),
                    forced_dense: true,
                }
            })
            .collect()
    }

    /// Partition holding `c`, or the one of the nearest labeled cell.
    fn partition_of(&self, c: CellPos) -> Option<usize> {
        let parts = &self.plan.partitioning;
        if let Some(p) = parts.label(c) {
            return Some(p);
        }
        for radius in 1..=4i64 {
            let mut best: Option<(f64, usize, usize)> = None;
            for dr in -radius..=radius {
                for dc in -radius..=radius {
                    let Some(n) = self.map.cell(c.col as i64 + dc, c.row as i64 + dr) else { continue };
                    if let Some(p) = parts.label(n) {
                        let d = self.map.metric_dist(c, n);
                        let key = (d, self.map.index(n), p);
                        if best.is_none_or(|b| (key.0, key.1) < (b.0, b.1)) {
                            best = Some(key);
                        }
                    }
                }
            }
            if let Some((_, _, p)) = best {
                return Some(p);
            }
        }
        None
    }

    /// Reachable cell nearest to `target` that sees it within range, or
    /// `target` itself when reachable.
    fn snap(&self, target: CellPos, comp: &[u32], rc: u32) -> Option<CellPos> {
        let map = self.map;
        if comp[map.index(target)] == rc {
            return Some(target);
        }
        let res = map.resolution();
        let k = (self.cfg.r_v / res).floor() as i64;
        let mut cands: Vec<(f64, usize)> = Vec::new();
        for dr in -k..=k {
            for dc in -k..=k {
                let Some(c) = map.cell(target.col as i64 + dc, target.row as i64 + dr) else { continue };
                let i = map.index(c);
                let d = map.metric_dist(c, target);
                if comp[i] == rc && d <= self.cfg.r_v {
                    cands.push((d, i));
                }
            }
        }
        cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        cands.into_iter().map(|(_, i)| map.pos(i)).find(|&c| line_of_sight(map, c, target))
    }

    fn select_frontier_goal(
        &self,
        speed: &VelocityField,
        comp: &[u32],
        rc: u32,
        robot_cell: CellPos,
    ) -> Option<ActiveGoal> {
        let map = self.map;
        let unseen = |c: CellPos| map.is_free(c) && self.mask.is_unseen(c);
        let targets: Vec<bool> = (0..map.len())
            .map(|i| {
                let c = map.pos(i);
                comp[i] == rc && (unseen(c) || map.neighbors8(c).any(unseen))
            })
            .collect();
        let (_, hit) = fmm::solve_until_any(&[robot_cell], speed, &targets).ok()?;
        let goal = hit?;
        let partition = self.partition_of(goal).unwrap_or(0);
        let wait_budget = if self.plan.partitioning.is_empty() {
            0.0
        } else {
            wait_time(self.plan.partitioning.get(partition), self.cfg.v_max)
        };
        Some(ActiveGoal {
            decision: GoalDecision { partition, goal, wait_budget },
            kind: GoalKind::Frontier,
            target: goal,
            cost: 0.0,
        })
    }

    /// Goal inside partition `p` for branch cost `cost`, snapped onto
    /// reachable space.
    fn goal_in_partition(
        &self,
        p: usize,
        cost: f64,
        speed: &VelocityField,
        comp: &[u32],
        rc: u32,
        robot_cell: CellPos,
    ) -> Option<ActiveGoal> {
        let map = self.map;
        let part = self.plan.partitioning.get(p);
        if !part.members.iter().any(|c| self.mask.is_unseen(*c)) {
            return None;
        }
        let r_v = if self.force_groups[p] { 0.0 } else { self.cfg.r_v };
        let (target, kind) = if r_v >= part.d_max {
            (part.seed, GoalKind::Seed)
        } else {
            let groups = unseen_groups(part, &self.mask, map);
            let smallest =
                groups.iter().min_by(|a, b| a.len().cmp(&b.len()).then(map.index(a[0]).cmp(&map.index(b[0]))))?;
            let mut in_group = vec![false; map.len()];
            for c in smallest {
                in_group[map.index(*c)] = true;
            }
            let (dr, _) = fmm::solve_until_any(&[robot_cell], speed, &in_group).ok()?;
            (compute_goal(part, r_v, &dr, &self.mask, map).ok()?, GoalKind::Group)
        };
        let goal = self.snap(target, comp, rc)?;
        Some(ActiveGoal {
            decision: GoalDecision { partition: p, goal, wait_budget: wait_time(part, self.cfg.v_max) },
            kind,
            target,
            cost,
        })
    }

    /// Cheapest goal over the plan tree and, when the current goal is still
    /// valid, the current cost of its partition.
    fn select_partition_goal(
        &self,
        speed: &VelocityField,
        comp: &[u32],
        rc: u32,
        robot_cell: CellPos,
    ) -> (Option<ActiveGoal>, Option<f64>) {
        let parts = &self.plan.partitioning;
        let Some(root) = self.partition_of(robot_cell) else { return (None, None) };
        let blocked: Vec<bool> = parts
            .partitions
            .iter()
            .map(|p| p.id != root && !p.members.iter().any(|c| comp[self.map.index(*c)] == rc))
            .collect();
        let Ok(tree) = build_tree(&self.plan.graph, root, &blocked) else { return (None, None) };
        let unseen = unseen_counts(parts, &self.mask);
        let costs: Vec<f64> = tree
            .branches
            .iter()
            .map(|b| branch_cost(b, parts, self.map, &unseen, self.cfg.r_v, self.cfg.v_max))
            .collect();
        let current_cost = self.goal.and_then(|g| {
            tree.branches
                .iter()
                .zip(&costs)
                .filter(|(b, _)| b.contains(&g.decision.partition))
                .map(|(_, c)| *c)
                .min_by(f64::total_cmp)
        });
        let mut tried = vec![false; parts.len()];
        for bi in rank_branches(&tree.branches, &costs) {
            for &p in &tree.branches[bi] {
                if unseen[p] == 0 || tried[p] {
                    continue;
                }
                tried[p] = true;
                if let Some(g) = self.goal_in_partition(p, costs[bi], speed, comp, rc, robot_cell) {
                    return (Some(g), current_cost);
                }
            }
        }
        (None, current_cost)
    }

    fn goal_still_valid(&self, g: &ActiveGoal, comp: &[u32], rc: u32) -> bool {
        let map = self.map;
        if comp[map.index(g.decision.goal)] != rc {
            return false;
        }
        match g.kind {
            GoalKind::Frontier => {
                let unseen = |c: CellPos| map.is_free(c) && self.mask.is_unseen(c);
                unseen(g.target) || map.neighbors8(g.target).any(unseen)
            }
            GoalKind::Seed | GoalKind::Group => {
                let part = self.plan.partitioning.get(g.decision.partition);
                part.members.iter().any(|c| self.mask.is_unseen(*c))
            }
        }
    }

    fn choose_goal(&mut self, speed: &VelocityField, comp: &[u32], rc: u32, robot_cell: CellPos) {
        let current = self.goal.filter(|g| self.goal_still_valid(g, comp, rc));
        let next = match self.cfg.strategy {
            Strategy::Greedy => {
                if current.is_some() {
                    return;
                }
                self.select_frontier_goal(speed, comp, rc, robot_cell)
            }
            Strategy::Madp | Strategy::Mada => {
                let (cand, current_cost) = self.select_partition_goal(speed, comp, rc, robot_cell);
                // Stay with the current partition while it is reachable,
                // re-deriving its goal if the old cell was cut off.
                let kept = match (self.goal, current_cost) {
                    (Some(g), Some(cc)) if current.is_some() => Some(ActiveGoal { cost: cc, ..g }),
                    (Some(g), Some(cc)) => {
                        self.goal_in_partition(g.decision.partition, cc, speed, comp, rc, robot_cell)
                    }
                    _ => None,
                };
                match (kept, cand) {
                    (Some(k), Some(c)) if c.decision.partition != k.decision.partition => {
                        if c.cost < GOAL_HYSTERESIS * k.cost {
                            Some(c)
                        } else {
                            Some(k)
                        }
                    }
                    (Some(k), Some(c)) => {
                        if c.kind == k.kind && c.target == k.target && current.is_some() {
                            Some(k)
                        } else {
                            Some(c)
                        }
                    }
                    (k, c) => c.or(k),
                }
            }
        };
        if next.map(|g| (g.decision.goal, g.decision.partition))
            != self.goal.map(|g| (g.decision.goal, g.decision.partition))
        {
            self.wait_elapsed = 0.0;
        }
        self.goal = next;
    }

    /// Unseen cells the goal is meant to reveal that a static line of sight
    /// from the robot would show.
    fn pending_cells(&self, robot_cell: CellPos, g: &ActiveGoal) -> Vec<CellPos> {
        let map = self.map;
        let in_range = |c: &CellPos| map.metric_dist(robot_cell, *c) <= self.cfg.r_v;
        let candidates: Vec<CellPos> = match g.kind {
            GoalKind::Frontier => {
                let k = (self.cfg.r_v / map.resolution()).floor() as i64;
                let mut out = Vec::new();
                for dr in -k..=k {
                    for dc in -k..=k {
                        if let Some(c) = map.cell(robot_cell.col as i64 + dc, robot_cell.row as i64 + dr) {
                            if self.reachable[map.index(c)] && self.mask.is_unseen(c) {
                                out.push(c);
                            }
                        }
                    }
                }
                out
            }
            GoalKind::Seed | GoalKind::Group => self
                .plan
                .partitioning
                .get(g.decision.partition)
                .members
                .iter()
                .copied()
                .filter(|c| self.mask.is_unseen(*c))
                .collect(),
        };
        candidates.into_iter().filter(in_range).filter(|c| line_of_sight(map, robot_cell, *c)).collect()
    }

    /// Cells given up when the goal is reached with nothing left to wait for.
    fn abandon_target(&mut self, g: &ActiveGoal) -> usize {
        let map = self.map;
        match g.kind {
            GoalKind::Seed => {
                self.force_groups[g.decision.partition] = true;
                0
            }
            GoalKind::Group => {
                let part = self.plan.partitioning.get(g.decision.partition);
                let group = unseen_groups(part, &self.mask, map).into_iter().find(|gr| gr.contains(&g.target));
                match group {
                    Some(gr) => self.mask.discard(map, gr),
                    None => 0,
                }
            }
            GoalKind::Frontier => {
                let mut cells: Vec<CellPos> = map.neighbors8(g.target).collect();
                cells.push(g.target);
                self.mask.discard(map, cells)
            }
        }
    }

    fn at_goal(&self, g: &ActiveGoal) -> bool {
        let (x, y) = self.map.center(g.decision.goal);
        (x - self.robot.x).hypot(y - self.robot.y) <= self.map.resolution().max(self.cfg.robot_radius)
    }

    /// One control period at time `now`.
    pub fn step(&mut self, sensed: &Sensed, now: f64) -> StepReport {
        self.clock = now;
        let mut report = StepReport { command: self.stop_command(), ..Default::default() };
        if self.status != MissionStatus::Running {
            return report;
        }
        let map = self.map;
        report.seen_delta = self.mask.mark_seen(map, sensed.visible.iter().copied());
        let mask_changed = !report.seen_delta.is_empty();

        if self.reachable_unseen() == 0 {
            self.status = MissionStatus::Complete;
            self.goal = None;
            return report;
        }
        if now >= self.cfg.timeout {
            self.status = MissionStatus::Timeout;
            return report;
        }

        let robot_cell = map.cell_at(self.robot.x, self.robot.y);
        let robot_part = robot_cell.and_then(|c| self.partition_of(c));
        let mut visible = vec![false; map.len()];
        for c in &sensed.visible {
            visible[map.index(*c)] = true;
        }
        let new_areas = match self.cfg.strategy {
            Strategy::Greedy => {
                if self.cfg.projections {
                    self.tracker.observe(&sensed.obstacle_cells, &visible, map, now);
                }
                Vec::new()
            }
            Strategy::Mada => {
                self.tracker.update(&sensed.obstacle_cells, &visible, map, now);
                self.area_builds += 1;
                let mut areas = self.tracker.areas.clone();
                if let Some(rc) = robot_cell {
                    for a in areas.iter_mut().filter(|a| a.member_cells.contains(&rc)) {
                        a.forced_dense = false;
                        a.density = a.density.min(self.cfg.o_th);
                    }
                }
                areas
            }
            Strategy::Madp => {
                self.tracker.observe(&sensed.obstacle_cells, &visible, map, now);
                self.area_builds += 1;
                self.partition_areas(robot_part)
            }
        };
        let areas_changed = new_areas != self.areas;
        self.areas = new_areas;

        let mut obstacles = sensed.obstacle_cells.clone();
        if self.cfg.projections {
            obstacles.extend(project_tracks(&self.tracker.tracks, map, self.cfg.projection_horizon));
        }
        let exempt = self.exempt_cells();
        let inputs = PlannerInputs {
            map,
            dso: &self.plan.dso,
            static_margin: self.margin,
            obstacles: &obstacles,
            areas: &self.areas,
            o_th: self.cfg.o_th,
            safety: self.cfg.safety() + map.resolution() * std::f64::consts::SQRT_2 / 2.0,
            exempt: &exempt,
        };
        let vm = build_velocity_map(&inputs);
        let speed = vm.field;
        let comp = passable_components(&speed);
        let Some(robot_cell) = robot_cell.filter(|c| comp[map.index(*c)] != u32::MAX) else {
            self.goal = None;
            self.path.clear();
            self.note_idle(now);
            return report;
        };
        let rc = comp[map.index(robot_cell)];

        let needs_goal = self.goal.is_none()
            || mask_changed
            || areas_changed
            || self.goal.is_some_and(|g| comp[map.index(g.decision.goal)] != rc);
        if needs_goal {
            self.choose_goal(&speed, &comp, rc, robot_cell);
        }

        // At most one re-selection after handling an arrival.
        for _ in 0..2 {
            let Some(g) = self.goal else { break };
            if !self.at_goal(&g) {
                break;
            }
            let pending = self.pending_cells(robot_cell, &g);
            if !pending.is_empty() {
                self.wait_elapsed += self.cfg.control_period;
                if self.wait_elapsed <= g.decision.wait_budget {
                    report.waiting = true;
                    report.goal = Some(g.decision.goal);
                    report.partition = Some(g.decision.partition);
                    self.idle_since = None;
                    self.progress = None;
                    return report;
                }
                report.discarded += self.mask.discard(map, pending);
            } else {
                report.discarded += self.abandon_target(&g);
            }
            self.goal = None;
            self.wait_elapsed = 0.0;
            if self.reachable_unseen() == 0 {
                self.status = MissionStatus::Complete;
                return report;
            }
            self.choose_goal(&speed, &comp, rc, robot_cell);
        }

        if let Some(g) = self.goal {
            if self.stalled(now) {
                report.discarded += self.abandon_target(&g);
                self.goal = None;
                self.progress = None;
                self.choose_goal(&speed, &comp, rc, robot_cell);
            }
        }

        let Some(g) = self.goal else {
            self.path.clear();
            self.note_idle(now);
            return report;
        };
        self.idle_since = None;
        report.goal = Some(g.decision.goal);
        report.partition = Some(g.decision.partition);

        let off_path = self.path.is_empty() || {
            let k = nearest_index(&self.path, map, self.robot.x, self.robot.y);
            let (x, y) = map.center(self.path[k]);
            (x - self.robot.x).hypot(y - self.robot.y) > 1.5 * map.resolution()
        };
        if self.planned_goal != Some(g.decision.goal) || self.planned_speed != speed.values() || off_path {
            match plan_on(&speed, g.decision.goal, robot_cell) {
                Ok(path) => {
                    self.path = path;
                    self.planned_goal = Some(g.decision.goal);
                    self.planned_speed = speed.values().to_vec();
                    report.replanned = true;
                }
                Err(_) => {
                    self.path.clear();
                    self.planned_goal = None;
                    self.goal = None;
                    return report;
                }
            }
        }

        let mut choice = select_destination(&self.path, &self.robot, map, &self.plan.dso, &obstacles, &self.limits);
        let start = nearest_index(&self.path, map, self.robot.x, self.robot.y);
        // Step past the nearest cell unless a dynamic obstacle already sits
        // within 2R of the next one.
        let next_clear =
            |k: usize| obstacles.iter().all(|o| map.metric_dist(self.path[k], *o) >= 2.0 * self.limits.radius);
        if choice.index <= start && start + 1 < self.path.len() && next_clear(start + 1) {
            choice.index = start + 1;
            choice.dest = self.path[start + 1];
        }
        let dest = map.center(choice.dest);
        report.command = compute_velocities(&self.robot, dest, choice.clearance_factor, &self.limits);
        report
    }

    /// Whether the robot has stayed within two cells of one spot for
    /// `stall_patience` seconds while chasing a goal.
    fn stalled(&mut self, now: f64) -> bool {
        let (x, y) = (self.robot.x, self.robot.y);
        match self.progress {
            Some((ax, ay, since)) if (ax - x).hypot(ay - y) <= 2.0 * self.map.resolution() => {
                now - since >= self.cfg.stall_patience
            }
            _ => {
                self.progress = Some((x, y, now));
                false
            }
        }
    }

    fn note_idle(&mut self, now: f64) {
        let since = *self.idle_since.get_or_insert(now);
        if now - since >= self.cfg.blocked_patience {
            self.status = MissionStatus::Blocked;
        }
    }
}
