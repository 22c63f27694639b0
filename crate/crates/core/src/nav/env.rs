use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::NavError;
use crate::geometry::{self, angle_diff, in_cone, line_of_sight, DistanceField};
use crate::model::{
    lattice_floor, Camera, Cell, NormPoint, ObjectId, ObjectInstance, OccupancyGrid, RotateDir, Scene, SceneKind,
    TaskSpec, WorldPose,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetMode {
    /// Every controller step along a path counts against the budget.
    #[default]
    PrimitiveSteps,
    /// Only planner decisions count.
    Decisions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NavParams {
    pub fov_deg: f64,
    pub view_range_m: f64,
    pub detection_range_m: f64,
    pub rotation_deg: f64,
    pub step_budget: u32,
    pub budget_mode: BudgetMode,
}

impl Default for NavParams {
    fn default() -> Self {
        Self {
            fov_deg: 90.0,
            view_range_m: 5.0,
            detection_range_m: 1.0,
            rotation_deg: 30.0,
            step_budget: 500,
            budget_mode: BudgetMode::PrimitiveSteps,
        }
    }
}

impl NavParams {
    pub fn fov(&self) -> f64 {
        self.fov_deg.to_radians()
    }

    pub fn rotation(&self) -> f64 {
        self.rotation_deg.to_radians()
    }
}

fn grid_of(scene: &Scene) -> Result<&OccupancyGrid, NavError> {
    if scene.kind != SceneKind::Floorplan {
        return Err(NavError::NotNavigable(format!("scene {} is not a floorplan", scene.id)));
    }
    scene
        .occupancy
        .as_ref()
        .ok_or_else(|| NavError::NotNavigable(format!("scene {} has no occupancy grid", scene.id)))
}

/// Cells whose centers fall inside the object footprint, or the cell under
/// its center when the footprint is smaller than a cell.
pub fn covered_cells(grid: &OccupancyGrid, o: &ObjectInstance) -> Vec<Cell> {
    let shape = o.shape();
    let [x0, y0, x1, y1] = shape.bbox();
    let (Some(a), Some(b)) = (
        grid.cell_of(x0.max(grid.origin()[0]), y0.max(grid.origin()[1])),
        grid.cell_of(x1.min(grid.bounds().max_x()), y1.min(grid.bounds().max_y())),
    ) else {
        return Vec::new();
    };
    let mut out: Vec<Cell> = (a.row..=b.row)
        .flat_map(|r| (a.col..=b.col).map(move |c| Cell::new(c, r)))
        .filter(|c| shape.contains(grid.center(*c), 0.0))
        .collect();
    if out.is_empty() {
        out.extend(grid.cell_of_pose(&o.pose));
    }
    out
}

/// Covered cells of every instance of `category`.
pub fn target_cells(scene: &Scene, category: &str) -> Result<Vec<Cell>, NavError> {
    let grid = grid_of(scene)?;
    let mut cells: BTreeSet<Cell> = BTreeSet::new();
    for o in scene.instances_of(category) {
        cells.extend(covered_cells(grid, o));
    }
    if cells.is_empty() {
        return Err(NavError::NoTarget(category.to_string()));
    }
    Ok(cells.into_iter().collect())
}

/// Free cells from which some target cell is within detection range with
/// a clear line of sight, i.e. where facing the target ends the episode.
pub fn goal_cells(grid: &OccupancyGrid, targets: &[Cell], detection_range: f64) -> Vec<Cell> {
    let reach = (detection_range / grid.resolution()).ceil() as i64 + 1;
    let mut out = BTreeSet::new();
    for t in targets {
        let tc = grid.center(*t);
        for dr in -reach..=reach {
            for dc in -reach..=reach {
                let (col, row) = (t.col as i64 + dc, t.row as i64 + dr);
                if !grid.in_grid(col, row) {
                    continue;
                }
                let a = Cell::new(col as usize, row as usize);
                if out.contains(&a) || !grid.is_free(a) {
                    continue;
                }
                let ac = grid.center(a);
                if (ac[0] - tc[0]).hypot(ac[1] - tc[1]) <= detection_range + 1e-9 && line_of_sight(grid, a, *t) {
                    out.insert(a);
                }
            }
        }
    }
    out.into_iter().collect()
}

fn goal_field(scene: &Scene, category: &str, params: &NavParams) -> Result<(Vec<Cell>, DistanceField), NavError> {
    let grid = grid_of(scene)?;
    let targets = target_cells(scene, category)?;
    let goals = goal_cells(grid, &targets, params.detection_range_m);
    if goals.is_empty() {
        return Err(NavError::Unreachable(format!("no free cell can detect a {category}")));
    }
    let field = DistanceField::from_sources(grid, &goals);
    Ok((targets, field))
}

/// Shortest traverse distance from `start` to any cell that can detect a
/// `category` instance.
pub fn start_goal_distance(scene: &Scene, category: &str, start: &WorldPose, params: &NavParams) -> Result<f64, NavError> {
    let grid = grid_of(scene)?;
    let cell = grid
        .cell_of_pose(start)
        .ok_or_else(|| NavError::NotNavigable("start lies outside the grid".into()))?;
    let (_, field) = goal_field(scene, category, params)?;
    field
        .distance(cell)
        .ok_or_else(|| NavError::Unreachable(format!("no {category} reachable from the start")))
}

/// The canonical 2-decimal address of a grid cell: the smallest lattice
/// point whose world position falls inside the cell. `None` when the cell
/// is narrower than the 0.01 lattice.
pub fn address_point(grid: &OccupancyGrid, camera: &Camera, c: Cell) -> Option<NormPoint> {
    let [sx, sy] = camera.scale();
    let b = camera.bounds();
    let left = (grid.origin()[0] + c.col as f64 * grid.resolution() - b.min_x) / sx;
    let top = (grid.origin()[1] + c.row as f64 * grid.resolution() - b.min_y) / sy;
    let kx0 = lattice_floor(left);
    let ky0 = lattice_floor(top);
    for ky in ky0..=ky0 + 2 {
        for kx in kx0..=kx0 + 2 {
            let Ok(p) = NormPoint::new(kx as f64 / 100.0, ky as f64 / 100.0) else { continue };
            let [x, y] = camera.to_world_xy(&p);
            if grid.cell_of(x, y) == Some(c) {
                return Some(p);
            }
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NavAction {
    Subgoal { point: NormPoint },
    Rotate { direction: RotateDir },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvalidReason {
    Obstacle,
    NotVisible,
    /// The response could not be parsed into an action.
    Unparseable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum NavStepStatus {
    Moved { cells: u32 },
    Stayed,
    Rotated,
    Invalid { reason: InvalidReason },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NavStepOutcome {
    #[serde(flatten)]
    pub status: NavStepStatus,
    pub steps_used: u32,
    pub success: bool,
    pub terminated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibleObject {
    pub id: ObjectId,
    pub category: String,
    pub point: NormPoint,
}

/// What a planner gets to see before each decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavObservation {
    pub agent: NormPoint,
    pub heading_deg: f64,
    pub steps_used: u32,
    pub steps_remaining: u32,
    /// Addresses of free cells currently in view, in cell order.
    pub visible_navigable: Vec<NormPoint>,
    pub visible_objects: Vec<VisibleObject>,
}

/// Object-goal navigation episode on a floorplan occupancy grid.
#[derive(Debug, Clone)]
pub struct NavEnv {
    scene: Arc<Scene>,
    grid: OccupancyGrid,
    category: String,
    params: NavParams,
    targets: Vec<Cell>,
    field: DistanceField,
    agent: WorldPose,
    steps_used: u32,
    decisions: u32,
    terminated: bool,
    success: bool,
    trajectory: Vec<WorldPose>,
}

impl NavEnv {
    pub fn new(scene: Arc<Scene>, task: &TaskSpec, params: NavParams) -> Result<Self, NavError> {
        let category = task
            .nav_target_category
            .clone()
            .ok_or_else(|| NavError::NotNavigable("task has no target category".into()))?;
        let start = task
            .start
            .ok_or_else(|| NavError::NotNavigable("task has no start pose".into()))?;
        Self::with_start(scene, &category, start, params)
    }

    pub fn with_start(scene: Arc<Scene>, category: &str, start: WorldPose, params: NavParams) -> Result<Self, NavError> {
        let grid = grid_of(&scene)?.clone();
        let cell = grid
            .cell_of_pose(&start)
            .ok_or_else(|| NavError::NotNavigable("start lies outside the grid".into()))?;
        if grid.is_obstacle(cell) {
            return Err(NavError::NotNavigable("start cell is an obstacle".into()));
        }
        let (targets, field) = goal_field(&scene, category, &params)?;
        let mut env = Self {
            scene,
            grid,
            category: category.to_string(),
            params,
            targets,
            field,
            agent: start,
            steps_used: 0,
            decisions: 0,
            terminated: false,
            success: false,
            trajectory: vec![start],
        };
        if env.detects_target() {
            env.success = true;
            env.terminated = true;
        }
        Ok(env)
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn scene_arc(&self) -> Arc<Scene> {
        Arc::clone(&self.scene)
    }

    pub fn grid(&self) -> &OccupancyGrid {
        &self.grid
    }

    pub fn params(&self) -> &NavParams {
        &self.params
    }

    pub fn target_category(&self) -> &str {
        &self.category
    }

    pub fn agent(&self) -> WorldPose {
        self.agent
    }

    pub fn agent_cell(&self) -> Cell {
        self.grid.cell_of_pose(&self.agent).expect("agent stays on the grid")
    }

    pub fn steps_used(&self) -> u32 {
        self.steps_used
    }

    pub fn decisions(&self) -> u32 {
        self.decisions
    }

    pub fn is_terminated(&self) -> bool {
        self.terminated
    }

    pub fn success(&self) -> bool {
        self.success
    }

    pub fn trajectory(&self) -> &[WorldPose] {
        &self.trajectory
    }

    pub fn target_cells(&self) -> &[Cell] {
        &self.targets
    }

    /// Cells in view from the current pose.
    pub fn visible(&self) -> BTreeSet<Cell> {
        geometry::visible_region(&self.grid, &self.agent, self.params.fov(), self.params.view_range_m)
    }

    /// Visible free cells that have a lattice address.
    pub fn visible_navigable(&self) -> Vec<Cell> {
        let cam = self.scene.camera();
        self.visible()
            .into_iter()
            .filter(|c| self.grid.is_free(*c) && address_point(&self.grid, &cam, *c).is_some())
            .collect()
    }

    /// Traverse distance from a cell to the nearest detection cell.
    pub fn goal_distance(&self, c: Cell) -> Option<f64> {
        self.field.distance(c)
    }

    /// Distances to the detection cells.
    pub fn goal_field(&self) -> &DistanceField {
        &self.field
    }

    pub fn address(&self, c: Cell) -> Option<NormPoint> {
        address_point(&self.grid, &self.scene.camera(), c)
    }

    pub fn cell_of_point(&self, p: &NormPoint) -> Option<Cell> {
        let [x, y] = self.scene.camera().to_world_xy(p);
        self.grid.cell_of(x, y)
    }

    pub fn observe(&self) -> Result<NavObservation, NavError> {
        if self.terminated {
            return Err(NavError::Terminated);
        }
        let cam = self.scene.camera();
        let visible = self.visible();
        let visible_navigable = visible
            .iter()
            .filter(|c| self.grid.is_free(**c))
            .filter_map(|c| address_point(&self.grid, &cam, *c))
            .collect();
        let visible_objects = self
            .scene
            .objects
            .iter()
            .filter(|o| covered_cells(&self.grid, o).iter().any(|c| visible.contains(c)))
            .filter_map(|o| {
                Some(VisibleObject {
                    id: o.id.clone(),
                    category: o.category.clone(),
                    point: cam.to_norm(&o.pose).ok()?.quantized(),
                })
            })
            .collect();
        Ok(NavObservation {
            agent: cam.to_norm(&self.agent).expect("agent in bounds").quantized(),
            heading_deg: self.agent.heading.to_degrees(),
            steps_used: self.steps_used,
            steps_remaining: self.params.step_budget.saturating_sub(self.steps_used),
            visible_navigable,
            visible_objects,
        })
    }

    fn detects_target(&self) -> bool {
        let Some(agent_cell) = self.grid.cell_of_pose(&self.agent) else { return false };
        let range = self.params.detection_range_m;
        self.targets.iter().any(|t| {
            in_cone(&self.agent, self.grid.center(*t), self.params.fov(), range)
                && line_of_sight(&self.grid, agent_cell, *t)
        })
    }

    /// Charges one primitive step and checks for detection and budget.
    fn tick(&mut self) {
        if self.params.budget_mode == BudgetMode::PrimitiveSteps {
            self.steps_used += 1;
        }
        if self.detects_target() {
            self.success = true;
            self.terminated = true;
        } else if self.steps_used >= self.params.step_budget {
            self.terminated = true;
        }
    }

    fn outcome(&self, status: NavStepStatus) -> NavStepOutcome {
        NavStepOutcome { status, steps_used: self.steps_used, success: self.success, terminated: self.terminated }
    }

    fn begin_decision(&mut self) -> Result<(), NavError> {
        if self.terminated {
            return Err(NavError::Terminated);
        }
        self.decisions += 1;
        if self.params.budget_mode == BudgetMode::Decisions {
            self.steps_used += 1;
        }
        Ok(())
    }

    /// Records a response that failed to parse: one wasted step, no motion.
    pub fn step_invalid(&mut self, reason: InvalidReason) -> Result<NavStepOutcome, NavError> {
        self.begin_decision()?;
        self.tick();
        Ok(self.outcome(NavStepStatus::Invalid { reason }))
    }

    pub fn step(&mut self, action: &NavAction) -> Result<NavStepOutcome, NavError> {
        match action {
            NavAction::Rotate { direction } => {
                self.begin_decision()?;
                let delta = match direction {
                    RotateDir::Left => -self.params.rotation(),
                    RotateDir::Right => self.params.rotation(),
                };
                self.agent = WorldPose::new(self.agent.x, self.agent.y, self.agent.heading + delta);
                self.trajectory.push(self.agent);
                self.tick();
                Ok(self.outcome(NavStepStatus::Rotated))
            }
            NavAction::Subgoal { point } => {
                let target = self.cell_of_point(point);
                let visible = self.visible();
                self.begin_decision()?;
                let reason = match target {
                    Some(c) if self.grid.is_obstacle(c) => Some(InvalidReason::Obstacle),
                    Some(c) if !visible.contains(&c) => Some(InvalidReason::NotVisible),
                    None => Some(InvalidReason::NotVisible),
                    Some(_) => None,
                };
                if let Some(reason) = reason {
                    self.tick();
                    return Ok(self.outcome(NavStepStatus::Invalid { reason }));
                }
                let goal = target.expect("checked");
                let here = self.agent_cell();
                if goal == here {
                    self.tick();
                    return Ok(self.outcome(NavStepStatus::Stayed));
                }
                let path = geometry::shortest_path(&self.grid, here, &[goal])
                    .map_err(|e| NavError::Unreachable(e.to_string()))?;
                let mut moved = 0;
                for w in path.waypoints.windows(2) {
                    let [x0, y0] = self.grid.center(w[0]);
                    let [x1, y1] = self.grid.center(w[1]);
                    self.agent = WorldPose::new(x1, y1, (y1 - y0).atan2(x1 - x0));
                    self.trajectory.push(self.agent);
                    moved += 1;
                    self.tick();
                    if self.terminated {
                        break;
                    }
                }
                Ok(self.outcome(NavStepStatus::Moved { cells: moved }))
            }
        }
    }

    /// Greedy privileged decision: the visible cell closest to a detection
    /// cell if it improves on the current one, otherwise a turn toward the
    /// next cell on the shortest path.
    pub fn oracle_action(&self) -> Result<NavAction, NavError> {
        if self.terminated {
            return Err(NavError::Terminated);
        }
        let here = self.agent_cell();
        let here_steps = self
            .field
            .steps(here)
            .ok_or_else(|| NavError::NoTargetReachable(self.category.clone()))?;
        // ties go to the cell nearest the agent, so the subgoal stays on a
        // shortest path when one is in view
        let from_here = DistanceField::from_sources(&self.grid, &[here]);
        let best = self
            .visible_navigable()
            .into_iter()
            .filter_map(|c| Some((self.field.steps(c)?, from_here.steps(c)?, c)))
            .min();
        if let Some((s, _, c)) = best {
            if s < here_steps {
                return Ok(NavAction::Subgoal { point: self.address(c).expect("navigable cells have addresses") });
            }
        }
        let aim = if here_steps == geometry::StepCount::ZERO {
            let range = self.params.detection_range_m;
            let [ax, ay] = self.grid.center(here);
            self.targets
                .iter()
                .filter(|t| {
                    let [tx, ty] = self.grid.center(**t);
                    (tx - ax).hypot(ty - ay) <= range + 1e-9 && line_of_sight(&self.grid, here, **t)
                })
                .min_by(|a, b| {
                    let d = |c: &Cell| {
                        let [x, y] = self.grid.center(*c);
                        (x - ax).hypot(y - ay)
                    };
                    d(a).total_cmp(&d(b)).then(a.cmp(b))
                })
                .copied()
        } else {
            self.field.descend(&self.grid, here)
        };
        let Some(aim) = aim else {
            return Err(NavError::Unreachable("no descent direction".into()));
        };
        let [ax, ay] = self.grid.center(here);
        let [tx, ty] = self.grid.center(aim);
        let diff = angle_diff((ty - ay).atan2(tx - ax), self.agent.heading);
        Ok(NavAction::Rotate { direction: if diff < 0.0 { RotateDir::Left } else { RotateDir::Right } })
    }
}
