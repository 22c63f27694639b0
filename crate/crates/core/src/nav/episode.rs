use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::env::{goal_cells, target_cells, NavParams};
use super::floorplan::{generate_floorplan, FloorplanParams};
use super::NavError;
use crate::geometry::{self, DistanceField};
use crate::model::{
    classify_level_with, nav_instruction, DifficultyLevel, Scene, TaskKind, TaskSpec, WorldPose, NAV_DISTANCE_SPLIT_M,
    NAV_GOAL_COUNT_SPLIT,
};
use crate::rng::{derive_seed, seeded};

/// Starts closer than this to the goal region are not generated.
pub const MIN_START_DISTANCE_M: f64 = 1.5;
const MAX_ATTEMPTS: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavTask {
    pub scene: Scene,
    pub task: TaskSpec,
}

/// Generates a navigation episode whose goal count and start distance put
/// it in the requested level, with the target out of view at the start.
pub fn generate_nav_task(
    level: u8,
    seed: u64,
    floorplan: &FloorplanParams,
    params: &NavParams,
) -> Result<NavTask, NavError> {
    let target = DifficultyLevel::new(TaskKind::Nav, level)?;
    let many = matches!(level, 1 | 3);
    let near = matches!(level, 1 | 2);
    for attempt in 0..MAX_ATTEMPTS {
        let s = derive_seed(seed, attempt);
        let mut rng = seeded(s);
        let scene = generate_floorplan(&format!("nav-l{level}-{seed:016x}"), floorplan, s);
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for o in &scene.objects {
            *counts.entry(o.category.as_str()).or_default() += 1;
        }
        let categories: Vec<&str> = counts
            .iter()
            .filter(|(_, &n)| (n > NAV_GOAL_COUNT_SPLIT) == many)
            .map(|(c, _)| *c)
            .collect();
        let Some(category) = categories.choose(&mut rng).map(|c| c.to_string()) else {
            continue;
        };
        let grid = scene.occupancy.as_ref().expect("floorplans carry a grid");
        let targets = target_cells(&scene, &category)?;
        let goals = goal_cells(grid, &targets, params.detection_range_m);
        if goals.is_empty() {
            continue;
        }
        let field = DistanceField::from_sources(grid, &goals);
        let mut starts: Vec<_> = grid
            .free_cells()
            .filter(|c| {
                field.distance(*c).is_some_and(|d| {
                    d >= MIN_START_DISTANCE_M && (d <= NAV_DISTANCE_SPLIT_M) == near
                })
            })
            .collect();
        starts.shuffle(&mut rng);
        for cell in starts.into_iter().take(40) {
            let heading = rng.random_range(0..12) as f64 * 30f64.to_radians();
            let start = grid.center_pose(cell, heading);
            let view = geometry::visible_region(grid, &start, params.fov(), params.view_range_m);
            if targets.iter().any(|t| view.contains(t)) {
                continue;
            }
            let task = TaskSpec {
                kind: TaskKind::Nav,
                nav_target_category: Some(category.clone()),
                start: Some(WorldPose::new(start.x, start.y, heading)),
                instruction: nav_instruction(&category),
                goal_predicates: Vec::new(),
                level: target,
            };
            if classify_level_with(&scene, &task, params).ok() == Some(target) {
                return Ok(NavTask { scene, task });
            }
        }
    }
    Err(NavError::Generation(format!("no level {level} navigation episode after {MAX_ATTEMPTS} floorplans")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nav_tasks_hit_every_level() {
        let fp = FloorplanParams::default();
        let p = NavParams::default();
        for level in 1..=4 {
            let t = generate_nav_task(level, 11, &fp, &p).unwrap();
            assert_eq!(t.task.level.level, level);
            let f = crate::model::nav_features(&t.scene, &t.task, &p).unwrap();
            assert_eq!(f.level(), level);
            assert!(f.distance >= MIN_START_DISTANCE_M);
        }
    }
}
