use std::fmt;

use serde::{Deserialize, Serialize};

use super::scene::Scene;
use super::task::{TaskKind, TaskSpec};
use super::ModelError;
use crate::nav::{self, NavParams};

/// Goal distance separating near (levels 1-2) from far (3-4) navigation tasks.
pub const NAV_DISTANCE_SPLIT_M: f64 = 4.5;
/// Goal counts above this are "many goals" (levels 1 and 3).
pub const NAV_GOAL_COUNT_SPLIT: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DifficultyLevel {
    pub kind: TaskKind,
    pub level: u8,
}

impl DifficultyLevel {
    pub fn new(kind: TaskKind, level: u8) -> Result<Self, ModelError> {
        if (1..=4).contains(&level) {
            Ok(Self { kind, level })
        } else {
            Err(ModelError::Invalid(format!("difficulty level must be 1-4, got {level}")))
        }
    }
}

impl fmt::Display for DifficultyLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} L{}", self.kind, self.level)
    }
}

/// The three scene features that decide a manipulation level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ManipFeatures {
    pub unique: bool,
    pub stacked: bool,
    pub objects: usize,
}

impl ManipFeatures {
    pub fn of(scene: &Scene) -> Self {
        Self {
            unique: scene.category_counts().values().all(|&n| n == 1),
            stacked: scene.objects.iter().any(|o| o.stacked_on.is_some()),
            objects: scene.objects.len(),
        }
    }

    pub fn level(&self) -> Option<u8> {
        match (self.unique, self.stacked, self.objects) {
            (true, false, n) if n <= 3 => Some(1),
            (true, true, 4..=5) => Some(2),
            (false, true, 6..=8) => Some(3),
            (false, true, n) if n >= 9 => Some(4),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NavFeatures {
    pub goals: usize,
    /// Traverse distance from the start to the nearest goal, meters.
    pub distance: f64,
}

impl NavFeatures {
    pub fn level(&self) -> u8 {
        let many = self.goals > NAV_GOAL_COUNT_SPLIT;
        let near = self.distance <= NAV_DISTANCE_SPLIT_M;
        match (many, near) {
            (true, true) => 1,
            (false, true) => 2,
            (true, false) => 3,
            (false, false) => 4,
        }
    }
}

pub fn classify_level(scene: &Scene, task: &TaskSpec) -> Result<DifficultyLevel, ModelError> {
    classify_level_with(scene, task, &NavParams::default())
}

pub fn classify_level_with(scene: &Scene, task: &TaskSpec, params: &NavParams) -> Result<DifficultyLevel, ModelError> {
    match task.kind {
        TaskKind::Manip => {
            let f = ManipFeatures::of(scene);
            let level = f.level().ok_or_else(|| {
                ModelError::Unclassifiable(format!(
                    "unique={} stacked={} objects={} matches no manipulation level",
                    f.unique, f.stacked, f.objects
                ))
            })?;
            DifficultyLevel::new(TaskKind::Manip, level)
        }
        TaskKind::Nav => {
            let f = nav_features(scene, task, params)?;
            DifficultyLevel::new(TaskKind::Nav, f.level())
        }
    }
}

pub fn nav_features(scene: &Scene, task: &TaskSpec, params: &NavParams) -> Result<NavFeatures, ModelError> {
    let category = task
        .nav_target_category
        .as_deref()
        .ok_or_else(|| ModelError::Invalid("navigation task without target category".into()))?;
    let start = task
        .start
        .ok_or_else(|| ModelError::Invalid("navigation task without start pose".into()))?;
    let goals = scene.instances_of(category).count();
    if goals == 0 {
        return Err(ModelError::Invalid(format!("no {category} in scene {}", scene.id)));
    }
    let distance = nav::start_goal_distance(scene, category, &start, params)
        .map_err(|e| ModelError::Unclassifiable(e.to_string()))?;
    Ok(NavFeatures { goals, distance })
}
