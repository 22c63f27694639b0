//! Object-goal navigation on procedurally generated floorplans.

mod env;
mod episode;
mod floorplan;

use thiserror::Error;

use crate::model::ModelError;

pub use env::{
    address_point, covered_cells, goal_cells, start_goal_distance, target_cells, BudgetMode, InvalidReason, NavAction,
    NavEnv, NavObservation, NavParams, NavStepOutcome, NavStepStatus, VisibleObject,
};
pub use episode::{generate_nav_task, NavTask, MIN_START_DISTANCE_M};
pub use floorplan::{generate_floorplan, FloorplanParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NavError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("scene is not navigable: {0}")]
    NotNavigable(String),
    #[error("no instance of {0} in the scene")]
    NoTarget(String),
    #[error("unreachable: {0}")]
    Unreachable(String),
    #[error("no {0} reachable from the agent")]
    NoTargetReachable(String),
    #[error("episode already terminated")]
    Terminated,
    #[error("generation failed: {0}")]
    Generation(String),
}
