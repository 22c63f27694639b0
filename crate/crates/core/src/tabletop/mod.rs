//! Tabletop rearrangement: the pick-and-place environment, a sampling
//! oracle, a fixed-offset baseline and a level-targeted task generator.

mod baseline;
mod env;
mod generate;
mod oracle;

use thiserror::Error;

use crate::model::ModelError;

pub use baseline::{greedy_action, GreedyPlacer};
pub use env::{
    ManipAction, PlacementVerdict, StepOutcome, StepRecord, StepStatus, TabletopConfig, TabletopEnv, PICK_TOLERANCE_M,
};
pub use generate::{
    catalog_item, generate_manip_task, CatalogItem, CatalogShape, ManipTask, StackRole, CATALOG, NEAR_THRESHOLD_M,
    REGION_THRESHOLD_M, TABLE_SIDE_M,
};
pub use oracle::{oracle_plan, oracle_solve, pick_point_for, scene_oracle_seed, verify_plan, MAX_SAMPLES_PER_OBJECT};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TabletopError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("episode already terminated")]
    Terminated,
    #[error("action not valid for a tabletop episode: {0}")]
    UnsupportedAction(String),
    #[error("oracle failed: {0}")]
    OracleFailure(String),
}
