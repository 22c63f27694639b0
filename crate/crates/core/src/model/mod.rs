//! Domain types shared by the simulators, generators and the harness.
//!
//! Image coordinates put the origin at the top-left corner with `x` growing
//! rightward and `y` growing downward. World coordinates use the same axis
//! directions in meters, so the top-down camera is a pure scale-and-offset.

mod grid;
mod level;
mod point;
mod scene;
mod task;

use thiserror::Error;

pub use grid::{Cell, OccupancyGrid};
pub use level::{
    classify_level, classify_level_with, nav_features, DifficultyLevel, ManipFeatures, NavFeatures,
    NAV_DISTANCE_SPLIT_M, NAV_GOAL_COUNT_SPLIT,
};
pub(crate) use point::lattice_floor;
pub use point::{find_points, format_point, parse_point, round_half_up_2, NormPoint, PointError, PointMatch};
pub use scene::{
    display_category, normalize_heading, Bounds, Camera, Footprint, ObjectId, ObjectInstance, Scene, SceneKind,
    WorldPose, SCENE_SCHEMA_VERSION,
};
pub use task::{
    all_hold, manip_instruction, nav_instruction, predicate_holds, predicate_sentence, refer_to, Action,
    LayoutPredicate, MoveAction, Reference, Region, Relation, RotateDir, TaskKind, TaskSpec,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("world point ({x}, {y}) lies outside the scene bounds")]
    OutOfBounds { x: f64, y: f64 },
    #[error("unknown reference {0}")]
    UnknownReference(String),
    #[error("task matches no difficulty level: {0}")]
    Unclassifiable(String),
    #[error("invalid model value: {0}")]
    Invalid(String),
}
