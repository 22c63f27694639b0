//! Collision tests, grid shortest paths, visibility and sampling.

mod path;
mod sampling;
mod shape;
mod visibility;

use thiserror::Error;

pub use path::{can_step, shortest_path, traverse_distance, DistanceField, PathError, PathResult, StepCount};
pub use sampling::{sample_cells, sample_navigable};
pub use shape::{
    convex_hull, footprints_overlap, point_segment_distance, polygon_area, separation, shape_within_bounds,
    shapes_overlap, validate_footprint, WorldShape, TOUCH_TOLERANCE,
};
pub use visibility::{angle_diff, bresenham, in_cone, line_of_sight, visible_region};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("degenerate shape: {0}")]
    DegenerateShape(String),
    #[error("polygon is not convex")]
    NonConvex,
    #[error("region has no free cell")]
    EmptyRegion,
}
