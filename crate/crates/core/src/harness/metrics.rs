use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::DistanceField;
use crate::model::{Cell, OccupancyGrid, WorldPose};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DgError {
    #[error("no candidate can reach the goal")]
    NoReachableCandidate,
    #[error("the action cannot reach the goal")]
    ActionUnreachable,
}

/// Inputs and result of one distance-gain evaluation, kept so the value
/// can be recomputed from the log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgTerms {
    pub action_distance: f64,
    /// Distances of the reachable candidates, in sampling order.
    pub candidate_distances: Vec<f64>,
    pub dg: f64,
}

/// `mean(candidates) - own`, summed left to right.
pub fn dg_from_distances(action_distance: f64, candidate_distances: &[f64]) -> f64 {
    let sum: f64 = candidate_distances.iter().sum();
    -action_distance + sum / candidate_distances.len() as f64
}

/// Distance gain from a precomputed goal distance field.
pub fn distance_gain_cells(field: &DistanceField, action: Cell, candidates: &[Cell]) -> Result<DgTerms, DgError> {
    let candidate_distances: Vec<f64> = candidates.iter().filter_map(|c| field.distance(*c)).collect();
    if candidate_distances.is_empty() {
        return Err(DgError::NoReachableCandidate);
    }
    let action_distance = field.distance(action).ok_or(DgError::ActionUnreachable)?;
    let dg = dg_from_distances(action_distance, &candidate_distances);
    Ok(DgTerms { action_distance, candidate_distances, dg })
}

/// Negative traverse distance from `action` to the nearest goal cell, plus
/// the mean of the same distance over the reachable candidates.
pub fn distance_gain(
    grid: &OccupancyGrid,
    action: &WorldPose,
    candidates: &[WorldPose],
    goals: &[Cell],
) -> Result<DgTerms, DgError> {
    let field = DistanceField::from_sources(grid, goals);
    let cells: Vec<Cell> = candidates.iter().filter_map(|p| grid.cell_of_pose(p)).collect();
    let action = grid.cell_of_pose(action).ok_or(DgError::ActionUnreachable)?;
    distance_gain_cells(&field, action, &cells)
}
