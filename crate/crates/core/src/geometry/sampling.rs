use std::collections::BTreeSet;

use rand::seq::index;
use rand::Rng;

use super::GeometryError;
use crate::model::{Cell, OccupancyGrid, WorldPose};
use crate::rng::seeded;

/// Draws `n` free cells of `region` uniformly: without replacement when the
/// region has at least `n` free cells, with replacement otherwise.
pub fn sample_cells(
    grid: &OccupancyGrid,
    region: &BTreeSet<Cell>,
    n: usize,
    seed: u64,
) -> Result<Vec<Cell>, GeometryError> {
    let free: Vec<Cell> = region.iter().copied().filter(|c| grid.is_free(*c)).collect();
    if free.is_empty() {
        return Err(GeometryError::EmptyRegion);
    }
    let mut rng = seeded(seed);
    if free.len() >= n {
        Ok(index::sample(&mut rng, free.len(), n).into_iter().map(|i| free[i]).collect())
    } else {
        Ok((0..n).map(|_| free[rng.random_range(0..free.len())]).collect())
    }
}

/// Cell-center poses of `sample_cells`.
pub fn sample_navigable(
    grid: &OccupancyGrid,
    region: &BTreeSet<Cell>,
    n: usize,
    seed: u64,
) -> Result<Vec<WorldPose>, GeometryError> {
    Ok(sample_cells(grid, region, n, seed)?
        .into_iter()
        .map(|c| grid.center_pose(c, 0.0))
        .collect())
}
