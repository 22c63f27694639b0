//! Shortest paths on 8-connected occupancy grids.
//!
//! Costs are kept as exact `(straight, diagonal)` step counts and compared
//! in closed form, so distances do not depend on summation order and two
//! searches that find equally short paths report bit-identical meters.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Cell, OccupancyGrid, WorldPose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("start cell is an obstacle")]
    StartBlocked,
    #[error("goal is unreachable")]
    Unreachable,
    #[error("pose lies outside the grid")]
    OutsideGrid,
}

/// Path cost as `straight + diagonal * sqrt(2)` cell steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct StepCount {
    pub straight: u32,
    pub diagonal: u32,
}

impl StepCount {
    pub const ZERO: StepCount = StepCount { straight: 0, diagonal: 0 };

    pub fn plus(self, diagonal: bool) -> Self {
        if diagonal {
            Self { diagonal: self.diagonal + 1, ..self }
        } else {
            Self { straight: self.straight + 1, ..self }
        }
    }

    pub fn meters(&self, resolution: f64) -> f64 {
        (self.straight as f64 + self.diagonal as f64 * std::f64::consts::SQRT_2) * resolution
    }

    pub fn total_steps(&self) -> u32 {
        self.straight + self.diagonal
    }
}

impl Ord for StepCount {
    fn cmp(&self, other: &Self) -> Ordering {
        // sign of (a - c) + (b - d) * sqrt(2)
        let p = self.straight as i64 - other.straight as i64;
        let q = other.diagonal as i64 - self.diagonal as i64;
        // compare p against q * sqrt(2)
        match (p.signum(), q.signum()) {
            (0, 0) => Ordering::Equal,
            (ps, qs) if ps >= 0 && qs <= 0 => Ordering::Greater,
            (ps, qs) if ps <= 0 && qs >= 0 => Ordering::Less,
            (1, 1) => (p * p).cmp(&(2 * q * q)),
            _ => (2 * q * q).cmp(&(p * p)),
        }
    }
}

impl PartialOrd for StepCount {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub distance: f64,
    pub steps: StepCount,
    /// Start to goal inclusive.
    pub waypoints: Vec<Cell>,
}

/// Whether the agent may move from `from` to the neighbouring `to`.
/// Diagonal moves may not cut an obstacle corner.
pub fn can_step(grid: &OccupancyGrid, from: Cell, to: Cell, diagonal: bool) -> bool {
    if grid.is_obstacle(to) {
        return false;
    }
    !diagonal || (grid.is_free(Cell::new(from.col, to.row)) && grid.is_free(Cell::new(to.col, from.row)))
}

/// Cheapest path from `start` to the nearest of `goals`.
pub fn shortest_path(grid: &OccupancyGrid, start: Cell, goals: &[Cell]) -> Result<PathResult, PathError> {
    if grid.is_obstacle(start) {
        return Err(PathError::StartBlocked);
    }
    let mut is_goal = vec![false; grid.len()];
    for g in goals.iter().filter(|g| grid.is_free(**g)) {
        is_goal[grid.index(*g)] = true;
    }
    let mut best: Vec<Option<StepCount>> = vec![None; grid.len()];
    let mut parent: Vec<usize> = vec![usize::MAX; grid.len()];
    let mut heap = BinaryHeap::new();
    let s = grid.index(start);
    best[s] = Some(StepCount::ZERO);
    heap.push(Reverse((StepCount::ZERO, s)));
    while let Some(Reverse((cost, i))) = heap.pop() {
        if best[i] != Some(cost) {
            continue;
        }
        if is_goal[i] {
            let mut waypoints = vec![grid.cell_at_index(i)];
            let mut cur = i;
            while parent[cur] != usize::MAX {
                cur = parent[cur];
                waypoints.push(grid.cell_at_index(cur));
            }
            waypoints.reverse();
            return Ok(PathResult { distance: cost.meters(grid.resolution()), steps: cost, waypoints });
        }
        let here = grid.cell_at_index(i);
        for (n, diag) in grid.neighbors8(here) {
            if !can_step(grid, here, n, diag) {
                continue;
            }
            let j = grid.index(n);
            let c = cost.plus(diag);
            if best[j].is_none_or(|b| c < b) {
                best[j] = Some(c);
                parent[j] = i;
                heap.push(Reverse((c, j)));
            }
        }
    }
    Err(PathError::Unreachable)
}

/// Length of the cheapest 8-connected path between the cells holding two poses.
pub fn traverse_distance(grid: &OccupancyGrid, start: &WorldPose, goal: &WorldPose) -> Result<PathResult, PathError> {
    let s = grid.cell_of_pose(start).ok_or(PathError::OutsideGrid)?;
    let g = grid.cell_of_pose(goal).ok_or(PathError::OutsideGrid)?;
    if grid.is_obstacle(s) {
        return Err(PathError::StartBlocked);
    }
    if grid.is_obstacle(g) {
        return Err(PathError::Unreachable);
    }
    shortest_path(grid, s, &[g])
}

/// Cost-to-go from every cell to the nearest source cell.
#[derive(Debug, Clone)]
pub struct DistanceField {
    width: usize,
    resolution: f64,
    costs: Vec<Option<StepCount>>,
}

impl DistanceField {
    /// Multi-source search. Moves are reversible on a static grid, so the
    /// cost stored at a cell equals the path cost from that cell to the
    /// nearest source.
    pub fn from_sources(grid: &OccupancyGrid, sources: &[Cell]) -> Self {
        let mut costs: Vec<Option<StepCount>> = vec![None; grid.len()];
        let mut heap = BinaryHeap::new();
        for s in sources.iter().filter(|s| grid.is_free(**s)) {
            let i = grid.index(*s);
            if costs[i].is_none() {
                costs[i] = Some(StepCount::ZERO);
                heap.push(Reverse((StepCount::ZERO, i)));
            }
        }
        while let Some(Reverse((cost, i))) = heap.pop() {
            if costs[i] != Some(cost) {
                continue;
            }
            let here = grid.cell_at_index(i);
            for (n, diag) in grid.neighbors8(here) {
                if !can_step(grid, here, n, diag) {
                    continue;
                }
                let j = grid.index(n);
                let c = cost.plus(diag);
                if costs[j].is_none_or(|b| c < b) {
                    costs[j] = Some(c);
                    heap.push(Reverse((c, j)));
                }
            }
        }
        Self { width: grid.width(), resolution: grid.resolution(), costs }
    }

    fn idx(&self, c: Cell) -> usize {
        c.row * self.width + c.col
    }

    pub fn steps(&self, c: Cell) -> Option<StepCount> {
        self.costs.get(self.idx(c)).copied().flatten()
    }

    /// Meters to the nearest source, `None` when unreachable.
    pub fn distance(&self, c: Cell) -> Option<f64> {
        self.steps(c).map(|s| s.meters(self.resolution))
    }

    /// Neighbour one step closer to a source along a shortest path.
    pub fn descend(&self, grid: &OccupancyGrid, c: Cell) -> Option<Cell> {
        let here = self.steps(c)?;
        if here == StepCount::ZERO {
            return None;
        }
        grid.neighbors8(c).find_map(|(n, diag)| {
            let cost = self.steps(n)?;
            (can_step(grid, c, n, diag) && cost.plus(diag) == here).then_some(n)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty(n: usize) -> OccupancyGrid {
        OccupancyGrid::new(0.1, [0.0, 0.0], n, n).unwrap()
    }

    #[test]
    fn straight_corridor() {
        let g = empty(10);
        let r = traverse_distance(&g, &WorldPose::at(0.0, 0.0), &WorldPose::at(0.0, 0.9)).unwrap();
        assert!((r.distance - 0.9).abs() < 1e-12);
        assert_eq!(r.waypoints.len(), 10);
    }

    #[test]
    fn pure_diagonal() {
        let g = empty(10);
        let r = traverse_distance(&g, &WorldPose::at(0.0, 0.0), &WorldPose::at(0.9, 0.9)).unwrap();
        assert!((r.distance - 9.0 * std::f64::consts::SQRT_2 * 0.1).abs() < 1e-12);
        assert!((r.distance - 1.2728).abs() < 1e-3);
    }

    #[test]
    fn blocked_and_unreachable() {
        let g = OccupancyGrid::from_rows(1.0, [0.0, 0.0], &["#..", "###", "..."]).unwrap();
        assert_eq!(traverse_distance(&g, &WorldPose::at(0.5, 0.5), &WorldPose::at(2.5, 2.5)), Err(PathError::StartBlocked));
        assert_eq!(traverse_distance(&g, &WorldPose::at(1.5, 0.5), &WorldPose::at(2.5, 2.5)), Err(PathError::Unreachable));
    }

    #[test]
    fn no_corner_cutting() {
        let g = OccupancyGrid::from_rows(1.0, [0.0, 0.0], &[".#", "#."]).unwrap();
        assert_eq!(shortest_path(&g, Cell::new(0, 0), &[Cell::new(1, 1)]), Err(PathError::Unreachable));
    }

    #[test]
    fn step_count_order_is_exact() {
        let a = StepCount { straight: 3, diagonal: 0 };
        let b = StepCount { straight: 0, diagonal: 2 }; // 2.828
        assert!(b < a);
        let c = StepCount { straight: 1, diagonal: 2 }; // 3.828
        assert!(c > a);
        let d = StepCount { straight: 7, diagonal: 0 };
        let e = StepCount { straight: 0, diagonal: 5 }; // 7.07
        assert!(d < e);
        assert_eq!(a.cmp(&a), Ordering::Equal);
    }

    #[test]
    fn field_matches_pointwise_search() {
        let g = OccupancyGrid::from_rows(
            0.5,
            [0.0, 0.0],
            &["......", ".####.", "....#.", "###.#.", "......"],
        )
        .unwrap();
        let goal = Cell::new(0, 2);
        let field = DistanceField::from_sources(&g, &[goal]);
        for c in g.free_cells() {
            let direct = shortest_path(&g, c, &[goal]).map(|r| r.steps).ok();
            assert_eq!(field.steps(c), direct, "cell {c:?}");
        }
        let mut c = Cell::new(5, 4);
        let mut hops = 0;
        while let Some(n) = field.descend(&g, c) {
            c = n;
            hops += 1;
        }
        assert_eq!(c, goal);
        assert!(hops > 0);
    }

    #[test]
    fn waypoint_costs_sum_to_distance() {
        let g = OccupancyGrid::from_rows(1.0, [0.0, 0.0], &[".....", ".##..", "...#.", "....."]).unwrap();
        let r = shortest_path(&g, Cell::new(0, 0), &[Cell::new(4, 3)]).unwrap();
        let sum: f64 = r
            .waypoints
            .windows(2)
            .map(|w| if w[0].col != w[1].col && w[0].row != w[1].row { std::f64::consts::SQRT_2 } else { 1.0 })
            .sum();
        assert!((sum - r.distance).abs() < 1e-9);
        assert!(r.waypoints.iter().all(|c| g.is_free(*c)));
    }
}
