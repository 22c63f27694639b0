use std::collections::BTreeSet;
use std::f64::consts::{PI, TAU};

use crate::model::{Cell, OccupancyGrid, WorldPose};

/// Cells on the integer line from `a` to `b`, both ends included.
pub fn bresenham(a: Cell, b: Cell) -> Vec<Cell> {
    let (mut x, mut y) = (a.col as i64, a.row as i64);
    let (x1, y1) = (b.col as i64, b.row as i64);
    let dx = (x1 - x).abs();
    let dy = -(y1 - y).abs();
    let sx = if x < x1 { 1 } else { -1 };
    let sy = if y < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut out = Vec::with_capacity((dx - dy) as usize + 1);
    loop {
        out.push(Cell::new(x as usize, y as usize));
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    out
}

/// True when every cell strictly between `from` and `to` is free.
pub fn line_of_sight(grid: &OccupancyGrid, from: Cell, to: Cell) -> bool {
    let line = bresenham(from, to);
    if line.len() <= 2 {
        return true;
    }
    line[1..line.len() - 1].iter().all(|c| grid.is_free(*c))
}

/// Smallest signed difference `a - b` wrapped into `(-π, π]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > PI { d - TAU } else { d }
}

/// Whether a world point lies inside the view cone (ignoring occlusion).
pub fn in_cone(pose: &WorldPose, target: [f64; 2], fov: f64, range: f64) -> bool {
    let dx = target[0] - pose.x;
    let dy = target[1] - pose.y;
    let d = dx.hypot(dy);
    if d > range + 1e-9 {
        return false;
    }
    if fov >= TAU - 1e-12 || d < 1e-12 {
        return true;
    }
    angle_diff(dy.atan2(dx), pose.heading).abs() <= fov / 2.0 + 1e-9
}

/// Cells whose centers fall inside the view cone and whose line of sight
/// from the agent's cell crosses no obstacle. The first obstacle cell on a
/// ray is itself visible.
pub fn visible_region(grid: &OccupancyGrid, pose: &WorldPose, fov: f64, range: f64) -> BTreeSet<Cell> {
    let mut out = BTreeSet::new();
    let Some(origin) = grid.cell_of_pose(pose) else {
        return out;
    };
    let res = grid.resolution();
    let reach = (range / res).ceil() as i64 + 1;
    let (oc, or) = (origin.col as i64, origin.row as i64);
    for row in (or - reach).max(0)..=(or + reach).min(grid.height() as i64 - 1) {
        for col in (oc - reach).max(0)..=(oc + reach).min(grid.width() as i64 - 1) {
            let c = Cell::new(col as usize, row as usize);
            if c != origin && !in_cone(pose, grid.center(c), fov, range) {
                continue;
            }
            if line_of_sight(grid, origin, c) {
                out.insert(c);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bresenham_endpoints_and_connectivity() {
        let l = bresenham(Cell::new(0, 0), Cell::new(7, 3));
        assert_eq!(l.first(), Some(&Cell::new(0, 0)));
        assert_eq!(l.last(), Some(&Cell::new(7, 3)));
        for w in l.windows(2) {
            assert!((w[0].col as i64 - w[1].col as i64).abs() <= 1);
            assert!((w[0].row as i64 - w[1].row as i64).abs() <= 1);
        }
        assert_eq!(bresenham(Cell::new(2, 2), Cell::new(2, 2)), vec![Cell::new(2, 2)]);
    }

    #[test]
    fn open_grid_all_visible() {
        let g = OccupancyGrid::new(0.1, [0.0, 0.0], 12, 12).unwrap();
        let pose = WorldPose::at(0.55, 0.55);
        let vis = visible_region(&g, &pose, TAU, 2.0);
        assert_eq!(vis.len(), 144);
    }

    #[test]
    fn wall_occludes() {
        let mut g = OccupancyGrid::new(0.1, [0.0, 0.0], 20, 20).unwrap();
        for r in 0..20 {
            g.set_obstacle(Cell::new(10, r), true);
        }
        let vis = visible_region(&g, &WorldPose::at(0.35, 1.05), TAU, 10.0);
        assert!(vis.iter().all(|c| c.col <= 10));
        assert!(vis.contains(&Cell::new(10, 10)));
    }

    #[test]
    fn cone_limits_view() {
        let g = OccupancyGrid::new(0.1, [0.0, 0.0], 20, 20).unwrap();
        // facing +x from the middle
        let vis = visible_region(&g, &WorldPose::new(1.05, 1.05, 0.0), PI / 2.0, 0.5);
        assert!(vis.iter().all(|c| c.col >= 10));
        assert!(vis.contains(&Cell::new(14, 10)));
        assert!(!vis.contains(&Cell::new(16, 10)));
        assert!(!vis.contains(&Cell::new(10, 14)));
    }

    #[test]
    fn angle_wrap() {
        assert!((angle_diff(0.1, TAU - 0.1) - 0.2).abs() < 1e-12);
        assert!((angle_diff(TAU - 0.1, 0.1) + 0.2).abs() < 1e-12);
    }
}
