//! Builds a floorplan, queries paths and visibility on its occupancy grid.
//!
//! cargo run --example scene_geometry -- [seed]

use groundbench::geometry::{traverse_distance, visible_region, DistanceField};
use groundbench::model::WorldPose;
use groundbench::nav::{generate_floorplan, FloorplanParams, NavParams};

fn main() {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let scene = generate_floorplan("demo", &FloorplanParams::default(), seed);
    let grid = scene.occupancy.as_ref().expect("floorplans carry a grid");
    println!("scene {} with {} objects on a {}x{} grid", scene.id, scene.objects.len(), grid.width(), grid.height());
    for (cat, n) in scene.category_counts() {
        println!("  {cat:<16} x{n}");
    }

    let free: Vec<_> = grid.free_cells().collect();
    let (a, b) = (free[0], free[free.len() - 1]);
    let [ax, ay] = grid.center(a);
    let [bx, by] = grid.center(b);
    let path = traverse_distance(grid, &WorldPose::at(ax, ay), &WorldPose::at(bx, by)).expect("floorplans are connected");
    println!(
        "corner to corner: {:.2} m over {} cells ({} straight, {} diagonal steps)",
        path.distance,
        path.waypoints.len(),
        path.steps.straight,
        path.steps.diagonal
    );

    // One search from many sources gives the distance to the nearest one.
    let field = DistanceField::from_sources(grid, &[a, b]);
    let mid = free[free.len() / 2];
    println!("cell {mid:?} is {:.2} m from the nearer endpoint", field.distance(mid).unwrap());

    let params = NavParams::default();
    let pose = WorldPose { heading: 0.0, ..WorldPose::at(ax, ay) };
    let seen = visible_region(grid, &pose, params.fov(), params.view_range_m);
    println!("{} cells visible from {a:?} facing +x", seen.len());
}
