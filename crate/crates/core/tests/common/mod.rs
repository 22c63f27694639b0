#![allow(dead_code)]

use std::path::PathBuf;

use groundbench::model::{Bounds, Cell, Footprint, ObjectInstance, OccupancyGrid, Scene, SceneKind, WorldPose};

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// 10 m floorplan with one couch and a wall strip along the bottom edge.
pub fn golden_floorplan() -> Scene {
    let mut scene = Scene::new("golden-floor", SceneKind::Floorplan, Bounds::square(10.0));
    let couch = ObjectInstance::new("couch_0", "couch", Footprint::rect(1.0, 0.6), WorldPose::at(0.6, 7.8)).fixed();
    let mut grid = OccupancyGrid::new(0.1, [0.0, 0.0], 100, 100).unwrap();
    for r in 0..100 {
        for c in 0..100 {
            let [x, y] = grid.center(Cell::new(c, r));
            if r >= 95 || couch.shape().contains([x, y], 0.0) {
                grid.set_obstacle(Cell::new(c, r), true);
            }
        }
    }
    scene.objects.push(couch);
    scene.occupancy = Some(grid);
    scene
}

/// 1 m table with a plate, a mug and a notebook; `with_bowl` adds a bowl
/// directly left of the notebook.
pub fn golden_table(with_bowl: bool) -> Scene {
    let mut scene = Scene::new("golden-table", SceneKind::Tabletop, Bounds::square(1.0));
    scene.objects.push(ObjectInstance::new("plate_0", "plate", Footprint::circle(0.08), WorldPose::at(0.17, 0.26)));
    scene.objects.push(ObjectInstance::new("mug_0", "mug", Footprint::circle(0.04), WorldPose::at(0.40, 0.15)));
    scene.objects.push(ObjectInstance::new("notebook_0", "notebook", Footprint::rect(0.15, 0.2), WorldPose::at(0.80, 0.55)));
    if with_bowl {
        scene.objects.push(ObjectInstance::new("bowl_0", "bowl", Footprint::circle(0.06), WorldPose::at(0.57, 0.55)));
    }
    scene.validate().unwrap();
    scene
}
