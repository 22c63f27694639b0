//! Renders a floorplan and a tabletop scene and overlays a trajectory and a
//! point marker. Writes PNGs into the given directory.
//!
//! cargo run --example render_annotate -- [out_dir]

use std::path::PathBuf;

use groundbench::model::NormPoint;
use groundbench::nav::{generate_floorplan, FloorplanParams};
use groundbench::render::{annotate, render, AnnotationSpec, RenderConfig, Style, Viewport};
use groundbench::tabletop::generate_manip_task;

fn main() {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("groundbench-render"));
    std::fs::create_dir_all(&dir).unwrap();
    let config = RenderConfig::default();

    let floor = generate_floorplan("render-demo", &FloorplanParams::default(), 1);
    let img = render(&floor, Viewport::Full, &config);
    let path = [(0.1, 0.1), (0.5, 0.15), (0.55, 0.6), (0.9, 0.9)].map(|(x, y)| NormPoint::new(x, y).unwrap());
    let img = annotate(&img, &AnnotationSpec::trajectory(path.to_vec(), Style::default()).unwrap());
    let img = annotate(&img, &AnnotationSpec::point(path[3], Style { color: [20, 160, 40], width: 3 }));
    std::fs::write(dir.join("floorplan.png"), img.to_png()).unwrap();

    let table = generate_manip_task(2, 4).unwrap().scene;
    let img = render(&table, Viewport::Full, &config);
    std::fs::write(dir.join("tabletop.png"), img.to_png()).unwrap();

    // Rendering is a pure function of the scene.
    assert_eq!(render(&table, Viewport::Full, &config), img);
    println!("wrote {} and {}", dir.join("floorplan.png").display(), dir.join("tabletop.png").display());
}
