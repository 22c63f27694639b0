//! Draws coordinate alignment question/answer pairs from generated scenes
//! and writes them as a JSONL dataset with images and a manifest.
//!
//! cargo run --example alignment_data -- [out_dir] [total]

use std::path::PathBuf;

use groundbench::datagen::{generate_alignment_set, self_consistent, write_alignment_dataset, AlignmentMix};
use groundbench::nav::{generate_floorplan, FloorplanParams};
use groundbench::tabletop::generate_manip_task;

fn main() {
    let mut args = std::env::args().skip(1);
    let dir = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("groundbench-align"));
    let total = args.next().and_then(|s| s.parse().ok()).unwrap_or(64);

    let mut scenes: Vec<_> = (0..4).map(|i| generate_floorplan(&format!("floor-{i}"), &FloorplanParams::default(), i)).collect();
    scenes.extend((0..4).map(|i| generate_manip_task(1 + i as u8, 100 + i).unwrap().scene));

    let mix = AlignmentMix::reference_proportions(total);
    let set = generate_alignment_set(&scenes, &mix, 9).unwrap();
    for s in set.samples.iter().step_by(set.samples.len().div_ceil(4).max(1)) {
        println!("[{} / {}]\n  Q: {}\n  A: {}", s.category.as_str(), s.direction.as_str(), s.prompt, s.response);
    }
    let ok = set
        .samples
        .iter()
        .filter(|s| self_consistent(scenes.iter().find(|sc| sc.id == s.provenance.scene_id).unwrap(), s))
        .count();
    println!("{ok}/{} samples re-derive from their scene", set.samples.len());

    let manifest = write_alignment_dataset(&dir, &scenes, &set, &mix, &Default::default()).unwrap();
    println!("wrote {} samples to {}: {:?}", manifest.total, dir.display(), manifest.counts);
}
