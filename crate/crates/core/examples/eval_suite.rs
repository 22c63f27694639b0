//! Evaluates the built-in planners on small navigation and manipulation
//! manifests and prints the report tables.
//!
//! cargo run --release --example eval_suite -- [per_level]

use groundbench::harness::{run_suite, HarnessConfig, PlannerSpec, TaskManifest};
use groundbench::model::TaskKind;
use groundbench::nav::{FloorplanParams, NavParams};

fn main() {
    let per_level = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let config = HarnessConfig::default();
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);

    let nav = TaskManifest::generate(TaskKind::Nav, &[1, 2, 3, 4], per_level, 1, &FloorplanParams::default(), &NavParams::default())
        .unwrap();
    for planner in [PlannerSpec::Oracle, PlannerSpec::Random] {
        println!("{}", run_suite(&nav, &planner, &config, threads, 0).to_markdown());
    }

    let manip = TaskManifest::generate(TaskKind::Manip, &[1, 2, 3, 4], per_level, 1, &FloorplanParams::default(), &NavParams::default())
        .unwrap();
    for planner in [PlannerSpec::Oracle, PlannerSpec::Greedy, PlannerSpec::Random] {
        println!("{}", run_suite(&manip, &planner, &config, threads, 0).to_markdown());
    }
}
