//! Turns oracle decisions into rationale/action training samples. Uses the
//! offline template provider unless GROUNDBENCH_PROVIDER_URL is set, in
//! which case a chat-completions endpoint writes the rationales.
//!
//! cargo run --example cot_data -- [out_dir]

use std::path::PathBuf;

use groundbench::datagen::{
    generate_cot_set, manip_cot_requests, nav_cot_requests, write_cot_dataset, ChatCompletionProvider, CoTConfig,
    CoTMix, RationaleProvider, TaskFamily, TemplateProvider, ENV_PROVIDER_URL,
};
use groundbench::nav::{generate_nav_task, FloorplanParams, NavParams};
use groundbench::render::RenderConfig;
use groundbench::tabletop::{generate_manip_task, TabletopConfig};

fn main() {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("groundbench-cot"));
    let render = RenderConfig::default();
    let nav = NavParams::default();

    let mut nav_reqs = Vec::new();
    for seed in 0..3 {
        let task = generate_nav_task(2, seed, &FloorplanParams::default(), &nav).unwrap();
        nav_reqs.extend(nav_cot_requests(&task, &nav, &render, seed, 8).unwrap());
    }
    let mut manip_reqs = Vec::new();
    for seed in 0..4 {
        let task = generate_manip_task(2, seed).unwrap();
        manip_reqs.extend(manip_cot_requests(&task, &TabletopConfig::default(), &render, seed).unwrap());
    }
    println!("{} navigation and {} manipulation decisions", nav_reqs.len(), manip_reqs.len());

    let provider: Box<dyn RationaleProvider> = if std::env::var_os(ENV_PROVIDER_URL).is_some() {
        Box::new(ChatCompletionProvider::from_env().expect("provider configuration"))
    } else {
        Box::new(TemplateProvider)
    };
    let mix = CoTMix::new()
        .with(TaskFamily::Navigation, true, 3)
        .with(TaskFamily::Navigation, false, 3)
        .with(TaskFamily::Manipulation, true, manip_reqs.len().min(8) / 2)
        .with(TaskFamily::Manipulation, false, manip_reqs.len().min(8) / 2);
    let set = generate_cot_set(&nav_reqs, &manip_reqs, &mix, provider.as_ref(), &CoTConfig::default()).unwrap();
    if let Some(s) = set.samples.iter().find(|s| s.rationale.is_some()) {
        println!("example target:\n{}", s.response());
    }
    let manifest = write_cot_dataset(&dir, &set, &mix).unwrap();
    println!("wrote {} samples ({} rejected) to {}", manifest.total, manifest.rejected.len(), dir.display());
}
