//! Drives an out-of-process planner over the line-delimited JSON protocol.
//! The example re-executes itself with `--serve` as the planner: it reads
//! one request per line on stdin and answers with the farthest visible free
//! cell, or a left turn when nothing is in view.
//!
//! cargo run --example external_planner

use std::io::{BufRead, Write};

use groundbench::harness::{
    decode_request, encode_response, run_suite, HarnessConfig, PlannerResponse, PlannerSpec, TaskManifest,
};
use groundbench::model::{format_point, TaskKind};
use groundbench::nav::{FloorplanParams, NavObservation, NavParams};

fn serve() {
    let stdin = std::io::stdin();
    let mut stdout = std::io::stdout();
    for line in stdin.lock().lines() {
        let req = decode_request(&line.unwrap()).expect("valid request");
        let obs: NavObservation = serde_json::from_value(req.meta).expect("navigation metadata");
        let far = obs.visible_navigable.iter().max_by(|a, b| obs.agent.distance(a).total_cmp(&obs.agent.distance(b)));
        let text = match far {
            Some(p) => format!("Thought: head for open space.\nAction: move to {}", format_point(p)),
            None => "Action: turn left".to_string(),
        };
        stdout.write_all(encode_response(&PlannerResponse::new(text)).as_bytes()).unwrap();
        stdout.flush().unwrap();
    }
}

fn main() {
    if std::env::args().nth(1).as_deref() == Some("--serve") {
        return serve();
    }
    let exe = std::env::current_exe().unwrap();
    let planner = PlannerSpec::Subprocess { command: exe.display().to_string(), args: vec!["--serve".into()] };
    let manifest = TaskManifest::generate(TaskKind::Nav, &[1, 2], 2, 3, &FloorplanParams::default(), &NavParams::default()).unwrap();
    let report = run_suite(&manifest, &planner, &HarnessConfig::default(), 1, 0);
    println!("{}", report.to_markdown());
}
