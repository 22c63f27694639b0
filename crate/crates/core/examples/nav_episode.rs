//! Runs one object-goal navigation episode with the shortest-path oracle and
//! prints what the agent observes at each decision.
//!
//! cargo run --example nav_episode -- [level] [seed]

use std::sync::Arc;

use groundbench::nav::{generate_nav_task, FloorplanParams, NavEnv, NavParams};

fn main() {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<u64>().expect("numeric argument"));
    let level = args.next().unwrap_or(2) as u8;
    let seed = args.next().unwrap_or(5);
    let params = NavParams::default();
    let task = generate_nav_task(level, seed, &FloorplanParams::default(), &params).expect("task generation");
    println!("{}", task.task.instruction);

    let mut env = NavEnv::new(Arc::new(task.scene), &task.task, params).unwrap();
    while !env.is_terminated() {
        let obs = env.observe().unwrap();
        let seen: Vec<&str> = obs.visible_objects.iter().map(|o| o.category.as_str()).collect();
        let action = env.oracle_action().unwrap();
        let out = env.step(&action).unwrap();
        println!(
            "  at ({:.2}, {:.2}) heading {:>4.0}, {:>3} free cells in view, sees {:?}; {:?} -> {} steps used",
            obs.agent.x(),
            obs.agent.y(),
            obs.heading_deg,
            obs.visible_navigable.len(),
            seen,
            action,
            out.steps_used
        );
    }
    println!("success {} after {} decisions, {} steps", env.success(), env.decisions(), env.steps_used());
}
