//! Generates a tabletop rearrangement task, solves it with the sampling
//! oracle and compares against the greedy one-move-per-predicate baseline.
//!
//! cargo run --example tabletop_oracle -- [level] [seed]

use groundbench::model::predicate_sentence;
use groundbench::tabletop::{generate_manip_task, oracle_plan, GreedyPlacer, ManipAction, TabletopConfig, TabletopEnv};

fn main() {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<u64>().expect("numeric argument"));
    let level = args.next().unwrap_or(3) as u8;
    let seed = args.next().unwrap_or(11);
    let task = generate_manip_task(level, seed).expect("task generation");
    println!("{}", task.task.instruction);
    for p in &task.task.goal_predicates {
        println!("  goal: {}", predicate_sentence(&task.scene, p).unwrap());
    }

    let config = TabletopConfig::default();
    let plan = oracle_plan(&task.scene, &task.task.goal_predicates, &config).expect("oracle plan");
    let mut env = TabletopEnv::new(task.scene.clone(), config).unwrap();
    for m in &plan {
        let action = ManipAction::from(*m);
        let out = env.step(&action).unwrap();
        println!("  oracle {action:?} -> {:?}", out.status);
    }
    env.step(&ManipAction::Done).unwrap();
    println!(
        "oracle: {} moves, success {}, collision {}",
        plan.len(),
        env.succeeded(&task.task.goal_predicates).unwrap(),
        env.collided()
    );

    let mut env = TabletopEnv::new(task.scene.clone(), config).unwrap();
    let mut greedy = GreedyPlacer::new();
    while !env.is_terminated() {
        let action = greedy.next_action(env.scene(), &task.task.goal_predicates);
        env.step(&action).unwrap();
    }
    println!(
        "greedy: {} moves, success {}, collision {}",
        env.moves_used(),
        env.succeeded(&task.task.goal_predicates).unwrap(),
        env.collided()
    );
}
