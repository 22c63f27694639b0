use std::sync::Arc;

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::HarnessConfig;
use super::metrics::{distance_gain_cells, DgTerms};
use super::parse::{parse_response, ParseFailure};
use super::planner::{EnvView, Planner};
use super::protocol::{PlannerRequest, PROTOCOL_VERSION};
use super::suite::ManifestEntry;
use crate::model::{Action, Cell, NormPoint, TaskKind};
use crate::nav::{InvalidReason, NavAction, NavEnv};
use crate::render::{render, render_nav_observation, Viewport};
use crate::rng::{derive_seed, seeded};
use crate::tabletop::{ManipAction, TabletopEnv};

/// Per-decision log line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub step: u32,
    pub raw_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<Action>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parse_error: Option<ParseFailure>,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dg: Option<DgTerms>,
    /// Why DG is missing for this step, if it is.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dg_penalty: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub episode_id: String,
    pub kind: TaskKind,
    pub level: u8,
    pub seed: u64,
    pub success: bool,
    pub collision: bool,
    /// Primitive steps (nav) or moves (manip) consumed.
    pub steps: u32,
    pub decisions: u32,
    pub mean_dg: Option<f64>,
    pub dg_steps: u32,
    pub dg_penalties: u32,
    pub parse_failures: u32,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub row: EpisodeRow,
    pub steps: Vec<StepLog>,
    /// Agent positions (nav) or nothing (manip).
    pub trajectory: Vec<NormPoint>,
}

fn empty_row(entry: &ManifestEntry, seed: u64) -> EpisodeRow {
    EpisodeRow {
        episode_id: entry.episode_id.clone(),
        kind: entry.task.kind,
        level: entry.task.level.level,
        seed,
        success: false,
        collision: false,
        steps: 0,
        decisions: 0,
        mean_dg: None,
        dg_steps: 0,
        dg_penalties: 0,
        parse_failures: 0,
        failure: None,
    }
}

fn base_request(entry: &ManifestEntry, config: &HarnessConfig, step: u32) -> PlannerRequest {
    PlannerRequest {
        protocol_version: PROTOCOL_VERSION,
        episode_id: entry.episode_id.clone(),
        step_index: step,
        task_kind: entry.task.kind,
        task_instruction: entry.task.instruction.clone(),
        target_category: entry.task.nav_target_category.clone(),
        image_png_base64: String::new(),
        meta: serde_json::Value::Null,
        exemplar_prefix: config.exemplar_prefix.clone(),
    }
}

/// Runs one episode to termination. Planner failures end the episode and
/// are reported in the row; they never panic.
pub fn run_episode(entry: &ManifestEntry, planner: &mut dyn Planner, config: &HarnessConfig, seed: u64) -> EpisodeResult {
    match entry.task.kind {
        TaskKind::Nav => run_nav_episode(entry, planner, config, seed),
        TaskKind::Manip => run_manip_episode(entry, planner, config, seed),
    }
}

fn run_nav_episode(entry: &ManifestEntry, planner: &mut dyn Planner, config: &HarnessConfig, seed: u64) -> EpisodeResult {
    let mut row = empty_row(entry, seed);
    let mut env = match NavEnv::new(Arc::new(entry.scene.clone()), &entry.task, config.nav) {
        Ok(env) => env,
        Err(e) => {
            row.failure = Some(format!("setup: {e}"));
            return EpisodeResult { row, steps: Vec::new(), trajectory: Vec::new() };
        }
    };
    let mut logs = Vec::new();
    let mut dg_sum = 0.0;
    let mut step = 0u32;
    while !env.is_terminated() {
        let mut req = base_request(entry, config, step);
        if planner.needs_image() {
            req.image_png_base64 = render_nav_observation(&env, &config.render).to_png_base64();
        }
        req.meta = env.observe().ok().and_then(|o| serde_json::to_value(o).ok()).unwrap_or_default();

        let visible: Vec<Cell> = env.visible_navigable();
        let mut rng = seeded(derive_seed(seed, step as u64));
        let candidates: Vec<Cell> = if visible.is_empty() {
            Vec::new()
        } else {
            (0..config.dg_candidates).map(|_| visible[rng.random_range(0..visible.len())]).collect()
        };

        let response = match planner.respond(&req, EnvView::Nav(&env)) {
            Ok(r) => r,
            Err(e) => {
                row.failure = Some(e.to_string());
                break;
            }
        };
        let mut log = StepLog {
            step,
            raw_text: response.raw_text.clone(),
            action: None,
            parse_error: None,
            status: String::new(),
            dg: None,
            dg_penalty: None,
        };
        let parsed = parse_response(&response.raw_text, TaskKind::Nav);
        let (action_cell, nav_action) = match &parsed {
            Ok(p) => match p.action {
                Action::Subgoal { point } => (env.cell_of_point(&point), Some(NavAction::Subgoal { point })),
                Action::Rotate { direction } => (Some(env.agent_cell()), Some(NavAction::Rotate { direction })),
                _ => (None, None),
            },
            Err(_) => (None, None),
        };
        match action_cell {
            Some(c) => match distance_gain_cells(env.goal_field(), c, &candidates) {
                Ok(terms) => {
                    dg_sum += terms.dg;
                    row.dg_steps += 1;
                    log.dg = Some(terms);
                }
                Err(e) => {
                    row.dg_penalties += 1;
                    log.dg_penalty = Some(e.to_string());
                }
            },
            None => {
                row.dg_penalties += 1;
                log.dg_penalty = Some("no action".into());
            }
        }
        let outcome = match (nav_action, &parsed) {
            (Some(a), _) => {
                log.action = parsed.as_ref().ok().map(|p| p.action);
                env.step(&a)
            }
            (None, Err(e)) => {
                row.parse_failures += 1;
                log.parse_error = Some(e.clone());
                env.step_invalid(InvalidReason::Unparseable)
            }
            (None, Ok(p)) => {
                row.parse_failures += 1;
                log.action = Some(p.action);
                env.step_invalid(InvalidReason::Unparseable)
            }
        };
        match outcome {
            Ok(o) => log.status = serde_json::to_value(o.status).ok().and_then(|v| v["status"].as_str().map(String::from)).unwrap_or_default(),
            Err(e) => {
                row.failure = Some(e.to_string());
                logs.push(log);
                break;
            }
        }
        logs.push(log);
        step += 1;
    }
    row.success = env.success();
    row.steps = env.steps_used();
    row.decisions = env.decisions();
    row.mean_dg = (row.dg_steps > 0).then(|| dg_sum / row.dg_steps as f64);
    let cam = env.scene().camera();
    let trajectory = env.trajectory().iter().filter_map(|p| cam.to_norm(p).ok()).collect();
    EpisodeResult { row, steps: logs, trajectory }
}

fn run_manip_episode(entry: &ManifestEntry, planner: &mut dyn Planner, config: &HarnessConfig, seed: u64) -> EpisodeResult {
    let mut row = empty_row(entry, seed);
    let goal = &entry.task.goal_predicates;
    let mut env = match TabletopEnv::new(entry.scene.clone(), config.tabletop) {
        Ok(env) => env,
        Err(e) => {
            row.failure = Some(format!("setup: {e}"));
            return EpisodeResult { row, steps: Vec::new(), trajectory: Vec::new() };
        }
    };
    let mut logs = Vec::new();
    let mut step = 0u32;
    while !env.is_terminated() {
        let mut req = base_request(entry, config, step);
        if planner.needs_image() {
            req.image_png_base64 = render(env.scene(), Viewport::Full, &config.render).to_png_base64();
        }
        req.meta = json!({ "moves_used": env.moves_used(), "max_moves": env.max_moves() });
        let response = match planner.respond(&req, EnvView::Manip { env: &env, goal }) {
            Ok(r) => r,
            Err(e) => {
                row.failure = Some(e.to_string());
                break;
            }
        };
        let mut log = StepLog {
            step,
            raw_text: response.raw_text.clone(),
            action: None,
            parse_error: None,
            status: String::new(),
            dg: None,
            dg_penalty: None,
        };
        let action = match parse_response(&response.raw_text, TaskKind::Manip) {
            Ok(p) => {
                log.action = Some(p.action);
                ManipAction::try_from(p.action).ok()
            }
            Err(e) => {
                log.parse_error = Some(e);
                None
            }
        };
        let outcome = match action {
            Some(a) => env.step(&a),
            None => {
                row.parse_failures += 1;
                env.step_noop()
            }
        };
        match outcome {
            Ok(o) => {
                log.status = serde_json::to_value(o.status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
            }
            Err(e) => {
                row.failure = Some(e.to_string());
                logs.push(log);
                break;
            }
        }
        logs.push(log);
        step += 1;
    }
    row.success = row.failure.is_none() && env.succeeded(goal).unwrap_or(false);
    row.collision = env.collided();
    row.steps = env.moves_used() as u32;
    row.decisions = step;
    EpisodeResult { row, steps: logs, trajectory: Vec::new() }
}
