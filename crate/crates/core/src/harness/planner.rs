use std::collections::VecDeque;
use std::time::Duration;

use rand::seq::IndexedRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::external::{HttpPlanner, SubprocessPlanner};
use super::protocol::{PlannerRequest, PlannerResponse, ProtocolError};
use crate::datagen::templates as t;
use crate::model::{LayoutPredicate, MoveAction, NormPoint, RotateDir};
use crate::nav::{NavAction, NavEnv};
use crate::rng::{seeded, Rng};
use crate::tabletop::{oracle_plan, pick_point_for, GreedyPlacer, ManipAction, TabletopEnv};

/// Privileged access to the running episode. Only built-in planners look
/// at it; external planners see the request alone.
#[derive(Clone, Copy)]
pub enum EnvView<'a> {
    Nav(&'a NavEnv),
    Manip { env: &'a TabletopEnv, goal: &'a [LayoutPredicate] },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlannerError {
    #[error("planner timed out after {0:?}")]
    Timeout(Duration),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("planner i/o: {0}")]
    Io(String),
    #[error("planner does not support this task: {0}")]
    Unsupported(String),
}

pub trait Planner: Send {
    /// Whether requests must carry the rendered observation.
    fn needs_image(&self) -> bool {
        false
    }

    fn respond(&mut self, request: &PlannerRequest, view: EnvView<'_>) -> Result<PlannerResponse, PlannerError>;
}

/// Planner selection as it appears in configs and on the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PlannerSpec {
    Oracle,
    Random,
    Greedy,
    /// Answers with the given texts in order, wrapping around.
    Replay { responses: Vec<String> },
    Subprocess {
        command: String,
        #[serde(default)]
        args: Vec<String>,
    },
    Http { url: String },
}

impl PlannerSpec {
    pub fn name(&self) -> String {
        match self {
            PlannerSpec::Oracle => "oracle".into(),
            PlannerSpec::Random => "random".into(),
            PlannerSpec::Greedy => "greedy".into(),
            PlannerSpec::Replay { .. } => "replay".into(),
            PlannerSpec::Subprocess { command, .. } => format!("subprocess:{command}"),
            PlannerSpec::Http { url } => format!("http:{url}"),
        }
    }

    /// Parses `oracle`, `random`, `greedy`, `http:URL` or `cmd:PROGRAM [ARGS..]`.
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "oracle" => Some(PlannerSpec::Oracle),
            "random" => Some(PlannerSpec::Random),
            "greedy" => Some(PlannerSpec::Greedy),
            _ => {
                if let Some(url) = s.strip_prefix("http:").filter(|u| u.starts_with("//")) {
                    return Some(PlannerSpec::Http { url: format!("http:{url}") });
                }
                if s.starts_with("https://") {
                    return Some(PlannerSpec::Http { url: s.to_string() });
                }
                let cmd = s.strip_prefix("cmd:")?;
                let mut parts = cmd.split_whitespace();
                let command = parts.next()?.to_string();
                Some(PlannerSpec::Subprocess { command, args: parts.map(str::to_string).collect() })
            }
        }
    }

    pub fn create(&self, seed: u64, timeout: Duration) -> Result<Box<dyn Planner>, PlannerError> {
        Ok(match self {
            PlannerSpec::Oracle => Box::new(OraclePlanner::default()),
            PlannerSpec::Random => Box::new(RandomPlanner::new(seed)),
            PlannerSpec::Greedy => Box::new(GreedyPlanner::default()),
            PlannerSpec::Replay { responses } => Box::new(ReplayPlanner::new(responses.clone())),
            PlannerSpec::Subprocess { command, args } => Box::new(SubprocessPlanner::spawn(command, args, timeout)?),
            PlannerSpec::Http { url } => Box::new(HttpPlanner::new(url, timeout)),
        })
    }
}

fn nav_text(env: &NavEnv, action: &NavAction) -> String {
    match action {
        NavAction::Subgoal { point } => t::nav_subgoal_text(point, env.target_category()),
        NavAction::Rotate { direction } => t::nav_rotate_text(*direction == RotateDir::Left),
    }
}

fn manip_text(env: &TabletopEnv, action: &ManipAction) -> String {
    match action {
        ManipAction::Done => t::MANIP_DONE_TEXT.to_string(),
        ManipAction::Move { pick, place } => {
            let category = env
                .resolve_pick(pick)
                .and_then(|id| env.scene().object(&id).map(|o| o.category.clone()))
                .unwrap_or_else(|| "object".into());
            t::manip_move_text(&category, pick, place)
        }
    }
}

/// Full-knowledge planner: the navigation oracle's greedy decision, or the
/// certified tabletop plan followed by `Done`.
#[derive(Debug, Default)]
pub struct OraclePlanner {
    plan: Option<VecDeque<MoveAction>>,
}

impl Planner for OraclePlanner {
    fn respond(&mut self, _req: &PlannerRequest, view: EnvView<'_>) -> Result<PlannerResponse, PlannerError> {
        let text = match view {
            EnvView::Nav(env) => {
                let action = env.oracle_action().map_err(|e| PlannerError::Unsupported(e.to_string()))?;
                nav_text(env, &action)
            }
            EnvView::Manip { env, goal } => {
                let plan = self.plan.get_or_insert_with(|| match oracle_plan(env.scene(), goal, env.config()) {
                    Ok(p) => p.into(),
                    Err(e) => {
                        log::warn!("oracle found no plan: {e}");
                        VecDeque::new()
                    }
                });
                let action = plan.pop_front().map(ManipAction::from).unwrap_or(ManipAction::Done);
                manip_text(env, &action)
            }
        };
        Ok(PlannerResponse::new(text))
    }
}

/// Uniform over visible navigable cells (a random turn when none is in
/// view), or a random object moved to a random lattice point.
#[derive(Debug)]
pub struct RandomPlanner {
    rng: Rng,
}

impl RandomPlanner {
    pub fn new(seed: u64) -> Self {
        Self { rng: seeded(seed) }
    }
}

fn random_lattice(rng: &mut Rng) -> NormPoint {
    NormPoint::new(rng.random_range(0..=100) as f64 / 100.0, rng.random_range(0..=100) as f64 / 100.0)
        .expect("lattice point in range")
}

impl Planner for RandomPlanner {
    fn respond(&mut self, _req: &PlannerRequest, view: EnvView<'_>) -> Result<PlannerResponse, PlannerError> {
        let text = match view {
            EnvView::Nav(env) => {
                let cells = env.visible_navigable();
                let action = match cells.choose(&mut self.rng) {
                    Some(c) => NavAction::Subgoal { point: env.address(*c).expect("visible_navigable has addresses") },
                    None => NavAction::Rotate {
                        direction: if self.rng.random_bool(0.5) { RotateDir::Left } else { RotateDir::Right },
                    },
                };
                nav_text(env, &action)
            }
            EnvView::Manip { env, .. } => {
                let movable: Vec<_> = env.scene().objects.iter().filter(|o| o.movable).collect();
                let action = match movable.choose(&mut self.rng).and_then(|o| pick_point_for(env, &o.id)) {
                    Some(pick) => ManipAction::Move { pick, place: random_lattice(&mut self.rng) },
                    None => ManipAction::Done,
                };
                manip_text(env, &action)
            }
        };
        Ok(PlannerResponse::new(text))
    }
}

/// Fixed-offset tabletop baseline without collision checks.
#[derive(Debug, Default)]
pub struct GreedyPlanner {
    placer: GreedyPlacer,
}

impl Planner for GreedyPlanner {
    fn respond(&mut self, _req: &PlannerRequest, view: EnvView<'_>) -> Result<PlannerResponse, PlannerError> {
        match view {
            EnvView::Nav(_) => Err(PlannerError::Unsupported("greedy planner is tabletop only".into())),
            EnvView::Manip { env, goal } => {
                let action = self.placer.next_action(env.scene(), goal);
                Ok(PlannerResponse::new(manip_text(env, &action)))
            }
        }
    }
}

#[derive(Debug)]
pub struct ReplayPlanner {
    responses: Vec<String>,
    next: usize,
}

impl ReplayPlanner {
    pub fn new(responses: Vec<String>) -> Self {
        Self { responses, next: 0 }
    }
}

impl Planner for ReplayPlanner {
    fn respond(&mut self, _req: &PlannerRequest, _view: EnvView<'_>) -> Result<PlannerResponse, PlannerError> {
        if self.responses.is_empty() {
            return Ok(PlannerResponse::new(""));
        }
        let text = self.responses[self.next % self.responses.len()].clone();
        self.next += 1;
        Ok(PlannerResponse::new(text))
    }
}
