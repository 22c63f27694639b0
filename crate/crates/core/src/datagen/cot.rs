use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::leakage::{leakage_check, LeakageVerdict, DEFAULT_LEAK_EPS};
use super::provider::{ProviderError, RationaleProvider};
use super::templates as t;
use super::DatagenError;
use crate::geometry::shortest_path;
use crate::model::{Action, NormPoint, RotateDir, TaskKind, TaskSpec};
use crate::nav::{NavAction, NavEnv, NavParams, NavTask};
use crate::render::{
    annotate, render, render_nav_observation, AnnotationKind, AnnotationSpec, Image, RenderConfig, Style, Viewport,
};
use crate::tabletop::{oracle_plan, ManipAction, ManipTask, TabletopConfig, TabletopEnv};

pub const MAX_PROVIDER_ATTEMPTS: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoTConfig {
    pub eps: f64,
    pub attempts: u32,
}

impl Default for CoTConfig {
    fn default() -> Self {
        Self { eps: DEFAULT_LEAK_EPS, attempts: MAX_PROVIDER_ATTEMPTS }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoTProvenance {
    pub scene_id: String,
    pub seed: u64,
    pub step: usize,
}

/// One oracle decision ready to be turned into a training sample.
#[derive(Debug, Clone)]
pub struct CoTRequest {
    /// File stem for the images, unique within a dataset.
    pub key: String,
    pub task: TaskSpec,
    pub gt_action: Action,
    pub action_text: String,
    /// Observation as the planner would see it, unannotated.
    pub image: Image,
    pub annotations: Vec<AnnotationSpec>,
    pub provenance: CoTProvenance,
}

impl CoTRequest {
    pub fn image_ref(&self) -> String {
        format!("images/{}.png", self.key)
    }

    pub fn annotated_image_ref(&self) -> String {
        format!("images/{}.annotated.png", self.key)
    }

    pub fn cot_prompt(&self) -> String {
        match self.task.kind {
            TaskKind::Nav => t::nav_cot_prompt(self.task.nav_target_category.as_deref().unwrap_or("object")),
            TaskKind::Manip => t::manip_cot_prompt(&self.task.instruction),
        }
    }

    pub fn direct_prompt(&self) -> String {
        match self.task.kind {
            TaskKind::Nav => t::nav_direct_prompt(self.task.nav_target_category.as_deref().unwrap_or("object")),
            TaskKind::Manip => t::manip_direct_prompt(&self.task.instruction),
        }
    }

    pub fn annotated_image(&self) -> Result<Image, DatagenError> {
        let mut img = self.image.clone();
        for a in &self.annotations {
            a.validate()?;
            img = annotate(&img, a);
        }
        Ok(img)
    }

    /// The action-only sample; needs no provider.
    pub fn direct_sample(&self) -> CoTSample {
        CoTSample {
            image_ref: self.image_ref(),
            annotated_image_ref: None,
            prompt: self.direct_prompt(),
            rationale: None,
            action_text: self.action_text.clone(),
            gt_action: self.gt_action,
            task: self.task.clone(),
            provenance: self.provenance.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoTSample {
    pub image_ref: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotated_image_ref: Option<String>,
    pub prompt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
    pub action_text: String,
    pub gt_action: Action,
    pub task: TaskSpec,
    pub provenance: CoTProvenance,
}

impl CoTSample {
    /// Target text: `Thought: ...\nAction: ...` when a rationale is present,
    /// the bare action text otherwise.
    pub fn response(&self) -> String {
        match &self.rationale {
            Some(r) => t::with_rationale(r, &self.action_text),
            None => self.action_text.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    Leakage,
    Provider,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub key: String,
    pub reason: RejectReason,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub substring: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub attempts: u32,
}

#[derive(Debug, Clone)]
pub enum CoTOutcome {
    Accepted { sample: CoTSample, image_png: Vec<u8>, annotated_png: Vec<u8>, attempts: u32 },
    Rejected(Rejection),
}

/// Strips a `Thought:` label and anything from an `Action:` line on, in
/// case the provider answered in the full response format.
fn clean_rationale(text: &str) -> String {
    let body = match text.find("Action:") {
        Some(i) => &text[..i],
        None => text,
    };
    let body = body.trim();
    body.strip_prefix("Thought:").unwrap_or(body).trim().to_string()
}

/// Annotates the observation with the ground-truth action, asks the
/// provider for a rationale under the constraint sentence and keeps it only
/// if it does not leak the action's coordinates. Up to `config.attempts`
/// provider calls are made. If none is usable the sample is rejected when
/// any reply leaked, and the provider error is returned otherwise.
pub fn gen_cot(
    req: &CoTRequest,
    provider: &dyn RationaleProvider,
    config: &CoTConfig,
) -> Result<CoTOutcome, DatagenError> {
    let annotated_png = req.annotated_image()?.to_png();
    let cot_prompt = req.cot_prompt();
    let request = t::rationale_request(&cot_prompt);
    let attempts = config.attempts.max(1);
    let mut last_leak: Option<String> = None;
    let mut last_err: Option<ProviderError> = None;
    for attempt in 1..=attempts {
        let text = match provider.request(&annotated_png, &request) {
            Ok(text) => text,
            Err(e) => {
                log::warn!("provider attempt {attempt} for {} failed: {e}", req.key);
                last_err = Some(e);
                continue;
            }
        };
        let rationale = clean_rationale(&text);
        if rationale.is_empty() {
            last_err = Some(ProviderError::Malformed("empty rationale".into()));
            continue;
        }
        match leakage_check(&rationale, &req.gt_action, config.eps) {
            LeakageVerdict::Pass => {
                let sample = CoTSample {
                    image_ref: req.image_ref(),
                    annotated_image_ref: Some(req.annotated_image_ref()),
                    prompt: cot_prompt,
                    rationale: Some(rationale),
                    action_text: req.action_text.clone(),
                    gt_action: req.gt_action,
                    task: req.task.clone(),
                    provenance: req.provenance.clone(),
                };
                return Ok(CoTOutcome::Accepted { sample, image_png: req.image.to_png(), annotated_png, attempts: attempt });
            }
            LeakageVerdict::Fail { substring } => {
                log::info!("rationale for {} leaks {substring}", req.key);
                last_leak = Some(substring);
            }
        }
    }
    match last_leak {
        Some(substring) => Ok(CoTOutcome::Rejected(Rejection {
            key: req.key.clone(),
            reason: RejectReason::Leakage,
            substring: Some(substring),
            message: None,
            attempts,
        })),
        None => Err(DatagenError::Provider {
            attempts,
            message: last_err.map(|e| e.to_string()).unwrap_or_default(),
        }),
    }
}

fn marker() -> Style {
    Style::default()
}

/// Walks the navigation oracle from the task's start and records each
/// decision with its observation and a drawing of the intended motion.
pub fn nav_cot_requests(
    task: &NavTask,
    params: &NavParams,
    render_config: &RenderConfig,
    seed: u64,
    max_steps: usize,
) -> Result<Vec<CoTRequest>, DatagenError> {
    let scene = Arc::new(task.scene.clone());
    let mut env = NavEnv::new(scene.clone(), &task.task, *params)?;
    let target = env.target_category().to_string();
    let cam = scene.camera();
    let mut out = Vec::new();
    while !env.is_terminated() && out.len() < max_steps {
        let action = env.oracle_action()?;
        let image = render_nav_observation(&env, render_config);
        let here = cam.to_norm(&env.agent()).map_err(crate::nav::NavError::from)?;
        let (gt_action, action_text, annotations) = match action {
            NavAction::Subgoal { point } => {
                let goal = env.cell_of_point(&point).expect("oracle subgoal lies in the grid");
                let path = shortest_path(env.grid(), env.agent_cell(), &[goal])
                    .map_err(|e| crate::nav::NavError::Unreachable(e.to_string()))?;
                let mut pts: Vec<NormPoint> = vec![here];
                pts.extend(path.waypoints.iter().skip(1).filter_map(|c| env.address(*c)));
                let mut anns = Vec::new();
                if pts.len() >= 2 {
                    anns.push(AnnotationSpec { kind: AnnotationKind::Trajectory, points: pts, style: marker() });
                }
                anns.push(AnnotationSpec::point(point, marker()));
                (Action::Subgoal { point }, t::nav_subgoal_text(&point, &target), anns)
            }
            NavAction::Rotate { direction } => {
                let delta = match direction {
                    RotateDir::Left => -params.rotation(),
                    RotateDir::Right => params.rotation(),
                };
                let h = env.agent().heading + delta;
                let reach = 1.0;
                let tip = NormPoint::clamped(
                    here.x() + reach * h.cos() / cam.scale()[0],
                    here.y() + reach * h.sin() / cam.scale()[1],
                );
                let anns = vec![AnnotationSpec { kind: AnnotationKind::Trajectory, points: vec![here, tip], style: marker() }];
                (Action::Rotate { direction }, t::nav_rotate_text(direction == RotateDir::Left), anns)
            }
        };
        let step = out.len();
        out.push(CoTRequest {
            key: format!("{}-s{step:03}", scene.id),
            task: task.task.clone(),
            gt_action,
            action_text,
            image,
            annotations,
            provenance: CoTProvenance { scene_id: scene.id.clone(), seed, step },
        });
        env.step(&action)?;
    }
    Ok(out)
}

/// Replays the tabletop oracle plan, one request per move plus the final
/// `Done`.
pub fn manip_cot_requests(
    task: &ManipTask,
    config: &TabletopConfig,
    render_config: &RenderConfig,
    seed: u64,
) -> Result<Vec<CoTRequest>, DatagenError> {
    let plan = oracle_plan(&task.scene, &task.task.goal_predicates, config)?;
    let mut env = TabletopEnv::new(task.scene.clone(), *config)?;
    let mut out = Vec::new();
    let actions = plan.into_iter().map(ManipAction::from).chain(std::iter::once(ManipAction::Done));
    for action in actions {
        let image = render(env.scene(), Viewport::Full, render_config);
        let (action_text, annotations) = match &action {
            ManipAction::Move { pick, place } => {
                let id = env.resolve_pick(pick).expect("oracle picks resolve");
                let category = env.scene().object(&id).expect("resolved id exists").category.clone();
                let anns = vec![
                    AnnotationSpec { kind: AnnotationKind::Trajectory, points: vec![*pick, *place], style: marker() },
                    AnnotationSpec::point(*place, marker()),
                ];
                (t::manip_move_text(&category, pick, place), anns)
            }
            ManipAction::Done => (t::MANIP_DONE_TEXT.to_string(), Vec::new()),
        };
        let step = out.len();
        out.push(CoTRequest {
            key: format!("{}-s{step:03}", task.scene.id),
            task: task.task.clone(),
            gt_action: action.into(),
            action_text,
            image,
            annotations,
            provenance: CoTProvenance { scene_id: task.scene.id.clone(), seed, step },
        });
        env.step(&action)?;
    }
    Ok(out)
}
