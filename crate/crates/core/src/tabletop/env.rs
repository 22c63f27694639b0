use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::TabletopError;
use crate::geometry::{self, WorldShape};
use crate::model::{
    all_hold, Action, LayoutPredicate, ModelError, MoveAction, NormPoint, ObjectId, Scene, SceneKind,
};

/// Pick points snap to objects within this distance of their footprint.
pub const PICK_TOLERANCE_M: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TabletopConfig {
    /// Episode move budget is this many moves per object.
    pub moves_per_object: usize,
    /// Also reject moves whose straight-line sweep crosses another object.
    pub sweep_collisions: bool,
}

impl Default for TabletopConfig {
    fn default() -> Self {
        Self { moves_per_object: 3, sweep_collisions: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ManipAction {
    Move { pick: NormPoint, place: NormPoint },
    Done,
}

impl From<MoveAction> for ManipAction {
    fn from(m: MoveAction) -> Self {
        ManipAction::Move { pick: m.pick, place: m.place }
    }
}

impl TryFrom<Action> for ManipAction {
    type Error = TabletopError;

    fn try_from(a: Action) -> Result<Self, Self::Error> {
        match a {
            Action::Move { pick, place } => Ok(ManipAction::Move { pick, place }),
            Action::Done => Ok(ManipAction::Done),
            other => Err(TabletopError::UnsupportedAction(format!("{other:?}"))),
        }
    }
}

impl From<ManipAction> for Action {
    fn from(a: ManipAction) -> Self {
        match a {
            ManipAction::Move { pick, place } => Action::Move { pick, place },
            ManipAction::Done => Action::Done,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepStatus {
    Ok,
    Collision,
    InvalidPick,
    /// Unparseable planner output: the move is spent, nothing changes.
    NoOp,
    Done,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub status: StepStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moved_id: Option<ObjectId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    /// `None` for a no-op.
    pub action: Option<ManipAction>,
    pub outcome: StepOutcome,
    pub state_hash: String,
}

/// Why a placement would fail, if it would.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlacementVerdict {
    Clear,
    HasOccupants,
    OutOfBounds,
    Hits(ObjectId),
}

/// One tabletop rearrangement episode. Objects are lifted and set down
/// (no transit sweep unless configured); a collision ends the episode and
/// leaves the layout untouched.
#[derive(Debug, Clone)]
pub struct TabletopEnv {
    scene: Scene,
    config: TabletopConfig,
    max_moves: usize,
    moves_used: usize,
    terminated: bool,
    collided: bool,
    log: Vec<StepRecord>,
}

impl TabletopEnv {
    pub fn new(scene: Scene, config: TabletopConfig) -> Result<Self, TabletopError> {
        if scene.kind != SceneKind::Tabletop {
            return Err(TabletopError::Model(ModelError::Invalid("tabletop episode needs a tabletop scene".into())));
        }
        scene.validate()?;
        let max_moves = config.moves_per_object * scene.objects.len().max(1);
        Ok(Self { scene, config, max_moves, moves_used: 0, terminated: false, collided: false, log: Vec::new() })
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn config(&self) -> &TabletopConfig {
        &self.config
    }

    pub fn is_terminated(&self) -> bool {
        self.terminated
    }

    pub fn collided(&self) -> bool {
        self.collided
    }

    pub fn moves_used(&self) -> usize {
        self.moves_used
    }

    pub fn max_moves(&self) -> usize {
        self.max_moves
    }

    pub fn log(&self) -> &[StepRecord] {
        &self.log
    }

    /// Topmost movable object whose footprint is within 1 cm of the point.
    pub fn resolve_pick(&self, pick: &NormPoint) -> Option<ObjectId> {
        let [x, y] = self.scene.camera().to_world_xy(pick);
        self.scene
            .objects
            .iter()
            .filter(|o| o.movable)
            .filter_map(|o| {
                let d = o.shape().distance_to([x, y]);
                (d <= PICK_TOLERANCE_M).then(|| (o, d))
            })
            .max_by(|(a, da), (b, db)| {
                self.scene
                    .stack_depth(&a.id)
                    .cmp(&self.scene.stack_depth(&b.id))
                    .then(db.total_cmp(da))
                    .then(b.id.cmp(&a.id))
            })
            .map(|(o, _)| o.id.clone())
    }

    /// Checks setting `id` down with its center at `place`, without moving it.
    pub fn check_placement(&self, id: &ObjectId, place: &NormPoint) -> Result<PlacementVerdict, TabletopError> {
        let obj = self
            .scene
            .object(id)
            .ok_or_else(|| TabletopError::Model(ModelError::UnknownReference(id.to_string())))?;
        if self.scene.occupants_of(id).next().is_some() {
            return Ok(PlacementVerdict::HasOccupants);
        }
        let [x, y] = self.scene.camera().to_world_xy(place);
        let new_pose = obj.pose.with_position(x, y);
        let shape = obj.footprint.at(&new_pose);
        if !geometry::shape_within_bounds(&shape, &self.scene.bounds, 0.0) {
            return Ok(PlacementVerdict::OutOfBounds);
        }
        let swept: Option<WorldShape> = self
            .config
            .sweep_collisions
            .then(|| obj.shape().swept([x - obj.pose.x, y - obj.pose.y]));
        for other in self.scene.objects.iter().filter(|o| &o.id != id) {
            let other_shape = other.shape();
            if geometry::shapes_overlap(&shape, &other_shape) {
                return Ok(PlacementVerdict::Hits(other.id.clone()));
            }
            if let Some(s) = &swept {
                let own_supporter = obj.stacked_on.as_ref() == Some(&other.id);
                if !own_supporter && geometry::shapes_overlap(s, &other_shape) {
                    return Ok(PlacementVerdict::Hits(other.id.clone()));
                }
            }
        }
        Ok(PlacementVerdict::Clear)
    }

    pub fn step(&mut self, action: &ManipAction) -> Result<StepOutcome, TabletopError> {
        if self.terminated {
            return Err(TabletopError::Terminated);
        }
        let outcome = match action {
            ManipAction::Done => {
                self.terminated = true;
                StepOutcome { status: StepStatus::Done, moved_id: None }
            }
            ManipAction::Move { pick, place } => {
                self.moves_used += 1;
                let outcome = match self.resolve_pick(pick) {
                    None => StepOutcome { status: StepStatus::InvalidPick, moved_id: None },
                    Some(id) => match self.check_placement(&id, place)? {
                        PlacementVerdict::Clear => {
                            let [x, y] = self.scene.camera().to_world_xy(place);
                            let obj = self.scene.object_mut(&id).expect("resolved id exists");
                            obj.pose = obj.pose.with_position(x, y);
                            obj.stacked_on = None;
                            StepOutcome { status: StepStatus::Ok, moved_id: Some(id) }
                        }
                        _ => {
                            self.collided = true;
                            self.terminated = true;
                            StepOutcome { status: StepStatus::Collision, moved_id: Some(id) }
                        }
                    },
                };
                if self.moves_used >= self.max_moves {
                    self.terminated = true;
                }
                outcome
            }
        };
        self.record(Some(*action), &outcome);
        Ok(outcome)
    }

    /// Spends one move without touching the scene.
    pub fn step_noop(&mut self) -> Result<StepOutcome, TabletopError> {
        if self.terminated {
            return Err(TabletopError::Terminated);
        }
        self.moves_used += 1;
        if self.moves_used >= self.max_moves {
            self.terminated = true;
        }
        let outcome = StepOutcome { status: StepStatus::NoOp, moved_id: None };
        self.record(None, &outcome);
        Ok(outcome)
    }

    fn record(&mut self, action: Option<ManipAction>, outcome: &StepOutcome) {
        self.log.push(StepRecord {
            step: self.log.len(),
            action,
            outcome: outcome.clone(),
            state_hash: self.state_hash(),
        });
    }

    pub fn evaluate_goal(&self, predicates: &[LayoutPredicate]) -> Result<bool, TabletopError> {
        Ok(all_hold(&self.scene, predicates)?)
    }

    /// Success in the closed-loop sense: goal layout reached, no collision.
    pub fn succeeded(&self, predicates: &[LayoutPredicate]) -> Result<bool, TabletopError> {
        Ok(!self.collided && self.evaluate_goal(predicates)?)
    }

    /// Hex digest of object ids, poses and stacking.
    pub fn state_hash(&self) -> String {
        let mut h = Sha256::new();
        for o in &self.scene.objects {
            h.update(o.id.as_str().as_bytes());
            for v in [o.pose.x, o.pose.y, o.pose.heading] {
                h.update(v.to_bits().to_le_bytes());
            }
            h.update(o.stacked_on.as_ref().map(|s| s.as_str()).unwrap_or("-").as_bytes());
            h.update([0u8]);
        }
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn log_jsonl(&self) -> String {
        self.log
            .iter()
            .map(|r| serde_json::to_string(r).expect("step record serializes") + "\n")
            .collect()
    }
}
