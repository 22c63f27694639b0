use std::fmt;

use serde::{Deserialize, Serialize};

use super::level::DifficultyLevel;
use super::point::NormPoint;
use super::scene::{ObjectId, ObjectInstance, Scene, WorldPose};
use super::ModelError;
use crate::geometry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Nav,
    Manip,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::Nav => "nav",
            TaskKind::Manip => "manip",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    LeftOf,
    RightOf,
    /// Smaller image y than the reference.
    InFrontOf,
    /// Larger image y than the reference.
    Behind,
    Near,
    OnRegion,
}

/// Named table regions, anchored in normalized image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Center,
    TopLeftCorner,
    TopRightCorner,
    BottomLeftCorner,
    BottomRightCorner,
    LeftEdge,
    RightEdge,
    TopEdge,
    BottomEdge,
}

impl Region {
    pub const ALL: [Region; 9] = [
        Region::Center,
        Region::TopLeftCorner,
        Region::TopRightCorner,
        Region::BottomLeftCorner,
        Region::BottomRightCorner,
        Region::LeftEdge,
        Region::RightEdge,
        Region::TopEdge,
        Region::BottomEdge,
    ];

    pub fn anchor(&self) -> NormPoint {
        let (x, y) = match self {
            Region::Center => (0.5, 0.5),
            Region::TopLeftCorner => (0.15, 0.15),
            Region::TopRightCorner => (0.85, 0.15),
            Region::BottomLeftCorner => (0.15, 0.85),
            Region::BottomRightCorner => (0.85, 0.85),
            Region::LeftEdge => (0.12, 0.5),
            Region::RightEdge => (0.88, 0.5),
            Region::TopEdge => (0.5, 0.12),
            Region::BottomEdge => (0.5, 0.88),
        };
        NormPoint::new(x, y).expect("anchor in unit square")
    }

    pub fn phrase(&self) -> &'static str {
        match self {
            Region::Center => "center",
            Region::TopLeftCorner => "top left corner",
            Region::TopRightCorner => "top right corner",
            Region::BottomLeftCorner => "bottom left corner",
            Region::BottomRightCorner => "bottom right corner",
            Region::LeftEdge => "left edge",
            Region::RightEdge => "right edge",
            Region::TopEdge => "top edge",
            Region::BottomEdge => "bottom edge",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    Object(ObjectId),
    Region(Region),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutPredicate {
    pub relation: Relation,
    pub subject: ObjectId,
    pub reference: Reference,
    /// Meters; only used by `near` and `on_region`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

impl LayoutPredicate {
    pub fn between(relation: Relation, subject: &str, reference: &str) -> Self {
        Self {
            relation,
            subject: ObjectId::new(subject),
            reference: Reference::Object(ObjectId::new(reference)),
            threshold: None,
        }
    }

    pub fn near(subject: &str, reference: &str, threshold: f64) -> Self {
        Self { threshold: Some(threshold), ..Self::between(Relation::Near, subject, reference) }
    }

    pub fn on_region(subject: &str, region: Region, threshold: f64) -> Self {
        Self {
            relation: Relation::OnRegion,
            subject: ObjectId::new(subject),
            reference: Reference::Region(region),
            threshold: Some(threshold),
        }
    }

    pub fn reference_object(&self) -> Option<&ObjectId> {
        match &self.reference {
            Reference::Object(id) => Some(id),
            Reference::Region(_) => None,
        }
    }
}

/// Evaluates one predicate against the current object poses.
///
/// Directional relations compare object centers. `near` with an object
/// reference compares the gap between footprints; with a region it compares
/// the subject center with the region anchor, as does `on_region`.
pub fn predicate_holds(scene: &Scene, pred: &LayoutPredicate) -> Result<bool, ModelError> {
    let subject = scene
        .object(&pred.subject)
        .ok_or_else(|| ModelError::UnknownReference(pred.subject.to_string()))?;
    let threshold = || {
        pred.threshold
            .ok_or_else(|| ModelError::Invalid(format!("{:?} predicate needs a threshold", pred.relation)))
    };
    let anchor = |r: &Region| scene.camera().to_world_xy(&r.anchor());
    let reference_point = match &pred.reference {
        Reference::Object(id) => {
            let o = scene.object(id).ok_or_else(|| ModelError::UnknownReference(id.to_string()))?;
            [o.pose.x, o.pose.y]
        }
        Reference::Region(r) => anchor(r),
    };
    let [sx, sy] = subject.pose.position();
    let [rx, ry] = reference_point;
    Ok(match pred.relation {
        Relation::LeftOf => sx < rx,
        Relation::RightOf => sx > rx,
        Relation::InFrontOf => sy < ry,
        Relation::Behind => sy > ry,
        Relation::Near => match &pred.reference {
            Reference::Object(id) => {
                let o = scene.object(id).expect("checked above");
                geometry::separation(&subject.shape(), &o.shape()) <= threshold()?
            }
            Reference::Region(_) => (sx - rx).hypot(sy - ry) <= threshold()?,
        },
        Relation::OnRegion => match &pred.reference {
            Reference::Region(_) => (sx - rx).hypot(sy - ry) <= threshold()?,
            Reference::Object(_) => {
                return Err(ModelError::Invalid("on_region needs a region reference".into()));
            }
        },
    })
}

pub fn all_hold(scene: &Scene, preds: &[LayoutPredicate]) -> Result<bool, ModelError> {
    for p in preds {
        if !predicate_holds(scene, p)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Referring expression for an object: the bare category when unique,
/// otherwise the category plus its current image location.
pub fn refer_to(scene: &Scene, o: &ObjectInstance) -> String {
    if scene.is_category_unique(&o.category) {
        format!("the {}", o.display_name())
    } else {
        let p = scene.camera().to_norm(&o.pose).map(|p| p.to_string()).unwrap_or_default();
        format!("the {} at {}", o.display_name(), p)
    }
}

pub fn predicate_sentence(scene: &Scene, pred: &LayoutPredicate) -> Result<String, ModelError> {
    let name = |id: &ObjectId| {
        scene
            .object(id)
            .map(|o| refer_to(scene, o))
            .ok_or_else(|| ModelError::UnknownReference(id.to_string()))
    };
    let subject = name(&pred.subject)?;
    let reference = match &pred.reference {
        Reference::Object(id) => name(id)?,
        Reference::Region(r) => format!("the {} of the table", r.phrase()),
    };
    let s = match pred.relation {
        Relation::LeftOf => format!("Put {subject} to the left of {reference}."),
        Relation::RightOf => format!("Put {subject} to the right of {reference}."),
        Relation::InFrontOf => format!("Put {subject} in front of {reference}."),
        Relation::Behind => format!("Put {subject} behind {reference}."),
        Relation::Near => format!("Put {subject} next to {reference}."),
        Relation::OnRegion => format!("Put {subject} at {reference}."),
    };
    Ok(capitalize(&s))
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().collect::<String>() + c.as_str(),
        None => String::new(),
    }
}

pub fn manip_instruction(scene: &Scene, preds: &[LayoutPredicate]) -> Result<String, ModelError> {
    let parts = preds
        .iter()
        .map(|p| predicate_sentence(scene, p))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(parts.join(" "))
}

pub fn nav_instruction(target_category: &str) -> String {
    format!("Find the {} in the environment.", super::scene::display_category(target_category))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub kind: TaskKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nav_target_category: Option<String>,
    /// Agent start pose (navigation only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<WorldPose>,
    pub instruction: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub goal_predicates: Vec<LayoutPredicate>,
    pub level: DifficultyLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotateDir {
    /// Counter-clockwise on screen.
    Left,
    /// Clockwise on screen.
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoveAction {
    pub pick: NormPoint,
    pub place: NormPoint,
}

/// Anything a planner may ask the simulators to do.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Action {
    Subgoal { point: NormPoint },
    Rotate { direction: RotateDir },
    Move { pick: NormPoint, place: NormPoint },
    Done,
}

impl Action {
    /// Coordinates carried by the action (subgoal, or pick then place).
    pub fn points(&self) -> Vec<NormPoint> {
        match self {
            Action::Subgoal { point } => vec![*point],
            Action::Move { pick, place } => vec![*pick, *place],
            Action::Rotate { .. } | Action::Done => Vec::new(),
        }
    }
}

impl From<MoveAction> for Action {
    fn from(m: MoveAction) -> Self {
        Action::Move { pick: m.pick, place: m.place }
    }
}
