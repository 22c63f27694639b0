use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::env::TabletopConfig;
use super::oracle::oracle_plan;
use super::TabletopError;
use crate::geometry::{self, WorldShape};
use crate::model::{
    classify_level, manip_instruction, predicate_holds, Bounds, DifficultyLevel, Footprint, LayoutPredicate,
    ObjectId, ObjectInstance, Reference, Region, Relation, Scene, SceneKind, TaskKind, TaskSpec, WorldPose,
};
use crate::rng::{derive_seed, seeded, Rng};

pub const TABLE_SIDE_M: f64 = 1.0;
/// Gap threshold used by generated `near` predicates.
pub const NEAR_THRESHOLD_M: f64 = 0.05;
/// Anchor radius used by generated `on_region` predicates.
pub const REGION_THRESHOLD_M: f64 = 0.12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StackRole {
    /// Can hold one object on top.
    Supporter,
    /// Small enough to sit on a supporter.
    Stackable,
    Plain,
}

#[derive(Debug, Clone, Copy)]
pub struct CatalogItem {
    pub category: &'static str,
    pub footprint: CatalogShape,
    pub role: StackRole,
}

#[derive(Debug, Clone, Copy)]
pub enum CatalogShape {
    Circle(f64),
    Rect(f64, f64),
}

impl CatalogItem {
    pub fn footprint(&self) -> Footprint {
        match self.footprint {
            CatalogShape::Circle(r) => Footprint::circle(r),
            CatalogShape::Rect(w, h) => Footprint::rect(w, h),
        }
    }
}

const fn item(category: &'static str, footprint: CatalogShape, role: StackRole) -> CatalogItem {
    CatalogItem { category, footprint, role }
}

use CatalogShape::{Circle, Rect};
use StackRole::{Plain, Stackable, Supporter};

pub const CATALOG: &[CatalogItem] = &[
    item("plate", Circle(0.10), Supporter),
    item("bowl", Circle(0.08), Supporter),
    item("tray", Rect(0.30, 0.20), Supporter),
    item("cutting_board", Rect(0.28, 0.18), Supporter),
    item("notebook", Rect(0.15, 0.21), Supporter),
    item("book", Rect(0.16, 0.23), Supporter),
    item("mug", Circle(0.045), Stackable),
    item("cup", Circle(0.04), Stackable),
    item("apple", Circle(0.04), Stackable),
    item("orange", Circle(0.04), Stackable),
    item("glass", Circle(0.035), Stackable),
    item("phone", Rect(0.07, 0.14), Stackable),
    item("pen", Rect(0.015, 0.14), Stackable),
    item("fork", Rect(0.02, 0.17), Plain),
    item("knife", Rect(0.02, 0.20), Plain),
    item("spoon", Rect(0.03, 0.15), Plain),
    item("napkin", Rect(0.12, 0.12), Plain),
    item("banana", Rect(0.05, 0.18), Plain),
];

pub fn catalog_item(category: &str) -> Option<&'static CatalogItem> {
    CATALOG.iter().find(|c| c.category == category)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManipTask {
    pub scene: Scene,
    pub task: TaskSpec,
}

/// Object-count range, uniqueness and stacking for a manipulation level.
fn level_shape(level: u8) -> (std::ops::RangeInclusive<usize>, bool, bool) {
    match level {
        1 => (2..=3, true, false),
        2 => (4..=5, true, true),
        3 => (6..=8, false, true),
        _ => (9..=11, false, true),
    }
}

const MAX_ATTEMPTS: u64 = 200;

/// Generates a manipulation task of the requested level whose goal the
/// oracle can reach without a collision.
pub fn generate_manip_task(level: u8, seed: u64) -> Result<ManipTask, TabletopError> {
    let target = DifficultyLevel::new(TaskKind::Manip, level)?;
    let config = TabletopConfig::default();
    for attempt in 0..MAX_ATTEMPTS {
        let s = derive_seed(seed, attempt);
        let mut rng = seeded(s);
        let Some(scene) = generate_scene(level, &format!("manip-l{level}-{seed:016x}"), &mut rng) else {
            continue;
        };
        let Some(preds) = generate_predicates(&scene, level, &mut rng) else {
            continue;
        };
        if oracle_plan(&scene, &preds, &config).is_err() {
            continue;
        }
        let task = TaskSpec {
            kind: TaskKind::Manip,
            nav_target_category: None,
            start: None,
            instruction: manip_instruction(&scene, &preds)?,
            goal_predicates: preds,
            level: target,
        };
        if classify_level(&scene, &task).ok() != Some(target) {
            continue;
        }
        return Ok(ManipTask { scene, task });
    }
    Err(TabletopError::OracleFailure(format!(
        "no certifiable level {level} task after {MAX_ATTEMPTS} attempts"
    )))
}

fn pick_categories(level: u8, n: usize, rng: &mut Rng) -> Vec<&'static CatalogItem> {
    let (_, unique, stacked) = level_shape(level);
    let supporters: Vec<_> = CATALOG.iter().filter(|c| c.role == Supporter).collect();
    let stackables: Vec<_> = CATALOG.iter().filter(|c| c.role == Stackable).collect();
    let mut out: Vec<&CatalogItem> = Vec::new();
    if stacked {
        out.push(supporters.choose(rng).expect("non-empty"));
        out.push(stackables.choose(rng).expect("non-empty"));
    }
    let mut pool: Vec<&CatalogItem> = CATALOG.iter().filter(|c| !out.iter().any(|o| o.category == c.category)).collect();
    pool.shuffle(rng);
    if !unique {
        // at least one repeated category
        let dup = *out.first().unwrap_or(&pool[0]);
        out.push(dup);
    }
    while out.len() < n {
        if unique {
            out.push(pool.pop().expect("catalog larger than max count"));
        } else {
            out.push(CATALOG.choose(rng).expect("non-empty"));
        }
    }
    out.truncate(n);
    out
}

fn generate_scene(level: u8, id: &str, rng: &mut Rng) -> Option<Scene> {
    let (counts, _, stacked) = level_shape(level);
    let n = rng.random_range(counts);
    let items = pick_categories(level, n, rng);
    let mut scene = Scene::new(id, SceneKind::Tabletop, Bounds::square(TABLE_SIDE_M));
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    let mut stack_done = false;
    for (i, item) in items.iter().enumerate() {
        let k = seen.entry(item.category).or_default();
        *k += 1;
        let oid = format!("{}_{}", item.category, k);
        // the second item of a stacked level goes on the first
        if stacked && i == 1 && !stack_done {
            let base = &scene.objects[0];
            let pose = WorldPose::new(base.pose.x, base.pose.y, rng.random_range(0.0..std::f64::consts::PI));
            let obj = ObjectInstance::new(oid, item.category, item.footprint(), pose).on(base.id.as_str());
            if !inside(&obj.shape(), &base.shape()) {
                return None;
            }
            scene.objects.push(obj);
            stack_done = true;
            continue;
        }
        let mut placed = false;
        for _ in 0..500 {
            let heading = if rng.random_bool(0.5) { 0.0 } else { rng.random_range(0.0..std::f64::consts::PI) };
            let margin = item.footprint().bounding_radius() + 0.01;
            let x = rng.random_range(margin..TABLE_SIDE_M - margin);
            let y = rng.random_range(margin..TABLE_SIDE_M - margin);
            let obj = ObjectInstance::new(oid.clone(), item.category, item.footprint(), WorldPose::new(x, y, heading));
            let shape = obj.shape();
            let clear = scene
                .objects
                .iter()
                .all(|o| geometry::separation(&shape, &o.shape()) >= 0.02);
            if clear {
                scene.objects.push(obj);
                placed = true;
                break;
            }
        }
        if !placed {
            return None;
        }
    }
    scene.validate().ok()?;
    Some(scene)
}

/// Whether `inner` lies within `outer` (sampled boundary check).
fn inside(inner: &WorldShape, outer: &WorldShape) -> bool {
    let pts: Vec<[f64; 2]> = match inner {
        WorldShape::Polygon(v) => v.clone(),
        WorldShape::Circle { center, radius } => (0..16)
            .map(|k| {
                let t = k as f64 * std::f64::consts::TAU / 16.0;
                [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
            })
            .collect(),
    };
    pts.iter().all(|p| outer.contains(*p, 0.0))
}

fn generate_predicates(scene: &Scene, level: u8, rng: &mut Rng) -> Option<Vec<LayoutPredicate>> {
    let k = match level {
        1 => rng.random_range(1..=2),
        2 => 2,
        3 => rng.random_range(2..=3),
        _ => 3,
    };
    let movable: Vec<&ObjectInstance> = scene.objects.iter().filter(|o| o.movable).collect();
    let mut preds: Vec<LayoutPredicate> = Vec::new();
    let mut subjects: Vec<ObjectId> = Vec::new();
    // on stacked levels, sometimes aim a predicate at the supporter so the
    // stack must be cleared first
    if level >= 2 && rng.random_bool(0.5) {
        if let Some(base) = scene.objects.iter().find(|o| scene.occupants_of(&o.id).next().is_some()) {
            subjects.push(base.id.clone());
        }
    }
    let mut guard = 0;
    while preds.len() < k && guard < 100 {
        guard += 1;
        let subject = match subjects.get(preds.len()) {
            Some(s) => scene.object(s)?,
            None => *movable.choose(rng)?,
        };
        let relation = *[
            Relation::LeftOf,
            Relation::RightOf,
            Relation::InFrontOf,
            Relation::Behind,
            Relation::Near,
            Relation::OnRegion,
        ]
        .choose(rng)?;
        let pred = if relation == Relation::OnRegion {
            LayoutPredicate::on_region(subject.id.as_str(), *Region::ALL.choose(rng)?, REGION_THRESHOLD_M)
        } else {
            let others: Vec<&ObjectInstance> = scene
                .objects
                .iter()
                .filter(|o| o.id != subject.id && !scene.stacked_pair(o, subject))
                .collect();
            let reference = others.choose(rng)?;
            if relation == Relation::Near {
                LayoutPredicate::near(subject.id.as_str(), reference.id.as_str(), NEAR_THRESHOLD_M)
            } else {
                LayoutPredicate::between(relation, subject.id.as_str(), reference.id.as_str())
            }
        };
        let duplicate = preds.iter().any(|p| {
            p.subject == pred.subject && p.relation == pred.relation
                || p.reference == Reference::Object(pred.subject.clone()) && p.reference_object().is_some()
                    && pred.reference == Reference::Object(p.subject.clone())
        });
        if duplicate || predicate_holds(scene, &pred).ok()? {
            continue;
        }
        preds.push(pred);
    }
    (preds.len() == k).then_some(preds)
}
