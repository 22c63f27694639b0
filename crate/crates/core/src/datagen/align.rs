use rand::seq::IndexedRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::templates as t;
use super::DatagenError;
use crate::model::{NormPoint, ObjectId, ObjectInstance, Scene, SceneKind};
use crate::nav::address_point;
use crate::rng::{seeded, Rng};
use crate::tabletop::{pick_point_for, PlacementVerdict, TabletopConfig, TabletopEnv};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignCategory {
    ObjectUnderstanding,
    Affordance,
    SpatialRelationship,
    SpatialCompatibility,
}

impl AlignCategory {
    pub const ALL: [AlignCategory; 4] = [
        AlignCategory::ObjectUnderstanding,
        AlignCategory::Affordance,
        AlignCategory::SpatialRelationship,
        AlignCategory::SpatialCompatibility,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AlignCategory::ObjectUnderstanding => "object_understanding",
            AlignCategory::Affordance => "affordance",
            AlignCategory::SpatialRelationship => "spatial_relationship",
            AlignCategory::SpatialCompatibility => "spatial_compatibility",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }

    pub fn supports(&self, kind: SceneKind) -> bool {
        match self {
            AlignCategory::Affordance => kind == SceneKind::Floorplan,
            AlignCategory::SpatialCompatibility => kind == SceneKind::Tabletop,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Coordinates in the prompt, language in the response.
    Understanding,
    /// Language in the prompt, coordinates in the response.
    Generation,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::Understanding => "understanding",
            Direction::Generation => "generation",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Direction::Understanding, Direction::Generation].into_iter().find(|d| d.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub scene_id: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentSample {
    pub category: AlignCategory,
    pub direction: Direction,
    pub image_ref: String,
    pub prompt: String,
    pub response: String,
    pub provenance: Provenance,
}

/// A fully specified alignment question. `prompt` and `answer` turn it
/// into text; the answer is always computed from the scene.
#[derive(Debug, Clone, PartialEq)]
pub enum Query {
    ObjectAt(NormPoint),
    InstancesOf(String),
    Navigable(NormPoint),
    NavigablePoint(NormPoint),
    RelationBetween(NormPoint, NormPoint),
    /// The object `answer` sits `phrase` the reference object.
    ObjectInRelation { reference: ObjectId, answer: ObjectId },
    Collision { object: ObjectId, from: NormPoint, to: NormPoint },
    FreePlacement { object: ObjectId, at: NormPoint },
}

impl Query {
    pub fn category(&self) -> AlignCategory {
        match self {
            Query::ObjectAt(_) | Query::InstancesOf(_) => AlignCategory::ObjectUnderstanding,
            Query::Navigable(_) | Query::NavigablePoint(_) => AlignCategory::Affordance,
            Query::RelationBetween(..) | Query::ObjectInRelation { .. } => AlignCategory::SpatialRelationship,
            Query::Collision { .. } | Query::FreePlacement { .. } => AlignCategory::SpatialCompatibility,
        }
    }

    pub fn direction(&self) -> Direction {
        match self {
            Query::ObjectAt(_) | Query::Navigable(_) | Query::RelationBetween(..) | Query::Collision { .. } => {
                Direction::Understanding
            }
            _ => Direction::Generation,
        }
    }
}

/// Topmost object whose footprint contains the point.
pub fn object_at<'a>(scene: &'a Scene, p: &NormPoint) -> Option<&'a ObjectInstance> {
    let w = scene.camera().to_world_xy(p);
    scene
        .objects
        .iter()
        .enumerate()
        .filter(|(_, o)| o.shape().contains(w, 0.0))
        .max_by_key(|(i, o)| (scene.stack_depth(&o.id), *i))
        .map(|(_, o)| o)
}

pub fn is_navigable(scene: &Scene, p: &NormPoint) -> Option<bool> {
    let grid = scene.occupancy.as_ref()?;
    let [x, y] = scene.camera().to_world_xy(p);
    grid.cell_of(x, y).map(|c| grid.is_free(c))
}

/// A lattice point that `object_at` maps back to `o`, preferring its center.
pub fn object_point(scene: &Scene, o: &ObjectInstance) -> Option<NormPoint> {
    let cam = scene.camera();
    let center = cam.to_norm(&o.pose).ok()?.quantized();
    if object_at(scene, &center).map(|h| &h.id) == Some(&o.id) {
        return Some(center);
    }
    let [x0, y0, x1, y1] = o.shape().bbox();
    let b = &scene.bounds;
    let lo = cam.to_norm_xy(x0.max(b.min_x), y0.max(b.min_y)).ok()?;
    let hi = cam.to_norm_xy(x1.min(b.max_x()), y1.min(b.max_y())).ok()?;
    let mut best: Option<(f64, NormPoint)> = None;
    for r in (lo.y() * 100.0).floor() as i64..=(hi.y() * 100.0).ceil() as i64 {
        for c in (lo.x() * 100.0).floor() as i64..=(hi.x() * 100.0).ceil() as i64 {
            let Ok(p) = NormPoint::new(c as f64 / 100.0, r as f64 / 100.0) else { continue };
            if object_at(scene, &p).map(|h| &h.id) == Some(&o.id) {
                let d = p.distance(&center);
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, p));
                }
            }
        }
    }
    best.map(|(_, p)| p)
}

fn tabletop_env(scene: &Scene) -> Result<TabletopEnv, DatagenError> {
    TabletopEnv::new(scene.clone(), TabletopConfig::default()).map_err(|e| DatagenError::Unsupported(e.to_string()))
}

fn obj<'a>(scene: &'a Scene, id: &ObjectId) -> Result<&'a ObjectInstance, DatagenError> {
    scene
        .object(id)
        .ok_or_else(|| DatagenError::Unsupported(format!("unknown object {id}")))
}

pub fn prompt(scene: &Scene, q: &Query) -> Result<String, DatagenError> {
    Ok(match q {
        Query::ObjectAt(p) => t::object_understanding_prompt(p),
        Query::InstancesOf(c) => t::object_generation_prompt(c),
        Query::Navigable(p) => t::affordance_understanding_prompt(p),
        Query::NavigablePoint(_) => t::affordance_generation_prompt(),
        Query::RelationBetween(a, b) => t::relationship_understanding_prompt(a, b),
        Query::ObjectInRelation { reference, answer } => {
            let phrase = relation_of(scene, answer, reference)?;
            t::relationship_generation_prompt(phrase, &obj(scene, reference)?.category)
        }
        Query::Collision { object, from, to } => {
            t::compatibility_understanding_prompt(&obj(scene, object)?.category, from, to)
        }
        Query::FreePlacement { object, .. } => t::compatibility_generation_prompt(&obj(scene, object)?.category),
    })
}

fn relation_of(scene: &Scene, a: &ObjectId, b: &ObjectId) -> Result<&'static str, DatagenError> {
    let pa = object_point(scene, obj(scene, a)?).ok_or_else(|| DatagenError::Unsupported(format!("{a} is hidden")))?;
    let pb = object_point(scene, obj(scene, b)?).ok_or_else(|| DatagenError::Unsupported(format!("{b} is hidden")))?;
    t::relation_phrase(&pa, &pb).ok_or_else(|| DatagenError::Unsupported("objects coincide".into()))
}

/// Ground-truth response text for a query.
pub fn answer(scene: &Scene, q: &Query) -> Result<String, DatagenError> {
    let unsupported = |m: &str| DatagenError::Unsupported(m.to_string());
    Ok(match q {
        Query::ObjectAt(p) => crate::model::display_category(
            &object_at(scene, p).ok_or_else(|| unsupported("no object at point"))?.category,
        ),
        Query::InstancesOf(c) => {
            let pts = scene
                .instances_of(c)
                .map(|o| object_point(scene, o).ok_or_else(|| unsupported("instance has no visible point")))
                .collect::<Result<Vec<_>, _>>()?;
            if pts.is_empty() {
                return Err(unsupported("category absent"));
            }
            t::object_generation_response(c, &pts)
        }
        Query::Navigable(p) => t::yes_no(is_navigable(scene, p).ok_or_else(|| unsupported("scene has no grid"))?),
        Query::NavigablePoint(p) => {
            if is_navigable(scene, p) != Some(true) {
                return Err(unsupported("point is not navigable"));
            }
            p.to_string()
        }
        Query::RelationBetween(a, b) => {
            let oa = object_at(scene, a).ok_or_else(|| unsupported("no object at first point"))?;
            let ob = object_at(scene, b).ok_or_else(|| unsupported("no object at second point"))?;
            let phrase = t::relation_phrase(a, b).ok_or_else(|| unsupported("points coincide"))?;
            t::relationship_understanding_response(&oa.category, phrase, &ob.category)
        }
        Query::ObjectInRelation { answer, .. } => object_point(scene, obj(scene, answer)?)
            .ok_or_else(|| unsupported("answer object hidden"))?
            .to_string(),
        Query::Collision { object, to, .. } => {
            let env = tabletop_env(scene)?;
            let verdict = env.check_placement(object, to).map_err(|e| unsupported(&e.to_string()))?;
            t::yes_no(verdict != PlacementVerdict::Clear)
        }
        Query::FreePlacement { object, at } => {
            let env = tabletop_env(scene)?;
            if env.check_placement(object, at).map_err(|e| unsupported(&e.to_string()))? != PlacementVerdict::Clear {
                return Err(unsupported("placement collides"));
            }
            at.to_string()
        }
    })
}

fn random_lattice(rng: &mut Rng) -> NormPoint {
    NormPoint::new(rng.random_range(0..=100) as f64 / 100.0, rng.random_range(0..=100) as f64 / 100.0)
        .expect("lattice point in range")
}

/// Objects whose category is unique, so a name alone identifies them.
fn uniquely_named(scene: &Scene) -> Vec<&ObjectInstance> {
    scene.objects.iter().filter(|o| scene.is_category_unique(&o.category)).collect()
}

/// Draws a query of the requested cell that the scene can answer.
pub fn sample_query(
    scene: &Scene,
    category: AlignCategory,
    direction: Direction,
    rng: &mut Rng,
) -> Result<Query, DatagenError> {
    if !category.supports(scene.kind) {
        return Err(DatagenError::UnsupportedCategory { category, scene: scene.id.clone() });
    }
    let none = |why: &str| DatagenError::Unsupported(format!("{}: {why}", scene.id));
    match (category, direction) {
        (AlignCategory::ObjectUnderstanding, Direction::Understanding) => {
            let o = scene.objects.choose(rng).ok_or_else(|| none("no objects"))?;
            let p = object_point(scene, o).ok_or_else(|| none("object fully hidden"))?;
            Ok(Query::ObjectAt(p))
        }
        (AlignCategory::ObjectUnderstanding, Direction::Generation) => {
            let cats: Vec<&str> = scene
                .category_counts()
                .into_keys()
                .filter(|c| {
                    scene.instances_of(c).all(|o| {
                        let center = scene.camera().to_norm(&o.pose).map(|p| p.quantized());
                        center.is_ok_and(|p| object_at(scene, &p).map(|h| &h.id) == Some(&o.id))
                    })
                })
                .collect();
            let c = cats.choose(rng).ok_or_else(|| none("no category with visible centers"))?;
            Ok(Query::InstancesOf(c.to_string()))
        }
        (AlignCategory::Affordance, Direction::Understanding) => {
            let want = rng.random_bool(0.5);
            for _ in 0..1000 {
                let p = random_lattice(rng);
                if is_navigable(scene, &p) == Some(want) {
                    return Ok(Query::Navigable(p));
                }
            }
            Err(none("no point with the wanted verdict"))
        }
        (AlignCategory::Affordance, Direction::Generation) => {
            let grid = scene.occupancy.as_ref().ok_or_else(|| none("no grid"))?;
            let free: Vec<_> = grid.free_cells().collect();
            let c = free.choose(rng).ok_or_else(|| none("no free cell"))?;
            let p = address_point(grid, &scene.camera(), *c).ok_or_else(|| none("cell below lattice"))?;
            Ok(Query::NavigablePoint(p))
        }
        (AlignCategory::SpatialRelationship, Direction::Understanding) => {
            for _ in 0..100 {
                let pair: Vec<&ObjectInstance> = scene.objects.choose_multiple(rng, 2).collect();
                if pair.len() < 2 {
                    break;
                }
                let (Some(a), Some(b)) = (object_point(scene, pair[0]), object_point(scene, pair[1])) else {
                    continue;
                };
                if t::relation_phrase(&a, &b).is_some() {
                    return Ok(Query::RelationBetween(a, b));
                }
            }
            Err(none("no pair of distinct visible objects"))
        }
        (AlignCategory::SpatialRelationship, Direction::Generation) => {
            // the answer must be the only object in that octant of the reference
            let named = uniquely_named(scene);
            for _ in 0..100 {
                let Some(reference) = named.choose(rng) else { break };
                let Some(rp) = object_point(scene, reference) else { continue };
                let Some(answer) = scene.objects.choose(rng) else { break };
                if answer.id == reference.id {
                    continue;
                }
                let Some(ap) = object_point(scene, answer) else { continue };
                let Some(phrase) = t::relation_phrase(&ap, &rp) else { continue };
                let rivals = scene.objects.iter().filter(|o| o.id != reference.id && o.id != answer.id).any(|o| {
                    object_point(scene, o).and_then(|p| t::relation_phrase(&p, &rp)) == Some(phrase)
                });
                if !rivals {
                    return Ok(Query::ObjectInRelation { reference: reference.id.clone(), answer: answer.id.clone() });
                }
            }
            Err(none("no unambiguous relation"))
        }
        (AlignCategory::SpatialCompatibility, Direction::Understanding) => {
            let env = tabletop_env(scene)?;
            let movable: Vec<&ObjectInstance> = scene.objects.iter().filter(|o| o.movable).collect();
            let want = rng.random_bool(0.5);
            for _ in 0..200 {
                let o = movable.choose(rng).ok_or_else(|| none("nothing movable"))?;
                let Some(from) = pick_point_for(&env, &o.id) else { continue };
                let to = random_lattice(rng);
                let collides = env.check_placement(&o.id, &to).map_err(|e| none(&e.to_string()))?
                    != PlacementVerdict::Clear;
                if collides == want {
                    return Ok(Query::Collision { object: o.id.clone(), from, to });
                }
            }
            Err(none("no move with the wanted verdict"))
        }
        (AlignCategory::SpatialCompatibility, Direction::Generation) => {
            let env = tabletop_env(scene)?;
            let named: Vec<&ObjectInstance> = uniquely_named(scene)
                .into_iter()
                .filter(|o| o.movable && scene.occupants_of(&o.id).next().is_none())
                .collect();
            let o = named.choose(rng).ok_or_else(|| none("no uniquely named free object"))?;
            for _ in 0..2000 {
                let to = random_lattice(rng);
                if env.check_placement(&o.id, &to).map_err(|e| none(&e.to_string()))? == PlacementVerdict::Clear {
                    return Ok(Query::FreePlacement { object: o.id.clone(), at: to });
                }
            }
            Err(none("table too crowded"))
        }
    }
}

/// One alignment sample for the given cell, drawn with `seed`.
pub fn gen_alignment(
    scene: &Scene,
    category: AlignCategory,
    direction: Direction,
    seed: u64,
) -> Result<AlignmentSample, DatagenError> {
    let mut rng = seeded(seed);
    let q = sample_query(scene, category, direction, &mut rng)?;
    sample_from_query(scene, &q, seed)
}

pub fn sample_from_query(scene: &Scene, q: &Query, seed: u64) -> Result<AlignmentSample, DatagenError> {
    Ok(AlignmentSample {
        category: q.category(),
        direction: q.direction(),
        image_ref: image_ref(scene),
        prompt: prompt(scene, q)?,
        response: answer(scene, q)?,
        provenance: Provenance { scene_id: scene.id.clone(), seed },
    })
}

pub fn image_ref(scene: &Scene) -> String {
    format!("images/{}.png", scene.id)
}

/// Feeds a generation sample's response back through the matching
/// understanding query. `true` when the scene confirms it.
pub fn self_consistent(scene: &Scene, sample: &AlignmentSample) -> bool {
    if sample.direction != Direction::Generation {
        return true;
    }
    let points: Vec<NormPoint> = crate::model::find_points(&sample.response)
        .into_iter()
        .filter_map(|m| m.point.ok())
        .collect();
    if points.is_empty() {
        return false;
    }
    let ask = |q: Query| answer(scene, &q).ok();
    match sample.category {
        AlignCategory::ObjectUnderstanding => {
            let Some(name) = sample
                .response
                .strip_prefix("Detected ")
                .and_then(|r| r.split_once("(s):"))
                .map(|(n, _)| n.to_string())
            else {
                return false;
            };
            points.iter().all(|p| ask(Query::ObjectAt(*p)).as_deref() == Some(name.as_str()))
        }
        AlignCategory::Affordance => ask(Query::Navigable(points[0])).as_deref() == Some("yes"),
        AlignCategory::SpatialRelationship => {
            // "... located {phrase} the {reference}. The output ..."
            let Some(rest) = sample.prompt.strip_prefix("Given the image, point out the object located ") else {
                return false;
            };
            let Some(phrase) = t::RELATION_PHRASES.iter().find(|ph| rest.starts_with(&format!("{ph} the "))) else {
                return false;
            };
            let reference = rest[phrase.len() + 5..].split(". The output").next().unwrap_or_default();
            let Some(r) = scene
                .objects
                .iter()
                .find(|o| crate::model::display_category(&o.category) == reference && scene.is_category_unique(&o.category))
            else {
                return false;
            };
            let Some(rp) = object_point(scene, r) else { return false };
            object_at(scene, &points[0]).is_some_and(|o| o.id != r.id)
                && t::relation_phrase(&points[0], &rp) == Some(*phrase)
        }
        AlignCategory::SpatialCompatibility => {
            let Some(o) = scene.objects.iter().find(|o| {
                scene.is_category_unique(&o.category)
                    && sample.prompt.starts_with(&format!(
                        "Generate a collision-free location for the {}.",
                        crate::model::display_category(&o.category)
                    ))
            }) else {
                return false;
            };
            let Ok(env) = tabletop_env(scene) else { return false };
            let Some(from) = pick_point_for(&env, &o.id) else { return false };
            ask(Query::Collision { object: o.id.clone(), from, to: points[0] }).as_deref() == Some("no")
        }
    }
}
