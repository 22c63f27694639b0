use std::collections::BTreeSet;

use rand::Rng as _;

use super::env::{ManipAction, PlacementVerdict, StepStatus, TabletopConfig, TabletopEnv};
use super::TabletopError;
use crate::model::{
    predicate_holds, LayoutPredicate, ModelError, MoveAction, NormPoint, ObjectId, Reference, Relation, Scene,
};
use crate::rng::{derive_seed, derive_seed_str, seeded, Rng};

/// Rejection-sampling budget per object placement.
pub const MAX_SAMPLES_PER_OBJECT: usize = 10_000;
const RESTARTS: u64 = 10;

/// Finds a collision-free move sequence that reaches the goal layout.
///
/// Objects that need to move are placed one at a time on the 0.01 lattice,
/// each sample checked against the predicates whose other party has already
/// settled. Occupants of a supporter that must move are cleared first. The
/// plan is replayed on a fresh environment before it is returned.
pub fn oracle_solve(
    scene: &Scene,
    predicates: &[LayoutPredicate],
    config: &TabletopConfig,
    seed: u64,
) -> Result<Vec<MoveAction>, TabletopError> {
    for p in predicates {
        predicate_holds(scene, p)?;
    }
    let env = TabletopEnv::new(scene.clone(), *config)?;
    if env.evaluate_goal(predicates)? {
        return Ok(Vec::new());
    }
    let mut last_err = TabletopError::OracleFailure("no attempt made".into());
    for attempt in 0..RESTARTS {
        let mut rng = seeded(derive_seed(seed, attempt));
        match attempt_plan(&env, predicates, &mut rng) {
            Ok(plan) => match verify_plan(scene, predicates, config, &plan) {
                Ok(()) => return Ok(plan),
                Err(e) => last_err = e,
            },
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}

/// Sampling seed tied to the scene, so generation-time certification and
/// later oracle runs see the same plan.
pub fn scene_oracle_seed(scene: &Scene) -> u64 {
    derive_seed_str(0, &scene.id)
}

/// `oracle_solve` with the scene's own seed.
pub fn oracle_plan(
    scene: &Scene,
    predicates: &[LayoutPredicate],
    config: &TabletopConfig,
) -> Result<Vec<MoveAction>, TabletopError> {
    oracle_solve(scene, predicates, config, scene_oracle_seed(scene))
}

/// Replays a plan and checks that it reaches the goal without a collision.
pub fn verify_plan(
    scene: &Scene,
    predicates: &[LayoutPredicate],
    config: &TabletopConfig,
    plan: &[MoveAction],
) -> Result<(), TabletopError> {
    let mut env = TabletopEnv::new(scene.clone(), *config)?;
    if plan.len() > env.max_moves() {
        return Err(TabletopError::OracleFailure(format!(
            "plan needs {} moves, budget is {}",
            plan.len(),
            env.max_moves()
        )));
    }
    for (i, m) in plan.iter().enumerate() {
        let out = env.step(&ManipAction::from(*m))?;
        if out.status != StepStatus::Ok {
            return Err(TabletopError::OracleFailure(format!("move {i} ended with {:?}", out.status)));
        }
    }
    if env.succeeded(predicates)? {
        Ok(())
    } else {
        Err(TabletopError::OracleFailure("replayed plan misses the goal".into()))
    }
}

fn attempt_plan(
    start: &TabletopEnv,
    predicates: &[LayoutPredicate],
    rng: &mut Rng,
) -> Result<Vec<MoveAction>, TabletopError> {
    let scene = start.scene();
    let mut pending: Vec<ObjectId> = Vec::new();
    for p in predicates {
        if !predicate_holds(scene, p)? && !pending.contains(&p.subject) {
            pending.push(p.subject.clone());
        }
    }
    for id in &pending {
        let o = scene.object(id).ok_or_else(|| ModelError::UnknownReference(id.to_string()))?;
        if !o.movable {
            return Err(TabletopError::OracleFailure(format!("{id} must move but is fixed")));
        }
    }
    order_by_dependencies(&mut pending, predicates);

    let mut env = start.clone();
    let mut plan = Vec::new();
    let mut pending_set: BTreeSet<ObjectId> = pending.iter().cloned().collect();

    // clear stacks under anything that has to move, deepest occupant first
    let mut clear: Vec<ObjectId> = Vec::new();
    for id in &pending {
        collect_occupants(env.scene(), id, &mut clear);
    }
    for occ in clear {
        if !pending_set.contains(&occ) && !env.scene().object(&occ).is_some_and(|o| o.stacked_on.is_some()) {
            continue;
        }
        // an occupant that is itself pending and whose constraints are all
        // settled goes straight to its final spot
        let is_pending = pending_set.contains(&occ);
        let settles = is_pending && constraints_settled(&occ, predicates, &pending_set);
        let place = sample_placement(&env, &occ, predicates, &pending_set, settles || !is_pending, rng)?;
        push_move(&mut env, &mut plan, &occ, place)?;
        if settles {
            pending_set.remove(&occ);
        }
    }

    for id in pending {
        if !pending_set.contains(&id) {
            continue;
        }
        pending_set.remove(&id);
        let place = sample_placement(&env, &id, predicates, &pending_set, true, rng)?;
        push_move(&mut env, &mut plan, &id, place)?;
    }
    Ok(plan)
}

/// Places referenced objects before the objects that refer to them.
fn order_by_dependencies(pending: &mut Vec<ObjectId>, predicates: &[LayoutPredicate]) {
    let mut ordered: Vec<ObjectId> = Vec::with_capacity(pending.len());
    let mut remaining = pending.clone();
    while !remaining.is_empty() {
        let ready = remaining.iter().position(|id| {
            predicates.iter().filter(|p| &p.subject == id).all(|p| match p.reference_object() {
                Some(r) => r == id || !remaining.contains(r),
                None => true,
            })
        });
        // a dependency cycle falls back to the original order
        let i = ready.unwrap_or(0);
        ordered.push(remaining.remove(i));
    }
    *pending = ordered;
}

fn collect_occupants(scene: &Scene, id: &ObjectId, out: &mut Vec<ObjectId>) {
    for occ in scene.occupants_of(id) {
        collect_occupants(scene, &occ.id, out);
        if !out.contains(&occ.id) {
            out.push(occ.id.clone());
        }
    }
}

fn constraints_settled(id: &ObjectId, predicates: &[LayoutPredicate], pending: &BTreeSet<ObjectId>) -> bool {
    predicates
        .iter()
        .filter(|p| &p.subject == id)
        .all(|p| p.reference_object().is_none_or(|r| r == id || !pending.contains(r)))
}

fn push_move(
    env: &mut TabletopEnv,
    plan: &mut Vec<MoveAction>,
    id: &ObjectId,
    place: NormPoint,
) -> Result<(), TabletopError> {
    let pick = pick_point_for(env, id)
        .ok_or_else(|| TabletopError::OracleFailure(format!("no pick point selects {id}")))?;
    let m = MoveAction { pick, place };
    let out = env.step(&ManipAction::from(m))?;
    if out.status != StepStatus::Ok || out.moved_id.as_ref() != Some(id) {
        return Err(TabletopError::OracleFailure(format!("move of {id} ended with {:?}", out.status)));
    }
    plan.push(m);
    Ok(())
}

/// A lattice point that `resolve_pick` maps to `id`, preferring the center.
pub fn pick_point_for(env: &TabletopEnv, id: &ObjectId) -> Option<NormPoint> {
    let scene = env.scene();
    let obj = scene.object(id)?;
    let cam = scene.camera();
    let center = cam.to_norm(&obj.pose).ok()?.quantized();
    if env.resolve_pick(&center).as_ref() == Some(id) {
        return Some(center);
    }
    let [x0, y0, x1, y1] = obj.shape().bbox();
    let lo = cam.to_norm_xy(x0.max(scene.bounds.min_x), y0.max(scene.bounds.min_y)).ok()?;
    let hi = cam.to_norm_xy(x1.min(scene.bounds.max_x()), y1.min(scene.bounds.max_y())).ok()?;
    let (c0, c1) = ((lo.x() * 100.0).floor() as i64, (hi.x() * 100.0).ceil() as i64);
    let (r0, r1) = ((lo.y() * 100.0).floor() as i64, (hi.y() * 100.0).ceil() as i64);
    let mut candidates: Vec<NormPoint> = (r0..=r1)
        .flat_map(|r| (c0..=c1).map(move |c| (c, r)))
        .filter_map(|(c, r)| NormPoint::new(c as f64 / 100.0, r as f64 / 100.0).ok())
        .collect();
    candidates.sort_by(|a, b| a.distance(&center).total_cmp(&b.distance(&center)));
    candidates.into_iter().find(|p| env.resolve_pick(p).as_ref() == Some(id))
}

fn sample_placement(
    env: &TabletopEnv,
    id: &ObjectId,
    predicates: &[LayoutPredicate],
    pending: &BTreeSet<ObjectId>,
    enforce_own: bool,
    rng: &mut Rng,
) -> Result<NormPoint, TabletopError> {
    let scene = env.scene();
    let cam = scene.camera();
    let obj = scene.object(id).expect("pending ids exist");
    // predicates touching `id` whose other party will not move again
    let active: Vec<&LayoutPredicate> = predicates
        .iter()
        .filter(|p| {
            let other_settled = |o: &ObjectId| o == id || !pending.contains(o);
            if &p.subject == id {
                enforce_own && p.reference_object().is_none_or(other_settled)
            } else {
                p.reference_object() == Some(id) && other_settled(&p.subject)
            }
        })
        .collect();
    let anchor = active
        .iter()
        .find(|p| &p.subject == id && matches!(p.relation, Relation::Near | Relation::OnRegion))
        .map(|p| match &p.reference {
            Reference::Object(r) => {
                let o = scene.object(r).expect("validated");
                let reach = o.footprint.bounding_radius() + obj.footprint.bounding_radius() + p.threshold.unwrap_or(0.0);
                (cam.to_norm(&o.pose).expect("in bounds"), reach / cam.scale()[0])
            }
            Reference::Region(r) => (r.anchor(), p.threshold.unwrap_or(0.0) / cam.scale()[0]),
        });

    let mut probe = scene.clone();
    for _ in 0..MAX_SAMPLES_PER_OBJECT {
        let candidate = match anchor {
            Some((a, reach)) if rng.random_bool(0.8) => {
                let r = reach * rng.random::<f64>().sqrt();
                let t = rng.random_range(0.0..std::f64::consts::TAU);
                NormPoint::clamped(a.x() + r * t.cos(), a.y() + r * t.sin())
            }
            _ => NormPoint::clamped(rng.random(), rng.random()),
        }
        .quantized();
        if env.check_placement(id, &candidate)? != PlacementVerdict::Clear {
            continue;
        }
        let [x, y] = cam.to_world_xy(&candidate);
        let o = probe.object_mut(id).expect("exists");
        o.pose = o.pose.with_position(x, y);
        o.stacked_on = None;
        let mut ok = true;
        for p in &active {
            if !predicate_holds(&probe, p)? {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(candidate);
        }
    }
    Err(TabletopError::OracleFailure(format!(
        "no placement for {id} in {MAX_SAMPLES_PER_OBJECT} samples"
    )))
}
