use std::collections::BTreeMap;

use crate::model::{predicate_holds, LayoutPredicate, ObjectId, Reference, Relation, Scene};

use super::env::ManipAction;

/// Clearance added between footprints by the fixed-offset rule.
const GREEDY_GAP_M: f64 = 0.03;

/// Rule-based placement: for the first unsatisfied predicate, pick the
/// subject at its center and set it down at a fixed offset from the
/// reference. No collision checks and no knowledge of stacks. Each subject
/// is attempted at most twice before the planner gives up.
#[derive(Debug, Default, Clone)]
pub struct GreedyPlacer {
    attempts: BTreeMap<ObjectId, u32>,
}

impl GreedyPlacer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn next_action(&mut self, scene: &Scene, predicates: &[LayoutPredicate]) -> ManipAction {
        let cam = scene.camera();
        for p in predicates {
            if predicate_holds(scene, p).unwrap_or(true) {
                continue;
            }
            let tries = self.attempts.entry(p.subject.clone()).or_default();
            if *tries >= 2 {
                continue;
            }
            let Some(s) = scene.object(&p.subject) else { continue };
            *tries += 1;
            let rs = s.footprint.bounding_radius();
            let target = match &p.reference {
                Reference::Region(r) => cam.to_world_xy(&r.anchor()),
                Reference::Object(id) => {
                    let Some(r) = scene.object(id) else { continue };
                    let off = rs + r.footprint.bounding_radius() + GREEDY_GAP_M;
                    match p.relation {
                        Relation::LeftOf => [r.pose.x - off, s.pose.y],
                        Relation::RightOf => [r.pose.x + off, s.pose.y],
                        Relation::InFrontOf => [s.pose.x, r.pose.y - off],
                        Relation::Behind => [s.pose.x, r.pose.y + off],
                        Relation::Near | Relation::OnRegion => {
                            let (dx, dy) = (s.pose.x - r.pose.x, s.pose.y - r.pose.y);
                            let n = dx.hypot(dy).max(1e-9);
                            let reach = rs + r.footprint.bounding_radius() + p.threshold.unwrap_or(0.0) / 2.0;
                            [r.pose.x + dx / n * reach, r.pose.y + dy / n * reach]
                        }
                    }
                }
            };
            let b = &scene.bounds;
            let x = target[0].clamp(b.min_x + rs, b.max_x() - rs);
            let y = target[1].clamp(b.min_y + rs, b.max_y() - rs);
            let pick = cam.to_norm(&s.pose).map(|p| p.quantized());
            let place = cam.to_norm_xy(x, y).map(|p| p.quantized());
            if let (Ok(pick), Ok(place)) = (pick, place) {
                return ManipAction::Move { pick, place };
            }
        }
        ManipAction::Done
    }
}

/// Convenience for a stateless single decision.
pub fn greedy_action(scene: &Scene, predicates: &[LayoutPredicate]) -> ManipAction {
    GreedyPlacer::new().next_action(scene, predicates)
}
