use serde::{Deserialize, Serialize};

use crate::model::{find_points, Action, PointError};

pub const DEFAULT_LEAK_EPS: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum LeakageVerdict {
    Pass,
    Fail { substring: String },
}

impl LeakageVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, LeakageVerdict::Pass)
    }
}

/// Flags the first point-shaped substring whose coordinates both sit
/// within `eps` of a point carried by `gt`. Points outside the unit square
/// are still compared by their raw values.
pub fn leakage_check(rationale: &str, gt: &Action, eps: f64) -> LeakageVerdict {
    let gt_points = gt.points();
    if gt_points.is_empty() {
        return LeakageVerdict::Pass;
    }
    let tol = eps.max(0.0) + 1e-9;
    for m in find_points(rationale) {
        let (x, y) = match m.point {
            Ok(p) => (p.x(), p.y()),
            Err(PointError::Range { x, y }) => (x, y),
            Err(PointError::Parse(_)) => continue,
        };
        if gt_points.iter().any(|g| (g.x() - x).abs() <= tol && (g.y() - y).abs() <= tol) {
            return LeakageVerdict::Fail { substring: m.text };
        }
    }
    LeakageVerdict::Pass
}
