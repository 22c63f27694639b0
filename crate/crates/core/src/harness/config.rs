use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::datagen::DEFAULT_LEAK_EPS;
use crate::nav::NavParams;
use crate::render::RenderConfig;
use crate::tabletop::TabletopConfig;

pub const DEFAULT_DG_CANDIDATES: usize = 32;
pub const DEFAULT_PLANNER_TIMEOUT_S: f64 = 60.0;

/// Evaluation settings, read from a JSON file where every field is
/// optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarnessConfig {
    pub nav: NavParams,
    pub tabletop: TabletopConfig,
    /// Candidate actions sampled per step for distance gain.
    pub dg_candidates: usize,
    pub planner_timeout_s: f64,
    pub render: RenderConfig,
    pub leak_eps: f64,
    /// Text placed in every request's `exemplar_prefix`.
    pub exemplar_prefix: Option<String>,
    /// Where per-episode trajectory PNGs go, if anywhere.
    pub trajectory_dir: Option<PathBuf>,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            nav: NavParams::default(),
            tabletop: TabletopConfig::default(),
            dg_candidates: DEFAULT_DG_CANDIDATES,
            planner_timeout_s: DEFAULT_PLANNER_TIMEOUT_S,
            render: RenderConfig::default(),
            leak_eps: DEFAULT_LEAK_EPS,
            exemplar_prefix: None,
            trajectory_dir: None,
        }
    }
}

impl HarnessConfig {
    pub fn planner_timeout(&self) -> Duration {
        Duration::from_secs_f64(self.planner_timeout_s.max(0.001))
    }
}
