use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::HarnessConfig;
use super::episode::{run_episode, EpisodeResult, EpisodeRow};
use super::planner::PlannerSpec;
use super::report::MetricsReport;
use crate::model::{Scene, TaskKind, TaskSpec};
use crate::nav::{generate_nav_task, FloorplanParams, NavParams};
use crate::render::{annotate, render, AnnotationSpec, Style, Viewport};
use crate::rng::{derive_seed, derive_seed_str};
use crate::tabletop::generate_manip_task;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub episode_id: String,
    /// Seed the task was generated from.
    pub seed: u64,
    pub scene: Scene,
    pub task: TaskSpec,
}

/// A fixed list of evaluation episodes of one task kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskManifest {
    pub schema_version: u32,
    pub kind: TaskKind,
    pub episodes: Vec<ManifestEntry>,
}

#[derive(Debug, thiserror::Error)]
pub enum SuiteError {
    #[error("task generation failed for {episode_id}: {message}")]
    Generation { episode_id: String, message: String },
    #[error("manifest mixes task kinds")]
    MixedKinds,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl TaskManifest {
    /// `per_level` tasks for each level, seeded from `master_seed`.
    pub fn generate(
        kind: TaskKind,
        levels: &[u8],
        per_level: usize,
        master_seed: u64,
        floorplan: &FloorplanParams,
        nav: &NavParams,
    ) -> Result<Self, SuiteError> {
        let jobs: Vec<(u8, usize)> = levels.iter().flat_map(|l| (0..per_level).map(move |i| (*l, i))).collect();
        let episodes = jobs
            .into_par_iter()
            .map(|(level, i)| {
                let episode_id = format!("{kind}-l{level}-{i:04}");
                let seed = derive_seed(master_seed, derive_seed_str(0, &episode_id));
                let fail = |m: String| SuiteError::Generation { episode_id: episode_id.clone(), message: m };
                let (scene, task) = match kind {
                    TaskKind::Nav => {
                        let t = generate_nav_task(level, seed, floorplan, nav).map_err(|e| fail(e.to_string()))?;
                        (t.scene, t.task)
                    }
                    TaskKind::Manip => {
                        let t = generate_manip_task(level, seed).map_err(|e| fail(e.to_string()))?;
                        (t.scene, t.task)
                    }
                };
                Ok(ManifestEntry { episode_id, seed, scene, task })
            })
            .collect::<Result<Vec<_>, SuiteError>>()?;
        Ok(Self { schema_version: MANIFEST_SCHEMA_VERSION, kind, episodes })
    }

    pub fn load(path: &Path) -> Result<Self, SuiteError> {
        let m: Self = serde_json::from_str(&fs::read_to_string(path)?)?;
        if m.episodes.iter().any(|e| e.task.kind != m.kind) {
            return Err(SuiteError::MixedKinds);
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<(), SuiteError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, serde_json::to_string(self)? + "\n")?;
        Ok(())
    }
}

/// Seed of one episode under a master seed; independent of run order.
pub fn episode_seed(master_seed: u64, episode_id: &str) -> u64 {
    derive_seed_str(master_seed, episode_id)
}

fn run_one(entry: &ManifestEntry, planner: &PlannerSpec, config: &HarnessConfig, master_seed: u64) -> EpisodeResult {
    let seed = episode_seed(master_seed, &entry.episode_id);
    let mut p = match planner.create(derive_seed(seed, u64::MAX), config.planner_timeout()) {
        Ok(p) => p,
        Err(e) => {
            return EpisodeResult {
                row: EpisodeRow {
                    episode_id: entry.episode_id.clone(),
                    kind: entry.task.kind,
                    level: entry.task.level.level,
                    seed,
                    success: false,
                    collision: false,
                    steps: 0,
                    decisions: 0,
                    mean_dg: None,
                    dg_steps: 0,
                    dg_penalties: 0,
                    parse_failures: 0,
                    failure: Some(format!("planner start: {e}")),
                },
                steps: Vec::new(),
                trajectory: Vec::new(),
            }
        }
    };
    let result = run_episode(entry, p.as_mut(), config, seed);
    if let Some(dir) = &config.trajectory_dir {
        if let Err(e) = write_trajectory_png(dir, entry, &result, config) {
            log::warn!("trajectory plot for {} failed: {e}", entry.episode_id);
        }
    }
    result
}

fn write_trajectory_png(
    dir: &Path,
    entry: &ManifestEntry,
    result: &EpisodeResult,
    config: &HarnessConfig,
) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut img = render(&entry.scene, Viewport::Full, &config.render);
    if result.trajectory.len() >= 2 {
        if let Ok(spec) = AnnotationSpec::trajectory(result.trajectory.clone(), Style { color: [230, 20, 20], width: 2 }) {
            img = annotate(&img, &spec);
        }
    }
    fs::write(dir.join(format!("{}.png", entry.episode_id)), img.to_png())
}

/// Runs every episode and keeps the per-step logs.
pub fn run_suite_with_logs(
    manifest: &TaskManifest,
    planner: &PlannerSpec,
    config: &HarnessConfig,
    parallelism: usize,
    master_seed: u64,
) -> (MetricsReport, Vec<EpisodeResult>) {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .expect("thread pool");
    let results: Vec<EpisodeResult> = pool.install(|| {
        manifest
            .episodes
            .par_iter()
            .map(|e| run_one(e, planner, config, master_seed))
            .collect()
    });
    let rows = results.iter().map(|r| r.row.clone()).collect();
    let report = MetricsReport::build(manifest.kind, rows, &planner.name(), config, master_seed);
    (report, results)
}

/// Runs every episode of the manifest, up to `parallelism` at a time. The
/// report does not depend on `parallelism`.
pub fn run_suite(
    manifest: &TaskManifest,
    planner: &PlannerSpec,
    config: &HarnessConfig,
    parallelism: usize,
    master_seed: u64,
) -> MetricsReport {
    run_suite_with_logs(manifest, planner, config, parallelism, master_seed).0
}
