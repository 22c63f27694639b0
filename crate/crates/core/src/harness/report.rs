use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::HarnessConfig;
use super::episode::EpisodeRow;
use crate::model::TaskKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub planner: String,
    pub master_seed: u64,
    pub dg_candidates: usize,
    pub detection_range_m: f64,
    pub step_budget: u32,
    pub moves_per_object: usize,
}

/// Aggregates over one level, or over all episodes when `level` is `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: Option<u8>,
    pub episodes: usize,
    pub success_rate: f64,
    /// Manipulation only.
    pub collision_rate: Option<f64>,
    /// Navigation only: mean over episodes of their mean DG.
    pub mean_dg: Option<f64>,
    pub mean_steps: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub task_kind: TaskKind,
    pub config: ReportConfig,
    pub rows: Vec<EpisodeRow>,
    pub levels: Vec<LevelSummary>,
    pub overall: LevelSummary,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut s, mut n) = (0.0, 0usize);
    for x in xs {
        s += x;
        n += 1;
    }
    (n > 0).then(|| s / n as f64)
}

fn summarize(kind: TaskKind, level: Option<u8>, rows: &[&EpisodeRow]) -> LevelSummary {
    let n = rows.len();
    let frac = |f: &dyn Fn(&EpisodeRow) -> bool| if n == 0 { 0.0 } else { rows.iter().filter(|r| f(r)).count() as f64 / n as f64 };
    LevelSummary {
        level,
        episodes: n,
        success_rate: frac(&|r| r.success),
        collision_rate: (kind == TaskKind::Manip).then(|| frac(&|r| r.collision)),
        mean_dg: if kind == TaskKind::Nav { mean(rows.iter().filter_map(|r| r.mean_dg)) } else { None },
        mean_steps: mean(rows.iter().map(|r| r.steps as f64)).unwrap_or(0.0),
        failures: rows.iter().filter(|r| r.failure.is_some()).count(),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

impl MetricsReport {
    pub fn build(kind: TaskKind, rows: Vec<EpisodeRow>, planner: &str, config: &HarnessConfig, master_seed: u64) -> Self {
        let mut by_level: BTreeMap<u8, Vec<&EpisodeRow>> = BTreeMap::new();
        for r in &rows {
            by_level.entry(r.level).or_default().push(r);
        }
        let levels = by_level.iter().map(|(l, rs)| summarize(kind, Some(*l), rs)).collect();
        let all: Vec<&EpisodeRow> = rows.iter().collect();
        let overall = summarize(kind, None, &all);
        Self {
            task_kind: kind,
            config: ReportConfig {
                planner: planner.to_string(),
                master_seed,
                dg_candidates: config.dg_candidates,
                detection_range_m: config.nav.detection_range_m,
                step_budget: config.nav.step_budget,
                moves_per_object: config.tabletop.moves_per_object,
            },
            rows,
            levels,
            overall,
        }
    }

    /// One line per episode.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        match self.task_kind {
            TaskKind::Nav => {
                s.push_str("episode_id,level,seed,success,steps,decisions,mean_dg,dg_steps,dg_penalties,parse_failures,failure\n");
                for r in &self.rows {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{},{},{},{},{},{}",
                        csv_field(&r.episode_id),
                        r.level,
                        r.seed,
                        r.success as u8,
                        r.steps,
                        r.decisions,
                        opt(r.mean_dg),
                        r.dg_steps,
                        r.dg_penalties,
                        r.parse_failures,
                        csv_field(r.failure.as_deref().unwrap_or(""))
                    );
                }
            }
            TaskKind::Manip => {
                s.push_str("episode_id,level,seed,success,collision,moves,decisions,parse_failures,failure\n");
                for r in &self.rows {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{},{},{},{}",
                        csv_field(&r.episode_id),
                        r.level,
                        r.seed,
                        r.success as u8,
                        r.collision as u8,
                        r.steps,
                        r.decisions,
                        r.parse_failures,
                        csv_field(r.failure.as_deref().unwrap_or(""))
                    );
                }
            }
        }
        s
    }

    /// One line per level plus an `all` line.
    pub fn summary_csv(&self) -> String {
        let mut s = String::from("level,episodes,success_rate,collision_rate,mean_dg,mean_steps,failures\n");
        for l in self.levels.iter().chain(std::iter::once(&self.overall)) {
            let _ = writeln!(
                s,
                "{},{},{:.6},{},{},{:.6},{}",
                l.level.map(|v| v.to_string()).unwrap_or_else(|| "all".into()),
                l.episodes,
                l.success_rate,
                opt(l.collision_rate),
                opt(l.mean_dg),
                l.mean_steps,
                l.failures
            );
        }
        s
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let kind = match self.task_kind {
            TaskKind::Nav => "Navigation",
            TaskKind::Manip => "Manipulation",
        };
        let _ = writeln!(s, "# {kind} results: {}\n", self.config.planner);
        let c = &self.config;
        let _ = match self.task_kind {
            TaskKind::Nav => writeln!(
                s,
                "master seed {}, {} episodes, DG candidates {}, detection range {} m, step budget {}\n",
                c.master_seed, self.overall.episodes, c.dg_candidates, c.detection_range_m, c.step_budget
            ),
            TaskKind::Manip => writeln!(
                s,
                "master seed {}, {} episodes, {} moves per object\n",
                c.master_seed, self.overall.episodes, c.moves_per_object
            ),
        };
        let pct = |v: f64| format!("{:.2}%", v * 100.0);
        match self.task_kind {
            TaskKind::Nav => {
                s.push_str("| Level | Episodes | SR | Mean DG (m) | Mean steps | Failures |\n|---|---|---|---|---|---|\n");
                for l in self.levels.iter().chain(std::iter::once(&self.overall)) {
                    let _ = writeln!(
                        s,
                        "| {} | {} | {} | {} | {:.1} | {} |",
                        l.level.map(|v| v.to_string()).unwrap_or_else(|| "all".into()),
                        l.episodes,
                        pct(l.success_rate),
                        l.mean_dg.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into()),
                        l.mean_steps,
                        l.failures
                    );
                }
            }
            TaskKind::Manip => {
                s.push_str("| Level | Episodes | SR | CR | Mean moves | Failures |\n|---|---|---|---|---|---|\n");
                for l in self.levels.iter().chain(std::iter::once(&self.overall)) {
                    let _ = writeln!(
                        s,
                        "| {} | {} | {} | {} | {:.1} | {} |",
                        l.level.map(|v| v.to_string()).unwrap_or_else(|| "all".into()),
                        l.episodes,
                        pct(l.success_rate),
                        pct(l.collision_rate.unwrap_or(0.0)),
                        l.mean_steps,
                        l.failures
                    );
                }
            }
        }
        s
    }
}
