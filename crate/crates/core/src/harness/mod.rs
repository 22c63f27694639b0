//! Closed-loop evaluation: planner protocol, response parsing, episode
//! and suite runners, distance gain and reports.

mod config;
mod episode;
mod external;
mod metrics;
mod parse;
mod planner;
mod protocol;
mod report;
mod suite;

pub use config::{HarnessConfig, DEFAULT_DG_CANDIDATES, DEFAULT_PLANNER_TIMEOUT_S};
pub use episode::{run_episode, EpisodeResult, EpisodeRow, StepLog};
pub use external::{HttpPlanner, SubprocessPlanner};
pub use metrics::{distance_gain, distance_gain_cells, dg_from_distances, DgError, DgTerms};
pub use parse::{parse_response, ParseFailure, ParsedResponse};
pub use planner::{
    EnvView, GreedyPlanner, OraclePlanner, Planner, PlannerError, PlannerSpec, RandomPlanner, ReplayPlanner,
};
pub use protocol::{
    decode_request, decode_response, encode_request, encode_response, PlannerRequest, PlannerResponse, ProtocolError,
    PROTOCOL_VERSION,
};
pub use report::{LevelSummary, MetricsReport, ReportConfig};
pub use suite::{
    episode_seed, run_suite, run_suite_with_logs, ManifestEntry, SuiteError, TaskManifest, MANIFEST_SCHEMA_VERSION,
};
