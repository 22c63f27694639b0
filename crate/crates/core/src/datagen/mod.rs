//! Training-data generators: coordinate alignment samples in both
//! directions and rationale/action samples for closed-loop tasks.

mod align;
mod cot;
mod dataset;
mod leakage;
mod mix;
mod provider;
pub mod templates;

use thiserror::Error;

use crate::nav::NavError;
use crate::render::RenderError;
use crate::tabletop::TabletopError;

pub use align::{
    answer, gen_alignment, image_ref, is_navigable, object_at, object_point, prompt, sample_from_query, sample_query,
    self_consistent, AlignCategory, AlignmentSample, Direction, Provenance, Query,
};
pub use cot::{
    gen_cot, manip_cot_requests, nav_cot_requests, CoTConfig, CoTOutcome, CoTProvenance, CoTRequest, CoTSample,
    RejectReason, Rejection, MAX_PROVIDER_ATTEMPTS,
};
pub use dataset::{
    generate_alignment_set, generate_cot_set, manifest_path, write_alignment_dataset, write_cot_dataset, write_dataset,
    AlignmentSet, CoTSet, DatasetSample, Manifest, DATASET_SCHEMA_VERSION,
};
pub use leakage::{leakage_check, LeakageVerdict, DEFAULT_LEAK_EPS};
pub use mix::{AlignmentMix, CoTMix, CoTCell, TaskFamily};
pub use provider::{
    CannedProvider, ChatCompletionConfig, ChatCompletionProvider, ProviderError, RationaleProvider, TemplateProvider,
    ENV_PROVIDER_KEY, ENV_PROVIDER_MODEL, ENV_PROVIDER_URL,
};

#[derive(Debug, Error)]
pub enum DatagenError {
    #[error("{category:?} samples cannot be drawn from scene {scene}")]
    UnsupportedCategory { category: AlignCategory, scene: String },
    #[error("no valid sample: {0}")]
    Unsupported(String),
    #[error("provider failed after {attempts} attempt(s): {message}")]
    Provider { attempts: u32, message: String },
    #[error("requested {requested} samples but only {available} could be generated")]
    Capacity { requested: usize, available: usize },
    #[error("invalid mix: {0}")]
    Mix(String),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Nav(#[from] NavError),
    #[error(transparent)]
    Tabletop(#[from] TabletopError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
