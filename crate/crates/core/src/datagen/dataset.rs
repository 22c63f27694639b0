use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::align::{gen_alignment, image_ref, AlignCategory, AlignmentSample, Direction};
use super::cot::{gen_cot, CoTConfig, CoTOutcome, CoTRequest, CoTSample, RejectReason, Rejection};
use super::mix::{AlignmentMix, CoTMix, TaskFamily};
use super::provider::RationaleProvider;
use super::DatagenError;
use crate::model::Scene;
use crate::render::{render, RenderConfig, Viewport};
use crate::rng::{derive_seed, derive_seed_str};

pub const DATASET_SCHEMA_VERSION: u32 = 1;

/// Tries per alignment sample before the cell counts as exhausted.
const ALIGN_TRIES: u64 = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub kind: String,
    pub total: usize,
    pub requested: BTreeMap<String, usize>,
    pub counts: BTreeMap<String, usize>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub rejected: Vec<Rejection>,
}

/// A sample that can be bucketed and traced back to its seed.
pub trait DatasetSample: Serialize {
    fn cell(&self) -> String;
    fn seed(&self) -> u64;
}

impl DatasetSample for AlignmentSample {
    fn cell(&self) -> String {
        format!("{}/{}", self.category.as_str(), self.direction.as_str())
    }

    fn seed(&self) -> u64 {
        self.provenance.seed
    }
}

impl DatasetSample for CoTSample {
    fn cell(&self) -> String {
        let family = match self.task.kind {
            crate::model::TaskKind::Nav => TaskFamily::Navigation,
            crate::model::TaskKind::Manip => TaskFamily::Manipulation,
        };
        let r = if self.rationale.is_some() { "with_rationale" } else { "without_rationale" };
        format!("{}/{r}", family.as_str())
    }

    fn seed(&self) -> u64 {
        self.provenance.seed
    }
}

#[derive(Serialize)]
struct CoTRecord<'a> {
    #[serde(flatten)]
    sample: &'a CoTSample,
    response: String,
}

fn key_matches(cell: &str, key: &str) -> bool {
    cell == key || cell.strip_prefix(key).is_some_and(|r| r.starts_with('/'))
}

/// Path of the manifest written next to a dataset file.
pub fn manifest_path(path: &Path) -> PathBuf {
    path.with_extension("manifest.json")
}

/// Writes the first `n` samples of each requested key as JSON lines, in
/// the order they appear in `samples`, plus a manifest next to the file. A
/// key is either a full `a/b` cell or its first component.
pub fn write_dataset<S: DatasetSample>(
    samples: &[S],
    requested: &BTreeMap<String, usize>,
    kind: &str,
    rejected: &[Rejection],
    path: &Path,
) -> Result<Manifest, DatagenError> {
    let mut remaining = requested.clone();
    let mut chosen = Vec::new();
    for s in samples {
        let cell = s.cell();
        if let Some(left) = remaining.iter_mut().find(|(k, n)| **n > 0 && key_matches(&cell, k)).map(|(_, n)| n) {
            *left -= 1;
            chosen.push(s);
        }
    }
    let short: usize = remaining.values().sum();
    if short > 0 {
        let want: usize = requested.values().sum();
        return Err(DatagenError::Capacity { requested: want, available: want - short });
    }

    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut out = BufWriter::new(fs::File::create(path)?);
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut seeds = Vec::new();
    for s in &chosen {
        serde_json::to_writer(&mut out, s)?;
        out.write_all(b"\n")?;
        *counts.entry(s.cell()).or_default() += 1;
        seeds.push(s.seed());
    }
    out.flush()?;
    seeds.sort_unstable();
    seeds.dedup();

    let manifest = Manifest {
        schema_version: DATASET_SCHEMA_VERSION,
        kind: kind.to_string(),
        total: chosen.len(),
        requested: requested.clone(),
        counts,
        seeds,
        rejected: rejected.to_vec(),
    };
    fs::write(manifest_path(path), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}

#[derive(Debug, Clone, Default)]
pub struct AlignmentSet {
    pub samples: Vec<AlignmentSample>,
}

fn cell_stream(category: AlignCategory, direction: Direction) -> u64 {
    derive_seed_str(0, &format!("{}/{}", category.as_str(), direction.as_str()))
}

/// Draws the requested number of samples per cell. Sample `i` of a cell
/// starts on scene `i mod k` among the `k` scenes that support the category
/// and moves on to the next scene when a draw fails.
pub fn generate_alignment_set(scenes: &[Scene], mix: &AlignmentMix, seed: u64) -> Result<AlignmentSet, DatagenError> {
    let mut jobs = Vec::new();
    for (cat, dir, n) in mix.cells() {
        let eligible: Vec<&Scene> = scenes.iter().filter(|s| cat.supports(s.kind)).collect();
        if eligible.is_empty() {
            return Err(DatagenError::Capacity { requested: n, available: 0 });
        }
        for i in 0..n {
            jobs.push((cat, dir, i, eligible.clone()));
        }
    }
    let samples: Vec<Result<AlignmentSample, DatagenError>> = jobs
        .into_par_iter()
        .map(|(cat, dir, i, eligible)| {
            let base = derive_seed(derive_seed(seed, cell_stream(cat, dir)), i as u64);
            let mut last = None;
            for t in 0..ALIGN_TRIES {
                let scene = eligible[(i + t as usize) % eligible.len()];
                match gen_alignment(scene, cat, dir, derive_seed(base, t)) {
                    Ok(s) => return Ok(s),
                    Err(e) => last = Some(e),
                }
            }
            Err(last.expect("at least one try"))
        })
        .collect();
    let mut out = Vec::with_capacity(samples.len());
    let mut failed = 0;
    for s in samples {
        match s {
            Ok(s) => out.push(s),
            Err(e) => {
                log::warn!("alignment draw failed: {e}");
                failed += 1;
            }
        }
    }
    if failed > 0 {
        return Err(DatagenError::Capacity { requested: mix.total(), available: mix.total() - failed });
    }
    Ok(AlignmentSet { samples: out })
}

/// Renders each referenced scene once and writes `images/`, `samples.jsonl`
/// and `samples.manifest.json` under `dir`.
pub fn write_alignment_dataset(
    dir: &Path,
    scenes: &[Scene],
    set: &AlignmentSet,
    mix: &AlignmentMix,
    render_config: &RenderConfig,
) -> Result<Manifest, DatagenError> {
    fs::create_dir_all(dir.join("images"))?;
    let used: BTreeMap<&str, ()> = set.samples.iter().map(|s| (s.provenance.scene_id.as_str(), ())).collect();
    let to_render: Vec<&Scene> = scenes.iter().filter(|s| used.contains_key(s.id.as_str())).collect();
    to_render.par_iter().try_for_each(|s| -> Result<(), DatagenError> {
        fs::write(dir.join(image_ref(s)), render(s, Viewport::Full, render_config).to_png())?;
        Ok(())
    })?;
    let requested: BTreeMap<String, usize> = mix.clone().into();
    write_dataset(&set.samples, &requested, "alignment", &[], &dir.join("samples.jsonl"))
}

#[derive(Debug, Clone, Default)]
pub struct CoTSet {
    pub samples: Vec<CoTSample>,
    /// Image path relative to the dataset root, with its PNG bytes.
    pub images: BTreeMap<String, Vec<u8>>,
    pub rejected: Vec<Rejection>,
}

/// Builds rationale/action samples from oracle decisions of each family.
/// The first `with` requests of a family go to the provider and the next
/// `without` become action-only samples. Rejections stay in the set.
pub fn generate_cot_set(
    nav_requests: &[CoTRequest],
    manip_requests: &[CoTRequest],
    mix: &CoTMix,
    provider: &dyn RationaleProvider,
    config: &CoTConfig,
) -> Result<CoTSet, DatagenError> {
    let mut set = CoTSet::default();
    for (family, pool) in [(TaskFamily::Navigation, nav_requests), (TaskFamily::Manipulation, manip_requests)] {
        let with = mix.get(family, true);
        let without = mix.get(family, false);
        if with + without > pool.len() {
            return Err(DatagenError::Capacity { requested: with + without, available: pool.len() });
        }
        let outcomes: Vec<Result<CoTOutcome, DatagenError>> =
            pool[..with].par_iter().map(|r| gen_cot(r, provider, config)).collect();
        for (req, outcome) in pool[..with].iter().zip(outcomes) {
            match outcome {
                Ok(CoTOutcome::Accepted { sample, image_png, annotated_png, .. }) => {
                    set.images.insert(req.image_ref(), image_png);
                    set.images.insert(req.annotated_image_ref(), annotated_png);
                    set.samples.push(sample);
                }
                Ok(CoTOutcome::Rejected(r)) => set.rejected.push(r),
                Err(DatagenError::Provider { attempts, message }) => set.rejected.push(Rejection {
                    key: req.key.clone(),
                    reason: RejectReason::Provider,
                    substring: None,
                    message: Some(message),
                    attempts,
                }),
                Err(e) => return Err(e),
            }
        }
        let direct: Vec<(String, Vec<u8>, CoTSample)> = pool[with..with + without]
            .par_iter()
            .map(|r| (r.image_ref(), r.image.to_png(), r.direct_sample()))
            .collect();
        for (path, png, sample) in direct {
            set.images.insert(path, png);
            set.samples.push(sample);
        }
    }
    Ok(set)
}

/// Writes images, `samples.jsonl` (each line carries the serialized
/// `response` as well) and the manifest under `dir`. The manifest lists
/// every rejection next to the requested and produced counts.
pub fn write_cot_dataset(dir: &Path, set: &CoTSet, mix: &CoTMix) -> Result<Manifest, DatagenError> {
    fs::create_dir_all(dir.join("images"))?;
    for (path, png) in &set.images {
        fs::write(dir.join(path), png)?;
    }
    let mut requested: BTreeMap<String, usize> = mix.clone().into();
    requested.retain(|_, n| *n > 0);
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for s in &set.samples {
        *counts.entry(s.cell()).or_default() += 1;
    }
    let path = dir.join("samples.jsonl");
    let mut out = BufWriter::new(fs::File::create(&path)?);
    for s in &set.samples {
        serde_json::to_writer(&mut out, &CoTRecord { sample: s, response: s.response() })?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    let mut seeds: Vec<u64> = set.samples.iter().map(|s| s.provenance.seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    let manifest = Manifest {
        schema_version: DATASET_SCHEMA_VERSION,
        kind: "cot".into(),
        total: set.samples.len(),
        requested,
        counts,
        seeds,
        rejected: set.rejected.clone(),
    };
    fs::write(manifest_path(&path), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}
