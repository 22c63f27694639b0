use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use groundbench::datagen::{
    generate_alignment_set, generate_cot_set, manip_cot_requests, nav_cot_requests, write_alignment_dataset,
    write_cot_dataset, AlignmentMix, CoTConfig, CoTMix, ChatCompletionProvider, RationaleProvider, TaskFamily,
    TemplateProvider,
};
use groundbench::harness::{run_suite_with_logs, HarnessConfig, MetricsReport, PlannerSpec, TaskManifest};
use groundbench::model::TaskKind;
use groundbench::nav::{FloorplanParams, NavTask};
use groundbench::tabletop::ManipTask;

#[derive(Parser)]
#[command(name = "groundbench", version, about = "Scene generation, training data and closed-loop evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Nav,
    Manip,
}

impl From<Kind> for TaskKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Nav => TaskKind::Nav,
            Kind::Manip => TaskKind::Manip,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ProviderKind {
    /// Offline, deterministic rationales.
    Template,
    /// Chat-completions endpoint from GROUNDBENCH_PROVIDER_* variables.
    Http,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Markdown,
    Csv,
    Summary,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a task manifest (scenes plus task specs).
    GenScenes {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
        levels: Vec<u8>,
        #[arg(long, default_value_t = 25)]
        per_level: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write coordinate alignment samples drawn from manifest scenes.
    GenAlign {
        #[arg(long = "manifest", required = true)]
        manifests: Vec<PathBuf>,
        /// JSON object of `category` or `category/direction` to count.
        #[arg(long, conflicts_with = "preset")]
        mix: Option<PathBuf>,
        #[arg(long, default_value = "reference")]
        preset: String,
        #[arg(long, default_value_t = 1000)]
        total: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write rationale/action samples from oracle episodes.
    GenCot {
        #[arg(long)]
        nav_manifest: Option<PathBuf>,
        #[arg(long)]
        manip_manifest: Option<PathBuf>,
        /// JSON object of `family/with_rationale|without_rationale` to count.
        #[arg(long)]
        mix: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        total: usize,
        #[arg(long, value_enum, default_value = "template")]
        provider: ProviderKind,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a planner over a manifest and write reports.
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        /// oracle, random, greedy, http://HOST/PATH or "cmd:PROGRAM ARGS".
        #[arg(long, default_value = "oracle")]
        planner: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a saved report.
    Report {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "markdown")]
        format: ReportFormat,
    },
}

type Res<T> = Result<T, Box<dyn std::error::Error>>;

fn load_config(path: Option<&Path>) -> Res<HarnessConfig> {
    Ok(match path {
        Some(p) => serde_json::from_str(&fs::read_to_string(p)?)?,
        None => HarnessConfig::default(),
    })
}

fn run(cli: Cli) -> Res<()> {
    match cli.command {
        Cmd::GenScenes { kind, levels, per_level, seed, config, out } => {
            let cfg = load_config(config.as_deref())?;
            let m = TaskManifest::generate(kind.into(), &levels, per_level, seed, &FloorplanParams::default(), &cfg.nav)?;
            m.save(&out)?;
            println!("wrote {} episodes to {}", m.episodes.len(), out.display());
        }
        Cmd::GenAlign { manifests, mix, preset, total, seed, out } => {
            let mut scenes = Vec::new();
            for p in &manifests {
                scenes.extend(TaskManifest::load(p)?.episodes.into_iter().map(|e| e.scene));
            }
            let mix = match mix {
                Some(p) => serde_json::from_str::<AlignmentMix>(&fs::read_to_string(p)?)?,
                None => AlignmentMix::preset(&preset, total)?,
            };
            let set = generate_alignment_set(&scenes, &mix, seed)?;
            let m = write_alignment_dataset(&out, &scenes, &set, &mix, &Default::default())?;
            println!("wrote {} samples to {}", m.total, out.display());
        }
        Cmd::GenCot { nav_manifest, manip_manifest, mix, total, provider, config, out } => {
            if nav_manifest.is_none() && manip_manifest.is_none() {
                return Err("gen-cot needs --nav-manifest or --manip-manifest".into());
            }
            let cfg = load_config(config.as_deref())?;
            let mix = match mix {
                Some(p) => serde_json::from_str::<CoTMix>(&fs::read_to_string(p)?)?,
                None => default_cot_mix(total, nav_manifest.is_some(), manip_manifest.is_some()),
            };
            let mut nav_reqs = Vec::new();
            if let Some(p) = &nav_manifest {
                for e in TaskManifest::load(p)?.episodes {
                    let task = NavTask { scene: e.scene, task: e.task };
                    nav_reqs.extend(nav_cot_requests(&task, &cfg.nav, &cfg.render, e.seed, usize::MAX)?);
                }
            }
            let mut manip_reqs = Vec::new();
            if let Some(p) = &manip_manifest {
                for e in TaskManifest::load(p)?.episodes {
                    let task = ManipTask { scene: e.scene, task: e.task };
                    manip_reqs.extend(manip_cot_requests(&task, &cfg.tabletop, &cfg.render, e.seed)?);
                }
            }
            let provider: Box<dyn RationaleProvider> = match provider {
                ProviderKind::Template => Box::new(TemplateProvider),
                ProviderKind::Http => Box::new(ChatCompletionProvider::from_env()?),
            };
            let cot = CoTConfig { eps: cfg.leak_eps, ..CoTConfig::default() };
            let set = generate_cot_set(&nav_reqs, &manip_reqs, &mix, provider.as_ref(), &cot)?;
            let m = write_cot_dataset(&out, &set, &mix)?;
            println!("wrote {} samples ({} rejected) to {}", m.total, m.rejected.len(), out.display());
        }
        Cmd::Eval { manifest, planner, config, parallelism, seed, out } => {
            let cfg = load_config(config.as_deref())?;
            let spec = PlannerSpec::parse(&planner).ok_or_else(|| format!("unknown planner {planner:?}"))?;
            let m = TaskManifest::load(&manifest)?;
            let (report, episodes) = run_suite_with_logs(&m, &spec, &cfg, parallelism, seed);
            fs::create_dir_all(&out)?;
            fs::write(out.join("report.json"), serde_json::to_string_pretty(&report)? + "\n")?;
            fs::write(out.join("episodes.csv"), report.to_csv())?;
            fs::write(out.join("summary.csv"), report.summary_csv())?;
            fs::write(out.join("report.md"), report.to_markdown())?;
            let mut steps = String::new();
            for e in &episodes {
                steps.push_str(&serde_json::to_string(e)?);
                steps.push('\n');
            }
            fs::write(out.join("steps.jsonl"), steps)?;
            print!("{}", report.to_markdown());
        }
        Cmd::Report { input, format } => {
            let report: MetricsReport = serde_json::from_str(&fs::read_to_string(&input)?)?;
            match format {
                ReportFormat::Markdown => print!("{}", report.to_markdown()),
                ReportFormat::Csv => print!("{}", report.to_csv()),
                ReportFormat::Summary => print!("{}", report.summary_csv()),
            }
        }
    }
    Ok(())
}

/// Reference proportions over whichever families have a manifest.
fn default_cot_mix(total: usize, nav: bool, manip: bool) -> CoTMix {
    match (nav, manip) {
        (true, true) => CoTMix::reference_proportions(total),
        (true, false) => {
            let with = total * 15 / 65;
            CoTMix::new().with(TaskFamily::Navigation, true, with).with(TaskFamily::Navigation, false, total - with)
        }
        (false, true) => {
            let with = total / 2;
            CoTMix::new().with(TaskFamily::Manipulation, true, with).with(TaskFamily::Manipulation, false, total - with)
        }
        (false, false) => CoTMix::new(),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
