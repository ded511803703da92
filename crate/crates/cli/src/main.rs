use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use log::info;

use contour_vad::ingest::{generate_synthetic, load_ground_truth, load_manifest, save_ground_truth, save_manifest, IngestError, ShapeFamily};
use contour_vad::metrics::{evaluate, load_frame_mask, save_report, MetricsError};
use contour_vad::models::{Model, ModelKind};
use contour_vad::pipeline::{
    cluster, describe, extract, read_json, score, stage_seed, train, write_json, DescriptorKind, DescriptorSet,
    ExtractOutput,
};
use contour_vad::scoring::{load_scores, save_scores};
use contour_vad::shapecluster::{load_cluster_model, save_cluster_model};
use contour_vad::{run_pipeline, PipelineConfig, PipelineError};

#[derive(Parser)]
#[command(name = "contour-vad", version, about = "Contour-based video anomaly detection")]
struct Cli {
    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Pipeline configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Log progress (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic train/test split with ground truth.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        videos: Option<usize>,
        #[arg(long)]
        test_videos: Option<usize>,
        #[arg(long)]
        frames: Option<usize>,
        #[arg(long)]
        tracks: Option<usize>,
        #[arg(long)]
        anomaly_fraction: Option<f64>,
        /// ellipse-walker or polygon-walker
        #[arg(long)]
        family: Option<String>,
    },
    /// Trace mask contours and assemble tracks.
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 256)]
        points: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute radii or Shape Context descriptors for extracted tracks.
    Describe {
        /// radii or sc
        #[arg(long)]
        kind: String,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Self-label Shape Context descriptors.
    Cluster {
        #[arg(long)]
        descriptors: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Per-row labels (default: next to --out).
        #[arg(long)]
        labels_out: Option<PathBuf>,
    },
    /// Train one model.
    Train {
        /// vae, lae, tae, rrnn or crnn
        #[arg(long)]
        model: String,
        #[arg(long)]
        descriptors: PathBuf,
        /// Cluster labels of the descriptor rows (crnn only).
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Cluster model (crnn only).
        #[arg(long)]
        cluster: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score test descriptors with a trained model.
    Score {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        descriptors: PathBuf,
        #[arg(long)]
        cluster: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute frame AUC, RBDC and TBDC.
    Eval {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        frame_mask: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every stage with caching.
    Run {
        #[arg(long)]
        workdir: Option<PathBuf>,
        /// Use the default synthetic dataset when the config names no inputs.
        #[arg(long)]
        synth: bool,
    },
}

/// Invalid invocation or input that the user must fix.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct Usage(String);

fn usage(m: impl Into<String>) -> anyhow::Error {
    Usage(m.into()).into()
}

fn exit_code(e: &anyhow::Error) -> u8 {
    let validation = e.chain().any(|c| {
        c.is::<Usage>()
            || c.downcast_ref::<PipelineError>().is_some_and(PipelineError::is_validation)
            || matches!(
                c.downcast_ref::<IngestError>(),
                Some(IngestError::Validation { .. } | IngestError::Parse(_) | IngestError::Config(_))
            )
            || matches!(
                c.downcast_ref::<MetricsError>(),
                Some(
                    MetricsError::SingleClassLabels
                        | MetricsError::NoGtRegions
                        | MetricsError::NoGtTracks
                        | MetricsError::LengthMismatch(_)
                        | MetricsError::MissingVideo(_)
                )
            )
    });
    if validation {
        2
    } else {
        3
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

#[cfg(feature = "parallel")]
fn set_jobs(jobs: Option<usize>) -> Result<()> {
    if let Some(n) = jobs {
        if n == 0 {
            bail!(usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn set_jobs(_jobs: Option<usize>) -> Result<()> {
    Ok(())
}

fn parse_kind(s: &str) -> Result<ModelKind> {
    s.parse().map_err(usage)
}

fn run(cli: Cli) -> Result<()> {
    set_jobs(cli.jobs)?;
    let cfg = load_config(&cli)?;
    match cli.cmd {
        Cmd::Synth {
            out,
            videos,
            test_videos,
            frames,
            tracks,
            anomaly_fraction,
            family,
        } => {
            let mut s = cfg.synth.clone().unwrap_or_default();
            if let Some(seed) = cli.seed {
                s.seed = seed;
            }
            if let Some(v) = videos {
                s.n_videos = v;
            }
            if let Some(v) = test_videos {
                s.n_test_videos = Some(v);
            }
            if let Some(v) = frames {
                s.frames_per_video = v;
            }
            if let Some(v) = tracks {
                s.tracks_per_video = v;
            }
            if let Some(v) = anomaly_fraction {
                s.anomaly_fraction = v;
            }
            if let Some(f) = family {
                s.shape_family = serde_json::from_value::<ShapeFamily>(serde_json::Value::String(f.clone()))
                    .map_err(|_| usage(format!("unknown shape family '{f}'")))?;
            }
            let ds = generate_synthetic(&s)?;
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            save_manifest(out.join("train.json"), &ds.train)?;
            save_manifest(out.join("test.json"), &ds.test)?;
            save_ground_truth(out.join("gt.json"), &ds.gt)?;
            println!("wrote train.json, test.json and gt.json to {}", out.display());
        }
        Cmd::Extract { manifest, points, out } => {
            let m = load_manifest(&manifest)?;
            let ex = extract(&m, points)?;
            info!("{:?}", ex.stats);
            write_json(&out, &ex)?;
        }
        Cmd::Describe { kind, input, out } => {
            let kind: DescriptorKind = kind.parse().map_err(usage)?;
            let ex: ExtractOutput = read_json(&input)?;
            describe(&ex, kind)?.save(&out)?;
        }
        Cmd::Cluster {
            descriptors,
            out,
            labels_out,
        } => {
            let set = DescriptorSet::load(&descriptors)?;
            let (labels, model, report) = cluster(&set, &cfg.cluster, stage_seed(cfg.seed, "cluster"))?;
            save_cluster_model(&out, &model)?;
            write_json(&labels_out.unwrap_or_else(|| out.with_extension("labels.json")), &labels)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Cmd::Train {
            model,
            descriptors,
            labels,
            cluster,
            out,
        } => {
            let kind = parse_kind(&model)?;
            let set = DescriptorSet::load(&descriptors)?;
            let seed = stage_seed(cfg.seed, &format!("train:{kind}"));
            let (m, report) = if kind == ModelKind::Crnn {
                let (Some(lp), Some(cp)) = (labels, cluster) else {
                    bail!(usage("crnn training needs --labels and --cluster"));
                };
                let labels: Vec<usize> = read_json(&lp)?;
                let k = load_cluster_model(&cp)?.n_clusters();
                train(kind, &set, Some((&labels, k)), &cfg.models, seed)?
            } else {
                train(kind, &set, None, &cfg.models, seed)?
            };
            m.save(&out)?;
            if let Some(l) = report.loss_trace.last() {
                println!("final training loss {l:.6}");
            }
        }
        Cmd::Score {
            model,
            descriptors,
            cluster,
            out,
        } => {
            let m = Model::load(&model)?;
            let set = DescriptorSet::load(&descriptors)?;
            let cl = match (m.kind(), cluster) {
                (ModelKind::Crnn, None) => bail!(usage("crnn scoring needs --cluster")),
                (_, c) => c.map(|p| load_cluster_model(&p)).transpose()?,
            };
            let scores = score(&m, &set, cl.as_ref(), &cfg.scoring)?;
            save_scores(&out, &scores)?;
        }
        Cmd::Eval {
            scores,
            gt,
            frame_mask,
            out,
        } => {
            let s = load_scores(&scores)?;
            let g = load_ground_truth(&gt)?;
            let mask = frame_mask.as_deref().map(load_frame_mask).transpose()?;
            let report = evaluate(&s, &g, &cfg.metrics, mask.as_ref())?;
            save_report(&out, &report)?;
            println!("auc {:.4}  rbdc {:.4}  tbdc {:.4}", report.auc, report.rbdc, report.tbdc);
        }
        Cmd::Run { workdir, synth } => {
            let mut cfg = cfg;
            if let Some(w) = workdir {
                cfg.workdir = w;
            }
            if synth && cfg.synth.is_none() {
                cfg.synth = Some(Default::default());
            }
            let report = run_pipeline(&cfg)?;
            for s in &report.stages {
                let how = if s.cache_hit { "cached" } else { "ran" };
                println!("{:<12} {how:<6} {:>7.1}s", s.name, s.seconds);
            }
            for (model, m) in &report.metrics {
                println!("{model:<5} auc {:.4}  rbdc {:.4}  tbdc {:.4}", m.auc, m.rbdc, m.tbdc);
            }
            println!("metrics written to {}", report.workdir.join("metrics.json").display());
        }
    }
    Ok(())
}
