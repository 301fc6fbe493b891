//! The `lbsvm` command: `gen`, `train`, `predict`, `eval`.
//!
//! Every command that writes files also writes a `*.run.json` next to its main
//! output, echoing the fully resolved configuration.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::baselines::{avg_frame_accuracy, train_frame_svm, vote_video, FrameModel, Voting};
use crate::error::{Error, Result};
use crate::evalreport::{
    default_fractions, evaluate_with, monotonicity_report, prefix_curve_with, LatentClassifier,
    MonotonicityLabels, VideoClassifier, VotingClassifier, DEFAULT_MONOTONICITY_TOL,
};
use crate::featmap::{sample_frames_uniform, PoolingKind};
use crate::inference::{predict, LatentSpace};
use crate::model::{TrainedModel, Variant};
use crate::nrbm::{train, IterationLog, TrainOptions, TrainOutcome};
use crate::objective::{Hyperparams, Subsampling};
use crate::seqdata::{generate_synthetic, load_dataset, load_sequence, save_dataset, GeneratorConfig, Split};
use crate::subseq::SubseqSpec;

#[derive(Debug, Parser)]
#[command(name = "lbsvm", version, about = "Latent bi-constraint SVM for frame-sequence classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset directory.
    Gen(GenArgs),
    /// Train a model on the train split of a dataset.
    Train(TrainArgs),
    /// Classify one video file.
    Predict(PredictArgs),
    /// Evaluate a model on the test split of a dataset.
    Eval(EvalArgs),
}

#[derive(Debug, Args, Serialize)]
struct GenArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    classes: usize,
    #[arg(long, default_value_t = 16)]
    dim: usize,
    #[arg(long, default_value_t = 1)]
    train_per_class: usize,
    #[arg(long, default_value_t = 20)]
    test_per_class: usize,
    #[arg(long, default_value_t = 0.3)]
    bad_rate: f64,
    /// Per-frame Gaussian noise std.
    #[arg(long)]
    sigma: Option<f64>,
    /// Std of the per-coordinate class centre draw.
    #[arg(long)]
    center_scale: Option<f64>,
    /// Radius of each class trajectory.
    #[arg(long)]
    amplitude: Option<f64>,
    /// Std of the per-coordinate occluder centre draw.
    #[arg(long)]
    occluder_scale: Option<f64>,
    /// Spread of occluder frames around their centre.
    #[arg(long)]
    occluder_sigma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args, Serialize)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "lbsvm")]
    variant: String,
    #[arg(long, default_value_t = 0.5e-4)]
    c1: f64,
    #[arg(long, default_value_t = 0.5e-4)]
    c2: f64,
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    #[arg(long, default_value_t = 300)]
    max_iter: usize,
    /// Frames sampled per subsequence.
    #[arg(long, default_value_t = 10)]
    frames: usize,
    /// Frames kept by the latent selection.
    #[arg(long, default_value_t = 5)]
    select: usize,
    #[arg(long, default_value = "max")]
    pool: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Debug, Args, Serialize)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    video: PathBuf,
    /// Voting scheme for frame-level models.
    #[arg(long)]
    vote: Option<String>,
}

#[derive(Debug, Args, Serialize)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Voting scheme; only meaningful for avg-frame models (default soft).
    #[arg(long)]
    vote: Option<String>,
    #[arg(long)]
    prefix_curve: Option<PathBuf>,
    #[arg(long)]
    monotonicity: Option<PathBuf>,
    /// Check monotonicity at every label rather than the predicted one.
    #[arg(long)]
    monotonicity_all_labels: bool,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Serialize)]
struct RunManifest<'a, A: Serialize, C: Serialize> {
    command: &'a str,
    args: &'a A,
    resolved: C,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn run_manifest_path(main_output: &Path) -> PathBuf {
    let mut name = main_output
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_else(|| OsString::from("out"));
    name.push(".run.json");
    main_output.with_file_name(name)
}

fn write_manifest<A: Serialize, C: Serialize>(path: &Path, command: &str, args: &A, resolved: C) -> Result<()> {
    let m = RunManifest {
        command,
        args,
        resolved,
    };
    let mut text = serde_json::to_string_pretty(&m).map_err(|e| Error::Config(e.to_string()))?;
    text.push('\n');
    write_file(path, &text)
}

fn cmd_gen(args: &GenArgs) -> Result<()> {
    let defaults = GeneratorConfig::default();
    let config = GeneratorConfig {
        num_classes: args.classes,
        dim: args.dim,
        train_per_class: args.train_per_class,
        test_per_class: args.test_per_class,
        bad_frame_rate: args.bad_rate,
        noise_sigma: args.sigma.unwrap_or(defaults.noise_sigma),
        center_scale: args.center_scale.unwrap_or(defaults.center_scale),
        amplitude: args.amplitude.unwrap_or(defaults.amplitude),
        occluder_scale: args.occluder_scale.unwrap_or(defaults.occluder_scale),
        occluder_sigma: args.occluder_sigma.unwrap_or(defaults.occluder_sigma),
        seed: args.seed,
        ..defaults
    };
    let ds = generate_synthetic(&config)?;
    save_dataset(&ds, &args.out)?;
    write_manifest(&args.out.join("run.json"), "gen", args, &config)
}

#[derive(Serialize)]
struct TrainResolved<'a> {
    variant: Variant,
    hyperparams: &'a Hyperparams,
    subsampling: &'a Subsampling,
    seed: u64,
    train_videos: usize,
    iterations: usize,
    converged: bool,
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let variant: Variant = args.variant.parse()?;
    let pooling: PoolingKind = args.pool.parse()?;
    let ds = load_dataset(&args.data)?;
    let train_set = ds.subset(Split::Train);
    if train_set.videos.is_empty() {
        return Err(Error::Config(format!(
            "{} has no train videos",
            args.data.display()
        )));
    }
    let flags = variant.flags();
    let hp = Hyperparams {
        c1: args.c1,
        c2: args.c2,
        epsilon: args.epsilon,
        sampled: args.frames,
        selected: if flags.latent_on { args.select } else { args.frames },
        max_iter: args.max_iter,
        pooling,
    };
    let opts = TrainOptions {
        seed: args.seed,
        threads: args.threads.max(1),
    };
    let subsampling = if variant.is_frame_level() {
        Subsampling::Frames
    } else {
        Subsampling::Proportional
    };
    let outcome: TrainOutcome = if variant.is_frame_level() {
        train_frame_svm(&train_set, &hp, opts)?.1
    } else {
        train(&train_set, &subsampling, flags, &hp, opts)?
    };

    let model = TrainedModel {
        params: outcome.model.clone(),
        variant,
        sampled: hp.sampled,
        selected: hp.selected,
        pooling,
    };
    model.save(&args.model)?;
    if let Some(log_path) = &args.log {
        let mut text = String::from(IterationLog::HEADER);
        text.push('\n');
        for entry in &outcome.log {
            text.push_str(&entry.to_line());
            text.push('\n');
        }
        write_file(log_path, &text)?;
    }
    write_manifest(
        &run_manifest_path(&args.model),
        "train",
        args,
        TrainResolved {
            variant,
            hyperparams: &hp,
            subsampling: &subsampling,
            seed: args.seed,
            train_videos: train_set.videos.len(),
            iterations: outcome.log.len(),
            converged: outcome.converged,
        },
    )
}

fn parse_vote(vote: &Option<String>, model: &TrainedModel) -> Result<Option<Voting>> {
    match (vote, model.variant.is_frame_level()) {
        (Some(v), true) => Ok(Some(v.parse()?)),
        (None, true) => Ok(Some(Voting::Soft)),
        (Some(_), false) => Err(Error::Config(format!(
            "--vote applies to avg-frame models, not {}",
            model.variant
        ))),
        (None, false) => Ok(None),
    }
}

/// Prints `label score mask_indices`; indices are frame positions in the video.
fn cmd_predict(args: &PredictArgs, out: &mut dyn Write) -> Result<()> {
    let model = TrainedModel::load(&args.model)?;
    let video = load_sequence(&args.video)?;
    let line = match parse_vote(&args.vote, &model)? {
        Some(voting) => {
            let frame_model = FrameModel::new(model.params.clone());
            let label = vote_video(&frame_model, &video, voting)?;
            let share = video
                .frames()
                .filter(|f| frame_model.frame_label(f) == label)
                .count() as f64
                / video.len() as f64;
            format!("{label} {share} -")
        }
        None => {
            let space = LatentSpace::for_model(&model)?;
            let p = predict(&model.params, &space, &video)?;
            let frames = sample_frames_uniform(SubseqSpec::new(0, video.len()), model.sampled)?;
            let mut idx = String::new();
            for (i, m) in p.mask.indices().iter().enumerate() {
                if i > 0 {
                    idx.push(',');
                }
                let _ = write!(idx, "{}", frames[*m]);
            }
            format!("{} {} {}", p.label, p.score, idx)
        }
    };
    writeln!(out, "{line}").map_err(|e| Error::io("<stdout>", e))
}

#[derive(Serialize)]
struct EvalResolved {
    variant: Variant,
    sampled: usize,
    selected: usize,
    pooling: PoolingKind,
    voting: Option<String>,
    test_videos: usize,
    prefix_fractions: Vec<f64>,
    monotonicity_tol: f64,
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let model = TrainedModel::load(&args.model)?;
    let ds = load_dataset(&args.data)?;
    let test = ds.subset(Split::Test);
    if model.params.num_classes() != ds.num_classes || model.params.dim() != ds.dim {
        return Err(Error::Config(format!(
            "model is K={} d={}, dataset is K={} d={}",
            model.params.num_classes(),
            model.params.dim(),
            ds.num_classes,
            ds.dim
        )));
    }
    let voting = parse_vote(&args.vote, &model)?;
    let space = LatentSpace::for_model(&model)?;
    let frame_model = FrameModel::new(model.params.clone());
    let classifier: Box<dyn VideoClassifier + '_> = match voting {
        Some(voting) => Box::new(VotingClassifier {
            model: &frame_model,
            voting,
        }),
        None => Box::new(LatentClassifier {
            params: &model.params,
            space: &space,
        }),
    };

    let result = evaluate_with(classifier.as_ref(), &test)?;
    let mut report = String::new();
    let _ = writeln!(report, "model {}", args.model.display());
    let _ = writeln!(report, "variant {}", model.variant);
    if let Some(v) = voting {
        let _ = writeln!(report, "voting {v}");
        let _ = writeln!(report, "frame_accuracy {}", avg_frame_accuracy(&frame_model, &test)?);
    } else {
        let _ = writeln!(report, "sampled_frames {}", model.sampled);
        let _ = writeln!(report, "selected_frames {}", model.selected);
        let _ = writeln!(report, "pooling {}", model.pooling);
    }
    let _ = writeln!(report, "test_videos {}", test.videos.len());
    let _ = writeln!(report, "accuracy {}", result.accuracy);
    let _ = writeln!(report, "confusion (rows true, columns predicted)");
    report.push_str(&result.confusion.to_table());
    write_file(&args.report, &report)?;

    let fractions = default_fractions();
    if let Some(path) = &args.prefix_curve {
        let curve = prefix_curve_with(classifier.as_ref(), &test, &fractions)?;
        write_file(path, &curve.to_csv())?;
    }
    if let Some(path) = &args.monotonicity {
        let labels = if args.monotonicity_all_labels {
            MonotonicityLabels::All
        } else {
            MonotonicityLabels::Predicted
        };
        let rep = monotonicity_report(
            &model.params,
            &space,
            &test,
            &Subsampling::Proportional,
            DEFAULT_MONOTONICITY_TOL,
            labels,
        )?;
        let text = format!(
            "pairs {}\nviolations {}\nrate {}\ntol {}\n",
            rep.pairs,
            rep.violations,
            rep.rate(),
            DEFAULT_MONOTONICITY_TOL
        );
        write_file(path, &text)?;
    }
    write_manifest(
        &run_manifest_path(&args.report),
        "eval",
        args,
        EvalResolved {
            variant: model.variant,
            sampled: model.sampled,
            selected: model.selected,
            pooling: model.pooling,
            voting: voting.map(|v| v.to_string()),
            test_videos: test.videos.len(),
            prefix_fractions: fractions,
            monotonicity_tol: DEFAULT_MONOTONICITY_TOL,
        },
    )
}

/// Parses `argv` and runs the command, returning the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            let _ = writeln!(err, "lbsvm: {}", first.trim_start_matches("error: "));
            return 2;
        }
    };
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a, out),
        Command::Eval(a) => cmd_eval(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "lbsvm: {e}");
            1
        }
    }
}

pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
