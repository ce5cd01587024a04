//! Command-line front end. One subcommand per process; usage errors exit
//! with 2, everything else that fails exits with 1.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::data::synth::ANNOTATIONS_FILE;
use crate::data::{
    collect_video_info, dataset_stats, ingest_frames, load_annotations, preprocess, synth_fixture, write_ppm_dir,
    DatasetManifest, Multiplicity, PreprocessConfig, Split, SynthConfig, DEFAULT_FRAME_RATE,
};
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;
use crate::model::arch::{CUBE_FRAMES, FRAME_SIZE};
use crate::model::{
    compact_layers, load_checkpoint, load_pretrained, read_checkpoint, save_checkpoint, shape_audit,
    table1_layers, AnomalyNet, LoadPolicy, TrainingMeta, DEFAULT_NUM_CLASSES, TABLE1_INPUT,
};
use crate::train::{load_cubes, predict_video, read_traces, write_epoch_log, write_traces, EvalRows, TrainConfig, Trainer};

#[derive(Debug, Parser)]
#[command(name = "cube3d", version, about = "3D ConvNet toolkit for multiclass video anomaly recognition")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Resize a frame directory or .vten container
    Preprocess(PreprocessArgs),
    /// Add flipped copies of every training entry to a manifest
    Augment(AugmentArgs),
    /// Generate the synthetic moving-block fixture
    Synth(SynthArgs),
    /// Train a network and write a checkpoint and epoch log
    Train(TrainArgs),
    /// Score every 16-frame window of one video
    Predict(PredictArgs),
    /// Compute metrics from a prediction trace and annotations
    Evaluate(EvaluateArgs),
    /// Per-split video counts and durations
    Stats(StatsArgs),
    /// Print the layer shape chain and compare it with the reference table
    Audit(AuditArgs),
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// Frame directory or .vten file
    #[arg(long)]
    pub input: PathBuf,
    /// Output .vten file, or a directory for PPM frames
    #[arg(long)]
    pub out: PathBuf,
    /// Output height and width
    #[arg(long, default_value_t = FRAME_SIZE)]
    pub size: usize,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Copies per training video: 1, 2 (+hflip) or 3 (+hflip, +vflip)
    #[arg(long, default_value_t = 3)]
    pub multiplicity: usize,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    #[arg(long, default_value_t = 8)]
    pub clips: usize,
    #[arg(long, default_value_t = 0)]
    pub test_clips: usize,
    #[arg(long, default_value_t = 32)]
    pub resolution: usize,
    #[arg(long, default_value_t = 64)]
    pub length: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Arch {
    /// The full fine-tuned network
    Table1,
    /// Narrow three-stage variant for small frames
    Compact,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Defaults to annotations.csv next to the manifest
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    /// `key = value` file of training settings
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Checkpoint to write
    #[arg(long)]
    pub out: PathBuf,
    /// Epoch log CSV; defaults to the checkpoint path with a .csv extension
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Arch::Table1)]
    pub arch: Arch,
    /// Frame height and width; defaults to 170 (table1) or 32 (compact)
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_NUM_CLASSES)]
    pub classes: usize,
    /// Initialize name-matched layers from this checkpoint
    #[arg(long)]
    pub pretrained: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub dropout: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Frame directory or .vten file
    #[arg(long)]
    pub input: PathBuf,
    /// Trace CSV to write
    #[arg(long)]
    pub out: PathBuf,
    /// Video id in the trace; defaults to the input file stem
    #[arg(long)]
    pub video_id: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// One or more trace CSVs
    #[arg(long, required = true, num_args = 1..)]
    pub traces: Vec<PathBuf>,
    #[arg(long)]
    pub annotations: PathBuf,
    /// Directory for metrics.json, confusion.csv and roc_<class>.csv
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Defaults to annotations.csv next to the manifest
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_FRAME_RATE)]
    pub fps: f64,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    /// Audit the architecture stored in this checkpoint instead of a fresh model
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_NUM_CLASSES)]
    pub classes: usize,
}

/// Parses `argv` (program name first) and runs the subcommand. Returns the
/// process exit status.
pub fn run<I, A>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{e}");
            return 0;
        }
        Err(e) => {
            let text = e.to_string();
            let line = text.lines().next().unwrap_or("usage error");
            let _ = writeln!(err, "{line}");
            return 2;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.to_string().replace('\n', " "));
            1
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Preprocess(a) => cmd_preprocess(a, out),
        Command::Augment(a) => cmd_augment(a, out),
        Command::Synth(a) => cmd_synth(a, out),
        Command::Train(a) => cmd_train(a, out),
        Command::Predict(a) => cmd_predict(a, out),
        Command::Evaluate(a) => cmd_evaluate(a, out),
        Command::Stats(a) => cmd_stats(a, out),
        Command::Audit(a) => cmd_audit(a, out),
    }
}

fn base_dir(manifest: &Path) -> PathBuf {
    manifest.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn annotations_path(manifest: &Path, given: Option<PathBuf>) -> PathBuf {
    given.unwrap_or_else(|| base_dir(manifest).join(ANNOTATIONS_FILE))
}

fn cmd_preprocess(a: PreprocessArgs, out: &mut dyn Write) -> Result<()> {
    let seq = ingest_frames(&a.input)?;
    let cfg = PreprocessConfig {
        height: a.size,
        width: a.size,
        subtract_mean: false,
    };
    let resized = preprocess(&seq, &cfg)?;
    if a.out.extension().is_some_and(|e| e == "vten") {
        resized.frames.save_vten(&a.out)?;
    } else {
        write_ppm_dir(&resized, &a.out)?;
    }
    writeln!(out, "{} frames {}×{} -> {}", resized.len(), a.size, a.size, a.out.display())?;
    Ok(())
}

fn cmd_augment(a: AugmentArgs, out: &mut dyn Write) -> Result<()> {
    let m = DatasetManifest::load(&a.manifest)?;
    let aug = m.augment(Multiplicity::from_count(a.multiplicity)?)?;
    aug.save(&a.out)?;
    writeln!(out, "{} entries -> {} entries", m.entries.len(), aug.entries.len())?;
    Ok(())
}

fn cmd_synth(a: SynthArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = SynthConfig {
        seed: a.seed,
        num_classes: a.classes,
        clips_per_class: a.clips,
        test_clips_per_class: a.test_clips,
        resolution: a.resolution,
        length: a.length,
    };
    let fx = synth_fixture(&cfg)?;
    fx.write(&a.out)?;
    writeln!(out, "{} clips written to {}", fx.videos.len(), a.out.display())?;
    Ok(())
}

/// File values, then `CUBE3D_SEED`, then explicit flags.
pub fn resolve_config(a: &TrainArgs) -> Result<TrainConfig> {
    let mut cfg = match &a.config {
        Some(p) => TrainConfig::from_file(p)?,
        None => TrainConfig::default(),
    };
    cfg.apply_env()?;
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.epochs {
        cfg.max_epochs = v;
    }
    if let Some(v) = a.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = a.learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = a.momentum {
        cfg.momentum = v;
    }
    if let Some(v) = a.dropout {
        cfg.dropout_rate = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_train(a: TrainArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = resolve_config(&a)?;
    let (specs, default_size) = match a.arch {
        Arch::Table1 => (table1_layers(a.classes), FRAME_SIZE),
        Arch::Compact => (compact_layers(a.classes), 32),
    };
    let size = a.size.unwrap_or(default_size);
    let mut net = AnomalyNet::from_specs([CUBE_FRAMES, size, size, 3], &specs)?;

    let manifest = DatasetManifest::load(&a.manifest)?;
    let annotations = load_annotations(annotations_path(&a.manifest, a.annotations.clone()))?;
    let data = load_cubes(&manifest, &annotations, &base_dir(&a.manifest), Split::Train, net.input_dims())?;
    if let Some(&bad) = data.labels.iter().find(|&&l| l >= a.classes) {
        return Err(Error::Validation(format!("training label {bad} does not fit a {}-class head", a.classes)));
    }

    let mut trainer = Trainer::new(&mut net, cfg.clone())?;
    if let Some(p) = &a.pretrained {
        let report = load_pretrained(&mut net, &read_checkpoint(p)?, LoadPolicy::ByNamePartial)?;
        write!(out, "{report}")?;
        trainer = Trainer::resume(&mut net, cfg)?;
    }
    writeln!(out, "{} training cubes, {} parameters", data.len(), net.parameter_count())?;
    let history = trainer.fit(&mut net, &data, |r| {
        let _ = writeln!(out, "epoch {:>3}  loss {:.6}  acc {:.4}  lr {}", r.epoch, r.loss, r.accuracy, r.learning_rate);
        true
    })?;
    let meta = TrainingMeta {
        epoch: history.len(),
        learning_rate: trainer.learning_rate(),
    };
    save_checkpoint(&net, meta, &a.out)?;
    let log = a.log.clone().unwrap_or_else(|| a.out.with_extension("csv"));
    write_epoch_log(&history, fs::File::create(&log)?)?;
    writeln!(out, "checkpoint {}  log {}", a.out.display(), log.display())?;
    Ok(())
}

fn cmd_predict(a: PredictArgs, out: &mut dyn Write) -> Result<()> {
    let (net, _) = load_checkpoint(&a.checkpoint)?;
    let mut seq = ingest_frames(&a.input)?;
    let [_, h, w, _] = net.input_dims();
    if seq.height() != h || seq.width() != w {
        seq = preprocess(
            &seq,
            &PreprocessConfig {
                height: h,
                width: w,
                subtract_mean: false,
            },
        )?;
    }
    seq.video_id = match a.video_id {
        Some(id) => id,
        None => a
            .input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "video".into()),
    };
    let trace = predict_video(&net, &seq)?;
    write_traces(std::slice::from_ref(&trace), fs::File::create(&a.out)?)?;
    writeln!(out, "{} windows -> {}", trace.records.len(), a.out.display())?;
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs, out: &mut dyn Write) -> Result<()> {
    let mut traces = Vec::new();
    for p in &a.traces {
        traces.extend(read_traces(fs::File::open(p)?)?);
    }
    let annotations = load_annotations(&a.annotations)?;
    let rows = EvalRows::from_traces(&traces, &annotations)?;
    let report = MetricsReport::from_rows(&rows)?;
    report.write_dir(&a.out)?;
    write!(out, "{report}")?;
    Ok(())
}

fn cmd_stats(a: StatsArgs, out: &mut dyn Write) -> Result<()> {
    let manifest = DatasetManifest::load(&a.manifest)?;
    let annotations = load_annotations(annotations_path(&a.manifest, a.annotations))?;
    let info = collect_video_info(&manifest, &annotations, &base_dir(&a.manifest), a.fps)?;
    write!(out, "{}", dataset_stats(&info))?;
    Ok(())
}

fn cmd_audit(a: AuditArgs, out: &mut dyn Write) -> Result<()> {
    let net = match &a.checkpoint {
        Some(p) => load_checkpoint(p)?.0,
        None => AnomalyNet::from_specs(TABLE1_INPUT, &table1_layers(a.classes))?,
    };
    let audit = shape_audit(&net, net.input_dims())?;
    write!(out, "{audit}")?;
    if net.input_dims() != TABLE1_INPUT || net.layers().len() != table1_layers(a.classes).len() {
        writeln!(out, "architecture differs from the reference table; no comparison")?;
        return Ok(());
    }
    let deviations = audit.compare_table1();
    let undocumented = deviations.iter().filter(|d| !d.documented()).count();
    for d in &deviations {
        writeln!(out, "{d}")?;
    }
    writeln!(
        out,
        "{} deviations from the reference table, {} undocumented",
        deviations.len(),
        undocumented
    )?;
    if undocumented > 0 {
        return Err(Error::Validation(format!("{undocumented} undocumented shape deviations")));
    }
    Ok(())
}
