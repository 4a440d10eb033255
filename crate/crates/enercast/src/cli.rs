//! Command-line front end: `synth | fuse | train | tune | evaluate | ablate`.
//!
//! Every command is a pure function of (inputs, config, seed): outputs are
//! written atomically (temp file + rename) and a `run_manifest.json` records
//! the resolved config, seed, and SHA-256 digests of all inputs and outputs.
//! Nothing time-dependent is written by default, so a rerun is byte-identical.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 training divergence.

use crate::align::{fuse, AlignedDataset};
use crate::datagen::{synth_building, BuildingKind, BuildingProfile};
use crate::eval::{
    evaluate_range, forecast_overlay, horizon_report, overlay_csv, EvalError, EvalReport,
    DEFAULT_OVERLAY_ROWS,
};
use crate::features::chronological_split;
use crate::ingest::{parse_series_with_offset, serialize_series, validate_series, Channel};
use crate::models::{load_model, save_model, ModelError};
use crate::pipeline::{
    train_on_range, ModelSpec, PipelineConfig, PipelineError, DEFAULT_LAG_COUNT, DEFAULT_SPLIT,
    DEFAULT_WINDOW,
};
use crate::tune::{
    grid_search, random_search, refine_grid, trials_csv, SearchSpace, TuneError, TuneOptions,
};
use clap::{Args, Parser, Subcommand};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("training diverged: {0}")]
    Training(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Training(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(format!("io: {e}"))
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Model(ModelError::DivergedTraining(epoch)) => {
                CliError::Training(format!("non-finite loss at epoch {epoch}"))
            }
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Pipeline(p) => p.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<TuneError> for CliError {
    fn from(e: TuneError) -> Self {
        match e {
            TuneError::Pipeline(p) => p.into(),
            TuneError::Eval(ev) => ev.into(),
            TuneError::EmptySpace | TuneError::EmptyGrid | TuneError::UnknownModelKind(_) => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Data(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "enercast", about = "Building energy forecasting pipeline", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic multi-rate channel CSVs for one building.
    Synth(SynthArgs),
    /// Fuse per-channel CSVs onto one sampling grid.
    Fuse(FuseArgs),
    /// Train a model on a fused CSV and save it.
    Train(TrainArgs),
    /// Random-then-grid hyperparameter search scored by validation MAE.
    Tune(TuneArgs),
    /// Evaluate a saved model: test report, horizon rows, forecast overlay.
    Evaluate(EvaluateArgs),
    /// Training-size ablation: retrain on shrinking windows, fixed test set.
    Ablate(AblateArgs),
}

/// Flags shared by every command. A JSON config file may supply any flag not
/// given on the command line; explicit flags always win.
#[derive(Debug, Args, Clone, Default)]
pub struct CommonArgs {
    /// JSON config file whose keys fill unset flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// RNG seed recorded in the manifest.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Clone, Serialize, Deserialize)]
pub struct SynthArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: CommonArgs,
    /// Building profile: academic | hostel | dining | facilities.
    #[arg(long)]
    pub profile: Option<String>,
    /// Number of days to generate.
    #[arg(long)]
    pub days: Option<usize>,
    /// Multiplicative energy noise fraction in [0, 0.5].
    #[arg(long)]
    pub noise: Option<f64>,
}

#[derive(Debug, Args, Clone, Serialize, Deserialize)]
pub struct FuseArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: CommonArgs,
    /// Directory holding energy.csv, occupancy.csv, temperature.csv,
    /// humidity.csv, and calendar.csv.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Grid interval in seconds.
    #[arg(long)]
    pub grid_interval: Option<i64>,
    /// Fixed UTC offset in seconds for naive timestamps.
    #[arg(long)]
    pub utc_offset: Option<i64>,
}

#[derive(Debug, Args, Clone, Serialize, Deserialize)]
pub struct TrainArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: CommonArgs,
    /// Fused CSV path.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Model kind: ridge | tree | forest | lstm.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub min_samples_split: Option<usize>,
    #[arg(long)]
    pub n_estimators: Option<usize>,
    /// LSTM hidden units.
    #[arg(long)]
    pub units: Option<usize>,
    /// LSTM dense-layer units.
    #[arg(long)]
    pub dense: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Calendar-matched lag count for tabular models.
    #[arg(long)]
    pub lags: Option<usize>,
    /// Sequence window for the LSTM.
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub train_ratio: Option<f64>,
    #[arg(long)]
    pub val_ratio: Option<f64>,
}

#[derive(Debug, Args, Clone, Serialize, Deserialize)]
pub struct TuneArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: CommonArgs,
    /// Fused CSV path.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Model kind: ridge | tree | forest | lstm.
    #[arg(long)]
    pub model: Option<String>,
    /// Random-stage trial budget.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Grid-refinement radius around the best random trial.
    #[arg(long)]
    pub radius: Option<usize>,
    /// Record real wall-clock train times (breaks byte-identical reruns).
    #[arg(long)]
    pub timing: Option<bool>,
}

#[derive(Debug, Args, Clone, Serialize, Deserialize)]
pub struct EvaluateArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: CommonArgs,
    /// Fused CSV path.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Saved model file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Forecast-overlay length in rows.
    #[arg(long)]
    pub overlay_rows: Option<usize>,
    /// Comma-separated horizon spans in days, e.g. "1,7,30".
    #[arg(long)]
    pub horizons: Option<String>,
    #[arg(long)]
    pub train_ratio: Option<f64>,
    #[arg(long)]
    pub val_ratio: Option<f64>,
}

#[derive(Debug, Args, Clone, Serialize, Deserialize)]
pub struct AblateArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: CommonArgs,
    /// Fused CSV path.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Model kind: ridge | tree | forest | lstm.
    #[arg(long)]
    pub model: Option<String>,
    /// Comma-separated training lengths in days, longest first.
    #[arg(long)]
    pub lengths: Option<String>,
}

/// Fill any `None` field from the JSON config file; explicit flags win.
fn merge_config<T: Serialize + DeserializeOwned>(
    args: &T,
    config: Option<&Path>,
) -> Result<T, CliError> {
    let mut value = serde_json::to_value(args)
        .map_err(|e| CliError::Usage(format!("flags: {e}")))?;
    if let Some(path) = config {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        let file: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        let (Some(obj), Some(file_obj)) = (value.as_object_mut(), file.as_object()) else {
            return Err(CliError::Usage("config file must be a JSON object".into()));
        };
        for (k, v) in file_obj {
            let unset = obj.get(k).map_or(true, |cur| cur.is_null());
            if unset {
                obj.insert(k.clone(), v.clone());
            }
        }
    }
    serde_json::from_value(value).map_err(|e| CliError::Usage(format!("config: {e}")))
}

fn require<T>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("missing --{flag}")))
}

/// Write via a sibling temp file and rename, so readers never see a partial
/// file and failed runs leave no output.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects outputs, writes them atomically, then records everything in
/// `run_manifest.json`.
struct Run {
    out_dir: PathBuf,
    command: String,
    config: serde_json::Value,
    seed: u64,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

impl Run {
    fn new<A: Serialize>(
        command: &str,
        common: &CommonArgs,
        resolved: &A,
        seed: u64,
    ) -> Result<Run, CliError> {
        let out_dir = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
        fs::create_dir_all(&out_dir)?;
        Ok(Run {
            out_dir,
            command: command.to_string(),
            config: serde_json::to_value(resolved)
                .map_err(|e| CliError::Usage(format!("config: {e}")))?,
            seed,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        })
    }

    fn read_input(&mut self, path: &Path) -> Result<String, CliError> {
        let bytes = fs::read(path)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        self.inputs
            .insert(path.display().to_string(), sha256_hex(&bytes));
        String::from_utf8(bytes)
            .map_err(|_| CliError::Data(format!("{}: not valid UTF-8", path.display())))
    }

    fn read_input_bytes(&mut self, path: &Path) -> Result<Vec<u8>, CliError> {
        let bytes = fs::read(path)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        self.inputs
            .insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(bytes)
    }

    fn write_output(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        write_atomic(&self.out_dir.join(name), bytes)?;
        self.outputs.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    fn finish(self) -> Result<(), CliError> {
        #[derive(Serialize)]
        struct Manifest {
            command: String,
            seed: u64,
            config: serde_json::Value,
            inputs: BTreeMap<String, String>,
            outputs: BTreeMap<String, String>,
        }
        let manifest = Manifest {
            command: self.command,
            seed: self.seed,
            config: self.config,
            inputs: self.inputs,
            outputs: self.outputs,
        };
        let json = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::Data(format!("manifest: {e}")))?;
        write_atomic(&self.out_dir.join("run_manifest.json"), json.as_bytes())
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Fuse(args) => cmd_fuse(args),
        Command::Train(args) => cmd_train(args),
        Command::Tune(args) => cmd_tune(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Ablate(args) => cmd_ablate(args),
    }
}

fn cmd_synth(args: SynthArgs) -> Result<(), CliError> {
    let a = merge_config(&args, args.common.config.as_deref())?;
    let seed = args.common.seed.unwrap_or(42);
    let profile_name = require(a.profile.clone(), "profile")?;
    let kind = BuildingKind::parse(&profile_name)
        .ok_or_else(|| CliError::Usage(format!("unknown profile {profile_name}")))?;
    let days = a.days.unwrap_or(90);
    let profile = BuildingProfile::new(kind, a.noise.unwrap_or(0.05));
    let channels = synth_building(&profile, days, seed)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mut run = Run::new("synth", &args.common, &a, seed)?;
    for ch in Channel::all() {
        run.write_output(
            &format!("{}.csv", ch.name()),
            serialize_series(&channels[&ch]).as_bytes(),
        )?;
    }
    run.finish()
}

fn load_fused(run: &mut Run, path: &Path) -> Result<AlignedDataset, CliError> {
    let text = run.read_input(path)?;
    AlignedDataset::from_csv(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn cmd_fuse(args: FuseArgs) -> Result<(), CliError> {
    let a = merge_config(&args, args.common.config.as_deref())?;
    let seed = args.common.seed.unwrap_or(42);
    let data_dir = require(a.data.clone(), "data")?;
    let grid = a.grid_interval.unwrap_or(600);
    if grid <= 0 {
        return Err(CliError::Usage("grid interval must be positive".into()));
    }
    let offset = a.utc_offset.unwrap_or(0);
    let mut run = Run::new("fuse", &args.common, &a, seed)?;
    let mut channels = std::collections::HashMap::new();
    for ch in Channel::all() {
        let path = data_dir.join(format!("{}.csv", ch.name()));
        let text = run.read_input(&path)?;
        let raw = parse_series_with_offset(&text, ch, offset)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let validated = validate_series(&raw)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        channels.insert(ch, validated);
    }
    let fused = fuse(&channels, grid).map_err(|e| CliError::Data(e.to_string()))?;
    run.write_output("fused.csv", fused.to_csv().as_bytes())?;
    run.finish()
}

fn ratios(train: Option<f64>, val: Option<f64>) -> Result<(f64, f64), CliError> {
    let r = (train.unwrap_or(DEFAULT_SPLIT.0), val.unwrap_or(DEFAULT_SPLIT.1));
    if !(r.0 > 0.0 && r.1 >= 0.0 && r.0 + r.1 < 1.0) {
        return Err(CliError::Usage(
            "split ratios must be positive and leave a test remainder".into(),
        ));
    }
    Ok(r)
}

fn spec_from_train_args(a: &TrainArgs, kind: &str) -> Result<ModelSpec, CliError> {
    let base = ModelSpec::default_for(kind)
        .ok_or_else(|| CliError::Usage(format!("unknown model kind {kind}")))?;
    Ok(match base {
        ModelSpec::Ridge { alpha } => ModelSpec::Ridge {
            alpha: a.alpha.unwrap_or(alpha),
        },
        ModelSpec::Tree {
            max_depth,
            min_samples_split,
        } => ModelSpec::Tree {
            max_depth: a.max_depth.unwrap_or(max_depth),
            min_samples_split: a.min_samples_split.unwrap_or(min_samples_split),
        },
        ModelSpec::Forest {
            n_estimators,
            max_depth,
            min_samples_split,
        } => ModelSpec::Forest {
            n_estimators: a.n_estimators.unwrap_or(n_estimators),
            max_depth: a.max_depth.unwrap_or(max_depth),
            min_samples_split: a.min_samples_split.unwrap_or(min_samples_split),
        },
        ModelSpec::Lstm {
            hidden,
            dense,
            batch_size,
            epochs,
            learning_rate,
        } => ModelSpec::Lstm {
            hidden: a.units.unwrap_or(hidden),
            dense: a.dense.unwrap_or(dense),
            batch_size: a.batch.unwrap_or(batch_size),
            epochs: a.epochs.unwrap_or(epochs),
            learning_rate: a.learning_rate.unwrap_or(learning_rate),
        },
    })
}

fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let a = merge_config(&args, args.common.config.as_deref())?;
    let seed = args.common.seed.unwrap_or(42);
    let data_path = require(a.data.clone(), "data")?;
    let kind = require(a.model.clone(), "model")?;
    let spec = spec_from_train_args(&a, &kind)?;
    let split_ratios = ratios(a.train_ratio, a.val_ratio)?;

    let mut run = Run::new("train", &args.common, &a, seed)?;
    let data = load_fused(&mut run, &data_path)?;
    let split = chronological_split(data.rows.len(), split_ratios)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let cfg = PipelineConfig {
        spec,
        lag_count: a.lags.unwrap_or(DEFAULT_LAG_COUNT),
        window: a.window.unwrap_or(DEFAULT_WINDOW),
        seed,
    };
    let artifact = train_on_range(&data, &cfg, split.train.clone())?;
    run.write_output("model.decm", &save_model(&artifact))?;

    let mut log = EvalReport::default();
    log.entries.push(evaluate_range(&artifact, &data, split.train, "train")?);
    if !split.val.is_empty() {
        log.entries.push(evaluate_range(&artifact, &data, split.val, "val")?);
    }
    run.write_output("training_log.csv", log.to_csv().as_bytes())?;
    run.finish()
}

fn cmd_tune(args: TuneArgs) -> Result<(), CliError> {
    let a = merge_config(&args, args.common.config.as_deref())?;
    let seed = args.common.seed.unwrap_or(42);
    let data_path = require(a.data.clone(), "data")?;
    let kind = require(a.model.clone(), "model")?;
    let space = SearchSpace::default_for(&kind)
        .ok_or_else(|| CliError::Usage(format!("unknown model kind {kind}")))?;
    let budget = a.budget.unwrap_or(10);
    if budget == 0 {
        return Err(CliError::Usage("budget must be >= 1".into()));
    }
    let radius = a.radius.unwrap_or(2);
    let opts = TuneOptions {
        seed,
        record_timing: a.timing.unwrap_or(false),
    };

    let mut run = Run::new("tune", &args.common, &a, seed)?;
    let data = load_fused(&mut run, &data_path)?;
    let random = random_search(&space, budget, &data, &opts)?;
    let grid = refine_grid(&space, &random[0].config, radius);
    let (best, refined) = grid_search(&grid, &kind, &data, &opts)?;

    // One canonical table over both stages; duplicates collapse to one row.
    let mut all = random;
    for t in refined {
        if !all.contains(&t) {
            all.push(t);
        }
    }
    all.sort_by(|x, y| {
        x.val_mae
            .partial_cmp(&y.val_mae)
            .unwrap()
            .then_with(|| format!("{:?}", x.config).cmp(&format!("{:?}", y.config)))
    });
    run.write_output("trials.csv", trials_csv(&all).as_bytes())?;
    let best_json = serde_json::to_string_pretty(&best)
        .map_err(|e| CliError::Data(format!("best trial: {e}")))?;
    run.write_output("best_config.json", best_json.as_bytes())?;
    run.finish()
}

fn parse_day_list(text: &str, flag: &str) -> Result<Vec<i64>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<i64>()
                .ok()
                .filter(|d| *d > 0)
                .ok_or_else(|| CliError::Usage(format!("--{flag}: bad day count {s:?}")))
        })
        .collect()
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let a = merge_config(&args, args.common.config.as_deref())?;
    let seed = args.common.seed.unwrap_or(42);
    let data_path = require(a.data.clone(), "data")?;
    let model_path = require(a.model.clone(), "model")?;
    let split_ratios = ratios(a.train_ratio, a.val_ratio)?;
    let overlay_rows = a.overlay_rows.unwrap_or(DEFAULT_OVERLAY_ROWS);

    let mut run = Run::new("evaluate", &args.common, &a, seed)?;
    let data = load_fused(&mut run, &data_path)?;
    let model_bytes = run.read_input_bytes(&model_path)?;
    let artifact = load_model(&model_bytes)
        .map_err(|e| CliError::Data(format!("{}: {e}", model_path.display())))?;
    let split = chronological_split(data.rows.len(), split_ratios)
        .map_err(|e| CliError::Data(e.to_string()))?;

    let mut report = EvalReport::default();
    report
        .entries
        .push(evaluate_range(&artifact, &data, split.test.clone(), "test")?);
    if let Some(spec) = &a.horizons {
        let spans: Vec<(String, i64)> = parse_day_list(spec, "horizons")?
            .into_iter()
            .map(|d| (format!("{d}_days"), d * 86_400))
            .collect();
        let horizon = horizon_report(&artifact, &data, split.test.clone(), &spans)?;
        report.entries.extend(horizon.entries);
    }
    run.write_output("report.csv", report.to_csv().as_bytes())?;

    let overlay = forecast_overlay(&artifact, &data, split.test, overlay_rows)?;
    run.write_output("overlay.csv", overlay_csv(&overlay).as_bytes())?;
    run.finish()
}

fn cmd_ablate(args: AblateArgs) -> Result<(), CliError> {
    let a = merge_config(&args, args.common.config.as_deref())?;
    let seed = args.common.seed.unwrap_or(42);
    let data_path = require(a.data.clone(), "data")?;
    let kind = require(a.model.clone(), "model")?;
    let spec = ModelSpec::default_for(&kind)
        .ok_or_else(|| CliError::Usage(format!("unknown model kind {kind}")))?;
    let lengths: Vec<(String, i64)> = match &a.lengths {
        Some(text) => parse_day_list(text, "lengths")?
            .into_iter()
            .map(|d| (format!("{d}_days"), d * 86_400))
            .collect(),
        None => crate::eval::default_ablation_lengths(),
    };

    let mut run = Run::new("ablate", &args.common, &a, seed)?;
    let data = load_fused(&mut run, &data_path)?;
    let cfg = PipelineConfig::new(spec, seed);
    let report = crate::eval::ablation_report(&data, &cfg, &lengths)?;
    run.write_output("ablation.csv", report.to_csv().as_bytes())?;
    run.finish()
}

/// Parse and run, mapping errors to the documented exit codes. Clap's own
/// usage errors are remapped from its default exit code 2 to 1.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
