//! `pwsurv` command-line interface.
//!
//! Every subcommand accepts `--config <file.toml>`. The file has one table per
//! subcommand (`[simulate]`, `[train]`, `[eval]`, `[curves]`, `[study]`) whose keys
//! are the long flag names; flags given on the command line take precedence.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use pwsurv_core::data::{generate_dataset, CensoringConfig, SimulationConfig, WeibullParams};
use pwsurv_core::heads::HeadKind;
use pwsurv_core::network::Activation;
use pwsurv_core::training::{evaluate, GridSpec, HorizonRule, TrainConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::csv_io::{read_csv, write_csv, write_meta};
use crate::curves::CurveTable;
use crate::error::{Error, Result};
use crate::harness::{lr_sweep, replication_study, timed_train, StudyConfig, SweepConfig};
use crate::model_file;

#[derive(Debug, Parser)]
#[command(name = "pwsurv", version, about = "Piecewise neural survival models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate Weibull survival datasets (train/val/test CSVs).
    Simulate(SimulateArgs),
    /// Train one model, at a fixed learning rate or with a learning-rate sweep.
    Train(TrainArgs),
    /// Mean negative log-likelihood of a model on a dataset.
    Eval(EvalArgs),
    /// Emit S, f, h and H of a model for one covariate vector as CSV.
    Curves(CurvesArgs),
    /// Replication study over the four heads; writes a summary report.
    Study(StudyArgs),
}

fn arg_err(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}

/// Overlays the flags that were given on top of the matching config-file table.
fn merge_config<T: Serialize + DeserializeOwned>(
    flags: &T,
    config: Option<&Path>,
    section: &str,
) -> Result<T> {
    let Some(path) = config else {
        return Ok(
            serde_json::from_value(serde_json::to_value(flags).expect("flags serialize"))
                .expect("flags round-trip"),
        );
    };
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Format {
        path: path.to_path_buf(),
        message: e.message().to_string(),
    })?;
    let mut merged = match table.get(section) {
        Some(v) => serde_json::to_value(v).map_err(|e| arg_err(e.to_string()))?,
        None => serde_json::Value::Object(Default::default()),
    };
    let given = serde_json::to_value(flags).expect("flags serialize");
    if let (Some(base), Some(over)) = (merged.as_object_mut(), given.as_object()) {
        for (k, v) in over {
            if !v.is_null() && *v != serde_json::Value::Bool(false) {
                base.insert(k.clone(), v.clone());
            }
        }
    }
    serde_json::from_value(merged).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: format!("[{section}]: {e}"),
    })
}

fn pair(v: &Option<Vec<f64>>, name: &str, default: (f64, f64)) -> Result<(f64, f64)> {
    match v.as_deref() {
        None => Ok(default),
        Some([a, b]) => Ok((*a, *b)),
        Some(other) => Err(arg_err(format!(
            "--{name} takes two values, got {}",
            other.len()
        ))),
    }
}

fn parse_head(s: &str) -> Result<HeadKind> {
    s.parse::<HeadKind>().map_err(|e| arg_err(e.to_string()))
}

fn parse_activation(s: Option<&str>) -> Result<Activation> {
    s.map_or(Ok(Activation::Relu), |s| {
        s.parse()
            .map_err(|e: pwsurv_core::Error| arg_err(e.to_string()))
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SimulationFlags {
    /// Range of the Weibull scale λ, as `lo,hi` [default: 1,3].
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub scale_range: Option<Vec<f64>>,
    /// Range of the Weibull shape k, as `lo,hi` [default: 0.5,5].
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub shape_range: Option<Vec<f64>>,
    /// Probability that a record is exposed to uniform censoring [default: 0].
    #[arg(long)]
    pub censor_prob: Option<f64>,
    /// Upper bound of the uniform censoring time [default: 10].
    #[arg(long)]
    pub censor_max: Option<f64>,
    /// Administrative censoring time applied to every record.
    #[arg(long)]
    pub admin_censor: Option<f64>,
}

impl SimulationFlags {
    fn to_config(&self) -> Result<SimulationConfig> {
        let d = SimulationConfig::default();
        let c = CensoringConfig::default();
        let config = SimulationConfig {
            scale_range: pair(&self.scale_range, "scale-range", d.scale_range)?,
            shape_range: pair(&self.shape_range, "shape-range", d.shape_range)?,
            censoring: CensoringConfig {
                probability: self.censor_prob.unwrap_or(c.probability),
                max_time: self.censor_max.unwrap_or(c.max_time),
                administrative: self.admin_censor,
            },
        };
        config.validate().map_err(|e| arg_err(e.to_string()))?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SimulateArgs {
    /// Record counts of the train, validation and test files [default: 1000,300,300].
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub simulation: SimulationFlags,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

const SPLIT_NAMES: [&str; 3] = ["train", "val", "test"];

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let a = merge_config(args, args.config.as_deref(), "simulate")?;
    let sizes = a.sizes.unwrap_or_else(|| vec![1000, 300, 300]);
    if sizes.is_empty() || sizes.len() > 3 {
        return Err(arg_err(format!(
            "--sizes takes 1 to 3 counts, got {}",
            sizes.len()
        )));
    }
    if sizes.contains(&0) {
        return Err(arg_err(format!(
            "--sizes must all be positive, got {sizes:?}"
        )));
    }
    let out = a.out.ok_or_else(|| arg_err("--out is required"))?;
    let seed = a.seed.unwrap_or(0);
    let sim = a.simulation.to_config()?;

    let all = generate_dataset(sizes.iter().sum(), &sim, seed)?;
    let names = &SPLIT_NAMES[..sizes.len()];
    create_dir(&out)?;
    for (part, name) in all.split_sizes(&sizes, names)?.iter().zip(names) {
        let path = out.join(format!("{name}.csv"));
        write_csv(part, &path, 2)?;
        write_meta(part, &path)?;
        println!("wrote {} ({} records)", path.display(), part.len());
    }
    Ok(())
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ModelFlags {
    /// Number of uniformly spaced grid points, including 0 and t_max [default: 5].
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Training epochs [default: 200].
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Hidden layer widths [default: 32,32].
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub hidden: Option<Vec<usize>>,
    /// relu or tanh [default: relu].
    #[arg(long)]
    pub activation: Option<String>,
    /// Mini-batch size; full batch when omitted.
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Z-score covariates using training-set statistics.
    #[arg(long)]
    pub standardize: bool,
    /// Smallest learning rate of the sweep [default: 1e-4].
    #[arg(long)]
    pub lr_min: Option<f64>,
    /// Largest learning rate of the sweep [default: 1e-1].
    #[arg(long)]
    pub lr_max: Option<f64>,
    /// Number of learning rates in the sweep [default: 20].
    #[arg(long)]
    pub lr_count: Option<usize>,
}

impl ModelFlags {
    fn train_config(&self, head: HeadKind, seed: u64) -> Result<TrainConfig> {
        let d = TrainConfig::default();
        let epochs = self.epochs.unwrap_or(d.epochs);
        if epochs == 0 {
            return Err(arg_err("--epochs must be at least 1"));
        }
        let n_points = self.grid_points.unwrap_or(d.grid.n_points);
        if n_points < 2 {
            return Err(arg_err("--grid-points must be at least 2"));
        }
        if self.batch_size == Some(0) {
            return Err(arg_err("--batch-size must be positive"));
        }
        Ok(TrainConfig {
            head,
            grid: GridSpec {
                n_points,
                horizon: d.grid.horizon,
            },
            hidden_layers: self.hidden.clone().unwrap_or(d.hidden_layers),
            activation: parse_activation(self.activation.as_deref())?,
            epochs,
            seed,
            batch_size: self.batch_size,
            standardize: self.standardize,
            ..d
        })
    }

    fn sweep_config(&self) -> SweepConfig {
        let d = SweepConfig::default();
        SweepConfig {
            lr_min: self.lr_min.unwrap_or(d.lr_min),
            lr_max: self.lr_max.unwrap_or(d.lr_max),
            count: self.lr_count.unwrap_or(d.count),
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct TrainArgs {
    /// Training CSV.
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Validation CSV used for checkpointing and the sweep.
    #[arg(long)]
    pub val: Option<PathBuf>,
    /// constant-density, linear-density, constant-hazard or linear-hazard [default: linear-hazard].
    #[arg(long)]
    pub head: Option<String>,
    /// Fixed learning rate [default: 1e-3]; conflicts with --sweep.
    #[arg(long)]
    pub lr: Option<f64>,
    /// Select the learning rate by a geometric sweep.
    #[arg(long)]
    pub sweep: bool,
    /// Fixed grid horizon; by default 1.001 × the largest train/val time.
    #[arg(long)]
    pub t_max: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelFlags,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for model.json and history.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

pub fn cmd_train(args: &TrainArgs) -> Result<()> {
    let a = merge_config(args, args.config.as_deref(), "train")?;
    if a.lr.is_some() && a.sweep {
        return Err(arg_err("--lr and --sweep are mutually exclusive"));
    }
    let train_path = a.train.ok_or_else(|| arg_err("--train is required"))?;
    let val_path = a.val.ok_or_else(|| arg_err("--val is required"))?;
    let out = a.out.ok_or_else(|| arg_err("--out is required"))?;
    let head = parse_head(a.head.as_deref().unwrap_or("linear-hazard"))?;
    let mut config = a.model.train_config(head, a.seed.unwrap_or(0))?;
    if let Some(t_max) = a.t_max {
        config.grid.horizon = HorizonRule::Fixed { t_max };
    }
    let train_set = read_csv(&train_path)?;
    let val_set = read_csv(&val_path)?;
    if train_set.is_empty() {
        return Err(pwsurv_core::Error::EmptyDataset.into());
    }

    create_dir(&out)?;
    let mut history = String::from("learning_rate,epoch,train_loss,val_loss\n");
    let model = if a.sweep {
        let sweep = lr_sweep(
            &config,
            &a.model.sweep_config(),
            &train_set.records,
            &val_set.records,
        )?;
        let mut summary = String::from("learning_rate,status,best_epoch,best_val_loss\n");
        for e in &sweep.entries {
            for h in e.history() {
                history.push_str(&format!(
                    "{},{},{},{}\n",
                    e.learning_rate, h.epoch, h.train_loss, h.val_loss
                ));
            }
            match &e.outcome {
                Ok(m) => summary.push_str(&format!(
                    "{},ok,{},{}\n",
                    e.learning_rate, m.best_epoch, m.best_val_loss
                )),
                Err(msg) => summary.push_str(&format!(
                    "{},failed: {},,\n",
                    e.learning_rate,
                    msg.replace(',', ";")
                )),
            }
        }
        write_file(&out.join("sweep.csv"), &summary)?;
        sweep.into_selected_model()
    } else {
        config.learning_rate = a.lr.unwrap_or(config.learning_rate);
        let m = timed_train(&config, &train_set.records, &val_set.records)?;
        for h in &m.history {
            history.push_str(&format!(
                "{},{},{},{}\n",
                config.learning_rate, h.epoch, h.train_loss, h.val_loss
            ));
        }
        m
    };
    write_file(&out.join("history.csv"), &history)?;
    model_file::save(&model, out.join("model.json"))?;
    println!(
        "head={} learning_rate={} best_epoch={} val_loss={} t_max={} seconds={:.3}",
        model.head,
        model.config.learning_rate,
        model.best_epoch,
        model.best_val_loss,
        model.grid.t_max(),
        model.training_seconds
    );
    Ok(())
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct EvalArgs {
    /// Model file written by `train`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Dataset CSV.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

/// `x` rounded to `digits` significant digits, in plain decimal notation.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let a = merge_config(args, args.config.as_deref(), "eval")?;
    let model = model_file::load(a.model.ok_or_else(|| arg_err("--model is required"))?)?;
    let data = read_csv(a.data.ok_or_else(|| arg_err("--data is required"))?)?;
    let loss = evaluate(&model, &data.records)?;
    println!(
        "mean_nll={} records={}",
        format_significant(loss, 4),
        data.len()
    );
    Ok(())
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct CurvesArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Covariate vector, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
    pub x: Option<Vec<f64>>,
    /// Number of lattice points on [0, t_max] [default: 201].
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Reference Weibull `scale,shape` to add ground-truth columns.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub truth: Option<Vec<f64>>,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

pub fn cmd_curves(args: &CurvesArgs) -> Result<()> {
    let a = merge_config(args, args.config.as_deref(), "curves")?;
    let model = model_file::load(a.model.ok_or_else(|| arg_err("--model is required"))?)?;
    let x = a.x.ok_or_else(|| arg_err("--x is required"))?;
    let truth = match a.truth.as_deref() {
        None => None,
        Some([scale, shape]) => {
            Some(WeibullParams::new(*scale, *shape).map_err(|e| arg_err(e.to_string()))?)
        }
        Some(v) => {
            return Err(arg_err(format!(
                "--truth takes scale,shape; got {} values",
                v.len()
            )))
        }
    };
    let table = CurveTable::build(&model, &x, a.resolution.unwrap_or(201), truth)?;
    let csv = table.to_csv();
    match a.out {
        Some(path) => write_file(&path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct StudyArgs {
    /// Replications per head [default: 100].
    #[arg(long)]
    pub reps: Option<usize>,
    /// Master seed; replication seeds are derived from it.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads [default: 1].
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Heads to run, comma separated [default: all four].
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub heads: Option<Vec<String>>,
    /// Train, validation and test sizes [default: 1000,300,300].
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub sizes: Option<Vec<usize>>,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelFlags,
    #[command(flatten)]
    #[serde(flatten)]
    pub simulation: SimulationFlags,
    /// Output directory for report.csv, timing.csv and replications.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

pub fn study_config(a: &StudyArgs) -> Result<StudyConfig> {
    let d = StudyConfig::default();
    let heads = match &a.heads {
        None => d.heads,
        Some(names) => names.iter().map(|s| parse_head(s)).collect::<Result<_>>()?,
    };
    let sizes = match a.sizes.as_deref() {
        None => d.sizes,
        Some(&[tr, va, te]) => [tr, va, te],
        Some(v) => return Err(arg_err(format!("--sizes takes 3 counts, got {}", v.len()))),
    };
    let reps = a.reps.unwrap_or(d.reps);
    if reps == 0 {
        return Err(arg_err("--reps must be at least 1"));
    }
    Ok(StudyConfig {
        heads,
        reps,
        master_seed: a.seed.unwrap_or(d.master_seed),
        sizes,
        simulation: a.simulation.to_config()?,
        base: a.model.train_config(HeadKind::LinearHazard, 0)?,
        sweep: a.model.sweep_config(),
        jobs: a.jobs.unwrap_or(d.jobs).max(1),
        ..d
    })
}

pub fn cmd_study(args: &StudyArgs) -> Result<()> {
    let a = merge_config(args, args.config.as_deref(), "study")?;
    let out = a.out.clone().ok_or_else(|| arg_err("--out is required"))?;
    let config = study_config(&a)?;
    let report = replication_study(&config)?;
    create_dir(&out)?;
    let table = report.report_csv();
    write_file(&out.join("report.csv"), &table)?;
    write_file(&out.join("timing.csv"), &report.timing_csv())?;
    write_file(&out.join("replications.csv"), &report.replications_csv())?;
    print!("{table}");
    if config.reps == 1 {
        println!("note: a single replication has no spread; sd is reported as 0");
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Curves(a) => cmd_curves(a),
        Command::Study(a) => cmd_study(a),
    }
}
