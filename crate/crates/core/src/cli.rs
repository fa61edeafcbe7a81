//! Command-line interface: `train`, `eval`, `compare` and `gradcheck`.
//!
//! Exit codes: 0 on success, 1 on a runtime failure, 2 when flags fail
//! validation (nothing is computed in that case).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::config::{Ansatz, Encoding, ModelKind};
use crate::data_io::{self, PredictionRow, RunReport, TimeSeriesTable};
use crate::error::{Error, Result};
use crate::forecasting::{evaluate, make_windows, train, LossHistory, MinMaxScaler, TrainConfig, WindowedSample};
use crate::gradcheck;
use crate::model::FusionModel;

/// Default output directory when `--out` is absent.
pub const OUT_DIR_ENV: &str = "QTFT_OUT_DIR";
pub const DEFAULT_DATA: &str = "data/axisbank_2000_reconstructed.csv";

/// Published (train, test) losses in comparison-table row order.
pub const PUBLISHED_LOSSES: [(ModelKind, f64, f64); 3] = [
    (ModelKind::Tft, 0.2630, 0.9856),
    (ModelKind::Qtft, 0.2028, 0.8381),
    (ModelKind::QtftQlstm, 0.1711, 0.8007),
];

#[derive(Debug, Parser)]
#[command(name = "qtft", version, about = "Hybrid quantum-classical temporal fusion forecasting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one model and write a run report.
    Train(RunArgs),
    /// Evaluate a saved parameter snapshot on one range.
    Eval(EvalArgs),
    /// Train all three models under one seed and print a comparison table.
    Compare(RunArgs),
    /// Check every block's gradients against finite differences.
    Gradcheck(GradcheckArgs),
}

/// Flags shared by every data-driven subcommand.
#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long, default_value = "tft")]
    pub model: String,
    #[arg(long, default_value = DEFAULT_DATA)]
    pub data: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = data_io::DEFAULT_FEATURES.map(String::from))]
    pub features: Vec<String>,
    #[arg(long, default_value = data_io::DEFAULT_TARGET)]
    pub target: String,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.5)]
    pub quantile: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 2)]
    pub past_steps: usize,
    #[arg(long, default_value_t = 2)]
    pub forecast_steps: usize,
    /// Inclusive row range, `start:end`.
    #[arg(long, default_value = "0:19")]
    pub train_range: String,
    #[arg(long, default_value = "20:26")]
    pub test_range: String,
    #[arg(long, default_value_t = 2)]
    pub d_model: usize,
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    #[arg(long, default_value_t = 1)]
    pub heads: usize,
    /// `angle-x|angle-y|angle-z|zz-<reps>`.
    #[arg(long, default_value = "angle-x")]
    pub encoding: String,
    /// `bel-x|bel-y|bel-z|nlocal`.
    #[arg(long, default_value = "bel-x")]
    pub ansatz: String,
    #[arg(long)]
    pub min_max_scaling: bool,
    /// Output directory; defaults to `$QTFT_OUT_DIR` or `runs`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(short, long)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Parameter snapshot written by `train`.
    #[arg(long)]
    pub params: PathBuf,
    /// `train`, `test`, or an explicit `start:end`.
    #[arg(long, default_value = "test")]
    pub range: String,
}

#[derive(Debug, Clone, Args)]
pub struct GradcheckArgs {
    /// Shift one weight inside the finite-difference oracle.
    #[arg(long)]
    pub inject_fault: bool,
}

fn parse_range(s: &str) -> Result<RangeInclusive<usize>> {
    let bad = || Error::Config(format!("range {s:?} must look like start:end"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    if a > b {
        return Err(bad());
    }
    Ok(a..=b)
}

/// Fully validated settings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub train: TrainConfig,
    pub encoding: Encoding,
    pub ansatz: Ansatz,
    pub data: PathBuf,
    pub features: Vec<String>,
    pub target: String,
}

impl Experiment {
    pub fn from_args(a: &RunArgs) -> Result<Self> {
        let train = TrainConfig {
            quantile: a.quantile,
            learning_rate: a.lr,
            epochs: a.epochs,
            past_steps: a.past_steps,
            forecast_steps: a.forecast_steps,
            train_range: parse_range(&a.train_range)?,
            test_range: parse_range(&a.test_range)?,
            seed: a.seed,
            model_kind: a.model.parse()?,
            d_model: a.d_model,
            ansatz_layers: a.layers,
            heads: a.heads,
            min_max_scaling: a.min_max_scaling,
        };
        train.validate()?;
        if a.features.is_empty() {
            return Err(Error::Config("at least one feature column is required".into()));
        }
        let exp = Self {
            train,
            encoding: a.encoding.parse()?,
            ansatz: a.ansatz.parse()?,
            data: a.data.clone(),
            features: a.features.clone(),
            target: a.target.clone(),
        };
        exp.model_config().validate()?;
        Ok(exp)
    }

    pub fn model_config(&self) -> crate::config::ModelConfig {
        let mut c = self.train.model_config(self.features.len());
        c.quantum.encoding = self.encoding;
        c.quantum.ansatz = self.ansatz;
        c
    }

    /// Effective configuration, echoed into every report.
    pub fn echo(&self) -> Vec<(String, String)> {
        let t = &self.train;
        let range = |r: &RangeInclusive<usize>| format!("{}:{}", r.start(), r.end());
        [
            ("model", t.model_kind.to_string()),
            ("data", self.data.display().to_string()),
            ("features", self.features.join(",")),
            ("target", self.target.clone()),
            ("quantile", t.quantile.to_string()),
            ("learning_rate", t.learning_rate.to_string()),
            ("epochs", t.epochs.to_string()),
            ("past_steps", t.past_steps.to_string()),
            ("forecast_steps", t.forecast_steps.to_string()),
            ("train_range", range(&t.train_range)),
            ("test_range", range(&t.test_range)),
            ("d_model", t.d_model.to_string()),
            ("heads", t.heads.to_string()),
            ("encoding", self.encoding.to_string()),
            ("ansatz", self.ansatz.to_string()),
            ("ansatz_layers", t.ansatz_layers.to_string()),
            ("min_max_scaling", t.min_max_scaling.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    /// Loads the table and returns `(series, scaler)`; the target is the last column.
    pub fn load(&self) -> Result<(TimeSeriesTable, Option<MinMaxScaler>)> {
        let features: Vec<&str> = self.features.iter().map(String::as_str).collect();
        let mut table = data_io::load_csv(&self.data, &features, &self.target)?;
        let scaler = if self.train.min_max_scaling {
            let r = &self.train.train_range;
            let fit_rows = table.rows.get(*r.start()..=*r.end()).ok_or_else(|| {
                Error::EmptyWindows(format!("train range ends past row {}", table.rows.len()))
            })?;
            let scaler = MinMaxScaler::fit(fit_rows)?;
            table.rows = scaler.transform(&table.rows);
            Some(scaler)
        } else {
            None
        };
        Ok((table, scaler))
    }

    pub fn windows(&self, table: &TimeSeriesTable, range: RangeInclusive<usize>) -> Result<Vec<WindowedSample>> {
        let t = &self.train;
        make_windows(&table.rows, self.features.len(), t.past_steps, t.forecast_steps, range)
    }

    pub fn build_model(&self) -> Result<FusionModel> {
        FusionModel::new(self.train.model_kind, self.model_config(), self.train.seed)
    }
}

/// Everything `train` produces, before it is written out.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub model: FusionModel,
}

fn prediction_rows(
    split: &str,
    model: &FusionModel,
    windows: &[WindowedSample],
    scaler: Option<&MinMaxScaler>,
    target_col: usize,
) -> Result<Vec<PredictionRow>> {
    let unscale = |v: f64| scaler.map_or(v, |s| s.inverse_column(target_col, v));
    let mut out = Vec::new();
    for (w, s) in windows.iter().enumerate() {
        let pred = &model.predict(s)?[0];
        for (i, (&y, &p)) in s.targets.iter().zip(pred).enumerate() {
            out.push(PredictionRow {
                split: split.to_string(),
                window: w,
                anchor: s.anchor,
                step: i + 1,
                time_index: s.anchor + i + 1,
                truth: unscale(y),
                predicted: unscale(p),
            });
        }
    }
    Ok(out)
}

/// Trains one model end to end and assembles its report.
pub fn run_experiment(exp: &Experiment) -> Result<RunOutcome> {
    let start = Instant::now();
    let (table, scaler) = exp.load()?;
    let train_windows = exp.windows(&table, exp.train.train_range.clone())?;
    let test_windows = exp.windows(&table, exp.train.test_range.clone())?;
    let mut model = exp.build_model()?;
    let history: LossHistory = train(&mut model, &train_windows, &exp.train)?;
    let train_loss = *history.mean.last().expect("history has epochs + 1 entries");
    let test_loss = evaluate(&model, &test_windows)?;
    let target_col = exp.features.len();
    let mut predictions = prediction_rows("train", &model, &train_windows, scaler.as_ref(), target_col)?;
    predictions.extend(prediction_rows("test", &model, &test_windows, scaler.as_ref(), target_col)?);
    let report = RunReport {
        config: exp.echo(),
        seed: exp.train.seed,
        parameter_count: model.num_parameters(),
        loss_history: history,
        train_loss,
        test_loss,
        predictions,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(RunOutcome { report, model })
}

fn out_dir(a: &RunArgs) -> PathBuf {
    a.out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

fn save_run(outcome: &RunOutcome, dir: &Path) -> Result<()> {
    data_io::write_report(&outcome.report, dir)?;
    let params = dir.join(data_io::PARAMS_FILE);
    fs::write(&params, outcome.model.params().to_snapshot()).map_err(|e| Error::io(&params, e))
}

fn cmd_train(a: &RunArgs, exp: &Experiment, out: &mut dyn std::io::Write) -> Result<()> {
    let outcome = run_experiment(exp)?;
    let dir = out_dir(a);
    save_run(&outcome, &dir)?;
    let r = &outcome.report;
    if a.verbose {
        for (e, l) in r.loss_history.mean.iter().enumerate() {
            let _ = writeln!(out, "epoch {e:>4}  loss {l:.6}");
        }
    }
    let _ = writeln!(out, "model {}  parameters {}", exp.train.model_kind, r.parameter_count);
    let _ = writeln!(out, "train loss {:.6}", r.train_loss);
    let _ = writeln!(out, "test loss {:.6}", r.test_loss);
    let _ = writeln!(out, "report written to {}", dir.display());
    Ok(())
}

fn eval_range(a: &EvalArgs, exp: &Experiment) -> Result<RangeInclusive<usize>> {
    match a.range.as_str() {
        "train" => Ok(exp.train.train_range.clone()),
        "test" => Ok(exp.train.test_range.clone()),
        other => parse_range(other),
    }
}

fn cmd_eval(
    a: &EvalArgs,
    exp: &Experiment,
    range: RangeInclusive<usize>,
    out: &mut dyn std::io::Write,
) -> Result<()> {
    let text = fs::read_to_string(&a.params).map_err(|e| Error::io(&a.params, e))?;
    let mut model = exp.build_model()?;
    model.params_mut().load_snapshot(&text)?;
    let (table, _) = exp.load()?;
    let windows = exp.windows(&table, range)?;
    let loss = evaluate(&model, &windows)?;
    let _ = writeln!(out, "loss {loss}");
    Ok(())
}

/// The comparison table: published and measured losses side by side.
pub fn compare_table(rows: &[(ModelKind, usize, f64, f64)]) -> String {
    let mut s = String::from("model,parameters,train_loss,test_loss,published_train_loss,published_test_loss\n");
    for &(kind, n, tr, te) in rows {
        let (_, ptr, pte) = PUBLISHED_LOSSES.iter().find(|p| p.0 == kind).copied().expect("every kind is published");
        let _ = writeln!(s, "{kind},{n},{tr:.4},{te:.4},{ptr:.4},{pte:.4}");
    }
    s
}

fn cmd_compare(a: &RunArgs, base: &Experiment, out: &mut dyn std::io::Write) -> Result<()> {
    let dir = out_dir(a);
    let mut rows = Vec::new();
    for kind in ModelKind::ALL {
        let mut exp = base.clone();
        exp.train.model_kind = kind;
        let outcome = run_experiment(&exp)?;
        save_run(&outcome, &dir.join(kind.to_string()))?;
        let r = &outcome.report;
        rows.push((kind, r.parameter_count, r.train_loss, r.test_loss));
    }
    let table = compare_table(&rows);
    let path = dir.join("compare.csv");
    fs::write(&path, &table).map_err(|e| Error::io(&path, e))?;
    let _ = write!(out, "{table}");
    Ok(())
}

fn cmd_gradcheck(a: &GradcheckArgs, out: &mut dyn std::io::Write) -> Result<bool> {
    let start = Instant::now();
    let fault = if a.inject_fault { 0.1 } else { 0.0 };
    let checks = gradcheck::run_suite(fault)?;
    let mut ok = true;
    for c in &checks {
        ok &= c.passed();
        let _ = writeln!(
            out,
            "{:<22} coords {:>4}  max deviation {:.3e}  {}  ({:.2}s)",
            c.name,
            c.coordinates,
            c.max_abs_deviation,
            if c.passed() { "ok" } else { "FAIL" },
            c.seconds
        );
    }
    let _ = writeln!(out, "runtime {:.2}s", start.elapsed().as_secs_f64());
    Ok(ok)
}

/// Parses `args` (program name first), runs the command, and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn std::io::Write, err: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let validated = match &cli.command {
        Command::Train(a) | Command::Compare(a) => Experiment::from_args(a).map(|e| (Some(e), None)),
        Command::Eval(a) => Experiment::from_args(&a.run)
            .and_then(|e| eval_range(a, &e).map(|r| (Some(e), Some(r)))),
        Command::Gradcheck(_) => Ok((None, None)),
    };
    let (exp, range) = match validated {
        Ok(v) => v,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 2;
        }
    };
    let result = match (&cli.command, exp) {
        (Command::Train(a), Some(exp)) => cmd_train(a, &exp, out).map(|_| true),
        (Command::Eval(a), Some(exp)) => {
            cmd_eval(a, &exp, range.expect("validated with the experiment"), out).map(|_| true)
        }
        (Command::Compare(a), Some(exp)) => cmd_compare(a, &exp, out).map(|_| true),
        (Command::Gradcheck(a), _) => cmd_gradcheck(a, out),
        _ => unreachable!("data commands always carry an experiment"),
    };
    match result {
        Ok(true) => 0,
        Ok(false) => {
            let _ = writeln!(err, "error: gradient check failed");
            1
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}
