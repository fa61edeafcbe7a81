//! Stock CSV ingestion and run artifacts.
//!
//! A run directory holds:
//!
//! - `report.txt`: `key = value` lines, then a `[loss]` and a `[predictions]`
//!   CSV block. It contains nothing time-dependent, so identical runs give
//!   identical bytes.
//! - `loss.csv`: `epoch,mean,sum`.
//! - `predictions.csv`: `split,window,anchor,step,time_index,true,predicted`.
//! - `timing.txt`: wall-clock seconds.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::forecasting::LossHistory;

/// Feature columns of the stock experiment.
pub const DEFAULT_FEATURES: [&str; 4] = ["Open", "High", "Low", "Last"];
pub const DEFAULT_TARGET: &str = "Close";

/// Numeric columns of a CSV file plus its date strings.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesTable {
    /// Requested columns in request order, target last.
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// One entry per row; empty strings when the file has no date column.
    pub dates: Vec<String>,
}

impl TimeSeriesTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        let want = canonical(name);
        self.columns.iter().position(|c| canonical(c) == want)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

/// Lower-cased header name with known synonyms folded together.
fn canonical(name: &str) -> String {
    let n = name.trim().to_lowercase();
    match n.as_str() {
        "previous close" => "prev close".into(),
        "deliverable percent" | "%deliverable" => "%deliverble".into(),
        _ => n,
    }
}

/// Loads `features` then `target` from a headed CSV file.
pub fn load_csv(path: impl AsRef<Path>, features: &[&str], target: &str) -> Result<TimeSeriesTable> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, path, features, target)
}

/// [`load_csv`] on in-memory text; `path` only labels errors.
pub fn parse_csv(text: &str, path: &Path, features: &[&str], target: &str) -> Result<TimeSeriesTable> {
    let mut reader = csv::ReaderBuilder::new().flexible(false).from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(canonical).collect();
    let find = |name: &str| {
        let c = canonical(name);
        header
            .iter()
            .position(|h| *h == c)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let requested: Vec<&str> = features.iter().copied().chain([target]).collect();
    let indices: Vec<usize> = requested.iter().map(|n| find(n)).collect::<Result<_>>()?;
    let date = header.iter().position(|h| h == "date");

    let mut rows = Vec::new();
    let mut dates = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let row = indices
            .iter()
            .zip(&requested)
            .map(|(&j, name)| {
                let cell = record.get(j).unwrap_or("").trim();
                match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(Error::Parse {
                        path: path.to_path_buf(),
                        line,
                        message: format!("column {name}: cannot read {cell:?} as a number"),
                    }),
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
        dates.push(date.and_then(|d| record.get(d)).unwrap_or("").to_string());
    }
    Ok(TimeSeriesTable {
        columns: requested.iter().map(|s| s.to_string()).collect(),
        rows,
        dates,
    })
}

/// One forecast value against the truth.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    /// `train` or `test`.
    pub split: String,
    pub window: usize,
    pub anchor: usize,
    /// Forecast step, starting at 1.
    pub step: usize,
    /// Row index of the forecast target.
    pub time_index: usize,
    pub truth: f64,
    pub predicted: f64,
}

/// Everything a training run produces.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunReport {
    /// Effective configuration as ordered `key, value` pairs.
    pub config: Vec<(String, String)>,
    pub seed: u64,
    pub parameter_count: usize,
    pub loss_history: LossHistory,
    pub train_loss: f64,
    pub test_loss: f64,
    pub predictions: Vec<PredictionRow>,
    pub wall_seconds: f64,
}

pub const REPORT_FILE: &str = "report.txt";
pub const LOSS_FILE: &str = "loss.csv";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const TIMING_FILE: &str = "timing.txt";
pub const PARAMS_FILE: &str = "params.txt";

const LOSS_HEADER: &str = "epoch,mean,sum";
const PREDICTIONS_HEADER: &str = "split,window,anchor,step,time_index,true,predicted";

fn loss_block(h: &LossHistory) -> String {
    let mut out = format!("{LOSS_HEADER}\n");
    for (e, (m, s)) in h.mean.iter().zip(&h.sum).enumerate() {
        let _ = writeln!(out, "{e},{m},{s}");
    }
    out
}

/// The flat prediction table as CSV text.
pub fn predictions_csv(rows: &[PredictionRow]) -> String {
    let mut out = format!("{PREDICTIONS_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.split, r.window, r.anchor, r.step, r.time_index, r.truth, r.predicted
        );
    }
    out
}

/// Parses [`predictions_csv`] output.
pub fn parse_predictions_csv(text: &str) -> Result<Vec<PredictionRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let bad = |m: String| Error::Parse {
            path: PathBuf::from(PREDICTIONS_FILE),
            line,
            message: m,
        };
        if record.len() != 7 {
            return Err(bad(format!("expected 7 fields, got {}", record.len())));
        }
        let int = |i: usize| record[i].parse::<usize>().map_err(|e| bad(format!("field {i}: {e}")));
        let real = |i: usize| record[i].parse::<f64>().map_err(|e| bad(format!("field {i}: {e}")));
        out.push(PredictionRow {
            split: record[0].to_string(),
            window: int(1)?,
            anchor: int(2)?,
            step: int(3)?,
            time_index: int(4)?,
            truth: real(5)?,
            predicted: real(6)?,
        });
    }
    Ok(out)
}

/// The deterministic `report.txt` text.
pub fn report_text(report: &RunReport) -> String {
    let mut out = String::from("# qtft run report\n");
    for (k, v) in &report.config {
        let _ = writeln!(out, "{k} = {v}");
    }
    let _ = writeln!(out, "seed = {}", report.seed);
    let _ = writeln!(out, "parameters = {}", report.parameter_count);
    let _ = writeln!(out, "train_loss = {}", report.train_loss);
    let _ = writeln!(out, "test_loss = {}", report.test_loss);
    out.push_str("\n[loss]\n");
    out.push_str(&loss_block(&report.loss_history));
    out.push_str("\n[predictions]\n");
    out.push_str(&predictions_csv(&report.predictions));
    out
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes the report files into `dir`, creating it if needed.
pub fn write_report(report: &RunReport, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(&dir.join(REPORT_FILE), &report_text(report))?;
    write(&dir.join(LOSS_FILE), &loss_block(&report.loss_history))?;
    write(&dir.join(PREDICTIONS_FILE), &predictions_csv(&report.predictions))?;
    write(&dir.join(TIMING_FILE), &format!("wall_seconds = {}\n", report.wall_seconds))
}

/// Reads a run directory written by [`write_report`].
pub fn read_report(dir: impl AsRef<Path>) -> Result<RunReport> {
    let dir = dir.as_ref();
    let path = dir.join(REPORT_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.clone(),
        line,
        message,
    };

    let mut report = RunReport::default();
    let mut section = "";
    let mut block = String::new();
    let mut blocks: Vec<(&str, String, usize)> = Vec::new();
    let mut block_start = 0;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.starts_with('[') && line.ends_with(']') {
            if !section.is_empty() {
                blocks.push((section, std::mem::take(&mut block), block_start));
            }
            section = &line[1..line.len() - 1];
            block_start = lineno + 1;
            continue;
        }
        if !section.is_empty() {
            if !line.is_empty() {
                block.push_str(line);
                block.push('\n');
            }
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once(" = ")
            .ok_or_else(|| parse_err(lineno, format!("expected `key = value`, found {line:?}")))?;
        let num = |v: &str| v.parse::<f64>().map_err(|e| parse_err(lineno, e.to_string()));
        let int = |v: &str| v.parse::<u64>().map_err(|e| parse_err(lineno, e.to_string()));
        match k {
            "seed" => report.seed = int(v)?,
            "parameters" => report.parameter_count = int(v)? as usize,
            "train_loss" => report.train_loss = num(v)?,
            "test_loss" => report.test_loss = num(v)?,
            _ => report.config.push((k.to_string(), v.to_string())),
        }
    }
    if !section.is_empty() {
        blocks.push((section, block, block_start));
    }

    for (name, body, start) in blocks {
        match name {
            "loss" => {
                for (i, line) in body.lines().skip(1).enumerate() {
                    let f: Vec<&str> = line.split(',').collect();
                    let bad = || parse_err(start + 1 + i, format!("bad loss row {line:?}"));
                    if f.len() != 3 {
                        return Err(bad());
                    }
                    report.loss_history.mean.push(f[1].parse().map_err(|_| bad())?);
                    report.loss_history.sum.push(f[2].parse().map_err(|_| bad())?);
                }
            }
            "predictions" => report.predictions = parse_predictions_csv(&body)?,
            other => return Err(parse_err(start - 1, format!("unknown section [{other}]"))),
        }
    }

    let timing = dir.join(TIMING_FILE);
    if let Ok(t) = fs::read_to_string(&timing) {
        if let Some(v) = t.trim().strip_prefix("wall_seconds = ") {
            report.wall_seconds = v.parse().unwrap_or(0.0);
        }
    }
    Ok(report)
}
