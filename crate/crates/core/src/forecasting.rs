//! Sliding windows, the quantile loss, and full-batch training.

use std::ops::RangeInclusive;

use rayon::prelude::*;

use crate::config::{ModelConfig, ModelKind, QuantumConfig};
use crate::error::{Error, Result};
use crate::grad::{kernels, sgd_step};
use crate::model::FusionModel;

/// One forecasting window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedSample {
    /// `k × m_past`, oldest row first.
    pub past: Vec<Vec<f64>>,
    /// `τ_max × m_future`.
    pub future_known: Vec<Vec<f64>>,
    pub static_vars: Vec<f64>,
    /// True target values for steps `1..=τ_max`.
    pub targets: Vec<f64>,
    /// Row index of the last past step.
    pub anchor: usize,
}

/// Mean pinball loss `(1/m) Σ max((q−1)(y−ŷ), q(y−ŷ))`.
pub fn quantile_loss(y: &[f64], yhat: &[f64], q: f64) -> Result<f64> {
    if y.len() != yhat.len() || y.is_empty() {
        return Err(Error::Shape(format!(
            "quantile loss needs equal nonempty lengths, got {} and {}",
            y.len(),
            yhat.len()
        )));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Config(format!("quantile {q} is outside (0, 1)")));
    }
    Ok(kernels::pinball(y, yhat, q))
}

/// Builds stride-1 windows whose rows all lie inside `range`.
///
/// Past rows take every column except `target_col`. The known-future input
/// is the normalized time index `row / (T − 1)`, and the static input is the
/// constant `1.0`.
pub fn make_windows(
    series: &[Vec<f64>],
    target_col: usize,
    k: usize,
    tau: usize,
    range: RangeInclusive<usize>,
) -> Result<Vec<WindowedSample>> {
    if k == 0 || tau == 0 {
        return Err(Error::Config("window lengths must be at least 1".into()));
    }
    let rows = series.len();
    let (start, end) = (*range.start(), *range.end());
    if range.is_empty() || end >= rows {
        return Err(Error::EmptyWindows(format!(
            "range {start}..={end} does not fit a series of {rows} rows"
        )));
    }
    let width = series[0].len();
    if target_col >= width {
        return Err(Error::Shape(format!("target column {target_col} of {width}")));
    }
    if let Some(i) = series.iter().position(|r| r.len() != width) {
        return Err(Error::Shape(format!("row {i} has {} columns, expected {width}", series[i].len())));
    }
    if end + 1 - start < k + tau {
        return Err(Error::EmptyWindows(format!(
            "range {start}..={end} is shorter than {k} past plus {tau} future steps"
        )));
    }
    let denom = (rows.max(2) - 1) as f64;
    let windows = (start + k - 1..=end - tau)
        .map(|t| WindowedSample {
            past: series[t + 1 - k..=t]
                .iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .filter(|&(c, _)| c != target_col)
                        .map(|(_, &v)| v)
                        .collect()
                })
                .collect(),
            future_known: (t + 1..=t + tau).map(|i| vec![i as f64 / denom]).collect(),
            static_vars: vec![1.0],
            targets: (t + 1..=t + tau).map(|i| series[i][target_col]).collect(),
            anchor: t,
        })
        .collect();
    Ok(windows)
}

/// Per-column affine map onto `[0, 1]`, fitted on a subset of rows.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows.first().ok_or_else(|| Error::Shape("cannot fit a scaler on zero rows".into()))?;
        let mut min = first.clone();
        let mut max = first.clone();
        for r in rows {
            for (j, &v) in r.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Ok(Self { min, max })
    }

    fn span(&self, j: usize) -> f64 {
        let s = self.max[j] - self.min[j];
        if s == 0.0 {
            1.0
        } else {
            s
        }
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|r| r.iter().enumerate().map(|(j, &v)| (v - self.min[j]) / self.span(j)).collect())
            .collect()
    }

    pub fn inverse_column(&self, j: usize, v: f64) -> f64 {
        v * self.span(j) + self.min[j]
    }
}

/// Experiment settings; defaults reproduce the desk-scale stock run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub quantile: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub past_steps: usize,
    pub forecast_steps: usize,
    pub train_range: RangeInclusive<usize>,
    pub test_range: RangeInclusive<usize>,
    pub seed: u64,
    pub model_kind: ModelKind,
    pub d_model: usize,
    pub ansatz_layers: usize,
    pub heads: usize,
    pub min_max_scaling: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            quantile: 0.5,
            learning_rate: 0.1,
            epochs: 100,
            past_steps: 2,
            forecast_steps: 2,
            train_range: 0..=19,
            test_range: 20..=26,
            seed: 7,
            model_kind: ModelKind::Tft,
            d_model: 2,
            ansatz_layers: 2,
            heads: 1,
            min_max_scaling: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.quantile > 0.0 && self.quantile < 1.0) {
            return Err(Error::Config(format!("quantile {} is outside (0, 1)", self.quantile)));
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(Error::Config(format!("learning rate {} must be finite and non-negative", self.learning_rate)));
        }
        if self.past_steps == 0 || self.forecast_steps == 0 {
            return Err(Error::Config("past and forecast steps must be at least 1".into()));
        }
        for (name, r) in [("train", &self.train_range), ("test", &self.test_range)] {
            if r.is_empty() {
                return Err(Error::Config(format!("{name} range is empty")));
            }
        }
        let (a, b) = (&self.train_range, &self.test_range);
        if a.start() <= b.end() && b.start() <= a.end() {
            return Err(Error::Config("train and test ranges overlap".into()));
        }
        self.model_config(4).validate()
    }

    /// Model shapes for `num_past` past features.
    pub fn model_config(&self, num_past: usize) -> ModelConfig {
        ModelConfig {
            d_model: self.d_model,
            num_past,
            past_steps: self.past_steps,
            forecast_steps: self.forecast_steps,
            heads: self.heads,
            quantiles: vec![self.quantile],
            quantum: QuantumConfig {
                layers: self.ansatz_layers,
                ..QuantumConfig::default()
            },
            ..ModelConfig::default()
        }
    }
}

/// Per-epoch losses; entry `e` is measured before update `e`, the last after
/// the final update.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LossHistory {
    /// Mean over windows.
    pub mean: Vec<f64>,
    /// Sum over windows.
    pub sum: Vec<f64>,
}

/// Mean loss and mean gradient over all windows.
///
/// Windows are processed in parallel and reduced in input order, so the
/// result does not depend on the thread count.
pub fn batch_loss_and_grad(model: &FusionModel, samples: &[WindowedSample]) -> Result<(f64, Vec<f64>)> {
    if samples.is_empty() {
        return Err(Error::EmptyWindows("no training windows".into()));
    }
    let parts: Vec<(f64, Vec<f64>)> = samples
        .par_iter()
        .map(|s| model.loss_and_grad(s))
        .collect::<Result<_>>()?;
    let n = samples.len() as f64;
    let mut grad = vec![0.0; model.num_parameters()];
    let mut loss = 0.0;
    for (l, g) in &parts {
        loss += l;
        for (a, b) in grad.iter_mut().zip(g) {
            *a += b;
        }
    }
    grad.iter_mut().for_each(|g| *g /= n);
    Ok((loss / n, grad))
}

/// Full-batch gradient descent for `epochs` updates.
pub fn train(model: &mut FusionModel, samples: &[WindowedSample], cfg: &TrainConfig) -> Result<LossHistory> {
    cfg.validate()?;
    let n = samples.len() as f64;
    let mut history = LossHistory::default();
    for epoch in 0..=cfg.epochs {
        let (loss, grad) = if epoch < cfg.epochs {
            batch_loss_and_grad(model, samples)?
        } else {
            (evaluate(model, samples)?, Vec::new())
        };
        if !loss.is_finite() {
            return Err(Error::TrainingDiverged { epoch, loss });
        }
        history.mean.push(loss);
        history.sum.push(loss * n);
        if epoch < cfg.epochs {
            model.params_mut().set_flat_grads(&grad)?;
            sgd_step(model.params_mut(), cfg.learning_rate);
        }
    }
    Ok(history)
}

/// Mean loss over windows, without touching the parameters.
pub fn evaluate(model: &FusionModel, samples: &[WindowedSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyWindows("no evaluation windows".into()));
    }
    let losses: Vec<f64> = samples.par_iter().map(|s| model.loss(s)).collect::<Result<_>>()?;
    Ok(losses.iter().sum::<f64>() / samples.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_losses() {
        assert_eq!(quantile_loss(&[3.0, -1.0], &[3.0, -1.0], 0.3).unwrap(), 0.0);
        assert!((quantile_loss(&[2.0], &[0.0], 0.5).unwrap() - 1.0).abs() < 1e-12);
        assert!((quantile_loss(&[0.0], &[1.0], 0.9).unwrap() - 0.1).abs() < 1e-12);
        assert!(quantile_loss(&[1.0], &[1.0, 2.0], 0.5).is_err());
        assert!(quantile_loss(&[1.0], &[1.0], 1.0).is_err());
    }

    fn series(rows: usize) -> Vec<Vec<f64>> {
        (0..rows).map(|i| vec![i as f64, 10.0 + i as f64]).collect()
    }

    #[test]
    fn window_layout() {
        let w = make_windows(&series(5), 1, 2, 2, 0..=4).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(w[0].anchor, 1);
        assert_eq!(w[1].anchor, 2);
        assert_eq!(w[0].past, vec![vec![0.0], vec![1.0]]);
        assert_eq!(w[0].targets, vec![12.0, 13.0]);
        assert_eq!(w[1].future_known, vec![vec![0.75], vec![1.0]]);
        assert_eq!(w[0].past[1], w[1].past[0]);
        assert_eq!(make_windows(&series(2), 1, 1, 1, 0..=1).unwrap().len(), 1);
        assert!(make_windows(&series(3), 1, 2, 2, 0..=2).is_err());
    }

    #[test]
    fn window_count_formula() {
        for rows in 1..12 {
            for k in 1..4 {
                for tau in 1..4 {
                    let s = series(rows);
                    let got = make_windows(&s, 0, k, tau, 0..=rows - 1).map(|w| w.len()).unwrap_or(0);
                    let want = (rows + 1).saturating_sub(k + tau);
                    assert_eq!(got, want, "rows {rows} k {k} tau {tau}");
                }
            }
        }
    }

    #[test]
    fn scaler_round_trip() {
        let rows = series(4);
        let sc = MinMaxScaler::fit(&rows).unwrap();
        let t = sc.transform(&rows);
        assert_eq!(t[0], vec![0.0, 0.0]);
        assert_eq!(t[3], vec![1.0, 1.0]);
        assert!((sc.inverse_column(1, t[2][1]) - 12.0).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let overlap = TrainConfig {
            test_range: 19..=26,
            ..TrainConfig::default()
        };
        assert!(overlap.validate().is_err());
    }
}
