//! Quantum blocks of the hybrid forecaster: measured VQC layers, QGLU,
//! QGRN, quantum attention, QLSTM and quantum variable selection.

mod blocks;

pub use blocks::{
    ansatz_circuit, encoding_circuit, vqc_apply, QAttention, QGlu, QGrn, QLstmCell, QVariableSelection, VqcBlock,
};

use crate::config::{ModelConfig, ModelKind};
use crate::error::Result;
use crate::forecasting::WindowedSample;
use crate::model::FusionModel;

/// Hybrid forecaster; `qlstm` swaps the classical LSTM cells for quantum ones.
pub fn qtft_model(config: ModelConfig, seed: u64, qlstm: bool) -> Result<FusionModel> {
    let kind = if qlstm { ModelKind::QtftQlstm } else { ModelKind::Qtft };
    FusionModel::new(kind, config, seed)
}

/// `[quantile][step]` forecasts of a hybrid model.
pub fn qtft_forward(model: &FusionModel, sample: &WindowedSample) -> Result<Vec<Vec<f64>>> {
    model.predict(sample)
}
