//! Classical temporal fusion transformer blocks.
//!
//! The assembled forecaster lives in [`crate::model::FusionModel`]; build it
//! with [`tft_model`] or `ModelKind::Tft`.

mod layers;

pub use layers::{
    attention, attention_values, lstm_seq, Dense, Glu, Grn, InterpretableAttention, LstmCell, VariableSelection,
};
pub(crate) use layers::{lstm_update, mean_heads};

use crate::config::{ModelConfig, ModelKind};
use crate::error::Result;
use crate::forecasting::WindowedSample;
use crate::model::FusionModel;

/// Classical forecaster with freshly initialized parameters.
pub fn tft_model(config: ModelConfig, seed: u64) -> Result<FusionModel> {
    FusionModel::new(ModelKind::Tft, config, seed)
}

/// `[quantile][step]` forecasts of a classical model.
pub fn tft_forward(model: &FusionModel, sample: &WindowedSample) -> Result<Vec<Vec<f64>>> {
    model.predict(sample)
}
