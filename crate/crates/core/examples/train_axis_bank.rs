//! Trains one model on the stock series and prints the loss curve.
//!
//!     cargo run --release --example train_axis_bank -- qtft [data.csv]

use qtft::config::ModelKind;
use qtft::data_io::{load_csv, DEFAULT_FEATURES, DEFAULT_TARGET};
use qtft::forecasting::{evaluate, make_windows, train, TrainConfig};
use qtft::model::FusionModel;

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/axisbank_2000_reconstructed.csv");

fn main() -> qtft::Result<()> {
    let mut args = std::env::args().skip(1);
    let kind: ModelKind = args.next().as_deref().unwrap_or("tft").parse()?;
    let path = args.next().unwrap_or_else(|| DATA.to_string());
    let cfg = TrainConfig {
        model_kind: kind,
        ..TrainConfig::default()
    };
    let table = load_csv(&path, &DEFAULT_FEATURES, DEFAULT_TARGET)?;
    let target = DEFAULT_FEATURES.len();
    let train_w = make_windows(&table.rows, target, cfg.past_steps, cfg.forecast_steps, cfg.train_range.clone())?;
    let test_w = make_windows(&table.rows, target, cfg.past_steps, cfg.forecast_steps, cfg.test_range.clone())?;

    let mut model = FusionModel::new(kind, cfg.model_config(target), cfg.seed)?;
    let history = train(&mut model, &train_w, &cfg)?;
    for (epoch, loss) in history.mean.iter().enumerate().step_by(10) {
        println!("epoch {epoch:>3}  loss {loss:.4}");
    }
    println!("final train loss {:.4}", history.mean.last().unwrap());
    println!("test loss {:.4}", evaluate(&model, &test_w)?);
    for w in &test_w {
        println!("anchor {}  truth {:?}  forecast {:?}", w.anchor, w.targets, model.predict(w)?[0]);
    }
    Ok(())
}
