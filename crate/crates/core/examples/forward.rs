//! Forecasts from untrained TFT, QTFT and QTFT-with-QLSTM models on one
//! synthetic window.
//!
//!     cargo run --example forward

use qtft::config::{ModelConfig, ModelKind};
use qtft::grad::Tape;
use qtft::gradcheck::desk_sample;
use qtft::model::FusionModel;

fn main() -> qtft::Result<()> {
    let config = ModelConfig {
        quantiles: vec![0.1, 0.5, 0.9],
        ..ModelConfig::default()
    };
    let sample = desk_sample(&config, 11);
    for kind in ModelKind::ALL {
        let model = FusionModel::new(kind, config.clone(), 7)?;
        println!("{kind}: {} parameters", model.num_parameters());
        for (q, f) in config.quantiles.iter().zip(model.predict(&sample)?) {
            println!("  q={q}  {f:?}");
        }
        let mut t = Tape::new();
        let p = model.params().bind(&mut t);
        let trace = model.forward_trace(&mut t, &p, &sample)?;
        for (step, &w) in trace.past_weights.iter().enumerate() {
            println!("  past step {step} variable weights {:?}", t.value(w));
        }
    }
    Ok(())
}
