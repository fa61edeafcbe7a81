//! Runs all three models with matched seeds and prints the comparison table,
//! the same as `qtft compare` without writing per-model reports.
//!
//!     cargo run --release --example compare -- [seed]

use clap::Parser;
use qtft::cli::{compare_table, run_experiment, Experiment, RunArgs};
use qtft::config::ModelKind;

#[derive(Parser)]
struct Flags {
    #[command(flatten)]
    run: RunArgs,
}

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/axisbank_2000_reconstructed.csv");

fn main() -> qtft::Result<()> {
    let seed = std::env::args().nth(1).unwrap_or_else(|| "7".into());
    let flags = Flags::parse_from(["compare", "--data", DATA, "--seed", &seed]);
    let base = Experiment::from_args(&flags.run)?;
    let mut rows = Vec::new();
    for kind in ModelKind::ALL {
        let mut exp = base.clone();
        exp.train.model_kind = kind;
        let r = run_experiment(&exp)?.report;
        rows.push((kind, r.parameter_count, r.train_loss, r.test_loss));
    }
    print!("{}", compare_table(&rows));
    Ok(())
}
