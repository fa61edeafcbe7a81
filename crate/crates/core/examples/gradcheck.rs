//! Finite-difference check of every block and both full models.
//!
//!     cargo run --release --example gradcheck

use qtft::gradcheck::run_suite;

fn main() -> qtft::Result<()> {
    for c in run_suite(0.0)? {
        println!(
            "{:<22} {:>4} coordinates  max deviation {:.2e}  {}",
            c.name,
            c.coordinates,
            c.max_abs_deviation,
            if c.passed() { "ok" } else { "FAIL" }
        );
    }
    Ok(())
}
