//! Parameter-shift Jacobian of a ZZ feature map with an n-local ansatz,
//! checked against central differences.
//!
//!     cargo run --example parameter_shift

use qtft::grad::circuit_jacobian;
use qtft::quantum::{measure_all_z, n_local, zz_feature_map};

fn main() -> qtft::Result<()> {
    let circuit = zz_feature_map(3, 1)?.then(&n_local(3, 2)?)?;
    let x = [0.2, -0.5, 0.9];
    let w: Vec<f64> = (0..circuit.num_weight_slots()).map(|i| 0.1 * i as f64 - 0.4).collect();
    let jac = circuit_jacobian(&circuit, &x, &w)?;

    let h = 1e-6;
    let z = |w: &[f64]| measure_all_z(&circuit.run(&x, w).expect("valid bindings"));
    println!("{:>6} {:>6} {:>14} {:>14}", "qubit", "weight", "shift rule", "central diff");
    for s in 0..w.len() {
        let (mut up, mut down) = (w.clone(), w.clone());
        up[s] += h;
        down[s] -= h;
        let (zu, zd) = (z(&up), z(&down));
        for q in 0..3 {
            println!("{q:>6} {s:>6} {:>14.8} {:>14.8}", jac.weight(q, s), (zu[q] - zd[q]) / (2.0 * h));
        }
    }
    for q in 0..3 {
        println!("d⟨Z_{q}⟩/dx = {:?}", (0..3).map(|s| jac.feature(q, s)).collect::<Vec<_>>());
    }
    Ok(())
}
