//! Builds a Bell pair and a two-qubit VQC, printing amplitudes and ⟨Z⟩.
//!
//!     cargo run --example statevector

use qtft::quantum::{
    angle_embedding, basic_entangler_layers, measure_all_z, sampler_probabilities, Gate, ParameterizedCircuit,
    Rotation,
};

fn main() -> qtft::Result<()> {
    let bell = ParameterizedCircuit::new(2, vec![Gate::h(0), Gate::cnot(0, 1)], 0, 0)?;
    let psi = bell.run(&[], &[])?;
    println!("Bell state");
    for (i, a) in psi.amplitudes().iter().enumerate() {
        println!("  |{i:02b}⟩  {:+.4} {:+.4}i", a.re, a.im);
    }
    println!("  probabilities {:?}", sampler_probabilities(&psi));

    // angle embedding followed by two entangling layers
    let vqc = angle_embedding(2, Rotation::X)?.then(&basic_entangler_layers(2, 2, Rotation::X)?)?;
    let x = [0.4, -1.1];
    let w = [0.3, 0.7, -0.2, 1.5];
    println!("VQC with {} gates, {} weights", vqc.ops().len(), vqc.num_weight_slots());
    println!("  ⟨Z⟩ = {:?}", measure_all_z(&vqc.run(&x, &w)?));
    Ok(())
}
