//! A dense layer feeding a circuit, differentiated end to end on the tape.
//!
//!     cargo run --example hybrid_tape

use std::sync::Arc;

use qtft::grad::Tape;
use qtft::quantum::{angle_embedding, basic_entangler_layers, Rotation};

fn main() -> qtft::Result<()> {
    let circuit = Arc::new(angle_embedding(2, Rotation::X)?.then(&basic_entangler_layers(2, 1, Rotation::Y)?)?);
    let mut t = Tape::new();
    let w = t.leaf(vec![0.5, -0.3, 0.8, 0.1]);
    let x = t.leaf(vec![1.0, 2.0]);
    let theta = t.leaf(vec![0.25, -0.6]);
    let h = t.matvec(w, x)?;
    let h = t.elu(h);
    let z = t.quantum(circuit, h, theta)?;
    let loss = t.pinball(z, &[0.2, -0.4], 0.5)?;
    t.backward(loss)?;
    println!("⟨Z⟩      {:?}", t.value(z));
    println!("loss     {:.6}", t.value(loss)[0]);
    println!("dL/dW    {:?}", t.grad(w));
    println!("dL/dθ    {:?}", t.grad(theta));
    Ok(())
}
