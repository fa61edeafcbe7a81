//! Statevector simulation of small parameterized circuits.
//!
//! Gates follow `R_a(θ) = exp(−iθA/2)` and `P(λ) = diag(1, e^{iλ})`; qubit 0 is
//! the most significant bit of the basis index. Expectations are exact.

mod circuit;
mod gate;
mod state;

pub use circuit::{
    angle_embedding, basic_entangler_layers, n_local, run_circuit, zz_feature_map,
    ParameterizedCircuit,
};
pub use gate::{Angle, Gate, GateKind, Rotation, Slot};
pub use state::{
    apply_gate, measure_all_z, pauli_z_expectation, rx_matrix, ry_matrix, rz_diagonal,
    sampler_probabilities, StateVector,
};
