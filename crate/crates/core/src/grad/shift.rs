//! Parameter-shift derivatives of per-qubit `⟨Z⟩` expectations.
//!
//! Every parametric gate is differentiated with respect to its own bound
//! angle by re-running the circuit with that angle shifted; slot gradients
//! then follow from the chain rule through each gate's [`Angle`] map. A slot
//! read by several gates collects one term per occurrence.
//!
//! RX/RY/RZ/PHASE have generators with eigenvalue spacing 1 and use the
//! two-term rule `½[f(a + π/2) − f(a − π/2)]` (PHASE equals RZ up to a global
//! phase). CRZ has three distinct generator eigenvalues and needs the
//! four-term rule with shifts `±π/2` and `±3π/2`.
//!
//! [`Angle`]: crate::quantum::Angle

use std::f64::consts::{FRAC_PI_2, SQRT_2};

use crate::error::{Error, Result};
use crate::quantum::{measure_all_z, GateKind, ParameterizedCircuit, Slot};

/// `d⟨Z_q⟩/d slot` for every measured qubit `q`, row-major `num_qubits × slots`.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitJacobian {
    pub num_qubits: usize,
    pub features: Vec<f64>,
    pub weights: Vec<f64>,
}

impl CircuitJacobian {
    pub fn feature(&self, qubit: usize, slot: usize) -> f64 {
        let cols = self.features.len() / self.num_qubits;
        self.features[qubit * cols + slot]
    }

    pub fn weight(&self, qubit: usize, slot: usize) -> f64 {
        let cols = self.weights.len() / self.num_qubits;
        self.weights[qubit * cols + slot]
    }
}

fn shifted_expectations(
    circuit: &ParameterizedCircuit,
    angles: &[Option<f64>],
    gate: usize,
    shift: f64,
) -> Result<Vec<f64>> {
    let mut shifted = angles.to_vec();
    if let Some(a) = shifted[gate].as_mut() {
        *a += shift;
    }
    Ok(measure_all_z(&circuit.run_bound(&shifted)?))
}

/// `d⟨Z_q⟩/d(angle of gate)` for all qubits.
fn gate_derivative(
    circuit: &ParameterizedCircuit,
    angles: &[Option<f64>],
    gate: usize,
) -> Result<Vec<f64>> {
    let kind = circuit.ops()[gate].kind();
    let diff = |shift: f64| -> Result<Vec<f64>> {
        let plus = shifted_expectations(circuit, angles, gate, shift)?;
        let minus = shifted_expectations(circuit, angles, gate, -shift)?;
        Ok(plus.iter().zip(&minus).map(|(p, m)| p - m).collect())
    };
    match kind {
        GateKind::RX | GateKind::RY | GateKind::RZ | GateKind::Phase => {
            Ok(diff(FRAC_PI_2)?.into_iter().map(|d| 0.5 * d).collect())
        }
        GateKind::CRZ => {
            let c1 = (SQRT_2 + 1.0) / (4.0 * SQRT_2);
            let c2 = (SQRT_2 - 1.0) / (4.0 * SQRT_2);
            let near = diff(FRAC_PI_2)?;
            let far = diff(3.0 * FRAC_PI_2)?;
            Ok(near.iter().zip(&far).map(|(n, f)| c1 * n - c2 * f).collect())
        }
        GateKind::H | GateKind::CNOT => Ok(vec![0.0; circuit.num_qubits()]),
    }
}

/// Full Jacobian of `measure_all_z ∘ run_circuit` with respect to every
/// feature and weight slot.
pub fn circuit_jacobian(
    circuit: &ParameterizedCircuit,
    features: &[f64],
    weights: &[f64],
) -> Result<CircuitJacobian> {
    let angles = circuit.bind(features, weights)?;
    let n = circuit.num_qubits();
    let (nf, nw) = (circuit.num_feature_slots(), circuit.num_weight_slots());
    let mut jac = CircuitJacobian {
        num_qubits: n,
        features: vec![0.0; n * nf],
        weights: vec![0.0; n * nw],
    };
    for (g, gate) in circuit.ops().iter().enumerate() {
        let Some(angle) = gate.angle() else { continue };
        let partials = angle.partials(features);
        if partials.is_empty() {
            continue;
        }
        let d = gate_derivative(circuit, &angles, g)?;
        for (slot, scale) in partials {
            let (buf, cols, col) = match slot {
                Slot::Feature(s) => (&mut jac.features, nf, s),
                Slot::Weight(s) => (&mut jac.weights, nw, s),
            };
            for (q, dq) in d.iter().enumerate() {
                buf[q * cols + col] += scale * dq;
            }
        }
    }
    Ok(jac)
}

/// `d⟨Z_out_qubit⟩/d slot` by the parameter-shift rule. A slot no gate reads
/// has derivative zero.
pub fn param_shift_partial(
    circuit: &ParameterizedCircuit,
    features: &[f64],
    weights: &[f64],
    out_qubit: usize,
    slot: Slot,
) -> Result<f64> {
    if out_qubit >= circuit.num_qubits() {
        return Err(Error::InvalidCircuit(format!(
            "qubit {out_qubit} out of range for a {}-qubit circuit",
            circuit.num_qubits()
        )));
    }
    let in_range = match slot {
        Slot::Feature(s) => s < circuit.num_feature_slots(),
        Slot::Weight(s) => s < circuit.num_weight_slots(),
    };
    if !in_range {
        return Err(Error::Binding(format!("slot {slot:?} is not declared by the circuit")));
    }
    let angles = circuit.bind(features, weights)?;
    let mut total = 0.0;
    for (g, gate) in circuit.ops().iter().enumerate() {
        let Some(angle) = gate.angle() else { continue };
        for (s, scale) in angle.partials(features) {
            if s == slot {
                total += scale * gate_derivative(circuit, &angles, g)?[out_qubit];
            }
        }
    }
    Ok(total)
}
