use super::gate::{Angle, Gate, GateKind, Rotation, Slot};
use super::state::StateVector;
use crate::error::{Error, Result};

/// An immutable gate list whose angles read from feature and weight slots.
///
/// Circuits start from `|0…0⟩`; data-encoding gates read feature slots and
/// variational gates read weight slots.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterizedCircuit {
    num_qubits: usize,
    ops: Vec<Gate>,
    num_feature_slots: usize,
    num_weight_slots: usize,
}

impl ParameterizedCircuit {
    /// Validates and freezes a gate list.
    pub fn new(
        num_qubits: usize,
        ops: Vec<Gate>,
        num_feature_slots: usize,
        num_weight_slots: usize,
    ) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::InvalidCircuit("circuit needs at least one qubit".into()));
        }
        for (i, gate) in ops.iter().enumerate() {
            if let Some(&q) = gate.qubits().iter().find(|&&q| q >= num_qubits) {
                return Err(Error::InvalidCircuit(format!(
                    "gate {i} ({:?}) touches qubit {q} of a {num_qubits}-qubit circuit",
                    gate.kind()
                )));
            }
            for slot in gate.angle().map(Angle::slots).unwrap_or_default() {
                let ok = match slot {
                    Slot::Feature(s) => s < num_feature_slots,
                    Slot::Weight(s) => s < num_weight_slots,
                };
                if !ok {
                    return Err(Error::InvalidCircuit(format!(
                        "gate {i} reads undeclared slot {slot:?}"
                    )));
                }
            }
        }
        Ok(Self {
            num_qubits,
            ops,
            num_feature_slots,
            num_weight_slots,
        })
    }

    pub fn empty(num_qubits: usize) -> Result<Self> {
        Self::new(num_qubits, Vec::new(), 0, 0)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn ops(&self) -> &[Gate] {
        &self.ops
    }

    pub fn num_feature_slots(&self) -> usize {
        self.num_feature_slots
    }

    pub fn num_weight_slots(&self) -> usize {
        self.num_weight_slots
    }

    /// Runs `self` then `next` on the same register. Slot spaces are
    /// concatenated: `next`'s feature and weight slots follow `self`'s.
    pub fn then(&self, next: &ParameterizedCircuit) -> Result<Self> {
        if next.num_qubits != self.num_qubits {
            return Err(Error::InvalidCircuit(format!(
                "cannot compose a {}-qubit circuit after a {}-qubit one",
                next.num_qubits, self.num_qubits
            )));
        }
        let mut ops = self.ops.clone();
        ops.extend(
            next.ops
                .iter()
                .map(|g| g.offset(0, self.num_feature_slots, self.num_weight_slots)),
        );
        Self::new(
            self.num_qubits,
            ops,
            self.num_feature_slots + next.num_feature_slots,
            self.num_weight_slots + next.num_weight_slots,
        )
    }

    /// Resolves every gate angle; `None` for non-parametric gates.
    pub fn bind(&self, features: &[f64], weights: &[f64]) -> Result<Vec<Option<f64>>> {
        if features.len() != self.num_feature_slots {
            return Err(Error::Binding(format!(
                "expected {} features, got {}",
                self.num_feature_slots,
                features.len()
            )));
        }
        if weights.len() != self.num_weight_slots {
            return Err(Error::Binding(format!(
                "expected {} weights, got {}",
                self.num_weight_slots,
                weights.len()
            )));
        }
        Ok(self
            .ops
            .iter()
            .map(|g| g.angle().map(|a| a.eval(features, weights)))
            .collect())
    }

    /// Runs the circuit with explicit per-gate angles (as returned by [`bind`]).
    ///
    /// [`bind`]: ParameterizedCircuit::bind
    pub fn run_bound(&self, angles: &[Option<f64>]) -> Result<StateVector> {
        let mut state = StateVector::zero(self.num_qubits)?;
        for (gate, &angle) in self.ops.iter().zip(angles) {
            state.apply(gate, angle)?;
        }
        Ok(state)
    }

    pub fn run(&self, features: &[f64], weights: &[f64]) -> Result<StateVector> {
        self.run_bound(&self.bind(features, weights)?)
    }
}

/// `V(θ)U(x)|0…0⟩`.
pub fn run_circuit(
    circuit: &ParameterizedCircuit,
    features: &[f64],
    weights: &[f64],
) -> Result<StateVector> {
    circuit.run(features, weights)
}

/// One rotation per qubit whose angle is the corresponding feature.
pub fn angle_embedding(num_qubits: usize, rotation: Rotation) -> Result<ParameterizedCircuit> {
    let ops = (0..num_qubits)
        .map(|q| Gate::rotation(rotation.gate_kind(), q, Angle::feature(q)))
        .collect();
    ParameterizedCircuit::new(num_qubits, ops, num_qubits, 0)
}

/// Second-order Pauli-Z evolution feature map, `reps` repetitions.
pub fn zz_feature_map(num_qubits: usize, reps: usize) -> Result<ParameterizedCircuit> {
    if reps == 0 {
        return Err(Error::InvalidCircuit("zz_feature_map needs reps ≥ 1".into()));
    }
    let mut ops = Vec::new();
    for _ in 0..reps {
        ops.extend((0..num_qubits).map(Gate::h));
        for q in 0..num_qubits {
            ops.push(Gate::rotation(
                GateKind::Phase,
                q,
                Angle::Scaled {
                    slot: Slot::Feature(q),
                    scale: 2.0,
                },
            ));
        }
        for i in 0..num_qubits {
            for j in i + 1..num_qubits {
                ops.push(Gate::cnot(i, j));
                ops.push(Gate::rotation(
                    GateKind::Phase,
                    j,
                    Angle::ZzPair {
                        first: i,
                        second: j,
                        scale: 2.0,
                    },
                ));
                ops.push(Gate::cnot(i, j));
            }
        }
    }
    ParameterizedCircuit::new(num_qubits, ops, num_qubits, 0)
}

fn cnot_ring(num_qubits: usize, ops: &mut Vec<Gate>) {
    if num_qubits < 2 {
        return;
    }
    for q in 0..num_qubits {
        ops.push(Gate::cnot(q, (q + 1) % num_qubits));
    }
}

fn rotation_layer(num_qubits: usize, kind: GateKind, first_weight: usize, ops: &mut Vec<Gate>) {
    for q in 0..num_qubits {
        ops.push(Gate::rotation(kind, q, Angle::weight(first_weight + q)));
    }
}

/// `num_layers` × (one rotation per qubit, then a closed CNOT chain).
pub fn basic_entangler_layers(
    num_qubits: usize,
    num_layers: usize,
    rotation: Rotation,
) -> Result<ParameterizedCircuit> {
    let mut ops = Vec::new();
    for layer in 0..num_layers {
        rotation_layer(num_qubits, rotation.gate_kind(), layer * num_qubits, &mut ops);
        cnot_ring(num_qubits, &mut ops);
    }
    ParameterizedCircuit::new(num_qubits, ops, 0, num_layers * num_qubits)
}

/// `num_layers` × (RY per qubit, then a CNOT ring), followed by a final RY layer.
pub fn n_local(num_qubits: usize, num_layers: usize) -> Result<ParameterizedCircuit> {
    if num_qubits < 2 {
        return Err(Error::InvalidCircuit("n_local needs at least two qubits".into()));
    }
    let mut ops = Vec::new();
    for layer in 0..num_layers {
        rotation_layer(num_qubits, GateKind::RY, layer * num_qubits, &mut ops);
        cnot_ring(num_qubits, &mut ops);
    }
    rotation_layer(num_qubits, GateKind::RY, num_layers * num_qubits, &mut ops);
    ParameterizedCircuit::new(num_qubits, ops, 0, (num_layers + 1) * num_qubits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;
    use crate::quantum::state::{measure_all_z, pauli_z_expectation};

    #[test]
    fn empty_circuit_is_ground_state() {
        let s = run_circuit(&ParameterizedCircuit::empty(2).unwrap(), &[], &[]).unwrap();
        assert_eq!(s, StateVector::zero(2).unwrap());
    }

    #[test]
    fn ry_weight_slot_pi() {
        let c = ParameterizedCircuit::new(1, vec![Gate::rotation(GateKind::RY, 0, Angle::weight(0))], 0, 1)
            .unwrap();
        let s = run_circuit(&c, &[], &[PI]).unwrap();
        assert!(s.amplitudes()[0].norm() < 1e-12);
        assert!((s.amplitudes()[1].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn binding_length_errors() {
        let c = angle_embedding(2, Rotation::X).unwrap();
        assert!(matches!(c.run(&[0.0], &[]), Err(Error::Binding(_))));
        assert!(matches!(c.run(&[0.0, 0.0], &[1.0]), Err(Error::Binding(_))));
    }

    #[test]
    fn validation_rejects_bad_indices() {
        assert!(ParameterizedCircuit::new(2, vec![Gate::h(2)], 0, 0).is_err());
        let g = Gate::rotation(GateKind::RX, 0, Angle::weight(1));
        assert!(ParameterizedCircuit::new(1, vec![g], 0, 1).is_err());
    }

    #[test]
    fn angle_embedding_shape_and_values() {
        let c = angle_embedding(3, Rotation::X).unwrap();
        assert_eq!(c.ops().len(), 3);
        assert_eq!(c.num_feature_slots(), 3);
        let s = angle_embedding(2, Rotation::X).unwrap().run(&[0.0, 0.0], &[]).unwrap();
        assert_eq!(s, StateVector::zero(2).unwrap());
        let s = angle_embedding(1, Rotation::Y).unwrap().run(&[PI / 2.0], &[]).unwrap();
        assert!(pauli_z_expectation(&s, 0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn zz_single_qubit() {
        let c = zz_feature_map(1, 1).unwrap();
        let s = c.run(&[0.0], &[]).unwrap();
        assert!(measure_all_z(&s)[0].abs() < 1e-12);
        let x = 0.37;
        let s = c.run(&[x], &[]).unwrap();
        let a = std::f64::consts::FRAC_1_SQRT_2;
        let want = num_complex::Complex64::from_polar(a, 2.0 * x);
        assert!((s.amplitudes()[0].re - a).abs() < 1e-12);
        assert!((s.amplitudes()[1] - want).norm() < 1e-12);
    }

    #[test]
    fn zz_two_qubit_structure() {
        let c = zz_feature_map(2, 1).unwrap();
        let kinds: Vec<_> = c.ops().iter().map(|g| g.kind()).collect();
        use GateKind::*;
        assert_eq!(kinds, vec![H, H, Phase, Phase, CNOT, Phase, CNOT]);
        assert_eq!(c.ops()[5].qubits(), &[1]);
        let (v1, v2) = (0.2, 1.1);
        let angle = c.ops()[5].angle().unwrap().eval(&[v1, v2], &[]);
        assert!((angle - 2.0 * (PI - v1) * (PI - v2)).abs() < 1e-15);
        assert_eq!(c.ops()[4].qubits(), &[0, 1]);
    }

    #[test]
    fn entangler_slot_counts() {
        assert_eq!(basic_entangler_layers(4, 2, Rotation::X).unwrap().num_weight_slots(), 8);
        assert_eq!(n_local(3, 2).unwrap().num_weight_slots(), 9);
        let c = basic_entangler_layers(2, 1, Rotation::Y).unwrap();
        let s = c.run(&[], &[0.0, 0.0]).unwrap();
        assert_eq!(measure_all_z(&s), vec![1.0, 1.0]);
        let s = n_local(2, 1).unwrap().run(&[], &[0.0; 4]).unwrap();
        assert_eq!(s, StateVector::zero(2).unwrap());
        // single qubit: rotations only
        assert_eq!(basic_entangler_layers(1, 2, Rotation::X).unwrap().ops().len(), 2);
    }

    #[test]
    fn entangler_is_n_local_without_final_layer() {
        for n in 2..5 {
            for layers in 0..4 {
                let full = n_local(n, layers).unwrap();
                let bel = basic_entangler_layers(n, layers, Rotation::Y).unwrap();
                assert_eq!(&full.ops()[..full.ops().len() - n], bel.ops());
            }
        }
    }

    #[test]
    fn composition_offsets_slots() {
        let enc = angle_embedding(2, Rotation::X).unwrap();
        let a = basic_entangler_layers(2, 1, Rotation::Y).unwrap();
        let b = basic_entangler_layers(2, 1, Rotation::Z).unwrap();
        let c = enc.then(&a).unwrap().then(&b).unwrap();
        assert_eq!(c.num_feature_slots(), 2);
        assert_eq!(c.num_weight_slots(), 4);
        assert_eq!(c.ops()[6].angle(), Some(&Angle::weight(2)));
        assert!(enc.then(&angle_embedding(3, Rotation::X).unwrap()).is_err());
    }
}
