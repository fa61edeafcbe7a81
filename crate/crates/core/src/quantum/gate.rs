use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    H,
    RX,
    RY,
    RZ,
    Phase,
    CNOT,
    CRZ,
}

impl GateKind {
    pub const ALL: [GateKind; 7] = [
        GateKind::H,
        GateKind::RX,
        GateKind::RY,
        GateKind::RZ,
        GateKind::Phase,
        GateKind::CNOT,
        GateKind::CRZ,
    ];

    pub fn is_parametric(self) -> bool {
        !matches!(self, GateKind::H | GateKind::CNOT)
    }

    pub fn arity(self) -> usize {
        match self {
            GateKind::CNOT | GateKind::CRZ => 2,
            _ => 1,
        }
    }
}

/// Single-axis rotation used by embeddings and entangler layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rotation {
    X,
    Y,
    Z,
}

impl Rotation {
    pub fn gate_kind(self) -> GateKind {
        match self {
            Rotation::X => GateKind::RX,
            Rotation::Y => GateKind::RY,
            Rotation::Z => GateKind::RZ,
        }
    }
}

/// A circuit input a gate angle can depend on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slot {
    Feature(usize),
    Weight(usize),
}

/// How a gate's angle is obtained from the bound features and weights.
///
/// `Scaled` covers the identity map (`scale = 1`) and the doubled single-qubit
/// phase of the ZZ feature map. `ZzPair` is `scale·(π − x_i)(π − x_j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Angle {
    Fixed(f64),
    Scaled { slot: Slot, scale: f64 },
    ZzPair { first: usize, second: usize, scale: f64 },
}

impl Angle {
    pub fn feature(index: usize) -> Self {
        Angle::Scaled {
            slot: Slot::Feature(index),
            scale: 1.0,
        }
    }

    pub fn weight(index: usize) -> Self {
        Angle::Scaled {
            slot: Slot::Weight(index),
            scale: 1.0,
        }
    }

    pub fn eval(&self, features: &[f64], weights: &[f64]) -> f64 {
        match *self {
            Angle::Fixed(a) => a,
            Angle::Scaled { slot, scale } => scale * slot_value(slot, features, weights),
            Angle::ZzPair { first, second, scale } => {
                scale * (PI - features[first]) * (PI - features[second])
            }
        }
    }

    /// Partial derivatives of the angle with respect to each slot it reads.
    pub fn partials(&self, features: &[f64]) -> Vec<(Slot, f64)> {
        match *self {
            Angle::Fixed(_) => Vec::new(),
            Angle::Scaled { slot, scale } => vec![(slot, scale)],
            Angle::ZzPair { first, second, scale } => vec![
                (Slot::Feature(first), -scale * (PI - features[second])),
                (Slot::Feature(second), -scale * (PI - features[first])),
            ],
        }
    }

    pub(crate) fn slots(&self) -> Vec<Slot> {
        match *self {
            Angle::Fixed(_) => Vec::new(),
            Angle::Scaled { slot, .. } => vec![slot],
            Angle::ZzPair { first, second, .. } => {
                vec![Slot::Feature(first), Slot::Feature(second)]
            }
        }
    }

    pub(crate) fn offset(self, features: usize, weights: usize) -> Self {
        let shift = |slot| match slot {
            Slot::Feature(i) => Slot::Feature(i + features),
            Slot::Weight(i) => Slot::Weight(i + weights),
        };
        match self {
            Angle::Fixed(_) => self,
            Angle::Scaled { slot, scale } => Angle::Scaled {
                slot: shift(slot),
                scale,
            },
            Angle::ZzPair { first, second, scale } => Angle::ZzPair {
                first: first + features,
                second: second + features,
                scale,
            },
        }
    }
}

fn slot_value(slot: Slot, features: &[f64], weights: &[f64]) -> f64 {
    match slot {
        Slot::Feature(i) => features[i],
        Slot::Weight(i) => weights[i],
    }
}

/// One gate of a circuit. For two-qubit gates `qubits = [control, target]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    kind: GateKind,
    qubits: Vec<usize>,
    angle: Option<Angle>,
}

impl Gate {
    pub fn new(kind: GateKind, qubits: Vec<usize>, angle: Option<Angle>) -> Result<Self> {
        if qubits.len() != kind.arity() {
            return Err(Error::InvalidCircuit(format!(
                "{kind:?} acts on {} qubit(s), got {}",
                kind.arity(),
                qubits.len()
            )));
        }
        if kind.arity() == 2 && qubits[0] == qubits[1] {
            return Err(Error::InvalidCircuit(format!(
                "{kind:?} control and target are both qubit {}",
                qubits[0]
            )));
        }
        if kind.is_parametric() != angle.is_some() {
            return Err(Error::InvalidCircuit(format!(
                "{kind:?} {} an angle",
                if kind.is_parametric() { "requires" } else { "does not take" }
            )));
        }
        Ok(Self { kind, qubits, angle })
    }

    pub fn h(qubit: usize) -> Self {
        Self {
            kind: GateKind::H,
            qubits: vec![qubit],
            angle: None,
        }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        assert_ne!(control, target, "CNOT control must differ from target");
        Self {
            kind: GateKind::CNOT,
            qubits: vec![control, target],
            angle: None,
        }
    }

    pub fn rotation(kind: GateKind, qubit: usize, angle: Angle) -> Self {
        assert!(kind.is_parametric() && kind.arity() == 1);
        Self {
            kind,
            qubits: vec![qubit],
            angle: Some(angle),
        }
    }

    pub fn rx(qubit: usize, theta: f64) -> Self {
        Self::rotation(GateKind::RX, qubit, Angle::Fixed(theta))
    }

    pub fn ry(qubit: usize, theta: f64) -> Self {
        Self::rotation(GateKind::RY, qubit, Angle::Fixed(theta))
    }

    pub fn rz(qubit: usize, theta: f64) -> Self {
        Self::rotation(GateKind::RZ, qubit, Angle::Fixed(theta))
    }

    pub fn phase(qubit: usize, lambda: f64) -> Self {
        Self::rotation(GateKind::Phase, qubit, Angle::Fixed(lambda))
    }

    pub fn crz(control: usize, target: usize, angle: Angle) -> Self {
        assert_ne!(control, target, "CRZ control must differ from target");
        Self {
            kind: GateKind::CRZ,
            qubits: vec![control, target],
            angle: Some(angle),
        }
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn angle(&self) -> Option<&Angle> {
        self.angle.as_ref()
    }

    pub(crate) fn offset(&self, qubits: usize, features: usize, weights: usize) -> Self {
        Self {
            kind: self.kind,
            qubits: self.qubits.iter().map(|q| q + qubits).collect(),
            angle: self.angle.map(|a| a.offset(features, weights)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructor_validation() {
        assert!(Gate::new(GateKind::CNOT, vec![1, 1], None).is_err());
        assert!(Gate::new(GateKind::RX, vec![0], None).is_err());
        assert!(Gate::new(GateKind::H, vec![0], Some(Angle::Fixed(1.0))).is_err());
        assert!(Gate::new(GateKind::CRZ, vec![0], Some(Angle::Fixed(1.0))).is_err());
        assert!(Gate::new(GateKind::CRZ, vec![0, 2], Some(Angle::weight(0))).is_ok());
    }

    #[test]
    fn zz_pair_partials() {
        let a = Angle::ZzPair {
            first: 0,
            second: 1,
            scale: 2.0,
        };
        let f = [0.3, -0.4];
        let h = 1e-6;
        let base = |x: [f64; 2]| a.eval(&x, &[]);
        let p = a.partials(&f);
        let fd0 = (base([f[0] + h, f[1]]) - base([f[0] - h, f[1]])) / (2.0 * h);
        let fd1 = (base([f[0], f[1] + h]) - base([f[0], f[1] - h])) / (2.0 * h);
        assert!((p[0].1 - fd0).abs() < 1e-7);
        assert!((p[1].1 - fd1).abs() < 1e-7);
    }
}
