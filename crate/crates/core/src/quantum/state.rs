use num_complex::Complex64;

use super::gate::{Gate, GateKind};
use crate::error::{Error, Result};

const NORM_TOLERANCE: f64 = 1e-10;

/// Pure state of `n` qubits as `2^n` complex amplitudes.
///
/// Qubit 0 is the most significant bit of the basis index, so `|01⟩` is
/// index 1 and has qubit 0 in `|0⟩` and qubit 1 in `|1⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::InvalidCircuit("a state needs at least one qubit".into()));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        let mut state = Self::zero(num_qubits)?;
        if index >= state.amplitudes.len() {
            return Err(Error::InvalidCircuit(format!(
                "basis index {index} out of range for {num_qubits} qubits"
            )));
        }
        state.amplitudes[0] = Complex64::new(0.0, 0.0);
        state.amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(state)
    }

    /// Wraps explicit amplitudes. The length must be a power of two (at least 2)
    /// and the vector must be normalized.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Shape(format!(
                "amplitude count {len} is not a power of two ≥ 2"
            )));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Shape(format!("state is not normalized (Σ|α|² = {norm})")));
        }
        Ok(Self {
            num_qubits: len.trailing_zeros() as usize,
            amplitudes,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn mask(&self, qubit: usize) -> usize {
        1 << (self.num_qubits - 1 - qubit)
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.num_qubits {
            return Err(Error::InvalidCircuit(format!(
                "qubit {qubit} out of range for a {}-qubit state",
                self.num_qubits
            )));
        }
        Ok(())
    }

    /// Applies `gate` in place with an already-bound angle.
    pub fn apply(&mut self, gate: &Gate, angle: Option<f64>) -> Result<()> {
        for &q in gate.qubits() {
            self.check_qubit(q)?;
        }
        let kind = gate.kind();
        let angle = match (kind.is_parametric(), angle) {
            (true, Some(a)) => a,
            (true, None) => {
                return Err(Error::Binding(format!("{kind:?} gate is missing its angle")))
            }
            (false, _) => 0.0,
        };
        let q = gate.qubits();
        match kind {
            GateKind::H => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let h = [[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]];
                self.apply_single(q[0], &h);
            }
            GateKind::RX => self.apply_single(q[0], &rx_matrix(angle)),
            GateKind::RY => self.apply_single(q[0], &ry_matrix(angle)),
            GateKind::RZ => self.apply_diagonal(q[0], rz_diagonal(angle)),
            GateKind::Phase => {
                self.apply_diagonal(q[0], [c(1.0, 0.0), Complex64::from_polar(1.0, angle)])
            }
            GateKind::CNOT => {
                let (cm, tm) = (self.mask(q[0]), self.mask(q[1]));
                for i in 0..self.amplitudes.len() {
                    if i & cm != 0 && i & tm == 0 {
                        self.amplitudes.swap(i, i | tm);
                    }
                }
            }
            GateKind::CRZ => {
                let (cm, tm) = (self.mask(q[0]), self.mask(q[1]));
                let [d0, d1] = rz_diagonal(angle);
                for (i, amp) in self.amplitudes.iter_mut().enumerate() {
                    if i & cm != 0 {
                        *amp *= if i & tm == 0 { d0 } else { d1 };
                    }
                }
            }
        }
        Ok(())
    }

    fn apply_single(&mut self, qubit: usize, m: &[[Complex64; 2]; 2]) {
        let mask = self.mask(qubit);
        for i in 0..self.amplitudes.len() {
            if i & mask == 0 {
                let a0 = self.amplitudes[i];
                let a1 = self.amplitudes[i | mask];
                self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[i | mask] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    fn apply_diagonal(&mut self, qubit: usize, d: [Complex64; 2]) {
        let mask = self.mask(qubit);
        for (i, amp) in self.amplitudes.iter_mut().enumerate() {
            *amp *= if i & mask == 0 { d[0] } else { d[1] };
        }
    }
}

/// Returns the state after `gate` acts on `state`.
pub fn apply_gate(mut state: StateVector, gate: &Gate, bound_angle: Option<f64>) -> Result<StateVector> {
    state.apply(gate, bound_angle)?;
    Ok(state)
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `exp(−iθX/2)`.
pub fn rx_matrix(theta: f64) -> [[Complex64; 2]; 2] {
    let (s, co) = (theta / 2.0).sin_cos();
    [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]]
}

/// `exp(−iθY/2)`.
pub fn ry_matrix(theta: f64) -> [[Complex64; 2]; 2] {
    let (s, co) = (theta / 2.0).sin_cos();
    [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]
}

/// Diagonal of `exp(−iθZ/2)`.
pub fn rz_diagonal(theta: f64) -> [Complex64; 2] {
    [
        Complex64::from_polar(1.0, -theta / 2.0),
        Complex64::from_polar(1.0, theta / 2.0),
    ]
}

/// `⟨Z_qubit⟩` of a pure state.
pub fn pauli_z_expectation(state: &StateVector, qubit: usize) -> Result<f64> {
    state.check_qubit(qubit)?;
    let mask = state.mask(qubit);
    Ok(state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(i, a)| if i & mask == 0 { a.norm_sqr() } else { -a.norm_sqr() })
        .sum())
}

/// `⟨Z_q⟩` for every qubit, qubit 0 first.
pub fn measure_all_z(state: &StateVector) -> Vec<f64> {
    let n = state.num_qubits;
    let mut out = vec![0.0; n];
    for (i, a) in state.amplitudes.iter().enumerate() {
        let p = a.norm_sqr();
        for (q, z) in out.iter_mut().enumerate() {
            if i & (1 << (n - 1 - q)) == 0 {
                *z += p;
            } else {
                *z -= p;
            }
        }
    }
    out
}

/// Computational-basis probabilities `|⟨k|ψ⟩|²`.
pub fn sampler_probabilities(state: &StateVector) -> Vec<f64> {
    state.amplitudes.iter().map(|a| a.norm_sqr()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::gate::Gate;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn close(a: Complex64, re: f64, im: f64) -> bool {
        (a.re - re).abs() < 1e-12 && (a.im - im).abs() < 1e-12
    }

    #[test]
    fn hadamard_on_zero() {
        let s = apply_gate(StateVector::zero(1).unwrap(), &Gate::h(0), None).unwrap();
        assert!(close(s.amplitudes()[0], FRAC_1_SQRT_2, 0.0));
        assert!(close(s.amplitudes()[1], FRAC_1_SQRT_2, 0.0));
    }

    #[test]
    fn zero_rotation_is_identity() {
        let mut s = StateVector::zero(2).unwrap();
        s.apply(&Gate::h(0), None).unwrap();
        s.apply(&Gate::ry(1, 0.7), Some(0.7)).unwrap();
        let before = s.clone();
        s.apply(&Gate::rx(1, 0.0), Some(0.0)).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn bell_from_cnot() {
        let a = FRAC_1_SQRT_2;
        let s = StateVector::from_amplitudes(vec![c(a, 0.0), c(0.0, 0.0), c(a, 0.0), c(0.0, 0.0)]).unwrap();
        let s = apply_gate(s, &Gate::cnot(0, 1), None).unwrap();
        assert!(close(s.amplitudes()[0], a, 0.0));
        assert!(close(s.amplitudes()[3], a, 0.0));
        assert!(close(s.amplitudes()[2], 0.0, 0.0));
        assert_eq!(measure_all_z(&s), vec![0.0, 0.0]);
    }

    #[test]
    fn errors_on_bad_qubit_and_missing_angle() {
        let s = StateVector::zero(1).unwrap();
        assert!(matches!(
            apply_gate(s.clone(), &Gate::h(1), None),
            Err(Error::InvalidCircuit(_))
        ));
        assert!(matches!(
            apply_gate(s, &Gate::rx(0, 0.0), None),
            Err(Error::Binding(_))
        ));
    }

    #[test]
    fn measurement_conventions() {
        let s = StateVector::basis(2, 1).unwrap();
        assert_eq!(measure_all_z(&s), vec![1.0, -1.0]);
        let mut plus0 = StateVector::zero(2).unwrap();
        plus0.apply(&Gate::h(0), None).unwrap();
        let z = measure_all_z(&plus0);
        assert!(z[0].abs() < 1e-12 && (z[1] - 1.0).abs() < 1e-12);
        assert_eq!(pauli_z_expectation(&StateVector::zero(1).unwrap(), 0).unwrap(), 1.0);
        assert!(pauli_z_expectation(&plus0, 2).is_err());
    }

    #[test]
    fn sampler_matches_amplitudes() {
        let mut s = StateVector::zero(1).unwrap();
        assert_eq!(sampler_probabilities(&s), vec![1.0, 0.0]);
        s.apply(&Gate::h(0), None).unwrap();
        let p = sampler_probabilities(&s);
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ry_pi_flips() {
        let s = apply_gate(StateVector::zero(1).unwrap(), &Gate::ry(0, PI), Some(PI)).unwrap();
        assert!(close(s.amplitudes()[0], 0.0, 0.0));
        assert!(close(s.amplitudes()[1], 1.0, 0.0));
    }

    #[test]
    fn rejects_unnormalized_amplitudes() {
        assert!(StateVector::from_amplitudes(vec![c(1.0, 0.0), c(1.0, 0.0)]).is_err());
        assert!(StateVector::from_amplitudes(vec![c(1.0, 0.0); 3]).is_err());
    }
}
