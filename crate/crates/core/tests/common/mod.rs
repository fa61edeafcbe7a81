//! Test oracles: dense matrices built from Kronecker products, and central
//! finite differences.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use qtft::quantum::{Angle, Gate, GateKind, ParameterizedCircuit};

pub type CMat = DMatrix<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn m2(a: Complex64, b: Complex64, cc: Complex64, d: Complex64) -> CMat {
    CMat::from_row_slice(2, 2, &[a, b, cc, d])
}

pub fn identity2() -> CMat {
    CMat::identity(2, 2)
}

/// Textbook single-qubit matrices.
pub fn single(kind: GateKind, theta: f64) -> CMat {
    let (cs, sn) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match kind {
        GateKind::H => m2(c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)),
        GateKind::RX => m2(c(cs, 0.0), c(0.0, -sn), c(0.0, -sn), c(cs, 0.0)),
        GateKind::RY => m2(c(cs, 0.0), c(-sn, 0.0), c(sn, 0.0), c(cs, 0.0)),
        GateKind::RZ => m2(c(cs, -sn), c(0.0, 0.0), c(0.0, 0.0), c(cs, sn)),
        GateKind::Phase => m2(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), Complex64::from_polar(1.0, theta)),
        other => panic!("{other:?} is not a single-qubit gate"),
    }
}

/// `⊗` over one 2×2 factor per qubit, qubit 0 leftmost.
pub fn kron_all(factors: &[CMat]) -> CMat {
    factors.iter().skip(1).fold(factors[0].clone(), |acc, f| acc.kronecker(f))
}

fn placed(n: usize, at: &[(usize, CMat)]) -> CMat {
    let factors: Vec<CMat> = (0..n)
        .map(|q| at.iter().find(|(p, _)| *p == q).map_or_else(identity2, |(_, m)| m.clone()))
        .collect();
    kron_all(&factors)
}

/// Full `2^n × 2^n` unitary of one gate with angle `theta`.
pub fn gate_matrix(n: usize, kind: GateKind, qubits: &[usize], theta: f64) -> CMat {
    let p0 = m2(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
    let p1 = m2(c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0));
    match kind {
        GateKind::CNOT | GateKind::CRZ => {
            let (ctl, tgt) = (qubits[0], qubits[1]);
            let u = if kind == GateKind::CNOT {
                m2(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0))
            } else {
                single(GateKind::RZ, theta)
            };
            placed(n, &[(ctl, p0)]) + placed(n, &[(ctl, p1), (tgt, u)])
        }
        _ => placed(n, &[(qubits[0], single(kind, theta))]),
    }
}

/// Final state of a circuit from dense matrix products on `|0…0⟩`.
pub fn dense_run(circuit: &ParameterizedCircuit, features: &[f64], weights: &[f64]) -> DVector<Complex64> {
    let n = circuit.num_qubits();
    let dim = 1 << n;
    let mut psi = DVector::from_element(dim, c(0.0, 0.0));
    psi[0] = c(1.0, 0.0);
    for g in circuit.ops() {
        let theta = g.angle().map_or(0.0, |a| a.eval(features, weights));
        psi = gate_matrix(n, g.kind(), g.qubits(), theta) * psi;
    }
    psi
}

/// `⟨Z_q⟩` from the dense state, with `Z_q` built as a Kronecker product.
pub fn dense_z(psi: &DVector<Complex64>, n: usize, q: usize) -> f64 {
    let z = m2(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0));
    let op = placed(n, &[(q, z)]);
    (psi.adjoint() * op * psi)[(0, 0)].re
}

/// A random gate over `n` qubits with a fixed random angle.
pub fn random_gate(rng: &mut impl Rng, n: usize) -> Gate {
    let kinds: Vec<GateKind> = GateKind::ALL.iter().copied().filter(|k| k.arity() <= n).collect();
    let kind = kinds[rng.gen_range(0..kinds.len())];
    let theta = rng.gen_range(-2.0 * std::f64::consts::PI..2.0 * std::f64::consts::PI);
    match kind.arity() {
        1 => {
            let q = rng.gen_range(0..n);
            let angle = kind.is_parametric().then_some(Angle::Fixed(theta));
            Gate::new(kind, vec![q], angle).unwrap()
        }
        _ => {
            let a = rng.gen_range(0..n);
            let mut b = rng.gen_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            let angle = kind.is_parametric().then_some(Angle::Fixed(theta));
            Gate::new(kind, vec![a, b], angle).unwrap()
        }
    }
}

pub fn random_circuit(rng: &mut impl Rng, max_qubits: usize, max_depth: usize) -> ParameterizedCircuit {
    let n = rng.gen_range(1..=max_qubits);
    let depth = rng.gen_range(0..=max_depth);
    let ops = (0..depth).map(|_| random_gate(rng, n)).collect();
    ParameterizedCircuit::new(n, ops, 0, 0).unwrap()
}

/// Central differences of `f` at `x`.
pub fn finite_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut x = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + h;
            let up = f(&x);
            x[i] = orig - h;
            let down = f(&x);
            x[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `|a − n| ≤ max(1e-5, 1e-4·|n|)`.
pub fn close(analytic: f64, numeric: f64) -> bool {
    (analytic - numeric).abs() <= 1e-5_f64.max(1e-4 * numeric.abs())
}
