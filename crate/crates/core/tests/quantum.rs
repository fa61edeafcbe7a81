mod common;

use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{dense_run, dense_z, gate_matrix, random_circuit};
use qtft::quantum::{
    angle_embedding, basic_entangler_layers, measure_all_z, n_local, pauli_z_expectation, sampler_probabilities,
    zz_feature_map, Gate, GateKind, ParameterizedCircuit, Rotation, StateVector,
};

fn amplitudes_close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol)
}

#[test]
fn random_circuits_match_dense_products() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..200 {
        let c = random_circuit(&mut rng, 3, 20);
        let sim = c.run(&[], &[]).unwrap();
        let dense = dense_run(&c, &[], &[]);
        assert!(amplitudes_close(sim.amplitudes(), dense.as_slice(), 1e-10));
    }
}

#[test]
fn templates_match_dense_products() {
    let x = [0.3, -1.2, 2.0];
    let w: Vec<f64> = (0..12).map(|i| 0.37 * i as f64 - 1.5).collect();
    let circuits = [
        angle_embedding(3, Rotation::X).unwrap().then(&basic_entangler_layers(3, 2, Rotation::X).unwrap()).unwrap(),
        zz_feature_map(3, 2).unwrap().then(&n_local(3, 2).unwrap()).unwrap(),
        angle_embedding(2, Rotation::Z).unwrap().then(&n_local(2, 3).unwrap()).unwrap(),
    ];
    for c in &circuits {
        let w = &w[..c.num_weight_slots()];
        let x = &x[..c.num_feature_slots()];
        let sim = c.run(x, w).unwrap();
        let dense = dense_run(c, x, w);
        assert!(amplitudes_close(sim.amplitudes(), dense.as_slice(), 1e-10));
        for q in 0..c.num_qubits() {
            let z = pauli_z_expectation(&sim, q).unwrap();
            assert!((z - dense_z(&dense, c.num_qubits(), q)).abs() < 1e-10);
        }
    }
}

#[test]
fn ry_expectation_is_cosine() {
    for i in 0..100 {
        let theta = -PI + 2.0 * PI * i as f64 / 99.0;
        let c = ParameterizedCircuit::new(1, vec![Gate::ry(0, theta)], 0, 0).unwrap();
        let z = pauli_z_expectation(&c.run(&[], &[]).unwrap(), 0).unwrap();
        assert!((z - theta.cos()).abs() < 1e-12);
    }
}

#[test]
fn zz_map_structure() {
    let c = zz_feature_map(3, 1).unwrap();
    let kinds: Vec<GateKind> = c.ops().iter().map(|g| g.kind()).collect();
    assert_eq!(&kinds[..6], &[GateKind::H, GateKind::H, GateKind::H, GateKind::Phase, GateKind::Phase, GateKind::Phase]);
    // three pairs, each CNOT, phase, CNOT
    assert_eq!(kinds.len(), 6 + 3 * 3);
    let x = [0.1, 0.2, 0.3];
    let pair = c.ops()[7].angle().unwrap().eval(&x, &[]);
    assert!((pair - 2.0 * (PI - 0.1) * (PI - 0.2)).abs() < 1e-15);
}

#[test]
fn entangler_is_nlocal_without_final_layer() {
    for n in 2..5 {
        for layers in 1..4 {
            let bel = basic_entangler_layers(n, layers, Rotation::Y).unwrap();
            let nl = n_local(n, layers).unwrap();
            assert_eq!(bel.ops(), &nl.ops()[..nl.ops().len() - n]);
            assert_eq!(nl.num_weight_slots(), bel.num_weight_slots() + n);
        }
    }
}

#[test]
fn two_qubit_ring_order() {
    let c = basic_entangler_layers(2, 1, Rotation::X).unwrap();
    let pairs: Vec<&[usize]> = c.ops().iter().filter(|g| g.kind() == GateKind::CNOT).map(|g| g.qubits()).collect();
    assert_eq!(pairs, vec![&[0, 1][..], &[1, 0][..]]);
}

#[test]
fn zero_weight_circuit_is_identity_on_zero_input() {
    let c = angle_embedding(3, Rotation::X).unwrap().then(&basic_entangler_layers(3, 2, Rotation::Y).unwrap()).unwrap();
    let z = measure_all_z(&c.run(&[0.0; 3], &[0.0; 6]).unwrap());
    assert_eq!(z, vec![1.0; 3]);
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(Gate::new(GateKind::CNOT, vec![1, 1], None).is_err());
    assert!(ParameterizedCircuit::new(2, vec![Gate::h(2)], 0, 0).is_err());
    let c = angle_embedding(2, Rotation::Y).unwrap();
    assert!(c.run(&[0.1], &[]).is_err());
    assert!(pauli_z_expectation(&StateVector::zero(2).unwrap(), 2).is_err());
    assert!(n_local(1, 1).is_err());
}

fn arb_circuit() -> impl Strategy<Value = ParameterizedCircuit> {
    any::<u64>().prop_map(|seed| random_circuit(&mut ChaCha8Rng::seed_from_u64(seed), 4, 20))
}

proptest! {
    #[test]
    fn norm_is_preserved(c in arb_circuit()) {
        let s = c.run(&[], &[]).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gates_are_unitary(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::random_gate(&mut rng, 3);
        let theta = g.angle().map_or(0.0, |a| a.eval(&[], &[]));
        let u = gate_matrix(3, g.kind(), g.qubits(), theta);
        let err = (u.adjoint() * &u - common::CMat::identity(8, 8)).norm();
        prop_assert!(err < 1e-12);
        // the simulator maps every basis state to the matching column
        for i in 0..8 {
            let mut s = StateVector::basis(3, i).unwrap();
            s.apply(&g, g.angle().map(|a| a.eval(&[], &[]))).unwrap();
            let col: Vec<Complex64> = u.column(i).iter().copied().collect();
            prop_assert!(amplitudes_close(s.amplitudes(), &col, 1e-12));
        }
    }

    #[test]
    fn sampler_and_estimator_agree(c in arb_circuit()) {
        let s = c.run(&[], &[]).unwrap();
        let p = sampler_probabilities(&s);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let n = s.num_qubits();
        let z = measure_all_z(&s);
        for q in 0..n {
            let from_p: f64 = p
                .iter()
                .enumerate()
                .map(|(k, pk)| if (k >> (n - 1 - q)) & 1 == 0 { *pk } else { -pk })
                .sum();
            prop_assert!((z[q] - from_p).abs() < 1e-12);
            prop_assert!(z[q].abs() <= 1.0 + 1e-12);
        }
    }
}
