// Copyright 2026 The qpair Authors
// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::PI;

use nalgebra::DMatrix;
use proptest::prelude::*;
use qpair_core::oracle::{
    apply_circuit, circuit_unitary, gate_matrix, qft_matrix, DenseState, Gate,
};
use qpair_core::C64;

fn gate(n: usize) -> impl Strategy<Value = Gate> {
    let pair = (0..n, 1..n).prop_map(move |(a, d)| (a, (a + d) % n));
    prop_oneof![
        (0..n).prop_map(Gate::H),
        (0..n).prop_map(Gate::X),
        (0..n, -PI..PI).prop_map(|(q, phi)| Gate::P(q, phi)),
        pair.clone().prop_map(|(a, b)| Gate::Cz(a, b)),
        pair.clone().prop_map(|(a, b)| Gate::Cx(a, b)),
        (pair.clone(), -PI..PI).prop_map(|((a, b), phi)| Gate::Cp(a, b, phi)),
        pair.prop_map(|(a, b)| Gate::Swap(a, b)),
    ]
}

fn circuit() -> impl Strategy<Value = (usize, Vec<Gate>)> {
    (2usize..=4).prop_flat_map(|n| (Just(n), prop::collection::vec(gate(n), 0..12)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn state_evolution_matches_matrix_product((n, gates) in circuit(), x in 0usize..16) {
        let x = x % (1 << n);
        let mut product = DMatrix::identity(1 << n, 1 << n);
        for g in &gates {
            product = gate_matrix(n, g).unwrap() * product;
        }
        let u = circuit_unitary(n, &gates).unwrap();
        prop_assert!((&u - &product).iter().all(|z| z.norm() < 1e-10));
        let out = apply_circuit(&DenseState::basis(n, x).unwrap(), &gates).unwrap();
        for (a, b) in out.amplitudes.iter().zip(product.column(x).iter()) {
            prop_assert!((a - b).norm() < 1e-10);
        }
    }
}

#[test]
fn qft_matrices_are_unitary() {
    for n in 1..=10 {
        let q = qft_matrix(n).unwrap();
        let err = (q.adjoint() * &q - DMatrix::<C64>::identity(1 << n, 1 << n))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "n={n}: {err}");
    }
}
