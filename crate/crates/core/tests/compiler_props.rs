// Copyright 2026 The qpair Authors
// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::PI;

use nalgebra::DVector;
use proptest::prelude::*;
use qpair_core::blockade::Method;
use qpair_core::compiler::{
    compile, estimate_resources, simulate_schedule, validate_schedule, LayoutPolicy,
    LogicalCircuit, Schedule,
};
use qpair_core::noise::NoiseParams;
use qpair_core::oracle::{circuit_unitary, Gate};
use qpair_core::C64;

fn gate(n: usize) -> impl Strategy<Value = Gate> {
    let q = 0..n;
    let pair = (0..n, 1..n.max(2)).prop_map(move |(a, d)| (a, (a + d) % n));
    let one = prop_oneof![
        q.clone().prop_map(Gate::H),
        q.clone().prop_map(Gate::X),
        (q, -PI..PI).prop_map(|(q, phi)| Gate::P(q, phi)),
    ];
    if n < 2 {
        return one.boxed();
    }
    prop_oneof![
        one,
        pair.clone().prop_map(|(a, b)| Gate::Cz(a, b)),
        pair.clone().prop_map(|(a, b)| Gate::Cx(a, b)),
        (pair.clone(), -PI..PI).prop_map(|((a, b), phi)| Gate::Cp(a, b, phi)),
        pair.prop_map(|(a, b)| Gate::Swap(a, b)),
    ]
    .boxed()
}

fn circuit() -> impl Strategy<Value = LogicalCircuit> {
    (1usize..=3).prop_flat_map(|n| {
        prop::collection::vec(gate(n), 0..=6).prop_map(move |g| LogicalCircuit::new(n, g).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn compiled_circuits_match_oracle(c in circuit()) {
        let s = compile(&c, &LayoutPolicy::Identity).unwrap();
        let n = c.qubit_count();
        let u = circuit_unitary(n, c.gates()).unwrap();
        let dim = 1 << n;
        let mut trace = C64::new(0.0, 0.0);
        for x in 0..dim {
            let mut input = DVector::zeros(dim);
            input[x] = C64::new(1.0, 0.0);
            let (out, leak) = simulate_schedule(&s, &input, Method::DerivedUnitary).unwrap();
            prop_assert!(leak < 1e-10);
            let ov = u.column(x).dotc(&out);
            prop_assert!(1.0 - ov.norm_sqr() < 1e-8, "input {}", x);
            trace += ov;
        }
        // common phase across inputs
        prop_assert!(1.0 - (trace / dim as f64).norm_sqr() < 1e-8);
    }

    #[test]
    fn compile_is_deterministic_and_valid(c in circuit()) {
        let a = compile(&c, &LayoutPolicy::Identity).unwrap();
        let b = compile(&c, &LayoutPolicy::Identity).unwrap();
        prop_assert_eq!(a.to_trace(), b.to_trace());
        prop_assert_eq!(Schedule::parse_trace(&a.to_trace()).unwrap(), a.clone());
        prop_assert!(validate_schedule(&a).is_empty());
        let r = estimate_resources(&a, &NoiseParams::default()).unwrap();
        prop_assert!(r.atom_count as usize <= 2 * c.qubit_count() + 6);
    }
}

#[test]
fn custom_placement_matches_oracle() {
    let c = LogicalCircuit::parse("H 0\nCX 0 2\nCP 1 0 q=2").unwrap();
    let s = compile(&c, &LayoutPolicy::Custom(vec![2, 0, 1])).unwrap();
    let u = circuit_unitary(3, c.gates()).unwrap();
    for x in 0..8 {
        let mut input = DVector::zeros(8);
        input[x] = C64::new(1.0, 0.0);
        let (out, _) = simulate_schedule(&s, &input, Method::ExactExponential).unwrap();
        assert!(1.0 - u.column(x).dotc(&out).norm_sqr() < 1e-8);
    }
    assert!(compile(&c, &LayoutPolicy::Custom(vec![0, 0, 1])).is_err());
}
