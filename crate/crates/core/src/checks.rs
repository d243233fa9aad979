// Copyright 2026 The qpair Authors
// SPDX-License-Identifier: Apache-2.0

//! Numerical self-checks of the whole stack, one group per property.
//!
//! Every check reports a deviation and the tolerance it must stay under.
//! Used by `qpair verify` and by the acceptance test.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::blockade::{collective_rabi_frequency, Method};
use crate::compiler::{
    compile, estimate_resources, qft3_reference_schedule, simulate_schedule, LayoutPolicy,
    LogicalCircuit,
};
use crate::error::Result;
use crate::noise::{
    haar_average_fidelity, haar_quadrature, haar_state, log_space, loglog_slope, noisy_translation,
    noisy_translation_composed, protocol_fidelity, NoiseParams, Protocol,
};
use crate::oracle::{bit_reverse, gate_matrix, qft_matrix, Gate};
use crate::pulse::{
    cz_mediator_sequence, global_bitflip, superatom_only_bitflip, superatom_only_hadamard,
    Encoding, Unitary2,
};
use crate::wiregates::{
    cnot_wiregate, cphase_wiregate, cz_wiregate, temporal_translation, Processor, ProcessorConfig,
    TranslationKind,
};

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub criterion: u8,
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value < tolerance`.
    pub fn below(criterion: u8, name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check {
            criterion,
            name: name.into(),
            value,
            tolerance,
            passed: value < tolerance,
        }
    }

    /// Passes when `value <= tolerance`.
    pub fn within(criterion: u8, name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check {
            criterion,
            name: name.into(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }

    /// Re-evaluates against `tolerance * scale`.
    pub fn rescaled(mut self, scale: f64) -> Self {
        self.tolerance *= scale;
        self.passed = self.value < self.tolerance || (self.value == 0.0 && self.tolerance > 0.0);
        self
    }
}

#[derive(Clone, Debug)]
pub struct CheckConfig {
    pub seed: u64,
    /// Haar samples for the noisy averages.
    pub samples: usize,
    /// Random states teleported per translation kind.
    pub teleport_states: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            seed: 2026,
            samples: 1_000_000,
            teleport_states: 1000,
        }
    }
}

fn phase_distance(u: &Unitary2, v: &Unitary2) -> f64 {
    let t = (v.adjoint() * *u).matrix().trace();
    let ph = if t.norm() > 0.0 {
        t / t.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    u.scale(ph.conj()).max_diff(v)
}

/// `1 - |tr(O^dag U) / d|^2`.
fn process_infidelity(u: &DMatrix<C64>, oracle: &DMatrix<C64>) -> f64 {
    let d = u.nrows() as f64;
    let t: C64 = oracle.iter().zip(u.iter()).map(|(o, x)| o.conj() * x).sum();
    (1.0 - (t / d).norm_sqr()).max(0.0)
}

/// Largest per-input infidelity and the process infidelity of `u` against
/// `oracle`.
fn matrix_infidelity(u: &DMatrix<C64>, oracle: &DMatrix<C64>) -> f64 {
    let per_input = (0..u.ncols())
        .map(|j| 1.0 - oracle.column(j).dotc(&u.column(j)).norm_sqr())
        .fold(0.0, f64::max);
    per_input.max(process_infidelity(u, oracle))
}

fn basis(dim: usize, k: usize) -> DVector<C64> {
    let mut v = DVector::zeros(dim);
    v[k] = C64::new(1.0, 0.0);
    v
}

/// Runs `f` on a fresh two-slot processor for each basis input and collects
/// the outputs as columns.
fn two_slot_unitary<F>(kinds: [Encoding; 2], f: F) -> Result<(DMatrix<C64>, f64)>
where
    F: Fn(&mut Processor) -> Result<()>,
{
    let mut u = DMatrix::zeros(4, 4);
    let mut leak: f64 = 0.0;
    for x in 0..4 {
        let mut p = Processor::new(&kinds, ProcessorConfig::default())?;
        p.prepare(&[0, 1], Some(basis(4, x)))?;
        f(&mut p)?;
        let (v, l) = p.data_state(&[0, 1])?;
        u.set_column(x, &v);
        leak = leak.max(l);
    }
    Ok((u, leak))
}

/// Post-correction composite identities for both encodings.
pub fn composite_identities() -> Vec<Check> {
    let x = Unitary2::pauli_x();
    let h = Unitary2::hadamard();
    let id = Unitary2::identity();
    let mut out = Vec::new();
    for (name, f, single, sup) in [
        (
            "global bit flip",
            global_bitflip as fn(Encoding) -> Unitary2,
            &x,
            &x,
        ),
        ("superatom-only bit flip", superatom_only_bitflip, &id, &x),
        ("superatom-only Hadamard", superatom_only_hadamard, &id, &h),
    ] {
        let err = phase_distance(&f(Encoding::Single), single)
            .max(phase_distance(&f(Encoding::Superatom), sup));
        out.push(Check::below(1, name, err, 1e-10));
    }
    out
}

/// Mediator branches, simulated CZ and the `|++>` amplitude pattern.
pub fn cz_mediator() -> Result<Vec<Check>> {
    let minus = Unitary2::identity().scale(C64::new(-1.0, 0.0));
    let branches = cz_mediator_sequence(Encoding::Single)
        .max_diff(&minus)
        .max(cz_mediator_sequence(Encoding::Superatom).max_diff(&minus));
    let one = TranslationKind::new(1)?;
    let (u, leak) = two_slot_unitary([Encoding::Single; 2], |p| {
        cz_wiregate(p, 0, 1, one, one).map(|_| ())
    })?;
    let cz = gate_matrix(2, &Gate::Cz(0, 1))?;
    let sim = matrix_infidelity(&u, &cz).max(leak);
    let mut p = Processor::new(&[Encoding::Single; 2], ProcessorConfig::default())?;
    p.prepare(&[0, 1], Some(DVector::from_element(4, C64::new(0.5, 0.0))))?;
    cz_wiregate(&mut p, 0, 1, one, one)?;
    let (v, _) = p.data_state(&[0, 1])?;
    let ph = v[0] / v[0].norm();
    let expect = [0.5, 0.5, 0.5, -0.5];
    let pattern = (0..4)
        .map(|k| (v[k] / ph - expect[k]).norm())
        .fold(0.0, f64::max);
    Ok(vec![
        Check::below(2, "mediator branches equal -I", branches, 1e-10),
        Check::below(2, "simulated CZ vs diag(1,1,1,-1)", sim, 1e-9),
        Check::below(2, "CZ on |++> amplitude pattern", pattern, 1e-9),
    ])
}

/// Haar-random states through every translation kind.
pub fn teleportation(states: usize, seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..states {
        let (a, b) = haar_state(&mut rng);
        for nu in 1..=4 {
            let nu = TranslationKind::new(nu)?;
            let mut p = Processor::new(&[nu.source()], ProcessorConfig::default())?;
            p.prepare(&[0], Some(DVector::from_vec(vec![a, b])))?;
            temporal_translation(&mut p, 0, nu)?;
            let (v, leak) = p.data_state(&[0])?;
            let f = (a.conj() * v[0] + b.conj() * v[1]).norm_sqr();
            worst = worst.max(1.0 - f).max(leak);
        }
    }
    Ok(Check::below(
        3,
        format!("{states} Haar states through T1..T4, worst infidelity"),
        worst,
        1e-10,
    ))
}

/// Fitted Rabi frequency of M-atom blockaded ensembles against `sqrt(M)`.
pub fn collective_enhancement() -> Result<Check> {
    let grid: Vec<f64> = (0..=400).map(|k| 4.0 * PI * k as f64 / 400.0).collect();
    let mut worst: f64 = 0.0;
    for m in 2..=5u32 {
        let w = collective_rabi_frequency(m, 1.0, &grid)?;
        worst = worst.max((w / (m as f64).sqrt() - 1.0).abs());
    }
    Ok(Check::below(
        4,
        "collective Rabi frequency, M=2..5, relative error",
        worst,
        1e-6,
    ))
}

/// Wire-gate CNOT truth table.
pub fn cnot_truth_table() -> Result<Check> {
    let (s, m) = (Encoding::Single, Encoding::Superatom);
    let (u, leak) = two_slot_unitary([s, m], |p| {
        cnot_wiregate(
            p,
            0,
            1,
            TranslationKind::between(s, s),
            TranslationKind::between(m, s),
        )
        .map(|_| ())
    })?;
    let oracle = gate_matrix(2, &Gate::Cx(0, 1))?;
    Ok(Check::below(
        5,
        "CNOT wire-gate vs oracle",
        matrix_infidelity(&u, &oracle).max(leak),
        1e-9,
    ))
}

/// Wire-gate controlled phase for `phi = 2 pi / 2^q`.
pub fn cphase(q: u32) -> Result<Check> {
    let phi = Gate::qft_phase(q);
    let (u, leak) = two_slot_unitary([Encoding::Single, Encoding::Superatom], |p| {
        cphase_wiregate(p, 0, 1, phi).map(|_| ())
    })?;
    let oracle = gate_matrix(2, &Gate::Cp(0, 1, phi))?;
    Ok(Check::below(
        6,
        format!("C-Phase q={q} vs diag(1,1,1,e^(2 pi i/2^{q}))"),
        matrix_infidelity(&u, &oracle).max(leak),
        1e-9,
    ))
}

/// Reference QFT-3 schedule against the DFT with reversed qubit order.
pub fn qft3() -> Result<Check> {
    let s = qft3_reference_schedule();
    let q = qft_matrix(3)?;
    let oracle = DMatrix::from_fn(8, 8, |j, x| q[(bit_reverse(j, 3), x)]);
    let mut u = DMatrix::zeros(8, 8);
    let mut leak: f64 = 0.0;
    for x in 0..8 {
        let (v, l) = simulate_schedule(&s, &basis(8, x), Method::ExactExponential)?;
        u.set_column(x, &v);
        leak = leak.max(l);
    }
    Ok(Check::below(
        7,
        "QFT-3 reference schedule vs DFT oracle",
        matrix_infidelity(&u, &oracle).max(leak),
        1e-8,
    ))
}

/// Closed-form noisy translation against the explicit channel composition.
pub fn noise_closed_form(cases: usize, seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let (a, b) = haar_state(&mut rng);
        let p = rng.random_range(0.0..0.25);
        let closed = noisy_translation(a, b, p)?;
        let (composed, _) = noisy_translation_composed(a, b, p)?;
        worst = worst.max(
            (closed - composed)
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max),
        );
    }
    Ok(Check::below(
        8,
        format!("closed form vs composed channels, {cases} cases"),
        worst,
        1e-12,
    ))
}

/// Haar means at `p` and the log-log slopes of the mean infidelity.
///
/// The slopes use exact Haar quadrature over p in `[1e-4, 1e-2]`.
pub fn noise_averages(p: f64, samples: usize, seed: u64) -> Result<Vec<Check>> {
    let (single, se) = haar_average_fidelity(Protocol::SingleAtom, p, samples, seed)?;
    let (qpair, _) = haar_average_fidelity(Protocol::QPair, p, samples, seed)?;
    let ps = log_space(1e-4, 1e-2, 9);
    let slope = |protocol| -> Result<f64> {
        let infid = ps
            .iter()
            .map(|&p| {
                Ok(1.0
                    - haar_quadrature(|a, b| {
                        protocol_fidelity(protocol, a, b, p).unwrap_or(f64::NAN)
                    }))
            })
            .collect::<Result<Vec<f64>>>()?;
        loglog_slope(&ps, &infid)
    };
    Ok(vec![
        Check::within(
            8,
            format!("single-atom <F> - (1 - 4p/3) vs 3 stderr, p={p}"),
            (single - (1.0 - 4.0 * p / 3.0)).abs(),
            3.0 * se,
        ),
        Check::within(
            8,
            format!("Q-Pair |<F> - 1| vs 10 p^2, p={p}"),
            (qpair - 1.0).abs(),
            10.0 * p * p,
        ),
        Check::within(
            8,
            "single-atom infidelity slope - 1.0",
            (slope(Protocol::SingleAtom)? - 1.0).abs(),
            0.1,
        ),
        Check::within(
            8,
            "Q-Pair infidelity slope - 2.0",
            (slope(Protocol::QPair)? - 2.0).abs(),
            0.2,
        ),
    ])
}

/// Estimator presets: `p` from lifetime and gate time, and `F_T`.
pub fn resource_presets() -> Vec<Check> {
    let base = NoiseParams::default();
    let p_shown: f64 = format!("{:.0e}", base.p).parse().unwrap_or(f64::NAN);
    let mut out = vec![Check::within(
        9,
        format!("p = {:.4e} shown to one digit", base.p),
        (p_shown - 4e-4).abs(),
        0.0,
    )];
    for (f_d_mov, expect) in [(0.995, 0.99), (0.999, 0.995)] {
        let f = NoiseParams {
            f_d_mov,
            ..base.clone()
        }
        .translation_fidelity();
        out.push(Check::below(
            9,
            format!("F_T = {f:.5} for f_d_mov={f_d_mov}, expected {expect}"),
            (f - expect).abs(),
            0.005,
        ));
    }
    out
}

/// Deterministic random circuit over every gate type.
pub fn random_circuit(qubits: usize, gates: usize, seed: u64) -> Result<LogicalCircuit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(gates);
    for _ in 0..gates {
        let a = rng.random_range(0..qubits);
        let b = if qubits > 1 {
            (a + rng.random_range(1..qubits)) % qubits
        } else {
            a
        };
        let phi = rng.random_range(-PI..PI);
        let gate = match (rng.random_range(0..7), qubits > 1) {
            (0, _) | (_, false) => Gate::H(a),
            (1, _) => Gate::X(a),
            (2, _) => Gate::P(a, phi),
            (3, _) => Gate::Cz(a, b),
            (4, _) => Gate::Cx(a, b),
            (5, _) => Gate::Cp(a, b, phi),
            _ => Gate::Swap(a, b),
        };
        out.push(gate);
    }
    LogicalCircuit::new(qubits, out)
}

/// Best `k` for `y = a x^k + b` by least squares.
pub fn power_law_exponent(xs: &[f64], ys: &[f64]) -> f64 {
    let sse = |k: f64| {
        let n = xs.len() as f64;
        let us: Vec<f64> = xs.iter().map(|x| x.powf(k)).collect();
        let (mu, my) = (us.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let suu: f64 = us.iter().map(|u| (u - mu).powi(2)).sum();
        let suy: f64 = us.iter().zip(ys).map(|(u, y)| (u - mu) * (y - my)).sum();
        let a = if suu > 0.0 { suy / suu } else { 0.0 };
        us.iter()
            .zip(ys)
            .map(|(u, y)| (y - my - a * (u - mu)).powi(2))
            .sum::<f64>()
    };
    let grid: Vec<f64> = (1..=400).map(|i| i as f64 * 0.01).collect();
    let mut k = grid
        .iter()
        .copied()
        .min_by(|a, b| sse(*a).total_cmp(&sse(*b)))
        .unwrap_or(1.0);
    let (mut lo, mut hi) = (k - 0.01, k + 0.01);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let (c, d) = (hi - g * (hi - lo), lo + g * (hi - lo));
        if sse(c) < sse(d) {
            hi = d;
        } else {
            lo = c;
        }
        k = (lo + hi) / 2.0;
    }
    k
}

/// Peak trapped atoms for N = 2..8 over random circuits.
pub fn atom_scaling(seed: u64) -> Result<Vec<(usize, u32)>> {
    let params = NoiseParams::default();
    (2..=8)
        .map(|n| {
            let mut peak = 0;
            for c in 0..4u64 {
                let circuit = random_circuit(n, 3 * n, seed.wrapping_add(100 * n as u64 + c))?;
                let schedule = compile(&circuit, &LayoutPolicy::Identity)?;
                peak = peak.max(estimate_resources(&schedule, &params)?.atom_count);
            }
            Ok((n, peak))
        })
        .collect()
}

/// Exponent of the peak atom count against N, fitted as `a N^k + b`.
pub fn linear_scaling(seed: u64) -> Result<Check> {
    let data = atom_scaling(seed)?;
    let xs: Vec<f64> = data.iter().map(|d| d.0 as f64).collect();
    let ys: Vec<f64> = data.iter().map(|d| d.1 as f64).collect();
    let k = power_law_exponent(&xs, &ys);
    let raw = loglog_slope(&xs, &ys)?;
    let counts: Vec<String> = data.iter().map(|(n, c)| format!("{n}:{c}")).collect();
    Ok(Check::within(
        10,
        format!(
            "atom count exponent k={k:.4} (raw log-log {raw:.3}; N:atoms {})",
            counts.join(" ")
        ),
        (k - 1.0).abs(),
        0.05,
    ))
}

/// Every check, in criterion order.
pub fn run_all(config: &CheckConfig) -> Result<Vec<Check>> {
    let mut out = composite_identities();
    out.extend(cz_mediator()?);
    out.push(teleportation(config.teleport_states, config.seed)?);
    out.push(collective_enhancement()?);
    out.push(cnot_truth_table()?);
    for q in 1..=3 {
        out.push(cphase(q)?);
    }
    out.push(qft3()?);
    out.push(noise_closed_form(100, config.seed)?);
    out.extend(noise_averages(1e-3, config.samples, config.seed)?);
    out.extend(resource_presets());
    out.push(linear_scaling(config.seed)?);
    Ok(out)
}
