// Copyright 2026 The qpair Authors
// SPDX-License-Identifier: Apache-2.0

//! Dense gate-level reference simulator. Qubit 0 is the least significant bit.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::fmt;

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Largest register the oracle accepts.
pub const MAX_QUBITS: usize = 10;

/// Logical gate set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    H(usize),
    X(usize),
    P(usize, f64),
    Cz(usize, usize),
    Cx(usize, usize),
    Cp(usize, usize, f64),
    Swap(usize, usize),
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H(q) | Gate::X(q) | Gate::P(q, _) => vec![q],
            Gate::Cz(a, b) | Gate::Cx(a, b) | Gate::Cp(a, b, _) | Gate::Swap(a, b) => vec![a, b],
        }
    }

    /// Phase `2 pi / 2^q` of the QFT controlled rotations.
    pub fn qft_phase(q: u32) -> f64 {
        TAU / 2f64.powi(q as i32)
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::H(q) => write!(f, "H {q}"),
            Gate::X(q) => write!(f, "X {q}"),
            Gate::P(q, phi) => write!(f, "P {q} phi={phi}"),
            Gate::Cz(a, b) => write!(f, "CZ {a} {b}"),
            Gate::Cx(a, b) => write!(f, "CX {a} {b}"),
            Gate::Cp(a, b, phi) => write!(f, "CP {a} {b} phi={phi}"),
            Gate::Swap(a, b) => write!(f, "SWAP {a} {b}"),
        }
    }
}

/// Amplitudes over `2^n` basis states.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    pub qubits: usize,
    pub amplitudes: DVector<C64>,
}

impl DenseState {
    pub fn basis(qubits: usize, index: usize) -> Result<Self> {
        if qubits > MAX_QUBITS {
            return Err(Error::InvalidParameter(format!(
                "{qubits} qubits exceed the oracle limit"
            )));
        }
        if index >= 1 << qubits {
            return Err(Error::InvalidParameter(format!(
                "basis index {index} out of range"
            )));
        }
        let mut amplitudes = DVector::zeros(1 << qubits);
        amplitudes[index] = C64::new(1.0, 0.0);
        Ok(DenseState { qubits, amplitudes })
    }

    pub fn from_amplitudes(amplitudes: DVector<C64>) -> Result<Self> {
        let n = amplitudes.len();
        if !n.is_power_of_two() || n.trailing_zeros() as usize > MAX_QUBITS {
            return Err(Error::InvalidParameter(format!(
                "length {n} is not 2^n with n <= {MAX_QUBITS}"
            )));
        }
        Ok(DenseState {
            qubits: n.trailing_zeros() as usize,
            amplitudes,
        })
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }
}

fn one_qubit_matrix(gate: &Gate) -> Option<(usize, Matrix2<C64>)> {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    match *gate {
        Gate::H(q) => Some((q, Matrix2::new(h, h, h, -h))),
        Gate::X(q) => Some((q, Matrix2::new(z, o, o, z))),
        Gate::P(q, phi) => Some((q, Matrix2::new(o, z, z, C64::from_polar(1.0, phi)))),
        _ => None,
    }
}

fn check_range(gate: &Gate, qubits: usize) -> Result<()> {
    let qs = gate.qubits();
    for &q in &qs {
        if q >= qubits {
            return Err(Error::QubitRange {
                index: q,
                count: qubits,
            });
        }
    }
    if qs.len() == 2 && qs[0] == qs[1] {
        return Err(Error::InvalidCircuit(format!(
            "{gate} uses qubit {} twice",
            qs[0]
        )));
    }
    Ok(())
}

pub fn apply_gate(state: &DenseState, gate: &Gate) -> Result<DenseState> {
    check_range(gate, state.qubits)?;
    let mut out = state.amplitudes.clone();
    if let Some((q, m)) = one_qubit_matrix(gate) {
        let bit = 1 << q;
        for i in 0..out.len() {
            if i & bit == 0 {
                let (a, b) = (state.amplitudes[i], state.amplitudes[i | bit]);
                out[i] = m[(0, 0)] * a + m[(0, 1)] * b;
                out[i | bit] = m[(1, 0)] * a + m[(1, 1)] * b;
            }
        }
        return Ok(DenseState {
            qubits: state.qubits,
            amplitudes: out,
        });
    }
    let both = |i: usize, a: usize, b: usize| (i >> a) & 1 == 1 && (i >> b) & 1 == 1;
    match *gate {
        Gate::Cz(a, b) => {
            for (i, z) in out.iter_mut().enumerate() {
                if both(i, a, b) {
                    *z = -*z;
                }
            }
        }
        Gate::Cp(a, b, phi) => {
            let w = C64::from_polar(1.0, phi);
            for (i, z) in out.iter_mut().enumerate() {
                if both(i, a, b) {
                    *z *= w;
                }
            }
        }
        Gate::Cx(c, t) => {
            for i in 0..out.len() {
                if (i >> c) & 1 == 1 {
                    out[i] = state.amplitudes[i ^ (1 << t)];
                }
            }
        }
        Gate::Swap(a, b) => {
            for i in 0..out.len() {
                let (x, y) = ((i >> a) & 1, (i >> b) & 1);
                let j = (i & !(1 << a) & !(1 << b)) | (y << a) | (x << b);
                out[j] = state.amplitudes[i];
            }
        }
        _ => unreachable!("one-qubit gates handled above"),
    }
    Ok(DenseState {
        qubits: state.qubits,
        amplitudes: out,
    })
}

pub fn apply_circuit(state: &DenseState, gates: &[Gate]) -> Result<DenseState> {
    gates
        .iter()
        .try_fold(state.clone(), |s, g| apply_gate(&s, g))
}

/// Full unitary of a gate sequence, column `j` = image of basis state `j`.
pub fn circuit_unitary(qubits: usize, gates: &[Gate]) -> Result<DMatrix<C64>> {
    let dim = 1 << qubits;
    let mut u = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        let out = apply_circuit(&DenseState::basis(qubits, j)?, gates)?;
        u.set_column(j, &out.amplitudes);
    }
    Ok(u)
}

/// Full-space matrix of one gate built from Kronecker products.
pub fn gate_matrix(qubits: usize, gate: &Gate) -> Result<DMatrix<C64>> {
    check_range(gate, qubits)?;
    let dim = 1usize << qubits;
    let o = C64::new(1.0, 0.0);
    if let Some((q, m)) = one_qubit_matrix(gate) {
        // qubit k sits at Kronecker position n-1-k
        let mut full = DMatrix::from_element(1, 1, o);
        for k in (0..qubits).rev() {
            let factor = if k == q {
                DMatrix::from_fn(2, 2, |r, c| m[(r, c)])
            } else {
                DMatrix::identity(2, 2)
            };
            full = full.kronecker(&factor);
        }
        return Ok(full);
    }
    let m = DMatrix::from_fn(dim, dim, |r, c| {
        let bit = |i: usize, k: usize| (i >> k) & 1;
        match *gate {
            Gate::Cz(a, b) if r == c => {
                if bit(r, a) & bit(r, b) == 1 {
                    -o
                } else {
                    o
                }
            }
            Gate::Cp(a, b, phi) if r == c => {
                if bit(r, a) & bit(r, b) == 1 {
                    C64::from_polar(1.0, phi)
                } else {
                    o
                }
            }
            Gate::Cx(ctl, t) => {
                let image = if bit(c, ctl) == 1 { c ^ (1 << t) } else { c };
                if r == image {
                    o
                } else {
                    C64::new(0.0, 0.0)
                }
            }
            Gate::Swap(a, b) => {
                let (x, y) = (bit(c, a), bit(c, b));
                let image = (c & !(1 << a) & !(1 << b)) | (y << a) | (x << b);
                if r == image {
                    o
                } else {
                    C64::new(0.0, 0.0)
                }
            }
            _ => C64::new(0.0, 0.0),
        }
    });
    Ok(m)
}

/// Entries `e^{2 pi i j k / 2^n} / sqrt(2^n)`.
pub fn qft_matrix(n: usize) -> Result<DMatrix<C64>> {
    if !(1..=MAX_QUBITS).contains(&n) {
        return Err(Error::InvalidParameter(format!(
            "QFT size {n} outside 1..={MAX_QUBITS}"
        )));
    }
    let dim = 1usize << n;
    let scale = 1.0 / (dim as f64).sqrt();
    Ok(DMatrix::from_fn(dim, dim, |j, k| {
        C64::from_polar(scale, TAU * ((j * k) % dim) as f64 / dim as f64)
    }))
}

/// Reverses the low `n` bits of `i`.
pub fn bit_reverse(i: usize, n: usize) -> usize {
    (0..n).fold(0, |acc, k| acc | (((i >> k) & 1) << (n - 1 - k)))
}

/// `|<a|b>|^2`.
pub fn fidelity_up_to_phase(a: &DenseState, b: &DenseState) -> Result<f64> {
    if a.amplitudes.len() != b.amplitudes.len() {
        return Err(Error::InvalidParameter(format!(
            "dimension mismatch: {} vs {}",
            a.amplitudes.len(),
            b.amplitudes.len()
        )));
    }
    Ok(a.amplitudes.dotc(&b.amplitudes).norm_sqr())
}

/// Largest elementwise error between `u` and `lambda v`, with the global
/// phase `lambda` taken from `tr(v^dagger u)`.
pub fn unitary_distance_up_to_phase(u: &DMatrix<C64>, v: &DMatrix<C64>) -> f64 {
    let overlap = (v.adjoint() * u).trace();
    let lambda = if overlap.norm() > 1e-300 {
        overlap / overlap.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    (u - v * lambda)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}
