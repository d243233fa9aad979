// Copyright 2026 The qpair Authors
// SPDX-License-Identifier: Apache-2.0

//! Exact SU(2) pulse algebra for single atoms and M = 4 superatoms.
//!
//! Basis ordering is `(g, r)`. A resonant pulse of area `theta` and phase
//! `phi` acts as `cos(theta/2) I - i sin(theta/2) (cos(phi) X + sin(phi) Y)`.
//! Composite sequences list pulses in operator order, so the rightmost pulse
//! is applied first. All areas are single-atom areas; a superatom of size 4
//! sees twice the area.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI, TAU};
use std::fmt;
use std::ops::Mul;

use nalgebra::Matrix2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Superatom size for which the composite sequences are defined.
pub const COMPOSITE_SUPERATOM_SIZE: u32 = 4;

/// Tolerance for unitarity checks.
pub const UNITARITY_TOL: f64 = 1e-12;
/// Tolerance for identity checks of composite products.
pub const IDENTITY_TOL: f64 = 1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Atomic species. Pulses are species selective.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Species {
    A,
    B,
}

impl fmt::Display for Species {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Species::A => f.write_str("A"),
            Species::B => f.write_str("B"),
        }
    }
}

impl std::str::FromStr for Species {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Species::A),
            "B" | "b" => Ok(Species::B),
            other => Err(Error::InvalidAtom(format!("unknown species {other:?}"))),
        }
    }
}

/// How a qubit is encoded: one atom, or a blockaded ensemble of four.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Encoding {
    Single,
    Superatom,
}

impl Encoding {
    /// Ratio between the effective and the single-atom pulse area.
    pub fn area_factor(self) -> f64 {
        match self {
            Encoding::Single => 1.0,
            Encoding::Superatom => (COMPOSITE_SUPERATOM_SIZE as f64).sqrt(),
        }
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Encoding::Single => f.write_str("single"),
            Encoding::Superatom => f.write_str("superatom"),
        }
    }
}

/// A complex 2x2 unitary in the `(g, r)` basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Unitary2(Matrix2<C64>);

impl Unitary2 {
    /// Wraps a matrix, checking unitarity and `|det| = 1` at [`UNITARITY_TOL`].
    pub fn new(m: Matrix2<C64>) -> Result<Self> {
        let u = Unitary2(m);
        if !u.is_unitary(UNITARITY_TOL) {
            return Err(Error::InvalidPulse("matrix is not unitary".into()));
        }
        Ok(u)
    }

    /// Row-major constructor that skips the unitarity check.
    pub fn from_rows(a: C64, b: C64, c: C64, d: C64) -> Self {
        Unitary2(Matrix2::new(a, b, c, d))
    }

    pub fn identity() -> Self {
        Self::from_rows(ONE, ZERO, ZERO, ONE)
    }

    pub fn pauli_x() -> Self {
        Self::from_rows(ZERO, ONE, ONE, ZERO)
    }

    pub fn pauli_y() -> Self {
        Self::from_rows(ZERO, -I, I, ZERO)
    }

    pub fn pauli_z() -> Self {
        Self::from_rows(ONE, ZERO, ZERO, -ONE)
    }

    pub fn hadamard() -> Self {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        Self::from_rows(h, h, h, -h)
    }

    pub fn matrix(&self) -> &Matrix2<C64> {
        &self.0
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Unitary2(self.0.adjoint())
    }

    pub fn scale(&self, z: C64) -> Self {
        Unitary2(self.0 * z)
    }

    pub fn determinant(&self) -> C64 {
        self.0[(0, 0)] * self.0[(1, 1)] - self.0[(0, 1)] * self.0[(1, 0)]
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_diff(&self, other: &Unitary2) -> f64 {
        (self.0 - other.0)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Unitary2, tol: f64) -> bool {
        self.max_diff(other) <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let gram = self.0.adjoint() * self.0;
        let id = Matrix2::identity();
        let off = (gram - id).iter().map(|z| z.norm()).fold(0.0, f64::max);
        off <= tol && (self.determinant().norm() - 1.0).abs() <= tol
    }
}

impl Mul for Unitary2 {
    type Output = Unitary2;
    fn mul(self, rhs: Unitary2) -> Unitary2 {
        Unitary2(self.0 * rhs.0)
    }
}

impl fmt::Display for Unitary2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.0;
        write!(
            f,
            "[[{:.6}, {:.6}], [{:.6}, {:.6}]]",
            m[(0, 0)],
            m[(0, 1)],
            m[(1, 0)],
            m[(1, 1)]
        )
    }
}

/// Reduces an angle to `[0, 2pi)`.
pub fn canonical_angle(phi: f64) -> f64 {
    let r = phi.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// One global resonant pulse, parametrised by its single-atom area.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseSpec {
    pub species: Species,
    area: f64,
    phase: f64,
    pub inverse: bool,
}

impl PulseSpec {
    pub fn new(species: Species, area: f64, phase: f64) -> Result<Self> {
        if !area.is_finite() || area < 0.0 {
            return Err(Error::InvalidPulse(format!(
                "area {area} must be finite and >= 0"
            )));
        }
        if !phase.is_finite() {
            return Err(Error::InvalidPulse(format!("phase {phase} must be finite")));
        }
        Ok(PulseSpec {
            species,
            area,
            phase: canonical_angle(phase),
            inverse: false,
        })
    }

    /// Same pulse with the dagger flag toggled.
    pub fn dagger(mut self) -> Self {
        self.inverse = !self.inverse;
        self
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn with_species(mut self, species: Species) -> Self {
        self.species = species;
        self
    }
}

/// Rotation produced by `spec` with the area scaled by `factor`.
///
/// The blockade engine uses `factor = sqrt(M)` for a superatom of size `M`.
pub fn rotation_scaled(spec: &PulseSpec, factor: f64) -> Unitary2 {
    let theta = spec.area * factor;
    let (s, c) = (theta / 2.0).sin_cos();
    let (sp, cp) = spec.phase.sin_cos();
    // -i sin(theta/2) (cos phi X + sin phi Y)
    let off_01 = C64::new(0.0, -s) * C64::new(cp, -sp);
    let off_10 = C64::new(0.0, -s) * C64::new(cp, sp);
    let u = Unitary2::from_rows(C64::new(c, 0.0), off_01, off_10, C64::new(c, 0.0));
    if spec.inverse {
        u.adjoint()
    } else {
        u
    }
}

pub fn rotation(spec: &PulseSpec, kind: Encoding) -> Unitary2 {
    rotation_scaled(spec, kind.area_factor())
}

/// `diag(1, e^{i phi})`.
pub fn phase_gate(phi: f64) -> Unitary2 {
    Unitary2::from_rows(ONE, ZERO, ZERO, C64::from_polar(1.0, phi))
}

/// Post-applied correction `prefactor * P(angle)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Correction {
    pub prefactor: C64,
    pub angle: f64,
}

impl Correction {
    pub fn unitary(&self) -> Unitary2 {
        phase_gate(self.angle).scale(self.prefactor)
    }
}

/// Ordered pulses in operator order plus an optional closing correction.
#[derive(Clone, Debug, PartialEq)]
pub struct CompositeSequence {
    pulses: Vec<PulseSpec>,
    pub correction: Option<Correction>,
}

impl CompositeSequence {
    pub fn new(pulses: Vec<PulseSpec>, correction: Option<Correction>) -> Result<Self> {
        if pulses.is_empty() {
            return Err(Error::EmptySequence);
        }
        Ok(CompositeSequence { pulses, correction })
    }

    /// Pulses in operator order; the last element fires first.
    pub fn pulses(&self) -> &[PulseSpec] {
        &self.pulses
    }

    /// Pulses in the order they are applied in time.
    pub fn firing_order(&self) -> impl Iterator<Item = &PulseSpec> {
        self.pulses.iter().rev()
    }

    pub fn with_species(&self, species: Species) -> Self {
        CompositeSequence {
            pulses: self
                .pulses
                .iter()
                .map(|p| p.with_species(species))
                .collect(),
            correction: self.correction,
        }
    }
}

/// Product of the pulses without the correction.
pub fn raw_product(seq: &CompositeSequence, kind: Encoding) -> Unitary2 {
    seq.pulses
        .iter()
        .fold(Unitary2::identity(), |acc, p| acc * rotation(p, kind))
}

pub fn compose(seq: &CompositeSequence, kind: Encoding) -> Unitary2 {
    let raw = raw_product(seq, kind);
    match seq.correction {
        Some(c) => c.unitary() * raw,
        None => raw,
    }
}

/// Checks that `size` is the superatom size the composite sequences assume.
pub fn check_composite_size(size: u32) -> Result<()> {
    if size == COMPOSITE_SUPERATOM_SIZE {
        Ok(())
    } else {
        Err(Error::UnsupportedSuperatomSize(size))
    }
}

/// `min_lambda ||u - lambda v||_max <= tol` over unit phases `lambda`.
pub fn equal_up_to_global_phase(u: &Unitary2, v: &Unitary2, tol: f64) -> bool {
    let overlap: C64 = (v.0.adjoint() * u.0).trace();
    let lambda = if overlap.norm() > 1e-300 {
        overlap / overlap.norm()
    } else {
        ONE
    };
    u.max_diff(&v.scale(lambda)) <= tol
}

/// Solves `lambda * P(angle) * raw = target` with `|lambda| = 1`.
///
/// Returns `None` when `target * raw^dagger` is not diagonal with unit-modulus
/// entries, i.e. when no phase-gate correction reaches the target.
pub fn solve_correction(raw: &Unitary2, target: &Unitary2, tol: f64) -> Option<Correction> {
    let m = target.0 * raw.0.adjoint();
    if m[(0, 1)].norm() > tol || m[(1, 0)].norm() > tol {
        return None;
    }
    let lambda = m[(0, 0)];
    if (lambda.norm() - 1.0).abs() > tol || (m[(1, 1)].norm() - 1.0).abs() > tol {
        return None;
    }
    let angle = canonical_angle((m[(1, 1)] / lambda).arg());
    let c = Correction {
        prefactor: lambda,
        angle,
    };
    (c.unitary() * *raw).approx_eq(target, tol).then_some(c)
}

/// Phase frames `P(post) * U * P(pre)`, exact with no global phase freedom.
///
/// Such frames keep an atom's ground amplitude untouched, which matters when
/// the same pulses act on a blockaded (frozen) branch of the state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseFrame {
    pub pre: f64,
    pub post: f64,
}

impl PhaseFrame {
    pub const NONE: PhaseFrame = PhaseFrame {
        pre: 0.0,
        post: 0.0,
    };

    pub fn apply(&self, u: &Unitary2) -> Unitary2 {
        phase_gate(self.post) * *u * phase_gate(self.pre)
    }
}

/// Finds `pre`, `post` with `P(post) U P(pre) = T` entrywise.
pub fn solve_phase_frame(u: &Unitary2, target: &Unitary2, tol: f64) -> Option<PhaseFrame> {
    let ratio = |t: C64, v: C64| (v.norm() > tol).then(|| (t / v).arg());
    let pre = ratio(target.entry(0, 1), u.entry(0, 1));
    let post = ratio(target.entry(1, 0), u.entry(1, 0));
    let both = ratio(target.entry(1, 1), u.entry(1, 1));
    let (pre, post) = match (pre, post, both) {
        (Some(a), Some(b), _) => (a, b),
        (Some(a), None, Some(s)) => (a, s - a),
        (None, Some(b), Some(s)) => (s - b, b),
        (None, None, Some(s)) => (0.0, s),
        _ => return None,
    };
    let frame = PhaseFrame {
        pre: canonical_angle(pre),
        post: canonical_angle(post),
    };
    frame.apply(u).approx_eq(target, tol).then_some(frame)
}

fn pulse(species: Species, area: f64, phase: f64) -> PulseSpec {
    PulseSpec::new(species, area, phase).expect("static pulse parameters are valid")
}

/// Composite operations used by the wire-gates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Composite {
    /// Flips single atoms and superatoms alike.
    GlobalBitflip,
    /// Flips superatoms, leaves single atoms alone.
    SuperatomBitflip,
    /// Hadamard on superatoms, identity on single atoms.
    SuperatomHadamard,
    /// Five pulses acting as `-I` on both encodings; only blockade makes it act.
    CzMediator,
}

impl Composite {
    pub const ALL: [Composite; 4] = [
        Composite::GlobalBitflip,
        Composite::SuperatomBitflip,
        Composite::SuperatomHadamard,
        Composite::CzMediator,
    ];

    /// Pulses in operator order on species `species`.
    pub fn pulses(self, species: Species) -> Vec<PulseSpec> {
        let p = |area, phase| pulse(species, area, phase);
        match self {
            Composite::GlobalBitflip => {
                vec![p(FRAC_PI_4, 0.0), p(PI, FRAC_PI_2), p(FRAC_PI_4, 0.0)]
            }
            Composite::SuperatomBitflip => {
                vec![
                    p(FRAC_PI_2, 0.0).dagger(),
                    p(FRAC_PI_2, FRAC_PI_2),
                    p(FRAC_PI_2, 0.0),
                ]
            }
            Composite::SuperatomHadamard => {
                vec![
                    p(FRAC_PI_2, 0.0).dagger(),
                    p(FRAC_PI_4, FRAC_PI_2),
                    p(FRAC_PI_2, 0.0),
                ]
            }
            Composite::CzMediator => vec![
                p(FRAC_PI_4, FRAC_PI_2),
                p(PI, 0.0),
                p(FRAC_PI_2, FRAC_PI_2),
                p(PI, 0.0),
                p(FRAC_PI_4, FRAC_PI_2),
            ],
        }
    }

    /// The ideal operation on the given encoding.
    pub fn target(self, kind: Encoding) -> Unitary2 {
        match (self, kind) {
            (Composite::GlobalBitflip, _) => Unitary2::pauli_x(),
            (Composite::SuperatomBitflip, Encoding::Superatom) => Unitary2::pauli_x(),
            (Composite::SuperatomHadamard, Encoding::Superatom) => Unitary2::hadamard(),
            (Composite::CzMediator, _) => Unitary2::identity().scale(-ONE),
            (_, Encoding::Single) => Unitary2::identity(),
        }
    }

    /// The sequence on species `species` with the correction for `kind`
    /// solved from the exact product.
    pub fn sequence(self, species: Species, kind: Encoding) -> CompositeSequence {
        let bare = CompositeSequence::new(self.pulses(species), None).expect("non-empty");
        let raw = raw_product(&bare, kind);
        let target = self.target(kind);
        let correction = if raw.approx_eq(&target, IDENTITY_TOL) {
            None
        } else {
            Some(
                solve_correction(&raw, &target, IDENTITY_TOL)
                    .expect("composite sequence is correctable"),
            )
        };
        CompositeSequence { correction, ..bare }
    }
}

pub fn global_bitflip(kind: Encoding) -> Unitary2 {
    compose(&Composite::GlobalBitflip.sequence(Species::A, kind), kind)
}

pub fn superatom_only_bitflip(kind: Encoding) -> Unitary2 {
    compose(
        &Composite::SuperatomBitflip.sequence(Species::A, kind),
        kind,
    )
}

pub fn superatom_only_hadamard(kind: Encoding) -> Unitary2 {
    compose(
        &Composite::SuperatomHadamard.sequence(Species::A, kind),
        kind,
    )
}

pub fn cz_mediator_sequence(kind: Encoding) -> Unitary2 {
    compose(&Composite::CzMediator.sequence(Species::B, kind), kind)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn rot(area: f64, phase: f64) -> PulseSpec {
        PulseSpec::new(Species::A, area, phase).unwrap()
    }

    #[test]
    fn pi_pulse_single_is_minus_i_x() {
        let u = rotation(&rot(PI, 0.0), Encoding::Single);
        assert!(u.approx_eq(&Unitary2::pauli_x().scale(-I), 1e-14));
    }

    #[test]
    fn pi_pulse_superatom_is_minus_identity() {
        let u = rotation(&rot(PI, 0.0), Encoding::Superatom);
        assert!(u.approx_eq(&Unitary2::identity().scale(-ONE), 1e-14));
    }

    #[test]
    fn half_pi_about_y() {
        let u = rotation(&rot(FRAC_PI_2, FRAC_PI_2), Encoding::Single);
        let h = FRAC_1_SQRT_2;
        let expect = Unitary2::from_rows(c(h, 0.0), c(-h, 0.0), c(h, 0.0), c(h, 0.0));
        assert!(u.approx_eq(&expect, 1e-14));
    }

    #[test]
    fn pulse_spec_validation() {
        assert!(PulseSpec::new(Species::A, -0.1, 0.0).is_err());
        assert!(PulseSpec::new(Species::A, f64::NAN, 0.0).is_err());
        let p = PulseSpec::new(Species::B, 1.0, -FRAC_PI_2).unwrap();
        assert!((p.phase() - 3.0 * FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn empty_sequence_rejected() {
        assert_eq!(
            CompositeSequence::new(vec![], None),
            Err(Error::EmptySequence)
        );
    }

    #[test]
    fn singleton_compose_matches_rotation() {
        let p = rot(PI, 0.0);
        let seq = CompositeSequence::new(vec![p], None).unwrap();
        assert_eq!(
            compose(&seq, Encoding::Single),
            rotation(&p, Encoding::Single)
        );
    }

    #[test]
    fn phase_gate_values() {
        assert!(phase_gate(0.0).approx_eq(&Unitary2::identity(), 0.0));
        assert!(phase_gate(PI).approx_eq(&Unitary2::pauli_z(), 1e-15));
        assert!(
            (phase_gate(FRAC_PI_4).entry(1, 1) - C64::from_polar(1.0, FRAC_PI_4)).norm() < 1e-15
        );
    }

    #[test]
    fn global_bitflip_raw_products() {
        let seq = Composite::GlobalBitflip.sequence(Species::A, Encoding::Single);
        assert!(
            raw_product(&seq, Encoding::Single).approx_eq(&Unitary2::pauli_y().scale(-I), 1e-12)
        );
        assert!(
            raw_product(&seq, Encoding::Superatom).approx_eq(&Unitary2::pauli_x().scale(I), 1e-12)
        );
    }

    #[test]
    fn global_bitflip_corrections_have_known_values() {
        let single = Composite::GlobalBitflip.sequence(Species::A, Encoding::Single);
        let c = single.correction.unwrap();
        assert!((c.prefactor + ONE).norm() < 1e-12);
        assert!((c.angle - PI).abs() < 1e-12);
        let sup = Composite::GlobalBitflip.sequence(Species::A, Encoding::Superatom);
        let c = sup.correction.unwrap();
        assert!((c.prefactor + I).norm() < 1e-12);
        assert!(c.angle.abs() < 1e-12 || (c.angle - TAU).abs() < 1e-12);
        for kind in [Encoding::Single, Encoding::Superatom] {
            assert!(global_bitflip(kind).approx_eq(&Unitary2::pauli_x(), 1e-10));
        }
    }

    #[test]
    fn superatom_bitflip_branches() {
        let seq = Composite::SuperatomBitflip.sequence(Species::A, Encoding::Superatom);
        let raw = raw_product(&seq, Encoding::Superatom);
        assert!(raw.approx_eq(&Unitary2::from_rows(ZERO, ONE, -ONE, ZERO), 1e-12));
        let single = raw_product(&seq, Encoding::Single);
        assert!(single.entry(0, 1).norm() < 1e-12 && single.entry(1, 0).norm() < 1e-12);
        let delta = single.entry(0, 0).arg();
        assert!((delta - FRAC_PI_4).abs() < 1e-12, "delta = {delta}");
        assert!(superatom_only_bitflip(Encoding::Single).approx_eq(&Unitary2::identity(), 1e-10));
        assert!(superatom_only_bitflip(Encoding::Superatom).approx_eq(&Unitary2::pauli_x(), 1e-10));
    }

    #[test]
    fn superatom_hadamard_branches() {
        let seq = Composite::SuperatomHadamard.sequence(Species::A, Encoding::Superatom);
        let raw = raw_product(&seq, Encoding::Superatom);
        let h = FRAC_1_SQRT_2;
        let expect = Unitary2::from_rows(c(h, 0.0), c(h, 0.0), c(-h, 0.0), c(h, 0.0));
        assert!(raw.approx_eq(&expect, 1e-12));
        assert!((seq.correction.unwrap().angle - PI).abs() < 1e-12);
        assert!(
            superatom_only_hadamard(Encoding::Superatom).approx_eq(&Unitary2::hadamard(), 1e-10)
        );
        assert!(superatom_only_hadamard(Encoding::Single).approx_eq(&Unitary2::identity(), 1e-10));
        let single = raw_product(&seq, Encoding::Single);
        assert!((single.entry(0, 0).arg() - PI / 8.0).abs() < 1e-12);
    }

    #[test]
    fn cz_mediator_is_minus_identity() {
        for kind in [Encoding::Single, Encoding::Superatom] {
            assert!(cz_mediator_sequence(kind).approx_eq(&Unitary2::identity().scale(-ONE), 1e-10));
        }
        let triple = rotation(&rot(PI, 0.0), Encoding::Single)
            * rotation(&rot(FRAC_PI_2, FRAC_PI_2), Encoding::Single)
            * rotation(&rot(PI, 0.0), Encoding::Single);
        let h = FRAC_1_SQRT_2;
        let expect = Unitary2::from_rows(c(-h, 0.0), c(-h, 0.0), c(h, 0.0), c(-h, 0.0));
        assert!(triple.approx_eq(&expect, 1e-12));
    }

    #[test]
    fn global_phase_equality() {
        let x = Unitary2::pauli_x();
        assert!(equal_up_to_global_phase(&x, &x.scale(I), 1e-10));
        assert!(!equal_up_to_global_phase(&x, &Unitary2::pauli_z(), 1e-10));
        let chain = (phase_gate(PI).scale(-ONE)) * Unitary2::pauli_y().scale(-I);
        assert!(equal_up_to_global_phase(&chain, &x, 1e-10));
    }

    #[test]
    fn phase_frame_solves_exact_bitflip() {
        let raw = rotation(&rot(PI, 0.0), Encoding::Single);
        let frame = solve_phase_frame(&raw, &Unitary2::pauli_x(), 1e-12).unwrap();
        assert!(frame.apply(&raw).approx_eq(&Unitary2::pauli_x(), 1e-12));
        for kind in [Encoding::Single, Encoding::Superatom] {
            let raw = raw_product(&Composite::GlobalBitflip.sequence(Species::A, kind), kind);
            let frame = solve_phase_frame(&raw, &Unitary2::pauli_x(), 1e-12).unwrap();
            assert!(frame.apply(&raw).approx_eq(&Unitary2::pauli_x(), 1e-12));
        }
    }

    #[test]
    fn phase_frame_rejects_unreachable_target() {
        let raw = Unitary2::hadamard();
        assert!(solve_phase_frame(&raw, &Unitary2::pauli_x(), 1e-12).is_none());
    }

    #[test]
    fn non_four_superatom_rejected() {
        assert!(check_composite_size(4).is_ok());
        assert_eq!(
            check_composite_size(3),
            Err(Error::UnsupportedSuperatomSize(3))
        );
    }
}
