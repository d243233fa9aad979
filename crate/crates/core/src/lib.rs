// Copyright 2026 The qpair Authors
// SPDX-License-Identifier: Apache-2.0

//! Pulse-level simulation and compilation for globally driven dual-species
//! neutral-atom arrays built from Q-Pairs.
//!
//! A Q-Pair is a blockaded pair made of a species-A data qubit (a single atom
//! or an M-atom superatom) and a species-B auxiliary atom. All coherent
//! control is global and species selective; locality comes from superatom
//! collective enhancement and from moving atoms in and out of the
//! interaction zone.
//!
//! Module map:
//!
//! - [`pulse`]: exact SU(2) rotations and the composite pulse sequences.
//! - [`blockade`]: PXP-constrained state engine over registered atoms.
//! - [`wiregates`]: translation operators, displacements and wire-gates.
//! - [`compiler`]: logical circuits to schedules, validation, resources.
//! - [`noise`]: amplitude damping, erasure and Haar-averaged fidelities.
//! - [`oracle`]: dense gate-level reference simulator.
//! - [`checks`]: end-to-end numerical self-checks.

pub mod blockade;
pub mod checks;
pub mod compiler;
pub mod error;
pub mod noise;
pub mod oracle;
pub mod pulse;
pub mod wiregates;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
