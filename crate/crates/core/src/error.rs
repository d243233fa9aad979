// Copyright 2026 The qpair Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised across the simulator, wire-gate builder and compiler.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid pulse: {0}")]
    InvalidPulse(String),
    #[error("composite sequence must contain at least one pulse")]
    EmptySequence,
    #[error("composite sequences are defined for superatoms of size 4, got {0}")]
    UnsupportedSuperatomSize(u32),
    #[error("duplicate atom id {0}")]
    DuplicateAtom(String),
    #[error("atoms {0} and {1} occupy the same position")]
    CoincidentAtoms(String, String),
    #[error("unknown atom id {0}")]
    UnknownAtom(String),
    #[error("invalid atom: {0}")]
    InvalidAtom(String),
    #[error("invalid blockade radius for species pair {0}")]
    InvalidRadius(String),
    #[error("state dimension {state} does not match register of {atoms} atoms")]
    DimensionMismatch { state: usize, atoms: usize },
    #[error("{0} driven atoms exceed the exact-evolution limit of 8")]
    TooManyDrivenAtoms(usize),
    #[error("driven atoms {0} and {1} are mutually blockaded; use exact evolution")]
    AdjacentDrivenAtoms(String, String),
    #[error(
        "blockade protocol violation: atom {atom} removed with Rydberg population {population:.3e}"
    )]
    ResidualRydberg { atom: String, population: f64 },
    #[error("unsupported superatom size {0} (expected 1..=6)")]
    EnsembleSize(u32),
    #[error("kind mismatch: {0}")]
    KindMismatch(String),
    #[error("auxiliary qubit {0} is not in its ground state")]
    AuxNotGround(String),
    #[error("mediator geometry violation: {0}")]
    MediatorGeometry(String),
    #[error("spatial slots must differ, got {0} twice")]
    SameSlot(usize),
    #[error("unknown spatial slot {0}")]
    UnknownSlot(usize),
    #[error("probability {0} outside [0, 1)")]
    Probability(f64),
    #[error("decay over four gate times requires 4p < 1, got p = {0}")]
    DecayBudget(f64),
    #[error("total erasure: no population survives the projection")]
    TotalErasure,
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
    #[error("parse error: line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("qubit index {index} out of range for {count} qubits")]
    QubitRange { index: usize, count: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("schedule replay failed: {0}")]
    Replay(String),
}

pub type Result<T> = std::result::Result<T, Error>;
