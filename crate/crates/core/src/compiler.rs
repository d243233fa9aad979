// Copyright 2026 The qpair Authors
// SPDX-License-Identifier: Apache-2.0

//! Logical circuits to global pulse and atom-move schedules.
//!
//! Qubits sit on a line of spatial slots. Two-qubit gates need neighbouring
//! slots and are routed with SWAP wire-gates. Every logical gate lowers to
//! layers of one temporal mode each; a layer applies a superatom-selective
//! gate, a CZ or a SWAP and ends with a translation. A data qubit is a
//! superatom in a mode exactly when a layer of that mode targets it, so
//! promotion and demotion happen in the preceding and following translation.
//!
//! Schedule trace format, one event per line (see [`TimedEvent`]):
//!
//! ```text
//! # qpair schedule qubits=<N>
//! mode=<k> <event> <fields>
//! ```
//!
//! Composite pulses appear in firing order, so the first listed pulse is the
//! rightmost operator.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::path::Path;

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::blockade::{AtomKind, Method};
use crate::error::{Error, Result};
use crate::noise::NoiseParams;
use crate::oracle::Gate;
use crate::pulse::{Encoding, Species};
use crate::wiregates::{
    Direction, Event, Executor, Geometry, Processor, ProcessorConfig, SingleGate, TimedEvent,
};

/// Largest register the validator simulates.
pub const MAX_VALIDATION_ATOMS: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct LogicalCircuit {
    qubit_count: usize,
    gates: Vec<Gate>,
}

impl LogicalCircuit {
    pub fn new(qubit_count: usize, gates: Vec<Gate>) -> Result<Self> {
        for g in &gates {
            let qs = g.qubits();
            for &q in &qs {
                if q >= qubit_count {
                    return Err(Error::QubitRange {
                        index: q,
                        count: qubit_count,
                    });
                }
            }
            if qs.len() == 2 && qs[0] == qs[1] {
                return Err(Error::InvalidCircuit(format!(
                    "`{g}` targets qubit {} twice",
                    qs[0]
                )));
            }
        }
        Ok(LogicalCircuit { qubit_count, gates })
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Parses one gate per line: `H q`, `X q`, `P q <phi>`, `CZ a b`,
    /// `CX a b`, `CP a b q=<k>` (phase `2 pi / 2^k`) or `CP a b <phi>`,
    /// `SWAP a b`. Angles may be written bare or as `phi=<x>`. An optional
    /// `qubits N` line fixes the register size; otherwise it is one more
    /// than the largest index. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut declared = None;
        let mut gates = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: n + 1,
                message,
            };
            let tokens: Vec<&str> = line.split_whitespace().collect();
            let qubit = |k: usize| -> Result<usize> {
                let t = tokens
                    .get(k)
                    .ok_or_else(|| err(format!("`{line}`: missing qubit index")))?;
                t.parse()
                    .map_err(|_| err(format!("`{line}`: bad qubit index {t:?}")))
            };
            let angle = |k: usize| -> Result<f64> {
                let t = tokens
                    .get(k)
                    .ok_or_else(|| err(format!("`{line}`: missing angle")))?;
                if let Some(q) = t.strip_prefix("q=") {
                    let q: u32 = q
                        .parse()
                        .map_err(|_| err(format!("`{line}`: bad q {q:?}")))?;
                    return Ok(Gate::qft_phase(q));
                }
                let v = t.strip_prefix("phi=").unwrap_or(t);
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| err(format!("`{line}`: bad angle {v:?}")))
            };
            let arity = |k: usize| -> Result<()> {
                if tokens.len() == k {
                    Ok(())
                } else {
                    Err(err(format!("`{line}`: expected {} arguments", k - 1)))
                }
            };
            let gate = match tokens[0].to_ascii_uppercase().as_str() {
                "QUBITS" => {
                    arity(2)?;
                    declared = Some(qubit(1)?);
                    continue;
                }
                "H" => {
                    arity(2)?;
                    Gate::H(qubit(1)?)
                }
                "X" => {
                    arity(2)?;
                    Gate::X(qubit(1)?)
                }
                "P" => {
                    arity(3)?;
                    Gate::P(qubit(1)?, angle(2)?)
                }
                "CZ" => {
                    arity(3)?;
                    Gate::Cz(qubit(1)?, qubit(2)?)
                }
                "CX" | "CNOT" => {
                    arity(3)?;
                    Gate::Cx(qubit(1)?, qubit(2)?)
                }
                "CP" => {
                    arity(4)?;
                    Gate::Cp(qubit(1)?, qubit(2)?, angle(3)?)
                }
                "SWAP" => {
                    arity(3)?;
                    Gate::Swap(qubit(1)?, qubit(2)?)
                }
                other => return Err(err(format!("unknown gate {other:?}"))),
            };
            let qs = gate.qubits();
            if qs.len() == 2 && qs[0] == qs[1] {
                return Err(err(format!("`{line}` targets qubit {} twice", qs[0])));
            }
            if let Some(count) = declared {
                if let Some(&q) = qs.iter().find(|&&q| q >= count) {
                    return Err(err(format!("qubit {q} out of range for {count} qubits")));
                }
            }
            gates.push(gate);
        }
        let inferred = gates
            .iter()
            .flat_map(|g| g.qubits())
            .max()
            .map_or(0, |m| m + 1);
        LogicalCircuit::new(declared.unwrap_or(inferred), gates)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Initial assignment of logical qubits to slots.
#[derive(Clone, Debug, Default, PartialEq)]
pub enum LayoutPolicy {
    /// Qubit `q` starts in slot `q`.
    #[default]
    Identity,
    /// Qubit `q` starts in slot `placement[q]`.
    Custom(Vec<usize>),
}

/// One temporal mode of work.
#[derive(Clone, Debug, PartialEq)]
pub enum Layer {
    /// Gate on the superatoms, which are exactly the listed slots.
    Single {
        gate: SingleGate,
        targets: Vec<usize>,
    },
    Cz(usize, usize),
    /// Routing exchange: logical labels travel with the atoms.
    Swap(usize, usize),
    /// Logical SWAP gate: the atoms are exchanged, the labels stay.
    SwapGate(usize, usize),
}

/// A labelled group of layers, one logical operation.
#[derive(Clone, Debug, PartialEq)]
pub struct PlannedStep {
    pub label: String,
    pub layers: Vec<Layer>,
}

fn single(gate: SingleGate, targets: &[usize]) -> Layer {
    Layer::Single {
        gate,
        targets: targets.to_vec(),
    }
}

fn cx_layers(control: usize, target: usize) -> Vec<Layer> {
    vec![
        single(SingleGate::Hadamard, &[target]),
        Layer::Cz(control, target),
        single(SingleGate::Hadamard, &[target]),
    ]
}

fn cp_layers(control: usize, target: usize, phi: f64) -> Vec<Layer> {
    let mut layers = cx_layers(control, target);
    layers.push(single(SingleGate::Phase(-phi / 2.0), &[target]));
    layers.extend(cx_layers(control, target));
    layers.push(single(SingleGate::Phase(phi / 2.0), &[control, target]));
    layers
}

/// Recorded schedule: timed events plus the register size.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub qubit_count: usize,
    pub events: Vec<TimedEvent>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepInfo {
    pub index: usize,
    pub label: String,
    pub first_mode: u32,
}

impl Schedule {
    /// Temporal modes spanned, including the measurement mode.
    pub fn temporal_modes(&self) -> u32 {
        self.events.iter().map(|e| e.mode + 1).max().unwrap_or(0)
    }

    /// Number of translations (wire-gate layers).
    pub fn layer_count(&self) -> u32 {
        self.temporal_modes().saturating_sub(1)
    }

    pub fn steps(&self) -> Vec<StepInfo> {
        self.events
            .iter()
            .filter_map(|e| match &e.event {
                Event::Step { index, label } => Some(StepInfo {
                    index: *index,
                    label: label.clone(),
                    first_mode: e.mode,
                }),
                _ => None,
            })
            .collect()
    }

    /// Data encoding per `(mode, slot)`.
    pub fn superatom_plan(&self) -> BTreeMap<(u32, usize), Encoding> {
        let mut plan = BTreeMap::new();
        for e in &self.events {
            if let Event::Kinds(kinds) = &e.event {
                for (slot, k) in kinds.iter().enumerate() {
                    plan.insert((e.mode, slot), *k);
                }
            }
        }
        plan
    }

    pub fn to_trace(&self) -> String {
        let mut out = format!("# qpair schedule qubits={}\n", self.qubit_count);
        for e in &self.events {
            out.push_str(&e.to_string());
            out.push('\n');
        }
        out
    }

    pub fn parse_trace(text: &str) -> Result<Self> {
        let mut qubit_count = None;
        let mut events = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(q) = comment
                    .split_whitespace()
                    .find_map(|t| t.strip_prefix("qubits="))
                {
                    qubit_count = Some(q.parse().map_err(|_| Error::Parse {
                        line: n + 1,
                        message: format!("bad qubit count {q:?}"),
                    })?);
                }
                continue;
            }
            events.push(line.parse::<TimedEvent>().map_err(|message| Error::Parse {
                line: n + 1,
                message,
            })?);
        }
        let qubit_count = qubit_count.ok_or(Error::Parse {
            line: 1,
            message: "missing `# qpair schedule qubits=N` header".into(),
        })?;
        Ok(Schedule {
            qubit_count,
            events,
        })
    }
}

/// Lays out `steps` on slots and records the events on a dry processor.
///
/// `placement[q]` is the starting slot of logical qubit `q`.
pub fn build_schedule(
    qubit_count: usize,
    placement: &[usize],
    steps: &[PlannedStep],
    geometry: &Geometry,
) -> Result<Schedule> {
    if placement.len() != qubit_count {
        return Err(Error::InvalidCircuit(format!(
            "placement lists {} qubits, circuit has {qubit_count}",
            placement.len()
        )));
    }
    let mut seen = vec![false; qubit_count];
    for &s in placement {
        if s >= qubit_count || std::mem::replace(&mut seen[s], true) {
            return Err(Error::InvalidCircuit(format!(
                "placement {placement:?} is not a permutation of the slots"
            )));
        }
    }
    if qubit_count == 0 {
        return Ok(Schedule {
            qubit_count,
            events: Vec::new(),
        });
    }
    let layers: Vec<&Layer> = steps.iter().flat_map(|s| &s.layers).collect();
    let kinds_at = |k: usize| -> Vec<Encoding> {
        let mut kinds = vec![Encoding::Single; qubit_count];
        if let Some(Layer::Single { targets, .. }) = layers.get(k) {
            for &t in targets {
                if t < qubit_count {
                    kinds[t] = Encoding::Superatom;
                }
            }
        }
        kinds
    };
    let config = ProcessorConfig {
        geometry: geometry.clone(),
        simulate: false,
        ..ProcessorConfig::default()
    };
    let mut proc = Processor::new(&kinds_at(0), config)?;
    proc.prepare(placement, None)?;
    let mut slot_of = placement.to_vec();
    let mut k = 0;
    for (index, step) in steps.iter().enumerate() {
        proc.step(index, &step.label)?;
        for layer in &step.layers {
            k += 1;
            let next = kinds_at(k);
            match layer {
                Layer::Single { gate, .. } => proc.single_qubit_layer(*gate, &next)?,
                Layer::Cz(a, b) => proc.cz_layer(*a, *b, &next)?,
                Layer::Swap(a, b) => {
                    for s in slot_of.iter_mut() {
                        if *s == *a {
                            *s = *b;
                        } else if *s == *b {
                            *s = *a;
                        }
                    }
                    proc.swap_layer(*a, *b, &next)?
                }
                Layer::SwapGate(a, b) => proc.swap_layer(*a, *b, &next)?,
            }
        }
    }
    proc.step(steps.len(), "measure")?;
    proc.measure(&slot_of)?;
    Ok(Schedule {
        qubit_count,
        events: proc.into_trace(),
    })
}

/// Lowers a circuit to steps with nearest-neighbour SWAP routing.
pub fn plan_circuit(
    circuit: &LogicalCircuit,
    policy: &LayoutPolicy,
) -> Result<(Vec<usize>, Vec<PlannedStep>)> {
    let n = circuit.qubit_count();
    let placement = match policy {
        LayoutPolicy::Identity => (0..n).collect(),
        LayoutPolicy::Custom(p) => p.clone(),
    };
    let mut slot_of = placement.clone();
    let mut steps = Vec::new();
    let swap = |slot_of: &mut Vec<usize>, a: usize, b: usize| {
        for s in slot_of.iter_mut() {
            if *s == a {
                *s = b;
            } else if *s == b {
                *s = a;
            }
        }
    };
    for gate in circuit.gates() {
        if let (Some(&a), Some(&b)) = (gate.qubits().first(), gate.qubits().get(1)) {
            if !matches!(gate, Gate::Swap(..)) {
                while slot_of[a].abs_diff(slot_of[b]) > 1 {
                    let from = slot_of[a];
                    let to = if slot_of[b] > from {
                        from + 1
                    } else {
                        from - 1
                    };
                    steps.push(PlannedStep {
                        label: format!("SWAP s{} s{} (route)", from + 1, to + 1),
                        layers: vec![Layer::Swap(from, to)],
                    });
                    swap(&mut slot_of, from, to);
                }
            }
        }
        let label = |extra: String| format!("{gate} @ {extra}");
        let step = match *gate {
            Gate::H(q) => PlannedStep {
                label: label(format!("s{}", slot_of[q] + 1)),
                layers: vec![single(SingleGate::Hadamard, &[slot_of[q]])],
            },
            Gate::X(q) => PlannedStep {
                label: label(format!("s{}", slot_of[q] + 1)),
                layers: vec![single(SingleGate::Bitflip, &[slot_of[q]])],
            },
            Gate::P(q, phi) => PlannedStep {
                label: label(format!("s{}", slot_of[q] + 1)),
                layers: vec![single(SingleGate::Phase(phi), &[slot_of[q]])],
            },
            Gate::Cz(a, b) => PlannedStep {
                label: label(format!("s{} s{}", slot_of[a] + 1, slot_of[b] + 1)),
                layers: vec![Layer::Cz(slot_of[a], slot_of[b])],
            },
            Gate::Cx(c, t) => PlannedStep {
                label: label(format!("s{} s{}", slot_of[c] + 1, slot_of[t] + 1)),
                layers: cx_layers(slot_of[c], slot_of[t]),
            },
            Gate::Cp(c, t, phi) => PlannedStep {
                label: label(format!("s{} s{}", slot_of[c] + 1, slot_of[t] + 1)),
                layers: cp_layers(slot_of[c], slot_of[t], phi),
            },
            Gate::Swap(a, b) => PlannedStep {
                label: label(format!("s{} s{}", slot_of[a] + 1, slot_of[b] + 1)),
                layers: vec![Layer::SwapGate(slot_of[a], slot_of[b])],
            },
        };
        steps.push(step);
    }
    Ok((placement, steps))
}

pub fn compile(circuit: &LogicalCircuit, policy: &LayoutPolicy) -> Result<Schedule> {
    compile_with(circuit, policy, &Geometry::default())
}

pub fn compile_with(
    circuit: &LogicalCircuit,
    policy: &LayoutPolicy,
    geometry: &Geometry,
) -> Result<Schedule> {
    let (placement, steps) = plan_circuit(circuit, policy)?;
    build_schedule(circuit.qubit_count(), &placement, &steps, geometry)
}

/// Hand-laid three-qubit QFT on slots s1..s3 with qubit `q` in slot `q`.
///
/// H on s3; CP(pi/2) on s2,s3; SWAP s1,s2; CP(pi/4) on s2,s3; H on s1;
/// CP(pi/2) on s1,s2; H on s2; measure. No final bit-reversal SWAP, so the
/// output is the DFT with qubit order reversed.
pub fn qft3_reference_schedule() -> Schedule {
    let steps = vec![
        PlannedStep {
            label: "H q2 @ s3".into(),
            layers: vec![single(SingleGate::Hadamard, &[2])],
        },
        PlannedStep {
            label: "CP q1 q2 q=2 @ s2 s3".into(),
            layers: cp_layers(1, 2, FRAC_PI_2),
        },
        PlannedStep {
            label: "SWAP s1 s2".into(),
            layers: vec![Layer::Swap(0, 1)],
        },
        PlannedStep {
            label: "CP q0 q2 q=3 @ s2 s3".into(),
            layers: cp_layers(1, 2, FRAC_PI_4),
        },
        PlannedStep {
            label: "H q1 @ s1".into(),
            layers: vec![single(SingleGate::Hadamard, &[0])],
        },
        PlannedStep {
            label: "CP q0 q1 q=2 @ s1 s2".into(),
            layers: cp_layers(1, 0, FRAC_PI_2),
        },
        PlannedStep {
            label: "H q0 @ s2".into(),
            layers: vec![single(SingleGate::Hadamard, &[1])],
        },
    ];
    build_schedule(3, &[0, 1, 2], &steps, &Geometry::default())
        .expect("reference schedule is well formed")
}

/// Replays `schedule` on `input` (bit `q` for logical qubit `q`) and returns
/// the logical output and the population outside the data subspace.
pub fn simulate_schedule(
    schedule: &Schedule,
    input: &DVector<C64>,
    method: Method,
) -> Result<(DVector<C64>, f64)> {
    if input.len() != 1 << schedule.qubit_count {
        return Err(Error::DimensionMismatch {
            state: input.len(),
            atoms: schedule.qubit_count,
        });
    }
    if schedule.qubit_count == 0 {
        return Ok((input.clone(), 0.0));
    }
    let mut exec = Executor::simulating(Geometry::default().radii, method, Some(input.clone()));
    for (k, e) in schedule.events.iter().enumerate() {
        exec.execute(&e.event)
            .map_err(|err| Error::Replay(format!("event {k} at mode {}: {err}", e.mode)))?;
    }
    exec.output()
        .cloned()
        .ok_or_else(|| Error::Replay("schedule has no measure event".into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DiagnosticKind {
    Ordering,
    Plan,
    Register,
    Adjacency,
    Disentanglement,
    Leakage,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub mode: u32,
    pub kind: DiagnosticKind,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "mode={} {:?}: {}", self.mode, self.kind, self.message)
    }
}

/// Checks a schedule and lists every violation found; empty means valid.
///
/// Structural checks cover mode ordering, one encoding plan per mode and the
/// mediator blockade pattern (two data atoms, no auxiliary atom). The
/// schedule is then simulated on a seeded random input to check that every
/// removed atom is in `g` and that nothing leaks out of the data qubits; the
/// simulation is skipped for registers above [`MAX_VALIDATION_ATOMS`].
pub fn validate_schedule(schedule: &Schedule) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let diag = |out: &mut Vec<Diagnostic>, mode, kind, message: String| {
        out.push(Diagnostic {
            mode,
            kind,
            message,
        })
    };
    let mut last = 0;
    let mut plans: BTreeMap<u32, Vec<Encoding>> = BTreeMap::new();
    for e in &schedule.events {
        if e.mode < last {
            diag(
                &mut out,
                e.mode,
                DiagnosticKind::Ordering,
                format!("mode decreases from {last} to {}", e.mode),
            );
        }
        last = last.max(e.mode);
        if let Event::Kinds(k) = &e.event {
            if let Some(prev) = plans.insert(e.mode, k.clone()) {
                if &prev != k {
                    diag(
                        &mut out,
                        e.mode,
                        DiagnosticKind::Plan,
                        "conflicting data encodings within one mode".into(),
                    );
                }
            }
        }
    }
    if !out.is_empty() || schedule.qubit_count == 0 {
        return out;
    }
    let mut exec = Executor::dry(Geometry::default().radii);
    let mut max_atoms = 0;
    for e in &schedule.events {
        if let Err(err) = exec.execute(&e.event) {
            diag(&mut out, e.mode, DiagnosticKind::Register, err.to_string());
            return out;
        }
        max_atoms = max_atoms.max(exec.atoms().len());
        if let Event::Displace(d) = &e.event {
            if d.direction == Direction::In
                && d.species == Species::B
                && matches!(d.kind, AtomKind::Superatom(_))
            {
                let graph = exec.graph();
                let neighbours: Vec<_> = exec
                    .atoms()
                    .iter()
                    .filter(|a| graph.contains(&d.atom, &a.id))
                    .collect();
                let data = neighbours
                    .iter()
                    .filter(|a| a.species == Species::A)
                    .count();
                let aux = neighbours
                    .iter()
                    .filter(|a| a.species == Species::B)
                    .count();
                if data != 2 || aux != 0 {
                    diag(
                        &mut out,
                        e.mode,
                        DiagnosticKind::Adjacency,
                        format!("mediator {} blockades {data} data and {aux} auxiliary atoms, needs 2 adjacent data atoms and none else", d.atom),
                    );
                }
            }
        }
    }
    if !out.is_empty() || max_atoms > MAX_VALIDATION_ATOMS {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let dim = 1usize << schedule.qubit_count;
    let mut input = DVector::from_fn(dim, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    input /= C64::new(input.norm(), 0.0);
    let mut exec = Executor::simulating(
        Geometry::default().radii,
        Method::ExactExponential,
        Some(input),
    );
    for e in &schedule.events {
        if let Err(err) = exec.execute(&e.event) {
            let kind = match err {
                Error::ResidualRydberg { .. } => DiagnosticKind::Disentanglement,
                _ => DiagnosticKind::Register,
            };
            diag(&mut out, e.mode, kind, err.to_string());
            return out;
        }
    }
    if let Some((_, leakage)) = exec.output() {
        if *leakage > 1e-10 {
            diag(
                &mut out,
                last,
                DiagnosticKind::Leakage,
                format!("population {leakage:.3e} outside the data qubits at readout"),
            );
        }
    }
    out
}

/// Resource and fidelity estimate of a schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct ResourceReport {
    /// Largest number of physical atoms trapped at once.
    pub atom_count: u32,
    pub temporal_modes: u32,
    pub translations: u32,
    pub steps: usize,
    pub pulses: usize,
    /// Groups of displacements executed in parallel.
    pub move_steps: usize,
    /// Seconds.
    pub total_time: f64,
    pub p: f64,
    pub bit_flip_probability: f64,
    pub translation_fidelity: f64,
    /// Translation fidelity raised to the number of translations.
    pub end_to_end_fidelity: f64,
}

/// Counts atoms, pulses and move steps. Each pulse takes `t_g`; consecutive
/// displacements with no pulse in between form one parallel move step of
/// `move_time`; phase frames take no time.
pub fn estimate_resources(schedule: &Schedule, params: &NoiseParams) -> Result<ResourceReport> {
    params.validate()?;
    let mut exec = Executor::dry(Geometry::default().radii);
    let (mut atoms, mut pulses, mut moves) = (0u32, 0usize, 0usize);
    let mut in_move = false;
    for e in &schedule.events {
        exec.execute(&e.event)
            .map_err(|err| Error::Replay(format!("mode {}: {err}", e.mode)))?;
        atoms = atoms.max(exec.trapped_atoms());
        match &e.event {
            Event::Pulse(_) => {
                pulses += 1;
                in_move = false;
            }
            Event::Displace(_) | Event::Relabel { .. } if !in_move => {
                moves += 1;
                in_move = true;
            }
            _ => {}
        }
    }
    let total_time = pulses as f64 * params.t_g + moves as f64 * params.move_time;
    let translations = schedule.layer_count();
    let f_t = params.translation_fidelity();
    Ok(ResourceReport {
        atom_count: atoms,
        temporal_modes: schedule.temporal_modes(),
        translations,
        steps: schedule.steps().len(),
        pulses,
        move_steps: moves,
        total_time,
        p: params.p,
        bit_flip_probability: atoms as f64 * params.gamma * total_time,
        translation_fidelity: f_t,
        end_to_end_fidelity: f_t.powi(translations as i32),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{bit_reverse, circuit_unitary, qft_matrix};

    #[test]
    fn parse_examples() {
        let c = LogicalCircuit::parse(
            "# qft piece\nH 0\nCP 1 2 q=2\nSWAP 0 1\nP 0 phi=0.5\nCX 0 1 # trailing\n",
        )
        .unwrap();
        assert_eq!(c.qubit_count(), 3);
        assert_eq!(c.gates()[1], Gate::Cp(1, 2, FRAC_PI_2));
        assert_eq!(c.gates()[3], Gate::P(0, 0.5));
        let err = LogicalCircuit::parse("H 0\nX 1\nFOO 2\n").unwrap_err();
        assert!(err.to_string().starts_with("parse error: line 3"), "{err}");
        assert!(matches!(
            LogicalCircuit::parse("CZ 1 1"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            LogicalCircuit::parse("qubits 2\nH 2"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert_eq!(LogicalCircuit::parse("").unwrap().qubit_count(), 0);
    }

    #[test]
    fn mode_counts() {
        let h = compile(
            &LogicalCircuit::parse("H 0").unwrap(),
            &LayoutPolicy::Identity,
        )
        .unwrap();
        assert_eq!(h.layer_count(), 1);
        let cx = compile(
            &LogicalCircuit::parse("CX 0 1").unwrap(),
            &LayoutPolicy::Identity,
        )
        .unwrap();
        assert_eq!(cx.layer_count(), 3);
        let cp = compile(
            &LogicalCircuit::parse("CP 0 1 q=2").unwrap(),
            &LayoutPolicy::Identity,
        )
        .unwrap();
        assert_eq!(cp.layer_count(), 8);
        let q = qft3_reference_schedule();
        assert_eq!(q.steps().len(), 8);
        assert_eq!(q.steps()[7].label, "measure");
    }

    #[test]
    fn plan_marks_gate_targets_as_superatoms() {
        let s = compile(
            &LogicalCircuit::parse("H 1\nCX 0 1").unwrap(),
            &LayoutPolicy::Identity,
        )
        .unwrap();
        let plan = s.superatom_plan();
        assert_eq!(plan[&(0, 1)], Encoding::Superatom);
        assert_eq!(plan[&(0, 0)], Encoding::Single);
        assert_eq!(plan[&(2, 1)], Encoding::Single); // CZ layer
        assert_eq!(plan[&(4, 1)], Encoding::Single); // after the last layer
    }

    #[test]
    fn qft3_reference_matches_dft() {
        let s = qft3_reference_schedule();
        assert!(validate_schedule(&s).is_empty());
        let q = qft_matrix(3).unwrap();
        for x in 0..8 {
            let mut input = DVector::zeros(8);
            input[x] = C64::new(1.0, 0.0);
            let (out, leak) = simulate_schedule(&s, &input, Method::ExactExponential).unwrap();
            assert!(leak < 1e-10);
            let expect = DVector::from_fn(8, |j, _| q[(bit_reverse(j, 3), x)]);
            let f = expect.dotc(&out).norm_sqr();
            assert!((1.0 - f) < 1e-10, "input {x}: fidelity {f}");
        }
    }

    #[test]
    fn routed_circuit_matches_oracle() {
        let c = LogicalCircuit::parse("H 0\nCX 0 2\nCP 2 0 q=3\nSWAP 0 1\nX 1").unwrap();
        let s = compile(&c, &LayoutPolicy::Identity).unwrap();
        let u = circuit_unitary(3, c.gates()).unwrap();
        let mut phase = None;
        for x in 0..8 {
            let mut input = DVector::zeros(8);
            input[x] = C64::new(1.0, 0.0);
            let (out, _) = simulate_schedule(&s, &input, Method::DerivedUnitary).unwrap();
            let expect = u.column(x).into_owned();
            let overlap = expect.dotc(&out);
            assert!((overlap.norm() - 1.0).abs() < 1e-9);
            let ph = *phase.get_or_insert(overlap);
            assert!((overlap - ph).norm() < 1e-9, "relative phase on input {x}");
        }
    }

    #[test]
    fn trace_is_stable_and_round_trips() {
        let a = qft3_reference_schedule();
        let b = qft3_reference_schedule();
        assert_eq!(a.to_trace(), b.to_trace());
        assert_eq!(Schedule::parse_trace(&a.to_trace()).unwrap(), a);
        assert!(Schedule::parse_trace("mode=0 pulse").is_err());
    }

    #[test]
    fn estimator_presets_and_empty_circuit() {
        let empty = compile(&LogicalCircuit::parse("").unwrap(), &LayoutPolicy::Identity).unwrap();
        let r = estimate_resources(&empty, &NoiseParams::default()).unwrap();
        assert_eq!((r.atom_count, r.total_time), (0, 0.0));
        let r = estimate_resources(&qft3_reference_schedule(), &NoiseParams::default()).unwrap();
        assert!(r.atom_count >= 6);
        assert!(
            (r.bit_flip_probability - r.atom_count as f64 * r.total_time / 60e-6).abs() < 1e-12
        );
    }
}
