// Copyright 2026 The qpair Authors
// SPDX-License-Identifier: Apache-2.0

//! Temporal translations, displacements and wire-gates on a line of Q-Pairs.
//!
//! A [`Processor`] owns a register of Q-Pairs, one per spatial slot, and
//! builds protocol operations out of global pulses and atom moves. Every
//! primitive is emitted as an [`Event`] stamped with the current temporal
//! mode and executed at once by an [`Executor`], which optionally carries a
//! quantum state. The same executor replays recorded schedules.
//!
//! Slot `l` (zero-based) holds its data atom at `(l * pitch, 0)` and its
//! auxiliary atom at `(l * pitch, -aux_offset)`. A CZ mediator sits above the
//! midpoint of two neighbouring data atoms, in range of both data atoms and
//! out of range of every auxiliary atom.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use num_complex::Complex64 as C64;

use crate::blockade::{
    apply_global_pulse, apply_phase_frame, build_blockade_graph, AtomId, AtomKind, AtomSpec,
    BlockadeGraph, BlockadeRadii, GlobalPulseEvent, InternalFlag, Method, PhaseFrameEvent,
    QuantumState, StateData, DISENTANGLE_TOL,
};
use crate::error::{Error, Result};
use crate::pulse::{
    check_composite_size, raw_product, rotation, solve_phase_frame, Composite, Encoding,
    PhaseFrame, PulseSpec, Species, Unitary2, COMPOSITE_SUPERATOM_SIZE, IDENTITY_TOL,
};

/// Spatial layout of the Q-Pair line, micrometres.
#[derive(Clone, Debug, PartialEq)]
pub struct Geometry {
    pub pitch: f64,
    pub aux_offset: f64,
    pub mediator_offset: f64,
    pub radii: BlockadeRadii,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            pitch: 8.0,
            aux_offset: 3.0,
            mediator_offset: 1.0,
            radii: BlockadeRadii::default(),
        }
    }
}

impl Geometry {
    pub fn data_position(&self, slot: usize) -> [f64; 2] {
        [slot as f64 * self.pitch, 0.0]
    }

    pub fn aux_position(&self, slot: usize) -> [f64; 2] {
        [slot as f64 * self.pitch, -self.aux_offset]
    }

    pub fn mediator_position(&self, a: usize, b: usize) -> [f64; 2] {
        [(a + b) as f64 * self.pitch / 2.0, self.mediator_offset]
    }
}

/// Temporal index `t` and one-based spatial index `s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HybridMode {
    pub t: u32,
    pub s: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QPairHandle {
    pub mode: HybridMode,
    pub data_atom: AtomId,
    pub aux_atom: AtomId,
    pub kind: Encoding,
}

/// Which of the four translations: source and target data encodings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TranslationKind(u8);

impl TranslationKind {
    pub fn new(nu: u8) -> Result<Self> {
        if (1..=4).contains(&nu) {
            Ok(TranslationKind(nu))
        } else {
            Err(Error::KindMismatch(format!(
                "translation index {nu} outside 1..=4"
            )))
        }
    }

    pub fn between(source: Encoding, target: Encoding) -> Self {
        match (source, target) {
            (Encoding::Single, Encoding::Single) => TranslationKind(1),
            (Encoding::Single, Encoding::Superatom) => TranslationKind(2),
            (Encoding::Superatom, Encoding::Single) => TranslationKind(3),
            (Encoding::Superatom, Encoding::Superatom) => TranslationKind(4),
        }
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn source(self) -> Encoding {
        if self.0 <= 2 {
            Encoding::Single
        } else {
            Encoding::Superatom
        }
    }

    pub fn target(self) -> Encoding {
        if self.0 % 2 == 1 {
            Encoding::Single
        } else {
            Encoding::Superatom
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    In,
    Out,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Destination {
    Reservoir,
    Zone([f64; 2]),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DisplacementEvent {
    pub direction: Direction,
    pub species: Species,
    pub kind: AtomKind,
    pub atom: AtomId,
    pub destination: Destination,
}

/// One schedule primitive.
#[derive(Clone, Debug, PartialEq)]
pub enum Event {
    Pulse(GlobalPulseEvent),
    /// Virtual phase update of the `r` level; takes no time.
    Frame(PhaseFrameEvent),
    Displace(DisplacementEvent),
    Park(AtomId),
    Unpark(AtomId),
    /// Exchange of two slots by moving their atoms to the listed positions.
    Relabel {
        a: usize,
        b: usize,
        moves: Vec<(AtomId, [f64; 2])>,
    },
    /// Data encodings per slot for the current mode.
    Kinds(Vec<Encoding>),
    /// Marks the start of a logical step.
    Step {
        index: usize,
        label: String,
    },
    /// Loads the input state; data atoms listed by logical qubit.
    Prepare(Vec<AtomId>),
    /// Terminal readout; data atoms listed by logical qubit.
    Measure(Vec<AtomId>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimedEvent {
    pub mode: u32,
    pub event: Event,
}

/// Single-qubit operation applied to every superatom data qubit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SingleGate {
    Identity,
    Bitflip,
    Hadamard,
    Phase(f64),
}

impl SingleGate {
    /// Ideal action on a superatom.
    pub fn unitary(self) -> Unitary2 {
        match self {
            SingleGate::Identity => Unitary2::identity(),
            SingleGate::Bitflip => Unitary2::pauli_x(),
            SingleGate::Hadamard => Unitary2::hadamard(),
            SingleGate::Phase(phi) => crate::pulse::phase_gate(phi),
        }
    }
}

/// Replays events against a register and an optional quantum state.
#[derive(Clone, Debug)]
pub struct Executor {
    atoms: Vec<AtomSpec>,
    radii: BlockadeRadii,
    graph: BlockadeGraph,
    state: Option<QuantumState>,
    method: Method,
    input: Option<DVector<C64>>,
    output: Option<(DVector<C64>, f64)>,
}

impl Executor {
    /// Bookkeeping only: register updates without a quantum state.
    pub fn dry(radii: BlockadeRadii) -> Self {
        Executor {
            atoms: Vec::new(),
            radii,
            graph: BlockadeGraph::default(),
            state: None,
            method: Method::ExactExponential,
            input: None,
            output: None,
        }
    }

    /// Full simulation. `input` is loaded at the `Prepare` event.
    pub fn simulating(radii: BlockadeRadii, method: Method, input: Option<DVector<C64>>) -> Self {
        Executor {
            state: Some(QuantumState::ground(&[])),
            method,
            input,
            ..Executor::dry(radii)
        }
    }

    pub fn atoms(&self) -> &[AtomSpec] {
        &self.atoms
    }

    pub fn graph(&self) -> &BlockadeGraph {
        &self.graph
    }

    pub fn state(&self) -> Option<&QuantumState> {
        self.state.as_ref()
    }

    /// Logical output captured at the `Measure` event, with leakage.
    pub fn output(&self) -> Option<&(DVector<C64>, f64)> {
        self.output.as_ref()
    }

    /// Physical atoms currently trapped; a superatom counts its members.
    pub fn trapped_atoms(&self) -> u32 {
        self.atoms.iter().map(|a| a.kind.size()).sum()
    }

    pub fn atom(&self, id: &AtomId) -> Result<&AtomSpec> {
        self.atoms
            .iter()
            .find(|a| &a.id == id)
            .ok_or_else(|| Error::UnknownAtom(id.to_string()))
    }

    pub fn rydberg_population(&self, id: &AtomId) -> Result<f64> {
        match &self.state {
            Some(s) => s.rydberg_population(id),
            None => Ok(0.0),
        }
    }

    fn rebuild(&mut self) -> Result<()> {
        self.graph = build_blockade_graph(&self.atoms, &self.radii)?;
        Ok(())
    }

    fn set_flag(&mut self, id: &AtomId, flag: InternalFlag) -> Result<()> {
        let atom = self
            .atoms
            .iter_mut()
            .find(|a| &a.id == id)
            .ok_or_else(|| Error::UnknownAtom(id.to_string()))?;
        atom.flag = flag;
        Ok(())
    }

    pub fn displace(&mut self, ev: &DisplacementEvent) -> Result<()> {
        match ev.direction {
            Direction::In => {
                let Destination::Zone(position) = ev.destination else {
                    return Err(Error::InvalidAtom(format!(
                        "in-displacement of {} needs a zone position",
                        ev.atom
                    )));
                };
                let spec = AtomSpec {
                    id: ev.atom.clone(),
                    species: ev.species,
                    kind: ev.kind,
                    position,
                    flag: InternalFlag::Active,
                };
                self.atoms.push(spec);
                if let Err(e) = self.rebuild() {
                    self.atoms.pop();
                    return Err(e);
                }
                if let Some(s) = &self.state {
                    self.state = Some(s.with_ground_atom(ev.atom.clone()));
                }
            }
            Direction::Out => {
                let k = self
                    .atoms
                    .iter()
                    .position(|a| a.id == ev.atom)
                    .ok_or_else(|| Error::UnknownAtom(ev.atom.to_string()))?;
                if let Some(s) = &self.state {
                    self.state = Some(s.without_atom(&ev.atom)?);
                }
                self.atoms.remove(k);
                self.rebuild()?;
            }
        }
        Ok(())
    }

    pub fn execute(&mut self, ev: &Event) -> Result<()> {
        match ev {
            Event::Pulse(p) => {
                if let Some(s) = &self.state {
                    self.state = Some(apply_global_pulse(
                        s,
                        p,
                        &self.atoms,
                        &self.graph,
                        self.method,
                    )?);
                }
            }
            Event::Frame(f) => {
                if let Some(s) = &self.state {
                    self.state = Some(apply_phase_frame(s, f, &self.atoms)?);
                }
            }
            Event::Displace(d) => self.displace(d)?,
            Event::Park(id) => self.set_flag(id, InternalFlag::Parked)?,
            Event::Unpark(id) => self.set_flag(id, InternalFlag::Active)?,
            Event::Relabel { moves, .. } => {
                let saved = self.atoms.clone();
                for (id, pos) in moves {
                    match self.atoms.iter_mut().find(|a| &a.id == id) {
                        Some(a) => a.position = *pos,
                        None => {
                            self.atoms = saved;
                            return Err(Error::UnknownAtom(id.to_string()));
                        }
                    }
                }
                if let Err(e) = self.rebuild() {
                    self.atoms = saved;
                    return Err(e);
                }
            }
            Event::Kinds(_) | Event::Step { .. } => {}
            Event::Prepare(data) => {
                if let (Some(s), Some(input)) = (&self.state, self.input.take()) {
                    self.state = Some(self.embed(s, data, &input)?);
                }
            }
            Event::Measure(data) => {
                if self.state.is_some() {
                    self.output = Some(self.extract(data)?);
                }
            }
        }
        Ok(())
    }

    fn embed(
        &self,
        s: &QuantumState,
        data: &[AtomId],
        input: &DVector<C64>,
    ) -> Result<QuantumState> {
        if input.len() != 1 << data.len() {
            return Err(Error::DimensionMismatch {
                state: input.len(),
                atoms: data.len(),
            });
        }
        let bits: Vec<usize> = data
            .iter()
            .map(|id| s.index_of(id))
            .collect::<Result<_>>()?;
        let mut v = DVector::zeros(s.dimension());
        for (x, amp) in input.iter().enumerate() {
            let idx = bits
                .iter()
                .enumerate()
                .fold(0, |acc, (q, b)| acc | (((x >> q) & 1) << b));
            v[idx] = *amp;
        }
        QuantumState::from_vector(s.order().to_vec(), v)
    }

    /// Amplitudes over the listed data atoms (bit `q` for `data[q]`) on the
    /// branch where every other atom is in `g`, plus the population elsewhere.
    pub fn extract(&self, data: &[AtomId]) -> Result<(DVector<C64>, f64)> {
        let s = self
            .state
            .as_ref()
            .ok_or_else(|| Error::Replay("no quantum state attached".into()))?;
        let StateData::Vector(v) = s.data() else {
            return Err(Error::Replay("data extraction needs a state vector".into()));
        };
        let bits: Vec<usize> = data
            .iter()
            .map(|id| s.index_of(id))
            .collect::<Result<_>>()?;
        let data_mask: usize = bits.iter().map(|b| 1usize << b).sum();
        let mut out = DVector::zeros(1 << data.len());
        let mut leakage = 0.0;
        for (i, amp) in v.iter().enumerate() {
            if i & !data_mask != 0 {
                leakage += amp.norm_sqr();
                continue;
            }
            let x = bits
                .iter()
                .enumerate()
                .fold(0, |acc, (q, b)| acc | (((i >> b) & 1) << q));
            out[x] = *amp;
        }
        Ok((out, leakage))
    }
}

#[derive(Clone, Debug)]
struct Pair {
    data: AtomId,
    aux: AtomId,
    kind: Encoding,
}

/// Phase frames making the translation bit flips exact on every branch.
#[derive(Clone, Copy, Debug)]
struct Frames {
    x_b: PhaseFrame,
    x_a_single: PhaseFrame,
    x_a_superatom: PhaseFrame,
}

impl Frames {
    fn solve() -> Self {
        let x = Unitary2::pauli_x();
        let pi_pulse = PulseSpec::new(Species::B, std::f64::consts::PI, 0.0).expect("valid pulse");
        let frame = |u: &Unitary2| {
            solve_phase_frame(u, &x, IDENTITY_TOL).expect("bit flip reachable by frames")
        };
        let flip = Composite::GlobalBitflip.sequence(Species::A, Encoding::Single);
        Frames {
            x_b: frame(&rotation(&pi_pulse, Encoding::Single)),
            x_a_single: frame(&raw_product(&flip, Encoding::Single)),
            x_a_superatom: frame(&raw_product(&flip, Encoding::Superatom)),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProcessorConfig {
    pub geometry: Geometry,
    pub method: Method,
    /// Attach a quantum state and simulate every event.
    pub simulate: bool,
    /// Keep the auxiliary atom at the end of a translation instead of
    /// replacing it with a fresh one.
    pub skip_aux_replacement: bool,
    pub superatom_size: u32,
}

impl Default for ProcessorConfig {
    fn default() -> Self {
        ProcessorConfig {
            geometry: Geometry::default(),
            method: Method::ExactExponential,
            simulate: true,
            skip_aux_replacement: false,
            superatom_size: COMPOSITE_SUPERATOM_SIZE,
        }
    }
}

/// Simulation context for a line of Q-Pairs.
#[derive(Clone, Debug)]
pub struct Processor {
    exec: Executor,
    pairs: Vec<Pair>,
    mode: u32,
    trace: Vec<TimedEvent>,
    counter: u64,
    config: ProcessorConfig,
    frames: Frames,
}

impl Processor {
    /// Loads one Q-Pair per entry of `kinds` at mode 0, all atoms in `g`.
    pub fn new(kinds: &[Encoding], config: ProcessorConfig) -> Result<Self> {
        check_composite_size(config.superatom_size)?;
        let exec = if config.simulate {
            Executor::simulating(config.geometry.radii.clone(), config.method, None)
        } else {
            Executor::dry(config.geometry.radii.clone())
        };
        let mut p = Processor {
            exec,
            pairs: Vec::new(),
            mode: 0,
            trace: Vec::new(),
            counter: 0,
            config,
            frames: Frames::solve(),
        };
        for (slot, &kind) in kinds.iter().enumerate() {
            let data = p.load_data(slot, kind)?;
            let aux = p.load_aux(slot)?;
            p.pairs.push(Pair { data, aux, kind });
        }
        p.emit(Event::Kinds(kinds.to_vec()))?;
        Ok(p)
    }

    pub fn mode(&self) -> u32 {
        self.mode
    }

    pub fn slots(&self) -> usize {
        self.pairs.len()
    }

    pub fn kinds(&self) -> Vec<Encoding> {
        self.pairs.iter().map(|p| p.kind).collect()
    }

    pub fn trace(&self) -> &[TimedEvent] {
        &self.trace
    }

    pub fn into_trace(self) -> Vec<TimedEvent> {
        self.trace
    }

    pub fn executor(&self) -> &Executor {
        &self.exec
    }

    pub fn handle(&self, slot: usize) -> Result<QPairHandle> {
        let p = self.pairs.get(slot).ok_or(Error::UnknownSlot(slot))?;
        Ok(QPairHandle {
            mode: HybridMode {
                t: self.mode,
                s: slot + 1,
            },
            data_atom: p.data.clone(),
            aux_atom: p.aux.clone(),
            kind: p.kind,
        })
    }

    pub fn data_atoms(&self, order: &[usize]) -> Result<Vec<AtomId>> {
        order
            .iter()
            .map(|&s| {
                self.pairs
                    .get(s)
                    .map(|p| p.data.clone())
                    .ok_or(Error::UnknownSlot(s))
            })
            .collect()
    }

    /// Marks the start of a logical step.
    pub fn step(&mut self, index: usize, label: impl Into<String>) -> Result<()> {
        self.emit(Event::Step {
            index,
            label: label.into(),
        })
    }

    /// Emits the state-preparation marker for data qubits in `order` and, when
    /// simulating, loads `input` (bit `q` for slot `order[q]`).
    pub fn prepare(&mut self, order: &[usize], input: Option<DVector<C64>>) -> Result<()> {
        let data = self.data_atoms(order)?;
        self.exec.input = input;
        self.emit(Event::Prepare(data))
    }

    /// Emits the terminal measurement for data qubits in `order`.
    pub fn measure(&mut self, order: &[usize]) -> Result<()> {
        let data = self.data_atoms(order)?;
        self.emit(Event::Measure(data))
    }

    /// Current logical amplitudes over `order` and the leaked population.
    pub fn data_state(&self, order: &[usize]) -> Result<(DVector<C64>, f64)> {
        self.exec.extract(&self.data_atoms(order)?)
    }

    fn emit(&mut self, event: Event) -> Result<()> {
        self.exec.execute(&event)?;
        self.trace.push(TimedEvent {
            mode: self.mode,
            event,
        });
        Ok(())
    }

    fn fresh_id(&mut self, prefix: char) -> AtomId {
        let id = AtomId(format!("{prefix}{}", self.counter));
        self.counter += 1;
        id
    }

    fn atom_kind(&self, kind: Encoding) -> AtomKind {
        match kind {
            Encoding::Single => AtomKind::Single,
            Encoding::Superatom => AtomKind::Superatom(self.config.superatom_size),
        }
    }

    fn insert(
        &mut self,
        id: AtomId,
        species: Species,
        kind: AtomKind,
        position: [f64; 2],
    ) -> Result<()> {
        self.emit(Event::Displace(DisplacementEvent {
            direction: Direction::In,
            species,
            kind,
            atom: id,
            destination: Destination::Zone(position),
        }))
    }

    fn remove(&mut self, id: AtomId) -> Result<()> {
        let a = self.exec.atom(&id)?.clone();
        self.emit(Event::Displace(DisplacementEvent {
            direction: Direction::Out,
            species: a.species,
            kind: a.kind,
            atom: id,
            destination: Destination::Reservoir,
        }))
    }

    fn load_data(&mut self, slot: usize, kind: Encoding) -> Result<AtomId> {
        let id = self.fresh_id('A');
        let kind = self.atom_kind(kind);
        self.insert(
            id.clone(),
            Species::A,
            kind,
            self.config.geometry.data_position(slot),
        )?;
        Ok(id)
    }

    fn load_aux(&mut self, slot: usize) -> Result<AtomId> {
        let id = self.fresh_id('B');
        self.insert(
            id.clone(),
            Species::B,
            AtomKind::Single,
            self.config.geometry.aux_position(slot),
        )?;
        Ok(id)
    }

    fn pulse(&mut self, spec: PulseSpec) -> Result<()> {
        self.emit(Event::Pulse(GlobalPulseEvent { pulse: spec }))
    }

    fn frame(&mut self, species: Species, single: f64, superatom: f64) -> Result<()> {
        if single == 0.0 && superatom == 0.0 {
            return Ok(());
        }
        self.emit(Event::Frame(PhaseFrameEvent {
            species,
            single,
            superatom,
        }))
    }

    fn sequence(&mut self, composite: Composite, species: Species) -> Result<()> {
        for p in composite.pulses(species).into_iter().rev() {
            self.pulse(p)?;
        }
        Ok(())
    }

    /// `|g><r| + |r><g|` on every free auxiliary atom.
    fn exact_flip_b(&mut self) -> Result<()> {
        let f = self.frames.x_b;
        self.frame(Species::B, f.pre, 0.0)?;
        self.pulse(PulseSpec::new(Species::B, std::f64::consts::PI, 0.0)?)?;
        self.frame(Species::B, f.post, 0.0)
    }

    /// `|g><r| + |r><g|` on every free data qubit, single or superatom.
    fn exact_flip_a(&mut self) -> Result<()> {
        let (s, m) = (self.frames.x_a_single, self.frames.x_a_superatom);
        self.frame(Species::A, s.pre, m.pre)?;
        self.sequence(Composite::GlobalBitflip, Species::A)?;
        self.frame(Species::A, s.post, m.post)
    }

    fn check_aux_ground(&self) -> Result<()> {
        for p in &self.pairs {
            if self.exec.rydberg_population(&p.aux)? > DISENTANGLE_TOL {
                return Err(Error::AuxNotGround(p.aux.to_string()));
            }
        }
        Ok(())
    }

    /// Translates every Q-Pair to the next temporal mode; slot `l` ends with
    /// data encoding `next[l]`.
    pub fn translate(&mut self, next: &[Encoding]) -> Result<()> {
        if next.len() != self.pairs.len() {
            return Err(Error::KindMismatch(format!(
                "{} target kinds for {} Q-Pairs",
                next.len(),
                self.pairs.len()
            )));
        }
        self.check_aux_ground()?;
        self.exact_flip_b()?;
        self.exact_flip_a()?;
        // All removals before any loading, so the register never holds
        // both encodings of a slot at once.
        for slot in 0..self.pairs.len() {
            let old = self.pairs[slot].data.clone();
            self.remove(old)?;
        }
        for (slot, &kind) in next.iter().enumerate() {
            self.pairs[slot].data = self.load_data(slot, kind)?;
            self.pairs[slot].kind = kind;
        }
        self.exact_flip_a()?;
        self.exact_flip_b()?;
        if !self.config.skip_aux_replacement {
            for slot in 0..self.pairs.len() {
                let old = self.pairs[slot].aux.clone();
                self.remove(old)?;
            }
            for slot in 0..self.pairs.len() {
                self.pairs[slot].aux = self.load_aux(slot)?;
            }
        }
        self.mode += 1;
        self.emit(Event::Kinds(next.to_vec()))
    }

    /// Applies `gate` to every superatom data qubit, then translates.
    pub fn single_qubit_layer(&mut self, gate: SingleGate, next: &[Encoding]) -> Result<()> {
        match gate {
            SingleGate::Identity => {}
            SingleGate::Phase(phi) => {
                self.frame(Species::A, 0.0, crate::pulse::canonical_angle(phi))?
            }
            SingleGate::Bitflip | SingleGate::Hadamard => {
                let composite = if gate == SingleGate::Bitflip {
                    Composite::SuperatomBitflip
                } else {
                    Composite::SuperatomHadamard
                };
                self.sequence(composite, Species::A)?;
                let angle = |kind| {
                    composite
                        .sequence(Species::A, kind)
                        .correction
                        .map_or(0.0, |c| c.angle)
                };
                self.frame(
                    Species::A,
                    angle(Encoding::Single),
                    angle(Encoding::Superatom),
                )?;
            }
        }
        self.translate(next)
    }

    fn check_pair(&self, a: usize, b: usize) -> Result<()> {
        if a == b {
            return Err(Error::SameSlot(a));
        }
        for s in [a, b] {
            if s >= self.pairs.len() {
                return Err(Error::UnknownSlot(s));
            }
        }
        Ok(())
    }

    /// Checks that `mediator` blockades the data atoms of slots `a`, `b` and
    /// no other atom.
    fn check_mediator(&self, mediator: &AtomId, a: usize, b: usize) -> Result<()> {
        let graph = self.exec.graph();
        let wanted = [&self.pairs[a].data, &self.pairs[b].data];
        for w in wanted {
            if !graph.contains(mediator, w) {
                return Err(Error::MediatorGeometry(format!(
                    "mediator does not blockade data atom {w} (slots {a}, {b})"
                )));
            }
        }
        for atom in self.exec.atoms() {
            if &atom.id != mediator
                && !wanted.contains(&&atom.id)
                && graph.contains(mediator, &atom.id)
            {
                return Err(Error::MediatorGeometry(format!(
                    "mediator blockades {}",
                    atom.id
                )));
            }
        }
        Ok(())
    }

    /// CZ between the data qubits of slots `a` and `b`, then translation.
    ///
    /// Auxiliary atoms of idle pairs are withdrawn during the mediator pulse,
    /// which would otherwise give each of them a conditional phase.
    pub fn cz_layer(&mut self, a: usize, b: usize, next: &[Encoding]) -> Result<()> {
        self.check_pair(a, b)?;
        self.check_aux_ground()?;
        let idle: Vec<usize> = (0..self.pairs.len())
            .filter(|&s| s != a && s != b)
            .collect();
        for &s in &idle {
            let aux = self.pairs[s].aux.clone();
            self.remove(aux)?;
        }
        let mediator = self.fresh_id('M');
        let kind = AtomKind::Superatom(self.config.superatom_size);
        let position = self.config.geometry.mediator_position(a, b);
        self.insert(mediator.clone(), Species::B, kind, position)?;
        self.check_mediator(&mediator, a, b)?;
        self.sequence(Composite::CzMediator, Species::B)?;
        self.remove(mediator)?;
        for &s in &idle {
            self.pairs[s].aux = self.load_aux(s)?;
        }
        self.translate(next)
    }

    /// Exchanges the Q-Pairs of slots `a` and `b` by moving them, then translates.
    pub fn swap_layer(&mut self, a: usize, b: usize, next: &[Encoding]) -> Result<()> {
        self.check_pair(a, b)?;
        let g = self.config.geometry.clone();
        let atoms = [
            (self.pairs[a].data.clone(), g.data_position(b)),
            (self.pairs[a].aux.clone(), g.aux_position(b)),
            (self.pairs[b].data.clone(), g.data_position(a)),
            (self.pairs[b].aux.clone(), g.aux_position(a)),
        ];
        for (id, _) in &atoms {
            self.emit(Event::Park(id.clone()))?;
        }
        self.emit(Event::Relabel {
            a,
            b,
            moves: atoms.to_vec(),
        })?;
        for (id, _) in &atoms {
            self.emit(Event::Unpark(id.clone()))?;
        }
        self.pairs.swap(a, b);
        self.translate(next)
    }

    fn next_kinds(&self, changes: &[(usize, Encoding)]) -> Vec<Encoding> {
        let mut k = self.kinds();
        for &(s, e) in changes {
            k[s] = e;
        }
        k
    }

    fn expect_kind(&self, slot: usize, kind: Encoding, what: &str) -> Result<()> {
        let actual = self.pairs.get(slot).ok_or(Error::UnknownSlot(slot))?.kind;
        if actual != kind {
            return Err(Error::KindMismatch(format!(
                "{what} at slot {slot} is {actual}, expected {kind}"
            )));
        }
        Ok(())
    }

    fn expect_idle_single(&self, busy: &[usize]) -> Result<()> {
        for (s, p) in self.pairs.iter().enumerate() {
            if !busy.contains(&s) && p.kind == Encoding::Superatom {
                return Err(Error::KindMismatch(format!(
                    "idle superatom at slot {s} would receive the gate"
                )));
            }
        }
        Ok(())
    }
}

/// Translates the pair at `slot` with `nu`; other pairs keep their encoding.
pub fn temporal_translation(
    ctx: &mut Processor,
    slot: usize,
    nu: TranslationKind,
) -> Result<QPairHandle> {
    ctx.expect_kind(slot, nu.source(), "data qubit")?;
    let next = ctx.next_kinds(&[(slot, nu.target())]);
    ctx.translate(&next)?;
    ctx.handle(slot)
}

/// Gate on the pair at `slot` (acts only if its data is a superatom), then
/// translation `nu`. Every other pair must hold a single-atom data qubit.
pub fn single_qubit_wiregate(
    ctx: &mut Processor,
    slot: usize,
    nu: TranslationKind,
    gate: SingleGate,
) -> Result<QPairHandle> {
    ctx.expect_kind(slot, nu.source(), "data qubit")?;
    ctx.expect_idle_single(&[slot])?;
    let next = ctx.next_kinds(&[(slot, nu.target())]);
    ctx.single_qubit_layer(gate, &next)?;
    ctx.handle(slot)
}

pub fn cz_wiregate(
    ctx: &mut Processor,
    l: usize,
    l1: usize,
    mu: TranslationKind,
    nu: TranslationKind,
) -> Result<(QPairHandle, QPairHandle)> {
    ctx.check_pair(l, l1)?;
    ctx.expect_kind(l, mu.source(), "first data qubit")?;
    ctx.expect_kind(l1, nu.source(), "second data qubit")?;
    let next = ctx.next_kinds(&[(l, mu.target()), (l1, nu.target())]);
    ctx.cz_layer(l, l1, &next)?;
    Ok((ctx.handle(l)?, ctx.handle(l1)?))
}

/// CNOT over three modes: Hadamard on the target, CZ, Hadamard.
///
/// The control must enter as a single atom and the target as a superatom;
/// `mu` and `nu` give their overall source and exit encodings.
pub fn cnot_wiregate(
    ctx: &mut Processor,
    control: usize,
    target: usize,
    mu: TranslationKind,
    nu: TranslationKind,
) -> Result<(QPairHandle, QPairHandle)> {
    ctx.check_pair(control, target)?;
    ctx.expect_kind(control, Encoding::Single, "CNOT control")?;
    ctx.expect_kind(control, mu.source(), "CNOT control")?;
    ctx.expect_kind(target, Encoding::Superatom, "CNOT target")?;
    ctx.expect_kind(target, nu.source(), "CNOT target")?;
    ctx.expect_idle_single(&[control, target])?;
    let single = Encoding::Single;
    let next = ctx.next_kinds(&[(target, single)]);
    ctx.single_qubit_layer(SingleGate::Hadamard, &next)?;
    let next = ctx.next_kinds(&[(target, Encoding::Superatom)]);
    ctx.cz_layer(control, target, &next)?;
    let next = ctx.next_kinds(&[(control, mu.target()), (target, nu.target())]);
    ctx.single_qubit_layer(SingleGate::Hadamard, &next)?;
    Ok((ctx.handle(control)?, ctx.handle(target)?))
}

/// Controlled phase `diag(1, 1, 1, e^{i phi})` over eight modes:
/// CNOT, `P(-phi/2)` on the target, CNOT, `P(phi/2)` on both.
///
/// Enters with a single-atom control and a superatom target; both leave as
/// single atoms.
pub fn cphase_wiregate(
    ctx: &mut Processor,
    control: usize,
    target: usize,
    phi: f64,
) -> Result<(QPairHandle, QPairHandle)> {
    let (single, sup) = (Encoding::Single, Encoding::Superatom);
    let keep_target = TranslationKind::between(sup, sup);
    cnot_wiregate(
        ctx,
        control,
        target,
        TranslationKind::between(single, single),
        keep_target,
    )?;
    let next = ctx.next_kinds(&[(target, sup)]);
    ctx.single_qubit_layer(SingleGate::Phase(-phi / 2.0), &next)?;
    cnot_wiregate(
        ctx,
        control,
        target,
        TranslationKind::between(single, sup),
        keep_target,
    )?;
    let next = ctx.next_kinds(&[(control, single), (target, single)]);
    ctx.single_qubit_layer(SingleGate::Phase(phi / 2.0), &next)?;
    Ok((ctx.handle(control)?, ctx.handle(target)?))
}

/// Exchanges slots `l` and `m` by atom movement, then translates the pair now
/// at `m` (formerly at `l`) with `mu` and the pair now at `l` with `nu`.
pub fn swap_wiregate(
    ctx: &mut Processor,
    l: usize,
    m: usize,
    mu: TranslationKind,
    nu: TranslationKind,
) -> Result<(QPairHandle, QPairHandle)> {
    ctx.check_pair(l, m)?;
    ctx.expect_kind(l, mu.source(), "first data qubit")?;
    ctx.expect_kind(m, nu.source(), "second data qubit")?;
    let mut next = ctx.kinds();
    next.swap(l, m);
    next[m] = mu.target();
    next[l] = nu.target();
    ctx.swap_layer(l, m, &next)?;
    Ok((ctx.handle(m)?, ctx.handle(l)?))
}

fn fmt_kind(kind: AtomKind) -> String {
    kind.to_string()
}

fn parse_atom_kind(s: &str) -> Option<AtomKind> {
    if s == "single" {
        return Some(AtomKind::Single);
    }
    let m = s.strip_prefix("superatom(")?.strip_suffix(')')?;
    m.parse().ok().map(AtomKind::Superatom)
}

fn parse_encoding(s: &str) -> Option<Encoding> {
    match s {
        "single" => Some(Encoding::Single),
        "superatom" => Some(Encoding::Superatom),
        _ => None,
    }
}

fn join_ids(ids: &[AtomId]) -> String {
    ids.iter()
        .map(|a| a.0.as_str())
        .collect::<Vec<_>>()
        .join(",")
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Pulse(p) => {
                let s = &p.pulse;
                write!(
                    f,
                    "pulse species={} area={} phase={} dagger={}",
                    s.species,
                    s.area(),
                    s.phase(),
                    u8::from(s.inverse)
                )
            }
            Event::Frame(fr) => write!(
                f,
                "frame species={} single={} superatom={}",
                fr.species, fr.single, fr.superatom
            ),
            Event::Displace(d) => match (d.direction, d.destination) {
                (Direction::In, Destination::Zone([x, y])) => write!(
                    f,
                    "displace in id={} species={} kind={} x={x} y={y}",
                    d.atom,
                    d.species,
                    fmt_kind(d.kind)
                ),
                (Direction::In, Destination::Reservoir) => {
                    write!(
                        f,
                        "displace in id={} species={} kind={} reservoir",
                        d.atom,
                        d.species,
                        fmt_kind(d.kind)
                    )
                }
                (Direction::Out, _) => {
                    write!(
                        f,
                        "displace out id={} species={} kind={}",
                        d.atom,
                        d.species,
                        fmt_kind(d.kind)
                    )
                }
            },
            Event::Park(id) => write!(f, "park id={id}"),
            Event::Unpark(id) => write!(f, "unpark id={id}"),
            Event::Relabel { a, b, moves } => {
                let m: Vec<String> = moves
                    .iter()
                    .map(|(id, [x, y])| format!("{id}@{x}:{y}"))
                    .collect();
                write!(f, "relabel a={a} b={b} moves={}", m.join(","))
            }
            Event::Kinds(k) => {
                let k: Vec<String> = k.iter().map(|e| e.to_string()).collect();
                write!(f, "kinds {}", k.join(","))
            }
            Event::Step { index, label } => write!(f, "step index={index} label={label}"),
            Event::Prepare(ids) => write!(f, "prepare {}", join_ids(ids)),
            Event::Measure(ids) => write!(f, "measure {}", join_ids(ids)),
        }
    }
}

impl fmt::Display for TimedEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "mode={} {}", self.mode, self.event)
    }
}

struct Fields<'a> {
    tokens: Vec<&'a str>,
}

impl<'a> Fields<'a> {
    fn get(&self, key: &str) -> std::result::Result<&'a str, String> {
        self.tokens
            .iter()
            .find_map(|t| t.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
            .ok_or_else(|| format!("missing field {key}"))
    }

    fn num<T: FromStr>(&self, key: &str) -> std::result::Result<T, String> {
        let v = self.get(key)?;
        v.parse().map_err(|_| format!("bad value {v:?} for {key}"))
    }
}

fn parse_ids(s: Option<&str>) -> Vec<AtomId> {
    s.map(|s| {
        s.split(',')
            .filter(|t| !t.is_empty())
            .map(AtomId::from)
            .collect()
    })
    .unwrap_or_default()
}

impl FromStr for TimedEvent {
    type Err = String;

    fn from_str(line: &str) -> std::result::Result<Self, String> {
        let line = line.trim();
        let (mode_tok, rest) = line.split_once(' ').ok_or("expected `mode=<k> <event>`")?;
        let mode: u32 = mode_tok
            .strip_prefix("mode=")
            .ok_or("line must start with mode=")?
            .parse()
            .map_err(|_| format!("bad mode {mode_tok:?}"))?;
        let (kind, args) = rest.split_once(' ').unwrap_or((rest, ""));
        if kind == "step" {
            let (idx, label) = args
                .split_once(" label=")
                .ok_or("step needs index and label")?;
            let index = idx
                .trim()
                .strip_prefix("index=")
                .ok_or("step needs index")?
                .parse()
                .map_err(|_| "bad step index")?;
            return Ok(TimedEvent {
                mode,
                event: Event::Step {
                    index,
                    label: label.to_string(),
                },
            });
        }
        let tokens: Vec<&str> = args.split_whitespace().collect();
        let fields = Fields {
            tokens: tokens.clone(),
        };
        let species = || -> std::result::Result<Species, String> {
            fields
                .get("species")?
                .parse()
                .map_err(|e: Error| e.to_string())
        };
        let event = match kind {
            "pulse" => {
                let mut spec =
                    PulseSpec::new(species()?, fields.num("area")?, fields.num("phase")?)
                        .map_err(|e| e.to_string())?;
                if fields.num::<u8>("dagger")? == 1 {
                    spec = spec.dagger();
                }
                Event::Pulse(GlobalPulseEvent { pulse: spec })
            }
            "frame" => Event::Frame(PhaseFrameEvent {
                species: species()?,
                single: fields.num("single")?,
                superatom: fields.num("superatom")?,
            }),
            "displace" => {
                let direction = match tokens.first() {
                    Some(&"in") => Direction::In,
                    Some(&"out") => Direction::Out,
                    _ => return Err("displace needs in or out".into()),
                };
                let kind = parse_atom_kind(fields.get("kind")?).ok_or("bad atom kind")?;
                let destination = match direction {
                    Direction::In if tokens.contains(&"reservoir") => Destination::Reservoir,
                    Direction::In => Destination::Zone([fields.num("x")?, fields.num("y")?]),
                    Direction::Out => Destination::Reservoir,
                };
                Event::Displace(DisplacementEvent {
                    direction,
                    species: species()?,
                    kind,
                    atom: AtomId::from(fields.get("id")?),
                    destination,
                })
            }
            "park" => Event::Park(AtomId::from(fields.get("id")?)),
            "unpark" => Event::Unpark(AtomId::from(fields.get("id")?)),
            "relabel" => {
                let mut moves = Vec::new();
                for m in fields.get("moves")?.split(',').filter(|m| !m.is_empty()) {
                    let (id, pos) = m.split_once('@').ok_or("bad move")?;
                    let (x, y) = pos.split_once(':').ok_or("bad move position")?;
                    let x: f64 = x.parse().map_err(|_| "bad move x")?;
                    let y: f64 = y.parse().map_err(|_| "bad move y")?;
                    moves.push((AtomId::from(id), [x, y]));
                }
                Event::Relabel {
                    a: fields.num("a")?,
                    b: fields.num("b")?,
                    moves,
                }
            }
            "kinds" => {
                let list = tokens.first().copied().unwrap_or("");
                let kinds = list
                    .split(',')
                    .filter(|k| !k.is_empty())
                    .map(|k| parse_encoding(k).ok_or_else(|| format!("bad kind {k:?}")))
                    .collect::<std::result::Result<_, _>>()?;
                Event::Kinds(kinds)
            }
            "prepare" => Event::Prepare(parse_ids(tokens.first().copied())),
            "measure" => Event::Measure(parse_ids(tokens.first().copied())),
            other => return Err(format!("unknown event {other:?}")),
        };
        Ok(TimedEvent { mode, event })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn single_pair(kind: Encoding, alpha: C64, beta: C64) -> Processor {
        let mut p = Processor::new(&[kind], ProcessorConfig::default()).unwrap();
        p.prepare(&[0], Some(DVector::from_vec(vec![alpha, beta])))
            .unwrap();
        p
    }

    fn assert_state(p: &Processor, order: &[usize], expect: &[C64], tol: f64) {
        let (v, leak) = p.data_state(order).unwrap();
        assert!(leak < 1e-10, "leakage {leak}");
        let overlap: C64 = v.iter().zip(expect).map(|(a, b)| b.conj() * a).sum();
        assert!(
            (overlap.norm_sqr() - 1.0).abs() < tol,
            "got {v}, expected {expect:?}"
        );
    }

    #[test]
    fn translation_indices() {
        for nu in 1..=4u8 {
            let t = TranslationKind::new(nu).unwrap();
            assert_eq!(TranslationKind::between(t.source(), t.target()), t);
        }
        assert!(TranslationKind::new(0).is_err() && TranslationKind::new(5).is_err());
    }

    #[test]
    fn translation_preserves_state_for_every_nu() {
        let (alpha, beta) = (c(0.6, 0.0), C64::from_polar(0.8, 0.9));
        for nu in 1..=4u8 {
            let nu = TranslationKind::new(nu).unwrap();
            let mut p = single_pair(nu.source(), alpha, beta);
            let h = temporal_translation(&mut p, 0, nu).unwrap();
            assert_eq!(h.mode, HybridMode { t: 1, s: 1 });
            assert_eq!(h.kind, nu.target());
            // exact equality, not just up to phase
            let (v, leak) = p.data_state(&[0]).unwrap();
            assert!(leak < 1e-12);
            assert!(
                (v[0] - alpha).norm() < 1e-10 && (v[1] - beta).norm() < 1e-10,
                "nu {}: {v}",
                nu.index()
            );
        }
    }

    #[test]
    fn translation_kind_mismatch() {
        let mut p = single_pair(Encoding::Single, c(1.0, 0.0), c(0.0, 0.0));
        let err = temporal_translation(&mut p, 0, TranslationKind::new(3).unwrap()).unwrap_err();
        assert!(matches!(err, Error::KindMismatch(_)));
    }

    #[test]
    fn single_qubit_gates_act_on_superatoms_only() {
        let one = c(1.0, 0.0);
        let zero = c(0.0, 0.0);
        let mut p = single_pair(Encoding::Single, one, zero);
        single_qubit_wiregate(
            &mut p,
            0,
            TranslationKind::new(1).unwrap(),
            SingleGate::Bitflip,
        )
        .unwrap();
        assert_state(&p, &[0], &[one, zero], 1e-10);
        let mut p = single_pair(Encoding::Superatom, one, zero);
        single_qubit_wiregate(
            &mut p,
            0,
            TranslationKind::new(4).unwrap(),
            SingleGate::Bitflip,
        )
        .unwrap();
        assert_state(&p, &[0], &[zero, one], 1e-10);
        let mut p = single_pair(Encoding::Superatom, one, zero);
        let h = single_qubit_wiregate(
            &mut p,
            0,
            TranslationKind::new(3).unwrap(),
            SingleGate::Hadamard,
        )
        .unwrap();
        assert_eq!(h.kind, Encoding::Single);
        let s = c(FRAC_1_SQRT_2, 0.0);
        assert_state(&p, &[0], &[s, s], 1e-10);
    }

    #[test]
    fn cz_on_plus_plus() {
        let mut p = Processor::new(
            &[Encoding::Single, Encoding::Single],
            ProcessorConfig::default(),
        )
        .unwrap();
        let half = c(0.5, 0.0);
        p.prepare(&[0, 1], Some(DVector::from_element(4, half)))
            .unwrap();
        let one = TranslationKind::new(1).unwrap();
        cz_wiregate(&mut p, 0, 1, one, one).unwrap();
        assert_state(&p, &[0, 1], &[half, half, half, -half], 1e-10);
    }

    #[test]
    fn mediator_geometry_enforced() {
        let kinds = [Encoding::Single; 3];
        let mut p = Processor::new(&kinds, ProcessorConfig::default()).unwrap();
        let err = p.cz_layer(0, 2, &kinds).unwrap_err();
        assert!(matches!(err, Error::MediatorGeometry(_)), "{err}");
    }

    #[test]
    fn swap_exchanges_states() {
        let mut p = Processor::new(
            &[Encoding::Single, Encoding::Single],
            ProcessorConfig::default(),
        )
        .unwrap();
        // slot 0 in |1>, slot 1 in |0>
        let mut v = DVector::zeros(4);
        v[1] = c(1.0, 0.0);
        p.prepare(&[0, 1], Some(v)).unwrap();
        let one = TranslationKind::new(1).unwrap();
        swap_wiregate(&mut p, 0, 1, one, one).unwrap();
        let mut w = vec![c(0.0, 0.0); 4];
        w[2] = c(1.0, 0.0);
        assert_state(&p, &[0, 1], &w, 1e-12);
        assert!(matches!(
            swap_wiregate(&mut p, 1, 1, one, one),
            Err(Error::SameSlot(1))
        ));
    }

    #[test]
    fn trace_round_trip() {
        let mut p = Processor::new(
            &[Encoding::Single, Encoding::Superatom],
            ProcessorConfig::default(),
        )
        .unwrap();
        p.prepare(&[0, 1], None).unwrap();
        p.step(0, "CX(q0,q1)").unwrap();
        let one = TranslationKind::new(1).unwrap();
        let three = TranslationKind::new(3).unwrap();
        cnot_wiregate(&mut p, 0, 1, one, three).unwrap();
        swap_wiregate(&mut p, 0, 1, one, one).unwrap();
        p.measure(&[0, 1]).unwrap();
        for ev in p.trace() {
            let text = ev.to_string();
            let back: TimedEvent = text.parse().unwrap();
            assert_eq!(&back, ev, "{text}");
        }
    }

    #[test]
    fn removing_excited_atom_is_a_protocol_violation() {
        let mut p = single_pair(Encoding::Single, c(0.0, 0.0), c(1.0, 0.0));
        let id = p.handle(0).unwrap().data_atom;
        assert!(matches!(p.remove(id), Err(Error::ResidualRydberg { .. })));
    }
}
