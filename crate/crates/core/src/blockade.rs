// Copyright 2026 The qpair Authors
// SPDX-License-Identifier: Apache-2.0

//! PXP blockade engine over registered atoms and superatoms.
//!
//! Every registered atom (or superatom) is an effective two-level system.
//! Basis index bit `i` is set when atom `i` of the register is in `r`.
//! A drive term on an atom only acts when all its blockade neighbours are in
//! `g`; superatoms see their area enhanced by `sqrt(M)`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::distr::{weighted::WeightedIndex, Distribution as _};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pulse::{rotation_scaled, Encoding, PulseSpec, Species, Unitary2};

/// Atoms closer than this are treated as coincident.
pub const MIN_SEPARATION_UM: f64 = 1e-6;
/// Maximum number of simultaneously driven atoms for exact evolution.
pub const MAX_EXACT_DRIVEN: usize = 8;
/// Rydberg population tolerated on an atom being removed.
pub const DISENTANGLE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomId(pub String);

impl fmt::Display for AtomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AtomId {
    fn from(s: &str) -> Self {
        AtomId(s.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AtomKind {
    Single,
    Superatom(u32),
}

impl AtomKind {
    pub fn encoding(self) -> Encoding {
        match self {
            AtomKind::Single => Encoding::Single,
            AtomKind::Superatom(_) => Encoding::Superatom,
        }
    }

    /// Number of physical atoms.
    pub fn size(self) -> u32 {
        match self {
            AtomKind::Single => 1,
            AtomKind::Superatom(m) => m,
        }
    }

    pub fn rabi_factor(self) -> f64 {
        (self.size() as f64).sqrt()
    }
}

impl fmt::Display for AtomKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AtomKind::Single => f.write_str("single"),
            AtomKind::Superatom(m) => write!(f, "superatom({m})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InternalFlag {
    Active,
    /// Population shelved in a metastable state; blind to pulses.
    Parked,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AtomSpec {
    pub id: AtomId,
    pub species: Species,
    pub kind: AtomKind,
    pub position: [f64; 2],
    pub flag: InternalFlag,
}

impl AtomSpec {
    pub fn new(
        id: impl Into<String>,
        species: Species,
        kind: AtomKind,
        position: [f64; 2],
    ) -> Self {
        AtomSpec {
            id: AtomId(id.into()),
            species,
            kind,
            position,
            flag: InternalFlag::Active,
        }
    }

    pub fn distance(&self, other: &AtomSpec) -> f64 {
        let dx = self.position[0] - other.position[0];
        let dy = self.position[1] - other.position[1];
        dx.hypot(dy)
    }

    fn validate(&self) -> Result<()> {
        if let AtomKind::Superatom(m) = self.kind {
            if m < 2 {
                return Err(Error::InvalidAtom(format!(
                    "superatom {} has M = {m} < 2",
                    self.id
                )));
            }
        }
        if !self.position.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidAtom(format!(
                "atom {} has a non-finite position",
                self.id
            )));
        }
        Ok(())
    }
}

/// Blockade radius per unordered species pair, in micrometres.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockadeRadii {
    aa: f64,
    ab: f64,
    bb: f64,
}

impl BlockadeRadii {
    pub fn new(aa: f64, ab: f64, bb: f64) -> Result<Self> {
        for (name, r) in [("AA", aa), ("AB", ab), ("BB", bb)] {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::InvalidRadius(format!("{name} = {r}")));
            }
        }
        Ok(BlockadeRadii { aa, ab, bb })
    }

    pub fn uniform(r: f64) -> Result<Self> {
        Self::new(r, r, r)
    }

    pub fn get(&self, a: Species, b: Species) -> f64 {
        match (a, b) {
            (Species::A, Species::A) => self.aa,
            (Species::B, Species::B) => self.bb,
            _ => self.ab,
        }
    }
}

impl Default for BlockadeRadii {
    fn default() -> Self {
        BlockadeRadii {
            aa: 5.0,
            ab: 5.0,
            bb: 5.0,
        }
    }
}

/// Unordered pairs of atoms that blockade each other.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BlockadeGraph {
    edges: BTreeSet<(AtomId, AtomId)>,
}

impl BlockadeGraph {
    pub fn contains(&self, a: &AtomId, b: &AtomId) -> bool {
        let key = if a <= b {
            (a.clone(), b.clone())
        } else {
            (b.clone(), a.clone())
        };
        self.edges.contains(&key)
    }

    pub fn edges(&self) -> impl Iterator<Item = &(AtomId, AtomId)> {
        self.edges.iter()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Neighbour bitmask per atom, in register order.
    pub fn neighbour_masks(&self, atoms: &[AtomSpec]) -> Vec<u64> {
        let index: HashMap<&AtomId, usize> =
            atoms.iter().enumerate().map(|(i, a)| (&a.id, i)).collect();
        let mut masks = vec![0u64; atoms.len()];
        for (a, b) in &self.edges {
            if let (Some(&i), Some(&j)) = (index.get(a), index.get(b)) {
                masks[i] |= 1 << j;
                masks[j] |= 1 << i;
            }
        }
        masks
    }
}

pub fn build_blockade_graph(atoms: &[AtomSpec], radii: &BlockadeRadii) -> Result<BlockadeGraph> {
    let mut seen = BTreeSet::new();
    for a in atoms {
        a.validate()?;
        if !seen.insert(&a.id) {
            return Err(Error::DuplicateAtom(a.id.to_string()));
        }
    }
    let mut edges = BTreeSet::new();
    for (i, a) in atoms.iter().enumerate() {
        for b in &atoms[i + 1..] {
            let d = a.distance(b);
            if d < MIN_SEPARATION_UM {
                return Err(Error::CoincidentAtoms(a.id.to_string(), b.id.to_string()));
            }
            if d < radii.get(a.species, b.species) {
                let key = if a.id <= b.id {
                    (a.id.clone(), b.id.clone())
                } else {
                    (b.id.clone(), a.id.clone())
                };
                edges.insert(key);
            }
        }
    }
    Ok(BlockadeGraph { edges })
}

/// Parses a register file: one atom per line, `id species kind M x y`.
///
/// `kind` is `single` or `superatom`; `M` is ignored for single atoms.
/// Blank lines and `#` comments are skipped. Fields may be separated by
/// whitespace or commas.
pub fn parse_registry(text: &str) -> Result<Vec<AtomSpec>> {
    let mut atoms = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            line: n + 1,
            message,
        };
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        if fields.len() != 6 {
            return Err(err(format!("expected 6 fields, found {}", fields.len())));
        }
        let species: Species = fields[1].parse().map_err(|e: Error| err(e.to_string()))?;
        let m: u32 = fields[3]
            .parse()
            .map_err(|_| err(format!("bad M {:?}", fields[3])))?;
        let kind = match fields[2] {
            "single" => AtomKind::Single,
            "superatom" => AtomKind::Superatom(m),
            other => return Err(err(format!("unknown kind {other:?}"))),
        };
        let coord = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| err(format!("bad coordinate {s:?}")))
        };
        let spec = AtomSpec::new(
            fields[0],
            species,
            kind,
            [coord(fields[4])?, coord(fields[5])?],
        );
        spec.validate().map_err(|e| err(e.to_string()))?;
        atoms.push(spec);
    }
    Ok(atoms)
}

pub fn load_registry(path: &Path) -> Result<Vec<AtomSpec>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))?;
    parse_registry(&text)
}

#[derive(Clone, Debug, PartialEq)]
pub enum StateData {
    Vector(DVector<C64>),
    Density(DMatrix<C64>),
}

/// Pure or mixed state over the register, with bit `i` for atom `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    order: Vec<AtomId>,
    data: StateData,
}

impl QuantumState {
    /// All atoms in `g`.
    pub fn ground(atoms: &[AtomSpec]) -> Self {
        let mut v = DVector::zeros(1 << atoms.len());
        v[0] = C64::new(1.0, 0.0);
        QuantumState {
            order: atoms.iter().map(|a| a.id.clone()).collect(),
            data: StateData::Vector(v),
        }
    }

    pub fn from_vector(order: Vec<AtomId>, v: DVector<C64>) -> Result<Self> {
        if v.len() != 1 << order.len() {
            return Err(Error::DimensionMismatch {
                state: v.len(),
                atoms: order.len(),
            });
        }
        Ok(QuantumState {
            order,
            data: StateData::Vector(v),
        })
    }

    pub fn from_density(order: Vec<AtomId>, rho: DMatrix<C64>) -> Result<Self> {
        if rho.nrows() != 1 << order.len() || rho.ncols() != rho.nrows() {
            return Err(Error::DimensionMismatch {
                state: rho.nrows(),
                atoms: order.len(),
            });
        }
        Ok(QuantumState {
            order,
            data: StateData::Density(rho),
        })
    }

    pub fn order(&self) -> &[AtomId] {
        &self.order
    }

    pub fn data(&self) -> &StateData {
        &self.data
    }

    pub fn dimension(&self) -> usize {
        1 << self.order.len()
    }

    pub fn to_density(&self) -> QuantumState {
        match &self.data {
            StateData::Density(_) => self.clone(),
            StateData::Vector(v) => QuantumState {
                order: self.order.clone(),
                data: StateData::Density(v * v.adjoint()),
            },
        }
    }

    /// Norm squared (vector) or trace (density).
    pub fn norm(&self) -> f64 {
        match &self.data {
            StateData::Vector(v) => v.norm_squared(),
            StateData::Density(r) => r.trace().re,
        }
    }

    /// Diagonal of the density operator in the computational basis.
    pub fn probabilities(&self) -> Vec<f64> {
        match &self.data {
            StateData::Vector(v) => v.iter().map(|z| z.norm_sqr()).collect(),
            StateData::Density(r) => (0..r.nrows()).map(|i| r[(i, i)].re).collect(),
        }
    }

    pub fn index_of(&self, id: &AtomId) -> Result<usize> {
        self.order
            .iter()
            .position(|a| a == id)
            .ok_or_else(|| Error::UnknownAtom(id.to_string()))
    }

    /// Rydberg population of one atom.
    pub fn rydberg_population(&self, id: &AtomId) -> Result<f64> {
        let bit = 1usize << self.index_of(id)?;
        Ok(self
            .probabilities()
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, p)| p)
            .sum())
    }

    /// Total population on configurations where two adjacent atoms are in `r`.
    pub fn forbidden_population(&self, masks: &[u64]) -> f64 {
        self.probabilities()
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                masks
                    .iter()
                    .enumerate()
                    .any(|(k, m)| (i >> k) & 1 == 1 && (*i as u64) & m != 0)
            })
            .map(|(_, p)| p)
            .sum()
    }

    /// Appends an atom in `g` as the new highest bit.
    pub fn with_ground_atom(&self, id: AtomId) -> QuantumState {
        let mut order = self.order.clone();
        order.push(id);
        let n = self.dimension();
        let data = match &self.data {
            StateData::Vector(v) => {
                let mut w = DVector::zeros(2 * n);
                w.rows_mut(0, n).copy_from(v);
                StateData::Vector(w)
            }
            StateData::Density(r) => {
                let mut w = DMatrix::zeros(2 * n, 2 * n);
                w.view_mut((0, 0), (n, n)).copy_from(r);
                StateData::Density(w)
            }
        };
        QuantumState { order, data }
    }

    /// Removes an atom that must be in `g`, projecting and renormalising.
    pub fn without_atom(&self, id: &AtomId) -> Result<QuantumState> {
        let k = self.index_of(id)?;
        let pop = self.rydberg_population(id)?;
        if pop > DISENTANGLE_TOL {
            return Err(Error::ResidualRydberg {
                atom: id.to_string(),
                population: pop,
            });
        }
        let keep: Vec<usize> = (0..self.dimension())
            .filter(|i| (i >> k) & 1 == 0)
            .collect();
        let mut order = self.order.clone();
        order.remove(k);
        let data = match &self.data {
            StateData::Vector(v) => {
                let mut w = DVector::from_iterator(keep.len(), keep.iter().map(|&i| v[i]));
                let norm = w.norm();
                if norm == 0.0 {
                    return Err(Error::TotalErasure);
                }
                w /= C64::new(norm, 0.0);
                StateData::Vector(w)
            }
            StateData::Density(r) => {
                let mut w = DMatrix::from_fn(keep.len(), keep.len(), |a, b| r[(keep[a], keep[b])]);
                let tr = w.trace().re;
                if tr <= 0.0 {
                    return Err(Error::TotalErasure);
                }
                w /= C64::new(tr, 0.0);
                StateData::Density(w)
            }
        };
        Ok(QuantumState { order, data })
    }

    fn check_register(&self, atoms: &[AtomSpec]) -> Result<()> {
        if atoms.len() != self.order.len()
            || atoms.iter().zip(&self.order).any(|(a, id)| &a.id != id)
        {
            return Err(Error::DimensionMismatch {
                state: self.dimension(),
                atoms: atoms.len(),
            });
        }
        Ok(())
    }

    /// Applies a diagonal phase `e^{i angle(atom)}` to every `r` component.
    fn apply_diagonal(&mut self, phases: &[(usize, f64)]) {
        let factor = |idx: usize| {
            let total: f64 = phases
                .iter()
                .filter(|(k, _)| (idx >> k) & 1 == 1)
                .map(|(_, a)| a)
                .sum();
            C64::from_polar(1.0, total)
        };
        match &mut self.data {
            StateData::Vector(v) => {
                for (i, z) in v.iter_mut().enumerate() {
                    *z *= factor(i);
                }
            }
            StateData::Density(r) => {
                let f: Vec<C64> = (0..r.nrows()).map(factor).collect();
                for j in 0..r.ncols() {
                    for i in 0..r.nrows() {
                        r[(i, j)] *= f[i] * f[j].conj();
                    }
                }
            }
        }
    }
}

/// One global, species-selective pulse.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GlobalPulseEvent {
    pub pulse: PulseSpec,
}

impl GlobalPulseEvent {
    pub fn target_species(&self) -> Species {
        self.pulse.species
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    /// Exponentiates the blockade-projected Hamiltonian per static block.
    ExactExponential,
    /// Applies per-atom rotations gated on free neighbours.
    DerivedUnitary,
}

/// Linear map on the state space acting block-wise on driven atoms.
struct BlockOperator {
    driven: Vec<usize>,
    /// Keyed by the static part of the basis index.
    blocks: Vec<(usize, std::rc::Rc<DMatrix<C64>>)>,
}

impl BlockOperator {
    fn scatter(&self, local: usize) -> usize {
        self.driven
            .iter()
            .enumerate()
            .fold(0, |acc, (j, &k)| acc | (((local >> j) & 1) << k))
    }

    fn apply_vector(&self, v: &DVector<C64>) -> DVector<C64> {
        let mut out = v.clone();
        let dim = 1 << self.driven.len();
        let offsets: Vec<usize> = (0..dim).map(|x| self.scatter(x)).collect();
        for (base, block) in &self.blocks {
            let local = DVector::from_iterator(dim, offsets.iter().map(|o| v[base | o]));
            let res = block.as_ref() * local;
            for (x, o) in offsets.iter().enumerate() {
                out[base | o] = res[x];
            }
        }
        out
    }

    fn apply_density(&self, r: &DMatrix<C64>) -> DMatrix<C64> {
        // U rho U^dagger computed as (U (U rho)^dagger)^dagger, column by column
        let left = self.apply_columns(r);
        self.apply_columns(&left.adjoint()).adjoint()
    }

    fn apply_columns(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = m.clone();
        for j in 0..m.ncols() {
            let col = self.apply_vector(&m.column(j).into_owned());
            out.set_column(j, &col);
        }
        out
    }
}

fn exp_minus_i_hermitian(h: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
    let eig = h.clone().symmetric_eigen();
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| C64::from_polar(1.0, -e * t)));
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

fn driven_atoms(atoms: &[AtomSpec], species: Species) -> Vec<usize> {
    atoms
        .iter()
        .enumerate()
        .filter(|(_, a)| a.species == species && a.flag == InternalFlag::Active)
        .map(|(i, _)| i)
        .collect()
}

fn exact_operator(atoms: &[AtomSpec], masks: &[u64], pulse: &PulseSpec) -> Result<BlockOperator> {
    let driven = driven_atoms(atoms, pulse.species);
    if driven.len() > MAX_EXACT_DRIVEN {
        return Err(Error::TooManyDrivenAtoms(driven.len()));
    }
    let n = atoms.len();
    let d = driven.len();
    let driven_mask: usize = driven.iter().map(|&k| 1usize << k).sum();
    let sign = if pulse.inverse { -1.0 } else { 1.0 };
    let up = C64::from_polar(1.0, pulse.phase());
    let mut cache: HashMap<u64, std::rc::Rc<DMatrix<C64>>> = HashMap::new();
    let mut blocks = Vec::new();
    for base in 0..(1usize << n) {
        if base & driven_mask != 0 {
            continue;
        }
        // which driven atoms are frozen by a static neighbour in r
        let frozen: u64 = driven
            .iter()
            .enumerate()
            .filter(|(_, &k)| masks[k] & (base as u64) != 0)
            .map(|(j, _)| 1u64 << j)
            .sum();
        let block = cache
            .entry(frozen)
            .or_insert_with(|| {
                let mut h = DMatrix::<C64>::zeros(1 << d, 1 << d);
                for x in 0..(1usize << d) {
                    let full = base | scatter(&driven, x);
                    for (j, &k) in driven.iter().enumerate() {
                        if frozen >> j & 1 == 1 || masks[k] & (full as u64) != 0 {
                            continue;
                        }
                        if x >> j & 1 == 0 {
                            let y = x | 1 << j;
                            let amp = up * (0.5 * atoms[k].kind.rabi_factor());
                            h[(y, x)] += amp;
                            h[(x, y)] += amp.conj();
                        }
                    }
                }
                std::rc::Rc::new(exp_minus_i_hermitian(&h, sign * pulse.area()))
            })
            .clone();
        blocks.push((base, block));
    }
    Ok(BlockOperator { driven, blocks })
}

fn scatter(driven: &[usize], local: usize) -> usize {
    driven
        .iter()
        .enumerate()
        .fold(0, |acc, (j, &k)| acc | (((local >> j) & 1) << k))
}

fn derived_apply_vector(
    v: &DVector<C64>,
    driven: &[(usize, Unitary2)],
    masks: &[u64],
) -> DVector<C64> {
    let mut out = v.clone();
    for (k, u) in driven {
        let bit = 1usize << k;
        for i in 0..out.len() {
            if i & bit != 0 || masks[*k] & (i as u64) != 0 {
                continue;
            }
            let (a, b) = (out[i], out[i | bit]);
            out[i] = u.entry(0, 0) * a + u.entry(0, 1) * b;
            out[i | bit] = u.entry(1, 0) * a + u.entry(1, 1) * b;
        }
    }
    out
}

/// Evolves `state` under one global pulse with blockade projection.
pub fn apply_global_pulse(
    state: &QuantumState,
    event: &GlobalPulseEvent,
    atoms: &[AtomSpec],
    graph: &BlockadeGraph,
    method: Method,
) -> Result<QuantumState> {
    state.check_register(atoms)?;
    let masks = graph.neighbour_masks(atoms);
    let pulse = &event.pulse;
    let data = match method {
        Method::ExactExponential => {
            let op = exact_operator(atoms, &masks, pulse)?;
            match &state.data {
                StateData::Vector(v) => StateData::Vector(op.apply_vector(v)),
                StateData::Density(r) => StateData::Density(op.apply_density(r)),
            }
        }
        Method::DerivedUnitary => {
            let driven = driven_atoms(atoms, pulse.species);
            for (x, &i) in driven.iter().enumerate() {
                for &j in &driven[x + 1..] {
                    if masks[i] >> j & 1 == 1 {
                        return Err(Error::AdjacentDrivenAtoms(
                            atoms[i].id.to_string(),
                            atoms[j].id.to_string(),
                        ));
                    }
                }
            }
            let locals: Vec<(usize, Unitary2)> = driven
                .iter()
                .map(|&k| (k, rotation_scaled(pulse, atoms[k].kind.rabi_factor())))
                .collect();
            match &state.data {
                StateData::Vector(v) => StateData::Vector(derived_apply_vector(v, &locals, &masks)),
                StateData::Density(r) => {
                    let mut left = r.clone();
                    for j in 0..r.ncols() {
                        left.set_column(
                            j,
                            &derived_apply_vector(&r.column(j).into_owned(), &locals, &masks),
                        );
                    }
                    let mut right = left.adjoint();
                    for j in 0..r.ncols() {
                        let col =
                            derived_apply_vector(&right.column(j).into_owned(), &locals, &masks);
                        right.set_column(j, &col);
                    }
                    StateData::Density(right.adjoint())
                }
            }
        }
    };
    Ok(QuantumState {
        order: state.order.clone(),
        data,
    })
}

/// Virtual phase-frame update: `r` of each active atom of `species` picks up
/// `single` or `superatom` depending on its kind.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseFrameEvent {
    pub species: Species,
    pub single: f64,
    pub superatom: f64,
}

pub fn apply_phase_frame(
    state: &QuantumState,
    event: &PhaseFrameEvent,
    atoms: &[AtomSpec],
) -> Result<QuantumState> {
    state.check_register(atoms)?;
    let phases: Vec<(usize, f64)> = atoms
        .iter()
        .enumerate()
        .filter(|(_, a)| a.species == event.species && a.flag == InternalFlag::Active)
        .map(|(k, a)| {
            (
                k,
                if a.kind == AtomKind::Single {
                    event.single
                } else {
                    event.superatom
                },
            )
        })
        .filter(|(_, angle)| *angle != 0.0)
        .collect();
    let mut out = state.clone();
    out.apply_diagonal(&phases);
    Ok(out)
}

/// Outcome probabilities over `g`/`r` strings, one character per atom.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    pub atoms: Vec<AtomId>,
    pub probabilities: BTreeMap<String, f64>,
}

impl Distribution {
    pub fn probability(&self, outcome: &str) -> f64 {
        self.probabilities.get(outcome).copied().unwrap_or(0.0)
    }

    /// Draws `shots` outcomes from a ChaCha stream seeded with `seed`.
    pub fn sample(&self, shots: usize, seed: u64) -> BTreeMap<String, usize> {
        let keys: Vec<&String> = self.probabilities.keys().collect();
        let weights: Vec<f64> = self.probabilities.values().map(|p| p.max(0.0)).collect();
        let mut counts = BTreeMap::new();
        let Ok(dist) = WeightedIndex::new(&weights) else {
            return counts;
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..shots {
            *counts
                .entry(keys[dist.sample(&mut rng)].clone())
                .or_insert(0) += 1;
        }
        counts
    }
}

pub fn measure(state: &QuantumState, atoms: &[AtomId]) -> Result<Distribution> {
    let bits: Vec<usize> = atoms
        .iter()
        .map(|id| state.index_of(id))
        .collect::<Result<_>>()?;
    let mut probabilities = BTreeMap::new();
    for (i, p) in state.probabilities().into_iter().enumerate() {
        let key: String = bits
            .iter()
            .map(|&b| if (i >> b) & 1 == 1 { 'r' } else { 'g' })
            .collect();
        *probabilities.entry(key).or_insert(0.0) += p;
    }
    Ok(Distribution {
        atoms: atoms.to_vec(),
        probabilities,
    })
}

/// Fits the collective Rabi frequency of an `m`-atom fully blockaded ensemble.
///
/// Each atom is simulated individually in the full `2^m` space; the ground
/// state population is fitted to `cos^2(w t / 2)`. The grid must resolve the
/// oscillation (spacing well below half a period).
pub fn collective_rabi_frequency(m: u32, omega: f64, grid: &[f64]) -> Result<f64> {
    if !(1..=6).contains(&m) {
        return Err(Error::EnsembleSize(m));
    }
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "omega {omega} must be positive"
        )));
    }
    if grid.len() < 2 || grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidParameter(
            "duration grid needs two or more non-negative times".into(),
        ));
    }
    let atoms: Vec<AtomSpec> = (0..m)
        .map(|k| {
            let angle = std::f64::consts::TAU * k as f64 / m as f64;
            AtomSpec::new(
                format!("e{k}"),
                Species::A,
                AtomKind::Single,
                [angle.cos(), angle.sin()],
            )
        })
        .collect();
    let graph = build_blockade_graph(&atoms, &BlockadeRadii::default())?;
    let start = QuantumState::ground(&atoms);
    let mut excited = Vec::with_capacity(grid.len());
    for &t in grid {
        let pulse = PulseSpec::new(Species::A, omega * t, 0.0)?;
        let s = apply_global_pulse(
            &start,
            &GlobalPulseEvent { pulse },
            &atoms,
            &graph,
            Method::ExactExponential,
        )?;
        excited.push(1.0 - s.probabilities()[0]);
    }
    Ok(fit_rabi(grid, &excited))
}

fn rabi_residual(grid: &[f64], pop: &[f64], w: f64) -> f64 {
    grid.iter()
        .zip(pop)
        .map(|(t, p)| (p - (w * t / 2.0).sin().powi(2)).powi(2))
        .sum()
}

/// Least-squares fit of `sin^2(w t / 2)`: coarse scan, then Gauss-Newton.
fn fit_rabi(grid: &[f64], pop: &[f64]) -> f64 {
    let dt = grid
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .filter(|d| *d > 0.0)
        .fold(f64::INFINITY, f64::min);
    let w_max = std::f64::consts::PI / dt;
    let steps = 4000;
    let mut w = (1..=steps)
        .map(|k| w_max * k as f64 / steps as f64)
        .min_by(|a, b| rabi_residual(grid, pop, *a).total_cmp(&rabi_residual(grid, pop, *b)))
        .unwrap_or(w_max);
    for _ in 0..50 {
        let (mut jtj, mut jtr) = (0.0, 0.0);
        for (t, p) in grid.iter().zip(pop) {
            let model = (w * t / 2.0).sin().powi(2);
            let deriv = 0.5 * t * (w * t).sin();
            jtj += deriv * deriv;
            jtr += deriv * (p - model);
        }
        if jtj == 0.0 {
            break;
        }
        let step = jtr / jtj;
        w += step;
        if step.abs() <= 1e-15 * w.abs() {
            break;
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pulse(species: Species, area: f64, phase: f64) -> GlobalPulseEvent {
        GlobalPulseEvent {
            pulse: PulseSpec::new(species, area, phase).unwrap(),
        }
    }

    fn pair() -> Vec<AtomSpec> {
        vec![
            AtomSpec::new("a", Species::A, AtomKind::Single, [0.0, 0.0]),
            AtomSpec::new("b", Species::B, AtomKind::Single, [0.0, 3.0]),
        ]
    }

    #[test]
    fn graph_edges_follow_distance() {
        let r = BlockadeRadii::default();
        let g = build_blockade_graph(&pair(), &r).unwrap();
        assert_eq!(g.len(), 1);
        let far = vec![
            AtomSpec::new("a", Species::A, AtomKind::Single, [0.0, 0.0]),
            AtomSpec::new("b", Species::A, AtomKind::Single, [8.0, 0.0]),
        ];
        assert!(build_blockade_graph(&far, &r).unwrap().is_empty());
    }

    #[test]
    fn graph_rejects_bad_registers() {
        let r = BlockadeRadii::default();
        let dup = vec![
            AtomSpec::new("a", Species::A, AtomKind::Single, [0.0, 0.0]),
            AtomSpec::new("a", Species::A, AtomKind::Single, [1.0, 0.0]),
        ];
        assert!(matches!(
            build_blockade_graph(&dup, &r),
            Err(Error::DuplicateAtom(_))
        ));
        let same = vec![
            AtomSpec::new("a", Species::A, AtomKind::Single, [0.0, 0.0]),
            AtomSpec::new("b", Species::B, AtomKind::Single, [0.0, 0.0]),
        ];
        assert!(matches!(
            build_blockade_graph(&same, &r),
            Err(Error::CoincidentAtoms(..))
        ));
        let small = vec![AtomSpec::new(
            "s",
            Species::A,
            AtomKind::Superatom(1),
            [0.0, 0.0],
        )];
        assert!(build_blockade_graph(&small, &r).is_err());
    }

    #[test]
    fn registry_parsing() {
        let text = "# id species kind M x y\nd0 A superatom 4 0 0\nx0, B, single, 1, 0, 3\n";
        let atoms = parse_registry(text).unwrap();
        assert_eq!(atoms.len(), 2);
        assert_eq!(atoms[0].kind, AtomKind::Superatom(4));
        assert_eq!(atoms[1].position, [0.0, 3.0]);
        let err = parse_registry("d0 A single 1 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn single_pi_pulse_excites() {
        let atoms = vec![AtomSpec::new("a", Species::A, AtomKind::Single, [0.0, 0.0])];
        let g = build_blockade_graph(&atoms, &BlockadeRadii::default()).unwrap();
        let s = QuantumState::ground(&atoms);
        let out = apply_global_pulse(
            &s,
            &pulse(Species::A, PI, 0.0),
            &atoms,
            &g,
            Method::ExactExponential,
        )
        .unwrap();
        let StateData::Vector(v) = out.data() else {
            panic!()
        };
        assert!((v[1] - c(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn blockaded_aux_is_frozen() {
        let atoms = pair();
        let g = build_blockade_graph(&atoms, &BlockadeRadii::default()).unwrap();
        let mut v = DVector::zeros(4);
        v[1] = c(1.0, 0.0); // a in r, b in g
        let s = QuantumState::from_vector(vec!["a".into(), "b".into()], v.clone()).unwrap();
        for method in [Method::ExactExponential, Method::DerivedUnitary] {
            let out =
                apply_global_pulse(&s, &pulse(Species::B, PI, 0.0), &atoms, &g, method).unwrap();
            assert_eq!(out.data(), &StateData::Vector(v.clone()));
        }
    }

    #[test]
    fn information_flows_to_aux() {
        let atoms = pair();
        let g = build_blockade_graph(&atoms, &BlockadeRadii::default()).unwrap();
        let (alpha, beta) = (c(0.6, 0.0), c(0.0, 0.8));
        let mut v = DVector::zeros(4);
        v[0] = alpha;
        v[1] = beta;
        let s = QuantumState::from_vector(vec!["a".into(), "b".into()], v).unwrap();
        // exact X = P(pi/2) U(pi, 0) P(pi/2)
        let frame = |sp: Species, s: &QuantumState| {
            apply_phase_frame(
                s,
                &PhaseFrameEvent {
                    species: sp,
                    single: PI / 2.0,
                    superatom: 0.0,
                },
                &atoms,
            )
            .unwrap()
        };
        // operator order X_A X_B: the aux pulse fires first
        let mut s = s;
        for sp in [Species::B, Species::A] {
            s = frame(sp, &s);
            s = apply_global_pulse(
                &s,
                &pulse(sp, PI, 0.0),
                &atoms,
                &g,
                Method::ExactExponential,
            )
            .unwrap();
            s = frame(sp, &s);
        }
        let StateData::Vector(v) = s.data() else {
            panic!()
        };
        // |g_A>(beta |g_B> + alpha |r_B>)
        assert!((v[0] - beta).norm() < 1e-12, "{v}");
        assert!((v[2] - alpha).norm() < 1e-12, "{v}");
        assert!(v[1].norm() < 1e-12 && v[3].norm() < 1e-12);
    }

    #[test]
    fn derived_rejects_adjacent_driven() {
        let atoms = vec![
            AtomSpec::new("a", Species::A, AtomKind::Single, [0.0, 0.0]),
            AtomSpec::new("b", Species::A, AtomKind::Single, [1.0, 0.0]),
        ];
        let g = build_blockade_graph(&atoms, &BlockadeRadii::default()).unwrap();
        let s = QuantumState::ground(&atoms);
        let res = apply_global_pulse(
            &s,
            &pulse(Species::A, PI, 0.0),
            &atoms,
            &g,
            Method::DerivedUnitary,
        );
        assert!(matches!(res, Err(Error::AdjacentDrivenAtoms(..))));
    }

    #[test]
    fn register_mismatch_rejected() {
        let atoms = pair();
        let g = build_blockade_graph(&atoms, &BlockadeRadii::default()).unwrap();
        let s = QuantumState::ground(&atoms[..1]);
        let res = apply_global_pulse(
            &s,
            &pulse(Species::A, PI, 0.0),
            &atoms,
            &g,
            Method::ExactExponential,
        );
        assert!(matches!(res, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn parked_atoms_ignore_pulses() {
        let mut atoms = pair();
        atoms[0].flag = InternalFlag::Parked;
        let g = build_blockade_graph(&atoms, &BlockadeRadii::default()).unwrap();
        let s = QuantumState::ground(&atoms);
        let out = apply_global_pulse(
            &s,
            &pulse(Species::A, PI, 0.0),
            &atoms,
            &g,
            Method::ExactExponential,
        )
        .unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn measurement_marginals() {
        let atoms = pair();
        let mut v = DVector::zeros(4);
        v[0] = c(FRAC_1_SQRT_2, 0.0);
        v[1] = c(FRAC_1_SQRT_2, 0.0);
        let s = QuantumState::from_vector(vec!["a".into(), "b".into()], v).unwrap();
        let d = measure(&s, &[atoms[0].id.clone()]).unwrap();
        assert!((d.probability("g") - 0.5).abs() < 1e-12);
        assert!((d.probability("r") - 0.5).abs() < 1e-12);
        let d = measure(&s, &[atoms[1].id.clone()]).unwrap();
        assert!((d.probability("g") - 1.0).abs() < 1e-12);
        assert!(measure(&s, &["zz".into()]).is_err());
        let counts = d.sample(100, 7);
        assert_eq!(counts.get("g"), Some(&100));
        let both = measure(&s, &[atoms[0].id.clone(), atoms[1].id.clone()]).unwrap();
        assert_eq!(both.sample(50, 3), both.sample(50, 3));
    }

    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn removing_excited_atom_fails() {
        let atoms = pair();
        let mut v = DVector::zeros(4);
        v[1] = c(1.0, 0.0);
        let s = QuantumState::from_vector(atoms.iter().map(|a| a.id.clone()).collect(), v).unwrap();
        assert!(matches!(
            s.without_atom(&atoms[0].id),
            Err(Error::ResidualRydberg { .. })
        ));
        let t = s.without_atom(&atoms[1].id).unwrap();
        assert_eq!(t.order().len(), 1);
        let back = t.with_ground_atom("b".into());
        assert_eq!(back, s);
    }

    #[test]
    fn collective_frequency_scaling() {
        let grid: Vec<f64> = (0..200).map(|k| k as f64 * 0.01).collect();
        for m in 1..=6u32 {
            let w = collective_rabi_frequency(m, 2.0, &grid).unwrap();
            let expect = 2.0 * (m as f64).sqrt();
            assert!(
                ((w - expect) / expect).abs() < 1e-6,
                "m = {m}: {w} vs {expect}"
            );
        }
        assert!(matches!(
            collective_rabi_frequency(7, 1.0, &grid),
            Err(Error::EnsembleSize(7))
        ));
        assert!(matches!(
            collective_rabi_frequency(0, 1.0, &grid),
            Err(Error::EnsembleSize(0))
        ));
    }
}
