//! Wire cutting with quasi-probability reconstruction.
//!
//! A cut replaces the identity channel on one wire by
//!
//! ```text
//! ρ ↦ ½ Σ_{M ∈ {I,X,Y,Z}} Tr(M ρ) M
//! ```
//!
//! and each `M/2` is written as a signed combination of the four preparations
//! `|0⟩, |1⟩, |+⟩, |+i⟩`:
//!
//! | measured | `|0⟩` | `|1⟩` | `|+⟩` | `|+i⟩` |
//! |----------|-------|-------|-------|--------|
//! | I        | ½     | ½     |       |        |
//! | Z        | ½     | −½    |       |        |
//! | X        | −½    | −½    | 1     |        |
//! | Y        | −½    | −½    |       | 1      |
//!
//! Upstream stubs are measured in the X, Y or Z basis (I reuses the Z data),
//! so one cut costs three measurement variants upstream and four preparation
//! variants downstream.
//!
//! Fragments are built symbolically: their circuits keep the symbols of the
//! cut circuit and are bound at execution time, so a plan can be reused
//! across many parameter values.

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::pauli::{Hamiltonian, Pauli};
use crate::seed::derive_seed;
use crate::simulator::{sample_histogram, NoiseConfig, StateVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

/// Default limit on the number of cuts in one plan.
pub const DEFAULT_MAX_CUTS: usize = 3;

/// Cut on `wire` right after gate `position` of the circuit's gate list:
/// gates on the wire with index `<= position` are upstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CutPoint {
    pub wire: usize,
    pub position: usize,
}

impl CutPoint {
    pub fn new(wire: usize, position: usize) -> Self {
        Self { wire, position }
    }
}

/// Single-qubit states prepared on downstream stubs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PrepState {
    Zero,
    One,
    Plus,
    PlusI,
}

impl PrepState {
    pub const ALL: [PrepState; 4] = [PrepState::Zero, PrepState::One, PrepState::Plus, PrepState::PlusI];

    fn circuit_on(self, c: &mut Circuit, w: usize) {
        match self {
            PrepState::Zero => {}
            PrepState::One => {
                c.x(w);
            }
            PrepState::Plus => {
                c.h(w);
            }
            PrepState::PlusI => {
                c.h(w).s(w);
            }
        }
    }
}

/// Eigenstates appearing in the canonical (ungrouped) expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Eigenstate {
    Zero,
    One,
    Plus,
    Minus,
    PlusI,
    MinusI,
}

/// One term `(O, λ, |ψ_λ⟩)` of the canonical expansion with weight `λ/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QpdTerm {
    pub observable: Pauli,
    pub eigenvalue: i8,
    pub weight: f64,
    pub prep_state: Eigenstate,
}

/// The eight canonical terms: for `O ∈ {I, X, Y, Z}` and each eigenvalue
/// `λ`, measure `O`, weight `λ/2`, prepare the `λ`-eigenstate. The identity
/// uses the `|0⟩, |1⟩` resolution.
pub fn canonical_terms() -> Vec<QpdTerm> {
    use Eigenstate::*;
    let rows = [
        (Pauli::I, 1, Zero),
        (Pauli::I, 1, One),
        (Pauli::X, 1, Plus),
        (Pauli::X, -1, Minus),
        (Pauli::Y, 1, PlusI),
        (Pauli::Y, -1, MinusI),
        (Pauli::Z, 1, Zero),
        (Pauli::Z, -1, One),
    ];
    rows.iter()
        .map(|&(observable, eigenvalue, prep_state)| QpdTerm {
            observable,
            eigenvalue,
            weight: eigenvalue as f64 / 2.0,
            prep_state,
        })
        .collect()
}

/// Grouped per-cut coefficients `(measured operator, preparation, weight)`.
pub fn grouped_terms() -> [(Pauli, PrepState, f64); 10] {
    use PrepState::*;
    [
        (Pauli::I, Zero, 0.5),
        (Pauli::I, One, 0.5),
        (Pauli::X, Plus, 1.0),
        (Pauli::X, Zero, -0.5),
        (Pauli::X, One, -0.5),
        (Pauli::Y, PlusI, 1.0),
        (Pauli::Y, Zero, -0.5),
        (Pauli::Y, One, -0.5),
        (Pauli::Z, Zero, 0.5),
        (Pauli::Z, One, -0.5),
    ]
}

/// Shot-count multiplier for `k` cuts at fixed estimator variance.
pub fn overhead(k: u32) -> u64 {
    16u64.pow(k)
}

/// Single-wire factor of a product observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LocalOp {
    I,
    X,
    Y,
    Z,
    /// `|0⟩⟨0|`
    Proj0,
}

impl LocalOp {
    fn from_pauli(p: Pauli) -> Self {
        match p {
            Pauli::I => LocalOp::I,
            Pauli::X => LocalOp::X,
            Pauli::Y => LocalOp::Y,
            Pauli::Z => LocalOp::Z,
        }
    }

    /// Basis in which the operator is diagonal.
    fn basis(self) -> Pauli {
        match self {
            LocalOp::X => Pauli::X,
            LocalOp::Y => Pauli::Y,
            _ => Pauli::Z,
        }
    }

    /// Value on a measured bit in the operator's basis.
    fn eigen(self, bit: usize) -> f64 {
        match self {
            LocalOp::I => 1.0,
            LocalOp::Proj0 => (bit == 0) as u8 as f64,
            _ => 1.0 - 2.0 * bit as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductTerm {
    pub coeff: f64,
    pub ops: Vec<LocalOp>,
}

/// Observable of the uncut circuit, a weighted sum of product operators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    pub n_qubits: usize,
    pub terms: Vec<ProductTerm>,
}

impl Observable {
    /// `|0…0⟩⟨0…0|`.
    pub fn all_zeros(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            terms: vec![ProductTerm {
                coeff: 1.0,
                ops: vec![LocalOp::Proj0; n_qubits],
            }],
        }
    }

    /// `(1/n) Σ_j |0⟩⟨0|_j`.
    pub fn mean_local_zeros(n_qubits: usize) -> Self {
        let terms = (0..n_qubits)
            .map(|j| {
                let mut ops = vec![LocalOp::I; n_qubits];
                ops[j] = LocalOp::Proj0;
                ProductTerm {
                    coeff: 1.0 / n_qubits as f64,
                    ops,
                }
            })
            .collect();
        Self { n_qubits, terms }
    }

    /// Exact value on a state of the same width.
    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        if state.n_qubits() != self.n_qubits {
            return Err(Error::WidthMismatch {
                expected: self.n_qubits,
                found: state.n_qubits(),
            });
        }
        let all: Vec<usize> = (0..self.n_qubits).collect();
        Ok(self
            .terms
            .iter()
            .map(|t| {
                let ops: Vec<(usize, LocalOp)> = all.iter().map(|&w| (w, t.ops[w])).collect();
                t.coeff * product_expectation(state, &ops)
            })
            .sum())
    }
}

impl From<&Hamiltonian> for Observable {
    fn from(h: &Hamiltonian) -> Self {
        Observable {
            n_qubits: h.n_qubits(),
            terms: h
                .terms()
                .iter()
                .map(|t| ProductTerm {
                    coeff: t.coeff,
                    ops: t.paulis().iter().map(|&p| LocalOp::from_pauli(p)).collect(),
                })
                .collect(),
        }
    }
}

/// `⟨ψ| ⊗_w op_w |ψ⟩` for operators on distinct wires.
pub fn product_expectation(state: &StateVector, ops: &[(usize, LocalOp)]) -> f64 {
    let (mut x, mut z, mut proj) = (0usize, 0usize, 0usize);
    for &(w, op) in ops {
        match op {
            LocalOp::I => {}
            LocalOp::X => x |= 1 << w,
            LocalOp::Z => z |= 1 << w,
            LocalOp::Y => {
                x |= 1 << w;
                z |= 1 << w;
            }
            LocalOp::Proj0 => proj |= 1 << w,
        }
    }
    let amps = state.amplitudes();
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, a) in amps.iter().enumerate() {
        if i & proj != 0 {
            continue;
        }
        let sign = if (i & z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        acc += amps[i ^ x].conj() * a * sign;
    }
    let phase = match (x & z).count_ones() % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::i(),
        2 => Complex64::new(-1.0, 0.0),
        _ => -Complex64::i(),
    };
    (phase * acc).re
}

/// A stub where a cut wire enters or leaves a fragment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stub {
    pub cut: usize,
    pub local_wire: usize,
}

/// Independently executable piece of a cut circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fragment {
    pub id: usize,
    /// Gates on local wires, without stub preparations or basis changes.
    pub circuit: Circuit,
    /// `(original wire, segment index)` of each local wire.
    pub wire_map: Vec<(usize, usize)>,
    /// Downstream ends of cuts, prepared at the start.
    pub prep_stubs: Vec<Stub>,
    /// Upstream ends of cuts, measured at the end.
    pub meas_stubs: Vec<Stub>,
    /// `(original wire, local wire)` for wires whose final segment lives here.
    pub outputs: Vec<(usize, usize)>,
}

impl Fragment {
    pub fn width(&self) -> usize {
        self.wire_map.len()
    }

    /// Number of preparation assignments, `4^(prep stubs)`.
    pub fn prep_variants(&self) -> usize {
        4usize.pow(self.prep_stubs.len() as u32)
    }

    /// Number of measurement-basis assignments, `3^(measured stubs)`.
    pub fn meas_variants(&self) -> usize {
        3usize.pow(self.meas_stubs.len() as u32)
    }

    fn op_settings(&self) -> usize {
        4usize.pow(self.meas_stubs.len() as u32)
    }

    /// Executable circuit for one variant: preparations, gates, then basis
    /// changes on measured stubs and on outputs.
    pub fn variant_circuit(
        &self,
        preps: &[PrepState],
        meas: &[Pauli],
        output_bases: &[Pauli],
    ) -> Result<Circuit> {
        if preps.len() != self.prep_stubs.len()
            || meas.len() != self.meas_stubs.len()
            || output_bases.len() != self.outputs.len()
        {
            return Err(Error::InvalidInput("variant setting does not match fragment stubs".into()));
        }
        let mut c = Circuit::new(self.width());
        for (stub, p) in self.prep_stubs.iter().zip(preps) {
            p.circuit_on(&mut c, stub.local_wire);
        }
        let mut c = c.compose(&self.circuit)?;
        let measured = self
            .meas_stubs
            .iter()
            .map(|s| s.local_wire)
            .zip(meas.iter().copied())
            .chain(self.outputs.iter().map(|o| o.1).zip(output_bases.iter().copied()));
        for (w, basis) in measured {
            match basis {
                Pauli::X => {
                    c.h(w);
                }
                Pauli::Y => {
                    c.sdg(w).h(w);
                }
                _ => {}
            }
        }
        Ok(c)
    }
}

/// One assignment of grouped coefficients to every cut.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanTerm {
    pub coefficient: f64,
    pub settings: Vec<(Pauli, PrepState)>,
}

/// Fragments of a cut circuit and the table that recombines their results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionPlan {
    pub n_qubits: usize,
    pub cuts: Vec<CutPoint>,
    pub fragments: Vec<Fragment>,
    pub terms: Vec<PlanTerm>,
    /// Fragment holding the upstream and downstream end of each cut.
    pub cut_ends: Vec<(usize, usize)>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut a: usize) -> usize {
        while self.0[a] != a {
            self.0[a] = self.0[self.0[a]];
            a = self.0[a];
        }
        a
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Wire segments and their grouping into fragments.
struct Partition {
    /// First segment id of each wire.
    offset: Vec<usize>,
    /// Sorted cut positions per wire, with the index of the cut.
    cuts_on: Vec<Vec<(usize, usize)>>,
    /// Fragment id of each segment.
    fragment_of: Vec<usize>,
    n_fragments: usize,
}

impl Partition {
    fn build(c: &Circuit, cuts: &[CutPoint]) -> Result<Partition> {
        let n = c.n_qubits();
        let mut cuts_on: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (ci, cut) in cuts.iter().enumerate() {
            if cut.wire >= n || cut.position >= c.len() {
                return Err(Error::CutOutOfRange {
                    wire: cut.wire,
                    position: cut.position,
                });
            }
            cuts_on[cut.wire].push((cut.position, ci));
        }
        for list in &mut cuts_on {
            list.sort();
            if list.windows(2).any(|p| p[0].0 == p[1].0) {
                return Err(Error::InvalidCut("duplicate cut".into()));
            }
        }
        let mut offset = Vec::with_capacity(n);
        let mut total = 0;
        for list in &cuts_on {
            offset.push(total);
            total += list.len() + 1;
        }
        let mut part = Partition {
            offset,
            cuts_on,
            fragment_of: Vec::new(),
            n_fragments: 0,
        };
        let mut uf = UnionFind((0..total).collect());
        for (gi, g) in c.gates().iter().enumerate() {
            if g.wires.len() == 2 {
                uf.union(part.segment(g.wires[0], gi), part.segment(g.wires[1], gi));
            }
        }
        // number fragments by their smallest segment
        let mut id_of_root = HashMap::new();
        part.fragment_of = (0..total)
            .map(|s| {
                let r = uf.find(s);
                let next = id_of_root.len();
                *id_of_root.entry(r).or_insert(next)
            })
            .collect();
        part.n_fragments = id_of_root.len();
        Ok(part)
    }

    fn segment(&self, wire: usize, gate: usize) -> usize {
        self.offset[wire] + self.cuts_on[wire].partition_point(|&(p, _)| p < gate)
    }

    /// Upstream and downstream segment of cut `ci`.
    fn cut_segments(&self, cut: &CutPoint, ci: usize) -> (usize, usize) {
        let rank = self.cuts_on[cut.wire]
            .iter()
            .position(|&(_, i)| i == ci)
            .expect("cut registered on its wire");
        let up = self.offset[cut.wire] + rank;
        (up, up + 1)
    }

    fn widths(&self) -> Vec<usize> {
        let mut w = vec![0; self.n_fragments];
        for &f in &self.fragment_of {
            w[f] += 1;
        }
        w
    }

    fn separated(&self, cuts: &[CutPoint]) -> bool {
        cuts.iter().enumerate().all(|(ci, cut)| {
            let (up, down) = self.cut_segments(cut, ci);
            self.fragment_of[up] != self.fragment_of[down]
        })
    }
}

/// True iff the cuts split their wires into different fragments and every
/// fragment has at most `max_width` wires.
pub fn validate_cuts(c: &Circuit, cuts: &[CutPoint], max_width: usize) -> Result<bool> {
    let part = Partition::build(c, cuts)?;
    Ok(part.separated(cuts) && part.widths().into_iter().all(|w| w <= max_width))
}

/// [`validate_cuts`] for a single cut.
pub fn validate_cut(c: &Circuit, cut: CutPoint, max_width: usize) -> Result<bool> {
    validate_cuts(c, &[cut], max_width)
}

/// Widths of the fragments the cuts would produce.
pub fn fragment_widths(c: &Circuit, cuts: &[CutPoint]) -> Result<Vec<usize>> {
    Ok(Partition::build(c, cuts)?.widths())
}

/// Cheapest cut set for `c`: the fewest cuts (at most `max_cuts`) whose
/// fragments all fit in `max_width` wires, breaking ties by the smallest
/// widest fragment and then lexicographically. `None` if no such set exists
/// or the search space exceeds a few million candidate sets.
///
/// Only cuts next to two-qubit gates are considered; moving a cut across
/// single-qubit gates never changes the fragment structure.
pub fn find_cuts(c: &Circuit, max_cuts: usize, max_width: usize) -> Result<Option<Vec<CutPoint>>> {
    const SEARCH_LIMIT: u128 = 4_000_000;
    let mut candidates = Vec::new();
    for w in 0..c.n_qubits() {
        let touching: Vec<usize> = c
            .gates()
            .iter()
            .enumerate()
            .filter(|(_, g)| g.wires.len() == 2 && g.wires.contains(&w))
            .map(|(i, _)| i)
            .collect();
        if let Some(&first) = touching.first() {
            if first > 0 {
                candidates.push(CutPoint::new(w, first - 1));
            }
        }
        candidates.extend(touching.iter().map(|&g| CutPoint::new(w, g)));
    }
    let m = candidates.len();
    for k in 0..=max_cuts.min(m) {
        let combos: u128 = (0..k as u128).fold(1, |acc, i| acc * (m as u128 - i) / (i + 1));
        if combos > SEARCH_LIMIT {
            break;
        }
        let mut best: Option<(usize, Vec<CutPoint>)> = None;
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            let cuts: Vec<CutPoint> = idx.iter().map(|&i| candidates[i]).collect();
            let distinct = cuts.windows(2).all(|p| p[0] != p[1]);
            if distinct {
                let part = Partition::build(c, &cuts)?;
                if part.separated(&cuts) {
                    let widest = part.widths().into_iter().max().unwrap_or(0);
                    if widest <= max_width && best.as_ref().is_none_or(|b| widest < b.0) {
                        best = Some((widest, cuts));
                    }
                }
            }
            // next k-combination in lexicographic order
            let mut i = k;
            while i > 0 && idx[i - 1] == m - k + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
        if let Some((_, cuts)) = best {
            return Ok(Some(cuts));
        }
    }
    Ok(None)
}

/// Splits `c` at `cuts` with the default cut limit.
pub fn decompose(c: &Circuit, cuts: &[CutPoint]) -> Result<ReconstructionPlan> {
    decompose_with_limit(c, cuts, DEFAULT_MAX_CUTS)
}

pub fn decompose_with_limit(c: &Circuit, cuts: &[CutPoint], max_cuts: usize) -> Result<ReconstructionPlan> {
    if cuts.len() > max_cuts {
        return Err(Error::TooManyCuts {
            count: cuts.len(),
            limit: max_cuts,
        });
    }
    let part = Partition::build(c, cuts)?;
    if !part.separated(cuts) {
        return Err(Error::InvalidCut(
            "a cut does not separate its wire into different fragments".into(),
        ));
    }

    // local wire numbering: segments of a fragment in ascending id order
    let mut local_of = vec![0usize; part.fragment_of.len()];
    let mut wire_maps: Vec<Vec<(usize, usize)>> = vec![Vec::new(); part.n_fragments];
    for w in 0..c.n_qubits() {
        for s in 0..=part.cuts_on[w].len() {
            let seg = part.offset[w] + s;
            let f = part.fragment_of[seg];
            local_of[seg] = wire_maps[f].len();
            wire_maps[f].push((w, s));
        }
    }

    let mut gate_lists: Vec<Vec<usize>> = vec![Vec::new(); part.n_fragments];
    for (gi, g) in c.gates().iter().enumerate() {
        gate_lists[part.fragment_of[part.segment(g.wires[0], gi)]].push(gi);
    }

    let mut fragments: Vec<Fragment> = (0..part.n_fragments)
        .map(|f| Fragment {
            id: f,
            circuit: c.extract(wire_maps[f].len(), &gate_lists[f], |gi, w| local_of[part.segment(w, gi)]),
            wire_map: wire_maps[f].clone(),
            prep_stubs: Vec::new(),
            meas_stubs: Vec::new(),
            outputs: Vec::new(),
        })
        .collect();

    let mut cut_ends = Vec::with_capacity(cuts.len());
    for (ci, cut) in cuts.iter().enumerate() {
        let (up, down) = part.cut_segments(cut, ci);
        let (fu, fd) = (part.fragment_of[up], part.fragment_of[down]);
        fragments[fu].meas_stubs.push(Stub {
            cut: ci,
            local_wire: local_of[up],
        });
        fragments[fd].prep_stubs.push(Stub {
            cut: ci,
            local_wire: local_of[down],
        });
        cut_ends.push((fu, fd));
    }
    for w in 0..c.n_qubits() {
        let last = part.offset[w] + part.cuts_on[w].len();
        fragments[part.fragment_of[last]].outputs.push((w, local_of[last]));
    }

    let grouped = grouped_terms();
    let mut terms = Vec::with_capacity(10usize.pow(cuts.len() as u32));
    for mut code in 0..10usize.pow(cuts.len() as u32) {
        let mut coefficient = 1.0;
        let mut settings = Vec::with_capacity(cuts.len());
        for _ in 0..cuts.len() {
            let (m, p, w) = grouped[code % 10];
            code /= 10;
            coefficient *= w;
            settings.push((m, p));
        }
        terms.push(PlanTerm {
            coefficient,
            settings,
        });
    }

    Ok(ReconstructionPlan {
        n_qubits: c.n_qubits(),
        cuts: cuts.to_vec(),
        fragments,
        terms,
        cut_ends,
    })
}

fn prep_code(p: PrepState) -> usize {
    p as usize
}

fn op_code(p: Pauli) -> usize {
    match p {
        Pauli::I => 0,
        Pauli::X => 1,
        Pauli::Y => 2,
        Pauli::Z => 3,
    }
}

const OPS: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
const BASES: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

fn digits(mut code: usize, base: usize, len: usize) -> Vec<usize> {
    (0..len)
        .map(|_| {
            let d = code % base;
            code /= base;
            d
        })
        .collect()
}

/// How fragment expectations are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExecMode {
    /// Noiseless statevector expectations.
    Exact,
    /// `shots` per executed variant; seeds derived per variant from `seed`.
    Shots { shots: u64, seed: u64, noise: NoiseConfig },
}

/// Observable restricted to one fragment's outputs.
#[derive(Debug, Clone)]
struct FragmentObservable {
    /// Per observable term: operators on this fragment's output local wires.
    ops: Vec<Vec<(usize, LocalOp)>>,
    /// Distinct measurement bases on the outputs, one per pattern.
    patterns: Vec<Vec<Pauli>>,
    pattern_of_term: Vec<usize>,
}

impl FragmentObservable {
    fn new(fragment: &Fragment, obs: &Observable) -> Self {
        let mut patterns: Vec<Vec<Pauli>> = Vec::new();
        let mut pattern_of_term = Vec::with_capacity(obs.terms.len());
        let mut ops = Vec::with_capacity(obs.terms.len());
        for t in &obs.terms {
            let local: Vec<(usize, LocalOp)> = fragment.outputs.iter().map(|&(w, lw)| (lw, t.ops[w])).collect();
            let basis: Vec<Pauli> = local.iter().map(|(_, op)| op.basis()).collect();
            let pi = match patterns.iter().position(|p| *p == basis) {
                Some(i) => i,
                None => {
                    patterns.push(basis);
                    patterns.len() - 1
                }
            };
            pattern_of_term.push(pi);
            ops.push(local);
        }
        Self {
            ops,
            patterns,
            pattern_of_term,
        }
    }
}

/// Execution results of one fragment.
///
/// `values[(prep * op_settings + op) * n_terms + term]` is the fragment's
/// expectation of the measured-stub operators times the observable term's
/// factors on its outputs, for a preparation assignment `prep` (base 4 per
/// prep stub) and operator assignment `op` (base 4 over `I, X, Y, Z` per
/// measured stub).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FragmentResult {
    pub fragment: usize,
    pub values: Vec<f64>,
    /// Histogram of every executed variant in shot mode, keyed by
    /// `(prep, basis assignment, pattern)`.
    #[serde(skip)]
    pub histograms: Option<BTreeMap<(usize, usize, usize), Vec<u64>>>,
    pub variants_executed: u64,
    pub shots_used: u64,
}

impl FragmentResult {
    /// Sinusoidal interpolation of a result that depends on one rotation
    /// angle, from values at the current angle and at `±π/2`, moved by
    /// `delta`.
    pub fn interpolate(at: &Self, plus: &Self, minus: &Self, delta: f64) -> Self {
        let (cd, sd) = (delta.cos(), delta.sin());
        let values = at
            .values
            .iter()
            .zip(&plus.values)
            .zip(&minus.values)
            .map(|((&v0, &vp), &vm)| {
                let c = 0.5 * (vp + vm);
                let a = v0 - c;
                let b = 0.5 * (vm - vp);
                c + a * cd - b * sd
            })
            .collect();
        Self {
            fragment: at.fragment,
            values,
            histograms: None,
            variants_executed: 0,
            shots_used: 0,
        }
    }
}

/// Runs every variant of one fragment with its symbols bound from `params`.
pub fn execute_fragment(
    plan: &ReconstructionPlan,
    fragment: usize,
    obs: &Observable,
    params: &HashMap<String, f64>,
    mode: &ExecMode,
) -> Result<FragmentResult> {
    if obs.n_qubits != plan.n_qubits {
        return Err(Error::WidthMismatch {
            expected: plan.n_qubits,
            found: obs.n_qubits,
        });
    }
    let frag = plan
        .fragments
        .get(fragment)
        .ok_or_else(|| Error::InvalidInput(format!("no fragment {fragment}")))?;
    let bound = frag.circuit.bind_partial(params);
    bound.ensure_bound()?;
    let frag = Fragment {
        circuit: bound,
        ..frag.clone()
    };
    let fobs = FragmentObservable::new(&frag, obs);
    let n_terms = obs.terms.len();
    let n_ops = frag.op_settings();
    let n_prep = frag.prep_variants();
    let n_meas = frag.meas_stubs.len();
    let n_variants = (n_prep * frag.meas_variants() * fobs.patterns.len()) as u64;

    match mode {
        ExecMode::Exact => {
            let blocks: Vec<Vec<f64>> = (0..n_prep)
                .into_par_iter()
                .map(|p| -> Result<Vec<f64>> {
                    let preps: Vec<PrepState> = digits(p, 4, frag.prep_stubs.len())
                        .into_iter()
                        .map(|d| PrepState::ALL[d])
                        .collect();
                    let zb = vec![Pauli::Z; frag.outputs.len()];
                    let meas_z = vec![Pauli::Z; n_meas];
                    let state = StateVector::from_circuit(&frag.variant_circuit(&preps, &meas_z, &zb)?)?;
                    let mut block = Vec::with_capacity(n_ops * n_terms);
                    for op in 0..n_ops {
                        let stub_ops: Vec<(usize, LocalOp)> = digits(op, 4, n_meas)
                            .into_iter()
                            .zip(&frag.meas_stubs)
                            .map(|(d, s)| (s.local_wire, LocalOp::from_pauli(OPS[d])))
                            .collect();
                        for t in 0..n_terms {
                            let mut all = stub_ops.clone();
                            all.extend_from_slice(&fobs.ops[t]);
                            block.push(product_expectation(&state, &all));
                        }
                    }
                    Ok(block)
                })
                .collect::<Result<_>>()?;
            Ok(FragmentResult {
                fragment,
                values: blocks.concat(),
                histograms: None,
                variants_executed: n_variants,
                shots_used: 0,
            })
        }
        ExecMode::Shots { shots, seed, noise } => {
            let n_bases = frag.meas_variants();
            let n_patterns = fobs.patterns.len();
            let keys: Vec<(usize, usize, usize)> = (0..n_prep)
                .flat_map(|p| (0..n_bases).flat_map(move |b| (0..n_patterns).map(move |q| (p, b, q))))
                .collect();
            let hists: Vec<Vec<u64>> = keys
                .par_iter()
                .enumerate()
                .map(|(vi, &(p, b, q))| -> Result<Vec<u64>> {
                    let preps: Vec<PrepState> = digits(p, 4, frag.prep_stubs.len())
                        .into_iter()
                        .map(|d| PrepState::ALL[d])
                        .collect();
                    let meas: Vec<Pauli> = digits(b, 3, n_meas).into_iter().map(|d| BASES[d]).collect();
                    let circ = frag.variant_circuit(&preps, &meas, &fobs.patterns[q])?;
                    let state = StateVector::from_circuit(&circ)?;
                    let s = derive_seed(*seed, &[fragment as u64, vi as u64]);
                    sample_histogram(&state, *shots, noise, &circ, s)
                })
                .collect::<Result<_>>()?;
            let histograms: BTreeMap<(usize, usize, usize), Vec<u64>> = keys.into_iter().zip(hists).collect();
            let mut values = vec![0.0; n_prep * n_ops * n_terms];
            for p in 0..n_prep {
                for op in 0..n_ops {
                    let b = basis_index(op, n_meas);
                    for t in 0..n_terms {
                        let hist = &histograms[&(p, b, fobs.pattern_of_term[t])];
                        values[(p * n_ops + op) * n_terms + t] =
                            hist_mean(hist, |i| shot_value(&frag, &fobs, op, t, i));
                    }
                }
            }
            Ok(FragmentResult {
                fragment,
                values,
                histograms: Some(histograms),
                variants_executed: n_variants,
                shots_used: n_variants * shots,
            })
        }
    }
}

/// Measurement basis assignment (base 3) implied by an operator assignment.
fn basis_index(op: usize, n_meas: usize) -> usize {
    digits(op, 4, n_meas)
        .into_iter()
        .rev()
        .fold(0, |acc, d| acc * 3 + if d == 0 { 2 } else { d - 1 })
}

fn shot_value(frag: &Fragment, fobs: &FragmentObservable, op: usize, term: usize, outcome: usize) -> f64 {
    let mut v = 1.0;
    for (d, s) in digits(op, 4, frag.meas_stubs.len()).into_iter().zip(&frag.meas_stubs) {
        if d != 0 {
            v *= LocalOp::Z.eigen(outcome >> s.local_wire & 1);
        }
    }
    for &(lw, local_op) in &fobs.ops[term] {
        v *= local_op.eigen(outcome >> lw & 1);
    }
    v
}

fn hist_mean(hist: &[u64], f: impl Fn(usize) -> f64) -> f64 {
    let total: u64 = hist.iter().sum();
    hist.iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| f(i) * c as f64)
        .sum::<f64>()
        / total as f64
}

/// Reconstructed estimate with its delta-method standard error (zero in
/// exact mode, `None` if any fragment result lacks raw histograms).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: Option<f64>,
}

fn setting_key(plan: &ReconstructionPlan, f: usize, term: &PlanTerm) -> usize {
    let frag = &plan.fragments[f];
    let p = frag
        .prep_stubs
        .iter()
        .rev()
        .fold(0, |acc, s| acc * 4 + prep_code(term.settings[s.cut].1));
    let op = frag
        .meas_stubs
        .iter()
        .rev()
        .fold(0, |acc, s| acc * 4 + op_code(term.settings[s.cut].0));
    p * frag.op_settings() + op
}

/// Combines fragment results into the expectation of `obs` on the uncut circuit.
pub fn reconstruct(plan: &ReconstructionPlan, obs: &Observable, results: &[FragmentResult]) -> Result<Estimate> {
    let by_fragment = order_results(plan, results)?;
    let n_terms = obs.terms.len();
    for (f, r) in by_fragment.iter().enumerate() {
        let frag = &plan.fragments[f];
        if r.values.len() != frag.prep_variants() * frag.op_settings() * n_terms {
            return Err(Error::MissingVariant {
                fragment: f,
                variant: "result table has the wrong size".into(),
            });
        }
    }
    let keys: Vec<Vec<usize>> = plan
        .terms
        .iter()
        .map(|pt| (0..plan.fragments.len()).map(|f| setting_key(plan, f, pt)).collect())
        .collect();
    let mut value = 0.0;
    for (pt, key) in plan.terms.iter().zip(&keys) {
        for (t, term) in obs.terms.iter().enumerate() {
            let prod: f64 = by_fragment
                .iter()
                .zip(key)
                .map(|(r, &k)| r.values[k * n_terms + t])
                .product();
            value += term.coeff * pt.coefficient * prod;
        }
    }

    let std_error = if by_fragment.iter().all(|r| r.histograms.is_some()) {
        Some(delta_std_error(plan, obs, &by_fragment, &keys))
    } else if by_fragment.iter().all(|r| r.shots_used == 0 && r.variants_executed > 0) {
        Some(0.0)
    } else {
        None
    };
    Ok(Estimate { value, std_error })
}

fn order_results<'a>(plan: &ReconstructionPlan, results: &'a [FragmentResult]) -> Result<Vec<&'a FragmentResult>> {
    (0..plan.fragments.len())
        .map(|f| {
            results.iter().find(|r| r.fragment == f).ok_or(Error::MissingVariant {
                fragment: f,
                variant: "all".into(),
            })
        })
        .collect()
}

fn delta_std_error(
    plan: &ReconstructionPlan,
    obs: &Observable,
    results: &[&FragmentResult],
    keys: &[Vec<usize>],
) -> f64 {
    let n_terms = obs.terms.len();
    // gradient of the reconstruction w.r.t. every fragment value
    let mut grads: Vec<Vec<f64>> = results.iter().map(|r| vec![0.0; r.values.len()]).collect();
    for (pt, key) in plan.terms.iter().zip(keys) {
        for (t, term) in obs.terms.iter().enumerate() {
            let w = term.coeff * pt.coefficient;
            for f in 0..results.len() {
                let others: f64 = (0..results.len())
                    .filter(|&g| g != f)
                    .map(|g| results[g].values[key[g] * n_terms + t])
                    .product();
                grads[f][key[f] * n_terms + t] += w * others;
            }
        }
    }
    let mut var = 0.0;
    for (f, r) in results.iter().enumerate() {
        let frag = &plan.fragments[f];
        let fobs = FragmentObservable::new(frag, obs);
        let n_ops = frag.op_settings();
        let n_meas = frag.meas_stubs.len();
        for (&(p, b, q), hist) in r.histograms.as_ref().expect("checked by caller") {
            let contributing: Vec<(usize, usize, f64)> = (0..n_ops)
                .filter(|&op| basis_index(op, n_meas) == b)
                .flat_map(|op| {
                    (0..n_terms)
                        .filter(|&t| fobs.pattern_of_term[t] == q)
                        .map(move |t| (op, t))
                })
                .map(|(op, t)| (op, t, grads[f][(p * n_ops + op) * n_terms + t]))
                .filter(|&(_, _, g)| g != 0.0)
                .collect();
            if contributing.is_empty() {
                continue;
            }
            let g = |i: usize| -> f64 {
                contributing
                    .iter()
                    .map(|&(op, t, gr)| gr * shot_value(frag, &fobs, op, t, i))
                    .sum()
            };
            let mean = hist_mean(hist, g);
            let second = hist_mean(hist, |i| g(i).powi(2));
            let total: u64 = hist.iter().sum();
            var += (second - mean * mean).max(0.0) / total as f64;
        }
    }
    var.sqrt()
}

/// Cost summary of executing a plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ExecutionStats {
    pub variants_executed: u64,
    pub shots_used: u64,
}

/// Executes all fragments and reconstructs `obs`.
pub fn execute_plan(
    plan: &ReconstructionPlan,
    obs: &Observable,
    params: &HashMap<String, f64>,
    mode: &ExecMode,
) -> Result<(Estimate, ExecutionStats)> {
    let results: Vec<FragmentResult> = (0..plan.fragments.len())
        .map(|f| execute_fragment(plan, f, obs, params, mode))
        .collect::<Result<_>>()?;
    let stats = ExecutionStats {
        variants_executed: results.iter().map(|r| r.variants_executed).sum(),
        shots_used: results.iter().map(|r| r.shots_used).sum(),
    };
    Ok((reconstruct(plan, obs, &results)?, stats))
}

/// Cuts a bound circuit, runs every variant and reconstructs `obs`.
/// Returns the estimate and the total shots spent.
pub fn evaluate_cut_expectation(
    c: &Circuit,
    cuts: &[CutPoint],
    obs: &Observable,
    mode: &ExecMode,
) -> Result<(Estimate, u64)> {
    c.ensure_bound()?;
    let plan = decompose(c, cuts)?;
    let (est, stats) = execute_plan(&plan, obs, &HashMap::new(), mode)?;
    Ok((est, stats.shots_used))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::PauliTerm;

    fn ghz() -> Circuit {
        let mut c = Circuit::new(3);
        c.h(0).cnot(0, 1).cnot(1, 2);
        c
    }

    fn pauli_obs(label: &str) -> Observable {
        let h = Hamiltonian::new(label.len(), vec![PauliTerm::from_label(1.0, label).unwrap()]).unwrap();
        Observable::from(&h)
    }

    #[test]
    fn overhead_is_sixteen_per_cut() {
        assert_eq!(overhead(0), 1);
        assert_eq!(overhead(1), 16);
        assert_eq!(overhead(2), 256);
        assert_eq!(overhead(3), 4096);
    }

    #[test]
    fn canonical_terms_prepare_eigenstates() {
        let terms = canonical_terms();
        assert_eq!(terms.len(), 8);
        for t in &terms {
            assert_eq!(t.weight, t.eigenvalue as f64 / 2.0);
        }
    }

    /// The grouped table must act as the identity channel on each of the
    /// Pauli basis elements: Σ_M,P c[M][P] Tr(M σ) |P⟩⟨P| = σ.
    #[test]
    fn grouped_table_resolves_identity_channel() {
        // Bloch vectors of the preparations
        let bloch = |p: PrepState| match p {
            PrepState::Zero => [0.0, 0.0, 1.0],
            PrepState::One => [0.0, 0.0, -1.0],
            PrepState::Plus => [1.0, 0.0, 0.0],
            PrepState::PlusI => [0.0, 1.0, 0.0],
        };
        for (input, r_in) in [("Z", [0.0, 0.0, 1.0]), ("X", [1.0, 0.0, 0.0]), ("Y", [0.0, 1.0, 0.0]), ("-Y", [0.0, -1.0, 0.0])] {
            let mut trace = 0.0;
            let mut r_out = [0.0; 3];
            for (m, p, c) in grouped_terms() {
                let tr_m = match m {
                    Pauli::I => 1.0,
                    Pauli::X => r_in[0],
                    Pauli::Y => r_in[1],
                    Pauli::Z => r_in[2],
                };
                trace += c * tr_m;
                for k in 0..3 {
                    r_out[k] += c * tr_m * bloch(p)[k];
                }
            }
            assert!((trace - 1.0).abs() < 1e-15, "{input}");
            for k in 0..3 {
                assert!((r_out[k] - r_in[k]).abs() < 1e-15, "{input}");
            }
        }
    }

    #[test]
    fn ghz_cut_validation() {
        let c = ghz();
        assert!(validate_cut(&c, CutPoint::new(1, 1), 2).unwrap());
        assert_eq!(fragment_widths(&c, &[CutPoint::new(1, 1)]).unwrap(), vec![2, 2]);
        assert!(!validate_cut(&c, CutPoint::new(0, 0), 2).unwrap());
        assert!(validate_cut(&c, CutPoint::new(0, 0), 3).unwrap());
        assert!(validate_cut(&c, CutPoint::new(7, 0), 2).is_err());
        assert!(validate_cut(&c, CutPoint::new(0, 3), 2).is_err());
        // a cut that leaves both ends in one fragment
        let mut loopy = Circuit::new(2);
        loopy.cnot(0, 1).cnot(0, 1).cnot(0, 1);
        assert!(!validate_cut(&loopy, CutPoint::new(0, 1), 2).unwrap());
    }

    #[test]
    fn search_finds_the_ghz_cut() {
        let cuts = find_cuts(&ghz(), 3, 2).unwrap().unwrap();
        assert_eq!(cuts.len(), 1);
        assert_eq!(fragment_widths(&ghz(), &cuts).unwrap(), vec![2, 2]);
        assert_eq!(find_cuts(&ghz(), 3, 3).unwrap(), Some(vec![]));
        assert_eq!(find_cuts(&ghz(), 0, 2).unwrap(), None);
    }

    #[test]
    fn single_wire_cut() {
        let mut c = Circuit::new(1);
        c.h(0).h(0);
        assert!(validate_cut(&c, CutPoint::new(0, 0), 1).unwrap());
        let (est, _) = evaluate_cut_expectation(&c, &[CutPoint::new(0, 0)], &pauli_obs("Z"), &ExecMode::Exact).unwrap();
        assert!((est.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ghz_reconstruction_exact() {
        let cut = [CutPoint::new(1, 1)];
        for (label, expected) in [("ZZI", 1.0), ("ZZZ", 0.0), ("IZZ", 1.0), ("XXX", 1.0)] {
            let (est, shots) = evaluate_cut_expectation(&ghz(), &cut, &pauli_obs(label), &ExecMode::Exact).unwrap();
            assert!((est.value - expected).abs() < 1e-10, "{label}: {}", est.value);
            assert_eq!(shots, 0);
            assert_eq!(est.std_error, Some(0.0));
        }
    }

    #[test]
    fn one_cut_variant_counts() {
        let plan = decompose(&ghz(), &[CutPoint::new(1, 1)]).unwrap();
        assert_eq!(plan.fragments.len(), 2);
        assert_eq!(plan.terms.len(), 10);
        let up = &plan.fragments[plan.cut_ends[0].0];
        let down = &plan.fragments[plan.cut_ends[0].1];
        assert_eq!((up.prep_variants(), up.meas_variants()), (1, 3));
        assert_eq!((down.prep_variants(), down.meas_variants()), (4, 1));
    }

    #[test]
    fn zero_cuts_is_plain_expectation() {
        let plan = decompose(&ghz(), &[]).unwrap();
        assert_eq!(plan.fragments.len(), 1);
        assert_eq!(plan.terms, vec![PlanTerm { coefficient: 1.0, settings: vec![] }]);
        let obs = pauli_obs("XXX");
        let (est, _) = evaluate_cut_expectation(&ghz(), &[], &obs, &ExecMode::Exact).unwrap();
        let direct = obs.expectation(&StateVector::from_circuit(&ghz()).unwrap()).unwrap();
        assert!((est.value - direct).abs() < 1e-14);
    }

    #[test]
    fn too_many_cuts_rejected() {
        let mut c = Circuit::new(2);
        for _ in 0..5 {
            c.cnot(0, 1).h(0);
        }
        let cuts: Vec<CutPoint> = (0..4).map(|i| CutPoint::new(1, 2 * i)).collect();
        assert!(matches!(decompose(&c, &cuts), Err(Error::TooManyCuts { count: 4, limit: 3 })));
    }

    #[test]
    fn missing_fragment_result_is_reported() {
        let plan = decompose(&ghz(), &[CutPoint::new(1, 1)]).unwrap();
        let obs = pauli_obs("ZZZ");
        let r = execute_fragment(&plan, 0, &obs, &HashMap::new(), &ExecMode::Exact).unwrap();
        assert!(matches!(reconstruct(&plan, &obs, &[r]), Err(Error::MissingVariant { fragment: 1, .. })));
    }

    #[test]
    fn reconstruction_ignores_result_order() {
        let plan = decompose(&ghz(), &[CutPoint::new(1, 1)]).unwrap();
        let obs = pauli_obs("ZZI");
        let mut rs: Vec<_> = (0..2)
            .map(|f| execute_fragment(&plan, f, &obs, &HashMap::new(), &ExecMode::Exact).unwrap())
            .collect();
        let a = reconstruct(&plan, &obs, &rs).unwrap();
        rs.reverse();
        assert_eq!(reconstruct(&plan, &obs, &rs).unwrap(), a);
    }

    #[test]
    fn projector_observables_reconstruct() {
        let mut c = Circuit::new(3);
        c.ry(0, 0.4).cnot(0, 1).ry(1, -0.9).cnot(1, 2).rx(2, 0.3).rz(1, 0.2);
        let state = StateVector::from_circuit(&c).unwrap();
        let cuts = [CutPoint::new(1, 2)];
        for obs in [Observable::all_zeros(3), Observable::mean_local_zeros(3)] {
            let direct = obs.expectation(&state).unwrap();
            let (est, _) = evaluate_cut_expectation(&c, &cuts, &obs, &ExecMode::Exact).unwrap();
            assert!((est.value - direct).abs() < 1e-12);
        }
        let direct = Observable::all_zeros(3).expectation(&state).unwrap();
        assert!((direct - state.all_zeros_probability()).abs() < 1e-14);
    }

    #[test]
    fn shot_mode_ghz_within_three_sigma() {
        let mode = ExecMode::Shots {
            shots: 20_000,
            seed: 3,
            noise: NoiseConfig::noiseless(),
        };
        let (est, shots) = evaluate_cut_expectation(&ghz(), &[CutPoint::new(1, 1)], &pauli_obs("ZZI"), &mode).unwrap();
        assert_eq!(shots, 7 * 20_000);
        let se = est.std_error.unwrap();
        assert!(se > 0.0);
        assert!((est.value - 1.0).abs() < 3.0 * se, "{} ± {se}", est.value);
    }

    #[test]
    fn symbolic_fragments_bind_at_execution() {
        let mut c = Circuit::new(2);
        c.rotation_sym(crate::GateKind::RY, 0, "a")
            .cnot(0, 1)
            .rotation_sym(crate::GateKind::RY, 1, "b");
        let plan = decompose(&c, &[CutPoint::new(1, 1)]).unwrap();
        let obs = Observable::all_zeros(2);
        let params = HashMap::from([("a".to_string(), 0.3), ("b".to_string(), -1.1)]);
        let (est, _) = execute_plan(&plan, &obs, &params, &ExecMode::Exact).unwrap();
        let bound = c.bind_values(&[0.3, -1.1]).unwrap();
        let direct = StateVector::from_circuit(&bound).unwrap().all_zeros_probability();
        assert!((est.value - direct).abs() < 1e-12);
        assert!(execute_plan(&plan, &obs, &HashMap::new(), &ExecMode::Exact).is_err());
    }

    #[test]
    fn variant_circuit_prepares_and_rotates() {
        let plan = decompose(&ghz(), &[CutPoint::new(1, 1)]).unwrap();
        let down = &plan.fragments[plan.cut_ends[0].1];
        let c = down
            .variant_circuit(&[PrepState::PlusI], &[], &[Pauli::Y, Pauli::Z])
            .unwrap();
        // prep H S, one CNOT, then Sdg H for the Y readout
        assert_eq!(c.len(), 5);
    }

    #[test]
    fn plan_serializes() {
        let plan = decompose(&ghz(), &[CutPoint::new(1, 1)]).unwrap();
        let json = serde_json::to_string(&plan).unwrap();
        let back: ReconstructionPlan = serde_json::from_str(&json).unwrap();
        assert_eq!(back, plan);
    }
}
