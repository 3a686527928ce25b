//! Statevector simulation, exact expectations and shot sampling.
//!
//! Noise is modelled by stochastic Pauli trajectories: after every gate a
//! random Pauli error is inserted with the configured probability, and each
//! measured bit is flipped with the readout probability.

use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::{Error, Result};
use crate::pauli::{Hamiltonian, Pauli};
use crate::seed;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::f64::consts::FRAC_1_SQRT_2;

/// Shots per fragment evaluation unless configured otherwise.
pub const DEFAULT_SHOTS: u64 = 1024;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

type Mat2 = [[Complex64; 2]; 2];

fn gate_matrix(kind: GateKind, angle: f64) -> Mat2 {
    let (s, c) = (angle / 2.0).sin_cos();
    let i = Complex64::i();
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    match kind {
        GateKind::RX => [[c.into(), -i * s], [-i * s, c.into()]],
        GateKind::RY => [[c.into(), (-s).into()], [s.into(), c.into()]],
        GateKind::RZ => [
            [Complex64::new(c, -s), ZERO],
            [ZERO, Complex64::new(c, s)],
        ],
        GateKind::H => [[h, h], [h, -h]],
        GateKind::X => [[ZERO, ONE], [ONE, ZERO]],
        GateKind::S => [[ONE, ZERO], [ZERO, i]],
        GateKind::Sdg => [[ONE, ZERO], [ZERO, -i]],
        GateKind::CNOT => unreachable!("CNOT is not a single-qubit gate"),
    }
}

fn pauli_matrix(p: Pauli) -> Mat2 {
    let i = Complex64::i();
    match p {
        Pauli::I => [[ONE, ZERO], [ZERO, ONE]],
        Pauli::X => [[ZERO, ONE], [ONE, ZERO]],
        Pauli::Y => [[ZERO, -i], [i, ZERO]],
        Pauli::Z => [[ONE, ZERO], [ZERO, -ONE]],
    }
}

/// Pure state of `n_qubits` wires; index bit `w` is the value of wire `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩`.
    pub fn zeros(n_qubits: usize) -> Self {
        Self::basis(n_qubits, 0)
    }

    /// Computational basis state with the given index.
    pub fn basis(n_qubits: usize, index: usize) -> Self {
        assert!((1..=26).contains(&n_qubits), "unsupported width {n_qubits}");
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[index] = ONE;
        Self { n_qubits, amps }
    }

    /// Basis state from a bitstring written wire 0 first, e.g. `"10"` sets wire 0.
    pub fn from_bitstring(bits: &str) -> Result<Self> {
        let index = bitstring_to_index(bits)?;
        Ok(Self::basis(bits.len(), index))
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("state norm {norm} is not 1")));
        }
        Ok(Self {
            n_qubits: len.trailing_zeros() as usize,
            amps,
        })
    }

    /// Output of `circuit` applied to `|0…0⟩`.
    pub fn from_circuit(circuit: &Circuit) -> Result<Self> {
        let mut s = Self::zeros(circuit.n_qubits());
        s.apply(circuit)?;
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Applies every gate of a bound circuit in order.
    pub fn apply(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.n_qubits() != self.n_qubits {
            return Err(Error::WidthMismatch {
                expected: self.n_qubits,
                found: circuit.n_qubits(),
            });
        }
        circuit.ensure_bound()?;
        for g in circuit.gates() {
            self.apply_gate(g);
        }
        Ok(())
    }

    fn apply_gate(&mut self, g: &Gate) {
        match g.kind {
            GateKind::CNOT => self.apply_cnot(g.wires[0], g.wires[1]),
            kind => {
                let angle = g.angle().unwrap_or(0.0);
                self.apply_1q(g.wires[0], &gate_matrix(kind, angle));
            }
        }
    }

    fn apply_1q(&mut self, q: usize, m: &Mat2) {
        let bit = 1usize << q;
        let diagonal = m[0][1] == ZERO && m[1][0] == ZERO;
        for i in 0..self.amps.len() {
            if i & bit != 0 {
                continue;
            }
            let j = i | bit;
            let (a, b) = (self.amps[i], self.amps[j]);
            if diagonal {
                self.amps[i] = m[0][0] * a;
                self.amps[j] = m[1][1] * b;
            } else {
                self.amps[i] = m[0][0] * a + m[0][1] * b;
                self.amps[j] = m[1][0] * a + m[1][1] * b;
            }
        }
    }

    fn apply_cnot(&mut self, control: usize, target: usize) {
        let (cb, tb) = (1usize << control, 1usize << target);
        for i in 0..self.amps.len() {
            if i & cb != 0 && i & tb == 0 {
                self.amps.swap(i, i | tb);
            }
        }
    }

    fn apply_pauli(&mut self, q: usize, p: Pauli) {
        if p != Pauli::I {
            self.apply_1q(q, &pauli_matrix(p));
        }
    }

    /// `⟨ψ|P|ψ⟩` for the Pauli string given by masks (see [`crate::PauliTerm::masks`]).
    pub fn pauli_expectation(&self, x_mask: u64, z_mask: u64) -> f64 {
        let x = x_mask as usize;
        let z = z_mask as usize;
        let ny = (x & z).count_ones();
        // P|i⟩ = i^ny (-1)^{|i & z|} |i ^ x⟩
        let mut acc = ZERO;
        for (i, a) in self.amps.iter().enumerate() {
            let sign = if (i & z).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
            acc += self.amps[i ^ x].conj() * a * sign;
        }
        let phase = match ny % 4 {
            0 => ONE,
            1 => Complex64::i(),
            2 => -ONE,
            _ => -Complex64::i(),
        };
        (phase * acc).re
    }

    /// Exact `⟨ψ|H|ψ⟩`.
    pub fn expectation(&self, obs: &Hamiltonian) -> Result<f64> {
        if obs.n_qubits() != self.n_qubits {
            return Err(Error::WidthMismatch {
                expected: self.n_qubits,
                found: obs.n_qubits(),
            });
        }
        Ok(obs
            .terms()
            .iter()
            .map(|t| {
                let (x, z) = t.masks();
                t.coeff * self.pauli_expectation(x, z)
            })
            .sum())
    }

    /// `|⟨0…0|ψ⟩|²`.
    pub fn all_zeros_probability(&self) -> f64 {
        self.amps[0].norm_sqr()
    }

    /// Element `j` is the marginal probability that wire `j` reads 0.
    pub fn local_return_probabilities(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.n_qubits];
        for (i, a) in self.amps.iter().enumerate() {
            let w = a.norm_sqr();
            for (j, pj) in p.iter_mut().enumerate() {
                if i >> j & 1 == 0 {
                    *pj += w;
                }
            }
        }
        p
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }
}

/// Converts a wire-0-first bitstring to a basis index.
pub fn bitstring_to_index(bits: &str) -> Result<usize> {
    bits.chars().enumerate().try_fold(0usize, |acc, (w, c)| match c {
        '0' => Ok(acc),
        '1' => Ok(acc | 1 << w),
        other => Err(Error::InvalidInput(format!("bad bit {other:?}"))),
    })
}

/// Wire-0-first bitstring of a basis index.
pub fn index_to_bitstring(index: usize, n_qubits: usize) -> String {
    (0..n_qubits)
        .map(|w| if index >> w & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Parametric stochastic Pauli noise.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Probability of a uniform X, Y or Z after each single-qubit gate.
    pub p1: f64,
    /// Probability of a uniform non-identity two-qubit Pauli after each CNOT.
    pub p2: f64,
    /// Per-bit flip probability at readout.
    pub p_readout: f64,
}

impl NoiseConfig {
    pub fn noiseless() -> Self {
        Self::default()
    }

    /// Default magnitudes used by the CLI when noise is switched on.
    pub fn default_noisy() -> Self {
        Self {
            p1: 0.001,
            p2: 0.01,
            p_readout: 0.02,
        }
    }

    pub fn new(p1: f64, p2: f64, p_readout: f64) -> Result<Self> {
        let cfg = Self { p1, p2, p_readout };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p1", self.p1), ("p2", self.p2), ("p_readout", self.p_readout)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidInput(format!("{name} = {p} is not in [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn has_gate_noise(&self) -> bool {
        self.p1 > 0.0 || self.p2 > 0.0
    }

    pub fn is_noiseless(&self) -> bool {
        !self.has_gate_noise() && self.p_readout == 0.0
    }
}

/// Measurement histogram keyed by wire-0-first bitstrings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotCounts {
    pub n_qubits: usize,
    pub counts: BTreeMap<String, u64>,
    pub total_shots: u64,
}

impl ShotCounts {
    pub fn from_histogram(n_qubits: usize, hist: &[u64]) -> Self {
        let counts: BTreeMap<String, u64> = hist
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (index_to_bitstring(i, n_qubits), c))
            .collect();
        let total_shots = hist.iter().sum();
        Self {
            n_qubits,
            counts,
            total_shots,
        }
    }

    pub fn get(&self, bits: &str) -> u64 {
        self.counts.get(bits).copied().unwrap_or(0)
    }

    /// Dense histogram indexed by basis index.
    pub fn histogram(&self) -> Vec<u64> {
        let mut hist = vec![0u64; 1 << self.n_qubits];
        for (bits, &c) in &self.counts {
            hist[bitstring_to_index(bits).expect("stored bitstrings are valid")] += c;
        }
        hist
    }
}

fn draw_index<R: Rng>(cdf: &[f64], rng: &mut R) -> usize {
    let total = *cdf.last().expect("non-empty distribution");
    let u = rng.gen::<f64>() * total;
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

fn cdf_of(probs: &[f64]) -> Vec<f64> {
    probs
        .iter()
        .scan(0.0, |acc, &p| {
            *acc += p;
            Some(*acc)
        })
        .collect()
}

/// One sampled error: Pauli operators applied right after gate `gate`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct ErrorEvent {
    gate: usize,
    paulis: [Pauli; 2],
}

const PAULIS: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

fn sample_errors<R: Rng>(circuit: &Circuit, noise: &NoiseConfig, rng: &mut R) -> Vec<ErrorEvent> {
    let mut events = Vec::new();
    for (gi, g) in circuit.gates().iter().enumerate() {
        if g.kind == GateKind::CNOT {
            if noise.p2 > 0.0 && rng.gen::<f64>() < noise.p2 {
                // 15 non-identity two-qubit Paulis
                let k = rng.gen_range(1..16);
                events.push(ErrorEvent {
                    gate: gi,
                    paulis: [PAULIS[k & 3], PAULIS[k >> 2]],
                });
            }
        } else if noise.p1 > 0.0 && rng.gen::<f64>() < noise.p1 {
            events.push(ErrorEvent {
                gate: gi,
                paulis: [PAULIS[rng.gen_range(1..4)], Pauli::I],
            });
        }
    }
    events
}

fn run_with_errors(circuit: &Circuit, events: &[ErrorEvent]) -> StateVector {
    let mut state = StateVector::zeros(circuit.n_qubits());
    let mut next = events.iter().peekable();
    for (gi, g) in circuit.gates().iter().enumerate() {
        state.apply_gate(g);
        while let Some(e) = next.next_if(|e| e.gate == gi) {
            for (slot, &w) in g.wires.iter().enumerate() {
                state.apply_pauli(w, e.paulis[slot]);
            }
        }
    }
    state
}

/// Samples `shots` computational-basis measurements and returns a dense
/// histogram.
///
/// `state` must be the noiseless output of `circuit` on `|0…0⟩`. Without gate
/// noise it is sampled directly; with gate noise every shot draws an error
/// pattern and the circuit is re-executed once per distinct pattern.
pub fn sample_histogram(
    state: &StateVector,
    shots: u64,
    noise: &NoiseConfig,
    circuit: &Circuit,
    rng_seed: u64,
) -> Result<Vec<u64>> {
    if shots == 0 {
        return Err(Error::InvalidInput("shots must be positive".into()));
    }
    noise.validate()?;
    if circuit.n_qubits() != state.n_qubits() {
        return Err(Error::WidthMismatch {
            expected: state.n_qubits(),
            found: circuit.n_qubits(),
        });
    }
    let n = state.n_qubits();
    let mut rng = seed::rng(rng_seed);
    let mut hist = vec![0u64; 1 << n];

    if noise.has_gate_noise() {
        circuit.ensure_bound()?;
        // Group shots by error pattern; the error-free pattern reuses `state`.
        let mut patterns: HashMap<Vec<ErrorEvent>, u64> = HashMap::new();
        for _ in 0..shots {
            *patterns.entry(sample_errors(circuit, noise, &mut rng)).or_default() += 1;
        }
        let mut patterns: Vec<_> = patterns.into_iter().collect();
        // HashMap order is not deterministic; sort for reproducible draws.
        patterns.sort_by(|a, b| {
            let key = |v: &Vec<ErrorEvent>| {
                v.iter()
                    .map(|e| (e.gate, e.paulis[0] as u8, e.paulis[1] as u8))
                    .collect::<Vec<_>>()
            };
            key(&a.0).cmp(&key(&b.0))
        });
        for (events, count) in patterns {
            let cdf = if events.is_empty() {
                cdf_of(&state.probabilities())
            } else {
                cdf_of(&run_with_errors(circuit, &events).probabilities())
            };
            for _ in 0..count {
                hist[draw_index(&cdf, &mut rng)] += 1;
            }
        }
    } else {
        let cdf = cdf_of(&state.probabilities());
        for _ in 0..shots {
            hist[draw_index(&cdf, &mut rng)] += 1;
        }
    }

    if noise.p_readout > 0.0 {
        let mut flipped = vec![0u64; hist.len()];
        for (i, &c) in hist.iter().enumerate() {
            for _ in 0..c {
                let mut j = i;
                for w in 0..n {
                    if rng.gen::<f64>() < noise.p_readout {
                        j ^= 1 << w;
                    }
                }
                flipped[j] += 1;
            }
        }
        hist = flipped;
    }
    Ok(hist)
}

/// [`sample_histogram`] returned as bitstring counts.
pub fn sample(
    state: &StateVector,
    shots: u64,
    noise: &NoiseConfig,
    circuit: &Circuit,
    rng_seed: u64,
) -> Result<ShotCounts> {
    let hist = sample_histogram(state, shots, noise, circuit, rng_seed)?;
    Ok(ShotCounts::from_histogram(state.n_qubits(), &hist))
}

/// Mean of `(-1)^{|i & mask|}` over a histogram, with its standard error.
pub fn parity_mean(hist: &[u64], mask: u64) -> (f64, f64) {
    let total: u64 = hist.iter().sum();
    let plus: u64 = hist
        .iter()
        .enumerate()
        .filter(|(i, _)| (*i as u64 & mask).count_ones().is_multiple_of(2))
        .map(|(_, &c)| c)
        .sum();
    let n = total as f64;
    let mean = (2.0 * plus as f64 - n) / n;
    (mean, ((1.0 - mean * mean).max(0.0) / n).sqrt())
}

/// Appends basis changes so a Z-basis readout measures `paulis`.
pub fn measurement_basis_circuit(n_qubits: usize, paulis: &[Pauli]) -> Circuit {
    let mut c = Circuit::new(n_qubits);
    for (w, p) in paulis.iter().enumerate() {
        match p {
            Pauli::X => {
                c.h(w);
            }
            Pauli::Y => {
                c.sdg(w).h(w);
            }
            _ => {}
        }
    }
    c
}

/// Shot estimate of `⟨obs⟩` on `circuit|0…0⟩`. Terms are measured one basis
/// setting at a time, `shots` each; terms sharing a setting share its data.
/// Returns `(estimate, standard_error, shots_used)`.
pub fn estimate_expectation(
    circuit: &Circuit,
    obs: &Hamiltonian,
    shots: u64,
    noise: &NoiseConfig,
    rng_seed: u64,
) -> Result<(f64, f64, u64)> {
    if obs.n_qubits() != circuit.n_qubits() {
        return Err(Error::WidthMismatch {
            expected: circuit.n_qubits(),
            found: obs.n_qubits(),
        });
    }
    let n = circuit.n_qubits();
    let mut settings: BTreeMap<Vec<Pauli>, Vec<usize>> = BTreeMap::new();
    for (ti, t) in obs.terms().iter().enumerate() {
        let basis: Vec<Pauli> = t
            .paulis()
            .iter()
            .map(|&p| if p == Pauli::I { Pauli::Z } else { p })
            .collect();
        settings.entry(basis).or_default().push(ti);
    }
    let mut value = 0.0;
    let mut var = 0.0;
    let mut used = 0;
    for (si, (basis, term_ids)) in settings.iter().enumerate() {
        let measured = circuit.compose(&measurement_basis_circuit(n, basis))?;
        let state = StateVector::from_circuit(&measured)?;
        let hist = sample_histogram(&state, shots, noise, &measured, seed::derive_seed(rng_seed, &[si as u64]))?;
        used += shots;
        // Terms in one setting are correlated; combine them per shot.
        let total = shots as f64;
        let mut mean = 0.0;
        let mut second = 0.0;
        for (i, &c) in hist.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let v: f64 = term_ids
                .iter()
                .map(|&ti| {
                    let t = &obs.terms()[ti];
                    let mask = t.support().iter().fold(0usize, |m, &w| m | 1 << w);
                    let sign = if (i & mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                    t.coeff * sign
                })
                .sum();
            mean += v * c as f64;
            second += v * v * c as f64;
        }
        mean /= total;
        second /= total;
        value += mean;
        var += (second - mean * mean).max(0.0) / total;
    }
    Ok((value, var.sqrt(), used))
}
