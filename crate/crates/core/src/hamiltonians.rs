//! Model Hamiltonians, their Trotter circuits and the exact-evolution oracle.
//!
//! Two models are provided:
//! - the disordered Heisenberg chain
//!   `H = J Σ_i (X_i X_{i+1} + Y_i Y_{i+1} + Z_i Z_{i+1}) + w Σ_i (hx_i X_i + hz_i Z_i)`;
//! - the 1D Fermi-Hubbard chain mapped with Jordan–Wigner, one spin orbital
//!   per qubit and the two spins of a site on adjacent qubits.
//!
//! A Trotter step is emitted as an ordered list of slices, each of which
//! factorizes across at least one wire boundary so it can be absorbed by a
//! variational update evaluated with wire cutting.

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::pauli::{Hamiltonian, Pauli, PauliTerm};
use crate::seed;
use crate::simulator::{bitstring_to_index, StateVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

/// Parameters of the disordered Heisenberg chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeisenbergParams {
    pub n: usize,
    pub j: f64,
    pub w: f64,
    pub hx: Vec<f64>,
    pub hz: Vec<f64>,
    pub field_seed: u64,
}

impl HeisenbergParams {
    /// Draws `hx`, `hz` uniformly from `[-1, 1]` with a seeded generator.
    pub fn new(n: usize, j: f64, w: f64, field_seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!("Heisenberg chain needs n >= 2, got {n}")));
        }
        let mut rng = seed::rng(field_seed);
        let hx = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let hz = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        Ok(Self {
            n,
            j,
            w,
            hx,
            hz,
            field_seed,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 || self.hx.len() != self.n || self.hz.len() != self.n {
            return Err(Error::InvalidInput("inconsistent Heisenberg parameters".into()));
        }
        if self.hx.iter().chain(&self.hz).any(|h| h.abs() > 1.0) {
            return Err(Error::InvalidInput("disorder fields must lie in [-1, 1]".into()));
        }
        Ok(())
    }
}

pub fn heisenberg_hamiltonian(p: &HeisenbergParams) -> Result<Hamiltonian> {
    p.validate()?;
    let n = p.n;
    let mut terms = Vec::new();
    for i in 0..n - 1 {
        for q in [Pauli::X, Pauli::Y, Pauli::Z] {
            terms.push(PauliTerm::sparse(n, p.j, &[(i, q), (i + 1, q)])?);
        }
    }
    for i in 0..n {
        for (q, h) in [(Pauli::X, p.hx[i]), (Pauli::Z, p.hz[i])] {
            let c = p.w * h;
            if c != 0.0 {
                terms.push(PauliTerm::sparse(n, c, &[(i, q)])?);
            }
        }
    }
    Hamiltonian::new(n, terms)
}

/// `exp(-i·jdt·(XX + YY + ZZ))` up to global phase with three CNOTs, on
/// wires `top` and `bottom` of `c`.
pub fn push_xxyyzz_block(c: &mut Circuit, top: usize, bottom: usize, jdt: f64) {
    let a = 2.0 * jdt;
    c.rz(bottom, -FRAC_PI_2)
        .cnot(bottom, top)
        .rz(top, FRAC_PI_2 + a)
        .ry(bottom, -FRAC_PI_2 - a)
        .cnot(top, bottom)
        .ry(bottom, FRAC_PI_2 + a)
        .cnot(bottom, top)
        .rz(top, FRAC_PI_2);
}

/// Two-qubit circuit for `exp(-i·j·dt·(XX + YY + ZZ))` (wire 0 on top).
pub fn xxyyzz_block(j: f64, dt: f64) -> Circuit {
    let mut c = Circuit::new(2);
    push_xxyyzz_block(&mut c, 0, 1, j * dt);
    c
}

/// One Trotter slice and the wire boundaries it factorizes across.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slice {
    pub circuit: Circuit,
    /// Boundaries `b` (between wires `b-1` and `b`) across which the slice
    /// is a tensor product, ascending.
    pub admissible: Vec<usize>,
}

impl Slice {
    fn new(circuit: Circuit, candidates: impl IntoIterator<Item = usize>) -> Self {
        let admissible = candidates
            .into_iter()
            .filter(|&b| circuit.factor_boundary(b).unwrap_or(false))
            .collect();
        Self { circuit, admissible }
    }

    /// Admissible boundary closest to the middle of the register, ties
    /// toward the lower one.
    pub fn middle_boundary(&self) -> Option<usize> {
        let n = self.circuit.n_qubits() as f64;
        self.admissible
            .iter()
            .copied()
            .min_by(|&a, &b| {
                let da = (a as f64 - n / 2.0).abs();
                let db = (b as f64 - n / 2.0).abs();
                da.partial_cmp(&db).unwrap().then(a.cmp(&b))
            })
    }
}

/// Ordered slices of one Trotter step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrotterSlices {
    pub slices: Vec<Slice>,
}

impl TrotterSlices {
    /// All slices composed in order.
    pub fn full_step(&self) -> Result<Circuit> {
        let first = self
            .slices
            .first()
            .ok_or_else(|| Error::InvalidInput("no slices".into()))?;
        self.slices[1..]
            .iter()
            .try_fold(first.circuit.clone(), |acc, s| acc.compose(&s.circuit))
    }

    pub fn n_qubits(&self) -> usize {
        self.slices.first().map_or(0, |s| s.circuit.n_qubits())
    }
}

/// Heisenberg step: disorder rotations and blocks on bonds (0,1),(2,3),…
/// in slice 1; blocks on bonds (1,2),(3,4),… in slice 2.
pub fn heisenberg_trotter_slices(p: &HeisenbergParams, dt: f64) -> Result<TrotterSlices> {
    p.validate()?;
    let n = p.n;
    if n < 3 {
        return Err(Error::InvalidInput(format!("slicing needs n >= 3, got {n}")));
    }
    let mut first = Circuit::new(n);
    for i in 0..n {
        first.rx(i, 2.0 * p.w * p.hx[i] * dt).rz(i, 2.0 * p.w * p.hz[i] * dt);
    }
    for i in (0..n - 1).step_by(2) {
        push_xxyyzz_block(&mut first, i, i + 1, p.j * dt);
    }
    let mut second = Circuit::new(n);
    for i in (1..n - 1).step_by(2) {
        push_xxyyzz_block(&mut second, i, i + 1, p.j * dt);
    }
    Ok(TrotterSlices {
        slices: vec![Slice::new(first, 1..n), Slice::new(second, 1..n)],
    })
}

/// Spin species of a fermionic mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Spin {
    Up,
    Down,
}

/// Fermi-Hubbard chain with open boundaries and one optional weak link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HubbardParams {
    pub n_sites: usize,
    pub hopping: f64,
    pub u: f64,
    /// `(bond, spin)`: the hopping of `spin` between sites `bond` and
    /// `bond + 1` (1-indexed) vanishes.
    pub weak_link: Option<(usize, Spin)>,
}

impl Default for HubbardParams {
    fn default() -> Self {
        Self {
            n_sites: 6,
            hopping: 1.0,
            u: 5.0,
            weak_link: Some((3, Spin::Down)),
        }
    }
}

impl HubbardParams {
    pub fn n_qubits(&self) -> usize {
        2 * self.n_sites
    }

    /// Wire of the mode `(site, spin)`, `site` 1-indexed. The down mode of a
    /// site precedes its up mode.
    pub fn wire(site: usize, spin: Spin) -> usize {
        match spin {
            Spin::Down => 2 * site - 2,
            Spin::Up => 2 * site - 1,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_sites < 2 {
            return Err(Error::InvalidInput("Hubbard chain needs at least 2 sites".into()));
        }
        if let Some((bond, _)) = self.weak_link {
            if bond == 0 || bond >= self.n_sites {
                return Err(Error::InvalidInput(format!(
                    "weak-link bond {bond} outside 1..{}",
                    self.n_sites
                )));
            }
        }
        Ok(())
    }

    fn hops(&self) -> Vec<(usize, Spin)> {
        let mut out = Vec::new();
        for bond in 1..self.n_sites {
            for spin in [Spin::Down, Spin::Up] {
                if self.weak_link != Some((bond, spin)) {
                    out.push((bond, spin));
                }
            }
        }
        out
    }
}

/// Hopping generators `XZX` and `YZY` of the hop `(bond, spin)`.
fn hop_terms(p: &HubbardParams, bond: usize, spin: Spin) -> Result<[PauliTerm; 2]> {
    let n = p.n_qubits();
    let a = HubbardParams::wire(bond, spin);
    let c = -p.hopping / 2.0;
    Ok([
        PauliTerm::sparse(n, c, &[(a, Pauli::X), (a + 1, Pauli::Z), (a + 2, Pauli::X)])?,
        PauliTerm::sparse(n, c, &[(a, Pauli::Y), (a + 1, Pauli::Z), (a + 2, Pauli::Y)])?,
    ])
}

/// Jordan–Wigner Hamiltonian: `XZX` and `YZY` hops with `-h/2`, on-site
/// `ZZ` with `U/4` and `Z` on every wire with `-U/4` (constant dropped).
pub fn hubbard_jw_hamiltonian(p: &HubbardParams) -> Result<Hamiltonian> {
    p.validate()?;
    let n = p.n_qubits();
    let mut terms = Vec::new();
    let mut hops: Vec<(usize, [PauliTerm; 2])> = Vec::new();
    for (bond, spin) in p.hops() {
        hops.push((HubbardParams::wire(bond, spin), hop_terms(p, bond, spin)?));
    }
    hops.sort_by_key(|h| h.0);
    for (_, [xzx, yzy]) in hops {
        terms.push(yzy);
        terms.push(xzx);
    }
    for s in 1..=p.n_sites {
        let (d, u) = (HubbardParams::wire(s, Spin::Down), HubbardParams::wire(s, Spin::Up));
        terms.push(PauliTerm::sparse(n, p.u / 4.0, &[(d, Pauli::Z), (u, Pauli::Z)])?);
    }
    for w in 0..n {
        terms.push(PauliTerm::sparse(n, -p.u / 4.0, &[(w, Pauli::Z)])?);
    }
    Hamiltonian::new(n, terms)
}

/// Circuit for `exp(-i·dt·coeff·P)`: rotate each factor to Z, CNOT ladder
/// onto the last support wire, `RZ(2·coeff·dt)`, then undo.
pub fn pauli_exponential(term: &PauliTerm, dt: f64) -> Result<Circuit> {
    let mut c = Circuit::new(term.n_qubits());
    push_pauli_exponential(&mut c, term, dt)?;
    Ok(c)
}

fn push_pauli_exponential(c: &mut Circuit, term: &PauliTerm, dt: f64) -> Result<()> {
    let support = term.support();
    let Some(&last) = support.last() else {
        return Err(Error::InvalidInput("identity has no exponential circuit".into()));
    };
    let paulis = term.paulis();
    for &w in &support {
        match paulis[w] {
            Pauli::X => {
                c.h(w);
            }
            Pauli::Y => {
                c.sdg(w).h(w);
            }
            _ => {}
        }
    }
    for pair in support.windows(2) {
        c.cnot(pair[0], pair[1]);
    }
    c.rz(last, 2.0 * term.coeff * dt);
    for pair in support.windows(2).rev() {
        c.cnot(pair[0], pair[1]);
    }
    for &w in &support {
        match paulis[w] {
            Pauli::X => {
                c.h(w);
            }
            Pauli::Y => {
                c.h(w).s(w);
            }
            _ => {}
        }
    }
    Ok(())
}

/// Hubbard step in two slices. Slice 1 holds every generator that does not
/// cross the weak link's site boundary, slice 2 the remaining crossing hop.
///
/// Within slice 1 the on-site `ZZ` terms come first, then the `XZX` hops of
/// the up and the down species, then the `YZY` hops likewise, then the
/// single-`Z` terms. This order packs the ladders tightly: the default
/// 6-site step has 45 layers.
pub fn hubbard_trotter_slices(p: &HubbardParams, dt: f64) -> Result<TrotterSlices> {
    p.validate()?;
    let Some((bond, _)) = p.weak_link else {
        return Err(Error::InvalidInput(
            "without a weak link the step does not split into two factorizing slices".into(),
        ));
    };
    let n = p.n_qubits();
    let cut = 2 * bond;
    let crosses = |t: &PauliTerm| {
        let s = t.support();
        s[0] < cut && cut <= *s.last().unwrap()
    };

    let mut hops: Vec<(usize, Spin, [PauliTerm; 2])> = Vec::new();
    for (b, spin) in p.hops() {
        hops.push((HubbardParams::wire(b, spin), spin, hop_terms(p, b, spin)?));
    }
    hops.sort_by_key(|h| h.0);

    let mut first = Circuit::new(n);
    let mut second = Circuit::new(n);
    for s in 1..=p.n_sites {
        let (d, u) = (HubbardParams::wire(s, Spin::Down), HubbardParams::wire(s, Spin::Up));
        let zz = PauliTerm::sparse(n, p.u / 4.0, &[(d, Pauli::Z), (u, Pauli::Z)])?;
        push_pauli_exponential(&mut first, &zz, dt)?;
    }
    for flavor in 0..2 {
        for species in [Spin::Up, Spin::Down] {
            for (_, spin, terms) in &hops {
                if *spin == species && !crosses(&terms[flavor]) {
                    push_pauli_exponential(&mut first, &terms[flavor], dt)?;
                }
            }
        }
    }
    for w in 0..n {
        push_pauli_exponential(&mut first, &PauliTerm::sparse(n, -p.u / 4.0, &[(w, Pauli::Z)])?, dt)?;
    }
    let mut crossing = 0;
    for flavor in 0..2 {
        for (_, _, terms) in &hops {
            if crosses(&terms[flavor]) {
                push_pauli_exponential(&mut second, &terms[flavor], dt)?;
                crossing += 1;
            }
        }
    }
    let slices = TrotterSlices {
        slices: vec![Slice::new(first, 1..n), Slice::new(second, 1..n)],
    };
    if crossing > 2 || slices.slices.iter().any(|s| s.admissible.is_empty()) {
        return Err(Error::InvalidInput(
            "weak link does not leave a two-slice factorization; more slices are needed".into(),
        ));
    }
    Ok(slices)
}

/// `H|ψ⟩` as raw amplitudes.
fn apply_hamiltonian(terms: &[(usize, usize, Complex64)], amps: &[Complex64], out: &mut [Complex64]) {
    out.iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
    for &(x, z, c) in terms {
        for (i, a) in amps.iter().enumerate() {
            let sign = if (i & z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            out[i ^ x] += c * a * sign;
        }
    }
}

/// `exp(-i·t·H)|ψ0⟩` by a truncated Taylor series on short sub-steps,
/// accurate to near machine precision.
pub fn exact_evolve(h: &Hamiltonian, psi0: &StateVector, t: f64) -> Result<StateVector> {
    let n = h.n_qubits();
    if n != psi0.n_qubits() {
        return Err(Error::WidthMismatch {
            expected: n,
            found: psi0.n_qubits(),
        });
    }
    if n > 14 {
        return Err(Error::TooLarge { n_qubits: n, limit: 14 });
    }
    // P|i⟩ = i^ny (-1)^{|i&z|} |i^x⟩ folded into a complex coefficient
    let terms: Vec<(usize, usize, Complex64)> = h
        .terms()
        .iter()
        .map(|term| {
            let (x, z) = term.masks();
            let phase = Complex64::i().powu((x & z).count_ones());
            (x as usize, z as usize, phase * term.coeff)
        })
        .collect();
    let norm = h.norm_bound();
    let steps = ((norm * t.abs()) / 0.5).ceil().max(1.0) as usize;
    let tau = t / steps as f64;
    let mut psi = psi0.amplitudes().to_vec();
    let mut term = vec![Complex64::new(0.0, 0.0); psi.len()];
    let mut next = term.clone();
    let mi_tau = Complex64::new(0.0, -tau);
    for _ in 0..steps {
        term.copy_from_slice(&psi);
        for k in 1..60 {
            apply_hamiltonian(&terms, &term, &mut next);
            let f = mi_tau / k as f64;
            let mut size = 0.0;
            for (t, nx) in term.iter_mut().zip(&next) {
                *t = nx * f;
                size += t.norm_sqr();
            }
            for (p, t) in psi.iter_mut().zip(&term) {
                *p += t;
            }
            if size < 1e-34 {
                break;
            }
        }
    }
    StateVector::from_amplitudes(psi).map_err(|_| Error::InvalidInput("exact evolution lost normalization".into()))
}

/// Circuit of X gates preparing a basis state given wire 0 first.
pub fn basis_prep_circuit(bits: &str) -> Result<Circuit> {
    let index = bitstring_to_index(bits)?;
    let mut c = Circuit::new(bits.len());
    for w in 0..bits.len() {
        if index >> w & 1 == 1 {
            c.x(w);
        }
    }
    Ok(c)
}

/// Alternating bitstring `1010…` of length `n`.
pub fn neel_bitstring(n: usize) -> String {
    (0..n).map(|i| if i % 2 == 0 { '1' } else { '0' }).collect()
}

/// `Σ_{i=1..n} (-1)^i Z_i`, sites counted from 1 at wire 0.
pub fn imbalance_operator(n: usize) -> Result<Hamiltonian> {
    let terms = (0..n)
        .map(|w| {
            let sign = if w % 2 == 0 { -1.0 } else { 1.0 };
            PauliTerm::sparse(n, sign, &[(w, Pauli::Z)])
        })
        .collect::<Result<_>>()?;
    Hamiltonian::new(n, terms)
}

/// Staggered average of site spin densities `m_i = (Z_{2i-1} - Z_{2i})/2`:
/// `(1/L) Σ_{i=1..L} (-1)^{i-1} m_i` on `L = n/2` sites.
pub fn staggered_magnetization_operator(n: usize) -> Result<Hamiltonian> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!(
            "staggered magnetization needs an even width, got {n}"
        )));
    }
    let sites = n / 2;
    let mut terms = Vec::with_capacity(n);
    for i in 0..sites {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let c = sign / (2.0 * sites as f64);
        terms.push(PauliTerm::sparse(n, c, &[(2 * i, Pauli::Z)])?);
        terms.push(PauliTerm::sparse(n, -c, &[(2 * i + 1, Pauli::Z)])?);
    }
    Hamiltonian::new(n, terms)
}

/// Value of a sum of single-wire `Z` terms estimated from a histogram.
pub fn z_observable_from_counts(obs: &Hamiltonian, hist: &[u64]) -> Result<f64> {
    if hist.len() != 1 << obs.n_qubits() {
        return Err(Error::WidthMismatch {
            expected: obs.n_qubits(),
            found: hist.len().trailing_zeros() as usize,
        });
    }
    let total: u64 = hist.iter().sum();
    let mut value = 0.0;
    for t in obs.terms() {
        let (x, z) = t.masks();
        if x != 0 {
            return Err(Error::InvalidInput("counts only determine Z-type terms".into()));
        }
        let signed: f64 = hist
            .iter()
            .enumerate()
            .map(|(i, &c)| if (i as u64 & z).count_ones().is_multiple_of(2) { c as f64 } else { -(c as f64) })
            .sum();
        value += t.coeff * signed / total as f64;
    }
    Ok(value)
}

pub fn imbalance(state: &StateVector) -> Result<f64> {
    state.expectation(&imbalance_operator(state.n_qubits())?)
}

pub fn imbalance_from_counts(n: usize, hist: &[u64]) -> Result<f64> {
    z_observable_from_counts(&imbalance_operator(n)?, hist)
}

pub fn staggered_magnetization(state: &StateVector) -> Result<f64> {
    state.expectation(&staggered_magnetization_operator(state.n_qubits())?)
}

pub fn staggered_magnetization_from_counts(n: usize, hist: &[u64]) -> Result<f64> {
    z_observable_from_counts(&staggered_magnetization_operator(n)?, hist)
}
