//! Weighted Pauli strings and Hamiltonians built from them.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Result<Pauli> {
        match c {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            other => Err(Error::InvalidInput(format!("not a Pauli label: {other:?}"))),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// `coeff · P_0 ⊗ P_1 ⊗ …`, with `paulis[w]` acting on wire `w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TermDoc", into = "TermDoc")]
pub struct PauliTerm {
    pub coeff: f64,
    paulis: Vec<Pauli>,
}

#[derive(Serialize, Deserialize)]
struct TermDoc {
    coeff: f64,
    /// Labels with wire 0 first, e.g. "XZI".
    paulis: String,
}

impl From<PauliTerm> for TermDoc {
    fn from(t: PauliTerm) -> Self {
        TermDoc {
            coeff: t.coeff,
            paulis: t.label(),
        }
    }
}

impl TryFrom<TermDoc> for PauliTerm {
    type Error = Error;

    fn try_from(d: TermDoc) -> Result<PauliTerm> {
        PauliTerm::from_label(d.coeff, &d.paulis)
    }
}

impl PauliTerm {
    pub fn new(coeff: f64, paulis: Vec<Pauli>) -> Result<PauliTerm> {
        if paulis.is_empty() || paulis.len() > 64 {
            return Err(Error::InvalidInput(format!(
                "Pauli string width {} outside 1..=64",
                paulis.len()
            )));
        }
        Ok(PauliTerm { coeff, paulis })
    }

    /// Parses a label such as `"XZI"` (wire 0 first).
    pub fn from_label(coeff: f64, label: &str) -> Result<PauliTerm> {
        let paulis = label.chars().map(Pauli::from_char).collect::<Result<Vec<_>>>()?;
        PauliTerm::new(coeff, paulis)
    }

    /// Term with the listed operators and identity elsewhere.
    pub fn sparse(n_qubits: usize, coeff: f64, ops: &[(usize, Pauli)]) -> Result<PauliTerm> {
        let mut paulis = vec![Pauli::I; n_qubits];
        for &(w, p) in ops {
            if w >= n_qubits {
                return Err(Error::WireOutOfRange { wire: w, n_qubits });
            }
            paulis[w] = p;
        }
        PauliTerm::new(coeff, paulis)
    }

    pub fn n_qubits(&self) -> usize {
        self.paulis.len()
    }

    pub fn paulis(&self) -> &[Pauli] {
        &self.paulis
    }

    pub fn label(&self) -> String {
        self.paulis.iter().map(|p| p.as_char()).collect()
    }

    /// Wires carrying a non-identity operator, ascending.
    pub fn support(&self) -> Vec<usize> {
        (0..self.paulis.len()).filter(|&w| self.paulis[w] != Pauli::I).collect()
    }

    /// Bit masks `(x, z)`: wire `w` has bit `w` of `x` set for X or Y and
    /// bit `w` of `z` set for Z or Y.
    pub fn masks(&self) -> (u64, u64) {
        let mut x = 0u64;
        let mut z = 0u64;
        for (w, p) in self.paulis.iter().enumerate() {
            match p {
                Pauli::I => {}
                Pauli::X => x |= 1 << w,
                Pauli::Z => z |= 1 << w,
                Pauli::Y => {
                    x |= 1 << w;
                    z |= 1 << w;
                }
            }
        }
        (x, z)
    }
}

impl fmt::Display for PauliTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+} {}", self.coeff, self.label())
    }
}

/// Sum of Pauli terms on a fixed register width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hamiltonian {
    n_qubits: usize,
    terms: Vec<PauliTerm>,
}

impl Hamiltonian {
    pub fn new(n_qubits: usize, terms: Vec<PauliTerm>) -> Result<Hamiltonian> {
        if let Some(t) = terms.iter().find(|t| t.n_qubits() != n_qubits) {
            return Err(Error::WidthMismatch {
                expected: n_qubits,
                found: t.n_qubits(),
            });
        }
        Ok(Hamiltonian { n_qubits, terms })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Upper bound `Σ|coeff|` on the magnitude of any expectation.
    pub fn norm_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.abs()).sum()
    }

    /// Same terms with every coefficient multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Hamiltonian {
        Hamiltonian {
            n_qubits: self.n_qubits,
            terms: self
                .terms
                .iter()
                .map(|t| PauliTerm {
                    coeff: t.coeff * s,
                    paulis: t.paulis.clone(),
                })
                .collect(),
        }
    }
}
