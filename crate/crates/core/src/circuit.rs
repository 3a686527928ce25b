//! Circuit intermediate representation.
//!
//! A [`Circuit`] is an ordered list of elementary gates on `n` wires. Rotation
//! gates carry either a fixed angle or a named symbol, so the same structure
//! serves as a parametrized ansatz and as a concrete executable circuit.
//!
//! Conventions shared by every module:
//! - wire 0 is the least significant bit of a basis-state index;
//! - `R_P(φ) = exp(-i φ P / 2)` for `P ∈ {X, Y, Z}`.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::simulator::StateVector;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GateKind {
    RX,
    RY,
    RZ,
    CNOT,
    H,
    X,
    S,
    Sdg,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::CNOT => 2,
            _ => 1,
        }
    }

    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::RX | GateKind::RY | GateKind::RZ)
    }
}

/// Angle slot of a rotation gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Param {
    Fixed(f64),
    /// A named trainable angle. `index` is the position of `name` in the owning
    /// circuit's parameter table; `negated` is set by [`Circuit::adjoint`].
    Symbol {
        name: String,
        index: usize,
        negated: bool,
    },
}

impl Param {
    pub fn symbol(name: impl Into<String>) -> Self {
        Param::Symbol {
            name: name.into(),
            index: 0,
            negated: false,
        }
    }

    fn negate(&self) -> Self {
        match self {
            Param::Fixed(a) => Param::Fixed(-a),
            Param::Symbol {
                name,
                index,
                negated,
            } => Param::Symbol {
                name: name.clone(),
                index: *index,
                negated: !negated,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub wires: Vec<usize>,
    pub param: Option<Param>,
}

impl Gate {
    /// Fixed angle of a bound rotation gate.
    pub fn angle(&self) -> Option<f64> {
        match self.param {
            Some(Param::Fixed(a)) => Some(a),
            _ => None,
        }
    }

    pub fn symbol_name(&self) -> Option<&str> {
        match &self.param {
            Some(Param::Symbol { name, .. }) => Some(name),
            _ => None,
        }
    }

    pub fn adjoint(&self) -> Gate {
        let kind = match self.kind {
            GateKind::S => GateKind::Sdg,
            GateKind::Sdg => GateKind::S,
            k => k,
        };
        Gate {
            kind,
            wires: self.wires.clone(),
            param: self.param.as_ref().map(Param::negate),
        }
    }

    fn straddles(&self, boundary: usize) -> bool {
        let lo = self.wires.iter().copied().min().unwrap_or(0);
        let hi = self.wires.iter().copied().max().unwrap_or(0);
        lo < boundary && boundary <= hi
    }
}

/// Ordered gate sequence on `n_qubits` wires.
///
/// Circuits are values: every transformation returns a new circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CircuitDoc", into = "CircuitDoc")]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    params: Vec<String>,
}

impl Circuit {
    /// Empty circuit on `n_qubits` wires. Panics if `n_qubits == 0`.
    pub fn new(n_qubits: usize) -> Self {
        assert!(n_qubits > 0, "a circuit needs at least one wire");
        Self {
            n_qubits,
            gates: Vec::new(),
            params: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Symbol names in first-appearance order.
    pub fn parameters(&self) -> &[String] {
        &self.params
    }

    pub fn is_bound(&self) -> bool {
        self.params.is_empty()
    }

    pub fn count(&self, kind: GateKind) -> usize {
        self.gates.iter().filter(|g| g.kind == kind).count()
    }

    /// Appends a gate after validating arity, wires and angle slot.
    pub fn push(&mut self, kind: GateKind, wires: &[usize], param: Option<Param>) -> Result<&mut Self> {
        if wires.len() != kind.arity() {
            return Err(Error::InvalidGate(format!(
                "{kind:?} acts on {} wires, got {}",
                kind.arity(),
                wires.len()
            )));
        }
        if let Some(&w) = wires.iter().find(|&&w| w >= self.n_qubits) {
            return Err(Error::WireOutOfRange {
                wire: w,
                n_qubits: self.n_qubits,
            });
        }
        if wires.len() == 2 && wires[0] == wires[1] {
            return Err(Error::InvalidGate(format!("{kind:?} needs distinct wires")));
        }
        match (kind.is_rotation(), &param) {
            (true, None) => return Err(Error::InvalidGate(format!("{kind:?} needs an angle"))),
            (false, Some(_)) => return Err(Error::InvalidGate(format!("{kind:?} takes no angle"))),
            _ => {}
        }
        let param = param.map(|p| match p {
            Param::Symbol { name, negated, .. } => {
                let index = self.register(&name);
                Param::Symbol {
                    name,
                    index,
                    negated,
                }
            }
            fixed => fixed,
        });
        self.gates.push(Gate {
            kind,
            wires: wires.to_vec(),
            param,
        });
        Ok(self)
    }

    fn register(&mut self, name: &str) -> usize {
        match self.params.iter().position(|p| p == name) {
            Some(i) => i,
            None => {
                self.params.push(name.to_string());
                self.params.len() - 1
            }
        }
    }

    fn must(&mut self, kind: GateKind, wires: &[usize], param: Option<Param>) -> &mut Self {
        if let Err(e) = self.push(kind, wires, param) {
            panic!("{e}");
        }
        self
    }

    pub fn rx(&mut self, q: usize, angle: f64) -> &mut Self {
        self.must(GateKind::RX, &[q], Some(Param::Fixed(angle)))
    }

    pub fn ry(&mut self, q: usize, angle: f64) -> &mut Self {
        self.must(GateKind::RY, &[q], Some(Param::Fixed(angle)))
    }

    pub fn rz(&mut self, q: usize, angle: f64) -> &mut Self {
        self.must(GateKind::RZ, &[q], Some(Param::Fixed(angle)))
    }

    /// Rotation with a named trainable angle.
    pub fn rotation_sym(&mut self, kind: GateKind, q: usize, name: impl Into<String>) -> &mut Self {
        self.must(kind, &[q], Some(Param::symbol(name)))
    }

    pub fn cnot(&mut self, control: usize, target: usize) -> &mut Self {
        self.must(GateKind::CNOT, &[control, target], None)
    }

    pub fn h(&mut self, q: usize) -> &mut Self {
        self.must(GateKind::H, &[q], None)
    }

    pub fn x(&mut self, q: usize) -> &mut Self {
        self.must(GateKind::X, &[q], None)
    }

    pub fn s(&mut self, q: usize) -> &mut Self {
        self.must(GateKind::S, &[q], None)
    }

    pub fn sdg(&mut self, q: usize) -> &mut Self {
        self.must(GateKind::Sdg, &[q], None)
    }

    /// `a` followed by `b`. Symbols of `b` that collide with symbols of `a`
    /// are renamed so the two parameter sets stay disjoint.
    pub fn compose(&self, other: &Circuit) -> Result<Circuit> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::WidthMismatch {
                expected: self.n_qubits,
                found: other.n_qubits,
            });
        }
        let taken: HashSet<&str> = self
            .params
            .iter()
            .chain(other.params.iter())
            .map(String::as_str)
            .collect();
        let mut renames: HashMap<&str, String> = HashMap::new();
        let mut fresh: HashSet<String> = HashSet::new();
        for name in &other.params {
            if self.params.contains(name) {
                let mut k = 1;
                let new_name = loop {
                    let candidate = format!("{name}#{k}");
                    if !taken.contains(candidate.as_str()) && !fresh.contains(&candidate) {
                        break candidate;
                    }
                    k += 1;
                };
                fresh.insert(new_name.clone());
                renames.insert(name.as_str(), new_name);
            }
        }
        let mut out = self.clone();
        for g in &other.gates {
            let mut g = g.clone();
            if let Some(Param::Symbol { name, .. }) = &mut g.param {
                if let Some(new_name) = renames.get(name.as_str()) {
                    *name = new_name.clone();
                }
            }
            out.gates.push(g);
        }
        out.reindex();
        Ok(out)
    }

    /// Reversed gate order with each gate inverted.
    pub fn adjoint(&self) -> Circuit {
        let mut out = Circuit {
            n_qubits: self.n_qubits,
            gates: self.gates.iter().rev().map(Gate::adjoint).collect(),
            params: Vec::new(),
        };
        out.reindex();
        out
    }

    /// Substitutes every symbol by the matching value.
    pub fn bind(&self, values: &BTreeMap<String, f64>) -> Result<Circuit> {
        let missing: Vec<String> = self
            .params
            .iter()
            .filter(|p| !values.contains_key(*p))
            .cloned()
            .collect();
        if !missing.is_empty() {
            return Err(Error::UnboundSymbols(missing));
        }
        let extra: Vec<String> = values
            .keys()
            .filter(|k| !self.params.contains(k))
            .cloned()
            .collect();
        if !extra.is_empty() {
            return Err(Error::UnknownSymbols(extra));
        }
        Ok(self.bind_with(|name, _| values[name]))
    }

    /// Binds symbols positionally, in parameter-table order.
    pub fn bind_values(&self, values: &[f64]) -> Result<Circuit> {
        if values.len() != self.params.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} parameter values, got {}",
                self.params.len(),
                values.len()
            )));
        }
        Ok(self.bind_with(|_, index| values[index]))
    }

    /// Binds the symbols present in `values` and leaves the rest symbolic.
    pub fn bind_partial(&self, values: &HashMap<String, f64>) -> Circuit {
        let mut out = self.clone();
        for g in &mut out.gates {
            if let Some(Param::Symbol { name, negated, .. }) = &g.param {
                if let Some(&v) = values.get(name) {
                    g.param = Some(Param::Fixed(if *negated { -v } else { v }));
                }
            }
        }
        out.reindex();
        out
    }

    fn bind_with(&self, value: impl Fn(&str, usize) -> f64) -> Circuit {
        let gates = self
            .gates
            .iter()
            .map(|g| {
                let param = g.param.as_ref().map(|p| match p {
                    Param::Symbol {
                        name,
                        index,
                        negated,
                    } => {
                        let v = value(name, *index);
                        Param::Fixed(if *negated { -v } else { v })
                    }
                    fixed => fixed.clone(),
                });
                Gate {
                    kind: g.kind,
                    wires: g.wires.clone(),
                    param,
                }
            })
            .collect();
        Circuit {
            n_qubits: self.n_qubits,
            gates,
            params: Vec::new(),
        }
    }

    fn reindex(&mut self) {
        self.params.clear();
        let mut index_of: HashMap<String, usize> = HashMap::new();
        for g in &mut self.gates {
            if let Some(Param::Symbol { name, index, .. }) = &mut g.param {
                let next = index_of.len();
                let i = *index_of.entry(name.clone()).or_insert_with(|| {
                    self.params.push(name.clone());
                    next
                });
                *index = i;
            }
        }
    }

    /// Layer count under greedy left-alignment. A gate enters the earliest
    /// layer after the last layer occupied on any of its wires; a run of
    /// consecutive single-qubit gates on one wire shares a single layer, as
    /// after single-qubit gate fusion.
    pub fn depth(&self) -> usize {
        self.layer_count(true)
    }

    /// Greedy left-aligned layer count without single-qubit fusion.
    pub fn elementary_depth(&self) -> usize {
        self.layer_count(false)
    }

    fn layer_count(&self, fuse: bool) -> usize {
        let mut level = vec![0usize; self.n_qubits];
        let mut trailing_single = vec![false; self.n_qubits];
        let mut depth = 0;
        for g in &self.gates {
            if fuse && g.wires.len() == 1 && trailing_single[g.wires[0]] {
                continue;
            }
            let layer = g.wires.iter().map(|&w| level[w]).max().unwrap_or(0) + 1;
            for &w in &g.wires {
                level[w] = layer;
                trailing_single[w] = g.wires.len() == 1;
            }
            depth = depth.max(layer);
        }
        depth
    }

    /// True iff no gate acts on wires on both sides of `boundary`, the cut
    /// between wires `boundary - 1` and `boundary`.
    pub fn factor_boundary(&self, boundary: usize) -> Result<bool> {
        self.check_boundary(boundary)?;
        Ok(!self.gates.iter().any(|g| g.straddles(boundary)))
    }

    /// Splits a circuit that factorizes at `boundary` into the circuits on
    /// wires `0..boundary` and `boundary..n` (the latter re-indexed from 0).
    pub fn split_at_boundary(&self, boundary: usize) -> Result<(Circuit, Circuit)> {
        if !self.factor_boundary(boundary)? {
            return Err(Error::InvalidInput(format!(
                "circuit does not factorize at boundary {boundary}"
            )));
        }
        let mut low = Circuit::new(boundary);
        let mut high = Circuit::new(self.n_qubits - boundary);
        for g in &self.gates {
            if g.wires[0] < boundary {
                low.gates.push(g.clone());
            } else {
                let mut g = g.clone();
                g.wires.iter_mut().for_each(|w| *w -= boundary);
                high.gates.push(g);
            }
        }
        low.reindex();
        high.reindex();
        Ok((low, high))
    }

    pub(crate) fn check_boundary(&self, boundary: usize) -> Result<()> {
        if boundary == 0 || boundary >= self.n_qubits {
            return Err(Error::BoundaryOutOfRange {
                boundary,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    /// Full unitary, wire 0 least significant. Limited to 10 qubits.
    pub fn unitary(&self) -> Result<DenseMatrix> {
        if self.n_qubits > 10 {
            return Err(Error::TooLarge {
                n_qubits: self.n_qubits,
                limit: 10,
            });
        }
        self.ensure_bound()?;
        let dim = 1usize << self.n_qubits;
        let mut u = DenseMatrix::zeros(dim);
        for col in 0..dim {
            let mut state = StateVector::basis(self.n_qubits, col);
            state.apply(self)?;
            for (row, a) in state.amplitudes().iter().enumerate() {
                u.set(row, col, *a);
            }
        }
        Ok(u)
    }

    pub(crate) fn ensure_bound(&self) -> Result<()> {
        if self.params.is_empty() {
            Ok(())
        } else {
            Err(Error::UnboundSymbols(self.params.clone()))
        }
    }

    /// Copies the gates selected by `keep` onto a new register, mapping
    /// original wire `w` to `wire_map[w]`.
    pub(crate) fn extract(
        &self,
        n_qubits: usize,
        gate_indices: &[usize],
        wire_of: impl Fn(usize, usize) -> usize,
    ) -> Circuit {
        let mut out = Circuit::new(n_qubits);
        for &gi in gate_indices {
            let g = &self.gates[gi];
            out.gates.push(Gate {
                kind: g.kind,
                wires: g.wires.iter().map(|&w| wire_of(gi, w)).collect(),
                param: g.param.clone(),
            });
        }
        out.reindex();
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Circuit> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Serialized circuit: `{n_qubits, gates: [{kind, wires, angle | symbol}]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct CircuitDoc {
    n_qubits: usize,
    gates: Vec<GateDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GateDoc {
    kind: GateKind,
    wires: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    angle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    symbol: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    negated: bool,
}

impl From<Circuit> for CircuitDoc {
    fn from(c: Circuit) -> Self {
        let gates = c
            .gates
            .into_iter()
            .map(|g| {
                let (angle, symbol, negated) = match g.param {
                    None => (None, None, false),
                    Some(Param::Fixed(a)) => (Some(a), None, false),
                    Some(Param::Symbol { name, negated, .. }) => (None, Some(name), negated),
                };
                GateDoc {
                    kind: g.kind,
                    wires: g.wires,
                    angle,
                    symbol,
                    negated,
                }
            })
            .collect();
        CircuitDoc {
            n_qubits: c.n_qubits,
            gates,
        }
    }
}

impl TryFrom<CircuitDoc> for Circuit {
    type Error = Error;

    fn try_from(doc: CircuitDoc) -> Result<Circuit> {
        if doc.n_qubits == 0 {
            return Err(Error::InvalidInput("n_qubits must be positive".into()));
        }
        let mut c = Circuit::new(doc.n_qubits);
        for g in doc.gates {
            let param = match (g.angle, g.symbol) {
                (Some(_), Some(_)) => {
                    return Err(Error::InvalidGate("gate has both angle and symbol".into()))
                }
                (Some(a), None) => Some(Param::Fixed(a)),
                (None, Some(name)) => Some(Param::Symbol {
                    name,
                    index: 0,
                    negated: g.negated,
                }),
                (None, None) => None,
            };
            c.push(g.kind, &g.wires, param)?;
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bell() -> Circuit {
        let mut c = Circuit::new(2);
        c.h(0).cnot(0, 1);
        c
    }

    #[test]
    fn gate_validation() {
        let mut c = Circuit::new(2);
        assert!(c.push(GateKind::CNOT, &[0, 0], None).is_err());
        assert!(c.push(GateKind::CNOT, &[0], None).is_err());
        assert!(c.push(GateKind::RX, &[0], None).is_err());
        assert!(c.push(GateKind::H, &[0], Some(Param::Fixed(1.0))).is_err());
        assert!(matches!(
            c.push(GateKind::X, &[2], None),
            Err(Error::WireOutOfRange { wire: 2, .. })
        ));
    }

    #[test]
    fn compose_with_empty_is_identity() {
        let c = bell();
        let empty = Circuit::new(2);
        assert_eq!(c.compose(&empty).unwrap(), c);
        assert_eq!(empty.compose(&c).unwrap(), c);
        assert!(c.compose(&Circuit::new(3)).is_err());
    }

    #[test]
    fn compose_renames_colliding_symbols() {
        let mut a = Circuit::new(1);
        a.rotation_sym(GateKind::RY, 0, "t");
        let c = a.compose(&a).unwrap();
        assert_eq!(c.parameters(), &["t".to_string(), "t#1".to_string()]);
        // symbols only used on one side stay untouched
        let mut b = Circuit::new(1);
        b.rotation_sym(GateKind::RZ, 0, "u");
        let c = a.compose(&b).unwrap();
        assert_eq!(c.parameters(), &["t".to_string(), "u".to_string()]);
    }

    #[test]
    fn adjoint_reverses_and_negates() {
        let mut c = Circuit::new(1);
        c.rz(0, 0.3);
        let adj = c.adjoint();
        assert_eq!(adj.gates()[0].angle(), Some(-0.3));

        let adj = bell().adjoint();
        assert_eq!(adj.gates()[0].kind, GateKind::CNOT);
        assert_eq!(adj.gates()[1].kind, GateKind::H);

        let mut s = Circuit::new(1);
        s.s(0).sdg(0);
        let adj = s.adjoint();
        assert_eq!(adj.gates()[0].kind, GateKind::S);
        assert_eq!(adj.gates()[1].kind, GateKind::Sdg);
    }

    #[test]
    fn adjoint_negates_symbols() {
        let mut c = Circuit::new(1);
        c.rotation_sym(GateKind::RY, 0, "a");
        let adj = c.adjoint();
        let bound = adj.bind(&BTreeMap::from([("a".to_string(), 0.4)])).unwrap();
        assert_eq!(bound.gates()[0].angle(), Some(-0.4));
        assert_eq!(c.adjoint().adjoint(), c);
    }

    #[test]
    fn bind_contract() {
        let mut c = Circuit::new(2);
        c.rotation_sym(GateKind::RY, 0, "a").rotation_sym(GateKind::RZ, 1, "b");
        let b = c
            .bind(&BTreeMap::from([("a".into(), 0.1), ("b".into(), 0.2)]))
            .unwrap();
        assert!(b.is_bound());
        assert_eq!(b.gates()[1].angle(), Some(0.2));

        match c.bind(&BTreeMap::from([("a".into(), 0.1)])) {
            Err(Error::UnboundSymbols(names)) => assert_eq!(names, vec!["b".to_string()]),
            other => panic!("unexpected {other:?}"),
        }
        let extra = BTreeMap::from([("a".into(), 0.1), ("b".into(), 0.2), ("z".into(), 0.0)]);
        assert!(matches!(c.bind(&extra), Err(Error::UnknownSymbols(_))));
    }

    #[test]
    fn bind_zero_rotation_is_identity() {
        let mut c = Circuit::new(1);
        c.rotation_sym(GateKind::RY, 0, "t0");
        let u = c
            .bind(&BTreeMap::from([("t0".into(), 0.0)]))
            .unwrap()
            .unitary()
            .unwrap();
        assert!(u.max_abs_diff(&DenseMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn depth_basics() {
        assert_eq!(Circuit::new(3).depth(), 0);
        let mut c = Circuit::new(2);
        c.h(0).rz(0, 0.1).cnot(0, 1);
        assert_eq!(c.depth(), 2);
        assert_eq!(c.elementary_depth(), 3);
    }

    #[test]
    fn factor_boundary_checks() {
        let mut c = Circuit::new(3);
        c.h(0).cnot(0, 1).x(2);
        assert!(!c.factor_boundary(1).unwrap());
        assert!(c.factor_boundary(2).unwrap());
        assert!(c.factor_boundary(0).is_err());
        assert!(c.factor_boundary(3).is_err());
    }

    #[test]
    fn unitary_of_x() {
        let mut c = Circuit::new(1);
        assert!(c.unitary().unwrap().max_abs_diff(&DenseMatrix::identity(2)) == 0.0);
        c.x(0);
        let u = c.unitary().unwrap();
        assert_eq!(u.get(0, 1).re, 1.0);
        assert_eq!(u.get(1, 0).re, 1.0);
        assert_eq!(u.get(0, 0).norm(), 0.0);
    }

    #[test]
    fn unitary_rejects_symbols() {
        let mut c = Circuit::new(1);
        c.rotation_sym(GateKind::RX, 0, "a");
        assert!(matches!(c.unitary(), Err(Error::UnboundSymbols(_))));
    }

    #[test]
    fn json_round_trip() {
        let mut c = Circuit::new(3);
        c.h(0)
            .rotation_sym(GateKind::RY, 1, "a")
            .cnot(1, 2)
            .rz(2, -0.25)
            .sdg(0);
        let c = c.compose(&c.adjoint()).unwrap();
        let json = c.to_json().unwrap();
        assert_eq!(Circuit::from_json(&json).unwrap(), c);
        assert!(Circuit::from_json(r#"{"n_qubits":1,"gates":[{"kind":"RX","wires":[0]}]}"#).is_err());
    }
}
