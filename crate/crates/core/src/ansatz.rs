//! Cuttable parametrized circuits.
//!
//! The weak-link ansatz is a staircase of five blocks around a bridge wire
//! index `b`:
//!
//! ```text
//! wires 0..b    : upper block ─┐                 ┌─ upper block (0..b-1)
//! wire  b       :              ├─ bridge (all) ──┤
//! wires b+1..n  : lower block ─┘                 └─ lower block (b..n)
//! ```
//!
//! Every wire pair across boundary `b-1` or `b` is coupled by a single CNOT
//! of the bridge layer, so a loss circuit built from two copies of the
//! ansatz around a slice that factorizes at either of those boundaries can
//! be split with two wire cuts.

use crate::circuit::{Circuit, GateKind};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnsatzFamily {
    Linear,
    WeakLink,
}

/// Shape of a built ansatz.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub n: usize,
    pub family: AnsatzFamily,
    /// Bridge wire for the weak-link family; cut boundary for the linear one.
    pub cut_boundary: usize,
    /// Layers of each corner block (weak link) or of the whole circuit (linear).
    pub block_layers: usize,
    pub parameter_count: usize,
}

impl AnsatzSpec {
    /// Slice boundaries whose loss circuits this ansatz can cut.
    pub fn supported_boundaries(&self) -> Vec<usize> {
        match self.family {
            AnsatzFamily::WeakLink => vec![self.cut_boundary - 1, self.cut_boundary],
            AnsatzFamily::Linear if self.block_layers == 1 => (1..self.n).collect(),
            AnsatzFamily::Linear => Vec::new(),
        }
    }

    /// Largest fragment width expected when cutting a loss circuit.
    pub fn fragment_width_limit(&self) -> usize {
        match self.family {
            AnsatzFamily::WeakLink => weak_link_width(self.n, self.cut_boundary),
            AnsatzFamily::Linear => self.n - 1,
        }
    }
}

fn weak_link_width(n: usize, b: usize) -> usize {
    (b + 2).max(n - b + 1)
}

/// Bridge index minimizing the fragment width, ties broken toward `n/2`.
pub fn default_bridge(n: usize) -> Result<usize> {
    if n < 4 {
        return Err(Error::InvalidInput(format!("weak-link ansatz needs n >= 4, got {n}")));
    }
    Ok((2..=n - 2)
        .min_by(|&a, &b| {
            weak_link_width(n, a)
                .cmp(&weak_link_width(n, b))
                .then_with(|| (2 * a).abs_diff(n).cmp(&(2 * b).abs_diff(n)))
                .then(a.cmp(&b))
        })
        .expect("range is non-empty for n >= 4"))
}

struct Builder {
    c: Circuit,
    next: usize,
}

impl Builder {
    fn rot(&mut self, kind: GateKind, w: usize) {
        let name = format!("t{}", self.next);
        self.next += 1;
        self.c.rotation_sym(kind, w, name);
    }

    fn layer(&mut self, wires: std::ops::Range<usize>) {
        for w in wires.clone() {
            self.rot(GateKind::RY, w);
            self.rot(GateKind::RZ, w);
        }
        for w in wires.start..wires.end.saturating_sub(1) {
            self.c.cnot(w, w + 1);
        }
    }

    fn block(&mut self, wires: std::ops::Range<usize>, layers: usize, closing: &[GateKind]) {
        for _ in 0..layers {
            self.layer(wires.clone());
        }
        for w in wires {
            for &k in closing {
                self.rot(k, w);
            }
        }
    }
}

/// Layers of `RY, RZ` on every wire followed by a CNOT chain `i → i+1`.
pub fn build_linear(n: usize, layers: usize, cut_boundary: usize) -> Result<(Circuit, AnsatzSpec)> {
    if n < 2 || layers == 0 {
        return Err(Error::InvalidInput("linear ansatz needs n >= 2 and layers >= 1".into()));
    }
    if cut_boundary == 0 || cut_boundary >= n {
        return Err(Error::BoundaryOutOfRange {
            boundary: cut_boundary,
            n_qubits: n,
        });
    }
    let mut b = Builder {
        c: Circuit::new(n),
        next: 0,
    };
    for _ in 0..layers {
        b.layer(0..n);
    }
    let spec = AnsatzSpec {
        n,
        family: AnsatzFamily::Linear,
        cut_boundary,
        block_layers: layers,
        parameter_count: b.c.parameters().len(),
    };
    Ok((b.c, spec))
}

/// Staircase ansatz around bridge wire `bridge` (see module docs).
pub fn build_weak_link(n: usize, block_layers: usize, bridge: usize) -> Result<(Circuit, AnsatzSpec)> {
    if n < 4 || block_layers == 0 {
        return Err(Error::InvalidInput("weak-link ansatz needs n >= 4 and block_layers >= 1".into()));
    }
    if bridge < 2 || bridge + 2 > n {
        return Err(Error::InvalidInput(format!(
            "bridge {bridge} leaves no room for corner blocks (need 2 <= b <= {})",
            n - 2
        )));
    }
    let mut b = Builder {
        c: Circuit::new(n),
        next: 0,
    };
    b.block(0..bridge, block_layers, &[GateKind::RZ]);
    b.block(bridge + 1..n, block_layers, &[GateKind::RZ]);
    b.block(0..n, 1, &[GateKind::RZ]);
    b.block(0..bridge - 1, block_layers, &[GateKind::RY, GateKind::RZ]);
    b.block(bridge..n, block_layers, &[GateKind::RY, GateKind::RZ]);
    let spec = AnsatzSpec {
        n,
        family: AnsatzFamily::WeakLink,
        cut_boundary: bridge,
        block_layers,
        parameter_count: b.c.parameters().len(),
    };
    Ok((b.c, spec))
}

pub fn parameter_count(spec: &AnsatzSpec) -> usize {
    spec.parameter_count
}

/// Parameters for which the ansatz prepares the basis state `bits` (wire 0
/// first) exactly: the first `RY` of a wire is set to π where the bit,
/// pulled back through the CNOT network, is 1; all other angles are 0.
pub fn basis_state_parameters(ansatz: &Circuit, bits: &str) -> Result<Vec<f64>> {
    let n = ansatz.n_qubits();
    if bits.len() != n {
        return Err(Error::WidthMismatch {
            expected: n,
            found: bits.len(),
        });
    }
    let mut state: Vec<bool> = bits
        .chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            o => Err(Error::InvalidInput(format!("bad bit {o:?}"))),
        })
        .collect::<Result<_>>()?;
    // with every angle at 0 or π on RY the circuit permutes basis states, so
    // undo the CNOT permutation on the target bits
    for g in ansatz.gates().iter().rev() {
        if g.kind == GateKind::CNOT && state[g.wires[0]] {
            state[g.wires[1]] ^= true;
        }
    }
    let mut first_ry: Vec<Option<usize>> = vec![None; n];
    let mut touched = vec![false; n];
    for g in ansatz.gates() {
        let w = g.wires[0];
        match (g.kind, &g.param) {
            (GateKind::RY, Some(crate::Param::Symbol { index, .. })) if first_ry[w].is_none() => {
                if touched[w] {
                    return Err(Error::InvalidInput(format!(
                        "wire {w} is entangled before its first RY"
                    )));
                }
                first_ry[w] = Some(*index);
            }
            (GateKind::CNOT, _) => g.wires.iter().for_each(|&v| touched[v] = true),
            _ => {}
        }
    }
    let mut theta = vec![0.0; ansatz.parameters().len()];
    for w in 0..n {
        if state[w] {
            let i = first_ry[w].ok_or_else(|| Error::InvalidInput(format!("wire {w} has no RY")))?;
            theta[i] = PI;
        }
    }
    Ok(theta)
}
