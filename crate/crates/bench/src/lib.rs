//! Shared fixtures for the benchmarks.

use dpvqd_core::ansatz::{basis_state_parameters, build_weak_link, default_bridge};
use dpvqd_core::cutting::{find_cuts, CutPoint};
use dpvqd_core::hamiltonians::{heisenberg_trotter_slices, neel_bitstring, HeisenbergParams};
use dpvqd_core::vqd::build_loss_circuit;
use dpvqd_core::{AnsatzSpec, Circuit, Result};

/// A bound Heisenberg loss circuit and the weak-link ansatz behind it.
pub struct LossFixture {
    pub circuit: Circuit,
    pub ansatz: Circuit,
    pub spec: AnsatzSpec,
    pub theta: Vec<f64>,
    pub cuts: Vec<CutPoint>,
}

/// Loss circuit of the first slice of a disordered Heisenberg step on `n`
/// qubits, starting from the Néel state.
pub fn heisenberg_loss(n: usize) -> Result<LossFixture> {
    let p = HeisenbergParams::new(n, 1.0, 10.0, 1)?;
    let slices = heisenberg_trotter_slices(&p, 0.1)?;
    let (ansatz, spec) = build_weak_link(n, 1, default_bridge(n)?)?;
    let theta = basis_state_parameters(&ansatz, &neel_bitstring(n))?;
    let prev = ansatz.bind_values(&theta)?;
    let circuit = build_loss_circuit(&prev, &slices.slices[0].circuit, &ansatz)?;
    let cuts = find_cuts(&circuit, 1, spec.fragment_width_limit())?.unwrap_or_default();
    Ok(LossFixture {
        circuit,
        ansatz,
        spec,
        theta,
        cuts,
    })
}

/// Full Trotter step of a disordered Heisenberg chain.
pub fn heisenberg_step(n: usize) -> Result<Circuit> {
    let p = HeisenbergParams::new(n, 1.0, 10.0, 1)?;
    heisenberg_trotter_slices(&p, 0.1)?.full_step()
}
