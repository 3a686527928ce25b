//! Trotter circuits against a dense matrix exponential.

use dpvqd_core::hamiltonians::{
    heisenberg_hamiltonian, heisenberg_trotter_slices, hubbard_jw_hamiltonian, hubbard_trotter_slices, neel_bitstring,
    HeisenbergParams, HubbardParams, Spin,
};
use dpvqd_core::{Hamiltonian, Pauli, StateVector};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

fn pauli(p: Pauli) -> DMatrix<Complex64> {
    let (o, i) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0));
    let l = Complex64::new(1.0, 0.0);
    match p {
        Pauli::I => DMatrix::from_row_slice(2, 2, &[l, o, o, l]),
        Pauli::X => DMatrix::from_row_slice(2, 2, &[o, l, l, o]),
        Pauli::Y => DMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
        Pauli::Z => DMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
    }
}

/// Dense matrix with wire 0 as the least significant bit.
fn dense(h: &Hamiltonian) -> DMatrix<Complex64> {
    let dim = 1 << h.n_qubits();
    let mut m = DMatrix::zeros(dim, dim);
    for t in h.terms() {
        let mut k = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
        for &p in t.paulis().iter().rev() {
            k = k.kronecker(&pauli(p));
        }
        m += k * Complex64::new(t.coeff, 0.0);
    }
    m
}

fn evolve(h: &DMatrix<Complex64>, psi: &DVector<Complex64>, t: f64) -> DVector<Complex64> {
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&e| Complex64::from_polar(1.0, -e * t)),
    );
    let coeffs = v.adjoint() * psi;
    v * coeffs.component_mul(&phases)
}

fn fidelity(a: &StateVector, b: &DVector<Complex64>) -> f64 {
    a.amplitudes().iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum::<Complex64>().norm_sqr()
}

fn trotter_fidelity(h: &Hamiltonian, step: &dpvqd_core::Circuit, bits: &str, steps: usize, t: f64) -> f64 {
    let mut s = StateVector::from_bitstring(bits).unwrap();
    for _ in 0..steps {
        s.apply(step).unwrap();
    }
    let psi0 = DVector::from_iterator(1 << bits.len(), StateVector::from_bitstring(bits).unwrap().amplitudes().iter().copied());
    fidelity(&s, &evolve(&dense(h), &psi0, t))
}

#[test]
fn heisenberg_fidelity_improves_as_dt_shrinks() {
    let p = HeisenbergParams::new(4, 1.0, 1.0, 3).unwrap();
    let h = heisenberg_hamiltonian(&p).unwrap();
    let total = 0.8;
    let mut last = 0.0;
    for dt in [0.4f64, 0.2, 0.1, 0.05] {
        let steps = (total / dt).round() as usize;
        let step = heisenberg_trotter_slices(&p, dt).unwrap().full_step().unwrap();
        let f = trotter_fidelity(&h, &step, &neel_bitstring(4), steps, total);
        assert!(f > last, "dt = {dt}: {f} <= {last}");
        last = f;
    }
    assert!(last > 0.99);
}

#[test]
fn hubbard_fidelity_improves_as_dt_shrinks() {
    let p = HubbardParams {
        n_sites: 3,
        weak_link: Some((1, Spin::Down)),
        ..HubbardParams::default()
    };
    let h = hubbard_jw_hamiltonian(&p).unwrap();
    let mut last = 0.0;
    for dt in [0.4f64, 0.2, 0.1, 0.05] {
        let steps = (0.8 / dt).round() as usize;
        let step = hubbard_trotter_slices(&p, dt).unwrap().full_step().unwrap();
        let f = trotter_fidelity(&h, &step, "100110", steps, 0.8);
        assert!(f > last, "dt = {dt}: {f} <= {last}");
        last = f;
    }
}

#[test]
fn exact_evolve_agrees_with_eigendecomposition() {
    let p = HeisenbergParams::new(5, 1.0, 10.0, 1).unwrap();
    let h = heisenberg_hamiltonian(&p).unwrap();
    let psi0 = StateVector::from_bitstring("10101").unwrap();
    let v0 = DVector::from_iterator(32, psi0.amplitudes().iter().copied());
    for t in [0.1, 0.7, 2.0] {
        let ours = dpvqd_core::hamiltonians::exact_evolve(&h, &psi0, t).unwrap();
        let theirs = evolve(&dense(&h), &v0, t);
        let diff = ours.amplitudes().iter().zip(theirs.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-9, "t = {t}: {diff}");
    }
}
