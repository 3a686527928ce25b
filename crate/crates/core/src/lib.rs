//! Distributed projected variational quantum dynamics.
//!
//! The crate simulates Hamiltonian dynamics by compressing each Trotter step
//! into a fixed-depth parametrized circuit, optimizing one factorizable slice
//! of the step at a time and evaluating the loss with wire cutting.

pub mod ansatz;
pub mod circuit;
pub mod cutting;
pub mod error;
pub mod hamiltonians;
pub mod linalg;
pub mod optimizer;
pub mod pauli;
pub mod seed;
pub mod simulator;
pub mod vqd;

pub use circuit::{Circuit, Gate, GateKind, Param};
pub use error::{Error, Result};
pub use linalg::DenseMatrix;
pub use pauli::{Hamiltonian, Pauli, PauliTerm};
pub use simulator::{NoiseConfig, ShotCounts, StateVector};
pub use ansatz::{AnsatzFamily, AnsatzSpec};
pub use cutting::{CutPoint, Observable, ReconstructionPlan};
pub use hamiltonians::{Slice, TrotterSlices};
pub use optimizer::NftConfig;
pub use vqd::{DynamicsProblem, Estimator, Execution, LossMode, RunResult, TrainConfig, TrainRecord};
