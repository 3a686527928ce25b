//! Projected variational dynamics, plain and distributed.
//!
//! Each sub-iteration trains the ansatz `V(θ)` to absorb one Trotter slice
//! `T` applied to the previous variational state by minimizing the
//! compute–uncompute infidelity
//!
//! ```text
//! L(θ) = 1 - |⟨0| V(θ)† T V_prev |0⟩|²
//! ```
//!
//! (or its per-qubit average in local mode). In cut execution the loss
//! circuit is split into fragments with wire cuts, and the optimizer reuses
//! the results of fragments that a parameter does not touch.

use crate::ansatz::{basis_state_parameters, AnsatzSpec};
use crate::circuit::Circuit;
use crate::cutting::{
    decompose_with_limit, execute_fragment, find_cuts, reconstruct, ExecMode, FragmentResult, LocalOp, Observable,
    ReconstructionPlan,
};
use crate::error::{Error, Result};
use crate::hamiltonians::{basis_prep_circuit, TrotterSlices};
use crate::optimizer::{nft_minimize, FragmentedLoss, NftConfig};
use crate::pauli::Hamiltonian;
use crate::seed::{derive_seed, rng};
use crate::simulator::{estimate_expectation, sample_histogram, NoiseConfig, StateVector, DEFAULT_SHOTS};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    /// `1 - P(all wires read 0)`.
    Global,
    /// `1 - mean_j P(wire j reads 0)`.
    Local,
}

impl LossMode {
    /// Global up to 8 qubits, local beyond.
    pub fn default_for(n_qubits: usize) -> Self {
        if n_qubits <= 8 {
            LossMode::Global
        } else {
            LossMode::Local
        }
    }

    pub fn observable(self, n_qubits: usize) -> Observable {
        match self {
            LossMode::Global => Observable::all_zeros(n_qubits),
            LossMode::Local => Observable::mean_local_zeros(n_qubits),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Uncut,
    Cut,
}

/// How circuit outputs are turned into numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Exact,
    Shots { shots: u64, noise: NoiseConfig },
}

impl Estimator {
    pub fn shots(shots: u64) -> Self {
        Estimator::Shots {
            shots,
            noise: NoiseConfig::noiseless(),
        }
    }
}

/// Starting parameters of the first sub-iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Angles that make the ansatz prepare the initial basis state exactly.
    BasisState,
    /// Basis-state angles plus uniform noise in `[-scale, scale]`, which
    /// moves the optimizer off the symmetric starting point.
    PerturbedBasis { scale: f64 },
    /// Uniform angles in `[-scale, scale]`.
    Random { scale: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub loss_mode: LossMode,
    pub execution: Execution,
    pub estimator: Estimator,
    pub nft: NftConfig,
    pub max_cuts: usize,
    pub init: Init,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            loss_mode: LossMode::default_for(n_qubits),
            execution: Execution::Cut,
            estimator: Estimator::Exact,
            nft: NftConfig::default(),
            max_cuts: crate::cutting::DEFAULT_MAX_CUTS,
            init: Init::BasisState,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        // negated so that NaN is rejected too
        if !(self.nft.plateau_tol > 0.0) || self.nft.max_sweeps == 0 || self.nft.reset_interval == 0 {
            return Err(Error::InvalidInput("NFT settings must be positive".into()));
        }
        if let Estimator::Shots { shots, noise } = self.estimator {
            if shots == 0 {
                return Err(Error::InvalidInput("shots must be positive".into()));
            }
            noise.validate()?;
        }
        Ok(())
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        let mut cfg = Self::new(1);
        cfg.estimator = Estimator::Shots {
            shots: DEFAULT_SHOTS,
            noise: NoiseConfig::noiseless(),
        };
        cfg.loss_mode = LossMode::Global;
        cfg
    }
}

/// `prev`, then `slice`, then the adjoint of `ansatz`.
pub fn build_loss_circuit(prev: &Circuit, slice: &Circuit, ansatz: &Circuit) -> Result<Circuit> {
    if !prev.is_bound() {
        return Err(Error::UnboundSymbols(prev.parameters().to_vec()));
    }
    prev.compose(slice)?.compose(&ansatz.adjoint())
}

/// Execution counters of one loss evaluator.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LossStats {
    pub evaluations: u64,
    pub fresh_evaluations: u64,
    /// Circuit variants actually executed.
    pub variants_executed: u64,
    /// Variants a cache-free evaluator would have executed for the same calls.
    pub variants_naive: u64,
    pub shots_used: u64,
    /// Variants executed by single-parameter probes only.
    pub update_variants_executed: u64,
    /// Variants a cache-free evaluator would have executed for those probes.
    pub update_variants_naive: u64,
    /// Executed variants per fragment (a single entry for uncut execution).
    pub variants_per_fragment: Vec<u64>,
    /// Largest |cut - uncut| over checked exact evaluations.
    pub max_cut_gap: Option<f64>,
}

struct CutBackend {
    plan: ReconstructionPlan,
    /// Fragment holding each parameter's gate.
    fragment_of_param: Vec<usize>,
    cache: Vec<FragmentResult>,
    probes: Vec<(f64, FragmentResult)>,
    total_variants: u64,
}

enum Backend {
    Uncut,
    Cut(Box<CutBackend>),
}

/// Loss of one sub-iteration as a function of the ansatz parameters.
pub struct LossEvaluator {
    circuit: Circuit,
    names: Vec<String>,
    observable: Observable,
    estimator: Estimator,
    seed: u64,
    counter: u64,
    check_gap: bool,
    backend: Backend,
    pub stats: LossStats,
}

fn diagonal_value(obs: &Observable, hist: &[u64]) -> f64 {
    let total: u64 = hist.iter().sum();
    let mut v = 0.0;
    for (i, &c) in hist.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let x: f64 = obs
            .terms
            .iter()
            .map(|t| {
                t.coeff
                    * t.ops
                        .iter()
                        .enumerate()
                        .map(|(w, op)| {
                            let bit = i >> w & 1;
                            match op {
                                LocalOp::Proj0 => (bit == 0) as u8 as f64,
                                LocalOp::Z => 1.0 - 2.0 * bit as f64,
                                _ => 1.0,
                            }
                        })
                        .product::<f64>()
            })
            .sum();
        v += x * c as f64;
    }
    v / total as f64
}

impl LossEvaluator {
    /// `names` lists the symbols in parameter-vector order. With `cuts`, the
    /// loss is evaluated by cutting at those points.
    pub fn new(
        circuit: Circuit,
        names: Vec<String>,
        loss_mode: LossMode,
        estimator: Estimator,
        cuts: Option<(&[crate::cutting::CutPoint], usize)>,
        seed: u64,
    ) -> Result<Self> {
        let mut missing: Vec<String> = circuit
            .parameters()
            .iter()
            .filter(|p| !names.contains(p))
            .cloned()
            .collect();
        missing.extend(names.iter().filter(|n| !circuit.parameters().contains(n)).cloned());
        if !missing.is_empty() {
            return Err(Error::UnknownSymbols(missing));
        }
        let n = circuit.n_qubits();
        let backend = match cuts {
            None => Backend::Uncut,
            Some((cuts, max_cuts)) => {
                let plan = decompose_with_limit(&circuit, cuts, max_cuts)?;
                let fragment_of_param = names
                    .iter()
                    .map(|name| {
                        plan.fragments
                            .iter()
                            .position(|f| f.circuit.parameters().contains(name))
                            .expect("every symbol lands in a fragment")
                    })
                    .collect();
                Backend::Cut(Box::new(CutBackend {
                    plan,
                    fragment_of_param,
                    cache: Vec::new(),
                    probes: Vec::new(),
                    total_variants: 0,
                }))
            }
        };
        let fragments = match &backend {
            Backend::Uncut => 1,
            Backend::Cut(b) => b.plan.fragments.len(),
        };
        Ok(Self {
            stats: LossStats {
                variants_per_fragment: vec![0; fragments],
                ..LossStats::default()
            },
            observable: loss_mode.observable(n),
            circuit,
            names,
            estimator,
            seed,
            counter: 0,
            check_gap: matches!(estimator, Estimator::Exact),
            backend,
        })
    }

    pub fn plan(&self) -> Option<&ReconstructionPlan> {
        match &self.backend {
            Backend::Cut(b) => Some(&b.plan),
            Backend::Uncut => None,
        }
    }

    /// Disables the uncut cross-check of exact cut evaluations.
    pub fn without_gap_check(mut self) -> Self {
        self.check_gap = false;
        self
    }

    fn params(&self, theta: &[f64]) -> HashMap<String, f64> {
        self.names.iter().cloned().zip(theta.iter().copied()).collect()
    }

    fn mode(&mut self) -> ExecMode {
        self.counter += 1;
        match self.estimator {
            Estimator::Exact => ExecMode::Exact,
            Estimator::Shots { shots, noise } => ExecMode::Shots {
                shots,
                seed: derive_seed(self.seed, &[self.counter]),
                noise,
            },
        }
    }

    fn uncut_value(&mut self, theta: &[f64]) -> Result<f64> {
        let bound = self.circuit.bind_partial(&self.params(theta));
        let state = StateVector::from_circuit(&bound)?;
        match self.mode() {
            ExecMode::Exact => self.observable.expectation(&state),
            ExecMode::Shots { shots, seed, noise } => {
                let hist = sample_histogram(&state, shots, &noise, &bound, seed)?;
                self.stats.shots_used += shots;
                Ok(diagonal_value(&self.observable, &hist))
            }
        }
    }

    fn run_fragment(&mut self, f: usize, theta: &[f64]) -> Result<FragmentResult> {
        let params = self.params(theta);
        let mode = self.mode();
        let Backend::Cut(b) = &self.backend else {
            unreachable!("fragment execution needs a cut backend")
        };
        let r = execute_fragment(&b.plan, f, &self.observable, &params, &mode)?;
        self.stats.variants_executed += r.variants_executed;
        self.stats.variants_per_fragment[f] += r.variants_executed;
        self.stats.shots_used += r.shots_used;
        Ok(r)
    }

    fn reconstructed(&self, results: &[FragmentResult]) -> Result<f64> {
        let Backend::Cut(b) = &self.backend else {
            unreachable!("reconstruction needs a cut backend")
        };
        Ok(reconstruct(&b.plan, &self.observable, results)?.value)
    }
}

impl FragmentedLoss for LossEvaluator {
    fn num_params(&self) -> usize {
        self.names.len()
    }

    fn evaluate(&mut self, theta: &[f64]) -> Result<f64> {
        self.stats.evaluations += 1;
        self.stats.fresh_evaluations += 1;
        let (n_fragments, total) = match &self.backend {
            Backend::Uncut => {
                self.stats.variants_executed += 1;
                self.stats.variants_per_fragment[0] += 1;
                self.stats.variants_naive += 1;
                return Ok(1.0 - self.uncut_value(theta)?);
            }
            Backend::Cut(b) => (b.plan.fragments.len(), b.total_variants),
        };
        let results = (0..n_fragments)
            .map(|f| self.run_fragment(f, theta))
            .collect::<Result<Vec<_>>>()?;
        let total = if total == 0 {
            results.iter().map(|r| r.variants_executed).sum()
        } else {
            total
        };
        self.stats.variants_naive += total;
        let value = self.reconstructed(&results)?;
        if self.check_gap {
            let direct = self.uncut_value(theta)?;
            self.counter -= 1;
            let gap = (direct - value).abs();
            self.stats.max_cut_gap = Some(self.stats.max_cut_gap.map_or(gap, |g| g.max(gap)));
        }
        if let Backend::Cut(b) = &mut self.backend {
            b.total_variants = total;
            b.cache = results;
            b.probes.clear();
        }
        Ok(1.0 - value)
    }

    fn evaluate_shifted(&mut self, theta: &[f64], i: usize, value: f64) -> Result<f64> {
        let mut shifted = theta.to_vec();
        shifted[i] = value;
        let (f, total) = match &self.backend {
            Backend::Uncut => {
                self.stats.evaluations += 1;
                self.stats.variants_executed += 1;
                self.stats.variants_per_fragment[0] += 1;
                self.stats.variants_naive += 1;
                self.stats.update_variants_executed += 1;
                self.stats.update_variants_naive += 1;
                return Ok(1.0 - self.uncut_value(&shifted)?);
            }
            Backend::Cut(b) if b.cache.is_empty() => return self.evaluate(&shifted),
            Backend::Cut(b) => (b.fragment_of_param[i], b.total_variants),
        };
        self.stats.evaluations += 1;
        self.stats.variants_naive += total;
        self.stats.update_variants_naive += total;
        let r = self.run_fragment(f, &shifted)?;
        self.stats.update_variants_executed += r.variants_executed;
        let Backend::Cut(b) = &mut self.backend else { unreachable!() };
        let mut results = b.cache.clone();
        results[f] = r.clone();
        b.probes.push((value - theta[i], r));
        let v = self.reconstructed(&results)?;
        Ok(1.0 - v)
    }

    fn accept(&mut self, _theta: &[f64], i: usize, delta: f64) -> Result<()> {
        let Backend::Cut(b) = &mut self.backend else {
            return Ok(());
        };
        let plus = b.probes.iter().rev().find(|p| (p.0 - PI / 2.0).abs() < 1e-9);
        let minus = b.probes.iter().rev().find(|p| (p.0 + PI / 2.0).abs() < 1e-9);
        if delta == 0.0 {
            // anchor unchanged
        } else if let (Some(plus), Some(minus)) = (plus, minus) {
            let f = b.fragment_of_param[i];
            b.cache[f] = FragmentResult::interpolate(&b.cache[f], &plus.1, &minus.1, delta);
        } else {
            // no probes to interpolate from: force a fresh anchor next time
            b.cache.clear();
        }
        b.probes.clear();
        Ok(())
    }
}

/// Bookkeeping of one sub-iteration `(step, slice)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub step: usize,
    pub slice: usize,
    pub boundary: Option<usize>,
    /// Best loss reached, as seen by the estimator.
    pub infidelity: f64,
    /// Exact infidelity of the returned parameters (uncut statevector).
    pub exact_infidelity: f64,
    pub sweeps: usize,
    pub evaluations: usize,
    pub cuts: usize,
    pub fragment_widths: Vec<usize>,
    pub variants_executed: u64,
    pub variants_naive: u64,
    pub variants_per_fragment: Vec<u64>,
    /// Variant counts of single-parameter probes, cached and cache-free.
    pub update_variants_executed: u64,
    pub update_variants_naive: u64,
    pub shots_used: u64,
    pub shots_cumulative: u64,
    pub cut_uncut_gap: Option<f64>,
    pub theta: Vec<f64>,
}

/// Outcome of one sub-iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SubstepOutcome {
    pub theta: Vec<f64>,
    pub record: TrainRecord,
}

/// Boundary shared by a slice and the ansatz, closest to the middle.
pub fn resolve_boundary(admissible: &[usize], spec: &AnsatzSpec, slice_index: usize) -> Result<usize> {
    let supported = spec.supported_boundaries();
    let n = spec.n as f64;
    admissible
        .iter()
        .copied()
        .filter(|b| supported.contains(b))
        .min_by(|&a, &b| {
            let da = (a as f64 - n / 2.0).abs();
            let db = (b as f64 - n / 2.0).abs();
            da.partial_cmp(&db).unwrap().then(a.cmp(&b))
        })
        .ok_or(Error::BoundaryMismatch {
            slice: slice_index,
            supported,
        })
}

/// Trains `ansatz` to absorb `slice` applied after `prev`, from `theta_init`.
#[allow(clippy::too_many_arguments)]
pub fn pvqd_substep(
    prev: &Circuit,
    slice: &Circuit,
    admissible: &[usize],
    ansatz: &Circuit,
    spec: &AnsatzSpec,
    theta_init: &[f64],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<SubstepOutcome> {
    cfg.validate()?;
    let loss_circuit = build_loss_circuit(prev, slice, ansatz)?;
    let names = ansatz.parameters().to_vec();
    let (boundary, cuts) = match cfg.execution {
        Execution::Uncut => (None, None),
        Execution::Cut => {
            let b = resolve_boundary(admissible, spec, 0)?;
            let cuts = find_cuts(&loss_circuit, cfg.max_cuts, spec.fragment_width_limit())?.ok_or_else(|| {
                Error::InvalidCut(format!(
                    "no cut set of at most {} cuts keeps fragments within {} wires",
                    cfg.max_cuts,
                    spec.fragment_width_limit()
                ))
            })?;
            (Some(b), Some(cuts))
        }
    };
    let mut loss = LossEvaluator::new(
        loss_circuit.clone(),
        names,
        cfg.loss_mode,
        cfg.estimator,
        cuts.as_deref().map(|c| (c, cfg.max_cuts)),
        seed,
    )?;
    let fragment_widths = loss
        .plan()
        .map(|p| p.fragments.iter().map(|f| f.width()).collect())
        .unwrap_or_else(|| vec![loss_circuit.n_qubits()]);
    let result = nft_minimize(&mut loss, theta_init, &cfg.nft)?;

    let exact_infidelity = {
        let bound = build_loss_circuit(prev, slice, &ansatz.bind_values(&result.theta)?)?;
        let state = StateVector::from_circuit(&bound)?;
        1.0 - cfg.loss_mode.observable(bound.n_qubits()).expectation(&state)?
    };
    let record = TrainRecord {
        step: 0,
        slice: 0,
        boundary,
        infidelity: result.loss,
        exact_infidelity,
        sweeps: result.sweeps,
        evaluations: result.evaluations,
        cuts: cuts.as_ref().map_or(0, |c| c.len()),
        fragment_widths,
        variants_executed: loss.stats.variants_executed,
        variants_naive: loss.stats.variants_naive,
        variants_per_fragment: loss.stats.variants_per_fragment.clone(),
        update_variants_executed: loss.stats.update_variants_executed,
        update_variants_naive: loss.stats.update_variants_naive,
        shots_used: loss.stats.shots_used,
        shots_cumulative: 0,
        cut_uncut_gap: loss.stats.max_cut_gap,
        theta: result.theta.clone(),
    };
    Ok(SubstepOutcome {
        theta: result.theta,
        record,
    })
}

/// A named observable tracked along the trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackedObservable {
    pub name: String,
    pub operator: Hamiltonian,
}

/// Everything that defines one variational dynamics run.
#[derive(Debug, Clone)]
pub struct DynamicsProblem {
    pub slices: TrotterSlices,
    /// Initial basis state, wire 0 first.
    pub initial_bits: String,
    pub ansatz: Circuit,
    pub spec: AnsatzSpec,
    pub steps: usize,
    pub dt: f64,
    pub observables: Vec<TrackedObservable>,
    /// How tracked observables are read out from the trained circuits.
    pub readout: Estimator,
}

/// Trajectory of a variational run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub times: Vec<f64>,
    /// `values[o][k]`: observable `o` after step `k` (`k = 0` is the initial state).
    pub values: Vec<Vec<f64>>,
    pub records: Vec<TrainRecord>,
    /// Shots spent up to and including each step.
    pub shots_cumulative: Vec<u64>,
    pub thetas: Vec<Vec<f64>>,
}

fn read_observables(
    problem: &DynamicsProblem,
    circuit: &Circuit,
    seed: u64,
    step: usize,
) -> Result<(Vec<f64>, u64)> {
    let mut out = Vec::with_capacity(problem.observables.len());
    let mut shots_used = 0;
    match problem.readout {
        Estimator::Exact => {
            let state = StateVector::from_circuit(circuit)?;
            for o in &problem.observables {
                out.push(state.expectation(&o.operator)?);
            }
        }
        Estimator::Shots { shots, noise } => {
            for (oi, o) in problem.observables.iter().enumerate() {
                let s = derive_seed(seed, &[0xb5, step as u64, oi as u64]);
                let (v, _, used) = estimate_expectation(circuit, &o.operator, shots, &noise, s)?;
                out.push(v);
                shots_used += used;
            }
        }
    }
    Ok((out, shots_used))
}

fn initial_theta(problem: &DynamicsProblem, cfg: &TrainConfig) -> Result<Vec<f64>> {
    match cfg.init {
        Init::BasisState => basis_state_parameters(&problem.ansatz, &problem.initial_bits),
        Init::PerturbedBasis { scale } => {
            let mut r = rng(derive_seed(cfg.seed, &[0x1717]));
            let mut theta = basis_state_parameters(&problem.ansatz, &problem.initial_bits)?;
            theta.iter_mut().for_each(|t| *t += r.gen_range(-scale..=scale));
            Ok(theta)
        }
        Init::Random { scale } => {
            let mut r = rng(derive_seed(cfg.seed, &[0x1717]));
            Ok((0..problem.spec.parameter_count)
                .map(|_| r.gen_range(-scale..=scale))
                .collect())
        }
    }
}

/// Distributed run: each step's slices are absorbed one at a time, each in
/// its own sub-iteration. The state fed to sub-iteration `(k, γ)` is the
/// initial preparation for `(1, 1)`, the last trained circuit otherwise;
/// every sub-iteration warm-starts from the last trained parameters.
pub fn dpvqd_run(problem: &DynamicsProblem, cfg: &TrainConfig) -> Result<RunResult> {
    dpvqd_run_with(problem, cfg, |_| {})
}

/// [`dpvqd_run`] reporting each finished sub-iteration to `progress`.
pub fn dpvqd_run_with(
    problem: &DynamicsProblem,
    cfg: &TrainConfig,
    mut progress: impl FnMut(&TrainRecord),
) -> Result<RunResult> {
    cfg.validate()?;
    let n = problem.spec.n;
    if problem.slices.n_qubits() != n || problem.initial_bits.len() != n || problem.ansatz.n_qubits() != n {
        return Err(Error::WidthMismatch {
            expected: n,
            found: problem.slices.n_qubits(),
        });
    }
    let psi0 = basis_prep_circuit(&problem.initial_bits)?;
    let (v0, shots0) = read_observables(problem, &psi0, cfg.seed, 0)?;
    let mut values: Vec<Vec<f64>> = v0.into_iter().map(|v| vec![v]).collect();
    let mut times = vec![0.0];
    let mut shots_total = shots0;
    let mut shots_cumulative = vec![shots_total];
    let mut records = Vec::new();
    let mut theta = initial_theta(problem, cfg)?;
    let mut thetas = vec![theta.clone()];
    let mut prev = psi0;

    for k in 1..=problem.steps {
        for (g, slice) in problem.slices.slices.iter().enumerate() {
            let seed = derive_seed(cfg.seed, &[k as u64, g as u64]);
            let boundary = match cfg.execution {
                Execution::Cut => Some(resolve_boundary(&slice.admissible, &problem.spec, g)?),
                Execution::Uncut => None,
            };
            let mut out = pvqd_substep(
                &prev,
                &slice.circuit,
                &slice.admissible,
                &problem.ansatz,
                &problem.spec,
                &theta,
                cfg,
                seed,
            )?;
            out.record.boundary = boundary;
            shots_total += out.record.shots_used;
            out.record.step = k;
            out.record.slice = g + 1;
            out.record.shots_cumulative = shots_total;
            progress(&out.record);
            theta = out.theta;
            prev = problem.ansatz.bind_values(&theta)?;
            records.push(out.record);
        }
        let (vk, used) = read_observables(problem, &prev, cfg.seed, k)?;
        shots_total += used;
        for (series, v) in values.iter_mut().zip(vk) {
            series.push(v);
        }
        times.push(k as f64 * problem.dt);
        shots_cumulative.push(shots_total);
        thetas.push(theta.clone());
    }
    Ok(RunResult {
        times,
        values,
        records,
        shots_cumulative,
        thetas,
    })
}

/// Undistributed baseline: the whole Trotter step is absorbed per step
/// with uncut execution.
pub fn pvqd_run(problem: &DynamicsProblem, cfg: &TrainConfig) -> Result<RunResult> {
    let full = problem.slices.full_step()?;
    let merged = DynamicsProblem {
        slices: TrotterSlices {
            slices: vec![crate::hamiltonians::Slice {
                admissible: (1..full.n_qubits())
                    .filter(|&b| full.factor_boundary(b).unwrap_or(false))
                    .collect(),
                circuit: full,
            }],
        },
        ..problem.clone()
    };
    let cfg = TrainConfig {
        execution: Execution::Uncut,
        ..cfg.clone()
    };
    dpvqd_run(&merged, &cfg)
}

/// Observable trajectory of repeatedly applying the Trotter step circuit,
/// read out with `readout` (under its noise, if any).
pub fn direct_trotter_series(
    slices: &TrotterSlices,
    initial_bits: &str,
    steps: usize,
    observables: &[TrackedObservable],
    readout: &Estimator,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let step = slices.full_step()?;
    let mut circuit = basis_prep_circuit(initial_bits)?;
    let mut values: Vec<Vec<f64>> = vec![Vec::with_capacity(steps + 1); observables.len()];
    for k in 0..=steps {
        if k > 0 {
            circuit = circuit.compose(&step)?;
        }
        for (oi, o) in observables.iter().enumerate() {
            let v = match readout {
                Estimator::Exact => StateVector::from_circuit(&circuit)?.expectation(&o.operator)?,
                Estimator::Shots { shots, noise } => {
                    let s = derive_seed(seed, &[k as u64, oi as u64]);
                    estimate_expectation(&circuit, &o.operator, *shots, noise, s)?.0
                }
            };
            values[oi].push(v);
        }
    }
    Ok(values)
}
