//! The three experiments and their on-disk artifacts.

use crate::config::{Experiment, RunConfig};
use crate::report::{shot_report, ShotReport};
use crate::CliError;
use dpvqd_core::ansatz::{build_weak_link, default_bridge};
use dpvqd_core::cutting::{
    decompose, evaluate_cut_expectation, grouped_terms, overhead, CutPoint, ExecMode, Observable,
};
use dpvqd_core::hamiltonians::{
    exact_evolve, heisenberg_hamiltonian, heisenberg_trotter_slices, hubbard_jw_hamiltonian, hubbard_trotter_slices,
    imbalance_operator, neel_bitstring, staggered_magnetization_operator,
};
use dpvqd_core::seed::derive_seed;
use dpvqd_core::vqd::{dpvqd_run, pvqd_run, DynamicsProblem, RunResult, TrackedObservable};
use dpvqd_core::{Circuit, Hamiltonian, PauliTerm, StateVector};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Largest register for which the exact reference curve is computed.
pub const EXACT_LIMIT: usize = 14;

/// Outcome of a dynamics experiment.
#[derive(Debug, Clone)]
pub struct DynamicsOutput {
    pub dir: PathBuf,
    pub csv: PathBuf,
    pub times: Vec<f64>,
    pub exact: Option<Vec<f64>>,
    pub dpvqd: RunResult,
    pub pvqd: Option<RunResult>,
    pub report: ShotReport,
    /// Register width, for normalizing extensive observables.
    pub n_qubits: usize,
}

impl DynamicsOutput {
    /// Mean and max of `|dpvqd - exact| / scale` over all recorded steps.
    pub fn deviation(&self, scale: f64) -> Option<(f64, f64)> {
        let exact = self.exact.as_ref()?;
        let d: Vec<f64> = exact
            .iter()
            .zip(&self.dpvqd.values[0])
            .map(|(e, v)| (e - v).abs() / scale)
            .collect();
        Some((d.iter().sum::<f64>() / d.len() as f64, d.iter().cloned().fold(0.0, f64::max)))
    }

    pub fn worst_infidelity(&self) -> f64 {
        self.dpvqd.records.iter().map(|r| r.infidelity).fold(0.0, f64::max)
    }
}

/// `⟨obs⟩` along `exp(-iHt)|bits⟩` at `t = 0, dt, …, steps·dt`.
pub fn exact_series(h: &Hamiltonian, bits: &str, obs: &Hamiltonian, dt: f64, steps: usize) -> Result<Vec<f64>, CliError> {
    let mut psi = StateVector::from_bitstring(bits)?;
    let mut out = vec![psi.expectation(obs)?];
    for _ in 0..steps {
        psi = exact_evolve(h, &psi, dt)?;
        out.push(psi.expectation(obs)?);
    }
    Ok(out)
}

fn ansatz_for(cfg: &RunConfig, n: usize) -> Result<(Circuit, dpvqd_core::AnsatzSpec), CliError> {
    let bridge = match cfg.ansatz.bridge {
        Some(b) => b,
        None => default_bridge(n)?,
    };
    Ok(build_weak_link(n, cfg.ansatz.block_layers, bridge)?)
}

pub fn heisenberg_problem(cfg: &RunConfig) -> Result<(DynamicsProblem, Hamiltonian), CliError> {
    let p = cfg.heisenberg.params()?;
    let n = p.n;
    let (ansatz, spec) = ansatz_for(cfg, n)?;
    let problem = DynamicsProblem {
        slices: heisenberg_trotter_slices(&p, cfg.dt)?,
        initial_bits: neel_bitstring(n),
        ansatz,
        spec,
        steps: cfg.steps,
        dt: cfg.dt,
        observables: vec![TrackedObservable {
            name: "imbalance".into(),
            operator: imbalance_operator(n)?,
        }],
        readout: cfg.estimator(cfg.readout_shots),
    };
    Ok((problem, heisenberg_hamiltonian(&p)?))
}

pub fn hubbard_problem(cfg: &RunConfig) -> Result<(DynamicsProblem, Hamiltonian), CliError> {
    let p = cfg.hubbard.params();
    let n = p.n_qubits();
    let (ansatz, spec) = ansatz_for(cfg, n)?;
    let problem = DynamicsProblem {
        slices: hubbard_trotter_slices(&p, cfg.dt)?,
        initial_bits: cfg.hubbard.initial_bits(),
        ansatz,
        spec,
        steps: cfg.steps,
        dt: cfg.dt,
        observables: vec![TrackedObservable {
            name: "staggered_magnetization".into(),
            operator: staggered_magnetization_operator(n)?,
        }],
        readout: cfg.estimator(cfg.readout_shots),
    };
    Ok((problem, hubbard_jw_hamiltonian(&p)?))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn write_circuit(dir: &Path, name: &str, c: &Circuit) -> Result<(), CliError> {
    write_file(&dir.join(format!("{name}.json")), &c.to_json()?)
}

pub fn write_records(path: &Path, records: &[dpvqd_core::TrainRecord]) -> Result<(), CliError> {
    let mut f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    for r in records {
        writeln!(f, "{}", serde_json::to_string(r)?).map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<dpvqd_core::TrainRecord>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn run_dynamics(
    cfg: &RunConfig,
    problem: DynamicsProblem,
    h: &Hamiltonian,
    csv_name: &str,
    normalize: bool,
) -> Result<DynamicsOutput, CliError> {
    cfg.validate()?;
    let n = problem.spec.n;
    let train = cfg.train_config(n);
    let dir = cfg.out_dir.clone();
    create_dir(&dir.join("circuits"))?;
    write_file(&dir.join("config.json"), &cfg.to_json())?;
    write_circuit(&dir.join("circuits"), "ansatz", &problem.ansatz)?;
    for (g, s) in problem.slices.slices.iter().enumerate() {
        write_circuit(&dir.join("circuits"), &format!("slice_{}", g + 1), &s.circuit)?;
    }

    let dp = dpvqd_run(&problem, &train)?;
    let pv = if cfg.compare_pvqd {
        Some(pvqd_run(&problem, &train)?)
    } else {
        None
    };
    let exact = if n <= EXACT_LIMIT {
        Some(exact_series(h, &problem.initial_bits, &problem.observables[0].operator, cfg.dt, cfg.steps)?)
    } else {
        None
    };
    if let Some(theta) = dp.thetas.last() {
        write_circuit(&dir.join("circuits"), "trained_final", &problem.ansatz.bind_values(theta)?)?;
    }
    write_records(&dir.join("train_records.jsonl"), &dp.records)?;
    let report = shot_report(&dp.records);
    write_file(&dir.join("shot_report.json"), &serde_json::to_string_pretty(&report)?)?;

    let csv_path = dir.join(csv_name);
    let mut w = csv::Writer::from_path(&csv_path).map_err(CliError::csv)?;
    let mut header = vec!["step", "time", "exact"];
    if normalize {
        header.push("exact_normalized");
    }
    header.push("dpvqd");
    if normalize {
        header.push("dpvqd_normalized");
    }
    header.push("pvqd");
    if normalize {
        header.push("pvqd_normalized");
    }
    header.extend(["loss_final", "shots_cumulative", "seed"]);
    w.write_record(&header).map_err(CliError::csv)?;
    let scale = n as f64;
    let opt = |v: Option<f64>| v.map(fmt).unwrap_or_default();
    for k in 0..=cfg.steps {
        let e = exact.as_ref().map(|s| s[k]);
        let d = dp.values[0][k];
        let p = pv.as_ref().map(|r| r.values[0][k]);
        let loss = dp
            .records
            .iter()
            .filter(|r| r.step == k)
            .map(|r| r.infidelity)
            .reduce(f64::max);
        // times are multiples of dt; drop the float residue
        let t = (dp.times[k] * 1e12).round() / 1e12;
        let mut row = vec![k.to_string(), fmt(t), opt(e)];
        if normalize {
            row.push(opt(e.map(|x| x / scale)));
        }
        row.push(fmt(d));
        if normalize {
            row.push(fmt(d / scale));
        }
        row.push(opt(p));
        if normalize {
            row.push(opt(p.map(|x| x / scale)));
        }
        row.extend([opt(loss), dp.shots_cumulative[k].to_string(), cfg.seed.to_string()]);
        w.write_record(&row).map_err(CliError::csv)?;
    }
    w.flush().map_err(|e| CliError::io(&csv_path, e))?;

    Ok(DynamicsOutput {
        dir,
        csv: csv_path,
        times: dp.times.clone(),
        exact,
        dpvqd: dp,
        pvqd: pv,
        report,
        n_qubits: n,
    })
}

/// Disordered Heisenberg chain from the Néel state; writes `imbalance.csv`.
pub fn run_heisenberg(cfg: &RunConfig) -> Result<DynamicsOutput, CliError> {
    expect_experiment(cfg, Experiment::Heisenberg)?;
    let (problem, h) = heisenberg_problem(cfg)?;
    run_dynamics(cfg, problem, &h, "imbalance.csv", true)
}

/// Weak-link Hubbard chain; writes `staggered_magnetization.csv`.
pub fn run_hubbard(cfg: &RunConfig) -> Result<DynamicsOutput, CliError> {
    expect_experiment(cfg, Experiment::Hubbard)?;
    let (problem, h) = hubbard_problem(cfg)?;
    run_dynamics(cfg, problem, &h, "staggered_magnetization.csv", false)
}

fn expect_experiment(cfg: &RunConfig, e: Experiment) -> Result<(), CliError> {
    if cfg.experiment != e {
        return Err(CliError::Config(format!(
            "config is for {:?}, not {:?}",
            cfg.experiment, e
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FragmentRow {
    pub id: usize,
    pub width: usize,
    pub wires: Vec<usize>,
    pub prep_variants: usize,
    pub meas_variants: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub measured: char,
    pub prepared: String,
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoEstimate {
    pub observable: String,
    pub uncut: f64,
    pub exact: f64,
    pub shots: f64,
    pub std_error: f64,
    pub shots_used: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutDemoReport {
    pub cut: CutPoint,
    pub fragments: Vec<FragmentRow>,
    pub coefficients: Vec<CoefficientRow>,
    pub shots_per_variant: u64,
    pub estimates: Vec<DemoEstimate>,
    pub overhead: Vec<(u32, u64)>,
}

/// Three-qubit GHZ preparation `H(0) CNOT(0,1) CNOT(1,2)`.
pub fn ghz_circuit() -> Circuit {
    let mut c = Circuit::new(3);
    c.h(0).cnot(0, 1).cnot(1, 2);
    c
}

/// The single cut between the two CNOTs on wire 1.
pub const GHZ_CUT: CutPoint = CutPoint { wire: 1, position: 1 };

/// Reconstructs `⟨ZZI⟩` and `⟨ZZZ⟩` on the cut GHZ circuit; writes
/// `cut_demo.json`.
pub fn run_cut_demo(cfg: &RunConfig) -> Result<CutDemoReport, CliError> {
    expect_experiment(cfg, Experiment::CutDemo)?;
    cfg.validate()?;
    let shots = cfg.train.shots.unwrap_or(100_000);
    let c = ghz_circuit();
    let plan = decompose(&c, &[GHZ_CUT])?;
    let fragments = plan
        .fragments
        .iter()
        .map(|f| FragmentRow {
            id: f.id,
            width: f.width(),
            wires: f.wire_map.iter().map(|&(w, _)| w).collect(),
            prep_variants: f.prep_variants(),
            meas_variants: f.meas_variants(),
        })
        .collect();
    let coefficients = grouped_terms()
        .iter()
        .map(|&(p, s, c)| CoefficientRow {
            measured: p.as_char(),
            prepared: format!("{s:?}"),
            coefficient: c,
        })
        .collect();
    let state = StateVector::from_circuit(&c)?;
    let mut estimates = Vec::new();
    for (i, label) in ["ZZI", "ZZZ"].into_iter().enumerate() {
        let h = Hamiltonian::new(3, vec![PauliTerm::from_label(1.0, label)?])?;
        let obs = Observable::from(&h);
        let (exact, _) = evaluate_cut_expectation(&c, &[GHZ_CUT], &obs, &ExecMode::Exact)?;
        let mode = ExecMode::Shots {
            shots,
            seed: derive_seed(cfg.seed, &[i as u64]),
            noise: cfg.noise,
        };
        let (est, used) = evaluate_cut_expectation(&c, &[GHZ_CUT], &obs, &mode)?;
        estimates.push(DemoEstimate {
            observable: label.into(),
            uncut: state.expectation(&h)?,
            exact: exact.value,
            shots: est.value,
            std_error: est.std_error.unwrap_or(f64::NAN),
            shots_used: used,
        });
    }
    let report = CutDemoReport {
        cut: GHZ_CUT,
        fragments,
        coefficients,
        shots_per_variant: shots,
        estimates,
        overhead: (0..=3).map(|k| (k, overhead(k))).collect(),
    };
    create_dir(&cfg.out_dir)?;
    write_file(&cfg.out_dir.join("config.json"), &cfg.to_json())?;
    write_circuit(&cfg.out_dir, "ghz", &c)?;
    write_file(&cfg.out_dir.join("cut_demo.json"), &serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}

/// Shot report of an existing run directory, rewritten to `shot_report.json`.
pub fn report_dir(dir: &Path) -> Result<ShotReport, CliError> {
    let records = read_records(&dir.join("train_records.jsonl"))?;
    let report = shot_report(&records);
    write_file(&dir.join("shot_report.json"), &serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}
