use clap::{Args, Parser, Subcommand, ValueEnum};
use dpvqd_cli::config::{Experiment, RunConfig};
use dpvqd_cli::experiments::report_dir;
use dpvqd_cli::{run_cut_demo, run_heisenberg, run_hubbard, CliError};
use dpvqd_core::vqd::Execution;
use dpvqd_core::NoiseConfig;
use std::path::PathBuf;
use std::process::ExitCode;

/// Output directory override, the only setting read from the environment.
const OUT_DIR_ENV: &str = "DPVQD_OUT_DIR";

#[derive(Parser)]
#[command(name = "dpvqd", version, about = "Distributed projected variational quantum dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Disordered Heisenberg chain, imbalance from the Néel state.
    RunHeisenberg(RunArgs),
    /// Weak-link Hubbard chain, staggered magnetization.
    RunHubbard(RunArgs),
    /// Single-cut reconstruction on a GHZ circuit.
    CutDemo(RunArgs),
    /// Recompute the shot report of a finished run directory.
    Report {
        dir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExecArg {
    Cut,
    Uncut,
}

#[derive(Args)]
struct RunArgs {
    /// JSON config; experiment defaults when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Exact expectations for training and readout.
    #[arg(long, conflicts_with = "shots")]
    exact: bool,
    /// Shots per circuit variant for training and readout.
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long, value_enum)]
    execution: Option<ExecArg>,
    /// Noise as `p1,p2,p_readout`.
    #[arg(long, value_parser = parse_noise)]
    noise: Option<NoiseConfig>,
    #[arg(long)]
    steps: Option<usize>,
    /// Also run the undistributed baseline.
    #[arg(long)]
    compare_pvqd: bool,
}

fn parse_noise(s: &str) -> Result<NoiseConfig, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [p1, p2, pr] => NoiseConfig::new(p1, p2, pr).map_err(|e| e.to_string()),
        _ => Err("expected three comma-separated probabilities".into()),
    }
}

fn resolve(args: &RunArgs, experiment: Experiment) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default_for(experiment),
    };
    if cfg.experiment != experiment {
        return Err(CliError::Config(format!(
            "config describes {:?}, subcommand runs {:?}",
            cfg.experiment, experiment
        )));
    }
    if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
        cfg.out_dir = dir.into();
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if args.exact {
        cfg.train.shots = None;
        cfg.readout_shots = None;
    }
    if let Some(shots) = args.shots {
        cfg.train.shots = Some(shots);
        cfg.readout_shots = Some(shots);
    }
    if let Some(e) = args.execution {
        cfg.train.execution = match e {
            ExecArg::Cut => Execution::Cut,
            ExecArg::Uncut => Execution::Uncut,
        };
    }
    if let Some(noise) = args.noise {
        cfg.noise = noise;
    }
    if let Some(steps) = args.steps {
        cfg.steps = steps;
    }
    cfg.compare_pvqd |= args.compare_pvqd;
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::RunHeisenberg(args) => {
            let cfg = resolve(&args, Experiment::Heisenberg)?;
            let out = run_heisenberg(&cfg)?;
            summarize(&out, cfg.heisenberg.n as f64, "imbalance / n");
        }
        Command::RunHubbard(args) => {
            let cfg = resolve(&args, Experiment::Hubbard)?;
            let out = run_hubbard(&cfg)?;
            summarize(&out, 1.0, "staggered magnetization");
        }
        Command::CutDemo(args) => {
            let cfg = resolve(&args, Experiment::CutDemo)?;
            let r = run_cut_demo(&cfg)?;
            println!("fragment  width  wires      prep  meas");
            for f in &r.fragments {
                println!(
                    "{:>8}  {:>5}  {:<9}  {:>4}  {:>4}",
                    f.id,
                    f.width,
                    format!("{:?}", f.wires),
                    f.prep_variants,
                    f.meas_variants
                );
            }
            println!("\nmeasure  prepare  coefficient");
            for c in &r.coefficients {
                println!("{:>7}  {:<7}  {:+.2}", c.measured, c.prepared, c.coefficient);
            }
            println!("\nobservable  uncut  exact  shots ({} per variant)", r.shots_per_variant);
            for e in &r.estimates {
                println!(
                    "{:>10}  {:+.3}  {:+.3}  {:+.4} ± {:.4}",
                    e.observable, e.uncut, e.exact, e.shots, e.std_error
                );
            }
            println!("\ncuts  overhead");
            for (k, o) in &r.overhead {
                println!("{k:>4}  {o}");
            }
            println!("\nwrote {}", cfg.out_dir.join("cut_demo.json").display());
        }
        Command::Report { dir } => {
            let r = report_dir(&dir)?;
            println!("{}", serde_json::to_string_pretty(&r)?);
        }
    }
    Ok(())
}

fn summarize(out: &dpvqd_cli::DynamicsOutput, scale: f64, label: &str) {
    println!(
        "{} sub-iterations, worst final infidelity {:.4}, {} training shots",
        out.dpvqd.records.len(),
        out.worst_infidelity(),
        out.report.total_shots
    );
    if let (Some(all), Some(upd)) = (out.report.reuse_factor, out.report.update_reuse_factor) {
        println!("fragment reuse: {upd:.2}x fewer variant executions per update ({all:.2}x overall)");
    }
    match out.deviation(scale) {
        Some((mean, max)) => println!("{label}: mean |dp-VQD - exact| = {mean:.4}, max = {max:.4}"),
        None => println!("register too wide for the exact reference"),
    }
    println!("wrote {}", out.csv.display());
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // help and version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", CliError::Config(e.to_string().trim().to_string()).to_json());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
