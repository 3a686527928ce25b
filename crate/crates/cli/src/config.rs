//! Run configuration: one JSON document per experiment.

use crate::CliError;
use dpvqd_core::hamiltonians::{HeisenbergParams, HubbardParams, Spin};
use dpvqd_core::optimizer::NftConfig;
use dpvqd_core::vqd::{Estimator, Execution, Init, LossMode, TrainConfig};
use dpvqd_core::NoiseConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Heisenberg,
    Hubbard,
    CutDemo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeisenbergConfig {
    pub n: usize,
    pub j: f64,
    pub w: f64,
    pub field_seed: u64,
}

impl Default for HeisenbergConfig {
    fn default() -> Self {
        Self {
            n: 7,
            j: 1.0,
            w: 10.0,
            field_seed: 1,
        }
    }
}

impl HeisenbergConfig {
    pub fn params(&self) -> Result<HeisenbergParams, CliError> {
        Ok(HeisenbergParams::new(self.n, self.j, self.w, self.field_seed)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeakLink {
    /// Bond between sites `bond` and `bond + 1`, 1-indexed.
    pub bond: usize,
    pub spin: Spin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HubbardConfig {
    pub n_sites: usize,
    pub hopping: f64,
    pub u: f64,
    pub weak_link: Option<WeakLink>,
    /// Initial occupation bitstring, wire 0 first. Defaults to the
    /// `1001` pattern per pair of sites.
    #[serde(default)]
    pub initial: Option<String>,
}

impl Default for HubbardConfig {
    fn default() -> Self {
        let p = HubbardParams::default();
        Self {
            n_sites: p.n_sites,
            hopping: p.hopping,
            u: p.u,
            weak_link: p.weak_link.map(|(bond, spin)| WeakLink { bond, spin }),
            initial: None,
        }
    }
}

impl HubbardConfig {
    pub fn params(&self) -> HubbardParams {
        HubbardParams {
            n_sites: self.n_sites,
            hopping: self.hopping,
            u: self.u,
            weak_link: self.weak_link.map(|w| (w.bond, w.spin)),
        }
    }

    pub fn initial_bits(&self) -> String {
        self.initial
            .clone()
            .unwrap_or_else(|| "1001".chars().cycle().take(2 * self.n_sites).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzConfig {
    pub block_layers: usize,
    /// Bridge wire; the width-minimizing choice when absent.
    #[serde(default)]
    pub bridge: Option<usize>,
}

/// Training settings as they appear in the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSettings {
    /// Defaults by width when absent.
    #[serde(default)]
    pub loss_mode: Option<LossMode>,
    pub execution: Execution,
    /// Shots per circuit variant; exact expectations when absent.
    #[serde(default)]
    pub shots: Option<u64>,
    pub nft: NftConfig,
    pub max_cuts: usize,
    pub init: Init,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub heisenberg: HeisenbergConfig,
    #[serde(default)]
    pub hubbard: HubbardConfig,
    pub dt: f64,
    pub steps: usize,
    pub ansatz: AnsatzConfig,
    pub train: TrainSettings,
    /// Shots per observable setting when reading out trained circuits;
    /// exact when absent.
    #[serde(default)]
    pub readout_shots: Option<u64>,
    pub noise: NoiseConfig,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Also run the undistributed baseline.
    #[serde(default)]
    pub compare_pvqd: bool,
}

impl RunConfig {
    pub fn heisenberg() -> Self {
        Self {
            experiment: Experiment::Heisenberg,
            heisenberg: HeisenbergConfig::default(),
            hubbard: HubbardConfig::default(),
            dt: 0.1,
            steps: 20,
            ansatz: AnsatzConfig {
                block_layers: 1,
                bridge: None,
            },
            train: TrainSettings {
                loss_mode: None,
                execution: Execution::Cut,
                shots: None,
                nft: NftConfig::default(),
                max_cuts: dpvqd_core::cutting::DEFAULT_MAX_CUTS,
                init: Init::BasisState,
            },
            readout_shots: None,
            noise: NoiseConfig::noiseless(),
            seed: 0,
            out_dir: PathBuf::from("runs/heisenberg"),
            compare_pvqd: false,
        }
    }

    /// Hubbard defaults. Deeper corner blocks, a tighter plateau and a
    /// perturbed start are needed to track the hopping dynamics.
    pub fn hubbard() -> Self {
        let mut cfg = Self::heisenberg();
        cfg.experiment = Experiment::Hubbard;
        cfg.dt = 0.3;
        cfg.steps = 50;
        cfg.ansatz.block_layers = 3;
        cfg.train.nft.plateau_tol = 1e-5;
        cfg.train.init = Init::PerturbedBasis { scale: 0.1 };
        cfg.out_dir = PathBuf::from("runs/hubbard");
        cfg
    }

    pub fn cut_demo() -> Self {
        let mut cfg = Self::heisenberg();
        cfg.experiment = Experiment::CutDemo;
        cfg.train.shots = Some(100_000);
        cfg.out_dir = PathBuf::from("runs/cut-demo");
        cfg
    }

    pub fn default_for(experiment: Experiment) -> Self {
        match experiment {
            Experiment::Heisenberg => Self::heisenberg(),
            Experiment::Hubbard => Self::hubbard(),
            Experiment::CutDemo => Self::cut_demo(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if !(self.dt.is_finite() && self.dt >= 0.0) {
            return bad("dt must be finite and non-negative");
        }
        if self.ansatz.block_layers == 0 {
            return bad("ansatz.block_layers must be at least 1");
        }
        if self.train.shots == Some(0) || self.readout_shots == Some(0) {
            return bad("shot counts must be positive");
        }
        self.noise.validate()?;
        self.train_config(self.width()).validate()?;
        Ok(())
    }

    /// Register width of the configured experiment.
    pub fn width(&self) -> usize {
        match self.experiment {
            Experiment::Heisenberg => self.heisenberg.n,
            Experiment::Hubbard => 2 * self.hubbard.n_sites,
            Experiment::CutDemo => 3,
        }
    }

    pub fn estimator(&self, shots: Option<u64>) -> Estimator {
        match shots {
            None => Estimator::Exact,
            Some(shots) => Estimator::Shots {
                shots,
                noise: self.noise,
            },
        }
    }

    pub fn train_config(&self, n_qubits: usize) -> TrainConfig {
        TrainConfig {
            loss_mode: self
                .train
                .loss_mode
                .unwrap_or_else(|| LossMode::default_for(n_qubits)),
            execution: self.train.execution,
            estimator: self.estimator(self.train.shots),
            nft: self.train.nft,
            max_cuts: self.train.max_cuts,
            init: self.train.init,
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_idempotent() {
        for e in [Experiment::Heisenberg, Experiment::Hubbard, Experiment::CutDemo] {
            let cfg = RunConfig::default_for(e);
            let text = cfg.to_json();
            let back = RunConfig::from_json(&text).unwrap();
            assert_eq!(back, cfg);
            assert_eq!(back.to_json(), text);
        }
    }

    #[test]
    fn rejects_bad_values() {
        let mut cfg = RunConfig::heisenberg();
        cfg.train.shots = Some(0);
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::heisenberg();
        cfg.noise.p2 = 1.5;
        assert!(cfg.validate().is_err());
        let text = RunConfig::heisenberg().to_json().replace("\"steps\"", "\"stepz\"");
        assert!(RunConfig::from_json(&text).is_err());
    }

    #[test]
    fn hubbard_initial_pattern() {
        assert_eq!(HubbardConfig::default().initial_bits(), "100110011001");
        let four = HubbardConfig {
            n_sites: 4,
            ..HubbardConfig::default()
        };
        assert_eq!(four.initial_bits(), "10011001");
    }
}
