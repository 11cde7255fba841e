//! Experiment configuration files.

use std::path::Path;
use std::str::FromStr;

use dynmit::circuit::DurationTable;
use dynmit::hamiltonian::Model;
use dynmit::mitigation::{DDPolicy, ZNEConfig};
use dynmit::noise::NoiseModel;
use dynmit::vqe::TrainingOptions;
use serde::{Deserialize, Serialize};

use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    GroundState,
    TimeEvolution,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::GroundState => "ground-state",
            Suite::TimeEvolution => "time-evolution",
        }
    }
}

impl std::fmt::Display for Suite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        match s {
            "ground-state" => Ok(Suite::GroundState),
            "time-evolution" => Ok(Suite::TimeEvolution),
            _ => Err(BenchError::Config(format!("unknown suite {s:?}"))),
        }
    }
}

/// How configuration energies are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// Shot histograms from noisy trajectories.
    #[default]
    Trajectories,
    /// Exact readout distributions from the density-matrix backend; only
    /// for circuits of at most 9 qubits.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MitigationConfig {
    pub dd: DDPolicy,
    pub zne: ZNEConfig,
}

/// The config file as written. Missing grid fields take the suite defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub suite: Option<Suite>,
    pub model: Option<Model>,
    pub n: Option<Vec<usize>>,
    pub h: Option<Vec<f64>>,
    pub t: Option<f64>,
    #[serde(rename = "N")]
    pub steps: Option<usize>,
    pub trajectories: Option<u64>,
    pub estimator: Estimator,
    pub repeats: Option<usize>,
    pub seed: Option<u64>,
    pub noise: Option<NoiseModel>,
    pub mitigation: MitigationConfig,
    pub durations: DurationTable,
    pub training: TrainingOptions,
}

impl ConfigFile {
    pub fn from_json(s: &str) -> Result<Self, BenchError> {
        serde_json::from_str(s).map_err(|e| BenchError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        Self::from_json(&text).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))
    }
}

pub const DEFAULT_TRAJECTORIES: u64 = 2000;
pub const DEFAULT_REPEATS: usize = 3;
pub const DEFAULT_SEED: u64 = 2024;

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub suite: Suite,
    pub model: Model,
    pub n: Vec<usize>,
    pub h: Vec<f64>,
    pub t: f64,
    #[serde(rename = "N")]
    pub steps: usize,
    pub trajectories: u64,
    pub estimator: Estimator,
    pub repeats: usize,
    pub seed: u64,
    pub noise: NoiseModel,
    pub mitigation: MitigationConfig,
    pub durations: DurationTable,
    pub training: TrainingOptions,
}

impl ExperimentSpec {
    /// Fills in suite defaults. `suite` from the command line wins over the
    /// file; they must agree when both are given. Without `large`, the
    /// default ground-state grid stops at n = 8.
    pub fn resolve(
        file: ConfigFile,
        suite: Option<Suite>,
        large: bool,
    ) -> Result<Self, BenchError> {
        let suite = match (suite, file.suite) {
            (Some(a), Some(b)) if a != b => {
                return Err(BenchError::Config(format!(
                    "--suite {a} conflicts with suite {b} in the config file"
                )))
            }
            (Some(s), _) | (None, Some(s)) => s,
            (None, None) => return Err(BenchError::Config("no suite given".into())),
        };
        let (n, h) = match suite {
            Suite::GroundState => {
                let mut n = vec![3, 5, 8];
                if large {
                    n.push(12);
                }
                (n, vec![0.0, 0.5, 2.0, 5.0])
            }
            Suite::TimeEvolution => (vec![5, 12], vec![0.5, 5.0]),
        };
        let spec = Self {
            suite,
            model: file.model.unwrap_or(Model::Tfim),
            n: file.n.unwrap_or(n),
            h: file.h.unwrap_or(h),
            t: file.t.unwrap_or(0.25),
            steps: file.steps.unwrap_or(5),
            trajectories: file.trajectories.unwrap_or(DEFAULT_TRAJECTORIES),
            estimator: file.estimator,
            repeats: file.repeats.unwrap_or(DEFAULT_REPEATS),
            seed: file.seed.unwrap_or(DEFAULT_SEED),
            noise: file.noise.unwrap_or_default(),
            mitigation: file.mitigation,
            durations: file.durations,
            training: file.training,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::Config(m));
        if let Some(&n) = self.n.iter().find(|&&n| n < 2) {
            return bad(format!("system size {n} is below 2"));
        }
        if self.h.iter().any(|h| !h.is_finite()) {
            return bad("field strengths must be finite".into());
        }
        if self.trajectories == 0 || self.repeats == 0 {
            return bad("trajectories and repeats must be at least 1".into());
        }
        if self.steps == 0 || !self.t.is_finite() {
            return bad("time evolution needs N ≥ 1 and a finite t".into());
        }
        if !self.mitigation.zne.folds.contains(&0) {
            return bad("ZNE folds must include 0 (the baseline)".into());
        }
        self.mitigation.zne.validate()?;
        self.mitigation.dd.validate()?;
        self.noise.validate()?;
        self.durations.validate()?;
        Ok(())
    }
}
