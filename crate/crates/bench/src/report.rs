//! Experiment reports and their file formats.

use std::path::{Path, PathBuf};

use dynmit::hamiltonian::Model;
use dynmit::mitigation::{gap_guard, median, FitKind, Improvements, MitigationOutcome};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentSpec, Suite};
use crate::BenchError;

/// Energy of one of the measured configurations (fold count × DD).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEnergy {
    pub k: usize,
    pub lambda: f64,
    pub dd: bool,
    pub energy: f64,
    pub stderr: f64,
    /// X pairs inserted over all measurement settings.
    pub dd_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatResult {
    pub repeat: usize,
    pub seed: u64,
    pub energies: Vec<ConfigEnergy>,
    pub outcome: MitigationOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyEnergies {
    pub baseline: Option<f64>,
    pub dd: Option<f64>,
    pub zne: Option<f64>,
    pub dd_zne: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Medians {
    pub energies: StrategyEnergies,
    pub improvements: Improvements,
}

impl Medians {
    pub fn of(repeats: &[RepeatResult]) -> Self {
        let pick = |f: &dyn Fn(&MitigationOutcome) -> Option<f64>| {
            let values: Vec<f64> = repeats.iter().filter_map(|r| f(&r.outcome)).collect();
            median(&values)
        };
        Self {
            energies: StrategyEnergies {
                baseline: pick(&|o| Some(o.baseline)),
                dd: pick(&|o| Some(o.dd)),
                zne: pick(&|o| Some(o.zne)),
                dd_zne: pick(&|o| Some(o.dd_zne)),
            },
            improvements: Improvements {
                zne: pick(&|o| o.improvements.zne),
                dd: pick(&|o| o.improvements.dd),
                dd_zne: pick(&|o| o.improvements.dd_zne),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    /// Trained ansatz energy.
    Ideal,
    /// Energy of the initial product state.
    Initial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub params: Vec<f64>,
    pub converged: bool,
    pub evaluations: usize,
    pub optimizer: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub model: Model,
    pub n: usize,
    pub h: f64,
    pub reference: Reference,
    /// The energy gaps are measured against.
    pub reference_energy: f64,
    /// Exact noiseless energy of the benchmark circuit: the ansatz optimum,
    /// or the Trotterized evolution's energy.
    pub noiseless_energy: f64,
    pub exact_ground: Option<f64>,
    pub training: Option<TrainingSummary>,
    pub repeats: Vec<RepeatResult>,
    pub medians: Medians,
}

impl GridPoint {
    pub fn strategy_values(&self) -> [(Strategy, Option<f64>, Option<f64>); 4] {
        let m = &self.medians;
        // the baseline improves on itself by 0%, when that ratio is defined
        let baseline = m.energies.baseline.and_then(|e| {
            ((e - self.reference_energy).abs() > gap_guard(self.reference_energy)).then_some(0.0)
        });
        [
            (Strategy::Baseline, m.energies.baseline, baseline),
            (Strategy::Zne, m.energies.zne, m.improvements.zne),
            (Strategy::Dd, m.energies.dd, m.improvements.dd),
            (Strategy::DdZne, m.energies.dd_zne, m.improvements.dd_zne),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    Baseline,
    Zne,
    Dd,
    DdZne,
}

impl Strategy {
    pub const MITIGATIONS: [Strategy; 3] = [Strategy::Zne, Strategy::Dd, Strategy::DdZne];

    pub fn label(self, folds: &[usize]) -> String {
        let list = folds
            .iter()
            .map(|k| k.to_string())
            .collect::<Vec<_>>()
            .join(",");
        match self {
            Strategy::Baseline => "baseline".into(),
            Strategy::Zne => format!("ZNE({list})"),
            Strategy::Dd => "DD".into(),
            Strategy::DdZne => format!("DD+ZNE({list})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub n: usize,
    pub h: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: String,
    pub suite: Suite,
    pub model: Model,
    pub strategies: Vec<String>,
    pub fit_kind: FitKind,
    pub config: ExperimentSpec,
    pub points: Vec<GridPoint>,
    pub failures: Vec<Failure>,
    pub partial: bool,
}

impl ExperimentReport {
    pub fn empty(config: ExperimentSpec) -> Self {
        let folds = config.mitigation.zne.folds.clone();
        Self {
            version: env!("CARGO_PKG_VERSION").into(),
            suite: config.suite,
            model: config.model,
            strategies: [
                Strategy::Baseline,
                Strategy::Zne,
                Strategy::Dd,
                Strategy::DdZne,
            ]
            .iter()
            .map(|s| s.label(&folds))
            .collect(),
            fit_kind: config.mitigation.zne.fit,
            config,
            points: Vec::new(),
            failures: Vec::new(),
            partial: false,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn point(&self, n: usize, h: f64) -> Option<&GridPoint> {
        self.points.iter().find(|p| p.n == n && p.h == h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    ImprovementsCsv,
    PlotCsv,
}

impl Format {
    pub const ALL: [Format; 3] = [Format::Json, Format::ImprovementsCsv, Format::PlotCsv];

    fn file_name(self, report: &ExperimentReport) -> String {
        let stem = format!("{}-{}", report.suite, report.model);
        match self {
            Format::Json => format!("{stem}-report.json"),
            Format::ImprovementsCsv => format!("{stem}-improvements.csv"),
            Format::PlotCsv => format!("{stem}-plot.csv"),
        }
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, BenchError> {
    csv::Writer::from_path(path).map_err(|source| BenchError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn write_rows(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), BenchError> {
    let wrap = |source| BenchError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.write_record(&row).map_err(wrap)?;
    }
    w.flush().map_err(|e| BenchError::io(path, e))
}

/// One row per grid point and mitigation strategy.
pub fn improvement_rows(report: &ExperimentReport) -> Vec<Vec<String>> {
    let folds = &report.config.mitigation.zne.folds;
    let mut rows = Vec::new();
    for p in &report.points {
        for s in Strategy::MITIGATIONS {
            let per_repeat: Vec<Option<f64>> = p
                .repeats
                .iter()
                .map(|r| match s {
                    Strategy::Zne => r.outcome.improvements.zne,
                    Strategy::Dd => r.outcome.improvements.dd,
                    Strategy::DdZne => r.outcome.improvements.dd_zne,
                    Strategy::Baseline => unreachable!(),
                })
                .collect();
            let m = match s {
                Strategy::Zne => p.medians.improvements.zne,
                Strategy::Dd => p.medians.improvements.dd,
                _ => p.medians.improvements.dd_zne,
            };
            rows.push(vec![
                p.model.to_string(),
                p.n.to_string(),
                p.h.to_string(),
                s.label(folds),
                opt(m),
                per_repeat
                    .iter()
                    .map(|v| opt(*v))
                    .collect::<Vec<_>>()
                    .join(";"),
            ]);
        }
    }
    rows
}

/// Bar-chart layout: strategies grouped by `(n, h)`.
pub fn plot_rows(report: &ExperimentReport) -> Vec<Vec<String>> {
    let folds = &report.config.mitigation.zne.folds;
    let mut rows = Vec::new();
    for p in &report.points {
        let group = format!("n={} h={}", p.n, p.h);
        for (s, energy, improvement) in p.strategy_values() {
            rows.push(vec![
                group.clone(),
                p.n.to_string(),
                p.h.to_string(),
                s.label(folds),
                opt(energy),
                opt(energy.map(|e| (e - p.reference_energy).abs())),
                opt(improvement),
            ]);
        }
    }
    rows
}

/// Writes the requested formats into `dir` and returns the paths written.
pub fn emit_report(
    report: &ExperimentReport,
    dir: &Path,
    formats: &[Format],
) -> Result<Vec<PathBuf>, BenchError> {
    std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let mut written = Vec::new();
    for &f in formats {
        let path = dir.join(f.file_name(report));
        match f {
            Format::Json => {
                std::fs::write(&path, report.to_json()).map_err(|e| BenchError::io(&path, e))?
            }
            Format::ImprovementsCsv => write_rows(
                &path,
                &[
                    "model",
                    "n",
                    "h",
                    "strategy",
                    "median_improvement_percent",
                    "per_repeat",
                ],
                improvement_rows(report),
            )?,
            Format::PlotCsv => write_rows(
                &path,
                &[
                    "group",
                    "n",
                    "h",
                    "strategy",
                    "median_energy",
                    "median_gap",
                    "median_improvement_percent",
                ],
                plot_rows(report),
            )?,
        }
        written.push(path);
    }
    Ok(written)
}
