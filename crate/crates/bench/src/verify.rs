//! Oracle and property checks behind the `verify` subcommand.

use std::f64::consts::PI;
use std::fmt;

use dynmit::builders::{
    dynamic_entangler, fold_circuit, hea_circuit, inverse_entangler, rzz_gadget, static_ladder,
    trotter_circuit, AnsatzSpec, BuildTarget, EntanglerKind, FoldSpec, GadgetKind, TrotterSpec,
};
use dynmit::circuit::{schedule, DurationTable, DynamicCircuit, Gate, GateKind};
use dynmit::hamiltonian::{
    exact_evolve, exact_ground_energy, heisenberg, tfim, to_dense, Model, Pauli, PauliString,
    PauliSum,
};
use dynmit::mitigation::{median, zne_extrapolate, FitKind, ZNEConfig, ZnePoint};
use dynmit::noise::NoiseModel;
use dynmit::sim::{
    channel_on_data, circuit_unitary, dm_evolve, gate_only_state, run_shots,
    statevector_expectation, StateVector,
};
use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ConfigFile, ExperimentSpec, Suite};
use crate::params::ParamCache;
use crate::report::ExperimentReport;
use crate::suite::{prepare, run_suite, sampled_energy};
use crate::BenchError;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(
            f,
            "[{status}] {:>2} {}: {}",
            self.id, self.name, self.detail
        )
    }
}

fn check(
    id: usize,
    name: &'static str,
    body: impl FnOnce() -> Result<(bool, String), BenchError>,
) -> Check {
    match body() {
        Ok((passed, detail)) => Check {
            id,
            name,
            passed,
            detail,
        },
        Err(e) => Check {
            id,
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn random_angles(rng: &mut ChaCha8Rng, count: usize) -> Vec<f64> {
    (0..count).map(|_| rng.gen_range(-PI..PI)).collect()
}

/// `exp(−i·θ/2·P⊗P)` built from the dense Pauli matrix.
fn pp_rotation(theta: f64, p: Pauli) -> DMatrix<C> {
    let pp =
        PauliSum::new(2, vec![(1.0, PauliString::with(2, &[(0, p), (1, p)]))]).expect("valid term");
    DMatrix::<C>::identity(4, 4) * C::new((theta / 2.0).cos(), 0.0)
        - to_dense(&pp) * C::new(0.0, (theta / 2.0).sin())
}

pub fn gadget_correctness() -> Check {
    check(1, "gadget correctness", || {
        let mut worst: f64 = 0.0;
        for n in 2..=4 {
            let ladder = circuit_unitary(&static_ladder(n)?)?;
            worst =
                worst.max(channel_on_data(&dynamic_entangler(n)?)?.distance_to_unitary(&ladder));
            worst = worst.max(
                channel_on_data(&inverse_entangler(n)?)?.distance_to_unitary(&ladder.adjoint()),
            );
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for basis in [Pauli::Z, Pauli::X, Pauli::Y] {
            for theta in random_angles(&mut rng, 10) {
                let ch = channel_on_data(&rzz_gadget(theta, basis)?)?;
                worst = worst.max(ch.distance_to_unitary(&pp_rotation(theta, basis)));
            }
        }
        Ok((
            worst <= 1e-9,
            format!("max channel distance {worst:.2e} (bound 1e-9)"),
        ))
    })
}

pub fn fold_identity(trajectories: u64) -> Check {
    check(2, "fold identity", || {
        let h = tfim(3, 1.0)?;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let target = BuildTarget::Hea(AnsatzSpec {
            n: 3,
            layers: 2,
            params: random_angles(&mut rng, AnsatzSpec::num_params(3, 2)),
            entangler: EntanglerKind::Dynamic,
        });
        let e0 = statevector_expectation(&fold_circuit(&target, FoldSpec { k: 0 })?, &h)?;
        let (mut exact_dev, mut worst_sigma): (f64, f64) = (0.0, 0.0);
        for k in 1..=2 {
            let folded = fold_circuit(&target, FoldSpec { k })?;
            exact_dev = exact_dev.max((statevector_expectation(&folded, &h)? - e0).abs());
            let prepared = prepare(&folded, &h, &DurationTable::default(), None)?;
            let est = sampled_energy(&prepared, &h, None, trajectories, 20 + k as u64)?;
            worst_sigma = worst_sigma.max((est.energy - e0).abs() / est.standard_error);
        }
        Ok((
            exact_dev <= 1e-9 && worst_sigma <= 3.0,
            format!("branch deviation {exact_dev:.2e}, sampled deviation {worst_sigma:.2}σ over {trajectories} trajectories"),
        ))
    })
}

pub fn trotter_fidelity() -> Check {
    check(3, "Trotter fidelity", || {
        let h = tfim(3, 0.5)?;
        let exact = exact_evolve(&h, 0.25, &StateVector::zero(3))?;
        let infidelity = |steps| -> Result<f64, BenchError> {
            let c = trotter_circuit(&TrotterSpec {
                model: Model::Tfim,
                n: 3,
                h: 0.5,
                t: 0.25,
                steps,
                gadget: GadgetKind::Static,
            })?;
            Ok(1.0 - gate_only_state(&c)?.fidelity(&exact))
        };
        let (i5, i10) = (infidelity(5)?, infidelity(10)?);
        Ok((
            1.0 - i5 >= 0.999 && i10 < i5,
            format!(
                "fidelity {:.6} at N=5, infidelity {i5:.2e} → {i10:.2e} at N=10",
                1.0 - i5
            ),
        ))
    })
}

pub fn exact_oracles() -> Check {
    check(4, "exact oracles", || {
        let mut worst: f64 = 0.0;
        worst = worst.max((exact_ground_energy(&tfim(2, 1.0)?)? + 5f64.sqrt()).abs());
        for n in [3, 5, 8] {
            worst = worst.max((exact_ground_energy(&tfim(n, 0.0)?)? + (n as f64 - 1.0)).abs());
        }
        worst = worst.max((exact_ground_energy(&heisenberg(2, 0.0)?)? + 3.0).abs());
        let e_tfim = tfim(5, 0.0)?.basis_expectation(&[false; 5]);
        let e_heis = heisenberg(5, 0.5)?.basis_expectation(&[false; 5]);
        Ok((
            worst <= 1e-10 && e_tfim == 4.0 && e_heis == 6.5,
            format!("max ground-energy error {worst:.2e}; E_init {e_tfim} (TFIM n=5), {e_heis} (Heisenberg n=5, h=0.5)"),
        ))
    })
}

/// Detuning that gives about 0.36 rad of phase across a 1800 ns
/// measurement-plus-feed-forward window.
pub const ECHO_DETUNING: f64 = 2e-4;

pub fn echo_spec(trajectories: u64) -> ExperimentSpec {
    let file = ConfigFile {
        n: Some(vec![3]),
        h: Some(vec![0.5]),
        trajectories: Some(trajectories),
        noise: Some(NoiseModel::detuning_only(ECHO_DETUNING)),
        ..Default::default()
    };
    ExperimentSpec::resolve(file, Some(Suite::GroundState), false).expect("valid echo spec")
}

/// Reads the DD echo criterion off a detuning-only ground-state report.
pub fn dd_echo(report: &ExperimentReport) -> Check {
    check(5, "DD echo", || {
        let p = report
            .points
            .first()
            .ok_or_else(|| BenchError::Config("echo report has no grid point".into()))?;
        let gap = |dd: bool| -> Vec<f64> {
            p.repeats
                .iter()
                .map(|r| {
                    let e = r
                        .energies
                        .iter()
                        .find(|e| e.k == 0 && e.dd == dd)
                        .expect("k = 0 measured");
                    (e.energy - p.reference_energy).abs() / e.stderr
                })
                .collect()
        };
        let dd_sigma = median(&gap(true)).unwrap_or(f64::INFINITY);
        let base_sigma = median(&gap(false)).unwrap_or(0.0);
        let improvement = p.medians.improvements.dd;
        Ok((
            dd_sigma <= 3.0 && base_sigma > 3.0 && improvement.is_some_and(|i| i >= 90.0),
            format!(
                "DD off by {dd_sigma:.2}σ, baseline off by {base_sigma:.1}σ, median DD improvement {}",
                fmt_pct(improvement)
            ),
        ))
    })
}

fn fmt_pct(x: Option<f64>) -> String {
    x.map_or("invalid".into(), |v| format!("{v:.1}%"))
}

/// Default-noise TFIM ground-state grid used by the ZNE and ordering checks.
pub fn default_noise_spec(n: Vec<usize>, trajectories: u64) -> ExperimentSpec {
    let file = ConfigFile {
        n: Some(n),
        trajectories: Some(trajectories),
        ..Default::default()
    };
    ExperimentSpec::resolve(file, Some(Suite::GroundState), false).expect("valid default spec")
}

pub fn zne_extrapolation(report: &ExperimentReport) -> Check {
    check(6, "ZNE extrapolation", || {
        let pts = |f: &dyn Fn(f64) -> f64| -> Vec<ZnePoint> {
            [1.0, 3.0, 5.0]
                .iter()
                .map(|&lambda| ZnePoint {
                    lambda,
                    energy: f(lambda),
                    stderr: None,
                })
                .collect()
        };
        let cfg = |fit| ZNEConfig {
            fit,
            ..Default::default()
        };
        let lin = zne_extrapolate(&pts(&|l| 11.0 - l), &cfg(FitKind::Linear))?;
        let exp = zne_extrapolate(
            &pts(&|l| -2.0 + 0.5 * (-0.3 * l).exp()),
            &cfg(FitKind::Exponential),
        )?;
        let synthetic = (lin.e0 - 11.0).abs().max((exp.e0 + 1.5).abs());

        let mut lines = Vec::new();
        let mut all = synthetic <= 1e-6 && !exp.fallback;
        for p in report.points.iter().filter(|p| p.n == 3) {
            let gaps = |f: &dyn Fn(&dynmit::mitigation::MitigationOutcome) -> f64| -> f64 {
                median(&p.repeats.iter().map(|r| f(&r.outcome)).collect::<Vec<_>>())
                    .unwrap_or(f64::NAN)
            };
            let zne_gap = gaps(&|o| (o.zne - o.e_ref).abs());
            let base_gap = gaps(&|o| (o.baseline - o.e_ref).abs());
            let se = gaps(&|o| o.zne_fit.e0_stderr.unwrap_or(0.0));
            let ok = zne_gap <= base_gap + 2.0 * se;
            all &= ok;
            lines.push(format!("h={} {zne_gap:.3} vs {base_gap:.3}", p.h));
        }
        if lines.is_empty() {
            return Err(BenchError::Config("no n = 3 grid point in report".into()));
        }
        Ok((
            all,
            format!(
                "synthetic error {synthetic:.1e}; median |gap| ZNE vs baseline: {}",
                lines.join(", ")
            ),
        ))
    })
}

pub fn combined_ordering(report: &ExperimentReport) -> Check {
    check(7, "combined-strategy ordering", || {
        let mut parts = Vec::new();
        let mut passed = true;
        for n in [3, 5] {
            let points: Vec<_> = report.points.iter().filter(|p| p.n == n).collect();
            let wins = points
                .iter()
                .filter(|p| {
                    let m = &p.medians.improvements;
                    match (m.dd_zne, m.dd, m.zne) {
                        (Some(both), Some(dd), Some(zne)) => both >= dd && both >= zne,
                        _ => false,
                    }
                })
                .count();
            passed &= points.len() == 4 && wins >= 3;
            parts.push(format!(
                "n={n}: DD+ZNE best at {wins}/{} fields",
                points.len()
            ));
        }
        let n3: Vec<Option<f64>> = report
            .points
            .iter()
            .filter(|p| p.n == 3)
            .map(|p| p.medians.improvements.dd_zne)
            .collect();
        passed &= !n3.is_empty() && n3.iter().all(|v| v.is_some_and(|x| x >= 40.0));
        parts.push(format!(
            "n=3 DD+ZNE medians [{}]",
            n3.iter()
                .map(|v| fmt_pct(*v))
                .collect::<Vec<_>>()
                .join(", ")
        ));
        Ok((passed, parts.join("; ")))
    })
}

pub fn dynamic_static_equivalence() -> Check {
    check(8, "dynamic/static equivalence", || {
        let mut worst: f64 = 0.0;
        let h = tfim(3, 0.7)?;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let stat = AnsatzSpec {
                n: 3,
                layers: 2,
                params: random_angles(&mut rng, AnsatzSpec::num_params(3, 2)),
                entangler: EntanglerKind::StaticLadder,
            };
            let dynm = AnsatzSpec {
                entangler: EntanglerKind::Dynamic,
                ..stat.clone()
            };
            let d = statevector_expectation(&hea_circuit(&stat)?, &h)?
                - statevector_expectation(&hea_circuit(&dynm)?, &h)?;
            worst = worst.max(d.abs());
        }
        for model in [Model::Tfim, Model::Heisenberg] {
            let ham = model.hamiltonian(3, 0.5)?;
            let spec = |gadget| TrotterSpec {
                model,
                n: 3,
                h: 0.5,
                t: 0.25,
                steps: 5,
                gadget,
            };
            let d = statevector_expectation(&trotter_circuit(&spec(GadgetKind::Static))?, &ham)?
                - statevector_expectation(&trotter_circuit(&spec(GadgetKind::Dynamic))?, &ham)?;
            worst = worst.max(d.abs());
        }
        Ok((
            worst <= 1e-9,
            format!("max energy difference {worst:.2e} (HEA and Trotter, n=3)"),
        ))
    })
}

/// Four qubits: a Bell pair on data 0–1 whose parity is copied onto ancilla
/// 3, measured, and fed forward as an X on data 2.
pub fn oracle_circuit() -> DynamicCircuit {
    let mut c = DynamicCircuit::new(4, vec![0, 1, 2]);
    c.gate(Gate::ry(1.1, 0));
    c.gate(Gate::cnot(0, 1));
    c.gate(Gate::ry(0.4, 2));
    c.gate(Gate::cnot(1, 3));
    let bit = c.measure(3);
    c.conditional(Gate::single(GateKind::X, 2), vec![bit]);
    c.gate(Gate::rx(0.3, 1));
    c.measure_data();
    c
}

pub fn trajectory_vs_density(shots: u64) -> Check {
    check(9, "trajectory vs density oracle", || {
        let c = oracle_circuit();
        let d = DurationTable::default();
        let s = schedule(&c, &d)?;
        let noise = NoiseModel {
            p1q: 5e-3,
            p2q: 2e-2,
            ..Default::default()
        };
        // ⟨Z0 Z2⟩ from the recorded data readout
        let parity = |key: &str| {
            let b = key.as_bytes();
            if (b[0] == b'1') ^ (b[2] == b'1') {
                -1.0
            } else {
                1.0
            }
        };
        let exact: f64 = dm_evolve(&c, &s, Some(&noise))?
            .readout_distribution()
            .iter()
            .map(|(k, p)| p * parity(k))
            .sum();
        let hist = run_shots(&c, &s, Some(&noise), shots, 9)?;
        let mean = hist.iter().map(|(k, n)| *n as f64 * parity(k)).sum::<f64>() / shots as f64;
        let se = ((1.0 - mean * mean).max(0.0) / shots as f64).sqrt();
        let z = (mean - exact).abs() / se;
        Ok((
            z <= 4.0,
            format!("⟨Z0Z2⟩ sampled {mean:.4} vs exact {exact:.4} ({z:.2} standard errors, {shots} shots)"),
        ))
    })
}

pub fn reproducibility(cache: &ParamCache) -> Check {
    check(10, "reproducibility", || {
        let file = ConfigFile {
            n: Some(vec![3]),
            h: Some(vec![0.5]),
            trajectories: Some(200),
            repeats: Some(2),
            ..Default::default()
        };
        let mut same = true;
        for suite in [Suite::GroundState, Suite::TimeEvolution] {
            let spec = ExperimentSpec::resolve(file.clone(), Some(suite), false)?;
            let a = run_suite(&spec, cache)?.to_json();
            let b = run_suite(&spec, cache)?.to_json();
            same &= a == b;
        }
        Ok((
            same,
            format!(
                "two runs per suite {} byte-identical",
                if same { "are" } else { "are NOT" }
            ),
        ))
    })
}

/// Checks that need no suite runs; fast enough for every `verify`.
pub fn quick_checks() -> Vec<Check> {
    vec![
        gadget_correctness(),
        fold_identity(2000),
        trotter_fidelity(),
        exact_oracles(),
        dynamic_static_equivalence(),
        trajectory_vs_density(50_000),
    ]
}

/// Every criterion, including the noisy suite runs.
pub fn all_checks(cache: &ParamCache) -> Vec<Check> {
    let mut checks = quick_checks();
    let echo = run_suite(&echo_spec(2000), cache);
    let grid = run_suite(&default_noise_spec(vec![3, 5], 2000), cache);
    let from = |r: &Result<ExperimentReport, BenchError>,
                id,
                name,
                f: fn(&ExperimentReport) -> Check| match r {
        Ok(report) => f(report),
        Err(e) => Check {
            id,
            name,
            passed: false,
            detail: format!("suite failed: {e}"),
        },
    };
    checks.push(from(&echo, 5, "DD echo", dd_echo));
    checks.push(from(&grid, 6, "ZNE extrapolation", zne_extrapolation));
    checks.push(from(
        &grid,
        7,
        "combined-strategy ordering",
        combined_ordering,
    ));
    checks.push(reproducibility(cache));
    checks.sort_by_key(|c| c.id);
    checks
}
