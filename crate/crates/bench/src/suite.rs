//! The ground-state and time-evolution experiment suites.

use dynmit::builders::{
    fold_circuit, trotter_circuit, BuildTarget, EntanglerKind, FoldSpec, GadgetKind, TrotterSpec,
};
use dynmit::circuit::{schedule, DurationTable, DynamicCircuit, Schedule};
use dynmit::hamiltonian::{
    estimate_energy, exact_ground_energy, expected_energy, measurement_settings, EnergyEstimate,
    PauliSum,
};
use dynmit::mitigation::{insert_dd, DDPolicy, FoldEnergy, MitigationOutcome};
use dynmit::noise::NoiseModel;
use dynmit::sim::{dm_evolve, run_shots, statevector_expectation};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{Estimator, ExperimentSpec, Suite};
use crate::params::ParamCache;
use crate::report::{
    ConfigEnergy, ExperimentReport, Failure, GridPoint, Medians, Reference, RepeatResult,
    TrainingSummary,
};
use crate::BenchError;

/// A seed for sub-stream `stream` of `base`.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(stream);
    rng.next_u64()
}

/// One measurement setting of a benchmark circuit, ready to execute.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub circuit: DynamicCircuit,
    pub schedule: Schedule,
    pub dd_pairs: usize,
}

/// Appends each measurement setting of `h` to `base`, schedules it and,
/// when `dd` is given, fills its idle windows with X pairs.
pub fn prepare(
    base: &DynamicCircuit,
    h: &PauliSum,
    durations: &DurationTable,
    dd: Option<&DDPolicy>,
) -> dynmit::Result<Vec<Prepared>> {
    measurement_settings(h)
        .iter()
        .map(|setting| {
            let circuit = setting.apply_to(base);
            let sched = schedule(&circuit, durations)?;
            match dd {
                None => Ok(Prepared {
                    circuit,
                    schedule: sched,
                    dd_pairs: 0,
                }),
                Some(policy) => {
                    let out = insert_dd(&circuit, &sched, policy, durations)?;
                    let sched = schedule(&out.circuit, durations)?;
                    Ok(Prepared {
                        circuit: out.circuit,
                        schedule: sched,
                        dd_pairs: out.pairs_inserted,
                    })
                }
            }
        })
        .collect()
}

/// Shot-based energy; setting `i` runs on seed stream `i` of `seed`.
pub fn sampled_energy(
    prepared: &[Prepared],
    h: &PauliSum,
    noise: Option<&NoiseModel>,
    shots: u64,
    seed: u64,
) -> dynmit::Result<EnergyEstimate> {
    let histograms = prepared
        .iter()
        .enumerate()
        .map(|(i, p)| {
            run_shots(
                &p.circuit,
                &p.schedule,
                noise,
                shots,
                derive_seed(seed, i as u64),
            )
        })
        .collect::<dynmit::Result<Vec<_>>>()?;
    estimate_energy(h, &histograms)
}

/// Exact energy from the density-matrix backend (small circuits only).
pub fn exact_energy(
    prepared: &[Prepared],
    h: &PauliSum,
    noise: Option<&NoiseModel>,
) -> dynmit::Result<f64> {
    let distributions = prepared
        .iter()
        .map(|p| {
            Ok(dm_evolve(&p.circuit, &p.schedule, noise)?
                .readout_distribution()
                .clone())
        })
        .collect::<dynmit::Result<Vec<_>>>()?;
    expected_energy(h, &distributions)
}

/// What a grid point runs, fixed before any shots are taken.
struct PointSetup {
    n: usize,
    h: f64,
    hamiltonian: PauliSum,
    target: BuildTarget,
    reference: Reference,
    reference_energy: f64,
    noiseless_energy: f64,
    exact_ground: Option<f64>,
    training: Option<TrainingSummary>,
}

fn setup_point(
    spec: &ExperimentSpec,
    cache: &ParamCache,
    n: usize,
    h: f64,
) -> Result<PointSetup, BenchError> {
    let hamiltonian = spec.model.hamiltonian(n, h)?;
    match spec.suite {
        Suite::GroundState => {
            let trained = cache.get_or_train(spec.model, n, h, spec.seed, &spec.training)?;
            let exact_ground = exact_ground_energy(&hamiltonian).ok();
            Ok(PointSetup {
                n,
                h,
                target: BuildTarget::Hea(trained.ansatz(n, EntanglerKind::Dynamic)),
                reference: Reference::Ideal,
                reference_energy: trained.e_ideal,
                noiseless_energy: trained.e_ideal,
                exact_ground,
                training: Some(TrainingSummary {
                    params: trained.params.clone(),
                    converged: trained.converged,
                    evaluations: trained.trace.last().map_or(0, |t| t.evaluation),
                    optimizer: trained.optimizer.clone(),
                }),
                hamiltonian,
            })
        }
        Suite::TimeEvolution => {
            let trotter = |gadget| TrotterSpec {
                model: spec.model,
                n,
                h,
                t: spec.t,
                steps: spec.steps,
                gadget,
            };
            let e_init = hamiltonian.basis_expectation(&vec![false; n]);
            let noiseless = statevector_expectation(
                &trotter_circuit(&trotter(GadgetKind::Static))?,
                &hamiltonian,
            )?;
            Ok(PointSetup {
                n,
                h,
                target: BuildTarget::Trotter(trotter(GadgetKind::Dynamic)),
                reference: Reference::Initial,
                reference_energy: e_init,
                noiseless_energy: noiseless,
                exact_ground: None,
                training: None,
                hamiltonian,
            })
        }
    }
}

struct Job {
    point: usize,
    repeat: usize,
    k: usize,
    dd: bool,
}

fn run_job(
    spec: &ExperimentSpec,
    setup: &PointSetup,
    job: &Job,
    seed: u64,
) -> Result<ConfigEnergy, BenchError> {
    let base = fold_circuit(&setup.target, FoldSpec::new(job.k)?)?;
    let policy = job.dd.then_some(&spec.mitigation.dd);
    let prepared = prepare(&base, &setup.hamiltonian, &spec.durations, policy)?;
    let estimate = match spec.estimator {
        Estimator::Trajectories => sampled_energy(
            &prepared,
            &setup.hamiltonian,
            Some(&spec.noise),
            spec.trajectories,
            seed,
        )?,
        Estimator::Exact => EnergyEstimate {
            energy: exact_energy(&prepared, &setup.hamiltonian, Some(&spec.noise))?,
            standard_error: 0.0,
        },
    };
    Ok(ConfigEnergy {
        k: job.k,
        lambda: FoldSpec { k: job.k }.lambda(),
        dd: job.dd,
        energy: estimate.energy,
        stderr: estimate.standard_error,
        dd_pairs: prepared.iter().map(|p| p.dd_pairs).sum(),
    })
}

fn repeat_seed(spec: &ExperimentSpec, point: usize, repeat: usize) -> u64 {
    derive_seed(spec.seed, ((point as u64) << 32) | repeat as u64)
}

fn job_seed(repeat_seed: u64, k: usize, dd: bool) -> u64 {
    derive_seed(repeat_seed, ((k as u64) << 1) | dd as u64)
}

/// Runs every grid point of `spec`. Failures at a grid point are recorded
/// and mark the report partial; the remaining points still run.
pub fn run_suite(
    spec: &ExperimentSpec,
    cache: &ParamCache,
) -> Result<ExperimentReport, BenchError> {
    spec.validate()?;
    let mut report = ExperimentReport::empty(spec.clone());
    let mut setups = Vec::new();
    for &n in &spec.n {
        for &h in &spec.h {
            match setup_point(spec, cache, n, h) {
                Ok(s) => setups.push(s),
                Err(e) => report.failures.push(Failure {
                    n,
                    h,
                    message: e.to_string(),
                }),
            }
        }
    }

    let folds = &spec.mitigation.zne.folds;
    let jobs: Vec<Job> = (0..setups.len())
        .flat_map(|point| {
            (0..spec.repeats).flat_map(move |repeat| {
                folds.iter().flat_map(move |&k| {
                    [false, true].map(|dd| Job {
                        point,
                        repeat,
                        k,
                        dd,
                    })
                })
            })
        })
        .collect();
    let results: Vec<Result<ConfigEnergy, BenchError>> = jobs
        .par_iter()
        .map(|job| {
            let seed = job_seed(repeat_seed(spec, job.point, job.repeat), job.k, job.dd);
            run_job(spec, &setups[job.point], job, seed)
        })
        .collect();

    let mut results = results.into_iter();
    for (point, setup) in setups.iter().enumerate() {
        let mut repeats = Vec::new();
        let mut error = None;
        for repeat in 0..spec.repeats {
            let mut energies = Vec::new();
            for _ in 0..folds.len() * 2 {
                match results.next().expect("one result per job") {
                    Ok(e) => energies.push(e),
                    Err(e) => error = error.or(Some(e.to_string())),
                }
            }
            if error.is_some() {
                continue;
            }
            match assemble(
                spec,
                setup,
                repeat,
                repeat_seed(spec, point, repeat),
                energies,
            ) {
                Ok(r) => repeats.push(r),
                Err(e) => error = error.or(Some(e.to_string())),
            }
        }
        if let Some(message) = error {
            report.failures.push(Failure {
                n: setup.n,
                h: setup.h,
                message,
            });
            continue;
        }
        report.points.push(GridPoint {
            model: spec.model,
            n: setup.n,
            h: setup.h,
            reference: setup.reference,
            reference_energy: setup.reference_energy,
            noiseless_energy: setup.noiseless_energy,
            exact_ground: setup.exact_ground,
            training: setup.training.clone(),
            medians: Medians::of(&repeats),
            repeats,
        });
    }
    report.partial = !report.failures.is_empty();
    Ok(report)
}

fn assemble(
    spec: &ExperimentSpec,
    setup: &PointSetup,
    repeat: usize,
    seed: u64,
    energies: Vec<ConfigEnergy>,
) -> Result<RepeatResult, BenchError> {
    let folds_of = |dd: bool| -> Vec<FoldEnergy> {
        energies
            .iter()
            .filter(|e| e.dd == dd)
            .map(|e| FoldEnergy {
                k: e.k,
                energy: e.energy,
                stderr: e.stderr,
            })
            .collect()
    };
    let outcome = MitigationOutcome::new(
        setup.reference_energy,
        &folds_of(false),
        &folds_of(true),
        &spec.mitigation.zne,
    )?;
    Ok(RepeatResult {
        repeat,
        seed,
        energies,
        outcome,
    })
}

pub fn run_ground_state_suite(
    spec: &ExperimentSpec,
    cache: &ParamCache,
) -> Result<ExperimentReport, BenchError> {
    if spec.suite != Suite::GroundState {
        return Err(BenchError::Config(
            "spec is not a ground-state experiment".into(),
        ));
    }
    run_suite(spec, cache)
}

pub fn run_time_evolution_suite(
    spec: &ExperimentSpec,
    cache: &ParamCache,
) -> Result<ExperimentReport, BenchError> {
    if spec.suite != Suite::TimeEvolution {
        return Err(BenchError::Config(
            "spec is not a time-evolution experiment".into(),
        ));
    }
    run_suite(spec, cache)
}
