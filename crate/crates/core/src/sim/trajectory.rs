//! Monte Carlo statevector trajectories.
//!
//! Each trajectory samples measurement outcomes from the Born rule and
//! samples every noise event (Pauli errors, quantum jumps for amplitude
//! damping, readout flips). Trajectories are seeded individually so shots
//! can run on any number of threads and still merge into the same histogram.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::state::{kernel, rz_matrix, StateVector};
use crate::circuit::{DynamicCircuit, Instruction, Schedule};
use crate::error::{Error, Result};
use crate::noise::{events_for, Anchor, NoiseEvent, NoiseKind, NoiseModel};

/// Outcome of one trajectory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotRecord {
    /// Recorded classical bits (after readout errors).
    pub clbits: Vec<bool>,
    /// Data readout as a bitstring; character `i` is data qubit `i`.
    pub readout: String,
    pub seed: u64,
    pub shot: u64,
}

/// Counts keyed by data-readout bitstring.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Histogram(pub BTreeMap<String, u64>);

impl Histogram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, key: &str, count: u64) {
        *self.0.entry(key.to_string()).or_insert(0) += count;
    }

    pub fn merge(mut self, other: Histogram) -> Histogram {
        for (k, v) in other.0 {
            *self.0.entry(k).or_insert(0) += v;
        }
        self
    }

    pub fn total(&self) -> u64 {
        self.0.values().sum()
    }

    pub fn get(&self, key: &str) -> u64 {
        self.0.get(key).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &u64)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A scheduled circuit with its noise events bound to instructions, ready to
/// run any number of trajectories.
#[derive(Debug, Clone)]
pub struct Executable<'a> {
    circuit: &'a DynamicCircuit,
    before: Vec<Vec<NoiseEvent>>,
    after: Vec<Vec<NoiseEvent>>,
}

impl<'a> Executable<'a> {
    pub fn new(
        circuit: &'a DynamicCircuit,
        schedule: &Schedule,
        noise: Option<&NoiseModel>,
    ) -> Result<Self> {
        circuit.validate()?;
        if !schedule.matches(circuit) {
            return Err(Error::InvalidArgument(
                "schedule does not correspond to circuit".into(),
            ));
        }
        let mut before = vec![Vec::new(); circuit.len()];
        let mut after = vec![Vec::new(); circuit.len()];
        if let Some(model) = noise {
            for ev in events_for(circuit, schedule, model)? {
                match ev.anchor {
                    Anchor::Before(i) => before[i].push(ev),
                    Anchor::After(i) => after[i].push(ev),
                }
            }
        }
        Ok(Self {
            circuit,
            before,
            after,
        })
    }

    pub fn circuit(&self) -> &DynamicCircuit {
        self.circuit
    }

    pub fn num_events(&self) -> usize {
        self.before.iter().chain(&self.after).map(Vec::len).sum()
    }

    /// Runs shot number `shot` of the stream identified by `seed`.
    pub fn run(&self, seed: u64, shot: u64) -> (ShotRecord, StateVector) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(shot);
        let mut state = StateVector::zero(self.circuit.num_qubits());
        let mut clbits = vec![false; self.circuit.num_clbits()];
        let mut last_outcome = false;

        for (i, ins) in self.circuit.instructions().iter().enumerate() {
            for ev in &self.before[i] {
                apply_event(&mut state, ev, &mut rng, &mut clbits, ins, last_outcome);
            }
            match ins {
                Instruction::Gate(g) => state.apply_gate(g),
                Instruction::Conditional { gate, condition } => {
                    if condition.iter().fold(false, |acc, &c| acc ^ clbits[c]) {
                        state.apply_gate(gate);
                    }
                }
                Instruction::Measure { qubit, clbit } => {
                    last_outcome = sample_collapse(&mut state, *qubit, &mut rng);
                    clbits[*clbit] = last_outcome;
                }
                Instruction::Reset { qubit } => {
                    if sample_collapse(&mut state, *qubit, &mut rng) {
                        state.apply_x(*qubit);
                    }
                }
                Instruction::Barrier { .. } | Instruction::Delay { .. } => {}
            }
            for ev in &self.after[i] {
                apply_event(&mut state, ev, &mut rng, &mut clbits, ins, last_outcome);
            }
        }

        let readout = self
            .circuit
            .readout_clbits()
            .iter()
            .map(|&c| if clbits[c] { '1' } else { '0' })
            .collect();
        (
            ShotRecord {
                clbits,
                readout,
                seed,
                shot,
            },
            state,
        )
    }

    /// Aggregates `shots` independent trajectories into a histogram of
    /// data-readout bitstrings.
    pub fn run_shots(&self, shots: u64, seed: u64) -> Histogram {
        (0..shots)
            .into_par_iter()
            .fold(Histogram::new, |mut h, shot| {
                let (rec, _) = self.run(seed, shot);
                h.add(&rec.readout, 1);
                h
            })
            .reduce(Histogram::new, Histogram::merge)
    }
}

fn sample_collapse<R: Rng>(state: &mut StateVector, qubit: usize, rng: &mut R) -> bool {
    let p1 = state.prob_one(qubit);
    let outcome = rng.gen::<f64>() < p1;
    state.collapse(qubit, outcome);
    outcome
}

fn apply_event<R: Rng>(
    state: &mut StateVector,
    ev: &NoiseEvent,
    rng: &mut R,
    clbits: &mut [bool],
    ins: &Instruction,
    last_outcome: bool,
) {
    match ev.kind {
        NoiseKind::PauliSample { p } => {
            if rng.gen::<f64>() < p {
                let k = ev.qubits.len() as u32;
                let mut code = rng.gen_range(1..4usize.pow(k));
                for &q in &ev.qubits {
                    match code % 4 {
                        1 => state.apply_x(q),
                        2 => state.apply_y(q),
                        3 => state.apply_z(q),
                        _ => {}
                    }
                    code /= 4;
                }
            }
        }
        NoiseKind::AmplitudeDamp { gamma } => {
            let q = ev.qubits[0];
            let jump = gamma * state.prob_one(q);
            if rng.gen::<f64>() < jump {
                state.collapse(q, true);
                state.apply_x(q);
            } else {
                let keep = (1.0 - gamma).sqrt();
                kernel::apply_diag(
                    state.amplitudes_mut(),
                    q,
                    super::state::ONE,
                    super::state::C::new(keep, 0.0),
                );
                state.normalize();
            }
        }
        NoiseKind::Dephase { p } => {
            if rng.gen::<f64>() < p {
                state.apply_z(ev.qubits[0]);
            }
        }
        NoiseKind::CoherentZ { angle } => {
            let m = rz_matrix(angle);
            kernel::apply_diag(state.amplitudes_mut(), ev.qubits[0], m[0][0], m[1][1]);
        }
        NoiseKind::ReadoutFlip { p01, p10 } => {
            if let Instruction::Measure { clbit, .. } = ins {
                let p = if last_outcome { p10 } else { p01 };
                if rng.gen::<f64>() < p {
                    clbits[*clbit] = !last_outcome;
                }
            }
        }
    }
}

/// One trajectory of `circuit` under `noise` (noiseless when `None`).
pub fn run_trajectory(
    circuit: &DynamicCircuit,
    schedule: &Schedule,
    noise: Option<&NoiseModel>,
    seed: u64,
) -> Result<(ShotRecord, StateVector)> {
    Ok(Executable::new(circuit, schedule, noise)?.run(seed, 0))
}

/// `shots` trajectories merged into a histogram of data-readout bitstrings.
pub fn run_shots(
    circuit: &DynamicCircuit,
    schedule: &Schedule,
    noise: Option<&NoiseModel>,
    shots: u64,
    seed: u64,
) -> Result<Histogram> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    Ok(Executable::new(circuit, schedule, noise)?.run_shots(shots, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{schedule, DurationTable, Gate, GateKind};

    fn bell() -> DynamicCircuit {
        let mut c = DynamicCircuit::all_data(2);
        c.gate(Gate::single(GateKind::H, 0));
        c.gate(Gate::cnot(0, 1));
        c.measure_data();
        c
    }

    #[test]
    fn bell_outcomes_are_correlated() {
        let c = bell();
        let s = schedule(&c, &DurationTable::default()).unwrap();
        let h = run_shots(&c, &s, None, 4096, 7).unwrap();
        assert_eq!(h.total(), 4096);
        assert!(h.iter().all(|(k, _)| k == "00" || k == "11"));
        let f = h.get("00") as f64 / 4096.0;
        assert!((f - 0.5).abs() <= 3.0 * (0.25f64 / 4096.0).sqrt());
    }

    #[test]
    fn single_shot_histogram() {
        let c = bell();
        let s = schedule(&c, &DurationTable::default()).unwrap();
        let h = run_shots(&c, &s, None, 1, 3).unwrap();
        assert_eq!(h.len(), 1);
        assert_eq!(h.total(), 1);
        assert!(run_shots(&c, &s, None, 0, 3).is_err());
    }

    #[test]
    fn readout_flip_frequency() {
        let mut c = DynamicCircuit::all_data(1);
        c.measure_data();
        let s = schedule(&c, &DurationTable::default()).unwrap();
        let noise = NoiseModel {
            readout_p01: 0.1,
            ..NoiseModel::ideal()
        };
        let shots = 10_000u64;
        let h = run_shots(&c, &s, Some(&noise), shots, 11).unwrap();
        let f = h.get("1") as f64 / shots as f64;
        let sigma = (0.1f64 * 0.9 / shots as f64).sqrt();
        assert!((f - 0.1).abs() <= 3.0 * sigma, "f = {f}");
    }

    #[test]
    fn readout_error_leaves_state_untouched() {
        let mut c = DynamicCircuit::all_data(1);
        c.measure_data();
        let s = schedule(&c, &DurationTable::default()).unwrap();
        let noise = NoiseModel {
            readout_p01: 1.0,
            ..NoiseModel::ideal()
        };
        let (rec, state) = run_trajectory(&c, &s, Some(&noise), 5).unwrap();
        assert_eq!(rec.readout, "1");
        assert!(state.prob_one(0) < 1e-15);
    }

    #[test]
    fn seed_determinism() {
        let mut c = DynamicCircuit::all_data(3);
        for q in 0..3 {
            c.gate(Gate::single(GateKind::H, q));
        }
        c.gate(Gate::cnot(0, 1));
        let b = c.measure(1);
        c.conditional(Gate::single(GateKind::X, 2), vec![b]);
        c.measure_data();
        let s = schedule(&c, &DurationTable::default()).unwrap();
        let noise = NoiseModel::default();
        let a = run_trajectory(&c, &s, Some(&noise), 99).unwrap();
        let b = run_trajectory(&c, &s, Some(&noise), 99).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        let h1 = run_shots(&c, &s, Some(&noise), 500, 4).unwrap();
        let h2 = run_shots(&c, &s, Some(&noise), 500, 4).unwrap();
        assert_eq!(h1, h2);
    }

    #[test]
    fn reset_returns_to_zero() {
        let mut c = DynamicCircuit::all_data(1);
        c.gate(Gate::single(GateKind::H, 0));
        c.reset(0);
        c.measure_data();
        let s = schedule(&c, &DurationTable::default()).unwrap();
        let h = run_shots(&c, &s, None, 200, 1).unwrap();
        assert_eq!(h.get("0"), 200);
    }

    #[test]
    fn amplitude_damping_decays_excited_state() {
        let mut c = DynamicCircuit::all_data(1);
        c.gate(Gate::single(GateKind::X, 0));
        c.push(Instruction::Delay {
            qubit: 0,
            duration_ns: 50_000.0,
        });
        c.measure_data();
        let s = schedule(&c, &DurationTable::default()).unwrap();
        let noise = NoiseModel {
            t1_ns: Some(50_000.0),
            t2_ns: Some(100_000.0),
            ..NoiseModel::ideal()
        };
        let shots = 20_000u64;
        let h = run_shots(&c, &s, Some(&noise), shots, 2).unwrap();
        let p0 = h.get("0") as f64 / shots as f64;
        let expect = 1.0 - (-1.0f64).exp();
        assert!((p0 - expect).abs() < 4.0 * (expect * (1.0 - expect) / shots as f64).sqrt());
    }
}
