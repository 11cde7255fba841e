//! Noise model and its translation into concrete, time-anchored noise events.
//!
//! Four error sources are modelled: depolarizing gate errors, readout
//! assignment errors, idle decoherence (amplitude damping, stochastic
//! dephasing and a coherent detuning) and a coherent Z kick on the
//! coupling-map neighbours of a qubit while it is being measured.
//!
//! Every event is attached to an instruction of the circuit: gate and readout
//! errors fire right after their instruction, idle errors right before the
//! instruction that closes the idle window. Idle noise on a qubit commutes
//! with everything happening on other qubits, so applying it at the end of
//! its window is exact.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::circuit::{DynamicCircuit, Instruction, Schedule};
use crate::error::{Error, Result};

fn default_p1q() -> f64 {
    2e-4
}
fn default_p2q() -> f64 {
    3e-3
}
fn default_readout() -> f64 {
    1e-2
}
fn default_t1() -> Option<f64> {
    Some(250_000.0)
}
fn default_t2() -> Option<f64> {
    Some(120_000.0)
}
fn default_detuning() -> f64 {
    5e-5
}
fn default_crosstalk() -> f64 {
    2e-4
}

/// Error parameters. Times are in nanoseconds, rates in rad/ns. A `null`
/// (`None`) relaxation or dephasing time means the process is absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    #[serde(default = "default_p1q")]
    pub p1q: f64,
    #[serde(default = "default_p2q")]
    pub p2q: f64,
    /// P(read 1 | true 0).
    #[serde(default = "default_readout")]
    pub readout_p01: f64,
    /// P(read 0 | true 1).
    #[serde(default = "default_readout")]
    pub readout_p10: f64,
    #[serde(default = "default_t1")]
    pub t1_ns: Option<f64>,
    #[serde(default = "default_t2")]
    pub t2_ns: Option<f64>,
    /// Static detuning of idle qubits.
    #[serde(default = "default_detuning")]
    pub idle_detuning: f64,
    /// Phase accrued by each neighbour of a qubit under measurement.
    #[serde(default = "default_crosstalk")]
    pub mcm_crosstalk_rate: f64,
    /// Undirected adjacency; `None` means a linear chain in qubit order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling_map: Option<Vec<(usize, usize)>>,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            p1q: default_p1q(),
            p2q: default_p2q(),
            readout_p01: default_readout(),
            readout_p10: default_readout(),
            t1_ns: default_t1(),
            t2_ns: default_t2(),
            idle_detuning: default_detuning(),
            mcm_crosstalk_rate: default_crosstalk(),
            coupling_map: None,
        }
    }
}

impl NoiseModel {
    /// Every probability and rate zero.
    pub fn ideal() -> Self {
        Self {
            p1q: 0.0,
            p2q: 0.0,
            readout_p01: 0.0,
            readout_p10: 0.0,
            t1_ns: None,
            t2_ns: None,
            idle_detuning: 0.0,
            mcm_crosstalk_rate: 0.0,
            coupling_map: None,
        }
    }

    /// Only a coherent idle detuning of `rate` rad/ns.
    pub fn detuning_only(rate: f64) -> Self {
        Self {
            idle_detuning: rate,
            ..Self::ideal()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [self.p1q, self.p2q, self.readout_p01, self.readout_p10];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidNoise(
                "probabilities must lie in [0, 1]".into(),
            ));
        }
        for (name, t) in [("T1", self.t1_ns), ("T2", self.t2_ns)] {
            if let Some(t) = t {
                if !(t.is_finite() && t > 0.0) {
                    return Err(Error::InvalidNoise(format!("{name} must be positive")));
                }
            }
        }
        if !self.idle_detuning.is_finite() || !self.mcm_crosstalk_rate.is_finite() {
            return Err(Error::InvalidNoise("rates must be finite".into()));
        }
        let t1_rate = self.relaxation_rate();
        let t2_rate = self.t2_ns.map_or(0.0, |t| 1.0 / t);
        if t2_rate < 0.5 * t1_rate - 1e-15 {
            return Err(Error::InvalidNoise("T2 must not exceed 2·T1".into()));
        }
        Ok(())
    }

    pub fn relaxation_rate(&self) -> f64 {
        self.t1_ns.map_or(0.0, |t| 1.0 / t)
    }

    /// `1/Tφ = 1/T2 − 1/(2·T1)`.
    pub fn pure_dephasing_rate(&self) -> f64 {
        let t2_rate = self.t2_ns.map_or(0.0, |t| 1.0 / t);
        (t2_rate - 0.5 * self.relaxation_rate()).max(0.0)
    }

    pub fn neighbours(&self, num_qubits: usize) -> Vec<Vec<usize>> {
        let mut adj = vec![BTreeSet::new(); num_qubits];
        let mut link = |a: usize, b: usize| {
            if a < num_qubits && b < num_qubits && a != b {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        };
        match &self.coupling_map {
            Some(edges) => edges.iter().for_each(|&(a, b)| link(a, b)),
            None => (1..num_qubits).for_each(|q| link(q - 1, q)),
        }
        adj.into_iter().map(|s| s.into_iter().collect()).collect()
    }

    /// Multiplies every error probability and rate by `factor` (probabilities
    /// are clamped to 1, relaxation times divided).
    pub fn scaled(&self, factor: f64) -> Self {
        let p = |x: f64| (x * factor).min(1.0);
        Self {
            p1q: p(self.p1q),
            p2q: p(self.p2q),
            readout_p01: p(self.readout_p01),
            readout_p10: p(self.readout_p10),
            t1_ns: self.t1_ns.map(|t| t / factor),
            t2_ns: self.t2_ns.map(|t| t / factor),
            idle_detuning: self.idle_detuning * factor,
            mcm_crosstalk_rate: self.mcm_crosstalk_rate * factor,
            coupling_map: self.coupling_map.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NoiseKind {
    /// With probability `p`, a uniformly random non-identity Pauli on the
    /// event's qubits.
    PauliSample {
        p: f64,
    },
    AmplitudeDamp {
        gamma: f64,
    },
    /// Z with probability `p`.
    Dephase {
        p: f64,
    },
    /// `exp(-i·angle·Z/2)`.
    CoherentZ {
        angle: f64,
    },
    /// Flips the recorded bit of the anchoring measurement.
    ReadoutFlip {
        p01: f64,
        p10: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Anchor {
    Before(usize),
    After(usize),
}

impl Anchor {
    fn key(self) -> (usize, u8) {
        match self {
            Anchor::Before(i) => (i, 0),
            Anchor::After(i) => (i, 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseEvent {
    pub time_ns: f64,
    pub qubits: Vec<usize>,
    pub kind: NoiseKind,
    pub anchor: Anchor,
}

/// Noise events for a scheduled circuit, ordered by anchor.
pub fn events_for(
    circuit: &DynamicCircuit,
    schedule: &Schedule,
    model: &NoiseModel,
) -> Result<Vec<NoiseEvent>> {
    model.validate()?;
    if !schedule.matches(circuit) {
        return Err(Error::InvalidArgument(
            "schedule does not correspond to circuit".into(),
        ));
    }
    let timed = schedule.timed();
    let mut events = Vec::new();

    for (i, ins) in circuit.instructions().iter().enumerate() {
        match ins {
            Instruction::Gate(g) | Instruction::Conditional { gate: g, .. } => {
                let p = if g.qubits.len() == 2 {
                    model.p2q
                } else {
                    model.p1q
                };
                if p > 0.0 {
                    events.push(NoiseEvent {
                        time_ns: timed[i].end,
                        qubits: g.qubits.clone(),
                        kind: NoiseKind::PauliSample { p },
                        anchor: Anchor::After(i),
                    });
                }
            }
            Instruction::Measure { qubit, .. }
                if model.readout_p01 > 0.0 || model.readout_p10 > 0.0 =>
            {
                events.push(NoiseEvent {
                    time_ns: timed[i].end,
                    qubits: vec![*qubit],
                    kind: NoiseKind::ReadoutFlip {
                        p01: model.readout_p01,
                        p10: model.readout_p10,
                    },
                    anchor: Anchor::After(i),
                });
            }
            _ => {}
        }
    }

    let relax = model.relaxation_rate();
    let dephase = model.pure_dephasing_rate();
    for w in schedule.all_idle_windows() {
        let t = w.len();
        let anchor = Anchor::Before(w.closed_by);
        let mut push = |kind| {
            events.push(NoiseEvent {
                time_ns: w.end,
                qubits: vec![w.qubit],
                kind,
                anchor,
            })
        };
        let gamma = -(-t * relax).exp_m1();
        if gamma > 0.0 {
            push(NoiseKind::AmplitudeDamp { gamma });
        }
        let p = -0.5 * (-t * dephase).exp_m1();
        if p > 0.0 {
            push(NoiseKind::Dephase { p });
        }
        let angle = model.idle_detuning * t;
        if angle != 0.0 {
            push(NoiseKind::CoherentZ { angle });
        }
    }

    if model.mcm_crosstalk_rate != 0.0 {
        let neighbours = model.neighbours(circuit.num_qubits());
        for (i, ins) in circuit.instructions().iter().enumerate() {
            let Instruction::Measure { qubit, .. } = ins else {
                continue;
            };
            let (t0, t1) = (timed[i].start, timed[i].end);
            for &q in &neighbours[*qubit] {
                for w in schedule.idle_windows(q) {
                    let overlap = w.overlap(t0, t1);
                    if overlap > 0.0 {
                        events.push(NoiseEvent {
                            time_ns: w.end,
                            qubits: vec![q],
                            kind: NoiseKind::CoherentZ {
                                angle: model.mcm_crosstalk_rate * overlap,
                            },
                            anchor: Anchor::Before(w.closed_by),
                        });
                    }
                }
            }
        }
    }

    events.sort_by_key(|e| e.anchor.key());
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{schedule, DurationTable, Gate, GateKind};
    use crate::sim::state::{mat2_mul, rz_matrix, single_qubit_matrix};

    fn idle_circuit(idle_ns: f64) -> DynamicCircuit {
        let mut c = DynamicCircuit::all_data(1);
        c.gate(Gate::single(GateKind::H, 0));
        c.push(Instruction::Delay {
            qubit: 0,
            duration_ns: idle_ns,
        });
        c.gate(Gate::single(GateKind::H, 0));
        c
    }

    #[test]
    fn zero_model_has_no_events() {
        let mut c = idle_circuit(500.0);
        c.measure_data();
        let s = schedule(&c, &DurationTable::default()).unwrap();
        assert!(events_for(&c, &s, &NoiseModel::ideal()).unwrap().is_empty());
    }

    #[test]
    fn zero_length_window_is_silent() {
        let c = idle_circuit(0.0);
        let s = schedule(&c, &DurationTable::default()).unwrap();
        let model = NoiseModel {
            p1q: 0.0,
            ..NoiseModel::default()
        };
        assert!(events_for(&c, &s, &model).unwrap().is_empty());
    }

    #[test]
    fn dephasing_probability_for_one_microsecond() {
        let c = idle_circuit(1000.0);
        let s = schedule(&c, &DurationTable::default()).unwrap();
        let model = NoiseModel {
            t1_ns: None,
            t2_ns: Some(100_000.0),
            ..NoiseModel::ideal()
        };
        let ev = events_for(&c, &s, &model).unwrap();
        assert_eq!(ev.len(), 1);
        let NoiseKind::Dephase { p } = ev[0].kind else {
            panic!("expected dephasing, got {:?}", ev[0].kind)
        };
        let expected = (1.0 - (-0.01f64).exp()) / 2.0;
        assert!((p - expected).abs() < 1e-15);
        assert!((p - 0.0049751).abs() < 1e-7);
        assert_eq!(ev[0].anchor, Anchor::Before(2));
    }

    #[test]
    fn idle_damping_and_detuning() {
        let c = idle_circuit(2000.0);
        let s = schedule(&c, &DurationTable::default()).unwrap();
        let model = NoiseModel {
            t1_ns: Some(100_000.0),
            t2_ns: Some(200_000.0),
            idle_detuning: 1e-4,
            ..NoiseModel::ideal()
        };
        let ev = events_for(&c, &s, &model).unwrap();
        // T2 = 2·T1: no pure dephasing
        assert_eq!(ev.len(), 2);
        match ev[0].kind {
            NoiseKind::AmplitudeDamp { gamma } => {
                assert!((gamma - (1.0 - (-0.02f64).exp())).abs() < 1e-15)
            }
            k => panic!("{k:?}"),
        }
        match ev[1].kind {
            NoiseKind::CoherentZ { angle } => assert!((angle - 0.2).abs() < 1e-12),
            k => panic!("{k:?}"),
        }
    }

    #[test]
    fn measurement_crosstalk_on_both_neighbours() {
        let mut c = DynamicCircuit::all_data(3);
        c.gate(Gate::single(GateKind::H, 0));
        c.gate(Gate::single(GateKind::H, 2));
        c.barrier_all();
        c.measure(1);
        c.barrier_all();
        let s = schedule(&c, &DurationTable::default()).unwrap();
        let model = NoiseModel {
            mcm_crosstalk_rate: 1e-4,
            ..NoiseModel::ideal()
        };
        let ev = events_for(&c, &s, &model).unwrap();
        assert_eq!(ev.len(), 2);
        for (e, q) in ev.iter().zip([0, 2]) {
            assert_eq!(e.qubits, vec![q]);
            match e.kind {
                NoiseKind::CoherentZ { angle } => assert!((angle - 0.12).abs() < 1e-12),
                k => panic!("{k:?}"),
            }
        }
    }

    #[test]
    fn gate_and_readout_events() {
        let mut c = DynamicCircuit::all_data(2);
        c.gate(Gate::single(GateKind::H, 0));
        c.gate(Gate::cnot(0, 1));
        c.measure_data();
        let s = schedule(&c, &DurationTable::default()).unwrap();
        let model = NoiseModel {
            p1q: 0.1,
            p2q: 0.2,
            readout_p01: 0.05,
            ..NoiseModel::ideal()
        };
        let ev = events_for(&c, &s, &model).unwrap();
        let kinds: Vec<_> = ev.iter().map(|e| e.kind).collect();
        assert_eq!(kinds[0], NoiseKind::PauliSample { p: 0.1 });
        assert_eq!(kinds[1], NoiseKind::PauliSample { p: 0.2 });
        assert_eq!(ev[1].qubits, vec![0, 1]);
        assert_eq!(
            kinds[2],
            NoiseKind::ReadoutFlip {
                p01: 0.05,
                p10: 0.0
            }
        );
        assert_eq!(ev.len(), 4);
    }

    #[test]
    fn validation() {
        assert!(NoiseModel::default().validate().is_ok());
        let bad = NoiseModel {
            t1_ns: Some(10.0),
            t2_ns: Some(100.0),
            ..NoiseModel::default()
        };
        assert!(bad.validate().is_err());
        let bad = NoiseModel {
            p2q: 1.5,
            ..NoiseModel::default()
        };
        assert!(bad.validate().is_err());
        let m = NoiseModel::default();
        let tphi = 1.0 / m.pure_dephasing_rate();
        assert!((tphi - 1.0 / (1.0 / 120_000.0 - 1.0 / 500_000.0)).abs() < 1e-6);
    }

    #[test]
    fn json_defaults_and_null_times() {
        let m: NoiseModel = serde_json::from_str("{}").unwrap();
        assert_eq!(m, NoiseModel::default());
        let m: NoiseModel = serde_json::from_str(r#"{"t1_ns": null, "p1q": 0.0}"#).unwrap();
        assert_eq!(m.t1_ns, None);
        assert_eq!(m.p1q, 0.0);
        assert_eq!(m.p2q, 3e-3);
    }

    #[test]
    fn echo_cancels_static_detuning() {
        let x = single_qubit_matrix(GateKind::X, 0.0);
        for a in [0.0, 0.1, 0.7, 2.5, -1.3] {
            let z = rz_matrix(a);
            let u = mat2_mul(&x, &mat2_mul(&z, &mat2_mul(&x, &z)));
            // identity up to global phase
            let phase = u[0][0];
            assert!((phase.norm() - 1.0).abs() < 1e-12);
            assert!(u[0][1].norm() < 1e-12 && u[1][0].norm() < 1e-12);
            assert!((u[1][1] - phase).norm() < 1e-12);
        }
    }
}
