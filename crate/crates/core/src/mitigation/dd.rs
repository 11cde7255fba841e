//! X–X dynamical decoupling in scheduled idle windows.

use serde::{Deserialize, Serialize};

use crate::circuit::{
    DurationTable, DynamicCircuit, Gate, GateKind, IdleCause, Instruction, Schedule,
};
use crate::error::{Error, Result};

/// Where the two X pulses go inside a window, as fractions of its length
/// measured to the pulse centres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DDPolicy {
    pub f1: f64,
    pub f2: f64,
    /// Windows shorter than this are skipped. `None` uses the duration
    /// table's DD threshold (two single-qubit gates).
    pub min_window_ns: Option<f64>,
}

impl Default for DDPolicy {
    fn default() -> Self {
        Self {
            f1: 0.25,
            f2: 0.75,
            min_window_ns: None,
        }
    }
}

impl DDPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.f1 > 0.0 && self.f1 < self.f2 && self.f2 < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "DD fractions must satisfy 0 < f1 < f2 < 1, got {} and {}",
                self.f1, self.f2
            )));
        }
        if let Some(m) = self.min_window_ns {
            if !m.is_finite() || m < 0.0 {
                return Err(Error::InvalidArgument(format!("bad DD minimum window {m}")));
            }
        }
        Ok(())
    }

    /// Shortest window that holds both pulses at the requested centres
    /// without overlapping each other or the window edges.
    pub fn min_len(&self, durations: &DurationTable) -> f64 {
        let tau = durations.single_qubit_ns;
        let fit = (tau / (2.0 * self.f1))
            .max(tau / (2.0 * (1.0 - self.f2)))
            .max(tau / (self.f2 - self.f1));
        self.min_window_ns
            .unwrap_or_else(|| durations.dd_threshold_ns())
            .max(fit)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DDResult {
    pub circuit: DynamicCircuit,
    pub pairs_inserted: usize,
    /// Eligible windows (data qubit, mcm-ff) too short for a pulse pair.
    pub windows_skipped: usize,
}

/// Inserts an X pair into every mcm-ff idle window on a data qubit.
///
/// Pulses are pinned with `Delay`s placed just before the instruction that
/// closes the window, so the ASAP schedule of the output puts them at the
/// policy fractions and leaves every other instruction where it was.
pub fn insert_dd(
    circuit: &DynamicCircuit,
    schedule: &Schedule,
    policy: &DDPolicy,
    durations: &DurationTable,
) -> Result<DDResult> {
    policy.validate()?;
    if !schedule.matches(circuit) {
        return Err(Error::InvalidArgument(
            "schedule does not correspond to circuit".into(),
        ));
    }
    let tau = durations.single_qubit_ns;
    let min_len = policy.min_len(durations);
    let ins = circuit.instructions();

    let mut inserts: Vec<(usize, Vec<Instruction>)> = Vec::new();
    let mut skipped = 0;
    for &q in circuit.data_qubits() {
        for w in schedule.idle_windows(q) {
            if w.cause != IdleCause::McmFf {
                continue;
            }
            if w.len() < min_len {
                skipped += 1;
                continue;
            }
            // a measurement layer must stay contiguous to stay synchronized
            let mut at = w.closed_by;
            let timed = schedule.timed();
            while at > 0
                && ins[at].is_measure()
                && ins[at - 1].is_measure()
                && timed[at - 1].start == timed[at].start
            {
                at -= 1;
            }
            let len = w.len();
            let first = policy.f1 * len - tau / 2.0;
            let second = (policy.f2 - policy.f1) * len - tau;
            let mut seq = Vec::with_capacity(4);
            for gap in [first, second] {
                if gap > 0.0 {
                    seq.push(Instruction::Delay {
                        qubit: q,
                        duration_ns: gap,
                    });
                }
                seq.push(Instruction::Gate(Gate::single(GateKind::X, q)));
            }
            inserts.push((at, seq));
        }
    }

    let pairs_inserted = inserts.len();
    let mut out = circuit.clone();
    // later positions first so earlier indices stay valid
    inserts.sort_by_key(|b| std::cmp::Reverse(b.0));
    for (at, seq) in inserts {
        for instruction in seq.into_iter().rev() {
            out.insert(at, instruction);
        }
    }
    Ok(DDResult {
        circuit: out,
        pairs_inserted,
        windows_skipped: skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::schedule;

    /// q0 waits on a 1200 ns measurement of q1.
    fn spectator() -> DynamicCircuit {
        let mut c = DynamicCircuit::new(2, vec![0]);
        c.gate(Gate::single(GateKind::H, 0));
        c.measure(1);
        c.barrier_all();
        c.gate(Gate::single(GateKind::H, 0));
        c
    }

    #[test]
    fn pulses_land_at_the_quarter_points() {
        let d = DurationTable::default();
        let c = spectator();
        let s = schedule(&c, &d).unwrap();
        let w = s.idle_windows(0)[0];
        assert_eq!((w.start, w.end), (32.0, 1200.0));
        let out = insert_dd(&c, &s, &DDPolicy::default(), &d).unwrap();
        assert_eq!(out.pairs_inserted, 1);
        let s2 = schedule(&out.circuit, &d).unwrap();
        s2.verify(&out.circuit, &d).unwrap();
        let centres: Vec<f64> = out
            .circuit
            .instructions()
            .iter()
            .zip(s2.timed())
            .filter(|(i, _)| matches!(i, Instruction::Gate(g) if g.kind == GateKind::X))
            .map(|(_, t)| (t.start + t.end) / 2.0)
            .collect();
        let len = w.len();
        assert!((centres[0] - (w.start + 0.25 * len)).abs() < 1e-9);
        assert!((centres[1] - (w.start + 0.75 * len)).abs() < 1e-9);
        // nothing else moved
        assert_eq!(s2.makespan(), s.makespan());
    }

    #[test]
    fn no_windows_is_a_no_op() {
        let d = DurationTable::default();
        let mut c = DynamicCircuit::all_data(2);
        c.gate(Gate::cnot(0, 1));
        let s = schedule(&c, &d).unwrap();
        let out = insert_dd(&c, &s, &DDPolicy::default(), &d).unwrap();
        assert_eq!(out.circuit, c);
        assert_eq!(out.pairs_inserted, 0);
    }

    #[test]
    fn short_windows_are_counted() {
        let d = DurationTable {
            measure_ns: 40.0,
            ..Default::default()
        };
        let c = spectator();
        let s = schedule(&c, &d).unwrap();
        let out = insert_dd(&c, &s, &DDPolicy::default(), &d).unwrap();
        assert_eq!(out.pairs_inserted, 0);
        assert_eq!(out.windows_skipped, 1);
    }

    #[test]
    fn ancillas_are_left_alone() {
        let d = DurationTable::default();
        let mut c = DynamicCircuit::new(2, vec![1]);
        c.gate(Gate::single(GateKind::H, 0));
        c.measure(1);
        c.barrier_all();
        c.gate(Gate::single(GateKind::H, 0));
        let s = schedule(&c, &d).unwrap();
        let out = insert_dd(&c, &s, &DDPolicy::default(), &d).unwrap();
        assert_eq!(out.pairs_inserted, 0);
    }

    #[test]
    fn bad_fractions_rejected() {
        let p = DDPolicy {
            f1: 0.8,
            f2: 0.2,
            min_window_ns: None,
        };
        assert!(p.validate().is_err());
    }
}
