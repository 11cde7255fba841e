//! Static ASAP scheduling with explicit idle windows.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{DynamicCircuit, Instruction};
use crate::error::{Error, Result};

/// Time resolution below which gaps are treated as zero.
pub(crate) const TIME_EPS: f64 = 1e-6;

/// Instruction durations in nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DurationTable {
    pub single_qubit_ns: f64,
    pub two_qubit_ns: f64,
    pub measure_ns: f64,
    pub feed_forward_ns: f64,
    pub reset_ns: f64,
}

impl Default for DurationTable {
    fn default() -> Self {
        Self {
            single_qubit_ns: 32.0,
            two_qubit_ns: 68.0,
            measure_ns: 1200.0,
            feed_forward_ns: 600.0,
            reset_ns: 800.0,
        }
    }
}

impl DurationTable {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.single_qubit_ns,
            self.two_qubit_ns,
            self.measure_ns,
            self.feed_forward_ns,
            self.reset_ns,
        ];
        if all.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::InvalidDurations(
                "durations must be finite and non-negative".into(),
            ));
        }
        if self.measure_ns <= 0.0 || self.feed_forward_ns <= 0.0 {
            return Err(Error::InvalidDurations(
                "measurement duration and feed-forward latency must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Windows shorter than this cannot hold an X–X pulse pair.
    pub fn dd_threshold_ns(&self) -> f64 {
        2.0 * self.single_qubit_ns
    }

    fn duration_of(&self, ins: &Instruction) -> f64 {
        match ins {
            Instruction::Gate(g) | Instruction::Conditional { gate: g, .. } => {
                if g.qubits.len() == 2 {
                    self.two_qubit_ns
                } else {
                    self.single_qubit_ns
                }
            }
            Instruction::Measure { .. } => self.measure_ns,
            Instruction::Reset { .. } => self.reset_ns,
            Instruction::Barrier { .. } => 0.0,
            Instruction::Delay { duration_ns, .. } => *duration_ns,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdleCause {
    /// The qubit waits on a mid-circuit measurement, reset or feed-forward.
    McmFf,
    GateWait,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedInstruction {
    pub index: usize,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdleWindow {
    pub qubit: usize,
    pub start: f64,
    pub end: f64,
    pub cause: IdleCause,
    /// Index of the instruction on this qubit that ends the window.
    pub closed_by: usize,
    pub too_short_for_dd: bool,
}

impl IdleWindow {
    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.len() <= TIME_EPS
    }

    pub fn overlap(&self, start: f64, end: f64) -> f64 {
        (self.end.min(end) - self.start.max(start)).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    /// One entry per instruction, in program order.
    timed: Vec<TimedInstruction>,
    idle: Vec<Vec<IdleWindow>>,
    makespan: f64,
}

impl Schedule {
    pub fn timed(&self) -> &[TimedInstruction] {
        &self.timed
    }

    pub fn idle_windows(&self, qubit: usize) -> &[IdleWindow] {
        &self.idle[qubit]
    }

    pub fn all_idle_windows(&self) -> impl Iterator<Item = &IdleWindow> {
        self.idle.iter().flatten()
    }

    pub fn makespan(&self) -> f64 {
        self.makespan
    }

    pub fn num_qubits(&self) -> usize {
        self.idle.len()
    }

    pub fn matches(&self, circuit: &DynamicCircuit) -> bool {
        self.timed.len() == circuit.len() && self.idle.len() == circuit.num_qubits()
    }

    /// Re-checks the schedule invariants against the circuit it was built from.
    pub fn verify(&self, circuit: &DynamicCircuit, durations: &DurationTable) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidCircuit(format!("schedule check: {m}")));
        if !self.matches(circuit) {
            return fail("schedule does not correspond to circuit".into());
        }
        let ins = circuit.instructions();
        let mut write_end: Vec<Option<f64>> = vec![None; circuit.num_clbits()];
        let occ = occupancy(circuit, &self.timed);
        for (q, list) in occ.iter().enumerate() {
            for pair in list.windows(2) {
                let (a, b) = (self.timed[pair[0]], self.timed[pair[1]]);
                if b.start + TIME_EPS < a.end {
                    return fail(format!(
                        "instructions {} and {} overlap on qubit {q}",
                        a.index, b.index
                    ));
                }
            }
            // windows must tile the gaps exactly
            let gaps: Vec<(f64, f64)> = list
                .windows(2)
                .map(|p| (self.timed[p[0]].end, self.timed[p[1]].start))
                .filter(|(s, e)| e - s > TIME_EPS)
                .collect();
            let windows = &self.idle[q];
            if gaps.len() != windows.len()
                || gaps.iter().zip(windows).any(|(g, w)| {
                    (g.0 - w.start).abs() > TIME_EPS || (g.1 - w.end).abs() > TIME_EPS
                })
            {
                return fail(format!("idle windows on qubit {q} do not tile its gaps"));
            }
        }
        for (i, t) in self.timed.iter().enumerate() {
            let d = durations.duration_of(&ins[i]);
            if (t.end - t.start - d).abs() > TIME_EPS {
                return fail(format!("instruction {i} has the wrong duration"));
            }
            match &ins[i] {
                Instruction::Measure { clbit, .. } => write_end[*clbit] = Some(t.end),
                Instruction::Conditional { condition, .. } => {
                    for &c in condition {
                        let ready = write_end[c].unwrap_or(f64::INFINITY);
                        if t.start + TIME_EPS < ready + durations.feed_forward_ns {
                            return fail(format!(
                                "conditional {i} starts before its feed-forward is available"
                            ));
                        }
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Per qubit, indices of the instructions that occupy it, in program order.
/// Delays are idle time and do not occupy their qubit.
fn occupancy(circuit: &DynamicCircuit, timed: &[TimedInstruction]) -> Vec<Vec<usize>> {
    let mut occ = vec![Vec::new(); circuit.num_qubits()];
    for (i, ins) in circuit.instructions().iter().enumerate() {
        if matches!(ins, Instruction::Delay { .. }) {
            continue;
        }
        for q in ins.qubits() {
            occ[q].push(i);
        }
    }
    debug_assert_eq!(timed.len(), circuit.len());
    occ
}

/// ASAP schedule. Each instruction starts when all of its qubits (and, for
/// conditional gates, the classical bits it reads plus the feed-forward
/// latency) are ready. Barriers synchronize their qubits; a contiguous run of
/// measurements on distinct qubits forms one layer and starts simultaneously.
pub fn schedule(circuit: &DynamicCircuit, durations: &DurationTable) -> Result<Schedule> {
    circuit.validate()?;
    durations.validate()?;
    let ins = circuit.instructions();
    let mut qubit_ready = vec![0.0f64; circuit.num_qubits()];
    let mut clbit_ready = vec![0.0f64; circuit.num_clbits()];
    let mut timed = Vec::with_capacity(ins.len());

    let mut i = 0;
    while i < ins.len() {
        if ins[i].is_measure() {
            // the layer ends at the first non-measurement or repeated qubit
            let mut seen = HashSet::new();
            let run_end = ins[i..]
                .iter()
                .position(|x| match x {
                    Instruction::Measure { qubit, .. } => !seen.insert(*qubit),
                    _ => true,
                })
                .map_or(ins.len(), |p| i + p);
            let start = ins[i..run_end]
                .iter()
                .flat_map(|m| m.qubits())
                .map(|q| qubit_ready[q])
                .fold(0.0, f64::max);
            let end = start + durations.measure_ns;
            for (j, m) in ins.iter().enumerate().take(run_end).skip(i) {
                if let Instruction::Measure { qubit, clbit } = m {
                    qubit_ready[*qubit] = end;
                    clbit_ready[*clbit] = end;
                }
                timed.push(TimedInstruction {
                    index: j,
                    start,
                    end,
                });
            }
            i = run_end;
            continue;
        }
        let qubits = ins[i].qubits();
        let mut start = qubits.iter().map(|&q| qubit_ready[q]).fold(0.0, f64::max);
        if let Instruction::Conditional { condition, .. } = &ins[i] {
            for &c in condition {
                start = start.max(clbit_ready[c] + durations.feed_forward_ns);
            }
        }
        let end = start + durations.duration_of(&ins[i]);
        for &q in &qubits {
            qubit_ready[q] = end;
        }
        timed.push(TimedInstruction {
            index: i,
            start,
            end,
        });
        i += 1;
    }

    let makespan = timed.iter().map(|t| t.end).fold(0.0, f64::max);
    let idle = idle_windows(circuit, &timed, durations);
    Ok(Schedule {
        timed,
        idle,
        makespan,
    })
}

fn idle_windows(
    circuit: &DynamicCircuit,
    timed: &[TimedInstruction],
    durations: &DurationTable,
) -> Vec<Vec<IdleWindow>> {
    let ins = circuit.instructions();
    // (qubit, start, end) of every measurement and reset
    let mcm: Vec<(usize, f64, f64)> = ins
        .iter()
        .enumerate()
        .filter_map(|(i, x)| match x {
            Instruction::Measure { qubit, .. } | Instruction::Reset { qubit } => {
                Some((*qubit, timed[i].start, timed[i].end))
            }
            _ => None,
        })
        .collect();
    let threshold = durations.dd_threshold_ns();

    occupancy(circuit, timed)
        .into_iter()
        .enumerate()
        .map(|(q, list)| {
            list.windows(2)
                .filter_map(|p| {
                    let (start, end) = (timed[p[0]].end, timed[p[1]].start);
                    if end - start <= TIME_EPS {
                        return None;
                    }
                    let waits_on_ff = matches!(ins[p[1]], Instruction::Conditional { .. });
                    let overlaps_mcm = mcm
                        .iter()
                        .any(|&(m, s, e)| m != q && end.min(e) - start.max(s) > TIME_EPS);
                    let cause = if waits_on_ff || overlaps_mcm {
                        IdleCause::McmFf
                    } else {
                        IdleCause::GateWait
                    };
                    Some(IdleWindow {
                        qubit: q,
                        start,
                        end,
                        cause,
                        closed_by: p[1],
                        too_short_for_dd: end - start < threshold,
                    })
                })
                .collect()
        })
        .collect()
}
