//! Exact noiseless execution by enumerating measurement branches.
//!
//! A branch is a record of classical bits plus a set of unnormalized state
//! columns (one per input state). Measurements and resets split branches;
//! after a classical bit is no longer read it is dropped from the branch key,
//! and branches whose keys agree and whose columns are proportional are
//! merged. That keeps gadgets whose corrections restore a common state from
//! growing exponentially.

use std::collections::HashMap;

use nalgebra::DMatrix;

use super::state::{apply_gate_raw, kernel, StateVector, C, ONE, ZERO};
use crate::circuit::{DynamicCircuit, Instruction};
use crate::error::{Error, Result};
use crate::hamiltonian::PauliSum;
use crate::linalg::{hermitian_eigenvalues, trace_norm};

/// Upper bound on stored amplitudes across all live branches.
const MAX_AMPLITUDES: usize = 1 << 26;
const PRUNE: f64 = 1e-28;

#[derive(Debug, Clone)]
struct Branch {
    bits: Vec<bool>,
    cols: Vec<Vec<C>>,
}

impl Branch {
    fn weight(&self) -> f64 {
        self.cols.iter().map(|c| kernel::norm_sqr(c)).sum()
    }
}

struct Engine<'a> {
    circuit: &'a DynamicCircuit,
    merge: bool,
    /// Index of the last instruction reading each bit; `usize::MAX` for
    /// bits that must survive to the end.
    last_use: Vec<Option<usize>>,
}

impl<'a> Engine<'a> {
    fn new(circuit: &'a DynamicCircuit, merge: bool, keep_readout: bool) -> Self {
        let mut last_use = vec![None; circuit.num_clbits()];
        for (i, ins) in circuit.instructions().iter().enumerate() {
            if let Instruction::Conditional { condition, .. } = ins {
                for &c in condition {
                    last_use[c] = Some(i);
                }
            }
        }
        if keep_readout {
            for &c in circuit.readout_clbits() {
                last_use[c] = Some(usize::MAX);
            }
        }
        Self {
            circuit,
            merge,
            last_use,
        }
    }

    fn run(&self, inputs: Vec<Vec<C>>) -> Result<Vec<Branch>> {
        let mut branches = vec![Branch {
            bits: vec![false; self.circuit.num_clbits()],
            cols: inputs,
        }];
        for (i, ins) in self.circuit.instructions().iter().enumerate() {
            match ins {
                Instruction::Gate(g) => {
                    for b in &mut branches {
                        for col in &mut b.cols {
                            apply_gate_raw(col, g, 0, false);
                        }
                    }
                }
                Instruction::Conditional { gate, condition } => {
                    for b in &mut branches {
                        let parity = condition.iter().filter(|&&c| b.bits[c]).count() % 2 == 1;
                        if parity {
                            for col in &mut b.cols {
                                apply_gate_raw(col, gate, 0, false);
                            }
                        }
                    }
                }
                Instruction::Measure { qubit, clbit } => {
                    branches = split(branches, *qubit, |b, outcome| {
                        b.bits[*clbit] = outcome;
                    });
                }
                Instruction::Reset { qubit } => {
                    branches = split(branches, *qubit, |b, outcome| {
                        if outcome {
                            for col in &mut b.cols {
                                kernel::apply_x(col, *qubit);
                            }
                        }
                    });
                }
                Instruction::Barrier { .. } | Instruction::Delay { .. } => continue,
            }
            if self.merge && !matches!(ins, Instruction::Gate(_)) {
                branches = self.merge_branches(branches, i);
            }
            let stored: usize = branches
                .iter()
                .map(|b| b.cols.iter().map(Vec::len).sum::<usize>())
                .sum();
            if stored > MAX_AMPLITUDES {
                return Err(Error::BranchLimit(branches.len()));
            }
        }
        Ok(branches)
    }

    fn live(&self, clbit: usize, after: usize) -> bool {
        self.last_use[clbit].is_some_and(|last| last > after)
    }

    fn merge_branches(&self, branches: Vec<Branch>, after: usize) -> Vec<Branch> {
        let mut out: Vec<Branch> = Vec::with_capacity(branches.len());
        let mut groups: HashMap<Vec<bool>, Vec<usize>> = HashMap::new();
        for mut b in branches {
            for c in 0..b.bits.len() {
                if b.bits[c] && !self.live(c, after) {
                    b.bits[c] = false;
                }
            }
            let group = groups.entry(b.bits.clone()).or_default();
            let wb = b.weight();
            let mut merged = false;
            for &j in group.iter() {
                let a = &mut out[j];
                let wa = a.weight();
                let overlap: C = a
                    .cols
                    .iter()
                    .zip(&b.cols)
                    .flat_map(|(x, y)| x.iter().zip(y))
                    .map(|(x, y)| x.conj() * y)
                    .sum();
                if overlap.norm_sqr() >= (1.0 - 1e-13) * wa * wb {
                    let s = ((wa + wb) / wa).sqrt();
                    for col in &mut a.cols {
                        kernel::scale(col, s);
                    }
                    merged = true;
                    break;
                }
            }
            if !merged {
                group.push(out.len());
                out.push(b);
            }
        }
        out
    }
}

fn split(
    branches: Vec<Branch>,
    qubit: usize,
    mut on_outcome: impl FnMut(&mut Branch, bool),
) -> Vec<Branch> {
    let mut out = Vec::with_capacity(branches.len() * 2);
    for b in branches {
        let p1: f64 = b.cols.iter().map(|c| kernel::prob_one(c, qubit)).sum();
        let p0 = b.weight() - p1;
        let mut zero = None;
        if p1 > PRUNE {
            let mut one = b.clone();
            for col in &mut one.cols {
                kernel::project(col, qubit, true);
            }
            on_outcome(&mut one, true);
            zero = Some(one);
        }
        if p0 > PRUNE {
            let mut b = b;
            for col in &mut b.cols {
                kernel::project(col, qubit, false);
            }
            on_outcome(&mut b, false);
            out.push(b);
        }
        out.extend(zero);
    }
    out
}

fn check_qubits(circuit: &DynamicCircuit, max: usize, what: &'static str) -> Result<()> {
    if circuit.num_qubits() > max {
        return Err(Error::TooLarge {
            what,
            max,
            got: circuit.num_qubits(),
        });
    }
    circuit.validate()
}

/// One complete measurement record of a noiseless run from `|0…0⟩`.
#[derive(Debug, Clone)]
pub struct BranchOutcome {
    pub clbits: Vec<bool>,
    pub probability: f64,
    /// Normalized post-measurement state of the whole register.
    pub state: StateVector,
}

/// Every measurement branch of `circuit` started from `|0…0⟩`, without any
/// merging. Exponential in the number of measurements.
pub fn enumerate_branches(circuit: &DynamicCircuit) -> Result<Vec<BranchOutcome>> {
    check_qubits(circuit, 24, "enumerate_branches")?;
    let engine = Engine::new(circuit, false, true);
    let start = StateVector::zero(circuit.num_qubits()).into_amplitudes();
    let branches = engine.run(vec![start])?;
    Ok(branches
        .into_iter()
        .map(|b| {
            let probability = b.weight();
            let mut state = StateVector::from_amplitudes(b.cols.into_iter().next().unwrap());
            state.normalize();
            BranchOutcome {
                clbits: b.bits,
                probability,
                state,
            }
        })
        .collect())
}

/// Exact `⟨ψ|O|ψ⟩` for `observable` on the data qubits, summed over
/// measurement branches when the circuit is dynamic. Any final readout is
/// ignored.
pub fn statevector_expectation(circuit: &DynamicCircuit, observable: &PauliSum) -> Result<f64> {
    check_qubits(circuit, 24, "statevector_expectation")?;
    if observable.num_sites() != circuit.data_qubits().len() {
        return Err(Error::InvalidArgument(format!(
            "observable has {} sites but the circuit has {} data qubits",
            observable.num_sites(),
            circuit.data_qubits().len()
        )));
    }
    let map = circuit.data_qubits();
    if circuit.is_gate_only() {
        let mut state = StateVector::zero(circuit.num_qubits());
        for ins in circuit.instructions() {
            if let Instruction::Gate(g) = ins {
                state.apply_gate(g);
            }
        }
        return Ok(observable.expectation(state.amplitudes(), map));
    }
    let engine = Engine::new(circuit, true, false);
    let start = StateVector::zero(circuit.num_qubits()).into_amplitudes();
    let branches = engine.run(vec![start])?;
    Ok(branches
        .iter()
        .map(|b| observable.expectation(&b.cols[0], map))
        .sum())
}

/// Final state of a gate-only circuit from `|0…0⟩`.
pub fn gate_only_state(circuit: &DynamicCircuit) -> Result<StateVector> {
    check_qubits(circuit, 24, "gate_only_state")?;
    if !circuit.is_gate_only() {
        return Err(Error::InvalidCircuit(
            "circuit contains measurements, resets or conditionals".into(),
        ));
    }
    let mut state = StateVector::zero(circuit.num_qubits());
    for ins in circuit.instructions() {
        if let Instruction::Gate(g) = ins {
            state.apply_gate(g);
        }
    }
    Ok(state)
}

/// Unitary of a gate-only circuit on all its qubits.
pub fn circuit_unitary(circuit: &DynamicCircuit) -> Result<DMatrix<C>> {
    check_qubits(circuit, 12, "circuit_unitary")?;
    if !circuit.is_gate_only() {
        return Err(Error::InvalidCircuit(
            "circuit contains measurements, resets or conditionals".into(),
        ));
    }
    let dim = 1usize << circuit.num_qubits();
    let mut u = DMatrix::from_element(dim, dim, ZERO);
    for k in 0..dim {
        let mut col = vec![ZERO; dim];
        col[k] = ONE;
        for ins in circuit.instructions() {
            if let Instruction::Gate(g) = ins {
                apply_gate_raw(&mut col, g, 0, false);
            }
        }
        for (r, v) in col.into_iter().enumerate() {
            u[(r, k)] = v;
        }
    }
    Ok(u)
}

/// A quantum channel on the data-qubit subsystem, stored as a superoperator
/// acting on row-major vectorized density matrices:
/// `vec(ρ)[i·D + j] = ρ[i][j]`.
#[derive(Debug, Clone)]
pub struct ChannelOnData {
    num_data: usize,
    superop: DMatrix<C>,
}

impl ChannelOnData {
    /// Channel built from Kraus operators.
    pub fn from_kraus(num_data: usize, kraus: &[DMatrix<C>]) -> Self {
        let d = 1usize << num_data;
        let mut s = DMatrix::from_element(d * d, d * d, ZERO);
        for k in kraus {
            for i in 0..d {
                for j in 0..d {
                    for a in 0..d {
                        let kia = k[(i, a)];
                        if kia == ZERO {
                            continue;
                        }
                        for b in 0..d {
                            s[(i * d + j, a * d + b)] += kia * k[(j, b)].conj();
                        }
                    }
                }
            }
        }
        Self {
            num_data,
            superop: s,
        }
    }

    /// Conjugation by `u`.
    pub fn unitary(u: &DMatrix<C>) -> Self {
        let n = u.nrows().trailing_zeros() as usize;
        Self::from_kraus(n, std::slice::from_ref(u))
    }

    pub fn num_data(&self) -> usize {
        self.num_data
    }

    pub fn dim(&self) -> usize {
        1 << self.num_data
    }

    pub fn superoperator(&self) -> &DMatrix<C> {
        &self.superop
    }

    /// Choi matrix `Σ_{kl} |k⟩⟨l| ⊗ E(|k⟩⟨l|)`, unnormalized (trace `D`).
    pub fn choi(&self) -> DMatrix<C> {
        let d = self.dim();
        DMatrix::from_fn(d * d, d * d, |r, c| {
            let (k, i) = (r / d, r % d);
            let (l, j) = (c / d, c % d);
            self.superop[(i * d + j, k * d + l)]
        })
    }

    pub fn apply(&self, rho: &DMatrix<C>) -> DMatrix<C> {
        let d = self.dim();
        let v = nalgebra::DVector::from_fn(d * d, |r, _| rho[(r / d, r % d)]);
        let out = &self.superop * v;
        DMatrix::from_fn(d, d, |i, j| out[i * d + j])
    }

    /// Trace norm of the difference of normalized Choi matrices. Zero iff
    /// the channels agree; bounded above by 2.
    pub fn distance(&self, other: &ChannelOnData) -> f64 {
        let d = self.dim() as f64;
        let diff = (self.choi() - other.choi()) / C::new(d, 0.0);
        trace_norm(&diff)
    }

    pub fn distance_to_unitary(&self, u: &DMatrix<C>) -> f64 {
        self.distance(&Self::unitary(u))
    }

    /// Choi matrix positive semidefinite and partial trace over the output
    /// equal to the identity, both within `tol`.
    pub fn is_cptp(&self, tol: f64) -> bool {
        let j = self.choi();
        let herm = (&j - j.adjoint()).iter().all(|x| x.norm() <= tol);
        if !herm {
            return false;
        }
        let min = hermitian_eigenvalues(&j)[0];
        if min < -tol {
            return false;
        }
        let d = self.dim();
        (0..d).all(|k| {
            (0..d).all(|l| {
                let tr: C = (0..d).map(|i| j[(k * d + i, l * d + i)]).sum();
                let want = if k == l { ONE } else { ZERO };
                (tr - want).norm() <= tol
            })
        })
    }
}

/// The channel a noiseless circuit implements on its data qubits, with
/// ancillas starting in `|0⟩` and traced out at the end. Measurement records
/// are summed over; any final data readout is ignored.
pub fn channel_on_data(circuit: &DynamicCircuit) -> Result<ChannelOnData> {
    check_qubits(circuit, 12, "channel_on_data")?;
    let data = circuit.data_qubits();
    let nd = data.len();
    let d = 1usize << nd;
    let full = 1usize << circuit.num_qubits();
    let embed = |k: usize| -> usize {
        data.iter()
            .enumerate()
            .filter(|(i, _)| k >> i & 1 == 1)
            .map(|(_, &q)| 1usize << q)
            .sum()
    };
    let inputs = (0..d)
        .map(|k| {
            let mut col = vec![ZERO; full];
            col[embed(k)] = ONE;
            col
        })
        .collect();
    let readout_free = strip_readout(circuit);
    let engine = Engine::new(&readout_free, true, false);
    let branches = engine.run(inputs)?;

    let data_mask: usize = data.iter().map(|&q| 1usize << q).sum();
    let extract = |idx: usize| -> usize {
        data.iter()
            .enumerate()
            .filter(|(_, &q)| idx >> q & 1 == 1)
            .map(|(i, _)| 1usize << i)
            .sum()
    };
    let mut kraus = Vec::new();
    for b in &branches {
        let mut by_ancilla: HashMap<usize, DMatrix<C>> = HashMap::new();
        for (k, col) in b.cols.iter().enumerate() {
            for (idx, amp) in col.iter().enumerate() {
                if amp.norm_sqr() == 0.0 {
                    continue;
                }
                let m = by_ancilla
                    .entry(idx & !data_mask)
                    .or_insert_with(|| DMatrix::from_element(d, d, ZERO));
                m[(extract(idx), k)] += amp;
            }
        }
        let mut keys: Vec<usize> = by_ancilla.keys().copied().collect();
        keys.sort_unstable();
        kraus.extend(keys.into_iter().map(|k| by_ancilla.remove(&k).unwrap()));
    }
    Ok(ChannelOnData::from_kraus(nd, &kraus))
}

/// Removes the trailing data readout (measurements on readout bits).
fn strip_readout(circuit: &DynamicCircuit) -> DynamicCircuit {
    let readout = circuit.readout_clbits();
    let mut out = DynamicCircuit::new(circuit.num_qubits(), circuit.data_qubits().to_vec());
    out.set_num_clbits(circuit.num_clbits());
    for ins in circuit.instructions() {
        if let Instruction::Measure { clbit, .. } = ins {
            if readout.contains(clbit) {
                continue;
            }
        }
        out.push(ins.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Gate, GateKind};
    use crate::hamiltonian::{Pauli, PauliString};

    fn z0(n: usize) -> PauliSum {
        PauliSum::new(n, vec![(1.0, PauliString::with(n, &[(0, Pauli::Z)]))]).unwrap()
    }

    #[test]
    fn empty_and_plus_expectations() {
        let c = DynamicCircuit::all_data(1);
        assert_eq!(statevector_expectation(&c, &z0(1)).unwrap(), 1.0);
        let mut c = DynamicCircuit::all_data(1);
        c.gate(Gate::single(GateKind::H, 0));
        let x = PauliSum::new(1, vec![(1.0, "X".parse().unwrap())]).unwrap();
        assert!((statevector_expectation(&c, &x).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gate_only_channel_is_its_unitary() {
        let mut c = DynamicCircuit::all_data(2);
        c.gate(Gate::single(GateKind::H, 0));
        c.gate(Gate::cnot(0, 1));
        c.gate(Gate::rz(0.3, 1));
        let ch = channel_on_data(&c).unwrap();
        let u = circuit_unitary(&c).unwrap();
        assert!(ch.distance_to_unitary(&u) < 1e-12);
        assert!(ch.is_cptp(1e-10));
        let mut other = DynamicCircuit::all_data(2);
        other.gate(Gate::cnot(0, 1));
        assert!(ch.distance_to_unitary(&circuit_unitary(&other).unwrap()) > 0.1);
    }

    #[test]
    fn measure_and_reset_channel_is_cptp() {
        // teleport-free toy: measure data qubit, flip it back conditionally
        let mut c = DynamicCircuit::new(1, vec![0]);
        let b = c.measure(0);
        c.conditional(Gate::single(GateKind::X, 0), vec![b]);
        let ch = channel_on_data(&c).unwrap();
        assert!(ch.is_cptp(1e-10));
        // every input ends in |0⟩: the channel is a reset
        let mut rho = DMatrix::from_element(2, 2, ZERO);
        rho[(1, 1)] = ONE;
        let out = ch.apply(&rho);
        assert!((out[(0, 0)] - ONE).norm() < 1e-12);
    }

    #[test]
    fn ancilla_branches_sum_to_one() {
        let mut c = DynamicCircuit::new(2, vec![0]);
        c.gate(Gate::ry(1.1, 1));
        c.gate(Gate::cnot(1, 0));
        c.measure(1);
        c.reset(1);
        let branches = enumerate_branches(&c).unwrap();
        let total: f64 = branches.iter().map(|b| b.probability).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(branches.len(), 2);
    }

    #[test]
    fn size_bounds() {
        let c = DynamicCircuit::all_data(13);
        assert!(matches!(channel_on_data(&c), Err(Error::TooLarge { .. })));
    }
}
