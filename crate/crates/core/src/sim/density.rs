//! Exact density-matrix evolution for small registers.
//!
//! `ρ` is stored as a `2N`-qubit vector with the row index in the high `N`
//! bits and the column index in the low `N` bits, so a gate `U` acts as `U`
//! on the row qubits and `conj(U)` on the column qubits. Classical records
//! are tracked as a map from live bits to unnormalized conditional states.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;

use super::state::{apply_gate_raw, kernel, rz_matrix, StateVector, C, ZERO};
use crate::circuit::{DynamicCircuit, Gate, GateKind, Instruction, Schedule};
use crate::error::{Error, Result};
use crate::hamiltonian::PauliSum;
use crate::noise::{events_for, Anchor, NoiseEvent, NoiseKind, NoiseModel};

pub const MAX_DENSITY_QUBITS: usize = 9;

/// Result of [`dm_evolve`].
#[derive(Debug, Clone)]
pub struct DensityResult {
    num_qubits: usize,
    /// Final state averaged over every measurement record.
    rho: Vec<C>,
    /// Probability of each recorded data-readout bitstring.
    readout: BTreeMap<String, f64>,
}

impl DensityResult {
    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn matrix(&self) -> DMatrix<C> {
        let n = self.num_qubits;
        let dim = 1usize << n;
        DMatrix::from_fn(dim, dim, |r, c| self.rho[(r << n) | c])
    }

    pub fn trace(&self) -> f64 {
        let n = self.num_qubits;
        (0..1usize << n).map(|r| self.rho[(r << n) | r].re).sum()
    }

    /// `Tr(ρ·O)` for `observable` on the data qubits `qubit_map`.
    pub fn expectation(&self, observable: &PauliSum, qubit_map: &[usize]) -> f64 {
        let n = self.num_qubits;
        let mut total = 0.0;
        for (coeff, p) in observable.terms() {
            let (mut x, mut z, mut ny) = (0usize, 0usize, 0u32);
            for (i, pauli) in p.paulis().iter().enumerate() {
                let bit = 1usize << qubit_map[i];
                match pauli {
                    crate::hamiltonian::Pauli::I => {}
                    crate::hamiltonian::Pauli::X => x |= bit,
                    crate::hamiltonian::Pauli::Z => z |= bit,
                    crate::hamiltonian::Pauli::Y => {
                        x |= bit;
                        z |= bit;
                        ny += 1;
                    }
                }
            }
            let phase = match ny % 4 {
                0 => C::new(1.0, 0.0),
                1 => C::new(0.0, 1.0),
                2 => C::new(-1.0, 0.0),
                _ => C::new(0.0, -1.0),
            };
            // Tr(Pρ) = Σ_r phase_r ρ[r][r ⊕ x] with P|r⟩ = phase_r |r ⊕ x⟩
            let mut acc = ZERO;
            for r in 0..1usize << n {
                let sign = if (r & z).count_ones() % 2 == 1 {
                    -1.0
                } else {
                    1.0
                };
                acc += self.rho[(r << n) | (r ^ x)] * sign;
            }
            total += coeff * (acc * phase).re;
        }
        total
    }

    /// Probability of each recorded readout bitstring (character `i` is data
    /// qubit `i`), including readout errors.
    pub fn readout_distribution(&self) -> &BTreeMap<String, f64> {
        &self.readout
    }

    /// Probability that the final state of qubit `q` is `|1⟩`.
    pub fn prob_one(&self, q: usize) -> f64 {
        let n = self.num_qubits;
        (0..1usize << n)
            .filter(|r| r >> q & 1 == 1)
            .map(|r| self.rho[(r << n) | r].re)
            .sum()
    }
}

struct Evolver<'a> {
    circuit: &'a DynamicCircuit,
    n: usize,
    last_use: Vec<Option<usize>>,
}

type Branches = HashMap<Vec<bool>, Vec<C>>;

impl Evolver<'_> {
    fn gate(&self, rho: &mut [C], g: &Gate) {
        apply_gate_raw(rho, g, self.n, false);
        apply_gate_raw(rho, g, 0, true);
    }

    fn live(&self, c: usize, after: usize) -> bool {
        self.last_use[c].is_some_and(|l| l > after)
    }

    fn event(&self, branches: Branches, ev: &NoiseEvent, ins: &Instruction) -> Branches {
        let n = self.n;
        match ev.kind {
            NoiseKind::ReadoutFlip { p01, p10 } => {
                let Instruction::Measure { clbit, .. } = ins else {
                    return branches;
                };
                let mut out: Branches = HashMap::new();
                for (bits, rho) in branches {
                    let p = if bits[*clbit] { p10 } else { p01 };
                    let mut flipped_bits = bits.clone();
                    flipped_bits[*clbit] = !bits[*clbit];
                    let mut flipped = rho.clone();
                    kernel::scale(&mut flipped, p);
                    let mut kept = rho;
                    kernel::scale(&mut kept, 1.0 - p);
                    accumulate(&mut out, bits, kept);
                    accumulate(&mut out, flipped_bits, flipped);
                }
                out
            }
            _ => branches
                .into_iter()
                .map(|(bits, mut rho)| {
                    self.quantum_event(&mut rho, ev, n);
                    (bits, rho)
                })
                .collect(),
        }
    }

    fn quantum_event(&self, rho: &mut Vec<C>, ev: &NoiseEvent, n: usize) {
        match ev.kind {
            NoiseKind::PauliSample { p } => {
                let k = ev.qubits.len() as u32;
                let count = 4usize.pow(k);
                let mut acc = rho.clone();
                kernel::scale(&mut acc, 1.0 - p);
                let w = p / (count - 1) as f64;
                for code in 1..count {
                    let mut term = rho.clone();
                    let mut c = code;
                    for &q in &ev.qubits {
                        let kind = match c % 4 {
                            1 => Some(GateKind::X),
                            2 => Some(GateKind::Y),
                            3 => Some(GateKind::Z),
                            _ => None,
                        };
                        if let Some(kind) = kind {
                            self.gate(&mut term, &Gate::single(kind, q));
                        }
                        c /= 4;
                    }
                    for (a, t) in acc.iter_mut().zip(&term) {
                        *a += t * w;
                    }
                }
                *rho = acc;
            }
            NoiseKind::AmplitudeDamp { gamma } => {
                let q = ev.qubits[0];
                let (rb, cb) = (1usize << (q + n), 1usize << q);
                let keep = (1.0 - gamma).sqrt();
                for idx in 0..rho.len() {
                    let (r1, c1) = (idx & rb != 0, idx & cb != 0);
                    if r1 && c1 {
                        let v = rho[idx];
                        rho[idx ^ rb ^ cb] += v * gamma;
                        rho[idx] = v * (1.0 - gamma);
                    } else if r1 || c1 {
                        rho[idx] *= keep;
                    }
                }
            }
            NoiseKind::Dephase { p } => {
                let q = ev.qubits[0];
                let (rb, cb) = (1usize << (q + n), 1usize << q);
                for (idx, v) in rho.iter_mut().enumerate() {
                    if (idx & rb != 0) != (idx & cb != 0) {
                        *v *= 1.0 - 2.0 * p;
                    }
                }
            }
            NoiseKind::CoherentZ { angle } => {
                let q = ev.qubits[0];
                let m = rz_matrix(angle);
                kernel::apply_diag(rho, q + n, m[0][0], m[1][1]);
                kernel::apply_diag(rho, q, m[0][0].conj(), m[1][1].conj());
            }
            NoiseKind::ReadoutFlip { .. } => {}
        }
    }
}

fn accumulate(out: &mut Branches, bits: Vec<bool>, rho: Vec<C>) {
    match out.get_mut(&bits) {
        Some(acc) => {
            for (a, v) in acc.iter_mut().zip(rho) {
                *a += v;
            }
        }
        None => {
            out.insert(bits, rho);
        }
    }
}

/// Projects qubit `q` of a vectorized `ρ` onto `outcome` on both sides.
fn project(rho: &mut [C], q: usize, n: usize, outcome: bool) {
    kernel::project(rho, q + n, outcome);
    kernel::project(rho, q, outcome);
}

/// Evolves the full density matrix of `circuit` from `|0…0⟩`, applying
/// each noise event as its exact channel.
pub fn dm_evolve(
    circuit: &DynamicCircuit,
    schedule: &Schedule,
    noise: Option<&NoiseModel>,
) -> Result<DensityResult> {
    let n = circuit.num_qubits();
    if n > MAX_DENSITY_QUBITS {
        return Err(Error::TooLarge {
            what: "dm_evolve",
            max: MAX_DENSITY_QUBITS,
            got: n,
        });
    }
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

    let mut last_use = vec![None; circuit.num_clbits()];
    for (i, ins) in circuit.instructions().iter().enumerate() {
        if let Instruction::Conditional { condition, .. } = ins {
            for &c in condition {
                last_use[c] = Some(i);
            }
        }
    }
    for &c in circuit.readout_clbits() {
        last_use[c] = Some(usize::MAX);
    }
    let ev = Evolver {
        circuit,
        n,
        last_use,
    };

    let mut init = vec![ZERO; 1usize << (2 * n)];
    init[0] = C::new(1.0, 0.0);
    let mut branches: Branches = HashMap::new();
    branches.insert(vec![false; circuit.num_clbits()], init);

    for (i, ins) in ev.circuit.instructions().iter().enumerate() {
        for e in &before[i] {
            branches = ev.event(branches, e, ins);
        }
        match ins {
            Instruction::Gate(g) => {
                for rho in branches.values_mut() {
                    ev.gate(rho, g);
                }
            }
            Instruction::Conditional { gate, condition } => {
                for (bits, rho) in branches.iter_mut() {
                    if condition.iter().filter(|&&c| bits[c]).count() % 2 == 1 {
                        ev.gate(rho, gate);
                    }
                }
            }
            Instruction::Measure { qubit, clbit } => {
                let mut out: Branches = HashMap::new();
                for (bits, rho) in branches {
                    for outcome in [false, true] {
                        let mut r = rho.clone();
                        project(&mut r, *qubit, n, outcome);
                        if kernel::norm_sqr(&r) == 0.0 {
                            continue;
                        }
                        let mut b = bits.clone();
                        b[*clbit] = outcome;
                        accumulate(&mut out, b, r);
                    }
                }
                branches = out;
            }
            Instruction::Reset { qubit } => {
                let (rb, cb) = (1usize << (qubit + n), 1usize << qubit);
                for rho in branches.values_mut() {
                    for idx in 0..rho.len() {
                        let (r1, c1) = (idx & rb != 0, idx & cb != 0);
                        if r1 && c1 {
                            let v = rho[idx];
                            rho[idx ^ rb ^ cb] += v;
                            rho[idx] = ZERO;
                        } else if r1 || c1 {
                            rho[idx] = ZERO;
                        }
                    }
                }
            }
            Instruction::Barrier { .. } | Instruction::Delay { .. } => {}
        }
        for e in &after[i] {
            branches = ev.event(branches, e, ins);
        }
        if !matches!(ins, Instruction::Gate(_)) {
            let mut out: Branches = HashMap::new();
            for (mut bits, rho) in branches {
                for (c, b) in bits.iter_mut().enumerate() {
                    if !ev.live(c, i) {
                        *b = false;
                    }
                }
                accumulate(&mut out, bits, rho);
            }
            branches = out;
        }
    }

    let mut rho = vec![ZERO; 1usize << (2 * n)];
    let mut readout = BTreeMap::new();
    for (bits, r) in branches {
        let p: f64 = (0..1usize << n).map(|k| r[(k << n) | k].re).sum();
        let key: String = circuit
            .readout_clbits()
            .iter()
            .map(|&c| if bits[c] { '1' } else { '0' })
            .collect();
        *readout.entry(key).or_insert(0.0) += p;
        for (a, v) in rho.iter_mut().zip(r) {
            *a += v;
        }
    }
    Ok(DensityResult {
        num_qubits: n,
        rho,
        readout,
    })
}

/// `|ψ⟩⟨ψ|` as a dense matrix.
pub fn projector(state: &StateVector) -> DMatrix<C> {
    let a = state.amplitudes();
    DMatrix::from_fn(a.len(), a.len(), |r, c| a[r] * a[c].conj())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{schedule, DurationTable};

    #[test]
    fn noiseless_matches_statevector() {
        let mut c = DynamicCircuit::all_data(3);
        c.gate(Gate::single(GateKind::H, 0));
        c.gate(Gate::cnot(0, 1));
        c.gate(Gate::ry(0.4, 2));
        c.gate(Gate::single(GateKind::Sdg, 2));
        let s = schedule(&c, &DurationTable::default()).unwrap();
        let dm = dm_evolve(&c, &s, None).unwrap();
        let psi = crate::sim::branch::gate_only_state(&c).unwrap();
        let diff = dm.matrix() - projector(&psi);
        assert!(diff.iter().all(|x| x.norm() < 1e-12));
    }

    #[test]
    fn idle_dephasing_shrinks_coherence() {
        // q0 sits in |+⟩ while q1 is measured, then is rotated back
        let mut c = DynamicCircuit::new(2, vec![0]);
        c.gate(Gate::single(GateKind::H, 0));
        c.measure(1);
        c.barrier_all();
        c.gate(Gate::single(GateKind::H, 0));
        let s = schedule(&c, &DurationTable::default()).unwrap();
        let t = s.idle_windows(0)[0].len();
        assert!(t > 1000.0);
        let model = NoiseModel {
            t1_ns: None,
            t2_ns: Some(10_000.0),
            ..NoiseModel::ideal()
        };
        let dm = dm_evolve(&c, &s, Some(&model)).unwrap();
        let want = (-t * model.pure_dephasing_rate()).exp();
        let z = 1.0 - 2.0 * dm.prob_one(0);
        assert!((z - want).abs() < 1e-12, "{z} vs {want}");
        assert!((dm.trace() - 1.0).abs() < 1e-12);
    }
}
