//! Invertible building blocks and their emission into circuits.

use crate::circuit::{invert_gate_segment, DynamicCircuit, Gate, GateKind, Instruction};
use crate::error::{Error, Result};
use crate::hamiltonian::Pauli;

/// A two-qubit interaction site: data qubits and, for the dynamic gadget,
/// the ancilla mediating it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Bond {
    pub d1: usize,
    pub d2: usize,
    pub ancilla: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Block {
    /// Gate-only segment, inverted gate by gate.
    Gates(Vec<Gate>),
    /// CNOT ladder over `data`; dynamic when ancillas are given.
    Entangler {
        data: Vec<usize>,
        ancillas: Option<Vec<usize>>,
    },
    /// `exp(-i·θ/2·P⊗P)` on every bond, executed as one parallel layer.
    Interaction {
        basis: Pauli,
        theta: f64,
        bonds: Vec<Bond>,
    },
}

impl Block {
    pub fn emit(&self, c: &mut DynamicCircuit, inverse: bool) -> Result<()> {
        match self {
            Block::Gates(gates) => {
                let segment: Vec<Instruction> =
                    gates.iter().cloned().map(Instruction::Gate).collect();
                if inverse {
                    c.extend(invert_gate_segment(&segment)?);
                } else {
                    c.extend(segment);
                }
            }
            Block::Entangler { data, ancillas } => match (ancillas, inverse) {
                (None, false) => {
                    c.extend(ladder(data).into_iter().map(Instruction::Gate));
                }
                (None, true) => {
                    c.extend(ladder(data).into_iter().rev().map(Instruction::Gate));
                }
                (Some(anc), false) => emit_dynamic_ladder(c, data, anc),
                (Some(anc), true) => emit_inverse_dynamic_ladder(c, data, anc),
            },
            Block::Interaction {
                basis,
                theta,
                bonds,
            } => {
                let theta = if inverse { -theta } else { *theta };
                emit_interaction_layer(c, *basis, theta, bonds)?;
            }
        }
        Ok(())
    }
}

/// Static CNOT ladder `CNOT(d_0→d_1), CNOT(d_1→d_2), …` applied in sequence,
/// mapping `|x⟩` to the prefix parities `|x_0, x_0⊕x_1, x_0⊕x_1⊕x_2, …⟩`.
pub(crate) fn ladder(data: &[usize]) -> Vec<Gate> {
    (0..data.len().saturating_sub(1))
        .map(|k| Gate::cnot(data[k], data[k + 1]))
        .collect()
}

/// Measures every ancilla in one synchronized run and returns the bits.
fn measure_run(c: &mut DynamicCircuit, ancillas: &[usize]) -> Vec<usize> {
    c.barrier_all();
    ancillas.iter().map(|&a| c.measure(a)).collect()
}

fn close_layer(c: &mut DynamicCircuit, ancillas: &[usize]) {
    for &a in ancillas {
        c.reset(a);
    }
}

/// Constant-depth ladder, built as `H^{⊗n} · R · H^{⊗n}` where `R` maps
/// `|y⟩ ↦ |y_0⊕y_1, …, y_{n-2}⊕y_{n-1}, y_{n-1}⟩` (the Hadamard-conjugate of
/// the ladder). `R` copies `d_{k+1}` onto `a_k`, adds `a_k` into `d_k`, and
/// erases the ancillas with X-basis measurements. Outcome `c_k` leaves a
/// phase `(-1)^{c_k·y_{k+1}}` with `y_{k+1} = z_{k+1}⊕…⊕z_{n-1}` in terms of
/// the output `z`, so `d_j` (j ≥ 1) takes a Z conditioned on the parity of
/// `c_k` for `k < j`.
pub(crate) fn emit_dynamic_ladder(c: &mut DynamicCircuit, data: &[usize], anc: &[usize]) {
    let m = anc.len();
    for &d in data {
        c.gate(Gate::single(GateKind::H, d));
    }
    for k in 0..m {
        c.gate(Gate::cnot(data[k + 1], anc[k]));
    }
    for k in 0..m {
        c.gate(Gate::cnot(anc[k], data[k]));
    }
    for &a in anc {
        c.gate(Gate::single(GateKind::H, a));
    }
    let bits = measure_run(c, anc);
    for j in 1..=m {
        c.conditional(Gate::single(GateKind::Z, data[j]), bits[..j].to_vec());
    }
    close_layer(c, anc);
    for &d in data {
        c.gate(Gate::single(GateKind::H, d));
    }
    c.barrier_all();
}

/// Adjoint ladder `|x⟩ ↦ |x_0, x_0⊕x_1, x_1⊕x_2, …⟩`: copy `d_k` onto `a_k`,
/// add `a_k` into `d_{k+1}`, then erase the ancillas with X-basis
/// measurements. Outcome `c_k` leaves a phase `(-1)^{c_k·x_k}` where
/// `x_k = y_0⊕…⊕y_k` in terms of the output, so `d_j` takes a Z conditioned
/// on the parity of `c_k` for `k ≥ j`.
pub(crate) fn emit_inverse_dynamic_ladder(c: &mut DynamicCircuit, data: &[usize], anc: &[usize]) {
    let m = anc.len();
    for k in 0..m {
        c.gate(Gate::cnot(data[k], anc[k]));
    }
    for k in 0..m {
        c.gate(Gate::cnot(anc[k], data[k + 1]));
    }
    for &a in anc {
        c.gate(Gate::single(GateKind::H, a));
    }
    let bits = measure_run(c, anc);
    for j in 0..m {
        c.conditional(Gate::single(GateKind::Z, data[j]), bits[j..].to_vec());
    }
    close_layer(c, anc);
    c.barrier_all();
}

/// Gates rotating `basis` onto Z (applied before the interaction).
fn to_z(basis: Pauli, q: usize) -> Vec<Gate> {
    match basis {
        Pauli::X => vec![Gate::single(GateKind::H, q)],
        Pauli::Y => vec![Gate::single(GateKind::Sdg, q), Gate::single(GateKind::H, q)],
        Pauli::Z | Pauli::I => vec![],
    }
}

fn from_z(basis: Pauli, q: usize) -> Vec<Gate> {
    match basis {
        Pauli::X => vec![Gate::single(GateKind::H, q)],
        Pauli::Y => vec![Gate::single(GateKind::H, q), Gate::single(GateKind::S, q)],
        Pauli::Z | Pauli::I => vec![],
    }
}

pub(crate) fn check_bond(c: &DynamicCircuit, bond: &Bond) -> Result<()> {
    let Bond { d1, d2, ancilla } = *bond;
    let n = c.num_qubits();
    if d1 == d2 {
        return Err(Error::InvalidArgument(format!(
            "gadget data qubits must differ, both are {d1}"
        )));
    }
    let mut all = vec![d1, d2];
    if let Some(a) = ancilla {
        if a == d1 || a == d2 {
            return Err(Error::InvalidArgument(format!(
                "ancilla {a} collides with a data qubit"
            )));
        }
        all.push(a);
    }
    if let Some(&q) = all.iter().find(|&&q| q >= n) {
        return Err(Error::InvalidArgument(format!(
            "qubit {q} out of range for {n} qubits"
        )));
    }
    Ok(())
}

/// One parallel layer of `exp(-i·θ/2·P⊗P)` interactions. Dynamic bonds use
/// the ancilla gadget (parity onto the ancilla, RZ, X-basis measurement, Z
/// corrections on both data qubits, reset) with all measurements aligned;
/// static bonds use `CNOT·RZ·CNOT`.
pub(crate) fn emit_interaction_layer(
    c: &mut DynamicCircuit,
    basis: Pauli,
    theta: f64,
    bonds: &[Bond],
) -> Result<()> {
    if basis == Pauli::I {
        return Err(Error::InvalidArgument(
            "interaction basis must be X, Y or Z".into(),
        ));
    }
    for b in bonds {
        check_bond(c, b)?;
    }
    let (dynamic, stat): (Vec<Bond>, Vec<Bond>) = bonds.iter().partition(|b| b.ancilla.is_some());

    for b in &stat {
        for q in [b.d1, b.d2] {
            for g in to_z(basis, q) {
                c.gate(g);
            }
        }
        c.gate(Gate::cnot(b.d1, b.d2));
        c.gate(Gate::rz(theta, b.d2));
        c.gate(Gate::cnot(b.d1, b.d2));
        for q in [b.d1, b.d2] {
            for g in from_z(basis, q) {
                c.gate(g);
            }
        }
    }
    if dynamic.is_empty() {
        return Ok(());
    }

    let ancillas: Vec<usize> = dynamic.iter().map(|b| b.ancilla.unwrap()).collect();
    for b in &dynamic {
        let a = b.ancilla.unwrap();
        for q in [b.d1, b.d2] {
            for g in to_z(basis, q) {
                c.gate(g);
            }
        }
        c.gate(Gate::cnot(b.d1, a));
        c.gate(Gate::cnot(b.d2, a));
        c.gate(Gate::rz(theta, a));
        c.gate(Gate::single(GateKind::H, a));
    }
    let bits = measure_run(c, &ancillas);
    for (b, &bit) in dynamic.iter().zip(&bits) {
        c.conditional(Gate::single(GateKind::Z, b.d1), vec![bit]);
        c.conditional(Gate::single(GateKind::Z, b.d2), vec![bit]);
    }
    close_layer(c, &ancillas);
    for b in &dynamic {
        for q in [b.d1, b.d2] {
            for g in from_z(basis, q) {
                c.gate(g);
            }
        }
    }
    c.barrier_all();
    Ok(())
}
