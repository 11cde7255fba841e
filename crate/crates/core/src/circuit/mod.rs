//! Dynamic-circuit instruction set.
//!
//! A [`DynamicCircuit`] is an ordered list of [`Instruction`]s over a fixed
//! register of qubits and classical bits. Besides unitary gates it carries
//! mid-circuit measurements, resets and gates conditioned on the parity of
//! previously recorded classical bits. Qubits are split into *data* qubits
//! (the model spins, in spin order) and *ancilla* qubits.

mod json;
mod schedule;

pub use schedule::{schedule, DurationTable, IdleCause, IdleWindow, Schedule, TimedInstruction};

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    X,
    Y,
    Z,
    H,
    S,
    Sdg,
    Rx,
    Ry,
    Rz,
    Cnot,
    Cz,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::X => "X",
            GateKind::Y => "Y",
            GateKind::Z => "Z",
            GateKind::H => "H",
            GateKind::S => "S",
            GateKind::Sdg => "SDG",
            GateKind::Rx => "RX",
            GateKind::Ry => "RY",
            GateKind::Rz => "RZ",
            GateKind::Cnot => "CNOT",
            GateKind::Cz => "CZ",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "X" => GateKind::X,
            "Y" => GateKind::Y,
            "Z" => GateKind::Z,
            "H" => GateKind::H,
            "S" => GateKind::S,
            "SDG" => GateKind::Sdg,
            "RX" => GateKind::Rx,
            "RY" => GateKind::Ry,
            "RZ" => GateKind::Rz,
            "CNOT" => GateKind::Cnot,
            "CZ" => GateKind::Cz,
            _ => return None,
        })
    }

    pub fn arity(self) -> usize {
        match self {
            GateKind::Cnot | GateKind::Cz => 2,
            _ => 1,
        }
    }

    pub fn num_params(self) -> usize {
        match self {
            GateKind::Rx | GateKind::Ry | GateKind::Rz => 1,
            _ => 0,
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A unitary gate application. Angles are in radians; `RZ(θ) = exp(-iθZ/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub params: Vec<f64>,
    pub qubits: Vec<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, params: Vec<f64>, qubits: Vec<usize>) -> Self {
        Self {
            kind,
            params,
            qubits,
        }
    }

    pub fn single(kind: GateKind, qubit: usize) -> Self {
        Self::new(kind, Vec::new(), vec![qubit])
    }

    pub fn rx(angle: f64, qubit: usize) -> Self {
        Self::new(GateKind::Rx, vec![angle], vec![qubit])
    }

    pub fn ry(angle: f64, qubit: usize) -> Self {
        Self::new(GateKind::Ry, vec![angle], vec![qubit])
    }

    pub fn rz(angle: f64, qubit: usize) -> Self {
        Self::new(GateKind::Rz, vec![angle], vec![qubit])
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self::new(GateKind::Cnot, Vec::new(), vec![control, target])
    }

    pub fn cz(a: usize, b: usize) -> Self {
        Self::new(GateKind::Cz, Vec::new(), vec![a, b])
    }

    pub fn angle(&self) -> Option<f64> {
        self.params.first().copied()
    }

    pub fn adjoint(&self) -> Gate {
        use GateKind::*;
        match self.kind {
            S => Gate::new(Sdg, Vec::new(), self.qubits.clone()),
            Sdg => Gate::new(S, Vec::new(), self.qubits.clone()),
            Rx | Ry | Rz => Gate::new(
                self.kind,
                self.params.iter().map(|a| -a).collect(),
                self.qubits.clone(),
            ),
            X | Y | Z | H | Cnot | Cz => self.clone(),
        }
    }

    fn check(&self, num_qubits: usize) -> std::result::Result<(), String> {
        if self.params.len() != self.kind.num_params() {
            return Err(format!(
                "{} takes {} parameter(s), got {}",
                self.kind,
                self.kind.num_params(),
                self.params.len()
            ));
        }
        if self.params.iter().any(|p| !p.is_finite()) {
            return Err(format!("{} has a non-finite angle", self.kind));
        }
        if self.qubits.len() != self.kind.arity() {
            return Err(format!(
                "{} acts on {} qubit(s), got {}",
                self.kind,
                self.kind.arity(),
                self.qubits.len()
            ));
        }
        check_qubits(&self.qubits, num_qubits)
    }
}

fn check_qubits(qubits: &[usize], num_qubits: usize) -> std::result::Result<(), String> {
    let mut seen = HashSet::new();
    for &q in qubits {
        if q >= num_qubits {
            return Err(format!(
                "qubit {q} out of range (num_qubits = {num_qubits})"
            ));
        }
        if !seen.insert(q) {
            return Err(format!("duplicate qubit {q}"));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Instruction {
    Gate(Gate),
    Measure {
        qubit: usize,
        clbit: usize,
    },
    Reset {
        qubit: usize,
    },
    /// Applies `gate` iff the XOR of the listed classical bits is 1.
    Conditional {
        gate: Gate,
        condition: Vec<usize>,
    },
    Barrier {
        qubits: Vec<usize>,
    },
    /// Explicit idle time. Only emitted by dynamical-decoupling insertion to
    /// pin pulse positions inside an idle window.
    Delay {
        qubit: usize,
        duration_ns: f64,
    },
}

impl Instruction {
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Instruction::Gate(g) | Instruction::Conditional { gate: g, .. } => g.qubits.clone(),
            Instruction::Measure { qubit, .. }
            | Instruction::Reset { qubit }
            | Instruction::Delay { qubit, .. } => vec![*qubit],
            Instruction::Barrier { qubits } => qubits.clone(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Instruction::Gate(_) => "gate",
            Instruction::Measure { .. } => "measure",
            Instruction::Reset { .. } => "reset",
            Instruction::Conditional { .. } => "conditional",
            Instruction::Barrier { .. } => "barrier",
            Instruction::Delay { .. } => "delay",
        }
    }

    pub fn is_measure(&self) -> bool {
        matches!(self, Instruction::Measure { .. })
    }

    /// The gate carried by a `Gate` or `Conditional` instruction.
    pub fn gate(&self) -> Option<&Gate> {
        match self {
            Instruction::Gate(g) | Instruction::Conditional { gate: g, .. } => Some(g),
            _ => None,
        }
    }
}

/// An ordered instruction list over qubits and classical bits.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicCircuit {
    num_qubits: usize,
    num_clbits: usize,
    data_qubits: Vec<usize>,
    instructions: Vec<Instruction>,
    /// Classical bits holding the final data readout, in data-qubit order.
    readout: Vec<usize>,
}

impl DynamicCircuit {
    /// An empty circuit. `data_qubits` lists the model spins in spin order;
    /// every other qubit is an ancilla.
    pub fn new(num_qubits: usize, data_qubits: Vec<usize>) -> Self {
        Self {
            num_qubits,
            num_clbits: 0,
            data_qubits,
            instructions: Vec::new(),
            readout: Vec::new(),
        }
    }

    /// A circuit whose every qubit is a data qubit.
    pub fn all_data(num_qubits: usize) -> Self {
        Self::new(num_qubits, (0..num_qubits).collect())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_clbits(&self) -> usize {
        self.num_clbits
    }

    pub fn data_qubits(&self) -> &[usize] {
        &self.data_qubits
    }

    pub fn ancilla_qubits(&self) -> Vec<usize> {
        (0..self.num_qubits)
            .filter(|q| !self.data_qubits.contains(q))
            .collect()
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn readout_clbits(&self) -> &[usize] {
        &self.readout
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    pub fn alloc_clbit(&mut self) -> usize {
        self.num_clbits += 1;
        self.num_clbits - 1
    }

    pub fn push(&mut self, instruction: Instruction) -> &mut Self {
        self.instructions.push(instruction);
        self
    }

    pub fn gate(&mut self, gate: Gate) -> &mut Self {
        self.push(Instruction::Gate(gate))
    }

    /// Measures `qubit` into a freshly allocated classical bit.
    pub fn measure(&mut self, qubit: usize) -> usize {
        let clbit = self.alloc_clbit();
        self.push(Instruction::Measure { qubit, clbit });
        clbit
    }

    pub fn reset(&mut self, qubit: usize) -> &mut Self {
        self.push(Instruction::Reset { qubit })
    }

    pub fn conditional(&mut self, gate: Gate, condition: Vec<usize>) -> &mut Self {
        self.push(Instruction::Conditional { gate, condition })
    }

    pub fn barrier(&mut self, qubits: Vec<usize>) -> &mut Self {
        self.push(Instruction::Barrier { qubits })
    }

    pub fn barrier_all(&mut self) -> &mut Self {
        let all = (0..self.num_qubits).collect();
        self.barrier(all)
    }

    pub fn extend<I: IntoIterator<Item = Instruction>>(&mut self, instructions: I) -> &mut Self {
        self.instructions.extend(instructions);
        self
    }

    /// Appends every instruction of `other`, shifting its classical bits past
    /// the ones already allocated here. Both circuits must span the same
    /// qubit register; `other`'s readout register is not carried over.
    pub fn append(&mut self, other: &DynamicCircuit) -> Result<&mut Self> {
        if other.num_qubits != self.num_qubits {
            return Err(Error::InvalidCircuit(format!(
                "cannot append a {}-qubit circuit to a {}-qubit circuit",
                other.num_qubits, self.num_qubits
            )));
        }
        let offset = self.num_clbits;
        self.num_clbits += other.num_clbits;
        for ins in &other.instructions {
            let shifted = match ins {
                Instruction::Measure { qubit, clbit } => Instruction::Measure {
                    qubit: *qubit,
                    clbit: clbit + offset,
                },
                Instruction::Conditional { gate, condition } => Instruction::Conditional {
                    gate: gate.clone(),
                    condition: condition.iter().map(|c| c + offset).collect(),
                },
                other => other.clone(),
            };
            self.instructions.push(shifted);
        }
        Ok(self)
    }

    pub(crate) fn insert(&mut self, index: usize, instruction: Instruction) {
        self.instructions.insert(index, instruction);
    }

    /// Appends a synchronized final measurement of every data qubit; the
    /// new classical bits become the readout register.
    pub fn measure_data(&mut self) -> &mut Self {
        let data = self.data_qubits.clone();
        let bits = data.iter().map(|&q| self.measure(q)).collect();
        self.readout = bits;
        self
    }

    pub(crate) fn set_readout(&mut self, bits: Vec<usize>) {
        self.readout = bits;
    }

    pub(crate) fn set_num_clbits(&mut self, n: usize) {
        self.num_clbits = n;
    }

    /// Checks every structural invariant of the circuit.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_qubits;
        if let Err(e) = check_qubits(&self.data_qubits, n) {
            return Err(Error::InvalidCircuit(format!("data qubits: {e}")));
        }
        let mut written = vec![false; self.num_clbits];
        for (index, ins) in self.instructions.iter().enumerate() {
            let bad = |reason: String| Error::InvalidInstruction { index, reason };
            match ins {
                Instruction::Gate(g) => g.check(n).map_err(bad)?,
                Instruction::Measure { qubit, clbit } => {
                    check_qubits(&[*qubit], n).map_err(bad)?;
                    if *clbit >= self.num_clbits {
                        return Err(bad(format!("classical bit {clbit} out of range")));
                    }
                    written[*clbit] = true;
                }
                Instruction::Reset { qubit } => check_qubits(&[*qubit], n).map_err(bad)?,
                Instruction::Conditional { gate, condition } => {
                    gate.check(n).map_err(bad)?;
                    if condition.is_empty() {
                        return Err(bad("condition references no classical bit".into()));
                    }
                    for &c in condition {
                        if c >= self.num_clbits {
                            return Err(bad(format!("classical bit {c} out of range")));
                        }
                        if !written[c] {
                            return Err(bad(format!(
                                "classical bit {c} is read before any measurement writes it"
                            )));
                        }
                    }
                }
                Instruction::Barrier { qubits } => check_qubits(qubits, n).map_err(bad)?,
                Instruction::Delay { qubit, duration_ns } => {
                    check_qubits(&[*qubit], n).map_err(bad)?;
                    if !(duration_ns.is_finite() && *duration_ns >= 0.0) {
                        return Err(bad(format!("invalid delay {duration_ns}")));
                    }
                }
            }
        }
        if !self.readout.is_empty() && self.readout.len() != self.data_qubits.len() {
            return Err(Error::InvalidCircuit(
                "readout register must cover every data qubit".into(),
            ));
        }
        if let Some(&c) = self.readout.iter().find(|&&c| c >= self.num_clbits) {
            return Err(Error::InvalidCircuit(format!(
                "readout bit {c} out of range"
            )));
        }
        Ok(())
    }

    pub fn is_gate_only(&self) -> bool {
        self.instructions
            .iter()
            .all(|i| matches!(i, Instruction::Gate(_) | Instruction::Barrier { .. }))
    }

    pub fn count_measurements(&self) -> usize {
        self.instructions.iter().filter(|i| i.is_measure()).count()
    }

    /// Depth of the circuit counting only two-qubit gates (conditional or
    /// not); every other instruction is transparent.
    pub fn two_qubit_depth(&self) -> usize {
        let mut level = vec![0usize; self.num_qubits];
        let mut depth = 0;
        for ins in &self.instructions {
            if let Some(g) = ins.gate() {
                if g.qubits.len() == 2 {
                    let l = g.qubits.iter().map(|&q| level[q]).max().unwrap_or(0) + 1;
                    for &q in &g.qubits {
                        level[q] = l;
                    }
                    depth = depth.max(l);
                }
            }
        }
        depth
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&json::CircuitDoc::from(self)).expect("circuit serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: json::CircuitDoc =
            serde_json::from_str(s).map_err(|e| Error::InvalidCircuit(e.to_string()))?;
        let circuit = doc.into_circuit()?;
        circuit.validate()?;
        Ok(circuit)
    }
}

/// Adjoint of a gate-only segment: reversed order, each gate replaced by its
/// adjoint. Non-unitary instructions are rejected; dynamic gadgets need
/// their hand-built inverses from [`crate::builders`].
pub fn invert_gate_segment(segment: &[Instruction]) -> Result<Vec<Instruction>> {
    let mut out = Vec::with_capacity(segment.len());
    for (index, ins) in segment.iter().enumerate().rev() {
        match ins {
            Instruction::Gate(g) => out.push(Instruction::Gate(g.adjoint())),
            Instruction::Barrier { .. } => out.push(ins.clone()),
            other => {
                return Err(Error::NotInvertible {
                    index,
                    kind: other.kind_name(),
                })
            }
        }
    }
    Ok(out)
}
