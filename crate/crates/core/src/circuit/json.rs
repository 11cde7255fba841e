use serde::{Deserialize, Serialize};

use super::{DynamicCircuit, Gate, GateKind, Instruction};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
pub(super) struct CircuitDoc {
    num_qubits: usize,
    num_clbits: usize,
    data_qubits: Vec<usize>,
    instructions: Vec<InstructionDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    readout: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct InstructionDoc {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    params: Option<Vec<f64>>,
    qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    clbit: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    condition_bits: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    duration: Option<f64>,
}

impl InstructionDoc {
    fn bare(kind: &str, qubits: Vec<usize>) -> Self {
        Self {
            kind: kind.to_string(),
            name: None,
            params: None,
            qubits,
            clbit: None,
            condition_bits: None,
            duration: None,
        }
    }

    fn with_gate(kind: &str, gate: &Gate) -> Self {
        let mut doc = Self::bare(kind, gate.qubits.clone());
        doc.name = Some(gate.kind.name().to_string());
        if !gate.params.is_empty() {
            doc.params = Some(gate.params.clone());
        }
        doc
    }

    fn gate(&self, index: usize) -> Result<Gate> {
        let name = self
            .name
            .as_deref()
            .ok_or_else(|| Error::InvalidInstruction {
                index,
                reason: "gate without a name".into(),
            })?;
        let kind = GateKind::from_name(name).ok_or_else(|| Error::InvalidInstruction {
            index,
            reason: format!("unknown gate {name}"),
        })?;
        Ok(Gate::new(
            kind,
            self.params.clone().unwrap_or_default(),
            self.qubits.clone(),
        ))
    }

    fn single_qubit(&self, index: usize) -> Result<usize> {
        match self.qubits.as_slice() {
            [q] => Ok(*q),
            _ => Err(Error::InvalidInstruction {
                index,
                reason: format!("{} takes exactly one qubit", self.kind),
            }),
        }
    }

    fn into_instruction(self, index: usize) -> Result<Instruction> {
        let missing = |field: &str| Error::InvalidInstruction {
            index,
            reason: format!("{} is missing `{field}`", self.kind),
        };
        Ok(match self.kind.as_str() {
            "gate" => Instruction::Gate(self.gate(index)?),
            "measure" => Instruction::Measure {
                qubit: self.single_qubit(index)?,
                clbit: self.clbit.ok_or_else(|| missing("clbit"))?,
            },
            "reset" => Instruction::Reset {
                qubit: self.single_qubit(index)?,
            },
            "conditional" => Instruction::Conditional {
                gate: self.gate(index)?,
                condition: self
                    .condition_bits
                    .clone()
                    .ok_or_else(|| missing("condition_bits"))?,
            },
            "barrier" => Instruction::Barrier {
                qubits: self.qubits,
            },
            "delay" => Instruction::Delay {
                qubit: self.single_qubit(index)?,
                duration_ns: self.duration.ok_or_else(|| missing("duration"))?,
            },
            other => {
                return Err(Error::InvalidInstruction {
                    index,
                    reason: format!("unknown instruction kind {other}"),
                })
            }
        })
    }
}

impl From<&Instruction> for InstructionDoc {
    fn from(ins: &Instruction) -> Self {
        match ins {
            Instruction::Gate(g) => InstructionDoc::with_gate("gate", g),
            Instruction::Measure { qubit, clbit } => {
                let mut d = InstructionDoc::bare("measure", vec![*qubit]);
                d.clbit = Some(*clbit);
                d
            }
            Instruction::Reset { qubit } => InstructionDoc::bare("reset", vec![*qubit]),
            Instruction::Conditional { gate, condition } => {
                let mut d = InstructionDoc::with_gate("conditional", gate);
                d.condition_bits = Some(condition.clone());
                d
            }
            Instruction::Barrier { qubits } => InstructionDoc::bare("barrier", qubits.clone()),
            Instruction::Delay { qubit, duration_ns } => {
                let mut d = InstructionDoc::bare("delay", vec![*qubit]);
                d.duration = Some(*duration_ns);
                d
            }
        }
    }
}

impl From<&DynamicCircuit> for CircuitDoc {
    fn from(c: &DynamicCircuit) -> Self {
        Self {
            num_qubits: c.num_qubits,
            num_clbits: c.num_clbits,
            data_qubits: c.data_qubits.clone(),
            instructions: c.instructions.iter().map(InstructionDoc::from).collect(),
            readout: c.readout.clone(),
        }
    }
}

impl CircuitDoc {
    pub(super) fn into_circuit(self) -> Result<DynamicCircuit> {
        let mut c = DynamicCircuit::new(self.num_qubits, self.data_qubits);
        c.set_num_clbits(self.num_clbits);
        for (index, doc) in self.instructions.into_iter().enumerate() {
            c.push(doc.into_instruction(index)?);
        }
        c.set_readout(self.readout);
        Ok(c)
    }
}
