//! Circuit builders: hardware-efficient ansatz, dynamic entanglers and
//! interaction gadgets, brickwork Trotter circuits, and global folding.

mod blocks;

use serde::{Deserialize, Serialize};

use self::blocks::{Block, Bond};
use crate::circuit::{DynamicCircuit, Gate, GateKind};
use crate::error::{Error, Result};
use crate::hamiltonian::{Model, Pauli};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntanglerKind {
    StaticLadder,
    Dynamic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GadgetKind {
    Static,
    Dynamic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub n: usize,
    pub layers: usize,
    pub params: Vec<f64>,
    pub entangler: EntanglerKind,
}

impl AnsatzSpec {
    /// Rotation count of the RY–RZ layout: `2·(layers+1)·n`.
    pub fn num_params(n: usize, layers: usize) -> usize {
        2 * (layers + 1) * n
    }

    pub fn zeros(n: usize, layers: usize, entangler: EntanglerKind) -> Self {
        Self {
            n,
            layers,
            params: vec![0.0; Self::num_params(n, layers)],
            entangler,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidArgument(format!(
                "ansatz needs at least 2 qubits, got {}",
                self.n
            )));
        }
        let want = Self::num_params(self.n, self.layers);
        if self.params.len() != want {
            return Err(Error::InvalidArgument(format!(
                "expected {want} parameters for n = {}, layers = {}, got {}",
                self.n,
                self.layers,
                self.params.len()
            )));
        }
        if self.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("non-finite ansatz parameter".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrotterSpec {
    pub model: Model,
    pub n: usize,
    pub h: f64,
    pub t: f64,
    pub steps: usize,
    pub gadget: GadgetKind,
}

impl TrotterSpec {
    pub fn dt(&self) -> f64 {
        self.t / self.steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidArgument(format!(
                "trotter circuit needs at least 2 spins, got {}",
                self.n
            )));
        }
        if self.steps == 0 {
            return Err(Error::InvalidArgument(
                "trotter step count must be ≥ 1".into(),
            ));
        }
        if !self.t.is_finite() || !self.h.is_finite() {
            return Err(Error::InvalidArgument("non-finite time or field".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSpec {
    pub k: usize,
}

impl FoldSpec {
    pub const MAX_K: usize = 2;

    pub fn new(k: usize) -> Result<Self> {
        if k > Self::MAX_K {
            return Err(Error::InvalidArgument(format!(
                "fold count {k} unsupported (0..={})",
                Self::MAX_K
            )));
        }
        Ok(Self { k })
    }

    /// Noise scale factor `1 + 2k`.
    pub fn lambda(&self) -> f64 {
        (1 + 2 * self.k) as f64
    }
}

/// What [`fold_circuit`] folds.
#[derive(Debug, Clone, PartialEq)]
pub enum BuildTarget {
    Hea(AnsatzSpec),
    Trotter(TrotterSpec),
}

/// A circuit described as a sequence of blocks with known inverses.
#[derive(Debug, Clone)]
struct Program {
    num_qubits: usize,
    data: Vec<usize>,
    blocks: Vec<Block>,
}

impl Program {
    fn emit(&self, c: &mut DynamicCircuit, inverse: bool) -> Result<()> {
        if inverse {
            for b in self.blocks.iter().rev() {
                b.emit(c, true)?;
            }
        } else {
            for b in &self.blocks {
                b.emit(c, false)?;
            }
        }
        Ok(())
    }

    /// `C · (C̄ · C)^k`, with a full barrier between segments.
    fn folded(&self, k: usize) -> Result<DynamicCircuit> {
        let mut c = DynamicCircuit::new(self.num_qubits, self.data.clone());
        self.emit(&mut c, false)?;
        for _ in 0..k {
            c.barrier_all();
            self.emit(&mut c, true)?;
            c.barrier_all();
            self.emit(&mut c, false)?;
        }
        Ok(c)
    }
}

/// Interleaved layout `d0 a0 d1 a1 … d_{n-1}`.
fn interleaved(n: usize) -> (Vec<usize>, Vec<usize>) {
    (
        (0..n).map(|i| 2 * i).collect(),
        (0..n - 1).map(|i| 2 * i + 1).collect(),
    )
}

fn check_chain(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "an entangler needs at least 2 data qubits, got {n}"
        )));
    }
    Ok(())
}

/// CNOT ladder on `n` qubits (all data).
pub fn static_ladder(n: usize) -> Result<DynamicCircuit> {
    check_chain(n)?;
    let mut c = DynamicCircuit::all_data(n);
    for g in blocks::ladder(&(0..n).collect::<Vec<_>>()) {
        c.gate(g);
    }
    Ok(c)
}

/// The measurement-based ladder on `2n − 1` qubits, data on even indices
/// and one ancilla between each neighbouring pair.
pub fn dynamic_entangler(n: usize) -> Result<DynamicCircuit> {
    check_chain(n)?;
    let (data, anc) = interleaved(n);
    let mut c = DynamicCircuit::new(2 * n - 1, data.clone());
    blocks::emit_dynamic_ladder(&mut c, &data, &anc);
    Ok(c)
}

/// Dynamic realization of the adjoint ladder, same layout as
/// [`dynamic_entangler`].
pub fn inverse_entangler(n: usize) -> Result<DynamicCircuit> {
    check_chain(n)?;
    let (data, anc) = interleaved(n);
    let mut c = DynamicCircuit::new(2 * n - 1, data.clone());
    blocks::emit_inverse_dynamic_ladder(&mut c, &data, &anc);
    Ok(c)
}

/// Appends the ancilla gadget for `exp(-i·θ/2·P⊗P)` on `(d1, d2)`. The
/// ancilla must be in `|0⟩`; the gadget resets it afterwards.
pub fn append_rzz_gadget(
    c: &mut DynamicCircuit,
    theta: f64,
    d1: usize,
    d2: usize,
    ancilla: usize,
    basis: Pauli,
) -> Result<()> {
    let bond = Bond {
        d1,
        d2,
        ancilla: Some(ancilla),
    };
    blocks::emit_interaction_layer(c, basis, theta, &[bond])
}

/// Standalone gadget on three qubits `d1 = 0`, ancilla `1`, `d2 = 2`.
pub fn rzz_gadget(theta: f64, basis: Pauli) -> Result<DynamicCircuit> {
    let mut c = DynamicCircuit::new(3, vec![0, 2]);
    append_rzz_gadget(&mut c, theta, 0, 2, 1, basis)?;
    Ok(c)
}

fn hea_program(spec: &AnsatzSpec) -> Result<Program> {
    spec.validate()?;
    let n = spec.n;
    let (num_qubits, data, ancillas) = match spec.entangler {
        EntanglerKind::StaticLadder => (n, (0..n).collect::<Vec<_>>(), None),
        EntanglerKind::Dynamic => {
            let (d, a) = interleaved(n);
            (2 * n - 1, d, Some(a))
        }
    };
    let rotations = |l: usize| {
        let mut gates = Vec::with_capacity(2 * n);
        for (i, &q) in data.iter().enumerate() {
            let base = l * 2 * n + 2 * i;
            gates.push(Gate::ry(spec.params[base], q));
            gates.push(Gate::rz(spec.params[base + 1], q));
        }
        Block::Gates(gates)
    };
    let mut blocks = Vec::new();
    for l in 0..spec.layers {
        blocks.push(rotations(l));
        blocks.push(Block::Entangler {
            data: data.clone(),
            ancillas: ancillas.clone(),
        });
    }
    blocks.push(rotations(spec.layers));
    Ok(Program {
        num_qubits,
        data,
        blocks,
    })
}

/// Alternating RY–RZ rotation layers and entanglers, ending with a rotation
/// layer. Parameter `l·2n + 2i` is the RY angle of qubit `i` in rotation
/// layer `l`, the next one its RZ angle.
pub fn hea_circuit(spec: &AnsatzSpec) -> Result<DynamicCircuit> {
    hea_program(spec)?.folded(0)
}

/// Dynamic layout for the brickwork: `d0 a0 d1 d2 a1 d3 d4 …`, one ancilla
/// between `d_{2j}` and `d_{2j+1}`, shared by bonds `(2j, 2j+1)` and
/// `(2j+1, 2j+2)`.
fn brick_layout(n: usize) -> (usize, Vec<usize>, Vec<usize>) {
    let (mut data, mut anc) = (Vec::new(), Vec::new());
    let mut q = 0;
    for i in 0..n {
        data.push(q);
        q += 1;
        if i % 2 == 0 && i + 1 < n {
            anc.push(q);
            q += 1;
        }
    }
    (q, data, anc)
}

fn trotter_program(spec: &TrotterSpec) -> Result<Program> {
    spec.validate()?;
    let n = spec.n;
    let dt = spec.dt();
    let (num_qubits, data, anc) = match spec.gadget {
        GadgetKind::Static => (n, (0..n).collect::<Vec<_>>(), Vec::new()),
        GadgetKind::Dynamic => brick_layout(n),
    };
    let bond = |i: usize| Bond {
        d1: data[i],
        d2: data[i + 1],
        ancilla: match spec.gadget {
            GadgetKind::Static => None,
            GadgetKind::Dynamic => Some(anc[i / 2]),
        },
    };
    let odd: Vec<Bond> = (0..n - 1).step_by(2).map(bond).collect();
    let even: Vec<Bond> = (1..n - 1).step_by(2).map(bond).collect();
    let bricks: Vec<&Vec<Bond>> = [&odd, &even]
        .into_iter()
        .filter(|b| !b.is_empty())
        .collect();

    let mut step = Vec::new();
    match spec.model {
        Model::Tfim => {
            step.push(Block::Gates(
                data.iter()
                    .map(|&q| Gate::rx(2.0 * spec.h * dt, q))
                    .collect(),
            ));
            for bonds in bricks {
                step.push(Block::Interaction {
                    basis: Pauli::Z,
                    theta: 2.0 * dt,
                    bonds: bonds.clone(),
                });
            }
        }
        Model::Heisenberg => {
            step.push(Block::Gates(
                data.iter()
                    .map(|&q| Gate::rz(2.0 * spec.h * dt, q))
                    .collect(),
            ));
            for bonds in bricks {
                for basis in [Pauli::X, Pauli::Y, Pauli::Z] {
                    step.push(Block::Interaction {
                        basis,
                        theta: 2.0 * dt,
                        bonds: bonds.clone(),
                    });
                }
            }
        }
    }
    let mut blocks = Vec::with_capacity(step.len() * spec.steps);
    for _ in 0..spec.steps {
        blocks.extend(step.iter().cloned());
    }
    Ok(Program {
        num_qubits,
        data,
        blocks,
    })
}

/// First-order brickwork Trotter circuit for `e^{-iHt}` from `|0…0⟩`.
pub fn trotter_circuit(spec: &TrotterSpec) -> Result<DynamicCircuit> {
    trotter_program(spec)?.folded(0)
}

/// Globally folded `C · (C̄ · C)^k`, with `C̄` built from the hand-made
/// inverses of every block (dynamic gadgets keep their structure and
/// negate their angles).
pub fn fold_circuit(target: &BuildTarget, fold: FoldSpec) -> Result<DynamicCircuit> {
    FoldSpec::new(fold.k)?;
    let program = match target {
        BuildTarget::Hea(spec) => hea_program(spec)?,
        BuildTarget::Trotter(spec) => trotter_program(spec)?,
    };
    program.folded(fold.k)
}

/// Single-qubit layer used to prepare a product state: X on the data
/// qubits whose bit in `bits` is set.
pub fn prepare_basis_state(c: &mut DynamicCircuit, bits: &[bool]) {
    let data = c.data_qubits().to_vec();
    for (q, &b) in data.iter().zip(bits) {
        if b {
            c.gate(Gate::single(GateKind::X, *q));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Instruction;

    #[test]
    fn parameter_count() {
        assert_eq!(AnsatzSpec::num_params(3, 2), 18);
        let mut spec = AnsatzSpec::zeros(3, 2, EntanglerKind::Dynamic);
        assert!(hea_circuit(&spec).is_ok());
        spec.params.pop();
        assert!(hea_circuit(&spec).is_err());
    }

    #[test]
    fn depth_census() {
        for n in 2..7 {
            assert_eq!(static_ladder(n).unwrap().two_qubit_depth(), n - 1);
            assert_eq!(dynamic_entangler(n).unwrap().two_qubit_depth(), 2);
        }
    }

    #[test]
    fn layouts() {
        assert_eq!(brick_layout(3), (4, vec![0, 2, 3], vec![1]));
        assert_eq!(brick_layout(5), (7, vec![0, 2, 3, 5, 6], vec![1, 4]));
        assert_eq!(brick_layout(2), (3, vec![0, 2], vec![1]));
        let c = dynamic_entangler(3).unwrap();
        assert_eq!(c.data_qubits(), &[0, 2, 4]);
        assert_eq!(c.ancilla_qubits(), vec![1, 3]);
    }

    #[test]
    fn two_qubit_gadget_structure() {
        let c = rzz_gadget(0.3, Pauli::Z).unwrap();
        let kinds: Vec<&str> = c
            .instructions()
            .iter()
            .map(Instruction::kind_name)
            .collect();
        assert_eq!(
            kinds,
            [
                "gate",
                "gate",
                "gate",
                "gate",
                "barrier",
                "measure",
                "conditional",
                "conditional",
                "reset",
                "barrier"
            ]
        );
        let mut c = DynamicCircuit::new(3, vec![0, 2]);
        assert!(append_rzz_gadget(&mut c, 0.1, 0, 0, 1, Pauli::Z).is_err());
        assert!(append_rzz_gadget(&mut c, 0.1, 0, 2, 2, Pauli::Z).is_err());
    }

    #[test]
    fn fold_measurement_census() {
        let spec = TrotterSpec {
            model: Model::Heisenberg,
            n: 5,
            h: 0.5,
            t: 0.25,
            steps: 2,
            gadget: GadgetKind::Dynamic,
        };
        let target = BuildTarget::Trotter(spec.clone());
        let base = trotter_circuit(&spec).unwrap();
        assert_eq!(fold_circuit(&target, FoldSpec { k: 0 }).unwrap(), base);
        for k in 1..=2 {
            let folded = fold_circuit(&target, FoldSpec { k }).unwrap();
            assert_eq!(
                folded.count_measurements(),
                (2 * k + 1) * base.count_measurements()
            );
        }
        assert!(fold_circuit(&target, FoldSpec { k: 3 }).is_err());
    }
}
