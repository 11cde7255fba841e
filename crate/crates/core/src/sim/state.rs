//! Dense statevector with in-place gate kernels.
//!
//! Qubit `q` is bit `q` of the basis-state index (little endian).

use num_complex::Complex64;

use crate::circuit::{Gate, GateKind};

pub type C = Complex64;

pub(crate) const ZERO: C = C::new(0.0, 0.0);
pub(crate) const ONE: C = C::new(1.0, 0.0);
pub(crate) const I: C = C::new(0.0, 1.0);

pub type Mat2 = [[C; 2]; 2];

/// 2×2 matrix of a single-qubit gate kind.
pub fn single_qubit_matrix(kind: GateKind, angle: f64) -> Mat2 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (c, sn) = ((angle / 2.0).cos(), (angle / 2.0).sin());
    match kind {
        GateKind::X => [[ZERO, ONE], [ONE, ZERO]],
        GateKind::Y => [[ZERO, -I], [I, ZERO]],
        GateKind::Z => [[ONE, ZERO], [ZERO, -ONE]],
        GateKind::H => [
            [C::new(s, 0.0), C::new(s, 0.0)],
            [C::new(s, 0.0), C::new(-s, 0.0)],
        ],
        GateKind::S => [[ONE, ZERO], [ZERO, I]],
        GateKind::Sdg => [[ONE, ZERO], [ZERO, -I]],
        GateKind::Rx => [
            [C::new(c, 0.0), C::new(0.0, -sn)],
            [C::new(0.0, -sn), C::new(c, 0.0)],
        ],
        GateKind::Ry => [
            [C::new(c, 0.0), C::new(-sn, 0.0)],
            [C::new(sn, 0.0), C::new(c, 0.0)],
        ],
        GateKind::Rz => [[C::new(c, -sn), ZERO], [ZERO, C::new(c, sn)]],
        GateKind::Cnot | GateKind::Cz => panic!("{kind} is not a single-qubit gate"),
    }
}

/// `exp(-i·angle·Z/2)`.
pub fn rz_matrix(angle: f64) -> Mat2 {
    single_qubit_matrix(GateKind::Rz, angle)
}

pub fn mat2_conj(m: &Mat2) -> Mat2 {
    [
        [m[0][0].conj(), m[0][1].conj()],
        [m[1][0].conj(), m[1][1].conj()],
    ]
}

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}

/// In-place kernels on a raw amplitude slice. Shared by the statevector,
/// the branch engine and the vectorized density matrix.
pub(crate) mod kernel {
    use super::{Mat2, C};

    pub fn apply_1q(amps: &mut [C], q: usize, m: &Mat2) {
        let stride = 1usize << q;
        let len = amps.len();
        let mut base = 0;
        while base < len {
            for i in base..base + stride {
                let j = i + stride;
                let (a, b) = (amps[i], amps[j]);
                amps[i] = m[0][0] * a + m[0][1] * b;
                amps[j] = m[1][0] * a + m[1][1] * b;
            }
            base += 2 * stride;
        }
    }

    pub fn apply_diag(amps: &mut [C], q: usize, d0: C, d1: C) {
        let mask = 1usize << q;
        for (i, a) in amps.iter_mut().enumerate() {
            *a *= if i & mask == 0 { d0 } else { d1 };
        }
    }

    pub fn apply_x(amps: &mut [C], q: usize) {
        let stride = 1usize << q;
        let len = amps.len();
        let mut base = 0;
        while base < len {
            for i in base..base + stride {
                amps.swap(i, i + stride);
            }
            base += 2 * stride;
        }
    }

    pub fn apply_cnot(amps: &mut [C], control: usize, target: usize) {
        let (cm, tm) = (1usize << control, 1usize << target);
        for i in 0..amps.len() {
            if i & cm != 0 && i & tm == 0 {
                amps.swap(i, i | tm);
            }
        }
    }

    pub fn apply_cz(amps: &mut [C], a: usize, b: usize) {
        let m = (1usize << a) | (1usize << b);
        for (i, v) in amps.iter_mut().enumerate() {
            if i & m == m {
                *v = -*v;
            }
        }
    }

    pub fn prob_one(amps: &[C], q: usize) -> f64 {
        let mask = 1usize << q;
        amps.iter()
            .enumerate()
            .filter(|(i, _)| i & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Zeroes every amplitude inconsistent with `outcome` on qubit `q`.
    pub fn project(amps: &mut [C], q: usize, outcome: bool) {
        let mask = 1usize << q;
        for (i, a) in amps.iter_mut().enumerate() {
            if (i & mask != 0) != outcome {
                *a = C::new(0.0, 0.0);
            }
        }
    }

    pub fn norm_sqr(amps: &[C]) -> f64 {
        amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn scale(amps: &mut [C], s: f64) {
        for a in amps.iter_mut() {
            *a *= s;
        }
    }
}

/// Applies `gate` to raw amplitudes, optionally complex-conjugating the gate
/// matrix and shifting qubit indices by `offset`.
pub(crate) fn apply_gate_raw(amps: &mut [C], gate: &Gate, offset: usize, conjugate: bool) {
    let q = |i: usize| gate.qubits[i] + offset;
    match gate.kind {
        GateKind::Cnot => kernel::apply_cnot(amps, q(0), q(1)),
        GateKind::Cz => kernel::apply_cz(amps, q(0), q(1)),
        GateKind::X => kernel::apply_x(amps, q(0)),
        GateKind::Z => kernel::apply_diag(amps, q(0), ONE, -ONE),
        GateKind::S | GateKind::Sdg | GateKind::Rz => {
            let m = single_qubit_matrix(gate.kind, gate.angle().unwrap_or(0.0));
            let (d0, d1) = if conjugate {
                (m[0][0].conj(), m[1][1].conj())
            } else {
                (m[0][0], m[1][1])
            };
            kernel::apply_diag(amps, q(0), d0, d1);
        }
        kind => {
            let m = single_qubit_matrix(kind, gate.angle().unwrap_or(0.0));
            let m = if conjugate { mat2_conj(&m) } else { m };
            kernel::apply_1q(amps, q(0), &m);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<C>,
}

impl StateVector {
    /// `|0…0⟩` on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Self {
        let mut amps = vec![ZERO; 1 << num_qubits];
        amps[0] = ONE;
        Self { num_qubits, amps }
    }

    pub fn basis(num_qubits: usize, index: usize) -> Self {
        let mut amps = vec![ZERO; 1 << num_qubits];
        amps[index] = ONE;
        Self { num_qubits, amps }
    }

    /// Wraps raw amplitudes. The length must be a power of two.
    pub fn from_amplitudes(amps: Vec<C>) -> Self {
        assert!(amps.len().is_power_of_two(), "amplitude count must be 2^n");
        let num_qubits = amps.len().trailing_zeros() as usize;
        Self { num_qubits, amps }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[C] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        kernel::norm_sqr(&self.amps).sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            kernel::scale(&mut self.amps, 1.0 / n);
        }
    }

    pub fn apply_gate(&mut self, gate: &Gate) {
        apply_gate_raw(&mut self.amps, gate, 0, false);
    }

    pub fn apply_matrix(&mut self, qubit: usize, m: &Mat2) {
        kernel::apply_1q(&mut self.amps, qubit, m);
    }

    pub fn apply_x(&mut self, qubit: usize) {
        kernel::apply_x(&mut self.amps, qubit);
    }

    pub fn apply_z(&mut self, qubit: usize) {
        kernel::apply_diag(&mut self.amps, qubit, ONE, -ONE);
    }

    pub fn apply_y(&mut self, qubit: usize) {
        kernel::apply_1q(
            &mut self.amps,
            qubit,
            &single_qubit_matrix(GateKind::Y, 0.0),
        );
    }

    pub fn prob_one(&self, qubit: usize) -> f64 {
        kernel::prob_one(&self.amps, qubit)
    }

    /// Projects onto `outcome` and renormalizes.
    pub fn collapse(&mut self, qubit: usize, outcome: bool) {
        kernel::project(&mut self.amps, qubit, outcome);
        self.normalize();
    }

    pub fn inner(&self, other: &StateVector) -> C {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|⟨self|other⟩|²` for normalized states.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Mat2, b: &Mat2) -> bool {
        a.iter()
            .flatten()
            .zip(b.iter().flatten())
            .all(|(x, y)| (x - y).norm() < 1e-12)
    }

    #[test]
    fn rotation_matrices_match_exponentials() {
        let t = 0.37;
        let rz = rz_matrix(t);
        assert!((rz[0][0] - C::new(0.0, -t / 2.0).exp()).norm() < 1e-14);
        assert!((rz[1][1] - C::new(0.0, t / 2.0).exp()).norm() < 1e-14);
        // RX(π) = -iX
        let rx = single_qubit_matrix(GateKind::Rx, std::f64::consts::PI);
        assert!(close(&rx, &[[ZERO, -I], [-I, ZERO]]));
        // S·SDG = I
        let p = mat2_mul(
            &single_qubit_matrix(GateKind::S, 0.0),
            &single_qubit_matrix(GateKind::Sdg, 0.0),
        );
        assert!(close(&p, &[[ONE, ZERO], [ZERO, ONE]]));
    }

    #[test]
    fn bell_state() {
        let mut s = StateVector::zero(2);
        s.apply_gate(&Gate::single(GateKind::H, 0));
        s.apply_gate(&Gate::cnot(0, 1));
        let a = s.amplitudes();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((a[0].re - h).abs() < 1e-15 && (a[3].re - h).abs() < 1e-15);
        assert!(a[1].norm() < 1e-15 && a[2].norm() < 1e-15);
        assert!((s.prob_one(1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn collapse_renormalizes() {
        let mut s = StateVector::zero(1);
        s.apply_gate(&Gate::ry(1.0, 0));
        s.collapse(0, true);
        assert!((s.norm() - 1.0).abs() < 1e-14);
        assert!((s.prob_one(0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cz_is_symmetric() {
        let mut a = StateVector::zero(2);
        let mut b = StateVector::zero(2);
        for s in [&mut a, &mut b] {
            s.apply_gate(&Gate::single(GateKind::H, 0));
            s.apply_gate(&Gate::single(GateKind::H, 1));
        }
        a.apply_gate(&Gate::cz(0, 1));
        b.apply_gate(&Gate::cz(1, 0));
        assert!((a.fidelity(&b) - 1.0).abs() < 1e-14);
    }
}
