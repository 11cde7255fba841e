//! Spin-chain Hamiltonians as weighted Pauli strings, with exact oracles and
//! shot-based energy estimation.

mod estimate;
mod exact;

pub use estimate::{
    estimate_energy, expected_energy, measurement_settings, EnergyEstimate, MeasurementSetting,
};
pub use exact::{exact_evolve, exact_ground_energy, lanczos_ground_energy, to_dense};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::state::{C, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Self> {
        Some(match c {
            'I' => Pauli::I,
            'X' => Pauli::X,
            'Y' => Pauli::Y,
            'Z' => Pauli::Z,
            _ => return None,
        })
    }

    pub fn to_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// A Pauli word over the data qubits; position `i` acts on spin `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString(Vec<Pauli>);

impl PauliString {
    pub fn new(paulis: Vec<Pauli>) -> Self {
        Self(paulis)
    }

    pub fn identity(n: usize) -> Self {
        Self(vec![Pauli::I; n])
    }

    /// `n`-site string with the given single-site operators placed.
    pub fn with(n: usize, sites: &[(usize, Pauli)]) -> Self {
        let mut s = Self::identity(n);
        for &(i, p) in sites {
            s.0[i] = p;
        }
        s
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn paulis(&self) -> &[Pauli] {
        &self.0
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, p)| **p != Pauli::I)
            .map(|(i, _)| i)
    }

    /// Bit masks over physical qubits: `(x_mask, z_mask, y_count)` where Y
    /// contributes to both masks.
    fn masks(&self, qubit_map: &[usize]) -> (usize, usize, u32) {
        let (mut x, mut z, mut ny) = (0usize, 0usize, 0u32);
        for (i, p) in self.0.iter().enumerate() {
            let bit = 1usize << qubit_map[i];
            match p {
                Pauli::I => {}
                Pauli::X => x |= bit,
                Pauli::Z => z |= bit,
                Pauli::Y => {
                    x |= bit;
                    z |= bit;
                    ny += 1;
                }
            }
        }
        (x, z, ny)
    }

    /// `⟨ψ|P|ψ⟩` for unnormalized amplitudes, with spin `i` living on
    /// physical qubit `qubit_map[i]`.
    pub fn expectation(&self, amps: &[C], qubit_map: &[usize]) -> f64 {
        let (x, z, ny) = self.masks(qubit_map);
        let phase = i_pow(ny);
        let mut acc = ZERO;
        for (b, a) in amps.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let sign = if (b & z).count_ones() % 2 == 1 {
                -1.0
            } else {
                1.0
            };
            acc += amps[b ^ x].conj() * *a * sign;
        }
        (acc * phase).re
    }

    /// `out += coeff · P|ψ⟩`.
    pub fn apply_add(&self, coeff: C, amps: &[C], out: &mut [C], qubit_map: &[usize]) {
        let (x, z, ny) = self.masks(qubit_map);
        let c = coeff * i_pow(ny);
        for (b, a) in amps.iter().enumerate() {
            let sign = if (b & z).count_ones() % 2 == 1 {
                -1.0
            } else {
                1.0
            };
            out[b ^ x] += c * *a * sign;
        }
    }
}

fn i_pow(k: u32) -> C {
    match k % 4 {
        0 => C::new(1.0, 0.0),
        1 => C::new(0.0, 1.0),
        2 => C::new(-1.0, 0.0),
        _ => C::new(0.0, -1.0),
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            write!(f, "{}", p.to_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| {
                Pauli::from_char(c)
                    .ok_or_else(|| Error::InvalidHamiltonian(format!("bad Pauli letter {c:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(PauliString)
    }
}

/// `Σ coeff · P` with real coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    num_sites: usize,
    terms: Vec<(f64, PauliString)>,
}

impl PauliSum {
    /// Builds a sum, merging duplicate strings and dropping zero terms.
    pub fn new(num_sites: usize, terms: Vec<(f64, PauliString)>) -> Result<Self> {
        let mut merged: Vec<(f64, PauliString)> = Vec::new();
        for (c, p) in terms {
            if !c.is_finite() {
                return Err(Error::InvalidHamiltonian(format!(
                    "non-finite coefficient on {p}"
                )));
            }
            if p.len() != num_sites {
                return Err(Error::InvalidHamiltonian(format!(
                    "term {p} has length {} but the system has {num_sites} sites",
                    p.len()
                )));
            }
            match merged.iter_mut().find(|(_, q)| *q == p) {
                Some(entry) => entry.0 += c,
                None => merged.push((c, p)),
            }
        }
        merged.retain(|(c, _)| *c != 0.0);
        Ok(Self {
            num_sites,
            terms: merged,
        })
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn expectation(&self, amps: &[C], qubit_map: &[usize]) -> f64 {
        self.terms
            .iter()
            .map(|(c, p)| c * p.expectation(amps, qubit_map))
            .sum()
    }

    /// `H|ψ⟩` on the data register (identity qubit map).
    pub fn apply(&self, amps: &[C]) -> Vec<C> {
        let map: Vec<usize> = (0..self.num_sites).collect();
        let mut out = vec![ZERO; amps.len()];
        for (c, p) in &self.terms {
            p.apply_add(C::new(*c, 0.0), amps, &mut out, &map);
        }
        out
    }

    /// Upper bound on the spectral norm.
    pub fn norm_bound(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c.abs()).sum()
    }

    /// Expectation in a computational basis state given as a bit per site.
    pub fn basis_expectation(&self, bits: &[bool]) -> f64 {
        self.terms
            .iter()
            .filter(|(_, p)| p.paulis().iter().all(|x| matches!(x, Pauli::I | Pauli::Z)))
            .map(|(c, p)| {
                let odd = p.support().filter(|&i| bits[i]).count() % 2 == 1;
                if odd {
                    -c
                } else {
                    *c
                }
            })
            .sum()
    }

    pub fn to_json(&self) -> String {
        let doc: Vec<(f64, String)> = self
            .terms
            .iter()
            .map(|(c, p)| (*c, p.to_string()))
            .collect();
        serde_json::to_string(&doc).expect("pauli sum serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: Vec<(f64, String)> =
            serde_json::from_str(s).map_err(|e| Error::InvalidHamiltonian(e.to_string()))?;
        let n = doc.first().map_or(0, |(_, p)| p.len());
        let terms = doc
            .into_iter()
            .map(|(c, p)| Ok((c, p.parse()?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, terms)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Tfim,
    Heisenberg,
}

impl Model {
    pub fn hamiltonian(self, n: usize, h: f64) -> Result<PauliSum> {
        match self {
            Model::Tfim => tfim(n, h),
            Model::Heisenberg => heisenberg(n, h),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Model::Tfim => "tfim",
            Model::Heisenberg => "heisenberg",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tfim" | "ising" => Ok(Model::Tfim),
            "heisenberg" => Ok(Model::Heisenberg),
            other => Err(Error::InvalidArgument(format!("unknown model {other}"))),
        }
    }
}

fn check_sites(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidHamiltonian(format!(
            "a chain needs at least 2 spins, got {n}"
        )));
    }
    Ok(())
}

/// `Σ Z_i Z_{i+1} + h Σ X_i` on an open chain.
pub fn tfim(n: usize, h: f64) -> Result<PauliSum> {
    check_sites(n)?;
    let mut terms = Vec::new();
    for i in 0..n - 1 {
        terms.push((
            1.0,
            PauliString::with(n, &[(i, Pauli::Z), (i + 1, Pauli::Z)]),
        ));
    }
    for i in 0..n {
        terms.push((h, PauliString::with(n, &[(i, Pauli::X)])));
    }
    PauliSum::new(n, terms)
}

/// `Σ (X_i X_{i+1} + Y_i Y_{i+1} + Z_i Z_{i+1}) + h Σ Z_i` on an open chain.
pub fn heisenberg(n: usize, h: f64) -> Result<PauliSum> {
    check_sites(n)?;
    let mut terms = Vec::new();
    for i in 0..n - 1 {
        for p in [Pauli::X, Pauli::Y, Pauli::Z] {
            terms.push((1.0, PauliString::with(n, &[(i, p), (i + 1, p)])));
        }
    }
    for i in 0..n {
        terms.push((h, PauliString::with(n, &[(i, Pauli::Z)])));
    }
    PauliSum::new(n, terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::state::StateVector;

    fn strings(h: &PauliSum) -> Vec<(f64, String)> {
        h.terms().iter().map(|(c, p)| (*c, p.to_string())).collect()
    }

    #[test]
    fn tfim_terms() {
        assert_eq!(
            strings(&tfim(2, 0.0).unwrap()),
            vec![(1.0, "ZZ".to_string())]
        );
        let want: Vec<(f64, String)> = [
            (1.0, "ZZI"),
            (1.0, "IZZ"),
            (2.0, "XII"),
            (2.0, "IXI"),
            (2.0, "IIX"),
        ]
        .iter()
        .map(|(c, s)| (*c, s.to_string()))
        .collect();
        assert_eq!(strings(&tfim(3, 2.0).unwrap()), want);
        assert!(tfim(1, 1.0).is_err());
    }

    #[test]
    fn heisenberg_terms() {
        let want: Vec<(f64, String)> = [(1.0, "XX"), (1.0, "YY"), (1.0, "ZZ")]
            .iter()
            .map(|(c, s)| (*c, s.to_string()))
            .collect();
        assert_eq!(strings(&heisenberg(2, 0.0).unwrap()), want);
        assert!(heisenberg(0, 0.0).is_err());
    }

    #[test]
    fn basis_state_energies() {
        let zero2 = StateVector::zero(2);
        let h = heisenberg(2, 0.0).unwrap();
        assert_eq!(h.expectation(zero2.amplitudes(), &[0, 1]), 1.0);
        let h5 = heisenberg(5, 0.5).unwrap();
        let zero5 = StateVector::zero(5);
        assert!((h5.expectation(zero5.amplitudes(), &[0, 1, 2, 3, 4]) - 6.5).abs() < 1e-15);
        assert_eq!(h5.basis_expectation(&[false; 5]), 6.5);
        assert_eq!(tfim(5, 3.0).unwrap().basis_expectation(&[false; 5]), 4.0);
    }

    #[test]
    fn y_expectation_sign() {
        // S·H|0⟩ = (|0⟩ + i|1⟩)/√2 is the +1 eigenstate of Y
        let mut s = StateVector::zero(1);
        s.apply_gate(&crate::circuit::Gate::single(
            crate::circuit::GateKind::H,
            0,
        ));
        s.apply_gate(&crate::circuit::Gate::single(
            crate::circuit::GateKind::S,
            0,
        ));
        let y: PauliString = "Y".parse().unwrap();
        assert!((y.expectation(s.amplitudes(), &[0]) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn duplicates_merge_and_json_round_trip() {
        let h = PauliSum::new(
            2,
            vec![
                (1.0, "ZZ".parse().unwrap()),
                (0.5, "ZZ".parse().unwrap()),
                (0.25, "XI".parse().unwrap()),
            ],
        )
        .unwrap();
        assert_eq!(h.terms().len(), 2);
        assert_eq!(h.terms()[0].0, 1.5);
        assert_eq!(h.to_json(), r#"[[1.5,"ZZ"],[0.25,"XI"]]"#);
        assert_eq!(PauliSum::from_json(&h.to_json()).unwrap(), h);
        assert!(PauliSum::new(2, vec![(f64::NAN, "ZZ".parse().unwrap())]).is_err());
        assert!(PauliSum::new(3, vec![(1.0, "ZZ".parse().unwrap())]).is_err());
    }
}
