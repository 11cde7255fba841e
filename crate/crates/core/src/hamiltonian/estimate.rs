//! Qubit-wise commuting measurement settings and shot-based energy estimates.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Pauli, PauliSum};
use crate::circuit::{DynamicCircuit, Gate, GateKind};
use crate::error::{Error, Result};
use crate::sim::trajectory::Histogram;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementSetting {
    /// Measurement basis per data qubit, one of X, Y or Z.
    pub bases: Vec<Pauli>,
    /// Indices into the Hamiltonian's term list.
    pub terms: Vec<usize>,
}

impl MeasurementSetting {
    /// Basis-change gates for data qubit `i` (H for X, SDG then H for Y).
    pub fn basis_change(&self, qubit_map: &[usize]) -> Vec<Gate> {
        let mut gates = Vec::new();
        for (i, b) in self.bases.iter().enumerate() {
            let q = qubit_map[i];
            match b {
                Pauli::X => gates.push(Gate::single(GateKind::H, q)),
                Pauli::Y => {
                    gates.push(Gate::single(GateKind::Sdg, q));
                    gates.push(Gate::single(GateKind::H, q));
                }
                Pauli::Z | Pauli::I => {}
            }
        }
        gates
    }

    /// Copy of `circuit` with a barrier, this setting's basis change and a
    /// final readout of every data qubit appended.
    pub fn apply_to(&self, circuit: &DynamicCircuit) -> DynamicCircuit {
        let mut c = circuit.clone();
        c.barrier_all();
        for g in self.basis_change(circuit.data_qubits()) {
            c.gate(g);
        }
        c.measure_data();
        c
    }

    pub fn label(&self) -> String {
        self.bases.iter().map(|p| p.to_char()).collect()
    }
}

/// Greedy qubit-wise commuting partition of the terms of `h`, in term order.
/// Sites left unconstrained by every term of a group are measured in Z.
pub fn measurement_settings(h: &PauliSum) -> Vec<MeasurementSetting> {
    let n = h.num_sites();
    let mut groups: Vec<(Vec<Option<Pauli>>, Vec<usize>)> = Vec::new();
    for (t, (_, p)) in h.terms().iter().enumerate() {
        let fits = |bases: &[Option<Pauli>]| {
            p.paulis()
                .iter()
                .zip(bases)
                .all(|(q, b)| *q == Pauli::I || b.is_none_or(|b| b == *q))
        };
        let slot = groups.iter().position(|(bases, _)| fits(bases));
        let idx = slot.unwrap_or_else(|| {
            groups.push((vec![None; n], Vec::new()));
            groups.len() - 1
        });
        let (bases, terms) = &mut groups[idx];
        for (b, q) in bases.iter_mut().zip(p.paulis()) {
            if *q != Pauli::I {
                *b = Some(*q);
            }
        }
        terms.push(t);
    }
    groups
        .into_iter()
        .map(|(bases, terms)| MeasurementSetting {
            bases: bases.into_iter().map(|b| b.unwrap_or(Pauli::Z)).collect(),
            terms,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyEstimate {
    pub energy: f64,
    pub standard_error: f64,
}

/// Energy from one histogram per setting of [`measurement_settings`]. Term
/// variances are binomial; covariance between terms sharing a setting is
/// ignored.
pub fn estimate_energy(h: &PauliSum, histograms: &[Histogram]) -> Result<EnergyEstimate> {
    let settings = measurement_settings(h);
    if histograms.len() != settings.len() {
        return Err(Error::InvalidArgument(format!(
            "expected {} histograms, got {}",
            settings.len(),
            histograms.len()
        )));
    }
    let (mut energy, mut var) = (0.0, 0.0);
    for (k, (setting, hist)) in settings.iter().zip(histograms).enumerate() {
        let total = hist.total();
        if total == 0 {
            return Err(Error::EmptyHistogram(k));
        }
        for &t in &setting.terms {
            let (coeff, p) = &h.terms()[t];
            let support: Vec<usize> = p.support().collect();
            let mut signed = 0i64;
            for (key, count) in hist.iter() {
                let bits = key.as_bytes();
                if bits.len() < h.num_sites() {
                    return Err(Error::InvalidArgument(format!(
                        "outcome {key:?} is shorter than {} sites",
                        h.num_sites()
                    )));
                }
                let odd = support.iter().filter(|&&i| bits[i] == b'1').count() % 2 == 1;
                signed += if odd { -(*count as i64) } else { *count as i64 };
            }
            let mean = signed as f64 / total as f64;
            energy += coeff * mean;
            var += coeff * coeff * (1.0 - mean * mean).max(0.0) / total as f64;
        }
    }
    Ok(EnergyEstimate {
        energy,
        standard_error: var.sqrt(),
    })
}

/// Exact energy from one outcome distribution per setting of
/// [`measurement_settings`], with probabilities keyed like histograms.
pub fn expected_energy(h: &PauliSum, distributions: &[BTreeMap<String, f64>]) -> Result<f64> {
    let settings = measurement_settings(h);
    if distributions.len() != settings.len() {
        return Err(Error::InvalidArgument(format!(
            "expected {} distributions, got {}",
            settings.len(),
            distributions.len()
        )));
    }
    let mut energy = 0.0;
    for (setting, dist) in settings.iter().zip(distributions) {
        for &t in &setting.terms {
            let (coeff, p) = &h.terms()[t];
            let support: Vec<usize> = p.support().collect();
            let mean: f64 = dist
                .iter()
                .map(|(key, prob)| {
                    let bits = key.as_bytes();
                    let odd = support
                        .iter()
                        .filter(|&&i| bits.get(i) == Some(&b'1'))
                        .count()
                        % 2
                        == 1;
                    if odd {
                        -prob
                    } else {
                        *prob
                    }
                })
                .sum();
            energy += coeff * mean;
        }
    }
    Ok(energy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{heisenberg, tfim};

    fn hist(entries: &[(&str, u64)]) -> Histogram {
        let mut h = Histogram::new();
        for (k, c) in entries {
            h.add(k, *c);
        }
        h
    }

    #[test]
    fn setting_counts() {
        let t = measurement_settings(&tfim(3, 1.0).unwrap());
        assert_eq!(t.len(), 2);
        assert_eq!(t[0].label(), "ZZZ");
        assert_eq!(t[1].label(), "XXX");
        let h = measurement_settings(&heisenberg(3, 1.0).unwrap());
        let labels: Vec<String> = h.iter().map(|s| s.label()).collect();
        assert_eq!(labels, ["XXX", "YYY", "ZZZ"]);
    }

    #[test]
    fn settings_partition_terms() {
        for h in [tfim(5, 0.3).unwrap(), heisenberg(4, 1.2).unwrap()] {
            let settings = measurement_settings(&h);
            let mut seen = vec![0; h.terms().len()];
            for s in &settings {
                for &t in &s.terms {
                    seen[t] += 1;
                    let p = &h.terms()[t].1;
                    for (q, b) in p.paulis().iter().zip(&s.bases) {
                        assert!(*q == Pauli::I || q == b);
                    }
                }
            }
            assert!(seen.iter().all(|&c| c == 1));
        }
    }

    #[test]
    fn delta_histogram_energy() {
        let h = tfim(3, 0.0).unwrap();
        // h = 0 drops the field terms, leaving a single all-Z setting
        let e = estimate_energy(&h, &[hist(&[("000", 100)])]).unwrap();
        assert_eq!(e.energy, 2.0);
        assert_eq!(e.standard_error, 0.0);
    }

    #[test]
    fn uniform_histogram_is_zero() {
        let h = heisenberg(3, 0.7).unwrap();
        let all: Vec<String> = (0..8).map(|b| format!("{:03b}", b)).collect();
        let uniform = hist(&all.iter().map(|s| (s.as_str(), 5)).collect::<Vec<_>>());
        let e = estimate_energy(&h, &[uniform.clone(), uniform.clone(), uniform]).unwrap();
        assert_eq!(e.energy, 0.0);
    }

    #[test]
    fn empty_histogram_rejected() {
        let h = tfim(2, 1.0).unwrap();
        let err = estimate_energy(&h, &[hist(&[("00", 1)]), Histogram::new()]).unwrap_err();
        assert_eq!(err, Error::EmptyHistogram(1));
    }
}
