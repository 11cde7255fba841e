//! Exact-diagonalization and exact-evolution oracles.

use nalgebra::DMatrix;

use super::PauliSum;
use crate::error::{Error, Result};
use crate::linalg::hermitian_eigenvalues;
use crate::sim::state::{StateVector, C, ZERO};

const MAX_SITES: usize = 12;
/// Above this dimension the ground energy comes from Lanczos instead of a
/// dense eigendecomposition.
const DENSE_LIMIT: usize = 1 << 10;

fn check_size(h: &PauliSum, what: &'static str) -> Result<()> {
    if h.num_sites() > MAX_SITES {
        return Err(Error::TooLarge {
            what,
            max: MAX_SITES,
            got: h.num_sites(),
        });
    }
    Ok(())
}

/// Dense `2^n × 2^n` matrix of `h`.
pub fn to_dense(h: &PauliSum) -> DMatrix<C> {
    let dim = 1usize << h.num_sites();
    let mut m = DMatrix::from_element(dim, dim, ZERO);
    let mut basis = vec![ZERO; dim];
    for col in 0..dim {
        basis[col] = C::new(1.0, 0.0);
        let out = h.apply(&basis);
        for (row, v) in out.into_iter().enumerate() {
            m[(row, col)] = v;
        }
        basis[col] = ZERO;
    }
    m
}

/// Smallest eigenvalue of `h`.
pub fn exact_ground_energy(h: &PauliSum) -> Result<f64> {
    check_size(h, "exact_ground_energy")?;
    let dim = 1usize << h.num_sites();
    if dim > DENSE_LIMIT {
        return Ok(lanczos_ground_energy(h, 300, 1e-12));
    }
    Ok(hermitian_eigenvalues(&to_dense(h))[0])
}

/// Lanczos with full reorthogonalization from a fixed pseudo-random start.
pub fn lanczos_ground_energy(h: &PauliSum, max_iter: usize, tol: f64) -> f64 {
    let dim = 1usize << h.num_sites();
    let mut v: Vec<C> = (0..dim)
        .map(|i| {
            let x = ((i as f64 + 1.0) * 0.618_033_988_749_895).fract() - 0.5;
            C::new(x, 0.1 * x * x)
        })
        .collect();
    normalize(&mut v);
    let mut basis: Vec<Vec<C>> = Vec::new();
    let (mut alphas, mut betas): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
    let mut last = f64::INFINITY;
    for k in 0..max_iter.min(dim) {
        let mut w = h.apply(&v);
        let alpha = dot(&v, &w).re;
        alphas.push(alpha);
        basis.push(v.clone());
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let beta = dot(&w, &w).re.sqrt();
        let ritz = tridiagonal_min(&alphas, &betas);
        if (ritz - last).abs() < tol || beta < 1e-14 || k + 1 == dim {
            return ritz;
        }
        last = ritz;
        betas.push(beta);
        v = w.into_iter().map(|x| x / beta).collect();
    }
    last
}

fn tridiagonal_min(alphas: &[f64], betas: &[f64]) -> f64 {
    let m = alphas.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    t.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

fn dot(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn normalize(v: &mut [C]) {
    let n = dot(v, v).re.sqrt();
    for x in v.iter_mut() {
        *x /= n;
    }
}

/// `e^{-iHt}|ψ0⟩` by a scaled Taylor series applied to the vector. Each
/// sub-step has `‖H‖·Δt ≤ 1/2` and is summed until terms drop below 1e-17.
pub fn exact_evolve(h: &PauliSum, t: f64, psi0: &StateVector) -> Result<StateVector> {
    check_size(h, "exact_evolve")?;
    if psi0.num_qubits() != h.num_sites() {
        return Err(Error::InvalidArgument(format!(
            "state has {} qubits, hamiltonian {} sites",
            psi0.num_qubits(),
            h.num_sites()
        )));
    }
    let steps = ((h.norm_bound() * t.abs()) / 0.5).ceil().max(1.0) as usize;
    let dt = t / steps as f64;
    let mut psi = psi0.amplitudes().to_vec();
    for _ in 0..steps {
        let mut term = psi.clone();
        let mut acc = psi.clone();
        for k in 1..60 {
            let applied = h.apply(&term);
            let f = C::new(0.0, -dt / k as f64);
            term = applied.into_iter().map(|x| x * f).collect();
            for (a, x) in acc.iter_mut().zip(&term) {
                *a += x;
            }
            if dot(&term, &term).re.sqrt() < 1e-17 {
                break;
            }
        }
        psi = acc;
    }
    Ok(StateVector::from_amplitudes(psi))
}
