//! Small dense linear-algebra helpers.

use std::f64::consts::{E, FRAC_1_PI, SQRT_2};

use nalgebra::DMatrix;

use crate::sim::state::C;

/// Diagonal shifts tried in turn. nalgebra's symmetric solver occasionally
/// returns NaN on highly structured inputs; shifting the spectrum changes the
/// iteration without changing the eigenvectors.
const SHIFTS: [f64; 5] = [0.0, FRAC_1_PI, -0.577_215_665, SQRT_2, -E];

/// Eigenvalues of a Hermitian matrix in ascending order.
///
/// Computed from the real symmetric embedding `[[A, -B], [B, A]]` of
/// `A + iB`, whose spectrum is that of the input with every eigenvalue
/// doubled.
pub(crate) fn hermitian_eigenvalues(m: &DMatrix<C>) -> Vec<f64> {
    let n = m.nrows();
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return vec![0.0; n];
    }
    let emb = DMatrix::<f64>::from_fn(2 * n, 2 * n, |r, c| {
        let z = m[(r % n, c % n)] / scale;
        match (r < n, c < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    for shift in SHIFTS {
        let shifted = &emb + DMatrix::<f64>::identity(2 * n, 2 * n) * shift;
        let mut evals: Vec<f64> = shifted
            .symmetric_eigenvalues()
            .iter()
            .map(|e| e - shift)
            .collect();
        if evals.iter().all(|e| e.is_finite()) {
            evals.sort_by(f64::total_cmp);
            return evals.into_iter().step_by(2).map(|e| e * scale).collect();
        }
    }
    panic!("symmetric eigensolver failed for every shift");
}

/// Sum of singular values.
pub(crate) fn trace_norm(m: &DMatrix<C>) -> f64 {
    m.clone().singular_values().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_y_spectrum() {
        let (z, i) = (C::new(0.0, 0.0), C::new(0.0, 1.0));
        let y = DMatrix::from_row_slice(2, 2, &[z, -i, i, z]);
        let e = hermitian_eigenvalues(&y);
        assert!((e[0] + 1.0).abs() < 1e-14 && (e[1] - 1.0).abs() < 1e-14);
        assert!((trace_norm(&y) - 2.0).abs() < 1e-14);
    }
}
