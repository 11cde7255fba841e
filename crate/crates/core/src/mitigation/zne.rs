//! Zero-noise extrapolation over folded circuits.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::builders::FoldSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitKind {
    #[default]
    Linear,
    Quadratic,
    Exponential,
}

impl std::fmt::Display for FitKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FitKind::Linear => "linear",
            FitKind::Quadratic => "quadratic",
            FitKind::Exponential => "exponential",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZNEConfig {
    pub folds: Vec<usize>,
    pub fit: FitKind,
}

impl Default for ZNEConfig {
    fn default() -> Self {
        Self {
            folds: vec![0, 1, 2],
            fit: FitKind::Linear,
        }
    }
}

impl ZNEConfig {
    pub fn validate(&self) -> Result<()> {
        let mut folds = self.folds.clone();
        folds.sort_unstable();
        folds.dedup();
        if folds.len() != self.folds.len() || folds.len() < 2 {
            return Err(Error::InvalidArgument(
                "ZNE needs at least two distinct fold counts".into(),
            ));
        }
        if let Some(&k) = folds.iter().find(|&&k| k > FoldSpec::MAX_K) {
            return Err(Error::InvalidArgument(format!(
                "fold count {k} exceeds {}",
                FoldSpec::MAX_K
            )));
        }
        Ok(())
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.folds.iter().map(|&k| (1 + 2 * k) as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZnePoint {
    pub lambda: f64,
    pub energy: f64,
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZneFit {
    /// Extrapolated value at λ = 0.
    pub e0: f64,
    /// Requested fit form.
    pub kind: FitKind,
    /// Form actually used; differs from `kind` only after a fallback.
    pub used: FitKind,
    pub fallback: bool,
    /// Model coefficients: `[a, b]`, `[a, b, c]` for `a + bλ + cλ²`, or
    /// `[a, b, c]` for `a + b·exp(-cλ)`.
    pub params: Vec<f64>,
    /// Unweighted residual norm of the fit.
    pub residual_norm: f64,
    /// Standard error of `e0` propagated from the point standard errors;
    /// `None` when the points carry none.
    pub e0_stderr: Option<f64>,
    pub iterations: usize,
}

const MAX_ITER: usize = 200;

/// Least-squares fit of `points` to the configured form, evaluated at λ = 0.
///
/// Points are weighted by `1/stderr²` when every point carries a positive
/// standard error, and unweighted otherwise. An exponential fit that does
/// not converge within 200 iterations falls back to a linear fit and sets
/// `fallback`.
pub fn zne_extrapolate(points: &[ZnePoint], config: &ZNEConfig) -> Result<ZneFit> {
    if points.len() < 2 {
        return Err(Error::Extrapolation(format!(
            "need at least 2 points, got {}",
            points.len()
        )));
    }
    if points
        .iter()
        .any(|p| !p.lambda.is_finite() || !p.energy.is_finite())
    {
        return Err(Error::Extrapolation("non-finite point".into()));
    }
    let mut lambdas: Vec<f64> = points.iter().map(|p| p.lambda).collect();
    lambdas.sort_by(f64::total_cmp);
    if lambdas.windows(2).any(|w| w[1] - w[0] <= 0.0) {
        return Err(Error::Extrapolation(
            "noise factors must be distinct".into(),
        ));
    }
    let weighted = points
        .iter()
        .all(|p| p.stderr.is_some_and(|s| s > 0.0 && s.is_finite()));
    let weights: Vec<f64> = if weighted {
        points.iter().map(|p| p.stderr.unwrap().powi(-2)).collect()
    } else {
        vec![1.0; points.len()]
    };

    let mut fit = match config.fit {
        FitKind::Linear => polynomial(points, &weights, 1, FitKind::Linear),
        FitKind::Quadratic => {
            if points.len() < 3 {
                return Err(Error::Extrapolation(
                    "quadratic fit needs at least 3 points".into(),
                ));
            }
            polynomial(points, &weights, 2, FitKind::Quadratic)
        }
        FitKind::Exponential => {
            if points.len() < 3 {
                return Err(Error::Extrapolation(
                    "exponential fit needs at least 3 points".into(),
                ));
            }
            match exponential(points, &weights) {
                Some(fit) => Ok(fit),
                None => {
                    let mut fit = polynomial(points, &weights, 1, FitKind::Exponential)?;
                    fit.fallback = true;
                    Ok(fit)
                }
            }
        }
    }?;
    if !weighted {
        fit.e0_stderr = None;
    }
    Ok(fit)
}

/// `sqrt(gᵀ (JᵀWJ)⁻¹ g)` for a weighted Jacobian `wj`.
fn propagated(wj: &DMatrix<f64>, g: &DVector<f64>) -> Option<f64> {
    let info = wj.transpose() * wj;
    let cov = info.try_inverse()?;
    let var = (g.transpose() * cov * g)[(0, 0)];
    (var.is_finite() && var >= 0.0).then(|| var.sqrt())
}

fn residual_norm(points: &[ZnePoint], model: impl Fn(f64) -> f64) -> f64 {
    points
        .iter()
        .map(|p| (model(p.lambda) - p.energy).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn polynomial(points: &[ZnePoint], w: &[f64], degree: usize, kind: FitKind) -> Result<ZneFit> {
    let m = points.len();
    let a = DMatrix::from_fn(m, degree + 1, |i, j| {
        w[i].sqrt() * points[i].lambda.powi(j as i32)
    });
    let y = DVector::from_fn(m, |i, _| w[i].sqrt() * points[i].energy);
    let coef = a
        .clone()
        .svd(true, true)
        .solve(&y, 1e-14)
        .map_err(|e| Error::Extrapolation(e.to_string()))?;
    let params: Vec<f64> = coef.iter().copied().collect();
    let eval = |x: f64| params.iter().rev().fold(0.0, |acc, c| acc * x + c);
    let e0_stderr = propagated(
        &a,
        &DVector::from_fn(degree + 1, |i, _| if i == 0 { 1.0 } else { 0.0 }),
    );
    Ok(ZneFit {
        e0_stderr,
        e0: params[0],
        kind,
        used: if degree == 1 {
            FitKind::Linear
        } else {
            FitKind::Quadratic
        },
        fallback: false,
        residual_norm: residual_norm(points, eval),
        params,
        iterations: 0,
    })
}

/// `a + b·exp(-cλ)`. The decay rate is seeded from the ratio of the first
/// and last finite-difference slopes, `a` and `b` from the linear problem at
/// that rate, then all three are refined by Levenberg–Marquardt. `None` when
/// the data admit no exponential starting point or the refinement stalls.
fn exponential(points: &[ZnePoint], w: &[f64]) -> Option<ZneFit> {
    let mut sorted: Vec<(ZnePoint, f64)> = points.iter().copied().zip(w.iter().copied()).collect();
    sorted.sort_by(|p, q| p.0.lambda.total_cmp(&q.0.lambda));
    let spread = points
        .iter()
        .map(|p| p.energy)
        .fold(f64::NEG_INFINITY, f64::max)
        - points
            .iter()
            .map(|p| p.energy)
            .fold(f64::INFINITY, f64::min);
    let scale = points.iter().map(|p| p.energy.abs()).fold(1.0, f64::max);
    if spread <= 1e-14 * scale {
        let e = points[0].energy;
        return Some(ZneFit {
            e0: e,
            kind: FitKind::Exponential,
            used: FitKind::Exponential,
            fallback: false,
            params: vec![e, 0.0, 0.0],
            residual_norm: residual_norm(points, |_| e),
            e0_stderr: propagated(
                &DMatrix::from_fn(points.len(), 1, |i, _| w[i].sqrt()),
                &DVector::from_element(1, 1.0),
            ),
            iterations: 0,
        });
    }

    let slope = |p: &ZnePoint, q: &ZnePoint| {
        (
            (q.energy - p.energy) / (q.lambda - p.lambda),
            (p.lambda + q.lambda) / 2.0,
        )
    };
    let k = sorted.len();
    let (s1, m1) = slope(&sorted[0].0, &sorted[1].0);
    let (s2, m2) = slope(&sorted[k - 2].0, &sorted[k - 1].0);
    let ratio = s2 / s1;
    if !(ratio > 0.0 && ratio.is_finite() && (ratio - 1.0).abs() > 1e-12) {
        return None;
    }
    let c0 = -ratio.ln() / (m2 - m1);

    let a = DMatrix::from_fn(k, 2, |i, j| {
        let x = if j == 0 {
            1.0
        } else {
            (-c0 * sorted[i].0.lambda).exp()
        };
        x * sorted[i].1.sqrt()
    });
    let y = DVector::from_fn(k, |i, _| sorted[i].0.energy * sorted[i].1.sqrt());
    let ab = a.svd(true, true).solve(&y, 1e-14).ok()?;
    let mut p = Vector3::new(ab[0], ab[1], c0);

    let residuals = |p: &Vector3<f64>| -> Vec<f64> {
        points
            .iter()
            .zip(w)
            .map(|(pt, wi)| wi.sqrt() * (p[0] + p[1] * (-p[2] * pt.lambda).exp() - pt.energy))
            .collect()
    };
    let cost = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>();
    let mut r = residuals(&p);
    let mut f = cost(&r);
    let mut mu = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITER {
        iterations += 1;
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        for ((pt, wi), ri) in points.iter().zip(w).zip(&r) {
            let e = (-p[2] * pt.lambda).exp();
            let j = Vector3::new(1.0, e, -p[1] * pt.lambda * e) * wi.sqrt();
            jtj += j * j.transpose();
            jtr += j * *ri;
        }
        if f <= 1e-30 * scale * scale || jtr.norm() <= 1e-14 * scale * (1.0 + f.sqrt()) {
            converged = true;
            break;
        }
        let mut damped = jtj;
        for d in 0..3 {
            damped[(d, d)] += mu * jtj[(d, d)].max(1e-12);
        }
        let Some(step) = damped.lu().solve(&(-jtr)) else {
            mu *= 10.0;
            continue;
        };
        let trial = p + step;
        let r_trial = residuals(&trial);
        let f_trial = cost(&r_trial);
        if f_trial.is_finite() && f_trial < f {
            let small = step.norm() <= 1e-12 * (p.norm() + 1e-12);
            p = trial;
            r = r_trial;
            f = f_trial;
            mu = (mu / 10.0).max(1e-12);
            if small {
                converged = true;
                break;
            }
        } else {
            mu *= 10.0;
            if mu > 1e16 {
                break;
            }
        }
    }
    let e0 = p[0] + p[1];
    if !converged || !e0.is_finite() {
        return None;
    }
    let wj = DMatrix::from_fn(points.len(), 3, |i, j| {
        let (x, e) = (points[i].lambda, (-p[2] * points[i].lambda).exp());
        w[i].sqrt() * [1.0, e, -p[1] * x * e][j]
    });
    Some(ZneFit {
        e0,
        e0_stderr: propagated(&wj, &DVector::from_vec(vec![1.0, 1.0, 0.0])),
        kind: FitKind::Exponential,
        used: FitKind::Exponential,
        fallback: false,
        params: vec![p[0], p[1], p[2]],
        residual_norm: residual_norm(points, |x| p[0] + p[1] * (-p[2] * x).exp()),
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(data: &[(f64, f64)]) -> Vec<ZnePoint> {
        data.iter()
            .map(|&(lambda, energy)| ZnePoint {
                lambda,
                energy,
                stderr: None,
            })
            .collect()
    }

    fn cfg(fit: FitKind) -> ZNEConfig {
        ZNEConfig {
            fit,
            ..Default::default()
        }
    }

    #[test]
    fn exact_line() {
        let fit = zne_extrapolate(
            &pts(&[(1.0, 10.0), (3.0, 8.0), (5.0, 6.0)]),
            &cfg(FitKind::Linear),
        )
        .unwrap();
        assert!((fit.e0 - 11.0).abs() < 1e-12);
        assert!(fit.residual_norm < 1e-12);
    }

    #[test]
    fn flat_data_for_every_form() {
        for kind in [FitKind::Linear, FitKind::Quadratic, FitKind::Exponential] {
            let fit = zne_extrapolate(&pts(&[(1.0, -1.3), (3.0, -1.3), (5.0, -1.3)]), &cfg(kind))
                .unwrap();
            assert!((fit.e0 + 1.3).abs() < 1e-12, "{kind}");
            assert!(!fit.fallback);
        }
    }

    #[test]
    fn exponential_decay_recovered() {
        let e = |l: f64| -2.0 + 0.5 * (-0.3 * l).exp();
        let data: Vec<(f64, f64)> = [1.0, 3.0, 5.0].iter().map(|&l| (l, e(l))).collect();
        let fit = zne_extrapolate(&pts(&data), &cfg(FitKind::Exponential)).unwrap();
        assert!(!fit.fallback);
        assert!((fit.e0 + 1.5).abs() < 1e-6, "{}", fit.e0);
    }

    #[test]
    fn exponential_on_a_line_falls_back() {
        let fit = zne_extrapolate(
            &pts(&[(1.0, 10.0), (3.0, 8.0), (5.0, 6.0)]),
            &cfg(FitKind::Exponential),
        )
        .unwrap();
        assert!(fit.fallback);
        assert_eq!(fit.used, FitKind::Linear);
        assert!((fit.e0 - 11.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_interpolates() {
        let q = |l: f64| 1.0 - 0.5 * l + 0.25 * l * l;
        let data: Vec<(f64, f64)> = [1.0, 3.0, 5.0].iter().map(|&l| (l, q(l))).collect();
        let fit = zne_extrapolate(&pts(&data), &cfg(FitKind::Quadratic)).unwrap();
        assert!((fit.e0 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn degenerate_inputs_rejected() {
        assert!(zne_extrapolate(&pts(&[(1.0, 1.0)]), &cfg(FitKind::Linear)).is_err());
        assert!(
            zne_extrapolate(&pts(&[(1.0, 1.0), (3.0, 2.0)]), &cfg(FitKind::Quadratic)).is_err()
        );
        assert!(zne_extrapolate(&pts(&[(1.0, 1.0), (1.0, 2.0)]), &cfg(FitKind::Linear)).is_err());
        let bad = ZNEConfig {
            folds: vec![1, 1],
            fit: FitKind::Linear,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn intercept_error_of_a_line() {
        // equal errors σ at λ = 1, 3, 5: var(a) = σ²·Σλ² / (mΣλ² − (Σλ)²) = σ²·35/24
        let mut p = pts(&[(1.0, 1.0), (3.0, 2.0), (5.0, 3.0)]);
        for pt in &mut p {
            pt.stderr = Some(0.1);
        }
        let fit = zne_extrapolate(&p, &cfg(FitKind::Linear)).unwrap();
        assert!((fit.e0_stderr.unwrap() - 0.1 * (35.0f64 / 24.0).sqrt()).abs() < 1e-12);
        assert!(
            zne_extrapolate(&pts(&[(1.0, 1.0), (3.0, 2.0)]), &cfg(FitKind::Linear))
                .unwrap()
                .e0_stderr
                .is_none()
        );
    }

    #[test]
    fn weights_pull_the_line() {
        let mut p = pts(&[(1.0, 0.0), (3.0, 2.0), (5.0, 0.0)]);
        for (pt, s) in p.iter_mut().zip([0.01, 1.0, 0.01]) {
            pt.stderr = Some(s);
        }
        let fit = zne_extrapolate(&p, &cfg(FitKind::Linear)).unwrap();
        assert!(fit.e0.abs() < 1e-3);
    }
}
