//! Energy-gap improvement metrics.

use serde::{Deserialize, Serialize};

use super::zne::{zne_extrapolate, ZNEConfig, ZneFit, ZnePoint};
use crate::error::{Error, Result};

/// Gap below which the baseline counts as already ideal.
pub fn gap_guard(e_ideal: f64) -> f64 {
    1e-6 * e_ideal.abs().max(1.0)
}

/// Percentage reduction of the gap to `e_ideal`,
/// `100·(1 − |E_mit − E_ideal| / |E_base − E_ideal|)`. `None` when the
/// baseline gap is below [`gap_guard`].
pub fn improvement_percent(e_ideal: f64, e_baseline: f64, e_mitigated: f64) -> Result<Option<f64>> {
    if ![e_ideal, e_baseline, e_mitigated]
        .iter()
        .all(|x| x.is_finite())
    {
        return Err(Error::InvalidArgument(format!(
            "non-finite energy in ({e_ideal}, {e_baseline}, {e_mitigated})"
        )));
    }
    let base = (e_baseline - e_ideal).abs();
    if base < gap_guard(e_ideal) {
        return Ok(None);
    }
    Ok(Some(100.0 * (1.0 - (e_mitigated - e_ideal).abs() / base)))
}

/// Median of the finite values; the mean of the middle pair for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    })
}

/// One measured energy per fold count, for a single DD setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldEnergy {
    pub k: usize,
    pub energy: f64,
    pub stderr: f64,
}

fn extrapolate(folds: &[FoldEnergy], config: &ZNEConfig) -> Result<ZneFit> {
    let points: Vec<ZnePoint> = config
        .folds
        .iter()
        .map(|&k| {
            folds
                .iter()
                .find(|f| f.k == k)
                .map(|f| ZnePoint {
                    lambda: (1 + 2 * k) as f64,
                    energy: f.energy,
                    stderr: Some(f.stderr),
                })
                .ok_or_else(|| Error::InvalidArgument(format!("no energy for fold count {k}")))
        })
        .collect::<Result<_>>()?;
    zne_extrapolate(&points, config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Improvements {
    pub zne: Option<f64>,
    pub dd: Option<f64>,
    pub dd_zne: Option<f64>,
}

/// Energies of the four strategies for one experiment, derived from the six
/// measured configurations (fold counts × DD off/on).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MitigationOutcome {
    /// Reference energy the gaps are measured against.
    pub e_ref: f64,
    pub baseline: f64,
    pub dd: f64,
    pub zne: f64,
    pub dd_zne: f64,
    pub zne_fit: ZneFit,
    pub dd_zne_fit: ZneFit,
    pub improvements: Improvements,
}

impl MitigationOutcome {
    pub fn new(
        e_ref: f64,
        plain: &[FoldEnergy],
        with_dd: &[FoldEnergy],
        config: &ZNEConfig,
    ) -> Result<Self> {
        let at_zero = |folds: &[FoldEnergy]| {
            folds
                .iter()
                .find(|f| f.k == 0)
                .map(|f| f.energy)
                .ok_or_else(|| Error::InvalidArgument("no unfolded energy".into()))
        };
        let baseline = at_zero(plain)?;
        let dd = at_zero(with_dd)?;
        let zne_fit = extrapolate(plain, config)?;
        let dd_zne_fit = extrapolate(with_dd, config)?;
        let improvements = Improvements {
            zne: improvement_percent(e_ref, baseline, zne_fit.e0)?,
            dd: improvement_percent(e_ref, baseline, dd)?,
            dd_zne: improvement_percent(e_ref, baseline, dd_zne_fit.e0)?,
        };
        Ok(Self {
            e_ref,
            baseline,
            dd,
            zne: zne_fit.e0,
            dd_zne: dd_zne_fit.e0,
            zne_fit,
            dd_zne_fit,
            improvements,
        })
    }
}
