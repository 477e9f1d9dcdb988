//! Power-law fits of norm decay.

use serde::{Deserialize, Serialize};

use super::norms::NormKind;
use crate::error::{Error, Result};
use crate::hypotheses::least_squares;

/// Fewest samples accepted inside a fit window.
pub const MIN_FIT_SAMPLES: usize = 8;

/// Least-squares fit `ln norm = exponent ln(1+t) + intercept` over a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub norm_kind: NormKind,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: [f64; 2],
}

/// The last two decades of `[0, t_max]`, never starting before `t = 10`.
pub fn default_window(t_max: f64) -> [f64; 2] {
    [(t_max / 100.0).max(10.0), t_max]
}

pub fn fit_power_law(kind: NormKind, samples: &[(f64, f64)], window: [f64; 2]) -> Result<DecayFit> {
    let (lo, hi) = (window[0], window[1]);
    let picked: Vec<(f64, f64)> = samples
        .iter()
        .copied()
        .filter(|&(t, _)| t >= lo && t <= hi)
        .collect();
    if picked.len() < MIN_FIT_SAMPLES {
        return Err(Error::DegenerateFit(format!(
            "{} samples in window [{lo}, {hi}], need at least {MIN_FIT_SAMPLES}",
            picked.len()
        )));
    }
    if let Some(&(t, _)) = picked.iter().find(|&&(_, v)| v == 0.0) {
        return Err(Error::ZeroNorm { t });
    }
    if picked.iter().any(|&(t, v)| !(v > 0.0) || !t.is_finite()) {
        return Err(Error::DegenerateFit("norms must be positive and finite".into()));
    }
    let xs: Vec<f64> = picked.iter().map(|&(t, _)| t.ln_1p()).collect();
    let ys: Vec<f64> = picked.iter().map(|&(_, v)| v.ln()).collect();
    let (exponent, intercept, r_squared) = least_squares(&xs, &ys)
        .ok_or_else(|| Error::DegenerateFit("sample times do not vary".into()))?;
    Ok(DecayFit {
        norm_kind: kind,
        times: picked.iter().map(|s| s.0).collect(),
        norms: picked.iter().map(|s| s.1).collect(),
        exponent,
        intercept,
        r_squared,
        window,
    })
}
