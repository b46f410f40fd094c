use serde::{Deserialize, Serialize};

use super::fit::linear_least_squares;
use super::{AnalysisError, Result};
use crate::model::BOLTZMANN_J_PER_K;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionFit {
    pub temperature_k: f64,
    pub sigma0_m: f64,
    /// Fitted `k_B·T/m`.
    pub velocity_variance_m2_per_s2: f64,
    /// True when the widths shrink with time; the temperature is then clamped to 0.
    pub unphysical: bool,
    pub warnings: Vec<String>,
}

/// Ballistic-expansion thermometry: least squares of
/// `σ(t)² = σ0² + (k_B·T/m)·t²` over `(t, σ)` samples.
pub fn temperature_from_expansion(widths: &[(f64, f64)], mass: f64) -> Result<ExpansionFit> {
    if widths.len() < 2 {
        return Err(AnalysisError::InsufficientData {
            needed: 2,
            got: widths.len(),
        });
    }
    if !(mass > 0.0) {
        return Err(AnalysisError::InvalidParameter {
            name: "mass_kg",
            value: mass,
            requirement: "must be > 0",
        });
    }
    if widths
        .iter()
        .any(|(t, s)| !t.is_finite() || !s.is_finite() || *s < 0.0)
    {
        return Err(AnalysisError::NonFinite);
    }
    let t2: Vec<f64> = widths.iter().map(|(t, _)| t * t).collect();
    if t2.iter().all(|&v| v == t2[0]) {
        return Err(AnalysisError::InvalidParameter {
            name: "t",
            value: widths[0].0,
            requirement: "needs at least two distinct expansion times",
        });
    }
    let s2: Vec<f64> = widths.iter().map(|(_, s)| s * s).collect();
    let (intercept, slope) = linear_least_squares(&t2, &s2);

    let mut warnings = Vec::new();
    let unphysical = slope < 0.0;
    if unphysical {
        warnings.push("cloud width shrinks with time; temperature clamped to 0".into());
    }
    if intercept < 0.0 {
        warnings.push("negative initial variance; sigma0 clamped to 0".into());
    }
    let variance_rate = slope.max(0.0);
    Ok(ExpansionFit {
        temperature_k: variance_rate * mass / BOLTZMANN_J_PER_K,
        sigma0_m: intercept.max(0.0).sqrt(),
        velocity_variance_m2_per_s2: variance_rate,
        unphysical,
        warnings,
    })
}
