use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{coupling_constant, Result};
use crate::analysis::half_max_width;
use crate::model::{ensure, EnsembleProfile, RamanCoupling, TransitionLine};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RamanPoint {
    pub detuning_hz: f64,
    pub optical_depth: f64,
    pub absorbed_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RamanProfile {
    pub eta_hz_per_m: f64,
    pub points: Vec<RamanPoint>,
}

impl RamanProfile {
    pub fn peak_optical_depth(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.optical_depth)
            .fold(0.0, f64::max)
    }

    /// FWHM of the absorbed fraction versus two-photon detuning.
    pub fn absorption_fwhm(&self) -> Option<f64> {
        let xs: Vec<f64> = self.points.iter().map(|p| p.detuning_hz).collect();
        let ys: Vec<f64> = self.points.iter().map(|p| p.absorbed_fraction).collect();
        half_max_width(&xs, &ys)
    }

    /// FWHM of the optical depth versus two-photon detuning.
    pub fn od_fwhm(&self) -> Option<f64> {
        let xs: Vec<f64> = self.points.iter().map(|p| p.detuning_hz).collect();
        let ys: Vec<f64> = self.points.iter().map(|p| p.optical_depth).collect();
        half_max_width(&xs, &ys)
    }
}

/// Scattering-limited FWHM (Hz) of the unbroadened Raman line, `γ·Ω_c²/(4Δ²)`.
pub fn raman_linewidth(line: &TransitionLine, coupling: &RamanCoupling) -> f64 {
    let ratio = coupling.rabi_frequency / coupling.one_photon_detuning;
    0.25 * line.gamma * ratio * ratio
}

/// Steady-state weak-probe absorption of the gradient-broadened Raman line.
///
/// Each slice `dz` contributes a Lorentzian of FWHM [`raman_linewidth`]
/// centred on its local shift `η·(z − z_c)`; the slices add up in optical
/// depth. For a linear gradient the sum has the closed form used here.
/// Detunings run symmetrically over `±scan_range/2`.
pub fn raman_line_scan(
    ensemble: &EnsembleProfile,
    line: &TransitionLine,
    coupling: &RamanCoupling,
    eta: f64,
    scan_range: f64,
    n_points: usize,
) -> Result<RamanProfile> {
    ensemble.validate()?;
    line.validate()?;
    coupling.validate()?;
    ensure(n_points >= 8, "n_points", n_points as f64, "must be >= 8")?;
    ensure(
        scan_range > 0.0 && scan_range.is_finite(),
        "scan_range_hz",
        scan_range,
        "must be > 0",
    )?;
    ensure(eta.is_finite(), "eta_hz_per_m", eta, "must be finite")?;
    let kappa = coupling_constant(ensemble, line, coupling)?;
    let k2 = kappa * kappa;
    let length = ensemble.length;
    // Amplitude damping of the coherence giving the Lorentzian FWHM in Hz.
    let damping = PI * raman_linewidth(line, coupling);
    let half = 0.5 * length;

    let od_at = |delta: f64| -> f64 {
        if k2 == 0.0 {
            return 0.0;
        }
        if eta == 0.0 {
            return 2.0 * k2 * length * damping / (damping * damping + 4.0 * PI * PI * delta * delta);
        }
        let upper = 2.0 * PI * (eta * half - delta) / damping;
        let lower = 2.0 * PI * (-eta * half - delta) / damping;
        k2 / (PI * eta) * (upper.atan() - lower.atan())
    };

    let points = (0..n_points)
        .map(|i| {
            let detuning = -0.5 * scan_range + scan_range * i as f64 / (n_points - 1) as f64;
            let od = od_at(detuning);
            RamanPoint {
                detuning_hz: detuning,
                optical_depth: od,
                absorbed_fraction: -(-od).exp_m1(),
            }
        })
        .collect();
    Ok(RamanProfile {
        eta_hz_per_m: eta,
        points,
    })
}
