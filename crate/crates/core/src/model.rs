//! Domain types and closed-form relations for gradient echo memory.
//!
//! Every frequency in this module is an ordinary frequency in Hz. Ratios such
//! as `Ω²/Δ²` and `B/γ` do not depend on that choice; the single explicit
//! `2π` in [`raman_exponent`] is kept as-is.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Natural linewidth used for rubidium when nothing else is configured.
pub const DEFAULT_GAMMA_HZ: f64 = 6.0e6;

/// Fraction of the atoms that sit in the Zeeman sub-level used by the memory.
pub const DEFAULT_MF_USABLE_FRACTION: f64 = 0.5;

/// Mass of a single ⁸⁷Rb atom.
pub const RB87_MASS_KG: f64 = 1.443e-25;

/// Boltzmann constant (exact, SI 2019).
pub const BOLTZMANN_J_PER_K: f64 = 1.380649e-23;

/// Above this value of `Ω_c/|Δ|` the adiabatic Raman picture starts to fail.
pub const RAMAN_REGIME_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{which} intensity must be strictly positive, got {value}")]
    NonPositiveIntensity { which: &'static str, value: f64 },
    #[error("invalid `{name}` = {value}: {requirement}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },
}

pub type Result<T> = std::result::Result<T, ModelError>;

pub(crate) fn invalid(name: &'static str, value: f64, requirement: &'static str) -> ModelError {
    ModelError::InvalidParameter {
        name,
        value,
        requirement,
    }
}

pub(crate) fn ensure(
    ok: bool,
    name: &'static str,
    value: f64,
    requirement: &'static str,
) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(invalid(name, value, requirement))
    }
}

fn default_mf_fraction() -> f64 {
    DEFAULT_MF_USABLE_FRACTION
}

fn default_mass() -> f64 {
    RB87_MASS_KG
}

fn default_gamma() -> f64 {
    DEFAULT_GAMMA_HZ
}

/// The cold-atom storage medium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleProfile {
    /// Peak resonant optical depth of the probe transition.
    pub od_resonant: f64,
    #[serde(rename = "length_m")]
    pub length: f64,
    #[serde(rename = "sigma_x_m")]
    pub sigma_x: f64,
    #[serde(rename = "sigma_y_m")]
    pub sigma_y: f64,
    #[serde(rename = "sigma_z_m")]
    pub sigma_z: f64,
    #[serde(rename = "temperature_k")]
    pub temperature: f64,
    pub atom_number: f64,
    #[serde(rename = "atomic_mass_kg", default = "default_mass")]
    pub atomic_mass: f64,
    #[serde(default = "default_mf_fraction")]
    pub mf_usable_fraction: f64,
}

impl EnsembleProfile {
    pub fn validate(&self) -> Result<()> {
        ensure(
            self.od_resonant >= 0.0 && self.od_resonant.is_finite(),
            "od_resonant",
            self.od_resonant,
            "must be finite and >= 0",
        )?;
        ensure(
            self.length > 0.0 && self.length.is_finite(),
            "length_m",
            self.length,
            "must be > 0",
        )?;
        for (name, v) in [
            ("sigma_x_m", self.sigma_x),
            ("sigma_y_m", self.sigma_y),
            ("sigma_z_m", self.sigma_z),
        ] {
            ensure(v > 0.0 && v.is_finite(), name, v, "must be > 0")?;
        }
        ensure(
            self.temperature >= 0.0,
            "temperature_k",
            self.temperature,
            "must be >= 0",
        )?;
        ensure(
            self.atom_number >= 0.0,
            "atom_number",
            self.atom_number,
            "must be >= 0",
        )?;
        ensure(
            self.atomic_mass > 0.0,
            "atomic_mass_kg",
            self.atomic_mass,
            "must be > 0",
        )?;
        ensure(
            (0.0..=1.0).contains(&self.mf_usable_fraction),
            "mf_usable_fraction",
            self.mf_usable_fraction,
            "must lie in [0, 1]",
        )
    }

    /// Resonant optical depth seen by the memory transition.
    pub fn effective_od(&self) -> f64 {
        self.od_resonant * self.mf_usable_fraction
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionLine {
    /// Excited-state decay rate (natural linewidth).
    #[serde(rename = "gamma_hz", default = "default_gamma")]
    pub gamma: f64,
    /// Measured shift of the true line centre from the nominal zero.
    #[serde(rename = "center_offset_hz", default)]
    pub center_offset: f64,
}

impl Default for TransitionLine {
    fn default() -> Self {
        Self {
            gamma: DEFAULT_GAMMA_HZ,
            center_offset: 0.0,
        }
    }
}

impl TransitionLine {
    pub fn validate(&self) -> Result<()> {
        ensure(
            self.gamma > 0.0 && self.gamma.is_finite(),
            "gamma_hz",
            self.gamma,
            "must be > 0",
        )?;
        ensure(
            self.center_offset.is_finite(),
            "center_offset_hz",
            self.center_offset,
            "must be finite",
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RamanCoupling {
    #[serde(rename = "rabi_frequency_hz")]
    pub rabi_frequency: f64,
    #[serde(rename = "one_photon_detuning_hz")]
    pub one_photon_detuning: f64,
    #[serde(rename = "two_photon_detuning_hz", default)]
    pub two_photon_detuning: f64,
}

impl RamanCoupling {
    pub fn validate(&self) -> Result<()> {
        ensure(
            self.rabi_frequency >= 0.0 && self.rabi_frequency.is_finite(),
            "rabi_frequency_hz",
            self.rabi_frequency,
            "must be finite and >= 0",
        )?;
        ensure(
            self.one_photon_detuning.is_finite() && self.one_photon_detuning != 0.0,
            "one_photon_detuning_hz",
            self.one_photon_detuning,
            "must be finite and nonzero",
        )?;
        ensure(
            self.two_photon_detuning.is_finite(),
            "two_photon_detuning_hz",
            self.two_photon_detuning,
            "must be finite",
        )
    }

    /// `Ω_c / |Δ|`; the Raman formulas assume this is small.
    pub fn adiabaticity(&self) -> f64 {
        self.rabi_frequency / self.one_photon_detuning.abs()
    }
}

/// How the coil current approaches the read value after the switch command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SettleModel {
    /// Straight ramp centred on the switch time.
    #[default]
    Linear,
    /// First-order approach that reaches `settle_tolerance` after `settle_duration`.
    Exponential,
}

fn default_settle_duration() -> f64 {
    1.5e-6
}

fn default_settle_tolerance() -> f64 {
    0.01
}

/// Piecewise frequency gradient: `eta_write` until the switch, then `eta_read`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradientSchedule {
    #[serde(rename = "eta_write_hz_per_m")]
    pub eta_write: f64,
    #[serde(rename = "eta_read_hz_per_m")]
    pub eta_read: f64,
    /// Delay between pulse-centre arrival and gradient reversal (`t_s`).
    #[serde(rename = "switch_time_s")]
    pub switch_time: f64,
    #[serde(rename = "settle_duration_s", default = "default_settle_duration")]
    pub settle_duration: f64,
    #[serde(default = "default_settle_tolerance")]
    pub settle_tolerance: f64,
    #[serde(default)]
    pub settle_model: SettleModel,
}

impl GradientSchedule {
    /// Checks the parts of the schedule that any simulation needs.
    pub fn validate(&self) -> Result<()> {
        ensure(
            self.eta_write.is_finite(),
            "eta_write_hz_per_m",
            self.eta_write,
            "must be finite",
        )?;
        ensure(
            self.eta_read.is_finite(),
            "eta_read_hz_per_m",
            self.eta_read,
            "must be finite",
        )?;
        ensure(
            self.switch_time.is_finite(),
            "switch_time_s",
            self.switch_time,
            "must be finite",
        )?;
        ensure(
            self.settle_duration >= 0.0 && self.settle_duration.is_finite(),
            "settle_duration_s",
            self.settle_duration,
            "must be >= 0",
        )?;
        ensure(
            self.settle_tolerance > 0.0 && self.settle_tolerance < 1.0,
            "settle_tolerance",
            self.settle_tolerance,
            "must lie in (0, 1)",
        )
    }

    /// Storage and recall additionally need both gradients nonzero and opposed.
    pub fn validate_for_recall(&self) -> Result<()> {
        self.validate()?;
        ensure(
            self.eta_write != 0.0,
            "eta_write_hz_per_m",
            self.eta_write,
            "must be nonzero for storage",
        )?;
        ensure(
            self.eta_read != 0.0,
            "eta_read_hz_per_m",
            self.eta_read,
            "must be nonzero for recall",
        )?;
        ensure(
            self.eta_read.signum() == -self.eta_write.signum(),
            "eta_read_hz_per_m",
            self.eta_read,
            "must have the opposite sign to eta_write_hz_per_m (gradient flip)",
        )
    }

    /// Gradient at `time_since_switch` (negative before the switch).
    pub fn gradient_at(&self, time_since_switch: f64) -> f64 {
        let (w, r) = (self.eta_write, self.eta_read);
        match self.settle_model {
            SettleModel::Linear => {
                let half = 0.5 * self.settle_duration;
                if half == 0.0 {
                    if time_since_switch < 0.0 {
                        w
                    } else {
                        r
                    }
                } else if time_since_switch <= -half {
                    w
                } else if time_since_switch >= half {
                    r
                } else {
                    let frac = (time_since_switch + half) / self.settle_duration;
                    w + (r - w) * frac
                }
            }
            SettleModel::Exponential => {
                if time_since_switch < 0.0 {
                    w
                } else if self.settle_duration == 0.0 {
                    r
                } else {
                    let time_constant = self.settle_duration / (1.0 / self.settle_tolerance).ln();
                    r + (w - r) * (-time_since_switch / time_constant).exp()
                }
            }
        }
    }

    pub fn largest_gradient(&self) -> f64 {
        self.eta_write.abs().max(self.eta_read.abs())
    }
}

/// Efficiency summary for a single storage and recall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub storage_efficiency: f64,
    pub recall_efficiency: f64,
    pub total_efficiency: f64,
    pub leakage_fraction: f64,
    pub delay_bandwidth_product: f64,
}

impl EfficiencyReport {
    /// Checks the range and ordering invariants of the report.
    pub fn is_consistent(&self) -> bool {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        unit(self.storage_efficiency)
            && unit(self.recall_efficiency)
            && unit(self.total_efficiency)
            && unit(self.leakage_fraction)
            && self.delay_bandwidth_product >= 0.0
            && self.total_efficiency <= self.storage_efficiency
    }
}

/// Optical depth from transmitted and reference intensities, `ln(I_o / I_t)`.
///
/// Absorption gives a positive value; a transmitted intensity above the
/// reference (gain, or imaging noise) gives a negative one, which is returned
/// unchanged.
pub fn beer_lambert_od(i_transmitted: f64, i_reference: f64) -> Result<f64> {
    if !(i_transmitted > 0.0) {
        return Err(ModelError::NonPositiveIntensity {
            which: "transmitted",
            value: i_transmitted,
        });
    }
    if !(i_reference > 0.0) {
        return Err(ModelError::NonPositiveIntensity {
            which: "reference",
            value: i_reference,
        });
    }
    Ok((i_reference / i_transmitted).ln())
}

/// Forward Beer model: intensity left after an optical depth `od`.
pub fn transmitted_intensity(i_reference: f64, od: f64) -> f64 {
    i_reference * (-od).exp()
}

/// Factor relating a detuned optical depth to the resonant one:
/// `OD_res = factor · OD_Δ` with `factor = (Δ² + γ²/4) / (γ²/4)`.
pub fn resonance_scale_factor(delta: f64, gamma: f64) -> Result<f64> {
    ensure(gamma > 0.0, "gamma_hz", gamma, "must be > 0")?;
    let quarter = 0.25 * gamma * gamma;
    Ok((delta * delta + quarter) / quarter)
}

/// Memory bandwidth `|η| · l`.
pub fn memory_bandwidth(eta: f64, length: f64) -> Result<f64> {
    ensure(length > 0.0, "length_m", length, "must be > 0")?;
    Ok(eta.abs() * length)
}

/// Gradient magnitude that produces `bandwidth` across a medium of `length`.
pub fn gradient_for_bandwidth(bandwidth: f64, length: f64) -> Result<f64> {
    ensure(length > 0.0, "length_m", length, "must be > 0")?;
    ensure(bandwidth >= 0.0, "bandwidth_hz", bandwidth, "must be >= 0")?;
    Ok(bandwidth / length)
}

/// Effective Raman optical depth of the gradient-broadened line,
/// `2π · (OD / B′) · (Ω_c² / Δ²)` with `B′ = B / γ`.
///
/// The optical depth used is [`EnsembleProfile::effective_od`]. The storage
/// efficiency is `1 − exp(−exponent)`.
pub fn raman_exponent(
    ensemble: &EnsembleProfile,
    line: &TransitionLine,
    coupling: &RamanCoupling,
    bandwidth: f64,
) -> Result<f64> {
    ensure(bandwidth > 0.0, "bandwidth_hz", bandwidth, "must be > 0")?;
    ensure(line.gamma > 0.0, "gamma_hz", line.gamma, "must be > 0")?;
    ensure(
        coupling.one_photon_detuning != 0.0,
        "one_photon_detuning_hz",
        coupling.one_photon_detuning,
        "must be nonzero in the Raman regime",
    )?;
    if coupling.adiabaticity() > RAMAN_REGIME_LIMIT {
        log::warn!(
            "Omega_c/|Delta| = {:.3} exceeds {RAMAN_REGIME_LIMIT}; far-detuned Raman formula is approximate",
            coupling.adiabaticity()
        );
    }
    let normalised_bandwidth = bandwidth / line.gamma;
    let ratio = coupling.rabi_frequency / coupling.one_photon_detuning;
    Ok(2.0 * std::f64::consts::PI * ensemble.effective_od() / normalised_bandwidth * ratio * ratio)
}

/// Fraction of a pulse absorbed by a line of optical depth `exponent`.
pub fn storage_efficiency(exponent: f64) -> Result<f64> {
    ensure(exponent >= 0.0, "exponent", exponent, "must be >= 0")?;
    Ok(-(-exponent).exp_m1())
}

/// Write efficiency × read efficiency × exponential loss over the storage time.
pub fn total_efficiency_estimate(
    eps_write: f64,
    eps_read: f64,
    tau: f64,
    storage_time: f64,
) -> Result<f64> {
    ensure(
        (0.0..=1.0).contains(&eps_write),
        "eps_write",
        eps_write,
        "must lie in [0, 1]",
    )?;
    ensure(
        (0.0..=1.0).contains(&eps_read),
        "eps_read",
        eps_read,
        "must lie in [0, 1]",
    )?;
    ensure(tau > 0.0, "tau_s", tau, "must be > 0")?;
    ensure(
        storage_time >= 0.0,
        "storage_time_s",
        storage_time,
        "must be >= 0",
    )?;
    if storage_time == 0.0 {
        return Ok(eps_write * eps_read);
    }
    Ok(eps_write * eps_read * (-storage_time / tau).exp())
}

pub fn delay_bandwidth_product(tau: f64, bandwidth: f64) -> Result<f64> {
    ensure(tau >= 0.0, "tau_s", tau, "must be >= 0")?;
    ensure(bandwidth >= 0.0, "bandwidth_hz", bandwidth, "must be >= 0")?;
    Ok(tau * bandwidth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    pub(crate) fn reference_ensemble() -> EnsembleProfile {
        EnsembleProfile {
            od_resonant: 300.0,
            length: 5.0e-3,
            sigma_x: 0.3e-3,
            sigma_y: 0.3e-3,
            sigma_z: 2.5e-3,
            temperature: 200e-6,
            atom_number: 4e9,
            atomic_mass: RB87_MASS_KG,
            mf_usable_fraction: 0.5,
        }
    }

    fn reference_coupling() -> RamanCoupling {
        RamanCoupling {
            rabi_frequency: 2.0e6,
            one_photon_detuning: 250e6,
            two_photon_detuning: 0.0,
        }
    }

    #[test]
    fn beer_lambert_examples() {
        assert_relative_eq!(
            beer_lambert_od(13.53, 100.0).unwrap(),
            2.000,
            epsilon = 5e-4
        );
        assert_eq!(beer_lambert_od(100.0, 100.0).unwrap(), 0.0);
        assert_relative_eq!(
            beer_lambert_od(100.0, 50.0).unwrap(),
            -0.693,
            epsilon = 5e-4
        );
    }

    #[test]
    fn beer_lambert_names_the_bad_input() {
        match beer_lambert_od(0.0, 1.0) {
            Err(ModelError::NonPositiveIntensity { which, .. }) => assert_eq!(which, "transmitted"),
            other => panic!("unexpected {other:?}"),
        }
        match beer_lambert_od(1.0, -2.0) {
            Err(ModelError::NonPositiveIntensity { which, .. }) => assert_eq!(which, "reference"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn scale_factors_match_imaging_calibration() {
        let minus = resonance_scale_factor(60.8e6, 6e6).unwrap();
        let plus = resonance_scale_factor(59.2e6, 6e6).unwrap();
        assert_relative_eq!(minus, 411.7378, epsilon = 1e-3);
        assert_relative_eq!(plus, 390.4044, epsilon = 1e-3);
        assert!((minus - 410.0).abs() / 410.0 < 0.01);
        assert!((plus - 390.0).abs() / 390.0 < 0.01);
        assert_eq!(resonance_scale_factor(0.0, 6e6).unwrap(), 1.0);
        assert!(resonance_scale_factor(1.0, 0.0).is_err());
    }

    #[test]
    fn bandwidth_and_inverse() {
        assert_relative_eq!(memory_bandwidth(1.0e7, 5.0e-3).unwrap(), 5.0e4);
        assert_eq!(memory_bandwidth(0.0, 5.0e-3).unwrap(), 0.0);
        assert_relative_eq!(gradient_for_bandwidth(50e3, 5e-3).unwrap(), 1.0e7);
        assert!(memory_bandwidth(1.0, 0.0).is_err());
    }

    #[test]
    fn raman_exponent_examples() {
        let ens = reference_ensemble();
        let line = TransitionLine::default();
        let mut coupling = reference_coupling();
        let x = raman_exponent(&ens, &line, &coupling, 50e3).unwrap();
        assert_relative_eq!(x, 7.238229, epsilon = 1e-5);
        coupling.rabi_frequency = 0.0;
        assert_eq!(raman_exponent(&ens, &line, &coupling, 50e3).unwrap(), 0.0);
        assert!(raman_exponent(&ens, &line, &coupling, 0.0).is_err());
    }

    #[test]
    fn leakage_exponent_from_two_percent() {
        let x = -(0.02f64).ln();
        assert_relative_eq!(x, 3.912, epsilon = 5e-4);
        assert_relative_eq!(storage_efficiency(x).unwrap(), 0.98, epsilon = 1e-12);
    }

    #[test]
    fn storage_efficiency_examples() {
        assert_eq!(storage_efficiency(0.0).unwrap(), 0.0);
        assert_relative_eq!(storage_efficiency(3.912).unwrap(), 0.980, epsilon = 5e-4);
        assert_relative_eq!(storage_efficiency(7.238).unwrap(), 0.99928, epsilon = 5e-6);
        assert!(storage_efficiency(-0.1).is_err());
    }

    #[test]
    fn total_efficiency_examples() {
        let crosscheck = total_efficiency_estimate(0.98, 0.98, 117e-6, 20e-6).unwrap();
        assert_relative_eq!(crosscheck, 0.8095, epsilon = 1e-4);
        assert_eq!(total_efficiency_estimate(1.0, 1.0, 1e-3, 0.0).unwrap(), 1.0);
        assert_relative_eq!(
            total_efficiency_estimate(0.9, 0.8, 100e-6, 100e-6).unwrap(),
            0.2649,
            epsilon = 1e-4
        );
        assert!(total_efficiency_estimate(1.1, 0.5, 1e-3, 0.0).is_err());
        assert!(total_efficiency_estimate(0.5, 0.5, 0.0, 0.0).is_err());
    }

    #[test]
    fn delay_bandwidth_examples() {
        assert_relative_eq!(delay_bandwidth_product(117e-6, 50e3).unwrap(), 5.85);
        assert_eq!(delay_bandwidth_product(0.0, 50e3).unwrap(), 0.0);
        assert_relative_eq!(delay_bandwidth_product(195e-6, 100e3).unwrap(), 19.5);
    }

    #[test]
    fn recall_requires_opposed_gradients() {
        let mut s = GradientSchedule {
            eta_write: 1e7,
            eta_read: -1e7,
            switch_time: 30e-6,
            settle_duration: 1.5e-6,
            settle_tolerance: 0.01,
            settle_model: SettleModel::Linear,
        };
        assert!(s.validate_for_recall().is_ok());
        s.eta_read = 1e7;
        match s.validate_for_recall() {
            Err(ModelError::InvalidParameter { name, .. }) => assert_eq!(name, "eta_read_hz_per_m"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn linear_ramp_crosses_zero_at_switch() {
        let s = GradientSchedule {
            eta_write: 1e7,
            eta_read: -1e7,
            switch_time: 30e-6,
            settle_duration: 1.5e-6,
            settle_tolerance: 0.01,
            settle_model: SettleModel::Linear,
        };
        assert_eq!(s.gradient_at(-1e-6), 1e7);
        assert_eq!(s.gradient_at(0.0), 0.0);
        assert_eq!(s.gradient_at(1e-6), -1e7);
    }

    #[test]
    fn exponential_settle_hits_tolerance() {
        let s = GradientSchedule {
            eta_write: 1e7,
            eta_read: -1e7,
            switch_time: 30e-6,
            settle_duration: 1.5e-6,
            settle_tolerance: 0.01,
            settle_model: SettleModel::Exponential,
        };
        let residual = (s.gradient_at(1.5e-6) - s.eta_read) / (s.eta_write - s.eta_read);
        assert_relative_eq!(residual, 0.01, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn scale_factor_is_even_and_at_least_one(delta in -1e9f64..1e9, gamma in 1e3f64..1e8) {
            let f = resonance_scale_factor(delta, gamma).unwrap();
            prop_assert!(f >= 1.0);
            prop_assert_eq!(f, resonance_scale_factor(-delta, gamma).unwrap());
            if delta != 0.0 {
                prop_assert!(f > 1.0);
            }
        }

        #[test]
        fn beer_lambert_inverts_forward_model(od in 0.0f64..10.0, i0 in 1.0f64..1e5) {
            let it = transmitted_intensity(i0, od);
            let back = beer_lambert_od(it, i0).unwrap();
            prop_assert!((back - od).abs() <= 1e-12 * od.max(1.0));
        }

        #[test]
        fn symmetric_recall_squares(x in 0.0f64..=1.0, tau in 1e-6f64..1e-2) {
            prop_assert_eq!(total_efficiency_estimate(x, x, tau, 0.0).unwrap(), x * x);
        }
    }

    #[test]
    fn storage_efficiency_monotone_on_grid() {
        let line = TransitionLine::default();
        let eps = |od: f64, rabi: f64, b: f64, delta: f64| {
            let mut ens = reference_ensemble();
            ens.od_resonant = od;
            let c = RamanCoupling {
                rabi_frequency: rabi,
                one_photon_detuning: delta,
                two_photon_detuning: 0.0,
            };
            storage_efficiency(raman_exponent(&ens, &line, &c, b).unwrap()).unwrap()
        };
        let ods = [20.0, 50.0, 100.0];
        let rabis = [0.5e6, 1.0e6, 1.5e6];
        let bands = [200e3, 400e3, 800e3];
        let deltas = [150e6, 250e6, 400e6];
        for &od in &ods {
            for &r in &rabis {
                for &b in &bands {
                    for &d in &deltas {
                        let base = eps(od, r, b, d);
                        assert!(eps(od * 1.5, r, b, d) > base);
                        assert!(eps(od, r * 1.2, b, d) > base);
                        assert!(eps(od, r, b * 1.5, d) < base);
                        assert!(eps(od, r, b, d * 1.5) < base);
                        assert!(eps(od, r, b, -d * 1.5) < base);
                    }
                }
            }
        }
    }
}
