//! Time-domain integration of the linearised gradient echo equations.
//!
//! In the co-moving frame, with the excited state adiabatically eliminated,
//! the probe envelope `E(z, t)` and the ground-state coherence `S(z, t)` obey
//!
//! ```text
//! ∂t S = −[Γ(t) + i·2π·(η(t)·(z − z_c) + δ)]·S + i·κ(t)·E
//! ∂z E = i·κ(t)·S
//! ```
//!
//! `E` carries no time derivative, so at every evaluation it is rebuilt from
//! the input boundary value by cumulative trapezoid integration over a
//! uniform grid on `[0, l]`; `S` is advanced with classic fourth-order
//! Runge–Kutta. With these normalisations `∫|E(0,t)|² dt` is the input
//! energy, `∫|E(l,t)|² dt` the output energy and `∫|S|² dz` the stored
//! energy.
//!
//! The coupling constant satisfies `κ² = exponent · |η_write|`, which makes
//! the broadband write transmission exactly `exp(−exponent)` with `exponent`
//! from [`crate::model::raman_exponent`].

mod raman;
mod sweep;

pub use raman::{raman_line_scan, raman_linewidth, RamanPoint, RamanProfile};
pub use sweep::{sweep_storage_time, SweepPoint};

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    self, ensure, EfficiencyReport, EnsembleProfile, GradientSchedule, ModelError, RamanCoupling,
    TransitionLine,
};

/// Pulse lead-in before the centre, in units of the FWHM.
const LEAD_FWHM: f64 = 4.0;
/// Default coupling-off guard around the write and read pulses, in FWHM.
const DEFAULT_GUARD_FWHM: f64 = 1.5;
/// Energy growth above input that flags an unstable step.
const INSTABILITY_MARGIN: f64 = 0.01;
/// Echo energy (relative to input) below which no echo is reported.
const ECHO_FLOOR: f64 = 1e-6;
/// Approximate number of time rows kept in the spin-field record.
const SPIN_RECORD_ROWS: usize = 400;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("numerical instability at t = {time:e} s: energy grew beyond input; reduce dt (currently {dt:e} s)")]
    NumericalInstability { dt: f64, time: f64 },
    #[error("input energy is zero")]
    ZeroInputEnergy,
    #[error("run with switch time {switch_time:e} s failed: {source}")]
    SweepRun {
        switch_time: f64,
        source: Box<SolverError>,
    },
}

pub type Result<T> = std::result::Result<T, SolverError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PulseShape {
    Gaussian,
    /// Amplitude samples at times relative to the pulse centre; linear
    /// interpolation in between, zero outside.
    Sampled {
        times_s: Vec<f64>,
        amplitudes: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbePulse {
    pub shape: PulseShape,
    /// Intensity full width at half maximum.
    #[serde(rename = "fwhm_s")]
    pub fwhm: f64,
    pub peak_amplitude: f64,
    #[serde(rename = "center_time_s", default)]
    pub center_time: f64,
    #[serde(rename = "two_photon_offset_hz", default)]
    pub two_photon_offset: f64,
}

impl ProbePulse {
    pub fn gaussian(fwhm: f64, peak_amplitude: f64) -> Self {
        Self {
            shape: PulseShape::Gaussian,
            fwhm,
            peak_amplitude,
            center_time: 0.0,
            two_photon_offset: 0.0,
        }
    }

    pub fn validate(&self) -> model::Result<()> {
        ensure(
            self.fwhm > 0.0 && self.fwhm.is_finite(),
            "fwhm_s",
            self.fwhm,
            "must be > 0",
        )?;
        ensure(
            self.peak_amplitude.is_finite(),
            "peak_amplitude",
            self.peak_amplitude,
            "must be finite",
        )?;
        ensure(
            self.center_time.is_finite(),
            "center_time_s",
            self.center_time,
            "must be finite",
        )?;
        if let PulseShape::Sampled { times_s, amplitudes } = &self.shape {
            ensure(
                times_s.len() == amplitudes.len() && times_s.len() >= 2,
                "times_s",
                times_s.len() as f64,
                "needs at least two samples, one amplitude per time",
            )?;
            ensure(
                times_s.windows(2).all(|w| w[1] > w[0]),
                "times_s",
                f64::NAN,
                "must be strictly increasing",
            )?;
            ensure(
                amplitudes.iter().all(|a| a.is_finite()),
                "amplitudes",
                f64::NAN,
                "must be finite",
            )?;
        }
        Ok(())
    }

    /// Field amplitude entering the medium at time `t`.
    pub fn amplitude(&self, t: f64) -> f64 {
        let tau = t - self.center_time;
        match &self.shape {
            PulseShape::Gaussian => {
                self.peak_amplitude * (-2.0 * LN_2 * tau * tau / (self.fwhm * self.fwhm)).exp()
            }
            PulseShape::Sampled { times_s, amplitudes } => {
                let n = times_s.len();
                if tau < times_s[0] || tau > times_s[n - 1] {
                    return 0.0;
                }
                let i = times_s.partition_point(|&x| x <= tau).clamp(1, n - 1);
                let (t0, t1) = (times_s[i - 1], times_s[i]);
                let f = (tau - t0) / (t1 - t0);
                self.peak_amplitude * (amplitudes[i - 1] + f * (amplitudes[i] - amplitudes[i - 1]))
            }
        }
    }

    fn lead_time(&self) -> f64 {
        match &self.shape {
            PulseShape::Gaussian => LEAD_FWHM * self.fwhm,
            PulseShape::Sampled { times_s, .. } => (-times_s[0]).max(0.0),
        }
    }

    fn tail_time(&self) -> f64 {
        match &self.shape {
            PulseShape::Gaussian => LEAD_FWHM * self.fwhm,
            PulseShape::Sampled { times_s, .. } => times_s[times_s.len() - 1].max(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DecayForm {
    #[default]
    Exponential,
    /// Stored energy falls as `exp(−(rate·t)²)`, the signature of thermal motion.
    Gaussian,
}

/// Phenomenological loss of spin coherence. Rates are energy decay rates:
/// a stored excitation held for `t` keeps `exp(−rate·t)` of its energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DecoherenceModel {
    #[serde(rename = "storage_rate_hz", default)]
    pub storage_rate: f64,
    #[serde(rename = "write_read_rate_hz", default)]
    pub write_read_rate: f64,
    #[serde(default)]
    pub form: DecayForm,
}

impl DecoherenceModel {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn exponential(storage_rate: f64) -> Self {
        Self {
            storage_rate,
            write_read_rate: 0.0,
            form: DecayForm::Exponential,
        }
    }

    pub fn validate(&self) -> model::Result<()> {
        ensure(
            self.storage_rate >= 0.0 && self.storage_rate.is_finite(),
            "storage_rate_hz",
            self.storage_rate,
            "must be >= 0",
        )?;
        ensure(
            self.write_read_rate >= 0.0 && self.write_read_rate.is_finite(),
            "write_read_rate_hz",
            self.write_read_rate,
            "must be >= 0",
        )
    }
}

/// When the coupling field is on. With `OffDuringHold` the coupling is
/// switched off from `guard` after the pulse centre until `guard` before the
/// expected echo, and the spin coherence decays with the storage rate there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplingGate {
    #[default]
    AlwaysOn,
    OffDuringHold {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        guard_s: Option<f64>,
    },
}

fn default_nz() -> usize {
    256
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationGrid {
    #[serde(default = "default_nz")]
    pub n_z: usize,
    /// `None` selects `min(0.05/(π·|η|·l), fwhm/200)`.
    #[serde(rename = "dt_s", default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// `None` runs until four pulse widths after the expected echo.
    #[serde(rename = "t_end_s", default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
}

impl Default for SimulationGrid {
    fn default() -> Self {
        Self {
            n_z: default_nz(),
            dt: None,
            t_end: None,
        }
    }
}

/// Everything a storage-and-recall run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct MemorySetup {
    pub ensemble: EnsembleProfile,
    pub line: TransitionLine,
    pub coupling: RamanCoupling,
    pub pulse: ProbePulse,
    pub schedule: GradientSchedule,
    pub decoherence: DecoherenceModel,
    pub grid: SimulationGrid,
    pub gate: CouplingGate,
}

/// Decimated record of the spin coherence.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpinRecord {
    pub times: Vec<f64>,
    pub z: Vec<f64>,
    /// `values[k][j]` is `S(z[j], times[k])`.
    pub values: Vec<Vec<Complex64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub times: Vec<f64>,
    pub probe_in: Vec<Complex64>,
    pub probe_out: Vec<Complex64>,
    /// `∫|S|² dz` at every time sample.
    pub stored_energy: Vec<f64>,
    pub spin_field: SpinRecord,
    pub input_energy: f64,
    pub leak_energy: f64,
    pub echo_energy: f64,
    pub residual_energy: f64,
    pub dissipated_energy: f64,
    /// Echo peak, measured from the pulse centre like the switch time.
    pub echo_peak_time: Option<f64>,
    /// Absolute time of the gradient switch; splits write and echo windows.
    pub switch_instant: f64,
    pub dt: f64,
    pub coupling_constant: f64,
    /// Analytic write exponent `κ²/|η_write|`.
    pub write_exponent: f64,
    pub read_exponent: f64,
}

/// `κ` such that `κ²/|η|` equals the Raman exponent for bandwidth `|η|·l`.
pub fn coupling_constant(
    ensemble: &EnsembleProfile,
    line: &TransitionLine,
    coupling: &RamanCoupling,
) -> model::Result<f64> {
    // Evaluate the exponent at a reference bandwidth equal to `l` (η = 1 Hz/m).
    let exponent = model::raman_exponent(ensemble, line, coupling, ensemble.length)?;
    Ok(exponent.sqrt())
}

struct Timeline {
    t_start: f64,
    dt: f64,
    steps: usize,
    switch_instant: f64,
    hold: Option<(f64, f64)>,
}

struct Dynamics<'a> {
    setup: &'a MemorySetup,
    kappa: f64,
    dz: f64,
    offsets: Vec<f64>,
    detuning: f64,
    timeline: &'a Timeline,
}

impl Dynamics<'_> {
    fn coupling_on(&self, t: f64) -> bool {
        match self.timeline.hold {
            Some((a, b)) => !(t >= a && t < b),
            None => true,
        }
    }

    fn kappa_at(&self, t: f64) -> f64 {
        if self.coupling_on(t) {
            self.kappa
        } else {
            0.0
        }
    }

    /// Amplitude decay rate of `S` at `t`.
    fn damping_at(&self, t: f64) -> f64 {
        let d = &self.setup.decoherence;
        match self.timeline.hold {
            Some((a, b)) if t >= a && t < b => match d.form {
                DecayForm::Exponential => 0.5 * d.storage_rate,
                DecayForm::Gaussian => d.storage_rate * d.storage_rate * (t - a),
            },
            _ => 0.5 * d.write_read_rate,
        }
    }

    fn gradient_at(&self, t: f64) -> f64 {
        self.setup
            .schedule
            .gradient_at(t - self.timeline.switch_instant)
    }

    /// Rebuilds `E` along the medium from `S` and returns it in `field`.
    fn propagate(&self, spin: &[Complex64], input: Complex64, kappa: f64, field: &mut [Complex64]) {
        let step = Complex64::new(0.0, 0.5 * kappa * self.dz);
        field[0] = input;
        for j in 1..spin.len() {
            field[j] = field[j - 1] + step * (spin[j - 1] + spin[j]);
        }
    }

    fn rhs(&self, t: f64, spin: &[Complex64], field: &mut [Complex64], out: &mut [Complex64]) {
        let kappa = self.kappa_at(t);
        let input = Complex64::new(self.setup.pulse.amplitude(t), 0.0);
        self.propagate(spin, input, kappa, field);
        let gamma = self.damping_at(t);
        let eta = self.gradient_at(t);
        let coupling = Complex64::new(0.0, kappa);
        for j in 0..spin.len() {
            let rate = Complex64::new(gamma, 2.0 * PI * (eta * self.offsets[j] + self.detuning));
            out[j] = -rate * spin[j] + coupling * field[j];
        }
    }
}

fn trapezoid_sq(values: &[Complex64], h: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..values.len() - 1].iter().map(|v| v.norm_sqr()).sum();
    h * (inner + 0.5 * (values[0].norm_sqr() + values[values.len() - 1].norm_sqr()))
}

/// Trapezoid integral of `|v|²` over uniformly spaced samples `[lo, hi]`.
fn window_energy(values: &[Complex64], lo: usize, hi: usize, dt: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    trapezoid_sq(&values[lo..=hi], dt)
}

fn validate_setup(setup: &MemorySetup) -> Result<()> {
    setup.ensemble.validate()?;
    setup.line.validate()?;
    setup.coupling.validate()?;
    setup.pulse.validate()?;
    setup.schedule.validate()?;
    setup.decoherence.validate()?;
    ensure(
        setup.grid.n_z >= 16,
        "n_z",
        setup.grid.n_z as f64,
        "must be >= 16",
    )?;
    if let CouplingGate::OffDuringHold { guard_s: Some(g) } = setup.gate {
        ensure(g >= 0.0, "guard_s", g, "must be >= 0")?;
    }
    Ok(())
}

/// Default step: `min(0.05/(π·|η|·l), fwhm/200)`.
pub fn default_time_step(schedule: &GradientSchedule, length: f64, fwhm: f64) -> f64 {
    let bandwidth = schedule.largest_gradient() * length;
    let pulse_limit = fwhm / 200.0;
    if bandwidth > 0.0 {
        (0.05 / (PI * bandwidth)).min(pulse_limit)
    } else {
        pulse_limit
    }
}

fn build_timeline(setup: &MemorySetup) -> Result<Timeline> {
    let pulse = &setup.pulse;
    let ts = setup.schedule.switch_time;
    let bandwidth = setup.schedule.largest_gradient() * setup.ensemble.length;
    let dt = match setup.grid.dt {
        Some(dt) => dt,
        None => default_time_step(&setup.schedule, setup.ensemble.length, pulse.fwhm),
    };
    ensure(dt > 0.0 && dt.is_finite(), "dt_s", dt, "must be > 0")?;
    if bandwidth > 0.0 {
        let limit = 0.1 / (PI * bandwidth);
        ensure(
            dt <= limit * (1.0 + 1e-12),
            "dt_s",
            dt,
            "must be <= 0.1/(pi*|eta|*l) to resolve the gradient phase",
        )?;
    }
    let t_start = pulse.center_time - pulse.lead_time();
    let switch_instant = pulse.center_time + ts;
    let t_end = setup
        .grid
        .t_end
        .unwrap_or(pulse.center_time + 2.0 * ts.max(0.0) + pulse.tail_time());
    ensure(
        t_end > switch_instant && t_end > t_start,
        "t_end_s",
        t_end,
        "must lie after the gradient switch",
    )?;
    let steps = ((t_end - t_start) / dt).ceil() as usize;
    let hold = match setup.gate {
        CouplingGate::AlwaysOn => None,
        CouplingGate::OffDuringHold { guard_s } => {
            let guard = guard_s.unwrap_or(DEFAULT_GUARD_FWHM * pulse.fwhm);
            let a = pulse.center_time + guard;
            let b = pulse.center_time + 2.0 * ts - guard;
            (b > a).then_some((a, b))
        }
    };
    Ok(Timeline {
        t_start,
        dt,
        steps,
        switch_instant,
        hold,
    })
}

/// Runs write, optional hold, gradient switch and read.
///
/// An echo only forms when the read gradient opposes the write gradient;
/// with equal signs the stored excitation keeps dephasing and the echo
/// window stays dark.
pub fn run_storage_recall(setup: &MemorySetup) -> Result<SimulationResult> {
    validate_setup(setup)?;
    let timeline = build_timeline(setup)?;
    let kappa = coupling_constant(&setup.ensemble, &setup.line, &setup.coupling)?;
    let n_z = setup.grid.n_z;
    let length = setup.ensemble.length;
    let dz = length / (n_z - 1) as f64;
    let z: Vec<f64> = (0..n_z).map(|j| j as f64 * dz).collect();
    let center = 0.5 * length;
    let dynamics = Dynamics {
        setup,
        kappa,
        dz,
        offsets: z.iter().map(|&zj| zj - center).collect(),
        detuning: setup.coupling.two_photon_detuning + setup.pulse.two_photon_offset,
        timeline: &timeline,
    };

    let dt = timeline.dt;
    let steps = timeline.steps;
    let zero = Complex64::new(0.0, 0.0);
    let mut spin = vec![zero; n_z];
    let mut field = vec![zero; n_z];
    let mut stage = vec![zero; n_z];
    let (mut k1, mut k2, mut k3, mut k4) =
        (vec![zero; n_z], vec![zero; n_z], vec![zero; n_z], vec![zero; n_z]);

    let mut times = Vec::with_capacity(steps + 1);
    let mut probe_in = Vec::with_capacity(steps + 1);
    let mut probe_out = Vec::with_capacity(steps + 1);
    let mut stored_energy = Vec::with_capacity(steps + 1);
    let stride = (steps / SPIN_RECORD_ROWS).max(1);
    let mut record = SpinRecord {
        times: Vec::new(),
        z: z.clone(),
        values: Vec::new(),
    };

    let energy_scale = setup.pulse.peak_amplitude.powi(2) * setup.pulse.fwhm;
    let mut in_cum = 0.0;
    let mut out_cum = 0.0;
    let mut dissipated = 0.0;
    let mut prev: Option<(f64, f64, f64)> = None;

    for k in 0..=steps {
        let t = timeline.t_start + k as f64 * dt;
        let e_in = Complex64::new(setup.pulse.amplitude(t), 0.0);
        dynamics.propagate(&spin, e_in, dynamics.kappa_at(t), &mut field);
        let e_out = field[n_z - 1];
        let stored = trapezoid_sq(&spin, dz);
        let loss_rate = 2.0 * dynamics.damping_at(t) * stored;

        if let Some((p_in, p_out, p_loss)) = prev {
            in_cum += 0.5 * dt * (p_in + e_in.norm_sqr());
            out_cum += 0.5 * dt * (p_out + e_out.norm_sqr());
            dissipated += 0.5 * dt * (p_loss + loss_rate);
        }
        prev = Some((e_in.norm_sqr(), e_out.norm_sqr(), loss_rate));
        if !(stored.is_finite() && e_out.norm_sqr().is_finite())
            || stored + out_cum > (1.0 + INSTABILITY_MARGIN) * in_cum + 1e-9 * energy_scale
        {
            return Err(SolverError::NumericalInstability { dt, time: t });
        }

        times.push(t);
        probe_in.push(e_in);
        probe_out.push(e_out);
        stored_energy.push(stored);
        if k % stride == 0 {
            record.times.push(t);
            record.values.push(spin.clone());
        }
        if k == steps {
            break;
        }

        // Classic RK4 on S; E is slaved to S at every stage.
        let h = dt;
        dynamics.rhs(t, &spin, &mut field, &mut k1);
        for j in 0..n_z {
            stage[j] = spin[j] + 0.5 * h * k1[j];
        }
        dynamics.rhs(t + 0.5 * h, &stage, &mut field, &mut k2);
        for j in 0..n_z {
            stage[j] = spin[j] + 0.5 * h * k2[j];
        }
        dynamics.rhs(t + 0.5 * h, &stage, &mut field, &mut k3);
        for j in 0..n_z {
            stage[j] = spin[j] + h * k3[j];
        }
        dynamics.rhs(t + h, &stage, &mut field, &mut k4);
        for j in 0..n_z {
            spin[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }

    let last = times.len() - 1;
    let split = times
        .partition_point(|&t| t <= timeline.switch_instant)
        .saturating_sub(1);
    let input_energy = trapezoid_sq(&probe_in, dt);
    let leak_energy = window_energy(&probe_out, 0, split, dt);
    let echo_energy = window_energy(&probe_out, split, last, dt);

    let echo_peak_time = if input_energy > 0.0 && echo_energy > ECHO_FLOOR * input_energy {
        peak_time(&times, &probe_out, split, last).map(|t| t - setup.pulse.center_time)
    } else {
        None
    };

    let write_eta = setup.schedule.eta_write.abs();
    let read_eta = setup.schedule.eta_read.abs();
    let exponent = |eta: f64| {
        if eta > 0.0 {
            kappa * kappa / eta
        } else {
            f64::INFINITY
        }
    };

    Ok(SimulationResult {
        times,
        probe_in,
        probe_out,
        residual_energy: *stored_energy.last().unwrap_or(&0.0),
        stored_energy,
        spin_field: record,
        input_energy,
        leak_energy,
        echo_energy,
        dissipated_energy: dissipated,
        echo_peak_time,
        switch_instant: timeline.switch_instant,
        dt,
        coupling_constant: kappa,
        write_exponent: exponent(write_eta),
        read_exponent: exponent(read_eta),
    })
}

/// Parabolic refinement of the intensity maximum within `[lo, hi]`.
fn peak_time(times: &[f64], field: &[Complex64], lo: usize, hi: usize) -> Option<f64> {
    if hi <= lo {
        return None;
    }
    let (idx, _) = field[lo..=hi]
        .iter()
        .map(|v| v.norm_sqr())
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))?;
    let i = lo + idx;
    if i == 0 || i + 1 >= field.len() {
        return Some(times[i]);
    }
    let (a, b, c) = (
        field[i - 1].norm_sqr(),
        field[i].norm_sqr(),
        field[i + 1].norm_sqr(),
    );
    let denom = a - 2.0 * b + c;
    let shift = if denom.abs() > 0.0 {
        (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    Some(times[i] + shift * (times[i + 1] - times[i]))
}

impl SimulationResult {
    /// Output intensity `|E(l, t)|²` sample by sample.
    pub fn output_intensity(&self) -> Vec<f64> {
        self.probe_out.iter().map(|v| v.norm_sqr()).collect()
    }

    /// Index of the last sample in the write window.
    pub fn switch_index(&self) -> usize {
        self.times
            .partition_point(|&t| t <= self.switch_instant)
            .saturating_sub(1)
    }

    /// `leak + echo + residual + dissipated − input`, relative to input.
    pub fn energy_balance_error(&self) -> f64 {
        (self.leak_energy + self.echo_energy + self.residual_energy + self.dissipated_energy
            - self.input_energy)
            / self.input_energy
    }

    /// `|S(z, t)|²` on the decimated record, one row per recorded time.
    pub fn spin_intensity_grid(&self) -> Vec<Vec<f64>> {
        self.spin_field
            .values
            .iter()
            .map(|row| row.iter().map(|v| v.norm_sqr()).collect())
            .collect()
    }
}

/// Fraction of the input that leaves the medium during the write window.
pub fn leakage_fraction(result: &SimulationResult) -> Result<f64> {
    if !(result.input_energy > 0.0) {
        return Err(SolverError::ZeroInputEnergy);
    }
    Ok(result.leak_energy / result.input_energy)
}

/// Echo energy over input energy, echo window `[t_s, t_end]`.
pub fn echo_efficiency(result: &SimulationResult) -> Result<f64> {
    if !(result.input_energy > 0.0) {
        return Err(SolverError::ZeroInputEnergy);
    }
    Ok(result.echo_energy / result.input_energy)
}

/// Summarises a run. The delay-bandwidth product uses `1/storage_rate` as
/// the delay when a storage rate is set and the simulated storage time
/// `2·t_s` otherwise.
pub fn efficiency_report(setup: &MemorySetup, result: &SimulationResult) -> Result<EfficiencyReport> {
    let leakage = leakage_fraction(result)?;
    let total = echo_efficiency(result)?;
    let storage = (1.0 - leakage).clamp(0.0, 1.0);
    let recall = if storage > 0.0 {
        (total / storage).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let delay = if setup.decoherence.storage_rate > 0.0 {
        1.0 / setup.decoherence.storage_rate
    } else {
        2.0 * setup.schedule.switch_time.max(0.0)
    };
    let bandwidth = model::memory_bandwidth(setup.schedule.eta_write, setup.ensemble.length)?;
    Ok(EfficiencyReport {
        storage_efficiency: storage,
        recall_efficiency: recall,
        total_efficiency: total.min(storage),
        leakage_fraction: leakage.clamp(0.0, 1.0),
        delay_bandwidth_product: model::delay_bandwidth_product(delay, bandwidth)?,
    })
}
