//! Digital demodulation of heterodyne records.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use super::{AnalysisError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeterodyneRecord {
    pub samples: Vec<f64>,
    pub sample_rate_hz: f64,
    pub intermediate_frequency_hz: f64,
}

impl HeterodyneRecord {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate_hz > 0.0) {
            return Err(AnalysisError::InvalidParameter {
                name: "sample_rate_hz",
                value: self.sample_rate_hz,
                requirement: "must be > 0",
            });
        }
        if !(self.intermediate_frequency_hz > 0.0)
            || self.sample_rate_hz <= 2.0 * self.intermediate_frequency_hz
        {
            return Err(AnalysisError::InvalidParameter {
                name: "intermediate_frequency_hz",
                value: self.intermediate_frequency_hz,
                requirement: "must be > 0 and below half the sample rate",
            });
        }
        if self.samples.iter().any(|v| !v.is_finite()) {
            return Err(AnalysisError::NonFinite);
        }
        Ok(())
    }

    pub fn sample_time(&self, i: usize) -> f64 {
        i as f64 / self.sample_rate_hz
    }
}

/// Default low-pass cutoff, a fifth of the intermediate frequency.
pub fn default_cutoff(intermediate_frequency: f64) -> f64 {
    intermediate_frequency / 5.0
}

/// Second-order Butterworth low-pass (bilinear transform, pre-warped).
#[derive(Debug, Clone, Copy)]
pub struct LowPass {
    b: [f64; 3],
    a: [f64; 3],
    settle_samples: usize,
}

impl LowPass {
    pub fn butterworth(cutoff_hz: f64, sample_rate_hz: f64) -> Self {
        let k = (PI * cutoff_hz / sample_rate_hz).tan();
        let norm = 1.0 / (1.0 + SQRT_2 * k + k * k);
        let b0 = k * k * norm;
        Self {
            b: [b0, 2.0 * b0, b0],
            a: [1.0, 2.0 * (k * k - 1.0) * norm, (1.0 - SQRT_2 * k + k * k) * norm],
            settle_samples: (3.0 * sample_rate_hz / cutoff_hz).ceil() as usize,
        }
    }

    /// One causal pass, starting from the steady state of `x[0]`.
    fn run(&self, x: &[f64]) -> Vec<f64> {
        let [b0, b1, b2] = self.b;
        let [_, a1, a2] = self.a;
        let x0 = x.first().copied().unwrap_or(0.0);
        let (mut z1, mut z2) = ((1.0 - b0) * x0, (b2 - a2) * x0);
        x.iter()
            .map(|&xi| {
                let y = b0 * xi + z1;
                z1 = b1 * xi - a1 * y + z2;
                z2 = b2 * xi - a2 * y;
                y
            })
            .collect()
    }

    /// Zero-phase forward-backward filtering with odd-reflection padding.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        if n < 2 {
            return x.to_vec();
        }
        let pad = self.settle_samples.min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));
        let mut y = self.run(&ext);
        y.reverse();
        let mut y = self.run(&y);
        y.reverse();
        y[pad..pad + n].to_vec()
    }
}

fn check_cutoff(record: &HeterodyneRecord, cutoff: f64) -> Result<()> {
    if !(cutoff > 0.0) || cutoff >= record.intermediate_frequency_hz {
        return Err(AnalysisError::Configuration(format!(
            "low-pass cutoff {cutoff} Hz must be positive and below the intermediate frequency {} Hz",
            record.intermediate_frequency_hz
        )));
    }
    Ok(())
}

/// In-phase amplitude: mix with `cos(2π·f_IF·t + phase)`, low-pass, scale by 2.
pub fn demodulate(record: &HeterodyneRecord, phase: f64, lowpass_cutoff: f64) -> Result<Vec<f64>> {
    record.validate()?;
    check_cutoff(record, lowpass_cutoff)?;
    let w = 2.0 * PI * record.intermediate_frequency_hz;
    let mixed: Vec<f64> = record
        .samples
        .iter()
        .enumerate()
        .map(|(i, &v)| v * (w * record.sample_time(i) + phase).cos())
        .collect();
    let filter = LowPass::butterworth(lowpass_cutoff, record.sample_rate_hz);
    Ok(filter.filtfilt(&mixed).into_iter().map(|v| 2.0 * v).collect())
}

/// Intensity-proportional envelope: [`demodulate`] then square.
pub fn demodulate_and_square(
    record: &HeterodyneRecord,
    phase: f64,
    lowpass_cutoff: f64,
) -> Result<Vec<f64>> {
    Ok(demodulate(record, phase, lowpass_cutoff)?
        .into_iter()
        .map(|v| v * v)
        .collect())
}

fn common_length(records: &[HeterodyneRecord]) -> Result<usize> {
    let first = records.first().ok_or(AnalysisError::InsufficientData { needed: 1, got: 0 })?;
    let n = first.samples.len();
    if records.iter().any(|r| {
        r.samples.len() != n
            || r.sample_rate_hz != first.sample_rate_hz
            || r.intermediate_frequency_hz != first.intermediate_frequency_hz
    }) {
        return Err(AnalysisError::Configuration(
            "records must share length, sample rate and intermediate frequency".into(),
        ));
    }
    Ok(n)
}

/// Averages the demodulated amplitudes of all records, then squares.
pub fn average_then_square(
    records: &[HeterodyneRecord],
    phase: f64,
    lowpass_cutoff: f64,
) -> Result<Vec<f64>> {
    let n = common_length(records)?;
    let mut acc = vec![0.0; n];
    for r in records {
        for (a, v) in acc.iter_mut().zip(demodulate(r, phase, lowpass_cutoff)?) {
            *a += v;
        }
    }
    let scale = 1.0 / records.len() as f64;
    Ok(acc.into_iter().map(|v| (v * scale).powi(2)).collect())
}

/// Squares each demodulated record, then averages.
pub fn square_then_average(
    records: &[HeterodyneRecord],
    phase: f64,
    lowpass_cutoff: f64,
) -> Result<Vec<f64>> {
    let n = common_length(records)?;
    let mut acc = vec![0.0; n];
    for r in records {
        for (a, v) in acc
            .iter_mut()
            .zip(demodulate_and_square(r, phase, lowpass_cutoff)?)
        {
            *a += v;
        }
    }
    let scale = 1.0 / records.len() as f64;
    Ok(acc.into_iter().map(|v| v * scale).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    const FS: f64 = 20e6;
    const IF: f64 = 1e6;

    fn carrier(envelope: impl Fn(f64) -> f64, n: usize, phase: f64) -> HeterodyneRecord {
        HeterodyneRecord {
            samples: (0..n)
                .map(|i| {
                    let t = i as f64 / FS;
                    envelope(t) * (2.0 * PI * IF * t + phase).cos()
                })
                .collect(),
            sample_rate_hz: FS,
            intermediate_frequency_hz: IF,
        }
    }

    fn gaussian_env(t: f64) -> f64 {
        let (t0, fwhm) = (40e-6, 10e-6);
        (-2.0 * LN_2 * (t - t0).powi(2) / (fwhm * fwhm)).exp()
    }

    #[test]
    fn pure_carrier_gives_constant_envelope() {
        let a = 0.7;
        let rec = carrier(|_| a, 4000, 0.0);
        let env = demodulate_and_square(&rec, 0.0, default_cutoff(IF)).unwrap();
        let settle = 200;
        for v in &env[settle..env.len() - settle] {
            assert!((v - a * a).abs() / (a * a) < 1e-3, "{v}");
        }
    }

    #[test]
    fn gaussian_round_trip_within_one_percent() {
        let rec = carrier(gaussian_env, 1600, 0.3);
        let env = demodulate_and_square(&rec, 0.3, default_cutoff(IF)).unwrap();
        let worst = (100..1500)
            .map(|i| (env[i] - gaussian_env(rec.sample_time(i)).powi(2)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 0.01, "L-inf error {worst}");
    }

    #[test]
    fn quadrature_is_rejected() {
        let rec = carrier(gaussian_env, 1600, 0.0);
        let matched = demodulate_and_square(&rec, 0.0, default_cutoff(IF)).unwrap();
        let quad = demodulate_and_square(&rec, PI / 2.0, default_cutoff(IF)).unwrap();
        let peak = |v: &[f64]| v[100..1500].iter().copied().fold(0.0, f64::max);
        let rejection_db = 10.0 * (peak(&matched) / peak(&quad)).log10();
        assert!(rejection_db > 40.0, "{rejection_db} dB");
    }

    #[test]
    fn envelope_scales_quadratically() {
        let rec = carrier(gaussian_env, 1200, 0.0);
        let mut scaled = rec.clone();
        scaled.samples.iter_mut().for_each(|v| *v *= 3.0);
        let a = demodulate_and_square(&rec, 0.0, default_cutoff(IF)).unwrap();
        let b = demodulate_and_square(&scaled, 0.0, default_cutoff(IF)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((y - 9.0 * x).abs() <= 1e-12 * (9.0 * x).abs().max(1e-12));
        }
    }

    #[test]
    fn cutoff_above_if_is_rejected() {
        let rec = carrier(|_| 1.0, 100, 0.0);
        assert!(matches!(
            demodulate(&rec, 0.0, IF),
            Err(AnalysisError::Configuration(_))
        ));
    }

    #[test]
    fn nyquist_is_enforced() {
        let rec = HeterodyneRecord {
            samples: vec![0.0; 10],
            sample_rate_hz: 1.5e6,
            intermediate_frequency_hz: 1e6,
        };
        assert!(rec.validate().is_err());
    }

    #[test]
    fn averaging_orders_differ_for_opposite_phases() {
        let a = carrier(|_| 1.0, 800, 0.0);
        let b = carrier(|_| -1.0, 800, 0.0);
        let records = [a, b];
        let avg_first = average_then_square(&records, 0.0, default_cutoff(IF)).unwrap();
        let sq_first = square_then_average(&records, 0.0, default_cutoff(IF)).unwrap();
        assert!(avg_first[400].abs() < 1e-9);
        assert!((sq_first[400] - 1.0).abs() < 1e-3);
    }
}
