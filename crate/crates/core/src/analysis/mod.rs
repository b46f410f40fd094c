//! Curve fitting, thermometry and heterodyne signal processing.

mod demod;
mod fit;
mod thermometry;

pub use demod::{
    average_then_square, default_cutoff, demodulate, demodulate_and_square, square_then_average,
    HeterodyneRecord, LowPass,
};
pub use fit::{fit_exponential_decay, fit_gaussian, fit_lorentzian, FitParameter, FitResult};
pub use thermometry::{temperature_from_expansion, ExpansionFit};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("input contains non-finite values")]
    NonFinite,
    #[error("invalid `{name}` = {value}: {requirement}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("input energy is zero")]
    ZeroInputEnergy,
}

pub type Result<T> = std::result::Result<T, AnalysisError>;

/// Full width at half of the maximum of `ys`, measured from zero, with
/// linear interpolation between samples. `xs` must be sorted ascending.
/// `None` if the profile does not drop below half maximum on both sides.
pub fn half_max_width(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return None;
    }
    let (peak, &max) = ys.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
    if !(max > 0.0) {
        return None;
    }
    let half = 0.5 * max;
    let crossing = |i: usize, j: usize| xs[i] + (half - ys[i]) * (xs[j] - xs[i]) / (ys[j] - ys[i]);
    let left = (1..=peak).rev().find(|&i| ys[i - 1] < half).map(|i| crossing(i - 1, i))?;
    let right = (peak..ys.len() - 1)
        .find(|&i| ys[i + 1] < half)
        .map(|i| crossing(i, i + 1))?;
    Some(right - left)
}

/// Efficiency estimated from repeated intensity traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEfficiency {
    pub efficiency: f64,
    /// Spread propagated from the per-trace standard deviations.
    pub std_dev: f64,
    /// Same propagation using the standard errors of the two means.
    pub std_error: f64,
    pub input_mean_energy: f64,
    pub echo_mean_energy: f64,
    pub n_input: usize,
    pub n_echo: usize,
}

fn trace_energy(trace: &[f64], dt: f64) -> f64 {
    match trace.len() {
        0 => 0.0,
        1 => trace[0] * dt,
        n => dt * (trace[1..n - 1].iter().sum::<f64>() + 0.5 * (trace[0] + trace[n - 1])),
    }
}

fn mean_and_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Mean integrated echo intensity over mean integrated input intensity.
pub fn efficiency_from_traces(
    input_traces: &[Vec<f64>],
    echo_traces: &[Vec<f64>],
    dt: f64,
) -> Result<TraceEfficiency> {
    if input_traces.is_empty() || echo_traces.is_empty() {
        return Err(AnalysisError::InsufficientData {
            needed: 1,
            got: input_traces.len().min(echo_traces.len()),
        });
    }
    if !(dt > 0.0) {
        return Err(AnalysisError::InvalidParameter {
            name: "dt_s",
            value: dt,
            requirement: "must be > 0",
        });
    }
    let inputs: Vec<f64> = input_traces.iter().map(|t| trace_energy(t, dt)).collect();
    let echoes: Vec<f64> = echo_traces.iter().map(|t| trace_energy(t, dt)).collect();
    if inputs.iter().chain(&echoes).any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFinite);
    }
    let (mean_in, sd_in) = mean_and_sd(&inputs);
    let (mean_echo, sd_echo) = mean_and_sd(&echoes);
    if !(mean_in > 0.0) {
        return Err(AnalysisError::ZeroInputEnergy);
    }
    let efficiency = mean_echo / mean_in;
    let rel_in = sd_in / mean_in;
    let rel_echo = if mean_echo != 0.0 {
        sd_echo / mean_echo
    } else {
        0.0
    };
    let (n_in, n_echo) = (inputs.len() as f64, echoes.len() as f64);
    Ok(TraceEfficiency {
        efficiency,
        std_dev: efficiency.abs() * (rel_in.powi(2) + rel_echo.powi(2)).sqrt(),
        std_error: efficiency.abs() * (rel_in.powi(2) / n_in + rel_echo.powi(2) / n_echo).sqrt(),
        input_mean_energy: mean_in,
        echo_mean_energy: mean_echo,
        n_input: inputs.len(),
        n_echo: echoes.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn pulse(n: usize, scale: f64) -> Vec<f64> {
        (0..n)
            .map(|i| scale * (-((i as f64 - 50.0) / 12.0).powi(2)).exp())
            .collect()
    }

    #[test]
    fn half_max_width_of_triangle() {
        let xs: Vec<f64> = (0..=20).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (10.0 - (x - 10.0).abs()).max(0.0)).collect();
        assert!((half_max_width(&xs, &ys).unwrap() - 10.0).abs() < 1e-12);
        assert!(half_max_width(&xs, &xs).is_none());
    }

    #[test]
    fn identical_traces_give_unity() {
        let t = vec![pulse(100, 1.0); 3];
        let e = efficiency_from_traces(&t, &t, 1e-7).unwrap();
        assert_eq!(e.efficiency, 1.0);
        assert_eq!(e.std_dev, 0.0);
    }

    #[test]
    fn half_amplitude_echo_gives_quarter() {
        let inputs = vec![pulse(100, 1.0); 10];
        let echoes = vec![pulse(100, 0.25); 17];
        let e = efficiency_from_traces(&inputs, &echoes, 1e-7).unwrap();
        assert!((e.efficiency - 0.25).abs() < 1e-15);
    }

    #[test]
    fn jittered_ensemble_reports_two_percent_class_spread() {
        let mut rng = ChaCha8Rng::seed_from_u64(80);
        let jitter = Normal::new(0.80, 0.02).unwrap();
        let inputs = vec![pulse(100, 1.0); 10];
        let echoes: Vec<_> = (0..17).map(|_| pulse(100, jitter.sample(&mut rng))).collect();
        let e = efficiency_from_traces(&inputs, &echoes, 1e-7).unwrap();
        assert!((e.efficiency - 0.80).abs() < 0.015, "{}", e.efficiency);
        assert!(e.std_dev > 0.01 && e.std_dev < 0.03, "{}", e.std_dev);
        assert!(e.std_error < e.std_dev);
    }

    #[test]
    fn zero_input_is_an_error() {
        let z = vec![vec![0.0; 10]];
        assert_eq!(
            efficiency_from_traces(&z, &z, 1.0),
            Err(AnalysisError::ZeroInputEnergy)
        );
    }

    proptest! {
        #[test]
        fn invariant_under_common_rescaling(scale in 1e-3f64..1e3, echo in 0.1f64..1.0) {
            let inputs = vec![pulse(100, 1.0), pulse(100, 1.1)];
            let echoes = vec![pulse(100, echo), pulse(100, echo * 0.9)];
            let a = efficiency_from_traces(&inputs, &echoes, 1e-7).unwrap();
            let s = |v: &Vec<Vec<f64>>| v.iter().map(|t| t.iter().map(|x| x * scale).collect()).collect::<Vec<Vec<f64>>>();
            let b = efficiency_from_traces(&s(&inputs), &s(&echoes), 1e-7).unwrap();
            prop_assert!((a.efficiency - b.efficiency).abs() <= 1e-12 * a.efficiency);
        }
    }
}
