//! Damped least squares for the three fixed line-shape models.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{half_max_width, AnalysisError, Result};

const MAX_ITERATIONS: usize = 200;
const STEP_TOLERANCE: f64 = 1e-9;
const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitParameter {
    pub name: String,
    pub value: f64,
    /// `sqrt` of the covariance diagonal; NaN when the covariance is unavailable.
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: String,
    pub parameters: Vec<FitParameter>,
    pub covariance: Vec<Vec<f64>>,
    pub residual_norm: f64,
    pub initial_residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Points dropped before fitting (e.g. non-positive values in a log fit).
    pub excluded_points: usize,
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.parameters
            .iter()
            .find(|p| p.name == name)
            .map(|p| p.value)
    }

    /// Looks up a parameter that the model is known to have.
    pub(crate) fn value(&self, name: &str) -> f64 {
        self.get(name)
            .unwrap_or_else(|| panic!("{} fit has no parameter `{name}`", self.model))
    }

    pub fn values(&self) -> Vec<f64> {
        self.parameters.iter().map(|p| p.value).collect()
    }

    /// Plain `key=value` lines, one per field.
    pub fn to_key_value(&self) -> String {
        let mut out = format!("model={}\n", self.model);
        for p in &self.parameters {
            out.push_str(&format!("{}={}\n", p.name, p.value));
            out.push_str(&format!("{}_std_error={}\n", p.name, p.std_error));
        }
        out.push_str(&format!("residual_norm={}\n", self.residual_norm));
        out.push_str(&format!("initial_residual_norm={}\n", self.initial_residual_norm));
        out.push_str(&format!("converged={}\n", self.converged));
        out.push_str(&format!("iterations={}\n", self.iterations));
        out.push_str(&format!("excluded_points={}\n", self.excluded_points));
        for w in &self.warnings {
            out.push_str(&format!("warning={w}\n"));
        }
        out
    }
}

/// A curve `y(x; p)` with an analytic gradient.
trait CurveModel {
    const NAME: &'static str;
    const PARAMS: &'static [&'static str];

    fn eval(p: &[f64], x: f64, grad: &mut [f64]) -> f64;

    /// Maps raw optimiser parameters onto their canonical form (e.g. `|σ|`).
    fn canonical(p: &mut [f64]) {
        let _ = p;
    }
}

struct Lorentzian;

impl CurveModel for Lorentzian {
    const NAME: &'static str = "lorentzian";
    const PARAMS: &'static [&'static str] = &["center", "fwhm", "amplitude", "offset"];

    fn eval(p: &[f64], x: f64, grad: &mut [f64]) -> f64 {
        let (c, w, a) = (p[0], p[1], p[2]);
        let h = 0.5 * w;
        let u = x - c;
        let d = u * u + h * h;
        let shape = h * h / d;
        grad[0] = a * h * h * 2.0 * u / (d * d);
        grad[1] = a * h * u * u / (d * d);
        grad[2] = shape;
        grad[3] = 1.0;
        a * shape + p[3]
    }

    fn canonical(p: &mut [f64]) {
        p[1] = p[1].abs();
    }
}

struct Gaussian;

impl CurveModel for Gaussian {
    const NAME: &'static str = "gaussian";
    const PARAMS: &'static [&'static str] = &["mean", "sigma", "amplitude", "offset"];

    fn eval(p: &[f64], x: f64, grad: &mut [f64]) -> f64 {
        let (mu, s, a) = (p[0], p[1], p[2]);
        let u = x - mu;
        let g = (-u * u / (2.0 * s * s)).exp();
        grad[0] = a * g * u / (s * s);
        grad[1] = a * g * u * u / (s * s * s);
        grad[2] = g;
        grad[3] = 1.0;
        a * g + p[3]
    }

    fn canonical(p: &mut [f64]) {
        p[1] = p[1].abs();
    }
}

struct ExponentialDecay;

impl CurveModel for ExponentialDecay {
    const NAME: &'static str = "exponential_decay";
    const PARAMS: &'static [&'static str] = &["amplitude", "tau"];

    fn eval(p: &[f64], t: f64, grad: &mut [f64]) -> f64 {
        let (a, tau) = (p[0], p[1]);
        let e = (-t / tau).exp();
        grad[0] = e;
        grad[1] = a * e * t / (tau * tau);
        a * e
    }
}

struct Problem<'a> {
    xs: &'a [f64],
    ys: &'a [f64],
}

impl Problem<'_> {
    fn residuals<M: CurveModel>(&self, p: &[f64], jac: Option<&mut DMatrix<f64>>) -> DVector<f64> {
        let n = self.xs.len();
        let mut grad = vec![0.0; M::PARAMS.len()];
        let mut r = DVector::zeros(n);
        match jac {
            Some(j) => {
                for i in 0..n {
                    r[i] = M::eval(p, self.xs[i], &mut grad) - self.ys[i];
                    for (k, g) in grad.iter().enumerate() {
                        j[(i, k)] = *g;
                    }
                }
            }
            None => {
                for i in 0..n {
                    r[i] = M::eval(p, self.xs[i], &mut grad) - self.ys[i];
                }
            }
        }
        r
    }
}

fn cost(r: &DVector<f64>) -> f64 {
    let c = r.norm_squared();
    if c.is_finite() {
        c
    } else {
        f64::INFINITY
    }
}

fn damped_step(jtj: &DMatrix<f64>, jtr: &DVector<f64>, lambda: f64) -> Option<DVector<f64>> {
    let mut a = jtj.clone();
    for k in 0..a.nrows() {
        a[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
    }
    let rhs = -jtr;
    a.clone()
        .cholesky()
        .map(|c| c.solve(&rhs))
        .or_else(|| a.lu().solve(&rhs))
        .filter(|d| d.iter().all(|v| v.is_finite()))
}

fn relative_step(step: &DVector<f64>, p: &[f64], scales: &[f64]) -> f64 {
    step.iter()
        .zip(p.iter().zip(scales))
        .map(|(d, (v, s))| d.abs() / (v.abs() + 1e-3 * s.abs()).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

fn levenberg_marquardt<M: CurveModel>(
    xs: &[f64],
    ys: &[f64],
    initial: &[f64],
    scales: &[f64],
) -> FitResult {
    let problem = Problem { xs, ys };
    let n = xs.len();
    let m = M::PARAMS.len();
    let mut p = initial.to_vec();
    let mut jac = DMatrix::zeros(n, m);
    let mut r = problem.residuals::<M>(&p, Some(&mut jac));
    let mut current = cost(&r);
    let initial_norm = current.sqrt();
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    let mut warnings = Vec::new();

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        if current == 0.0 {
            converged = true;
            break;
        }
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &r;
        let Some(step) = damped_step(&jtj, &jtr, lambda) else {
            lambda *= 10.0;
            if lambda > 1e16 {
                break;
            }
            continue;
        };
        let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        let trial_r = problem.residuals::<M>(&trial, None);
        let trial_cost = cost(&trial_r);
        if trial_cost < current {
            let rel = relative_step(&step, &p, scales);
            p = trial;
            r = problem.residuals::<M>(&p, Some(&mut jac));
            current = cost(&r);
            lambda = (lambda / 3.0).max(1e-12);
            if rel < STEP_TOLERANCE {
                converged = true;
                break;
            }
        } else {
            lambda *= 4.0;
            if lambda > 1e16 {
                // No damped step improves the cost: accept only if the
                // undamped step is already negligible.
                let jtj = jac.transpose() * &jac;
                let jtr = jac.transpose() * &r;
                converged = damped_step(&jtj, &jtr, 0.0)
                    .map(|s| relative_step(&s, &p, scales) < 1e-6)
                    .unwrap_or(false);
                break;
            }
        }
    }
    if !converged && iterations >= MAX_ITERATIONS {
        warnings.push(format!("no convergence after {MAX_ITERATIONS} iterations"));
    }

    let jtj = jac.transpose() * &jac;
    let dof = n.saturating_sub(m).max(1) as f64;
    let variance = current / dof;
    let covariance = match jtj.clone().try_inverse() {
        Some(inv) if inv.iter().all(|v| v.is_finite()) => {
            let cov = inv * variance;
            (&cov + cov.transpose()) * 0.5
        }
        _ => {
            converged = false;
            warnings.push("singular normal matrix; parameters not identifiable".into());
            DMatrix::from_element(m, m, f64::NAN)
        }
    };
    M::canonical(&mut p);
    let parameters = M::PARAMS
        .iter()
        .enumerate()
        .map(|(k, name)| FitParameter {
            name: (*name).to_string(),
            value: p[k],
            std_error: covariance[(k, k)].sqrt(),
        })
        .collect();
    FitResult {
        model: M::NAME.into(),
        parameters,
        covariance: (0..m)
            .map(|i| (0..m).map(|j| covariance[(i, j)]).collect())
            .collect(),
        residual_norm: current.sqrt(),
        initial_residual_norm: initial_norm,
        converged,
        iterations,
        excluded_points: 0,
        warnings,
    }
}

/// Result for inputs that cannot be fitted at all.
fn unfitted<M: CurveModel>(initial: &[f64], residual: f64, warning: &str) -> FitResult {
    let m = M::PARAMS.len();
    FitResult {
        model: M::NAME.into(),
        parameters: M::PARAMS
            .iter()
            .zip(initial)
            .map(|(name, v)| FitParameter {
                name: (*name).to_string(),
                value: *v,
                std_error: f64::NAN,
            })
            .collect(),
        covariance: vec![vec![f64::NAN; m]; m],
        residual_norm: residual,
        initial_residual_norm: residual,
        converged: false,
        iterations: 0,
        excluded_points: 0,
        warnings: vec![warning.to_string()],
    }
}

fn split_points(points: &[(f64, f64)], needed: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if points.len() < needed {
        return Err(AnalysisError::InsufficientData {
            needed,
            got: points.len(),
        });
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(AnalysisError::NonFinite);
    }
    Ok(points.iter().copied().unzip())
}

fn range(v: &[f64]) -> f64 {
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    hi - lo
}

/// Peak seed: baseline, signed height, position and FWHM of the extremum.
fn peak_seed(xs: &[f64], ys: &[f64]) -> (f64, f64, f64, f64) {
    let mut sorted: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (sx, sy): (Vec<f64>, Vec<f64>) = sorted.into_iter().unzip();
    let lo = sy.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = sy.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let edge = 0.5 * (sy[0] + sy[sy.len() - 1]);
    // Peak up if the maximum sticks out further from the edges than the minimum.
    let upward = hi - edge >= edge - lo;
    let (baseline, height, idx) = if upward {
        let i = sy.iter().position(|&v| v == hi).unwrap_or(0);
        (lo, hi - lo, i)
    } else {
        let i = sy.iter().position(|&v| v == lo).unwrap_or(0);
        (hi, lo - hi, i)
    };
    let shifted: Vec<f64> = sy.iter().map(|v| (v - baseline) * height.signum()).collect();
    let width = half_max_width(&sx, &shifted).unwrap_or(0.25 * range(&sx));
    (baseline, height, sx[idx], width.max(f64::MIN_POSITIVE))
}

/// Fits `A·(w/2)²/((x−c)² + (w/2)²) + offset`.
///
/// Parameter order for `initial_guess`: center, fwhm, amplitude, offset.
pub fn fit_lorentzian(points: &[(f64, f64)], initial_guess: Option<[f64; 4]>) -> Result<FitResult> {
    let (xs, ys) = split_points(points, 5)?;
    let seed = initial_guess.unwrap_or_else(|| {
        let (base, height, center, width) = peak_seed(&xs, &ys);
        [center, width, height, base]
    });
    if range(&ys) == 0.0 {
        return Ok(unfitted::<Lorentzian>(&seed, 0.0, "zero variance in y"));
    }
    let scales = [range(&xs), range(&xs), range(&ys), range(&ys)];
    Ok(levenberg_marquardt::<Lorentzian>(&xs, &ys, &seed, &scales))
}

/// Fits `A·exp(−(x−μ)²/(2σ²)) + offset`.
///
/// Parameter order for `initial_guess`: mean, sigma, amplitude, offset.
pub fn fit_gaussian(points: &[(f64, f64)], initial_guess: Option<[f64; 4]>) -> Result<FitResult> {
    let (xs, ys) = split_points(points, 5)?;
    let seed = initial_guess.unwrap_or_else(|| {
        let (base, height, center, width) = peak_seed(&xs, &ys);
        [center, width / FWHM_PER_SIGMA, height, base]
    });
    if range(&ys) == 0.0 {
        return Ok(unfitted::<Gaussian>(&seed, 0.0, "zero variance in y"));
    }
    let scales = [range(&xs), range(&xs), range(&ys), range(&ys)];
    Ok(levenberg_marquardt::<Gaussian>(&xs, &ys, &seed, &scales))
}

/// Fits `A·exp(−t/τ)`: log-linear seed on the positive samples, then
/// damped least squares on the linear data.
///
/// Non-positive samples are dropped and counted in `excluded_points`. A
/// series that does not decay is reported unconverged with `τ = ∞`.
pub fn fit_exponential_decay(points: &[(f64, f64)]) -> Result<FitResult> {
    let (ts_all, _) = split_points(points, 3)?;
    if range(&ts_all) <= 0.0 {
        return Err(AnalysisError::InvalidParameter {
            name: "t",
            value: 0.0,
            requirement: "time samples must have a nonzero spread",
        });
    }
    let kept: Vec<(f64, f64)> = points.iter().copied().filter(|&(_, y)| y > 0.0).collect();
    let excluded = points.len() - kept.len();
    if kept.len() < 2 {
        return Err(AnalysisError::InsufficientData {
            needed: 2,
            got: kept.len(),
        });
    }
    let (ts, ys): (Vec<f64>, Vec<f64>) = kept.iter().copied().unzip();
    let logs: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (intercept, slope) = linear_least_squares(&ts, &logs);
    let span = range(&ts);

    let mut result = if !(slope < 0.0) || range(&ts) == 0.0 {
        let mean = ys.iter().sum::<f64>() / ys.len() as f64;
        let r: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>().sqrt();
        unfitted::<ExponentialDecay>(&[mean, f64::INFINITY], r, "series does not decay; tau unbounded")
    } else {
        let seed = [intercept.exp(), -1.0 / slope];
        let scales = [range(&ys).max(ys[0].abs()), span];
        levenberg_marquardt::<ExponentialDecay>(&ts, &ys, &seed, &scales)
    };
    let tau = result.value("tau");
    if result.converged && !(tau > 0.0 && tau < 1e3 * span) {
        result.converged = false;
        result
            .warnings
            .push(format!("tau = {tau:e} is not bounded by the sampled window"));
    }
    result.excluded_points = excluded;
    if excluded > 0 {
        result
            .warnings
            .push(format!("{excluded} non-positive samples excluded"));
    }
    Ok(result)
}

/// Ordinary least squares for `y = a + b·x`; returns `(a, b)`.
pub(crate) fn linear_least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return (my, 0.0);
    }
    let b = sxy / sxx;
    (my - b * mx, b)
}
