//! Absorption-image analysis: optical-depth maps, cross-sections, line-centre
//! calibration, resonant peak optical depth and cloud widths.

pub mod io;

use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{fit_gaussian, fit_lorentzian, AnalysisError, FitResult};
use crate::model::{resonance_scale_factor, ModelError, TransitionLine};

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("frame dimensions differ: transmitted {transmitted:?}, reference {reference:?}")]
    DimensionMismatch {
        transmitted: (usize, usize),
        reference: (usize, usize),
    },
    #[error("invalid `{name}` = {value}: {requirement}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },
    #[error("profile has no valid samples")]
    EmptyProfile,
    #[error("scan is poorly conditioned: {0}")]
    PoorlyConditioned(String),
    #[error("{context}: fit did not converge ({warnings})")]
    FitFailed {
        context: &'static str,
        warnings: String,
    },
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, ImagingError>;

/// Transmitted and reference frames of one absorption shot, dark-frame
/// subtracted by the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePair {
    pub transmitted: Array2<f64>,
    pub reference: Array2<f64>,
    pub pixel_pitch_m: f64,
    pub detuning_hz: f64,
    pub metadata: BTreeMap<String, String>,
}

impl ImagePair {
    pub fn validate(&self) -> Result<()> {
        if self.transmitted.dim() != self.reference.dim() {
            return Err(ImagingError::DimensionMismatch {
                transmitted: self.transmitted.dim(),
                reference: self.reference.dim(),
            });
        }
        if !(self.pixel_pitch_m > 0.0) {
            return Err(ImagingError::InvalidParameter {
                name: "pixel_pitch_m",
                value: self.pixel_pitch_m,
                requirement: "must be > 0",
            });
        }
        Ok(())
    }
}

/// Per-pixel optical depth. Masked pixels hold NaN and are skipped by every
/// downstream statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct OdImage {
    pub od: Array2<f64>,
    pub mask: Array2<bool>,
    pub detuning_hz: f64,
}

impl OdImage {
    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn unmasked_fraction(&self) -> f64 {
        1.0 - self.masked_count() as f64 / self.mask.len().max(1) as f64
    }

    pub fn value(&self, row: usize, col: usize) -> Option<f64> {
        (!self.mask[(row, col)]).then(|| self.od[(row, col)])
    }

    pub fn max_od(&self) -> Option<f64> {
        self.od
            .iter()
            .zip(self.mask.iter())
            .filter(|(_, &m)| !m)
            .map(|(v, _)| *v)
            .reduce(f64::max)
    }
}

/// `ln(reference / transmitted)` for every pixel; pixels with a non-positive
/// count in either frame or transmitted counts below `intensity_floor` are masked.
pub fn od_map(pair: &ImagePair, intensity_floor: f64) -> Result<OdImage> {
    pair.validate()?;
    let mut mask = Array2::from_elem(pair.transmitted.dim(), false);
    let mut od = Array2::from_elem(pair.transmitted.dim(), f64::NAN);
    ndarray::Zip::from(&mut od)
        .and(&mut mask)
        .and(&pair.transmitted)
        .and(&pair.reference)
        .for_each(|o, m, &t, &r| {
            if t > 0.0 && r > 0.0 && t >= intensity_floor && t.is_finite() && r.is_finite() {
                *o = (r / t).ln();
            } else {
                *m = true;
            }
        });
    Ok(OdImage {
        od,
        mask,
        detuning_hz: pair.detuning_hz,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// Profile along x (columns), averaging rows.
    X,
    /// Profile along y (rows), averaging columns.
    Y,
}

/// 1-D profile sampled at unit pixel spacing. `None` marks samples whose
/// every contributing pixel was masked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub values: Vec<Option<f64>>,
}

impl Profile {
    pub fn from_values(values: Vec<f64>) -> Self {
        Self {
            values: values
                .into_iter()
                .map(|v| v.is_finite().then_some(v))
                .collect(),
        }
    }

    /// Valid `(pixel index, value)` pairs.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| (i as f64, v)))
            .collect()
    }

    pub fn max(&self) -> Option<f64> {
        self.values.iter().flatten().copied().reduce(f64::max)
    }
}

/// Mean of `n_slices` rows (for [`Axis::X`]) or columns centred on `center`.
pub fn averaged_cross_section(
    image: &OdImage,
    axis: Axis,
    n_slices: usize,
    center: usize,
) -> Result<Profile> {
    if n_slices == 0 {
        return Err(ImagingError::InvalidParameter {
            name: "n_slices",
            value: 0.0,
            requirement: "must be >= 1",
        });
    }
    let (rows, cols) = image.od.dim();
    let (across, along) = match axis {
        Axis::X => (rows, cols),
        Axis::Y => (cols, rows),
    };
    let start = center as isize - (n_slices / 2) as isize;
    if start < 0 || start as usize + n_slices > across {
        return Err(ImagingError::InvalidParameter {
            name: "center",
            value: center as f64,
            requirement: "slice window must lie inside the image",
        });
    }
    let start = start as usize;
    let values = (0..along)
        .map(|k| {
            let (sum, count) = (start..start + n_slices)
                .filter_map(|s| match axis {
                    Axis::X => image.value(s, k),
                    Axis::Y => image.value(k, s),
                })
                .fold((0.0, 0usize), |(acc, n), v| (acc + v, n + 1));
            (count > 0).then(|| sum / count as f64)
        })
        .collect();
    Ok(Profile { values })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineCalibration {
    pub center_offset_hz: f64,
    pub fwhm_hz: f64,
    pub fit: FitResult,
}

impl LineCalibration {
    pub fn apply(&self, line: &mut TransitionLine) {
        line.center_offset = self.center_offset_hz;
    }
}

/// Lorentzian fit of peak OD against imaging detuning at low atom number.
pub fn calibrate_line_center(scans: &[(f64, f64)]) -> Result<LineCalibration> {
    if scans.len() < 5 {
        return Err(AnalysisError::InsufficientData {
            needed: 5,
            got: scans.len(),
        }
        .into());
    }
    let mut sorted = scans.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let peak = sorted
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    if peak == 0 || peak == sorted.len() - 1 {
        return Err(ImagingError::PoorlyConditioned(
            "maximum at the edge of the scan; detunings do not bracket the line".into(),
        ));
    }
    let fit = fit_lorentzian(&sorted, None)?;
    if !fit.converged {
        return Err(ImagingError::FitFailed {
            context: "line-centre calibration",
            warnings: fit.warnings.join("; "),
        });
    }
    let (lo, hi) = (sorted[0].0, sorted[sorted.len() - 1].0);
    let center = fit.value("center");
    if !(lo..=hi).contains(&center) {
        return Err(ImagingError::PoorlyConditioned(format!(
            "fitted centre {center} Hz outside the scanned range"
        )));
    }
    Ok(LineCalibration {
        center_offset_hz: center,
        fwhm_hz: fit.value("fwhm"),
        fit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PeakMethod {
    /// Gaussian fit to the pointwise mean of all traces.
    ProfilePeak,
    /// Mean of the Gaussian-fit peaks of the individual traces.
    PerTraceMaxMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledPeak {
    pub od_resonant: f64,
    pub unscaled_peak: f64,
    pub scale_factor: f64,
    pub detuning_from_line_hz: f64,
}

fn fitted_peak(profile: &Profile) -> Result<f64> {
    let points = profile.points();
    if points.is_empty() {
        return Err(ImagingError::EmptyProfile);
    }
    let fit = fit_gaussian(&points, None)?;
    if !fit.converged {
        return Err(ImagingError::FitFailed {
            context: "cross-section peak",
            warnings: fit.warnings.join("; "),
        });
    }
    Ok(fit.value("amplitude") + fit.value("offset"))
}

/// Peak optical depth of detuned cross-sections scaled to resonance.
pub fn scaled_peak_od(
    profiles: &[Profile],
    detuning_hz: f64,
    line: &TransitionLine,
    method: PeakMethod,
) -> Result<ScaledPeak> {
    if profiles.is_empty() {
        return Err(ImagingError::EmptyProfile);
    }
    let unscaled = match method {
        PeakMethod::ProfilePeak => {
            let len = profiles.iter().map(|p| p.values.len()).max().unwrap_or(0);
            let mean = (0..len)
                .map(|i| {
                    let vals: Vec<f64> = profiles
                        .iter()
                        .filter_map(|p| p.values.get(i).copied().flatten())
                        .collect();
                    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
                })
                .collect();
            fitted_peak(&Profile { values: mean })?
        }
        PeakMethod::PerTraceMaxMean => {
            let peaks = profiles
                .iter()
                .map(fitted_peak)
                .collect::<Result<Vec<f64>>>()?;
            peaks.iter().sum::<f64>() / peaks.len() as f64
        }
    };
    let detuning = detuning_hz - line.center_offset;
    let scale = resonance_scale_factor(detuning, line.gamma)?;
    Ok(ScaledPeak {
        od_resonant: unscaled * scale,
        unscaled_peak: unscaled,
        scale_factor: scale,
        detuning_from_line_hz: detuning,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudWidths {
    pub sigma_major_m: f64,
    pub sigma_minor_m: f64,
    /// `(row, column)` in pixels.
    pub centroid: (f64, f64),
    /// Angle of the major axis from the +x (column) direction.
    pub major_angle_rad: f64,
}

/// Bilinear sample; `None` if any neighbour is masked or outside.
fn sample(image: &OdImage, row: f64, col: f64) -> Option<f64> {
    let (rows, cols) = image.od.dim();
    if row < 0.0 || col < 0.0 {
        return None;
    }
    let (r0, c0) = (row.floor() as usize, col.floor() as usize);
    if r0 + 1 >= rows || c0 + 1 >= cols {
        return (r0 < rows && c0 < cols && row.fract() == 0.0 && col.fract() == 0.0)
            .then(|| image.value(r0, c0))
            .flatten();
    }
    let (fr, fc) = (row - r0 as f64, col - c0 as f64);
    let v00 = image.value(r0, c0)?;
    let v01 = image.value(r0, c0 + 1)?;
    let v10 = image.value(r0 + 1, c0)?;
    let v11 = image.value(r0 + 1, c0 + 1)?;
    Some(
        v00 * (1.0 - fr) * (1.0 - fc) + v01 * (1.0 - fr) * fc + v10 * fr * (1.0 - fc) + v11 * fr * fc,
    )
}

/// Weighted centroid and second moments of the pixels above a fraction of the peak.
fn moments(image: &OdImage) -> Option<((f64, f64), (f64, f64, f64))> {
    let peak = image.max_od()?;
    if !(peak > 0.0) {
        return None;
    }
    let threshold = 0.2 * peak;
    let (mut w, mut sr, mut sc) = (0.0, 0.0, 0.0);
    for ((r, c), &v) in image.od.indexed_iter() {
        if !image.mask[(r, c)] && v > threshold {
            w += v;
            sr += v * r as f64;
            sc += v * c as f64;
        }
    }
    let (cr, cc) = (sr / w, sc / w);
    let (mut mrr, mut mcc, mut mrc) = (0.0, 0.0, 0.0);
    for ((r, c), &v) in image.od.indexed_iter() {
        if !image.mask[(r, c)] && v > threshold {
            let (dr, dc) = (r as f64 - cr, c as f64 - cc);
            mrr += v * dr * dr;
            mcc += v * dc * dc;
            mrc += v * dr * dc;
        }
    }
    Some(((cr, cc), (mrr / w, mcc / w, mrc / w)))
}

/// Gaussian fit along the line through `origin` with direction `(dr, dc)`;
/// returns `(sigma_px, mean_offset_px)`.
fn axis_fit(image: &OdImage, origin: (f64, f64), dir: (f64, f64)) -> Result<(f64, f64)> {
    let (rows, cols) = image.od.dim();
    let reach = (rows.max(cols)) as f64;
    let points: Vec<(f64, f64)> = (-(reach as i64)..=reach as i64)
        .filter_map(|s| {
            let s = s as f64;
            sample(image, origin.0 + s * dir.0, origin.1 + s * dir.1).map(|v| (s, v))
        })
        .collect();
    let fit = fit_gaussian(&points, None)?;
    if !fit.converged {
        return Err(ImagingError::FitFailed {
            context: "cloud width",
            warnings: fit.warnings.join("; "),
        });
    }
    Ok((fit.value("sigma"), fit.value("mean")))
}

/// Gaussian widths along the principal axes of the cloud.
pub fn cloud_widths(image: &OdImage, pixel_pitch_m: f64) -> Result<CloudWidths> {
    if !(pixel_pitch_m > 0.0) {
        return Err(ImagingError::InvalidParameter {
            name: "pixel_pitch_m",
            value: pixel_pitch_m,
            requirement: "must be > 0",
        });
    }
    let valid = image.unmasked_fraction();
    if valid <= 0.5 {
        return Err(ImagingError::InvalidParameter {
            name: "unmasked_fraction",
            value: valid,
            requirement: "more than half the image must be unmasked",
        });
    }
    let ((cr, cc), (mrr, mcc, mrc)) = moments(image).ok_or(ImagingError::EmptyProfile)?;
    // Major-axis angle in (column, row) coordinates.
    let angle = 0.5 * (2.0 * mrc).atan2(mcc - mrr);
    let major = (angle.sin(), angle.cos());
    let minor = (angle.cos(), -angle.sin());

    let mut origin = (cr, cc);
    let (mut s_major, mut s_minor) = (0.0, 0.0);
    // Second pass starts from the fitted centre rather than the moment centroid.
    for _ in 0..2 {
        let (sa, ma) = axis_fit(image, origin, major)?;
        let (sb, mb) = axis_fit(image, origin, minor)?;
        origin = (
            origin.0 + ma * major.0 + mb * minor.0,
            origin.1 + ma * major.1 + mb * minor.1,
        );
        s_major = sa;
        s_minor = sb;
    }
    let (s_major, s_minor, angle) = if s_major >= s_minor {
        (s_major, s_minor, angle)
    } else {
        (s_minor, s_major, angle + std::f64::consts::FRAC_PI_2)
    };
    Ok(CloudWidths {
        sigma_major_m: s_major * pixel_pitch_m,
        sigma_minor_m: s_minor * pixel_pitch_m,
        centroid: origin,
        major_angle_rad: angle,
    })
}

#[cfg(test)]
mod tests;
