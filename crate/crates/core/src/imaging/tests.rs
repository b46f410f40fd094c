use super::*;
use crate::analysis::fit_gaussian;
use ndarray::Array2;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const PITCH: f64 = 10e-6;

/// Optical depth of an elliptical Gaussian cloud, widths in pixels, major
/// axis rotated by `angle` from +x.
fn cloud(shape: (usize, usize), peak: f64, center: (f64, f64), sigma: (f64, f64), angle: f64) -> Array2<f64> {
    let (s, c) = angle.sin_cos();
    Array2::from_shape_fn(shape, |(r, col)| {
        let (dy, dx) = (r as f64 - center.0, col as f64 - center.1);
        let u = c * dx + s * dy;
        let v = -s * dx + c * dy;
        peak * (-0.5 * (u * u / (sigma.0 * sigma.0) + v * v / (sigma.1 * sigma.1))).exp()
    })
}

fn pair_from_od(od: &Array2<f64>, reference_counts: f64, detuning_hz: f64) -> ImagePair {
    ImagePair {
        transmitted: od.mapv(|d| reference_counts * (-d).exp()),
        reference: Array2::from_elem(od.dim(), reference_counts),
        pixel_pitch_m: PITCH,
        detuning_hz,
        metadata: BTreeMap::new(),
    }
}

fn od_image(od: Array2<f64>) -> OdImage {
    OdImage {
        mask: od.mapv(|v| !v.is_finite()),
        od,
        detuning_hz: 0.0,
    }
}

#[test]
fn equal_frames_give_zero_od() {
    let frame = Array2::from_elem((8, 6), 1234.0);
    let pair = ImagePair {
        transmitted: frame.clone(),
        reference: frame,
        pixel_pitch_m: PITCH,
        detuning_hz: 0.0,
        metadata: BTreeMap::new(),
    };
    let img = od_map(&pair, 0.0).unwrap();
    assert!(img.od.iter().all(|&v| v == 0.0));
    assert_eq!(img.masked_count(), 0);
}

#[test]
fn attenuated_frame_gives_uniform_od() {
    let pair = pair_from_od(&Array2::from_elem((5, 5), 2.0), 1000.0, 0.0);
    let img = od_map(&pair, 1.0).unwrap();
    assert!(img.od.iter().all(|&v| (v - 2.0).abs() < 1e-12));
}

#[test]
fn zero_and_dim_pixels_are_masked() {
    let mut pair = pair_from_od(&Array2::zeros((4, 4)), 1000.0, 0.0);
    pair.transmitted[(1, 1)] = 0.0;
    pair.transmitted[(2, 2)] = 3.0;
    pair.reference[(3, 0)] = -1.0;
    let img = od_map(&pair, 5.0).unwrap();
    assert_eq!(img.masked_count(), 3);
    assert!(img.value(1, 1).is_none() && img.value(2, 2).is_none() && img.value(3, 0).is_none());
    assert!(img.max_od().unwrap().is_finite());
}

#[test]
fn mismatched_frames_are_rejected() {
    let mut pair = pair_from_od(&Array2::zeros((4, 4)), 1000.0, 0.0);
    pair.reference = Array2::from_elem((4, 5), 1000.0);
    assert!(matches!(od_map(&pair, 0.0), Err(ImagingError::DimensionMismatch { .. })));
}

proptest! {
    #[test]
    fn od_map_ignores_common_rescaling(scale in 1e-3f64..1e3, seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 50.0).unwrap();
        let od = cloud((12, 10), 1.5, (6.0, 5.0), (3.0, 2.0), 0.0);
        let mut pair = pair_from_od(&od, 4000.0, 0.0);
        pair.transmitted.mapv_inplace(|v| (v + noise.sample(&mut rng)).max(1.0));
        let mut scaled = pair.clone();
        scaled.transmitted *= scale;
        scaled.reference *= scale;
        let a = od_map(&pair, 0.0).unwrap();
        let b = od_map(&scaled, 0.0).unwrap();
        for (x, y) in a.od.iter().zip(b.od.iter()) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }
}

#[test]
fn uniform_image_gives_flat_profile() {
    let img = od_image(Array2::from_elem((20, 30), 0.7));
    let p = averaged_cross_section(&img, Axis::X, 10, 10).unwrap();
    assert_eq!(p.values.len(), 30);
    assert!(p.values.iter().all(|v| (v.unwrap() - 0.7).abs() < 1e-15));
}

#[test]
fn single_slice_is_the_raw_row_or_column() {
    let od = cloud((20, 30), 1.0, (9.0, 14.0), (4.0, 6.0), 0.3);
    let img = od_image(od.clone());
    let row = averaged_cross_section(&img, Axis::X, 1, 7).unwrap();
    let col = averaged_cross_section(&img, Axis::Y, 1, 11).unwrap();
    for (k, v) in row.values.iter().enumerate() {
        assert_eq!(v.unwrap(), od[(7, k)]);
    }
    for (k, v) in col.values.iter().enumerate() {
        assert_eq!(v.unwrap(), od[(k, 11)]);
    }
}

#[test]
fn gaussian_cross_section_keeps_its_width() {
    let img = od_image(cloud((64, 128), 2.0, (32.0, 60.0), (11.0, 5.0), 0.0));
    let p = averaged_cross_section(&img, Axis::X, 10, 32).unwrap();
    let fit = fit_gaussian(&p.points(), None).unwrap();
    assert!((fit.value("sigma") - 11.0).abs() < 0.02 * 11.0);
    assert!((fit.value("mean") - 60.0).abs() < 0.05);
}

#[test]
fn masked_pixels_are_skipped_and_full_columns_missing() {
    let mut od = Array2::from_elem((6, 5), 1.0);
    od[(2, 1)] = f64::NAN;
    od[(3, 1)] = 5.0;
    for r in 0..6 {
        od[(r, 4)] = f64::NAN;
    }
    let p = averaged_cross_section(&od_image(od), Axis::X, 2, 3).unwrap();
    assert_eq!(p.values[1], Some(5.0));
    assert_eq!(p.values[4], None);
    assert_eq!(p.points().len(), 4);
}

#[test]
fn slice_window_must_fit() {
    let img = od_image(Array2::zeros((10, 10)));
    assert!(averaged_cross_section(&img, Axis::X, 6, 1).is_err());
    assert!(averaged_cross_section(&img, Axis::Y, 0, 5).is_err());
}

#[test]
fn averaging_reduces_noise_variance() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let img = od_image(Array2::from_shape_fn((64, 4000), |_| noise.sample(&mut rng)));
    let var = |p: &Profile| {
        let v: Vec<f64> = p.values.iter().flatten().copied().collect();
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
    };
    for n in [1usize, 4, 10, 25] {
        let v = var(&averaged_cross_section(&img, Axis::X, n, 32).unwrap());
        let expected = 1.0 / n as f64;
        assert!((v - expected).abs() < 0.2 * expected, "n = {n}: {v}");
    }
}

fn lorentzian_scan(center: f64, fwhm: f64, detunings: &[f64]) -> Vec<(f64, f64)> {
    let hw = 0.5 * fwhm;
    detunings
        .iter()
        .map(|&d| (d, 1.8 * hw * hw / ((d - center).powi(2) + hw * hw)))
        .collect()
}

#[test]
fn line_centre_and_width_are_recovered() {
    let detunings: Vec<f64> = (-10..=10).map(|i| -0.8e6 + i as f64 * 1e6).collect();
    let cal = calibrate_line_center(&lorentzian_scan(-0.8e6, 6e6, &detunings)).unwrap();
    assert!((cal.center_offset_hz + 0.8e6).abs() < 1e3, "{}", cal.center_offset_hz);
    assert!((cal.fwhm_hz - 6e6).abs() < 0.02 * 6e6, "{}", cal.fwhm_hz);
    let mut line = TransitionLine::default();
    cal.apply(&mut line);
    assert_eq!(line.center_offset, cal.center_offset_hz);
}

#[test]
fn one_sided_scan_is_flagged() {
    let detunings: Vec<f64> = (1..=8).map(|i| i as f64 * 1e6).collect();
    assert!(matches!(
        calibrate_line_center(&lorentzian_scan(-0.8e6, 6e6, &detunings)),
        Err(ImagingError::PoorlyConditioned(_))
    ));
    assert!(calibrate_line_center(&[(0.0, 1.0); 3]).is_err());
}

fn gaussian_profile(peak: f64, center: f64, sigma: f64, len: usize) -> Profile {
    Profile::from_values(
        (0..len)
            .map(|i| peak * (-0.5 * ((i as f64 - center) / sigma).powi(2)).exp())
            .collect(),
    )
}

#[test]
fn detuned_peaks_scale_to_resonance() {
    let line = TransitionLine::default();
    let neg = scaled_peak_od(&[gaussian_profile(2.20, 40.0, 8.0, 80)], -60.8e6, &line, PeakMethod::ProfilePeak)
        .unwrap();
    assert!((neg.scale_factor - 411.738).abs() < 1e-3);
    assert!((neg.od_resonant - 905.8).abs() < 1.0, "{}", neg.od_resonant);
    let pos = scaled_peak_od(&[gaussian_profile(2.82, 40.0, 8.0, 80)], 59.2e6, &line, PeakMethod::ProfilePeak)
        .unwrap();
    assert!((pos.od_resonant - 1100.9).abs() < 1.0, "{}", pos.od_resonant);
}

#[test]
fn resonant_profile_is_unscaled() {
    let line = TransitionLine {
        center_offset: -0.8e6,
        ..TransitionLine::default()
    };
    let p = scaled_peak_od(&[gaussian_profile(1.3, 30.0, 6.0, 60)], -0.8e6, &line, PeakMethod::PerTraceMaxMean)
        .unwrap();
    assert_eq!(p.scale_factor, 1.0);
    assert!((p.od_resonant - 1.3).abs() < 1e-9);
}

#[test]
fn empty_profiles_are_errors() {
    let line = TransitionLine::default();
    let empty = Profile { values: vec![None; 10] };
    assert!(matches!(
        scaled_peak_od(&[empty], 0.0, &line, PeakMethod::ProfilePeak),
        Err(ImagingError::EmptyProfile)
    ));
    assert!(scaled_peak_od(&[], 0.0, &line, PeakMethod::ProfilePeak).is_err());
}

#[test]
fn centroid_jitter_lowers_the_averaged_peak() {
    let line = TransitionLine::default();
    let peaks = |jitter: f64| {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let shift = Normal::new(0.0, jitter.max(1e-300)).unwrap();
        let traces: Vec<Profile> = (0..7)
            .map(|_| {
                let dx = if jitter > 0.0 { shift.sample(&mut rng) } else { 0.0 };
                gaussian_profile(2.5, 50.0 + dx, 6.0, 100)
            })
            .collect();
        let a = scaled_peak_od(&traces, -60e6, &line, PeakMethod::ProfilePeak).unwrap();
        let b = scaled_peak_od(&traces, -60e6, &line, PeakMethod::PerTraceMaxMean).unwrap();
        (a.od_resonant, b.od_resonant)
    };
    let (avg, per) = peaks(0.0);
    assert!((avg - per).abs() < 1e-9 * per);
    let (avg, per) = peaks(5.0);
    assert!(per > avg * 1.02, "{per} vs {avg}");
}

#[test]
fn elliptical_cloud_widths() {
    let (sx, sy) = (0.3e-3 / PITCH, 1.2e-3 / PITCH);
    let od = cloud((300, 200), 1.5, (150.0, 100.0), (sy, sx), std::f64::consts::FRAC_PI_2);
    let w = cloud_widths(&od_image(od), PITCH).unwrap();
    assert!((w.sigma_major_m - 1.2e-3).abs() < 0.03 * 1.2e-3, "{w:?}");
    assert!((w.sigma_minor_m - 0.3e-3).abs() < 0.03 * 0.3e-3, "{w:?}");
    assert!((w.centroid.0 - 150.0).abs() < 0.1 && (w.centroid.1 - 100.0).abs() < 0.1);
}

#[test]
fn rotated_cloud_widths() {
    let od = cloud((200, 200), 1.0, (95.0, 104.0), (30.0, 12.0), 0.5);
    let w = cloud_widths(&od_image(od), PITCH).unwrap();
    assert!((w.sigma_major_m / PITCH - 30.0).abs() < 0.9, "{w:?}");
    assert!((w.sigma_minor_m / PITCH - 12.0).abs() < 0.36, "{w:?}");
    let angle = w.major_angle_rad.rem_euclid(std::f64::consts::PI);
    assert!((angle - 0.5).abs() < 0.02, "{angle}");
}

#[test]
fn circular_cloud_has_equal_widths() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let od = cloud((150, 150), 1.0, (75.0, 75.0), (20.0, 20.0), 0.0).mapv(|v| v + noise.sample(&mut rng));
    let w = cloud_widths(&od_image(od), PITCH).unwrap();
    assert!((w.sigma_major_m - w.sigma_minor_m).abs() < 0.02 * w.sigma_minor_m, "{w:?}");
}

#[test]
fn mostly_masked_images_are_rejected() {
    let mut od = cloud((40, 40), 1.0, (20.0, 20.0), (5.0, 5.0), 0.0);
    od.slice_mut(ndarray::s![..30, ..]).fill(f64::NAN);
    assert!(matches!(
        cloud_widths(&od_image(od), PITCH),
        Err(ImagingError::InvalidParameter { name: "unmasked_fraction", .. })
    ));
}

#[test]
fn resonant_od_1000_survives_the_pipeline() {
    let line = TransitionLine::default();
    for detuning in [-60e6, 60e6] {
        let scale = crate::model::resonance_scale_factor(detuning, line.gamma).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let noise = Normal::new(0.0, 20.0).unwrap();
        let profiles: Vec<Profile> = (0..7)
            .map(|_| {
                let od = cloud((80, 160), 1000.0 / scale, (40.0, 80.0), (25.0, 12.0), 0.0);
                let mut pair = pair_from_od(&od, 20000.0, detuning);
                pair.transmitted.mapv_inplace(|v| v + noise.sample(&mut rng));
                pair.reference.mapv_inplace(|v| v + noise.sample(&mut rng));
                let img = od_map(&pair, 40.0).unwrap();
                averaged_cross_section(&img, Axis::X, 10, 40).unwrap()
            })
            .collect();
        for method in [PeakMethod::ProfilePeak, PeakMethod::PerTraceMaxMean] {
            let peak = scaled_peak_od(&profiles, detuning, &line, method).unwrap();
            assert!((peak.od_resonant - 1000.0).abs() < 100.0, "{detuning}: {peak:?}");
        }
    }
}
