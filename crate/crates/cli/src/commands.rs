//! One function per subcommand. Each computes everything in memory and
//! returns the staged outputs; nothing touches the output directory here.

use std::path::{Path, PathBuf};

use gem_core::analysis::{
    average_then_square, default_cutoff, demodulate_and_square, efficiency_from_traces,
    fit_exponential_decay, square_then_average, temperature_from_expansion, ExpansionFit,
    FitResult, HeterodyneRecord, TraceEfficiency,
};
use gem_core::imaging::io::{load_pair, write_csv_matrix};
use gem_core::imaging::{
    averaged_cross_section, calibrate_line_center, cloud_widths, od_map, scaled_peak_od, Axis,
    CloudWidths, LineCalibration, PeakMethod, ScaledPeak,
};
use gem_core::model::{storage_efficiency, EfficiencyReport, TransitionLine, RB87_MASS_KG};
use gem_core::solver::{
    efficiency_report, raman_line_scan, raman_linewidth, run_storage_recall, sweep_storage_time,
    DecayForm, SimulationResult,
};
use gem_core::table::Table;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::config::{validate_switch_times, RunConfig, SweepVariant};
use crate::error::{CliError, Result};
use crate::output::Outputs;
use crate::plot::{render_svg, PlotOptions};

fn read_table(path: &Path) -> Result<Table> {
    let file =
        std::fs::File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Table::read(file).map_err(|e| CliError::from(e).context(path.display()))
}

fn read_xy(path: &Path) -> Result<Vec<(f64, f64)>> {
    read_table(path)?
        .xy()
        .map_err(|e| CliError::from(e).context(path.display()))
}

#[derive(Debug, Serialize)]
pub struct EnergyBudget {
    pub input: f64,
    pub leak: f64,
    pub echo: f64,
    pub residual: f64,
    pub dissipated: f64,
    pub balance_error: f64,
}

#[derive(Debug, Serialize)]
pub struct SimulateReport {
    pub seed: u64,
    pub efficiency: EfficiencyReport,
    pub echo_peak_time_s: Option<f64>,
    pub energy: EnergyBudget,
    pub write_exponent: f64,
    pub read_exponent: f64,
    /// `(1 − e^−write)·(1 − e^−read)`, the broadband estimate.
    pub analytic_total_efficiency: f64,
    pub coupling_constant: f64,
    pub bandwidth_write_hz: f64,
    pub bandwidth_read_hz: f64,
    pub dt_s: f64,
    pub n_z: usize,
    pub detector_noise_rms: f64,
}

fn traces_table(result: &SimulationResult, noise_rms: f64, seed: u64) -> Table {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = (noise_rms > 0.0).then(|| Normal::new(0.0, noise_rms).expect("finite rms"));
    let mut table = Table::new(
        ["time_s", "input_intensity", "re_field", "im_field", "intensity"]
            .map(String::from)
            .to_vec(),
    );
    for (k, &t) in result.times.iter().enumerate() {
        let mut e = result.probe_out[k];
        if let Some(n) = &noise {
            e.re += n.sample(&mut rng);
            e.im += n.sample(&mut rng);
        }
        table.push_row(&[t, result.probe_in[k].norm_sqr(), e.re, e.im, e.norm_sqr()]);
    }
    table
}

fn spin_table(result: &SimulationResult) -> Table {
    let mut table = Table::new(["time_s", "z_m", "spin_intensity"].map(String::from).to_vec());
    let record = &result.spin_field;
    for (t, row) in record.times.iter().zip(&record.values) {
        for (z, s) in record.z.iter().zip(row) {
            table.push_row(&[*t, *z, s.norm_sqr()]);
        }
    }
    table
}

pub fn simulate(config: &RunConfig, seed: u64) -> Result<Outputs> {
    let setup = config.memory_setup();
    let result = run_storage_recall(&setup)?;
    let efficiency = efficiency_report(&setup, &result)?;
    let length = config.ensemble.length;
    let analytic = |x: f64| if x.is_finite() { storage_efficiency(x) } else { Ok(0.0) };
    let report = SimulateReport {
        seed,
        efficiency,
        echo_peak_time_s: result.echo_peak_time,
        energy: EnergyBudget {
            input: result.input_energy,
            leak: result.leak_energy,
            echo: result.echo_energy,
            residual: result.residual_energy,
            dissipated: result.dissipated_energy,
            balance_error: result.energy_balance_error(),
        },
        write_exponent: result.write_exponent,
        read_exponent: result.read_exponent,
        analytic_total_efficiency: analytic(result.write_exponent)? * analytic(result.read_exponent)?,
        coupling_constant: result.coupling_constant,
        bandwidth_write_hz: config.gradient.eta_write.abs() * length,
        bandwidth_read_hz: config.gradient.eta_read.abs() * length,
        dt_s: result.dt,
        n_z: config.grid.n_z,
        detector_noise_rms: config.detector_noise_rms,
    };
    let mut out = Outputs::new();
    out.add_table(
        &config.output.traces_csv,
        &traces_table(&result, config.detector_noise_rms, seed),
    );
    if let Some(name) = &config.output.spin_grid_csv {
        out.add_table(name, &spin_table(&result));
    }
    out.add_json(&config.output.report_json, &report);
    Ok(out)
}

#[derive(Debug, Serialize)]
pub struct DecayCurve {
    pub label: String,
    pub storage_rate_hz: f64,
    pub form: DecayForm,
    /// Fitted `1/e` storage time; absent with fewer than three points.
    pub tau_s: Option<f64>,
    pub tau_std_error_s: Option<f64>,
    pub fit: Option<FitResult>,
}

#[derive(Debug, Serialize)]
pub struct SweepReport {
    pub seed: u64,
    pub switch_times_s: Vec<f64>,
    pub curves: Vec<DecayCurve>,
}

pub fn sweep(config: &RunConfig, seed: u64, ts_list: Option<Vec<f64>>) -> Result<Outputs> {
    let sweep_cfg = config.sweep.clone().unwrap_or_default();
    let times = ts_list.unwrap_or(sweep_cfg.switch_times_s);
    validate_switch_times(&times, false)?;
    let variants = if sweep_cfg.variants.is_empty() {
        vec![SweepVariant {
            label: "base".into(),
            storage_rate_hz: config.decoherence.storage_rate,
            form: config.decoherence.form,
        }]
    } else {
        sweep_cfg.variants
    };

    let storage: Vec<f64> = times.iter().map(|t| 2.0 * t).collect();
    let mut table = Table::from_columns(
        &["switch_time_s", "storage_time_s", "log10_storage_time"],
        vec![
            times.clone(),
            storage.clone(),
            storage.iter().map(|t| t.log10()).collect(),
        ],
    );
    let mut curves = Vec::with_capacity(variants.len());
    for v in variants {
        let mut setup = config.memory_setup();
        setup.decoherence.storage_rate = v.storage_rate_hz;
        setup.decoherence.form = v.form;
        let points = sweep_storage_time(&setup, &times).map_err(|e| CliError::from(e).context(&v.label))?;
        let eff: Vec<f64> = points.iter().map(|p| p.efficiency).collect();
        table.headers.push(format!("efficiency_{}", v.label));
        table.columns.push(eff.clone());
        table.headers.push(format!("log10_efficiency_{}", v.label));
        table.columns.push(eff.iter().map(|e| e.log10()).collect());

        let fit = if points.len() >= 3 {
            let data: Vec<(f64, f64)> = storage.iter().copied().zip(eff).collect();
            Some(fit_exponential_decay(&data).map_err(|e| CliError::from(e).context(&v.label))?)
        } else {
            None
        };
        let tau = fit.as_ref().and_then(|f| f.parameters.iter().find(|p| p.name == "tau"));
        curves.push(DecayCurve {
            tau_s: tau.map(|p| p.value),
            tau_std_error_s: tau.map(|p| p.std_error),
            label: v.label,
            storage_rate_hz: v.storage_rate_hz,
            form: v.form,
            fit,
        });
    }
    let mut out = Outputs::new();
    out.add_table(&config.output.decay_csv, &table);
    out.add_json(
        &config.output.decay_report_json,
        &SweepReport {
            seed,
            switch_times_s: times,
            curves,
        },
    );
    Ok(out)
}

#[derive(Debug, Serialize)]
pub struct RamanLine {
    pub eta_hz_per_m: f64,
    pub bandwidth_hz: f64,
    pub peak_optical_depth: f64,
    pub absorption_fwhm_hz: Option<f64>,
    pub od_fwhm_hz: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct RamanReport {
    pub seed: u64,
    pub raman_linewidth_hz: f64,
    pub scan_range_hz: f64,
    pub lines: Vec<RamanLine>,
}

pub struct RamanArgs {
    pub etas: Option<Vec<f64>>,
    pub scan_range_hz: Option<f64>,
    pub points: usize,
}

pub fn raman_scan(config: &RunConfig, seed: u64, args: RamanArgs) -> Result<Outputs> {
    let etas = args
        .etas
        .unwrap_or_else(|| vec![config.gradient.eta_write, config.gradient.eta_read]);
    if etas.is_empty() {
        return Err(CliError::Validation("raman-scan: no gradients given".into()));
    }
    let length = config.ensemble.length;
    let widest = etas.iter().map(|e| e.abs() * length).fold(0.0, f64::max);
    let linewidth = raman_linewidth(&config.line, &config.coupling);
    let range = args
        .scan_range_hz
        .unwrap_or_else(|| 3.0 * widest.max(20.0 * linewidth));
    let profiles = etas
        .iter()
        .map(|&eta| {
            raman_line_scan(&config.ensemble, &config.line, &config.coupling, eta, range, args.points)
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;

    let mut table = Table::new(vec!["detuning_hz".into()]);
    table.columns[0] = profiles[0].points.iter().map(|p| p.detuning_hz).collect();
    for (i, p) in profiles.iter().enumerate() {
        table.headers.push(format!("absorbed_{i}"));
        table.columns.push(p.points.iter().map(|q| q.absorbed_fraction).collect());
    }
    for (i, p) in profiles.iter().enumerate() {
        table.headers.push(format!("od_{i}"));
        table.columns.push(p.points.iter().map(|q| q.optical_depth).collect());
    }
    let lines = profiles
        .iter()
        .map(|p| RamanLine {
            eta_hz_per_m: p.eta_hz_per_m,
            bandwidth_hz: p.eta_hz_per_m.abs() * length,
            peak_optical_depth: p.peak_optical_depth(),
            absorption_fwhm_hz: p.absorption_fwhm(),
            od_fwhm_hz: p.od_fwhm(),
        })
        .collect();
    let mut out = Outputs::new();
    out.add_table("raman.csv", &table);
    out.add_json(
        "raman.json",
        &RamanReport {
            seed,
            raman_linewidth_hz: linewidth,
            scan_range_hz: range,
            lines,
        },
    );
    Ok(out)
}

pub struct OdMapArgs {
    pub transmitted: PathBuf,
    pub reference: PathBuf,
    pub meta: PathBuf,
    pub floor: Option<f64>,
    pub dark_noise_std: Option<f64>,
    pub axis: Axis,
    pub slices: Option<usize>,
    pub center: Option<usize>,
    pub widths: bool,
}

#[derive(Debug, Serialize)]
pub struct ProfileReport {
    pub axis: Axis,
    pub n_slices: usize,
    pub center: usize,
    pub scaled_peak: Option<ScaledPeak>,
    pub scaled_peak_error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct OdMapReport {
    pub rows: usize,
    pub cols: usize,
    pub detuning_hz: f64,
    pub intensity_floor: f64,
    pub masked_pixels: usize,
    pub unmasked_fraction: f64,
    pub max_od: Option<f64>,
    pub profile: Option<ProfileReport>,
    pub cloud: Option<CloudWidths>,
}

pub fn odmap(args: OdMapArgs, line: &TransitionLine) -> Result<Outputs> {
    let floor = match (args.floor, args.dark_noise_std) {
        (Some(f), _) => f,
        (None, Some(s)) => 2.0 * s,
        (None, None) => 0.0,
    };
    if !(floor >= 0.0 && floor.is_finite()) {
        return Err(CliError::Validation(format!("invalid intensity floor {floor}: must be >= 0")));
    }
    let pair = load_pair(&args.transmitted, &args.reference, &args.meta)?;
    let image = od_map(&pair, floor)?;
    let (rows, cols) = image.od.dim();
    let mut out = Outputs::new();
    let mut matrix = Vec::new();
    write_csv_matrix(&mut matrix, &image.od).map_err(|e| CliError::Io(e.to_string()))?;
    out.add("od.csv", matrix);

    let profile = match args.slices {
        Some(n) => {
            let across = match args.axis {
                Axis::X => rows,
                Axis::Y => cols,
            };
            let center = args.center.unwrap_or(across / 2);
            let p = averaged_cross_section(&image, args.axis, n, center)?;
            let points = p.points();
            out.add_table(
                "profile.csv",
                &Table::from_columns(
                    &["pixel", "od"],
                    vec![points.iter().map(|q| q.0).collect(), points.iter().map(|q| q.1).collect()],
                ),
            );
            let (scaled_peak, scaled_peak_error) =
                match scaled_peak_od(&[p], pair.detuning_hz, line, PeakMethod::ProfilePeak) {
                    Ok(s) => (Some(s), None),
                    Err(e) => (None, Some(e.to_string())),
                };
            Some(ProfileReport {
                axis: args.axis,
                n_slices: n,
                center,
                scaled_peak,
                scaled_peak_error,
            })
        }
        None => None,
    };
    let cloud = if args.widths {
        Some(cloud_widths(&image, pair.pixel_pitch_m)?)
    } else {
        None
    };
    out.add_json(
        "odmap.json",
        &OdMapReport {
            rows,
            cols,
            detuning_hz: pair.detuning_hz,
            intensity_floor: floor,
            masked_pixels: image.masked_count(),
            unmasked_fraction: image.unmasked_fraction(),
            max_od: image.max_od(),
            profile,
            cloud,
        },
    );
    Ok(out)
}

pub fn calibrate(scan: &Path) -> Result<(Outputs, LineCalibration)> {
    let cal = calibrate_line_center(&read_xy(scan)?).map_err(|e| CliError::from(e).context(scan.display()))?;
    let mut out = Outputs::new();
    out.add_json("calibration.json", &cal);
    Ok((out, cal))
}

#[derive(Debug, Clone)]
pub struct Shot {
    pub time_s: f64,
    pub transmitted: PathBuf,
    pub reference: PathBuf,
    pub meta: PathBuf,
}

#[derive(Debug, Serialize)]
pub struct WidthSample {
    pub time_s: f64,
    pub sigma_major_m: f64,
    pub sigma_minor_m: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct TemperatureReport {
    pub mass_kg: f64,
    pub temperature_k: f64,
    pub major: ExpansionFit,
    pub minor: Option<ExpansionFit>,
    pub widths: Vec<WidthSample>,
}

pub fn temperature(
    widths_csv: Option<&Path>,
    shots: &[Shot],
    floor: f64,
    mass: Option<f64>,
) -> Result<(Outputs, TemperatureReport)> {
    let mass = mass.unwrap_or(RB87_MASS_KG);
    let samples: Vec<WidthSample> = match (widths_csv, shots.is_empty()) {
        (Some(path), true) => read_xy(path)?
            .into_iter()
            .map(|(t, s)| WidthSample {
                time_s: t,
                sigma_major_m: s,
                sigma_minor_m: None,
            })
            .collect(),
        (None, false) => shots
            .iter()
            .map(|shot| {
                let pair = load_pair(&shot.transmitted, &shot.reference, &shot.meta)?;
                let w = cloud_widths(&od_map(&pair, floor)?, pair.pixel_pitch_m)
                    .map_err(|e| CliError::from(e).context(shot.transmitted.display()))?;
                Ok(WidthSample {
                    time_s: shot.time_s,
                    sigma_major_m: w.sigma_major_m,
                    sigma_minor_m: Some(w.sigma_minor_m),
                })
            })
            .collect::<Result<_>>()?,
        _ => {
            return Err(CliError::Validation(
                "temperature: give either --widths or one or more --shot, not both".into(),
            ))
        }
    };
    let major: Vec<(f64, f64)> = samples.iter().map(|s| (s.time_s, s.sigma_major_m)).collect();
    let major = temperature_from_expansion(&major, mass)?;
    let minor = samples
        .iter()
        .map(|s| s.sigma_minor_m.map(|m| (s.time_s, m)))
        .collect::<Option<Vec<_>>>()
        .map(|pts| temperature_from_expansion(&pts, mass))
        .transpose()?;
    let report = TemperatureReport {
        mass_kg: mass,
        temperature_k: major.temperature_k,
        major,
        minor,
        widths: samples,
    };
    let mut out = Outputs::new();
    out.add_json("temperature.json", &report);
    Ok((out, report))
}

pub fn decay_fit(data: &Path) -> Result<(Outputs, FitResult)> {
    let fit = fit_exponential_decay(&read_xy(data)?).map_err(|e| CliError::from(e).context(data.display()))?;
    if !fit.converged {
        return Err(CliError::Numerical(format!(
            "{}: exponential fit did not converge ({})",
            data.display(),
            fit.warnings.join("; ")
        )));
    }
    let mut out = Outputs::new();
    out.add_json("decay_fit.json", &fit);
    Ok((out, fit))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum AverageMode {
    /// Square each demodulated record, then average.
    Intensity,
    /// Average demodulated amplitudes, then square.
    Amplitude,
}

pub struct DemodArgs {
    pub records: Vec<PathBuf>,
    pub reference_records: Vec<PathBuf>,
    pub sample_rate_hz: f64,
    pub intermediate_frequency_hz: f64,
    pub phase_rad: f64,
    pub cutoff_hz: Option<f64>,
    pub mode: AverageMode,
    pub window_s: Option<(f64, f64)>,
}

#[derive(Debug, Serialize)]
pub struct DemodReport {
    pub records: usize,
    pub reference_records: usize,
    pub mode: AverageMode,
    pub cutoff_hz: f64,
    pub window_s: Option<(f64, f64)>,
    pub efficiency: Option<TraceEfficiency>,
}

fn load_record(path: &Path, args: &DemodArgs) -> Result<HeterodyneRecord> {
    let table = read_table(path)?;
    let samples = table.columns.last().cloned().unwrap_or_default();
    let record = HeterodyneRecord {
        samples,
        sample_rate_hz: args.sample_rate_hz,
        intermediate_frequency_hz: args.intermediate_frequency_hz,
    };
    record
        .validate()
        .map_err(|e| CliError::from(e).context(path.display()))?;
    Ok(record)
}

pub fn demod(args: DemodArgs) -> Result<Outputs> {
    if args.records.is_empty() {
        return Err(CliError::Validation("demod: no records given".into()));
    }
    let cutoff = args
        .cutoff_hz
        .unwrap_or_else(|| default_cutoff(args.intermediate_frequency_hz));
    let records = args
        .records
        .iter()
        .map(|p| load_record(p, &args))
        .collect::<Result<Vec<_>>>()?;
    let envelope = match args.mode {
        AverageMode::Intensity => square_then_average(&records, args.phase_rad, cutoff)?,
        AverageMode::Amplitude => average_then_square(&records, args.phase_rad, cutoff)?,
    };
    let times: Vec<f64> = (0..envelope.len()).map(|i| records[0].sample_time(i)).collect();

    let efficiency = if args.reference_records.is_empty() {
        None
    } else {
        let window = |trace: Vec<f64>| -> Vec<f64> {
            match args.window_s {
                Some((a, b)) => trace
                    .into_iter()
                    .zip(&times)
                    .filter(|(_, t)| **t >= a && **t <= b)
                    .map(|(v, _)| v)
                    .collect(),
                None => trace,
            }
        };
        let echoes = records
            .iter()
            .map(|r| demodulate_and_square(r, args.phase_rad, cutoff).map(window))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let inputs = args
            .reference_records
            .iter()
            .map(|p| {
                let r = load_record(p, &args)?;
                Ok(demodulate_and_square(&r, args.phase_rad, cutoff)?)
            })
            .collect::<Result<Vec<_>>>()?;
        Some(efficiency_from_traces(&inputs, &echoes, 1.0 / args.sample_rate_hz)?)
    };

    let mut out = Outputs::new();
    out.add_table(
        "envelope.csv",
        &Table::from_columns(&["time_s", "envelope_sq"], vec![times, envelope]),
    );
    out.add_json(
        "demod.json",
        &DemodReport {
            records: records.len(),
            reference_records: args.reference_records.len(),
            mode: args.mode,
            cutoff_hz: cutoff,
            window_s: args.window_s,
            efficiency,
        },
    );
    Ok(out)
}

pub fn plot(csv: &Path, name: &str, options: &PlotOptions) -> Result<Outputs> {
    let svg = render_svg(&read_table(csv)?, options).map_err(|e| e.context(csv.display()))?;
    let mut out = Outputs::new();
    out.add(name, svg.into_bytes());
    Ok(out)
}
