//! Command-line driver for the gradient echo memory simulator and the
//! trap characterization analyses.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod plot;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gem_core::imaging::Axis;
use gem_core::model::TransitionLine;

use commands::{AverageMode, DemodArgs, OdMapArgs, RamanArgs, Shot};
use config::RunConfig;
use error::{CliError, Result};
use output::Outputs;
use plot::PlotOptions;

#[derive(Debug, Parser)]
#[command(name = "gemsim", version, about = "Gradient echo memory simulation and analysis")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for all output files.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Overrides the configuration seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for parallel sweeps (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AxisArg {
    X,
    Y,
}

impl From<AxisArg> for Axis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::X => Axis::X,
            AxisArg::Y => Axis::Y,
        }
    }
}

#[derive(Debug, Args)]
pub struct LineArgs {
    /// Measured line-centre offset; overrides the configuration.
    #[arg(long)]
    pub line_offset_hz: Option<f64>,
    /// Natural linewidth; overrides the configuration.
    #[arg(long)]
    pub gamma_hz: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one storage and recall; writes traces and an efficiency report.
    Simulate,
    /// Sweep the switch time and fit the storage lifetime of each curve.
    Sweep {
        /// Comma-separated switch times in seconds.
        #[arg(long, value_delimiter = ',')]
        ts_list: Option<Vec<f64>>,
    },
    /// Steady-state Raman absorption under the configured gradients.
    RamanScan {
        /// Gradients to scan (Hz/m, comma-separated); default write and read.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        eta_hz_per_m: Option<Vec<f64>>,
        #[arg(long)]
        scan_range_hz: Option<f64>,
        #[arg(long, default_value_t = 2001)]
        points: usize,
    },
    /// Optical-depth map of one absorption shot.
    Odmap {
        #[arg(long)]
        transmitted: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        /// Sidecar JSON with detuning_hz and pixel_pitch_m.
        #[arg(long)]
        meta: PathBuf,
        /// Transmitted counts below this are masked.
        #[arg(long)]
        floor: Option<f64>,
        /// Sets the floor to twice this value when --floor is absent.
        #[arg(long)]
        dark_noise_std: Option<f64>,
        /// Averaged cross-section over this many slices.
        #[arg(long)]
        slices: Option<usize>,
        #[arg(long, value_enum, default_value = "x")]
        axis: AxisArg,
        /// Centre slice of the cross-section (default: middle).
        #[arg(long)]
        center: Option<usize>,
        /// Also fit the cloud widths.
        #[arg(long)]
        widths: bool,
        #[command(flatten)]
        line: LineArgs,
    },
    /// Lorentzian line-centre fit of a (detuning_hz, peak_od) scan.
    Calibrate { scan: PathBuf },
    /// Ballistic-expansion temperature from widths or image shots.
    Temperature {
        /// CSV of (time_s, sigma_m).
        #[arg(long)]
        widths: Option<PathBuf>,
        /// TIME_S TRANSMITTED REFERENCE META; repeat per expansion time.
        #[arg(long, num_args = 4, value_names = ["TIME_S", "TRANSMITTED", "REFERENCE", "META"])]
        shot: Vec<String>,
        #[arg(long, default_value_t = 0.0)]
        floor: f64,
        #[arg(long)]
        mass_kg: Option<f64>,
    },
    /// Exponential fit of (storage_time_s, efficiency) data.
    DecayFit { data: PathBuf },
    /// Demodulate heterodyne records; optional efficiency against reference records.
    Demod {
        /// CSV records; the last column holds the samples.
        #[arg(required = true)]
        records: Vec<PathBuf>,
        /// Input-pulse records measured without storage.
        #[arg(long, num_args = 1..)]
        reference: Vec<PathBuf>,
        #[arg(long)]
        sample_rate_hz: f64,
        #[arg(long)]
        if_hz: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        phase_rad: f64,
        /// Low-pass cutoff (default: a fifth of the intermediate frequency).
        #[arg(long)]
        cutoff_hz: Option<f64>,
        #[arg(long, value_enum, default_value = "intensity")]
        average: AverageMode,
        /// Echo integration window START,END in seconds from the record start.
        #[arg(long, value_delimiter = ',', num_args = 2)]
        window_s: Option<Vec<f64>>,
    },
    /// Render a CSV as an SVG line plot.
    Plot {
        csv: PathBuf,
        /// Output file name (default: input stem with .svg).
        #[arg(long)]
        out: Option<String>,
        #[arg(long)]
        loglog: bool,
        #[arg(long)]
        title: Option<String>,
    },
}

fn require_config(cli: &Cli) -> Result<RunConfig> {
    match &cli.config {
        Some(path) => RunConfig::load(path),
        None => Err(CliError::Validation("this command needs --config".into())),
    }
}

fn line_for(cli: &Cli, args: &LineArgs) -> Result<TransitionLine> {
    let mut line = match &cli.config {
        Some(path) => RunConfig::load(path)?.line,
        None => TransitionLine::default(),
    };
    if let Some(o) = args.line_offset_hz {
        line.center_offset = o;
    }
    if let Some(g) = args.gamma_hz {
        line.gamma = g;
    }
    line.validate()?;
    Ok(line)
}

fn parse_shots(raw: &[String]) -> Result<Vec<Shot>> {
    raw.chunks(4)
        .map(|c| {
            let time_s = c[0]
                .parse::<f64>()
                .map_err(|_| CliError::Validation(format!("--shot: `{}` is not a time in seconds", c[0])))?;
            Ok(Shot {
                time_s,
                transmitted: PathBuf::from(&c[1]),
                reference: PathBuf::from(&c[2]),
                meta: PathBuf::from(&c[3]),
            })
        })
        .collect()
}

/// Runs one command; output files are written only after everything succeeded.
/// Returns text meant for standard output.
pub fn run(cli: &Cli) -> Result<String> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be >= 1".into()));
        }
        // Fails only if a pool already exists, in which case that one is used.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let (outputs, stdout): (Outputs, String) = match &cli.command {
        Command::Simulate => {
            let cfg = require_config(cli)?;
            let seed = cli.seed.unwrap_or(cfg.seed);
            (commands::simulate(&cfg, seed)?, String::new())
        }
        Command::Sweep { ts_list } => {
            let cfg = require_config(cli)?;
            let seed = cli.seed.unwrap_or(cfg.seed);
            (commands::sweep(&cfg, seed, ts_list.clone())?, String::new())
        }
        Command::RamanScan {
            eta_hz_per_m,
            scan_range_hz,
            points,
        } => {
            let cfg = require_config(cli)?;
            let seed = cli.seed.unwrap_or(cfg.seed);
            let args = RamanArgs {
                etas: eta_hz_per_m.clone(),
                scan_range_hz: *scan_range_hz,
                points: *points,
            };
            (commands::raman_scan(&cfg, seed, args)?, String::new())
        }
        Command::Odmap {
            transmitted,
            reference,
            meta,
            floor,
            dark_noise_std,
            slices,
            axis,
            center,
            widths,
            line,
        } => {
            let line = line_for(cli, line)?;
            let args = OdMapArgs {
                transmitted: transmitted.clone(),
                reference: reference.clone(),
                meta: meta.clone(),
                floor: *floor,
                dark_noise_std: *dark_noise_std,
                axis: (*axis).into(),
                slices: *slices,
                center: *center,
                widths: *widths,
            };
            (commands::odmap(args, &line)?, String::new())
        }
        Command::Calibrate { scan } => {
            let (out, cal) = commands::calibrate(scan)?;
            let text = format!(
                "center_offset_hz={}\nfwhm_hz={}\n",
                cal.center_offset_hz, cal.fwhm_hz
            );
            (out, text)
        }
        Command::Temperature {
            widths,
            shot,
            floor,
            mass_kg,
        } => {
            let shots = parse_shots(shot)?;
            let (out, report) = commands::temperature(widths.as_deref(), &shots, *floor, *mass_kg)?;
            let text = format!(
                "temperature_k={}\nsigma0_m={}\n",
                report.temperature_k, report.major.sigma0_m
            );
            (out, text)
        }
        Command::DecayFit { data } => {
            let (out, fit) = commands::decay_fit(data)?;
            (out, fit.to_key_value())
        }
        Command::Demod {
            records,
            reference,
            sample_rate_hz,
            if_hz,
            phase_rad,
            cutoff_hz,
            average,
            window_s,
        } => {
            let args = DemodArgs {
                records: records.clone(),
                reference_records: reference.clone(),
                sample_rate_hz: *sample_rate_hz,
                intermediate_frequency_hz: *if_hz,
                phase_rad: *phase_rad,
                cutoff_hz: *cutoff_hz,
                mode: *average,
                window_s: window_s.as_ref().map(|w| (w[0], w[1])),
            };
            (commands::demod(args)?, String::new())
        }
        Command::Plot {
            csv,
            out,
            loglog,
            title,
        } => {
            let name = match out {
                Some(n) => n.clone(),
                None => format!(
                    "{}.svg",
                    csv.file_stem().and_then(|s| s.to_str()).unwrap_or("plot")
                ),
            };
            if name.is_empty() || std::path::Path::new(&name).components().count() != 1 {
                return Err(CliError::Validation(format!(
                    "--out: `{name}` must be a plain file name"
                )));
            }
            let options = PlotOptions {
                title: title.clone(),
                loglog: *loglog,
            };
            (commands::plot(csv, &name, &options)?, String::new())
        }
    };
    for path in outputs.commit(&cli.out_dir)? {
        log::info!("wrote {}", path.display());
    }
    Ok(stdout)
}
