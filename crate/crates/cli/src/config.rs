//! JSON run configuration. Every key carries its unit; unknown keys are
//! rejected with their path in the document.

use std::path::Path;

use gem_core::model::{EnsembleProfile, GradientSchedule, RamanCoupling, TransitionLine};
use gem_core::solver::{
    CouplingGate, DecayForm, DecoherenceModel, MemorySetup, ProbePulse, SimulationGrid,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

fn default_traces() -> String {
    "traces.csv".into()
}

fn default_report() -> String {
    "report.json".into()
}

fn default_decay_csv() -> String {
    "decay.csv".into()
}

fn default_decay_report() -> String {
    "decay_fit.json".into()
}

/// File names, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_traces")]
    pub traces_csv: String,
    #[serde(default = "default_report")]
    pub report_json: String,
    /// Long-format `|S(z, t)|²` table; skipped when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spin_grid_csv: Option<String>,
    #[serde(default = "default_decay_csv")]
    pub decay_csv: String,
    #[serde(default = "default_decay_report")]
    pub decay_report_json: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            traces_csv: default_traces(),
            report_json: default_report(),
            spin_grid_csv: None,
            decay_csv: default_decay_csv(),
            decay_report_json: default_decay_report(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepVariant {
    pub label: String,
    pub storage_rate_hz: f64,
    #[serde(default)]
    pub form: DecayForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub switch_times_s: Vec<f64>,
    /// One decay curve per variant; empty means the `decoherence` section alone.
    #[serde(default)]
    pub variants: Vec<SweepVariant>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub ensemble: EnsembleProfile,
    #[serde(default)]
    pub line: TransitionLine,
    pub coupling: RamanCoupling,
    pub gradient: GradientSchedule,
    pub pulse: ProbePulse,
    #[serde(default)]
    pub decoherence: DecoherenceModel,
    #[serde(default)]
    pub grid: SimulationGrid,
    #[serde(default)]
    pub coupling_gate: CouplingGate,
    #[serde(default)]
    pub output: OutputConfig,
    /// Standard deviation of white noise added to each quadrature of the
    /// output field in the written traces.
    #[serde(default)]
    pub detector_noise_rms: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

fn check_file_name(field: &str, name: &str) -> Result<()> {
    let p = Path::new(name);
    if name.is_empty() || p.is_absolute() || p.components().count() != 1 {
        return Err(CliError::Validation(format!(
            "output.{field}: `{name}` must be a plain file name"
        )));
    }
    Ok(())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Validation(format!("at `{path}`: {}", e.into_inner()))
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| e.context(path.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Component invariants plus the sign flip storage needs.
    pub fn validate(&self) -> Result<()> {
        let section = |name: &'static str| move |e: gem_core::model::ModelError| CliError::from(e).context(name);
        self.ensemble.validate().map_err(section("ensemble"))?;
        self.line.validate().map_err(section("line"))?;
        self.coupling.validate().map_err(section("coupling"))?;
        self.gradient.validate_for_recall().map_err(section("gradient"))?;
        self.pulse.validate().map_err(section("pulse"))?;
        self.decoherence.validate().map_err(section("decoherence"))?;
        if self.grid.n_z < 16 {
            return Err(CliError::Validation(format!(
                "grid: invalid `n_z` = {}: must be >= 16",
                self.grid.n_z
            )));
        }
        if !(self.detector_noise_rms >= 0.0 && self.detector_noise_rms.is_finite()) {
            return Err(CliError::Validation(format!(
                "invalid `detector_noise_rms` = {}: must be >= 0",
                self.detector_noise_rms
            )));
        }
        check_file_name("traces_csv", &self.output.traces_csv)?;
        check_file_name("report_json", &self.output.report_json)?;
        check_file_name("decay_csv", &self.output.decay_csv)?;
        check_file_name("decay_report_json", &self.output.decay_report_json)?;
        if let Some(name) = &self.output.spin_grid_csv {
            check_file_name("spin_grid_csv", name)?;
        }
        if let Some(sweep) = &self.sweep {
            validate_switch_times(&sweep.switch_times_s, true)?;
            let mut seen = std::collections::BTreeSet::new();
            for v in &sweep.variants {
                if v.label.is_empty() || v.label.contains([',', '"', '\n']) {
                    return Err(CliError::Validation(format!(
                        "sweep.variants: label `{}` must be non-empty without commas or quotes",
                        v.label
                    )));
                }
                if !seen.insert(v.label.as_str()) {
                    return Err(CliError::Validation(format!(
                        "sweep.variants: duplicate label `{}`",
                        v.label
                    )));
                }
                if !(v.storage_rate_hz >= 0.0 && v.storage_rate_hz.is_finite()) {
                    return Err(CliError::Validation(format!(
                        "sweep.variants.{}: invalid `storage_rate_hz` = {}: must be >= 0",
                        v.label, v.storage_rate_hz
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn memory_setup(&self) -> MemorySetup {
        MemorySetup {
            ensemble: self.ensemble.clone(),
            line: self.line.clone(),
            coupling: self.coupling.clone(),
            pulse: self.pulse.clone(),
            schedule: self.gradient.clone(),
            decoherence: self.decoherence.clone(),
            grid: self.grid.clone(),
            gate: self.coupling_gate,
        }
    }
}

pub fn validate_switch_times(times: &[f64], allow_empty: bool) -> Result<()> {
    if times.is_empty() && !allow_empty {
        return Err(CliError::Validation(
            "no switch times given: pass --ts-list or set sweep.switch_times_s".into(),
        ));
    }
    if let Some(t) = times.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(CliError::Validation(format!(
            "invalid switch time {t} s: must be > 0"
        )));
    }
    Ok(())
}
