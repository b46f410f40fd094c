use gem_core::analysis::AnalysisError;
use gem_core::imaging::ImagingError;
use gem_core::model::ModelError;
use gem_core::solver::SolverError;
use gem_core::table::TableError;
use thiserror::Error;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    /// Prefixes the message with `context: `, keeping the class.
    pub fn context(self, context: impl std::fmt::Display) -> Self {
        match self {
            CliError::Validation(m) => CliError::Validation(format!("{context}: {m}")),
            CliError::Numerical(m) => CliError::Numerical(format!("{context}: {m}")),
            CliError::Io(m) => CliError::Io(format!("{context}: {m}")),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Validation(e.to_string())
    }
}

fn solver_class(e: &SolverError) -> fn(String) -> CliError {
    match e {
        SolverError::Model(_) => CliError::Validation,
        SolverError::NumericalInstability { .. } | SolverError::ZeroInputEnergy => CliError::Numerical,
        SolverError::SweepRun { source, .. } => solver_class(source),
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        solver_class(&e)(e.to_string())
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::ZeroInputEnergy => CliError::Numerical(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ImagingError> for CliError {
    fn from(e: ImagingError) -> Self {
        match e {
            ImagingError::Io { .. } | ImagingError::Format { .. } => CliError::Io(e.to_string()),
            ImagingError::Analysis(a) => a.into(),
            ImagingError::FitFailed { .. } | ImagingError::PoorlyConditioned(_) => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<TableError> for CliError {
    fn from(e: TableError) -> Self {
        CliError::Io(e.to_string())
    }
}
