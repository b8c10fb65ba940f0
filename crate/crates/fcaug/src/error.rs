//! Errors of the file and command layer, with their process exit codes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use fcaug_core::{AugmentError, DataError, IimlError, MlpError, ModelError, SolverError};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{}:{line}: column `{column}`: {message}", path.display())]
    Schema { path: PathBuf, line: u64, column: String, message: String },
    #[error("{0}")]
    Data(String),
    #[error("{}: {message}", path.display())]
    Artifact { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{message}")]
    Solver { case_id: Option<u32>, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io { path: path.to_path_buf(), source }
    }

    pub fn artifact(path: &Path, message: impl Into<String>) -> Self {
        Error::Artifact { path: path.to_path_buf(), message: message.into() }
    }

    pub fn schema(path: &Path, line: u64, column: &str, message: impl Into<String>) -> Self {
        Error::Schema { path: path.to_path_buf(), line, column: column.to_string(), message: message.into() }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Schema { .. } => "schema",
            Error::Data(_) => "data",
            Error::Artifact { .. } => "artifact",
            Error::Io { .. } => "io",
            Error::Solver { .. } => "solver",
        }
    }

    /// 2 configuration, 3 solver divergence, 4 data and files.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Solver { .. } => 3,
            _ => 4,
        }
    }

    pub fn case_id(&self) -> Option<u32> {
        match self {
            Error::Solver { case_id, .. } => *case_id,
            _ => None,
        }
    }

    /// Key-value block written to stderr on failure.
    pub fn report(&self) -> String {
        let mut s = String::from("[error]\n");
        let _ = writeln!(s, "kind = \"{}\"", self.kind());
        let _ = writeln!(s, "exit_code = {}", self.exit_code());
        if let Some(id) = self.case_id() {
            let _ = writeln!(s, "case_id = {id}");
        }
        let _ = writeln!(s, "message = {:?}", self.to_string());
        s
    }
}

fn solver_case(e: &SolverError) -> Option<u32> {
    match e {
        SolverError::SolverDiverged { case_id, .. }
        | SolverError::StepLimit { case_id, .. }
        | SolverError::OutsideValidity { case_id, .. } => Some(*case_id),
        _ => None,
    }
}

impl From<SolverError> for Error {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Model(m) => m.into(),
            e => Error::Solver { case_id: solver_case(&e), message: e.to_string() },
        }
    }
}

impl From<ModelError> for Error {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::InvalidConditions { .. } | ModelError::FieldLength { .. } | ModelError::InvalidAugmentation { .. } => {
                Error::Data(e.to_string())
            }
            ModelError::InvalidParameter { .. } | ModelError::TemperatureOutOfRange { .. } => Error::Config(e.to_string()),
            ModelError::NonFiniteResidual { .. } => Error::Solver { case_id: None, message: e.to_string() },
        }
    }
}

impl From<AugmentError> for Error {
    fn from(e: AugmentError) -> Self {
        match e {
            AugmentError::Solver(s) => s.into(),
            AugmentError::Model(m) => m.into(),
            AugmentError::Relaxation(_) => Error::Config(e.to_string()),
            AugmentError::NotConverged { case_id, .. } => Error::Solver { case_id: Some(case_id), message: e.to_string() },
            AugmentError::Feature(_) => Error::Solver { case_id: None, message: e.to_string() },
        }
    }
}

impl From<IimlError> for Error {
    fn from(e: IimlError) -> Self {
        match e {
            IimlError::Baseline { case_id, ref source } => Error::Solver { case_id: Some(case_id), message: source.to_string() },
            IimlError::Config { .. } => Error::Config(e.to_string()),
            IimlError::Model(m) => m.into(),
            IimlError::Mlp(MlpError::NonFiniteLoss { .. }) | IimlError::Feature(_) => {
                Error::Solver { case_id: None, message: e.to_string() }
            }
            _ => Error::Data(e.to_string()),
        }
    }
}

impl From<DataError> for Error {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Spec { .. } => Error::Config(e.to_string()),
            _ => Error::Data(e.to_string()),
        }
    }
}

impl From<MlpError> for Error {
    fn from(e: MlpError) -> Self {
        Error::Data(e.to_string())
    }
}
