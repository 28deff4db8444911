use thiserror::Error;

/// Errors raised by the library. Validation problems map to CLI exit code 2,
/// numerical failures to exit code 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("MassMismatch: total masses {0} and {1} differ")]
    MassMismatch(f64, f64),
    #[error("EmptySpace: the metric space has no points")]
    EmptySpace,
    #[error("SpaceMismatch: {0}")]
    SpaceMismatch(String),
    #[error("InvalidMeasure: {0}")]
    InvalidMeasure(String),
    #[error("UnknownName: {0}")]
    UnknownName(String),
    #[error("InvalidParameters: {0}")]
    InvalidParameters(String),
    #[error("NegativeMass: m0 = {0}, m1 = {1}")]
    NegativeMass(f64, f64),
    #[error("NegativeDensity: rho = {0}")]
    NegativeDensity(f64),
    #[error("NonConvergence at z = {z}: {detail}")]
    NonConvergence { z: f64, detail: String },
    #[error("DegenerateSlope at z = {0}")]
    DegenerateSlope(f64),
    #[error("Inconclusive: {0}")]
    Inconclusive(String),
    #[error("InfeasibleModel: {0}")]
    InfeasibleModel(String),
    #[error("NotOptimalInput: {0}")]
    NotOptimalInput(String),
    #[error("CycleGuardExceeded after {0} pivots")]
    CycleGuardExceeded(usize),
    #[error("LpFailure: {0}")]
    LpFailure(String),
    #[error("OutOfRange: {0}")]
    OutOfRange(String),
    #[error("InfiniteCost: {0}")]
    InfiniteCost(String),
    #[error("InfeasibleChange: {0}")]
    InfeasibleChange(String),
    #[error("ModelMismatch: {0}")]
    ModelMismatch(String),
    #[error("InfeasiblePair at points {0:?}")]
    InfeasiblePair(Vec<usize>),
    #[error("Validation: {0}")]
    Validation(String),
    #[error("IoError: {0}")]
    Io(#[from] std::io::Error),
    #[error("JsonError: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CsvError: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by bad input rather than numerical trouble.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::MassMismatch(..)
                | Error::EmptySpace
                | Error::SpaceMismatch(_)
                | Error::InvalidMeasure(_)
                | Error::UnknownName(_)
                | Error::InvalidParameters(_)
                | Error::NegativeMass(..)
                | Error::NegativeDensity(_)
                | Error::InfeasibleModel(_)
                | Error::InfeasibleChange(_)
                | Error::ModelMismatch(_)
                | Error::InfeasiblePair(_)
                | Error::OutOfRange(_)
                | Error::Validation(_)
                | Error::Json(_)
                | Error::Io(_)
        )
    }
}

impl Error {
    /// Variant name, as used in diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::MassMismatch(..) => "MassMismatch",
            Error::EmptySpace => "EmptySpace",
            Error::SpaceMismatch(_) => "SpaceMismatch",
            Error::InvalidMeasure(_) => "InvalidMeasure",
            Error::UnknownName(_) => "UnknownName",
            Error::InvalidParameters(_) => "InvalidParameters",
            Error::NegativeMass(..) => "NegativeMass",
            Error::NegativeDensity(_) => "NegativeDensity",
            Error::NonConvergence { .. } => "NonConvergence",
            Error::DegenerateSlope(_) => "DegenerateSlope",
            Error::Inconclusive(_) => "Inconclusive",
            Error::InfeasibleModel(_) => "InfeasibleModel",
            Error::NotOptimalInput(_) => "NotOptimalInput",
            Error::CycleGuardExceeded(_) => "CycleGuardExceeded",
            Error::LpFailure(_) => "LpFailure",
            Error::OutOfRange(_) => "OutOfRange",
            Error::InfiniteCost(_) => "InfiniteCost",
            Error::InfeasibleChange(_) => "InfeasibleChange",
            Error::ModelMismatch(_) => "ModelMismatch",
            Error::InfeasiblePair(_) => "InfeasiblePair",
            Error::Validation(_) => "Validation",
            Error::Io(_) => "IoError",
            Error::Json(_) => "JsonError",
            Error::Csv(_) => "CsvError",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
