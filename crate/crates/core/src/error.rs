use thiserror::Error;

/// Errors raised anywhere in the laboratory pipeline.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("strain {value} outside admissible interval [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },

    #[error("wave speed {value} outside the range [{lo}, {hi}] of the first eigenvalue")]
    SpeedRange { value: f64, lo: f64, hi: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("root not bracketed on [{lo}, {hi}] (f = {f_lo}, {f_hi})")]
    NotBracketed {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("no convergence after {iterations} iterations (last step {last_step:e})")]
    NoConvergence { iterations: usize, last_step: f64 },

    #[error("quadrature did not reach tolerance {tol:e} (estimate {estimate:e})")]
    Quadrature { tol: f64, estimate: f64 },

    #[error("not a rarefaction configuration: {0}")]
    NotRarefaction(String),

    #[error("degenerate wave: {0}")]
    DegenerateWave(String),

    #[error("strain left [{lo}, {hi}] at t = {time} (node {node}, v = {value})")]
    BlowUp {
        time: f64,
        node: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("non-finite value at t = {time} (node {node})")]
    Instability { time: f64, node: usize },

    #[error("time {t} outside stored horizon [0, {horizon}]")]
    Horizon { t: f64, horizon: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("insufficient coverage: {0}")]
    Coverage(String),

    #[error("missing capability: {0}")]
    Capability(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid configuration at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl LabError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        LabError::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Short machine-readable tag used in structured error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            LabError::Domain { .. } => "domain",
            LabError::SpeedRange { .. } => "speed-range",
            LabError::InvalidArgument(_) => "invalid-argument",
            LabError::NotBracketed { .. } => "not-bracketed",
            LabError::NoConvergence { .. } => "no-convergence",
            LabError::Quadrature { .. } => "quadrature",
            LabError::NotRarefaction(_) => "not-rarefaction",
            LabError::DegenerateWave(_) => "degenerate-wave",
            LabError::BlowUp { .. } => "blow-up",
            LabError::Instability { .. } => "instability",
            LabError::Horizon { .. } => "horizon",
            LabError::Shape(_) => "shape",
            LabError::Coverage(_) => "coverage",
            LabError::Capability(_) => "capability",
            LabError::Contract(_) => "contract",
            LabError::Config { .. } => "config",
            LabError::Io(_) => "io",
            LabError::Json(_) => "json",
            LabError::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
