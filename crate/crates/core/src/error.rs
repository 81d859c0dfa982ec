use thiserror::Error;

/// Errors raised by the analyses in this crate.
///
/// Warnings that do not stop an analysis (critical levels, censored walks)
/// are reported on the result values instead.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("point outside domain: {0}")]
    Domain(String),

    #[error("index out of range: {0}")]
    Range(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("field evaluation failed: {0}")]
    Evaluation(String),

    #[error("series does not look meromorphic (score {score:.3e})")]
    NonMeromorphicSuspected { score: f64 },

    #[error("grid too coarse to separate level arcs near {location}")]
    Resolution { location: String },

    #[error("end of arc {arc} could not be followed across the schedule")]
    UndeterminedEnd { arc: usize },

    #[error("arc has too few vertices ({vertices}) for quadrature")]
    InsufficientResolution { vertices: usize },

    #[error("arc {arc} is not an end representative")]
    NotAnEnd { arc: usize },

    #[error("induced metric degenerates at vertex {vertex} (lambda = {lambda:.3e})")]
    DegenerateMetric { vertex: String, lambda: f64 },

    #[error("winding number unresolved (distance to integer {residual:.3e})")]
    WindingUnresolved { residual: f64 },

    #[error("logarithm branch mismatch: {0}")]
    Branch(String),

    #[error("sliced coordinate is multivalued (real period {period:.6e})")]
    SlicePeriod { period: f64 },

    #[error("numerical non-convergence: {context} (residual {residual:.3e})")]
    NumericalNonconvergence { context: String, residual: f64 },

    #[error("seed point violates the side condition: {0}")]
    Seed(String),

    #[error("invalid scenario: {0}")]
    InvalidConfig(String),

    #[error("internal invariant violated: {0}")]
    InvariantViolation(String),
}

impl LabError {
    /// Variant name, used for structured errors in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Domain(_) => "Domain",
            Self::Range(_) => "Range",
            Self::InvalidArgument(_) => "InvalidArgument",
            Self::Evaluation(_) => "Evaluation",
            Self::NonMeromorphicSuspected { .. } => "NonMeromorphicSuspected",
            Self::Resolution { .. } => "Resolution",
            Self::UndeterminedEnd { .. } => "UndeterminedEnd",
            Self::InsufficientResolution { .. } => "InsufficientResolution",
            Self::NotAnEnd { .. } => "NotAnEnd",
            Self::DegenerateMetric { .. } => "DegenerateMetric",
            Self::WindingUnresolved { .. } => "WindingUnresolved",
            Self::Branch(_) => "Branch",
            Self::SlicePeriod { .. } => "SlicePeriod",
            Self::NumericalNonconvergence { .. } => "NumericalNonconvergence",
            Self::Seed(_) => "Seed",
            Self::InvalidConfig(_) => "InvalidConfig",
            Self::InvariantViolation(_) => "InvariantViolation",
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
