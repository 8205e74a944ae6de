use thiserror::Error;

/// Errors raised anywhere in the discretization / decomposition / solve pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeneoError {
    #[error("coefficient must be strictly positive, got {value} on element {element}")]
    CoefficientDomain { element: usize, value: f64 },

    #[error("invalid material parameters on element {element}: E = {young}, nu = {poisson}")]
    MaterialParameter {
        element: usize,
        young: f64,
        poisson: f64,
    },

    #[error("problem is singular: {0}")]
    Singular(String),

    #[error("matrix is singular: pivot {pivot} at index {index}")]
    SingularMatrix { index: usize, pivot: f64 },

    #[error("matrix is not positive (semi-)definite: {0}")]
    NotPositiveDefinite(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    Symmetry(f64),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    Domain(String),

    #[error("eigensolver converged only {converged} of {requested} pairs")]
    PartialConvergence { converged: usize, requested: usize },

    #[error("subdomain {subdomain}: {source}")]
    Subdomain {
        subdomain: usize,
        #[source]
        source: Box<GeneoError>,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("partition of unity does not cover free dof {0}")]
    PouCoverage(usize),

    #[error("preconditioner used before setup: {0}")]
    Lifecycle(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl GeneoError {
    pub(crate) fn in_subdomain(self, subdomain: usize) -> Self {
        GeneoError::Subdomain {
            subdomain,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, GeneoError>;
