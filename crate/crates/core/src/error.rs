use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate seeds: seeds {first} and {second} coincide")]
    DegenerateSeeds { first: usize, second: usize },

    #[error("empty Dirichlet boundary: Γ_D is assumed to be non-empty")]
    EmptyDirichlet,

    #[error(
        "element {element}: patch threshold {threshold} exceeds the {reachable} elements reachable through faces"
    )]
    PatchTooLarge {
        element: usize,
        threshold: usize,
        reachable: usize,
    },

    #[error("element {element}: patch is not unisolvent for degree {degree} ({reason})")]
    Unisolvence {
        element: usize,
        degree: usize,
        reason: String,
    },

    #[error("matrix is not symmetric: entry ({row}, {col}) differs from its transpose by {defect:e}")]
    Asymmetric { row: usize, col: usize, defect: f64 },

    #[error("matrix is not positive definite: {0}")]
    Indefinite(String),

    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Numerical,
    Io,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidArgument(_)
            | Error::InvalidMesh(_)
            | Error::DegenerateSeeds { .. }
            | Error::EmptyDirichlet
            | Error::PatchTooLarge { .. } => ErrorKind::Validation,
            Error::Unisolvence { .. }
            | Error::Asymmetric { .. }
            | Error::Indefinite(_)
            | Error::NotConverged { .. } => {
                ErrorKind::Numerical
            }
            Error::Io(_) | Error::Json(_) => ErrorKind::Io,
        }
    }
}
