use thiserror::Error;

/// Failures of a command, each tied to a fixed exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Library(#[from] qgraph::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("verification failed: {0}")]
    VerificationFailed(String),
}

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_ENDPOINT: i32 = 4;
pub const EXIT_VERIFICATION: i32 = 5;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use qgraph::Error as E;
        match self {
            CliError::Invalid(_) | CliError::Io(_) => EXIT_VALIDATION,
            CliError::VerificationFailed(_) => EXIT_VERIFICATION,
            CliError::Library(e) => match e {
                E::RankDeficient { .. }
                | E::NotSelfAdjoint { .. }
                | E::DegenerateDiagonalPair { .. }
                | E::DimensionMismatch { .. }
                | E::InvalidEdge { .. }
                | E::EmptyGraph
                | E::CutOnVertex { .. }
                | E::CutsOutOfOrder(_)
                | E::OutOfDomain { .. } => EXIT_VALIDATION,
                E::EndpointOnSpectrum { .. } | E::PoleOnBoundary { .. } => EXIT_ENDPOINT,
                _ => EXIT_NUMERICAL,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
