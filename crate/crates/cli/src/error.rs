use torsion_core::TorsionError;

/// Failure of a command, split by exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, configuration or domain (exit status 2).
    #[error("{0}")]
    Usage(String),
    /// The computation itself broke down (exit status 3).
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<TorsionError> for CliError {
    fn from(e: TorsionError) -> Self {
        use TorsionError::*;
        let msg = e.to_string();
        match e {
            InvalidDomain(_)
            | CoefficientSum { .. }
            | GridTooCoarse(_)
            | DegeneratePolyline(_)
            | EmptySampleSet(_)
            | BallNotContained { .. }
            | RadiusTooLarge { .. }
            | Aliasing { .. }
            | InvalidParameter(_)
            | OutOfDomain(..) => CliError::Usage(msg),
            EmptyLevelSet(_)
            | LevelSetTouchesBoundary(_)
            | NonConvergence { .. }
            | SingularSystem(_)
            | TooCloseToBoundary { .. }
            | ZeroDenominator
            | InconsistentBracket(_)
            | ArgmaxOnBoundary
            | FitRejected(_) => CliError::Numerical(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("i/o: {e}"))
    }
}
