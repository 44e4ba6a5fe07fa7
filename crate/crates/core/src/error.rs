use thiserror::Error;

/// Errors raised by the torsion laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum TorsionError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("coefficient sum {sum} differs from the dimension {dim}")]
    CoefficientSum { sum: f64, dim: usize },
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("degenerate polyline: {0}")]
    DegeneratePolyline(String),
    #[error("empty level set at value {0}")]
    EmptyLevelSet(f64),
    #[error("level set at value {0} touches the grid boundary")]
    LevelSetTouchesBoundary(f64),
    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("point ({0}, {1}) lies outside the domain")]
    OutOfDomain(f64, f64),
    #[error("point ({x}, {y}) is closer than {margin} to the boundary")]
    TooCloseToBoundary { x: f64, y: f64, margin: f64 },
    #[error("zero denominator in Rayleigh quotient")]
    ZeroDenominator,
    #[error("no sample points remain (margin {0} too large)")]
    EmptySampleSet(f64),
    #[error("inconsistent bracket: {0}")]
    InconsistentBracket(String),
    #[error("ball of radius {radius} about ({x}, {y}) is not contained in the domain")]
    BallNotContained { x: f64, y: f64, radius: f64 },
    #[error("maximum point lies on the boundary")]
    ArgmaxOnBoundary,
    #[error("radius {radius} exceeds the inscribed radius {inscribed}")]
    RadiusTooLarge { radius: f64, inscribed: f64 },
    #[error("{angles} angles cannot resolve modes up to {modes} (need at least {needed})")]
    Aliasing {
        angles: usize,
        modes: usize,
        needed: usize,
    },
    #[error("fit rejected: {0}")]
    FitRejected(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, TorsionError>;
