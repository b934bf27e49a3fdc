use thiserror::Error;

/// Every failure the library can report.
///
/// Variants carry enough context to print a useful diagnostic; the CLI
/// additionally prints [`BilliardError::name`] so scripts can match on it.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum BilliardError {
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error(
        "curve is not strongly convex: min radius of curvature {min_rho:.6e} at theta = {theta:.6}"
    )]
    NonConvexCurve { min_rho: f64, theta: f64 },
    #[error(
        "support value not positive: h = {h:.6e} at theta = {theta:.6} (center must be interior)"
    )]
    CenterNotInterior { h: f64, theta: f64 },
    #[error("point ({x}, {y}) is not strictly outside the body (support margin {margin:.3e})")]
    PointInsideBody { x: f64, y: f64, margin: f64 },
    #[error("root search did not converge: {0}")]
    NoConvergence(String),
    #[error("no tangency inside the curve's parameter window")]
    TangencyOutsideDomain,
    #[error("degenerate polygon: {0}")]
    DegeneratePolygon(String),
    #[error("orbit is not closed: residual {0:.3e}")]
    OrbitNotClosed(f64),
    #[error("point is not periodic: |F^n(x) - x| = {0:.3e}")]
    NotPeriodic(f64),
    #[error("parallel tangent lines at indices {0} and {1}")]
    ParallelTangents(usize, usize),
    #[error("invalid tangency vector: {0}")]
    InvalidTangencyVector(String),
    #[error("singular Jacobian")]
    SingularJacobian,
    #[error("invalid period {n}: {reason}")]
    InvalidPeriod { n: usize, reason: String },
    #[error("invalid shear-rotation word: {0}")]
    InvalidWord(String),
    #[error("chord state has no admissible image: {0}")]
    NoAdmissibleImage(String),
    #[error("symplectic cycle is not closed: residual {0:.3e}")]
    NotClosed(f64),
    #[error("degenerate chord")]
    DegenerateChord,
    #[error("tangential chord: x.Qd = {0:.3e}")]
    TangentialChord(f64),
    #[error("invalid ellipsoid: {0}")]
    InvalidBody(String),
    #[error("point leaves the retained hyperbola arc (u0 = {u0:.6}, window [{lo:.6}, {hi:.6}])")]
    OutsideWindow { u0: f64, lo: f64, hi: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl BilliardError {
    /// Stable variant name, used on the CLI diagnostic stream.
    pub fn name(&self) -> &'static str {
        match self {
            BilliardError::InvalidCurve(_) => "InvalidCurve",
            BilliardError::NonConvexCurve { .. } => "NonConvexCurve",
            BilliardError::CenterNotInterior { .. } => "CenterNotInterior",
            BilliardError::PointInsideBody { .. } => "PointInsideBody",
            BilliardError::NoConvergence(_) => "NoConvergence",
            BilliardError::TangencyOutsideDomain => "TangencyOutsideDomain",
            BilliardError::DegeneratePolygon(_) => "DegeneratePolygon",
            BilliardError::OrbitNotClosed(_) => "OrbitNotClosed",
            BilliardError::NotPeriodic(_) => "NotPeriodic",
            BilliardError::ParallelTangents(..) => "ParallelTangents",
            BilliardError::InvalidTangencyVector(_) => "InvalidTangencyVector",
            BilliardError::SingularJacobian => "SingularJacobian",
            BilliardError::InvalidPeriod { .. } => "InvalidPeriod",
            BilliardError::InvalidWord(_) => "InvalidWord",
            BilliardError::NoAdmissibleImage(_) => "NoAdmissibleImage",
            BilliardError::NotClosed(_) => "NotClosed",
            BilliardError::DegenerateChord => "DegenerateChord",
            BilliardError::TangentialChord(_) => "TangentialChord",
            BilliardError::InvalidBody(_) => "InvalidBody",
            BilliardError::OutsideWindow { .. } => "OutsideWindow",
            BilliardError::Parse(_) => "Parse",
            BilliardError::Io { .. } => "Io",
        }
    }
}

pub type Result<T> = std::result::Result<T, BilliardError>;
