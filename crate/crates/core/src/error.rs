use thiserror::Error;

/// Every failure the solver pipeline can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate incident shock: need rho1 > rho0 > 0 and gamma > 1 (gamma={gamma}, rho0={rho0}, rho1={rho1})")]
    DegenerateShock { gamma: f64, rho0: f64, rho1: f64 },
    #[error("vacuum state: Bernoulli radicand {radicand:e} is negative")]
    VacuumState { radicand: f64 },
    #[error("root not bracketed: {0}")]
    RootNotBracketed(String),
    #[error("Newton iteration diverged: {0}")]
    NewtonDiverged(String),
    #[error("invariant violated: {0}")]
    InvariantViolated(String),
    #[error("point at the origin has no sonic-frame coordinates")]
    OriginSingularity,
    #[error("arcsine argument {arg} outside [-1, 1] at x={x}")]
    ArcsineDomain { x: f64, arg: f64 },
    #[error("mesh fold: {0}")]
    MeshFold(String),
    #[error("free-boundary update is not admissible: {0}")]
    NonMonotone(String),
    #[error("obliqueness lost at eta={eta}: (b1,b2).nu = {value:e} <= floor {floor:e}")]
    ObliquenessLost { eta: f64, value: f64, floor: f64 },
    #[error("linear solve stalled at relative residual {residual:e} after {iterations} iterations")]
    LinearSolveStalled { residual: f64, iterations: usize },
    #[error("ill-posed row {row}: {reason}")]
    IllPosedRow { row: usize, reason: String },
    #[error("Picard iteration diverged at delta={delta:e}: last update {last_update:e} after {iterations} iterations")]
    PicardDiverged { delta: f64, last_update: f64, iterations: usize },
    #[error("barrier violated: min psi = {min_psi:e} below -{tol:e}")]
    BarrierViolated { min_psi: f64, tol: f64 },
    #[error("outer iteration did not converge in {iterations} steps (last boundary change {residual:e})")]
    MaxOuterExceeded { iterations: usize, residual: f64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// True for failures of the numerical iteration itself, as opposed to
    /// bad input or a broken invariant.
    pub fn is_nonconvergence(&self) -> bool {
        matches!(
            self,
            Error::NewtonDiverged(_)
                | Error::LinearSolveStalled { .. }
                | Error::PicardDiverged { .. }
                | Error::MaxOuterExceeded { .. }
                | Error::ObliquenessLost { .. }
                | Error::BarrierViolated { .. }
                | Error::NonMonotone(_)
                | Error::MeshFold(_)
                | Error::RootNotBracketed(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
