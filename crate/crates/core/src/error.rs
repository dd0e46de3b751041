use crate::system::Violation;
use thiserror::Error;

/// Errors from building matrices and optimization models.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("unknown bus {bus} referenced by {context}")]
    UnknownBus { bus: usize, context: String },
    #[error("system has no buses")]
    EmptySystem,
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch { what: String, expected: usize, found: usize },
    #[error("system fails validation: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidSystem(Vec<Violation>),
    #[error("epsilon given as a fraction of demand but total demand is zero")]
    UnresolvedEpsilon,
    #[error("hour {hour} outside horizon of {horizon}")]
    HourOutOfRange { hour: usize, horizon: usize },
    #[error("dual bound for {0} must be finite and positive")]
    UnboundedDualBox(&'static str),
    #[error("uncertainty set is empty")]
    EmptyUncertainty,
}

/// Errors from constructing uncertainty sets.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum UncertaintyError {
    #[error("history is missing {} day(s): {}", .0.len(), .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(", "))]
    MissingDays(Vec<chrono::NaiveDate>),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("vertex enumeration needs |R||H| <= {cap}, got {size}")]
    CapExceeded { size: usize, cap: usize },
    #[error("scenario set is inconsistent: {0}")]
    InvalidScenarioSet(String),
}

/// Errors raised by a solver backend.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("model is infeasible")]
    Infeasible,
    #[error("model is unbounded")]
    Unbounded,
    #[error("time limit reached without a feasible solution")]
    NoSolution,
    #[error("solver returned status {0}")]
    Status(String),
    #[error("solver backend does not support {0}")]
    Unsupported(&'static str),
}

/// Crate-level error.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Uncertainty(#[from] UncertaintyError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("solver failed on scenario {label}: {source}")]
    ScenarioSolve { label: String, source: SolverError },
    #[error("solver failed in hour {hour}: {source}")]
    HourSolve { hour: usize, source: SolverError },
    #[error("master problem is infeasible; the system data are inconsistent")]
    MasterInfeasible,
    #[error("iteration cap of {0} reached before the imbalance fell below tolerance")]
    IterationCap(usize),
    #[error("oracle re-selected scenario {0} already in the master")]
    Reselected(String),
    #[error("MILP oracle audit failed: objective {milp} vs primal re-solve {primal}")]
    OracleAudit { milp: f64, primal: f64 },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures that originate in the optimization engine.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::Solver(_)
                | Error::ScenarioSolve { .. }
                | Error::HourSolve { .. }
                | Error::MasterInfeasible
                | Error::IterationCap(_)
                | Error::Reselected(_)
                | Error::OracleAudit { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
