use std::error::Error as StdError;
use std::fmt;

/// Errors shared by the analytic and simulation layers.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter violated its documented constraint. The message names the constraint.
    ParameterOutOfRange(String),
    /// A time argument was negative.
    NegativeTime(f64),
    /// No closed form is known for this pair of service laws.
    NoClosedForm {
        service_a: &'static str,
        service_b: &'static str,
    },
    /// Adaptive refinement hit its depth limit before reaching the requested tolerance.
    QuadratureNonConvergence {
        interval: (f64, f64),
        error_estimate: f64,
    },
    /// An operation specific to one distribution family was called with another.
    WrongDistributionKind {
        expected: &'static str,
        got: &'static str,
    },
    /// Both occupancies are zero, so no finite equilibrium ratio exists.
    RatioUndefined,
    /// Pensioner occupancy is zero while contributor occupancy is positive.
    RatioUnbounded,
    /// E[N_A](t) = 0, so per-contributor quantities are meaningless.
    NoContributors,
    /// Nothing feeds node B, or pensioners leave instantly. The message says which.
    NoPensionInflow(String),
    /// A simulation plan violated a structural invariant. The message names it.
    InvalidPlan(String),
    /// Cash-flow simulation needs both mark mean functions on the plan.
    MissingMarkFunctions,
    /// Estimate vectors disagree on length with the time grid.
    GridMismatch { expected: usize, got: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ParameterOutOfRange(msg) => write!(f, "parameter out of range: {msg}"),
            Error::NegativeTime(t) => write!(f, "time must be nonnegative, got {t}"),
            Error::NoClosedForm { service_a, service_b } => write!(
                f,
                "no closed form for service pair ({service_a}, {service_b}); use quadrature"
            ),
            Error::QuadratureNonConvergence { interval, error_estimate } => write!(
                f,
                "quadrature did not reach tolerance on [{}, {}] (error estimate {:.3e})",
                interval.0, interval.1, error_estimate
            ),
            Error::WrongDistributionKind { expected, got } => {
                write!(f, "operation requires {expected} service law, got {got}")
            }
            Error::RatioUndefined => write!(f, "equilibrium ratio undefined: both occupancies are zero"),
            Error::RatioUnbounded => write!(
                f,
                "equilibrium ratio unbounded: pensioner occupancy is zero while contributor occupancy is positive"
            ),
            Error::NoContributors => write!(f, "no contributors present at this time"),
            Error::NoPensionInflow(msg) => write!(f, "no pension inflow: {msg}"),
            Error::InvalidPlan(msg) => write!(f, "invalid simulation plan: {msg}"),
            Error::MissingMarkFunctions => {
                write!(f, "cash-flow simulation requires both mark mean functions (m_a, m_b)")
            }
            Error::GridMismatch { expected, got } => {
                write!(f, "estimate vectors disagree with grid length: expected {expected}, got {got}")
            }
        }
    }
}

impl StdError for Error {}

pub type Result<T> = std::result::Result<T, Error>;
