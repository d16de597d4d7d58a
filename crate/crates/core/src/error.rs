use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{function}: argument {value} outside domain {domain}")]
    Domain {
        function: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error(
        "root bracket [{lo}, {hi}] does not change sign (residuals {f_lo:e}, {f_hi:e})"
    )]
    Bracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("root finder did not converge after {iterations} iterations (bracket [{lo}, {hi}])")]
    Convergence { iterations: usize, lo: f64, hi: f64 },

    #[error("{0}")]
    Optimality(String),

    #[error("certificate violation: {0}")]
    CertificateViolation(String),

    #[error("family of size {size} exceeds enumeration cap {cap}")]
    BudgetExceeded { size: String, cap: u64 },

    #[error("invalid family: {0}")]
    InvalidFamily(String),

    #[error("classify_pair called with identical curves")]
    IdenticalCurves,

    #[error("no integer k with 1 <= k <= q-1 and |k - x*q| <= 2 (x = {x}, q = {q})")]
    InfeasibleK { x: f64, q: u64 },

    #[error("k = {k} outside [1, q = {q}]")]
    KRange { k: i64, q: u64 },

    #[error("inconsistent topology: {0}")]
    Topology(String),

    #[error("plan is infeasible: {0}")]
    InfeasiblePlan(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
