use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no solution on branch {branch}: g(q) = {c} requires c <= lambda_hat = {lambda_hat}")]
    BranchInfeasible { branch: &'static str, c: f64, lambda_hat: f64 },
    #[error("singular point: {0}")]
    Singular(String),
    #[error("infeasible mode: {0}")]
    InfeasibleMode(String),
    #[error("sampling error: {0}")]
    Sampling(String),
    #[error("inconsistent critical point: {0}")]
    Consistency(String),
    #[error("not applicable: {0}")]
    Applicability(String),
    #[error("incompatible boundary data: {0}")]
    IncompatibleBoundary(String),
    #[error("resolution too coarse: {0}")]
    Resolution(String),
    #[error("flow step failed: {0}")]
    StepFailure(String),
}
