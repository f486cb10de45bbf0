use thiserror::Error;

/// Errors raised by validation, kernel construction and simulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("exosystem spectrum off the imaginary axis: max |Re| = {max_re:.3e} > {tol:.3e}")]
    SpectrumOffAxis { max_re: f64, tol: f64 },
    #[error("pair is not observable: {0}")]
    NotObservable(String),
    #[error("eigenbasis is ill-conditioned (cond = {cond:.3e}); Jordan forms are not supported")]
    Defective { cond: f64 },
    #[error("matrix A is not in companion form: {0}")]
    BadCompanionForm(String),
    #[error("input gain b must be positive, got {0}")]
    NonpositiveGain(f64),
    #[error("transport speeds must be positive, got q1 = {q1}, q2 = {q2}")]
    NonpositiveSpeed { q1: f64, q2: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("quadrature did not reach tolerance {tol:.1e} within {max_depth} subdivisions")]
    QuadratureFailure { tol: f64, max_depth: usize },
    #[error("kernel argument outside the supported domain: {0}")]
    KernelDomain(String),
    #[error("{what} is not Hurwitz; eigenvalues: {eigs}")]
    NotHurwitz { what: String, eigs: String },
    #[error("fixed-point iteration diverged after {iters} iterations (residual {residual:.3e})")]
    FixedPointDiverged { iters: usize, residual: f64 },
    #[error("prediction horizon {a} exceeds 1/q2 = {max}")]
    OutOfHorizon { a: f64, max: f64 },
    #[error("barrier derivative vanished at e = {e}, t = {t}")]
    DomainError { e: f64, t: f64 },
    #[error("barrier chain value h_{index} is zero at the initial regulation time")]
    ZeroBarrier { index: usize },
    #[error("CFL number {cfl:.4} is not below 1")]
    CflViolation { cfl: f64 },
    #[error("non-finite or runaway state at t = {t}")]
    NonFinite { t: f64 },
    #[error("h never settles above -{tol} before the end of the run")]
    Unresolved { tol: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
