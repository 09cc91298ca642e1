use thiserror::Error;

/// Errors raised by the thermodynamic tiers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Domain(String),

    #[error("inconsistent collective moments: pair density eigenvalue {eigenvalue:.3e} is negative")]
    InconsistentMoments { eigenvalue: f64 },

    #[error("brute-force diagonalization refused for n = {n} (cap is {cap})")]
    TooLarge { n: usize, cap: usize },

    #[error("static-path breakdown at r = {r:.6}, z = {z:.6}: imaginary RPA energy with beta|omega|/2 >= pi")]
    Breakdown { r: f64, z: f64 },

    #[error("RPA mode {mode} violates omega^2 + (2 pi T)^2 > 0 (omega^2 = {omega2:.6e})")]
    RpaBreakdown { mode: usize, omega2: f64 },

    #[error("complex RPA energy {re:.6e} + {im:.6e}i outside the real/imaginary classes")]
    ComplexRpaEnergy { re: f64, im: f64 },

    #[error("quadrature did not reach tolerance: error estimate {estimate:.3e}")]
    Quadrature { estimate: f64 },

    #[error("response function pole at omega = {omega:.6e}")]
    Pole { omega: f64 },

    #[error("linearized local hamiltonian is not hermitian (deviation {deviation:.3e})")]
    NonHermitian { deviation: f64 },

    #[error("eigenvalue solver failed: {0}")]
    Eigen(String),

    #[error("self-consistency not reached after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("static Hessian is not positive definite (determinant {determinant:.3e})")]
    Saddle { determinant: f64 },

    #[error("mean-field phase error: {0}")]
    Phase(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("root bracketing failed: {0}")]
    Bracket(String),
}

pub type Result<T> = std::result::Result<T, Error>;
