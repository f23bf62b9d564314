use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("equilibrium solver did not converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    Convergence { iterations: usize, gradient_norm: f64 },

    #[error("structural instability: transverse Hessian eigenvalue {eigenvalue:e} is negative")]
    Instability { eigenvalue: f64 },

    #[error("gate design: {0}")]
    Design(String),

    #[error("optimization failed: {message} (final cost {cost:e})")]
    Optimization { message: String, cost: f64 },

    #[error("cannot scale sequence: accumulated two-qubit phase is zero")]
    Scaling,

    #[error("excessive micromotion on ion {ion}: Rabi reduction {ratio} below floor {floor}")]
    Micromotion { ion: usize, ratio: f64, floor: f64 },

    #[error("Fock truncation leakage {leakage:e} exceeds limit {limit:e}")]
    Truncation { leakage: f64, limit: f64 },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("non-thermal sideband ratio {0}")]
    NonThermal(f64),

    #[error("readout calibration: {0}")]
    Calibration(String),

    #[error("maximum likelihood problem infeasible: {0}")]
    Infeasible(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
