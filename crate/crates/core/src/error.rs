use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("polarizability denominator vanishes (|eps_m + {ratio:.3} eps_b| = {magnitude:.3e})")]
    Singularity { ratio: f64, magnitude: f64 },

    #[error("no plasmon resonance in [{lo_ev:.4}, {hi_ev:.4}] eV")]
    ResonanceNotFound { lo_ev: f64, hi_ev: f64 },

    #[error("multipole sum not converged after {terms} terms (last relative term {last_relative:.3e})")]
    NotConverged {
        terms: usize,
        last_relative: f64,
        partial_sums: Vec<(f64, f64)>,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("step size underflow at t = {t:.6} ps (h = {h:.3e} ps, {steps} steps taken)")]
    StepUnderflow { t: f64, h: f64, steps: usize },

    #[error("density matrix invariant violated at t = {t:.6} ps: {detail}")]
    InvariantViolation { t: f64, detail: String },
}
