use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("{path}: time column not strictly increasing at line {line}")]
    NonMonotone { path: String, line: usize },

    #[error("requested window [{start}, {end}] min lies outside series support [{lo}, {hi}] min")]
    Extrapolation {
        start: f64,
        end: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shooting did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("voltage collapse at x = {x:.4} p.u. (v = {v:.3e})")]
    VoltageCollapse { x: f64, v: f64 },

    #[error("boundary specification is not well posed: {0}")]
    IllPosed(String),

    #[error("infeasible control word {0}")]
    InfeasibleWord(String),

    #[error("step at t = {t_min} min failed")]
    Step {
        t_min: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("cannot read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerical model rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NoConvergence { .. } | Error::VoltageCollapse { .. } => true,
            Error::Step { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
