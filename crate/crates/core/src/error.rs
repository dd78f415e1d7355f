use thiserror::Error;

use crate::comodules::CoModule;

/// Errors raised by the solvers, scoring routines and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("column {0} has zero variance")]
    ConstantColumn(usize),

    #[error("input contains NaN or infinite values")]
    NonFinite,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix must have at least 2 rows and 1 column, got {rows}x{cols}")]
    BadShape { rows: usize, cols: usize },

    #[error("sequence has zero variance")]
    ZeroVariance,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("projection input is the zero vector")]
    ZeroInput,

    #[error("sparsity budget {budget} out of range 1..={len}")]
    BadBudget { budget: usize, len: usize },

    #[error("l1 bound {0} is below 1, no unit vector satisfies it")]
    Infeasible(f64),

    #[error("gradient step produced a zero vector in block `{0}`")]
    DegenerateStep(&'static str),

    #[error("cross-product matrix is zero")]
    ZeroMatrix,

    #[error("cannot match target sparsity: wanted ({want_u}, {want_v}), nearest ({got_u}, {got_v}) at c = ({c1}, {c2})")]
    CannotMatch {
        want_u: usize,
        want_v: usize,
        got_u: usize,
        got_v: usize,
        c1: f64,
        c2: f64,
    },

    #[error("solution selects nothing in `{0}`")]
    EmptySelection(&'static str),

    #[error("not enough samples left for round {round} ({completed} module(s) extracted)", completed = .completed.len())]
    InsufficientSamples {
        round: usize,
        completed: Vec<CoModule>,
    },

    #[error("signal has zero energy")]
    ZeroSignal,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error in {path} at row {row}, column {col}: {msg}")]
    Parse {
        path: String,
        row: usize,
        col: usize,
        msg: String,
    },

    #[error("incompatible files: {0}")]
    IncompatibleFiles(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
