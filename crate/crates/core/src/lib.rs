//! Weighted sparse partial least squares.
//!
//! Finds a sparse pair of loading vectors `u`, `v` together with a sparse set
//! of samples (weights `w` in `[0, 1]` with at most `k_w` nonzeros) on which
//! two data views are most strongly co-expressed, by block proximal gradient
//! descent on `-w^T [(Xu) .* (Yv)]`.
//!
//! * [`wspls`]: the pairwise solver and its unit-sphere weight variant.
//! * [`mwspls`]: sum and product couplings for three or more views.
//! * [`baselines`]: PLS, l0-constrained sparse PLS and penalized matrix
//!   decomposition for comparison.
//! * [`comodules`]: co-module assembly, sequential extraction, S-score and
//!   permutation test.
//! * [`simbench`]: synthetic data, support-recovery metrics and benchmarks.
//! * [`cli`]: the `wspls` command-line front end.

// `!(a > b)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod cli;
pub mod comodules;
pub mod error;
pub mod matrix;
pub mod mwspls;
pub mod projections;
pub mod rng;
pub mod simbench;
pub mod stats;
pub mod wspls;

pub use error::{Error, Result};
pub use matrix::{standardize_columns, RawMatrix, StandardizedMatrix};
pub use wspls::{fit, SolverConfig, WsplsSolution};
