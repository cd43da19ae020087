//! The constructive graph-transform solver.
//!
//! A seed segment `[0, ρ] × {0}` is pushed forward under the normalized map
//! until its right end passes δ, and the whole run is repeated with smaller ρ
//! until successive final curves agree. Curves are stored on a graded grid
//! and carry exact nodal slopes between pushes.

mod certificate;
mod curve;
mod residual;
mod solver;

pub use certificate::{bound_certificate, BoundCertificate};
pub use curve::{graded_grid, Curve, GRID_SPAN};
pub use residual::{
    invariance_residual, tangency_fit, DecadeStat, DecayReport, InvarianceReport,
    InvarianceSample, TangencyFit,
};
pub use solver::{
    push_curve, rho_schedule, solve_manifold, ManifoldSolution, RhoRun, SolverConfig,
};

use thiserror::Error;

use crate::interp::InterpError;
use crate::mapdef::MapError;
use crate::normalform::NormalFormError;
use crate::series::SeriesError;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum GraphTransformError {
    #[error("graphtransform: invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("graphtransform: invalid curve: {0}")]
    InvalidCurve(String),
    #[error("graphtransform: monotonicity guard failed at x = {x:e}: {detail}")]
    GuardFailed { x: f64, detail: String },
    #[error("graphtransform: grid of {nodes} nodes too sparse for derivative order {m_max}")]
    TooSparse { nodes: usize, m_max: usize },
    #[error("graphtransform: iteration cap {cap} reached at rho = {rho:e} with x_max = {x_max:e}")]
    IterationCap { rho: f64, cap: usize, x_max: f64 },
    #[error("graphtransform: derivative bound K_{m} = {k:e} exceeds cap after {iteration} pushes")]
    BlowUp { m: usize, k: f64, iteration: usize },
    #[error("graphtransform: no convergence in rho; successive gaps {history:?}")]
    NotConverged { history: Vec<f64> },
    #[error("graphtransform: |F({x:e})| = {f:e} exceeds tangency cap {cap} x^3")]
    TangencyCap { x: f64, f: f64, cap: f64 },
    #[error("graphtransform: need at least 8 samples in the smallest decade, found {0}")]
    InsufficientSamples(usize),
    #[error(transparent)]
    Interp(#[from] InterpError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    NormalForm(#[from] NormalFormError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}
