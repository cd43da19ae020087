//! Truncated power series in one and two variables, and planar maps built
//! from pairs of bivariate series.
//!
//! Univariate series are dense, bivariate series are sparse. Every binary
//! operation truncates to the smaller of the two operand orders.

mod bivariate;
mod planar;
mod univariate;

pub use bivariate::Series2;
pub use planar::{compose_maps, invert_map_series, PlanarSeriesMap};
pub use univariate::{reverse_series, Series1};

use thiserror::Error;

/// Truncation order used when callers do not ask for one.
pub const DEFAULT_ORDER: usize = 12;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SeriesError {
    #[error("series: inner series has nonzero constant term {0}")]
    NonzeroConstant(f64),
    #[error("series: zero linear coefficient, cannot reverse")]
    ZeroLinear,
    #[error("series: singular linear part (determinant {0})")]
    SingularLinear(f64),
    #[error("series: order mismatch ({0} vs {1})")]
    OrderMismatch(usize, usize),
    #[error("series: map component has nonzero constant term {0}")]
    NotFixedAtOrigin(f64),
}
