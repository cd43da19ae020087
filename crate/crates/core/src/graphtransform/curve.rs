use std::fmt::Write as _;

use super::GraphTransformError;
use crate::interp::{check_nodes, eval_on, locate, pchip_slopes, resample};

/// Ratio between the largest and the smallest positive node of a graded grid.
pub const GRID_SPAN: f64 = 1e6;

/// Graded grid on `[0, x_max]`: node 0 followed by `n − 1` geometric nodes
/// from `x_max / GRID_SPAN` to `x_max`.
pub fn graded_grid(x_max: f64, n: usize) -> Vec<f64> {
    assert!(n >= 3, "graded grid needs at least 3 nodes");
    let lo = x_max / GRID_SPAN;
    let ratio = GRID_SPAN.powf(1.0 / (n - 2) as f64);
    let mut xs = Vec::with_capacity(n);
    xs.push(0.0);
    for k in 0..n - 1 {
        xs.push(lo * ratio.powi(k as i32));
    }
    xs[n - 1] = x_max;
    xs
}

/// Sampled graph `{(x, F(x)) : 0 ≤ x ≤ x_max}` with nodal slopes, read
/// between nodes by cubic Hermite interpolation.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    xs: Vec<f64>,
    fs: Vec<f64>,
    slopes: Vec<f64>,
}

impl Curve {
    /// Validates `xs[0] = 0`, `fs[0] = 0`, strictly increasing finite nodes.
    /// Missing slopes are filled with shape-preserving estimates.
    pub fn new(
        xs: Vec<f64>,
        fs: Vec<f64>,
        slopes: Option<Vec<f64>>,
    ) -> Result<Self, GraphTransformError> {
        let slopes = slopes.unwrap_or_else(|| pchip_slopes(&xs, &fs));
        check_nodes(&xs, &fs, &slopes)?;
        let bad = |m: String| Err(GraphTransformError::InvalidCurve(m));
        if xs[0] != 0.0 || fs[0] != 0.0 {
            return bad(format!("curve must start at (0, 0), got ({}, {})", xs[0], fs[0]));
        }
        if let Some(i) = (0..xs.len()).find(|&i| {
            !(xs[i].is_finite() && fs[i].is_finite() && slopes[i].is_finite())
        }) {
            return bad(format!("non-finite sample at x = {}", xs[i]));
        }
        Ok(Curve { xs, fs, slopes })
    }

    /// `F ≡ 0` on the graded grid over `[0, x_max]`.
    pub fn zero(x_max: f64, grid_size: usize) -> Self {
        let xs = graded_grid(x_max, grid_size);
        let n = xs.len();
        Curve {
            xs,
            fs: vec![0.0; n],
            slopes: vec![0.0; n],
        }
    }

    /// Samples `f` and its derivative `df` on the graded grid over `[0, x_max]`.
    pub fn from_fn(
        x_max: f64,
        grid_size: usize,
        f: impl Fn(f64) -> f64,
        df: impl Fn(f64) -> f64,
    ) -> Result<Self, GraphTransformError> {
        let xs = graded_grid(x_max, grid_size);
        let fs = xs.iter().map(|&x| f(x)).collect();
        let ms = xs.iter().map(|&x| df(x)).collect();
        Curve::new(xs, fs, Some(ms))
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn fs(&self) -> &[f64] {
        &self.fs
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn x_max(&self) -> f64 {
        self.xs[self.xs.len() - 1]
    }

    /// Value and derivative at `x`; outside `[0, x_max]` the end cubic is
    /// extended.
    pub fn eval_with_slope(&self, x: f64) -> (f64, f64) {
        let k = locate(&self.xs, x);
        eval_on(&self.xs, &self.fs, &self.slopes, k, x)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_with_slope(x).0
    }

    /// Values at sorted points inside the domain.
    pub fn eval_many(&self, targets: &[f64]) -> Result<Vec<f64>, GraphTransformError> {
        Ok(resample(&self.xs, &self.fs, &self.slopes, targets)?.0)
    }

    /// Re-samples onto the graded grid over `[0, x_max]` (`x_max` must not
    /// exceed the current domain).
    pub fn regrid(&self, x_max: f64, grid_size: usize) -> Result<Curve, GraphTransformError> {
        let xs = graded_grid(x_max, grid_size);
        let (fs, ms) = resample(&self.xs, &self.fs, &self.slopes, &xs)?;
        Curve::new(xs, fs, Some(ms))
    }

    /// Applies `(x, F, F′) ↦ (F_new, F′_new)` nodewise.
    pub fn map_values(&self, f: impl Fn(f64, f64, f64) -> (f64, f64)) -> Curve {
        let (fs, slopes) = (0..self.len())
            .map(|i| f(self.xs[i], self.fs[i], self.slopes[i]))
            .unzip();
        Curve {
            xs: self.xs.clone(),
            fs,
            slopes,
        }
    }

    /// Sup-norm distance to `other` on `[0, upper]`, sampled at the nodes of
    /// both curves.
    pub fn sup_distance(&self, other: &Curve, upper: f64) -> f64 {
        let upper = upper.min(self.x_max()).min(other.x_max());
        let pts = self
            .xs
            .iter()
            .chain(other.xs.iter())
            .copied()
            .filter(|&x| x <= upper);
        pts.map(|x| (self.eval(x) - other.eval(x)).abs())
            .fold(0.0, f64::max)
    }

    /// CSV with header `x,F`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,F\n");
        for (x, f) in self.xs.iter().zip(&self.fs) {
            let _ = writeln!(s, "{x:.16e},{f:.16e}");
        }
        s
    }

    /// Reads the `x,F` CSV produced by [`Curve::to_csv`].
    pub fn from_csv(text: &str) -> Result<Curve, GraphTransformError> {
        let mut xs = Vec::new();
        let mut fs = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || (n == 0 && t.starts_with('x')) {
                continue;
            }
            let bad = || GraphTransformError::InvalidCurve(format!("line {}: `{t}`", n + 1));
            let (a, b) = t.split_once(',').ok_or_else(bad)?;
            xs.push(a.trim().parse::<f64>().map_err(|_| bad())?);
            fs.push(b.trim().parse::<f64>().map_err(|_| bad())?);
        }
        Curve::new(xs, fs, None)
    }

    /// Rejects nodes with `|F(x)| > cap · x³`.
    pub fn check_tangency_cap(&self, cap: f64) -> Result<(), GraphTransformError> {
        for (&x, &f) in self.xs.iter().zip(&self.fs) {
            if f.abs() > cap * x * x * x {
                return Err(GraphTransformError::TangencyCap { x, f, cap });
            }
        }
        Ok(())
    }
}
