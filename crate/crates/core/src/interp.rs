//! Piecewise cubic Hermite interpolation with monotonicity safeguards.

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum InterpError {
    #[error("interpolation: need at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("interpolation: nodes not strictly increasing at index {0}")]
    NotIncreasing(usize),
    #[error("interpolation: target {target} outside [{lo}, {hi}]")]
    OutOfRange { target: f64, lo: f64, hi: f64 },
    #[error("interpolation: length mismatch")]
    LengthMismatch,
}

/// Value and derivative of the cubic Hermite interpolant on `[x0, x1]`.
pub fn hermite(x0: f64, x1: f64, f0: f64, f1: f64, m0: f64, m1: f64, x: f64) -> (f64, f64) {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let f = h00 * f0 + h10 * h * m0 + h01 * f1 + h11 * h * m1;
    let d00 = (6.0 * t2 - 6.0 * t) / h;
    let d10 = 3.0 * t2 - 4.0 * t + 1.0;
    let d01 = (-6.0 * t2 + 6.0 * t) / h;
    let d11 = 3.0 * t2 - 2.0 * t;
    let df = d00 * f0 + d10 * m0 + d01 * f1 + d11 * m1;
    (f, df)
}

/// Fritsch–Carlson scaling: when the data and both endpoint slopes are
/// monotone on an interval but the slopes are large enough to overshoot,
/// scale them back into the monotone region. Other intervals are untouched.
pub fn limit_slopes(delta: f64, m0: f64, m1: f64) -> (f64, f64) {
    if delta == 0.0 {
        return (m0, m1);
    }
    let a = m0 / delta;
    let b = m1 / delta;
    if a > 0.0 && b > 0.0 {
        let s = a * a + b * b;
        if s > 9.0 {
            let tau = 3.0 / s.sqrt();
            return (tau * m0, tau * m1);
        }
    }
    (m0, m1)
}

/// Shape-preserving slopes (Fritsch–Butland weighted harmonic mean) for data
/// that carry no derivative information.
pub fn pchip_slopes(xs: &[f64], fs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let d: Vec<f64> = (0..n - 1).map(|k| (fs[k + 1] - fs[k]) / h[k]).collect();
    if n == 2 {
        return vec![d[0]; 2];
    }
    let mut m = vec![0.0; n];
    for k in 1..n - 1 {
        if d[k - 1] * d[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            m[k] = (w1 + w2) / (w1 / d[k - 1] + w2 / d[k]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let mut s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s * d0 <= 0.0 {
            s = 0.0;
        } else if d0 * d1 <= 0.0 && s.abs() > 3.0 * d0.abs() {
            s = 3.0 * d0;
        }
        s
    };
    m[0] = end(h[0], h[1], d[0], d[1]);
    m[n - 1] = end(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
    m
}

/// Checks the node sequence is usable for interpolation.
pub fn check_nodes(xs: &[f64], fs: &[f64], ms: &[f64]) -> Result<(), InterpError> {
    if xs.len() != fs.len() || xs.len() != ms.len() {
        return Err(InterpError::LengthMismatch);
    }
    if xs.len() < 2 {
        return Err(InterpError::TooFewNodes(xs.len()));
    }
    if let Some(k) = xs.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(InterpError::NotIncreasing(k + 1));
    }
    Ok(())
}

/// Index `k` with `xs[k] ≤ x ≤ xs[k+1]`, clamped to the outer intervals.
pub fn locate(xs: &[f64], x: f64) -> usize {
    let k = xs.partition_point(|&v| v <= x);
    k.saturating_sub(1).min(xs.len() - 2)
}

/// Evaluates the limited Hermite interpolant on interval `k`.
pub fn eval_on(xs: &[f64], fs: &[f64], ms: &[f64], k: usize, x: f64) -> (f64, f64) {
    let delta = (fs[k + 1] - fs[k]) / (xs[k + 1] - xs[k]);
    let (m0, m1) = limit_slopes(delta, ms[k], ms[k + 1]);
    hermite(xs[k], xs[k + 1], fs[k], fs[k + 1], m0, m1, x)
}

/// Interpolated values and derivatives at sorted `targets`, all of which must
/// lie in `[xs[0], xs[last]]`.
pub fn resample(
    xs: &[f64],
    fs: &[f64],
    ms: &[f64],
    targets: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), InterpError> {
    check_nodes(xs, fs, ms)?;
    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    let mut vals = Vec::with_capacity(targets.len());
    let mut ders = Vec::with_capacity(targets.len());
    let mut k = 0;
    for &t in targets {
        if !(t >= lo && t <= hi) {
            return Err(InterpError::OutOfRange { target: t, lo, hi });
        }
        while k + 2 < xs.len() && xs[k + 1] < t {
            k += 1;
        }
        if t == xs[k] {
            vals.push(fs[k]);
            ders.push(ms[k]);
        } else if t == xs[k + 1] {
            vals.push(fs[k + 1]);
            ders.push(ms[k + 1]);
        } else {
            let (f, d) = eval_on(xs, fs, ms, k, t);
            vals.push(f);
            ders.push(d);
        }
    }
    Ok((vals, ders))
}
