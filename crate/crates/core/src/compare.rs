//! Cross-validation of the graph-transform curve against the series graph
//! from the conjugacy method.

use thiserror::Error;

use crate::graphtransform::{solve_manifold, tangency_fit, Curve, GraphTransformError, SolverConfig};
use crate::mapdef::MapSpec;
use crate::parameterization::{parameterize, ParamError};
use crate::series::Series1;

/// Relative part of the agreement allowance `max(AGREEMENT_REL·x³, tol)`.
pub const AGREEMENT_REL: f64 = 1e-6;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum CompareError {
    #[error("compare: empty comparison window [{lo:e}, {hi:e}]")]
    EmptyWindow { lo: f64, hi: f64 },
    #[error(transparent)]
    GraphTransform(#[from] GraphTransformError),
    #[error(transparent)]
    Param(#[from] ParamError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecadeDisagreement {
    pub lo: f64,
    pub hi: f64,
    pub sup_abs: f64,
    /// `sup |F − φ| / x³` over the decade.
    pub sup_over_x3: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub lo: f64,
    pub hi: f64,
    pub samples: usize,
    pub sup_disagreement: f64,
    /// Largest `|F − φ| / max(1e−6·x³, tol)`; at most 1 when the methods agree.
    pub max_excess: f64,
    pub decades: Vec<DecadeDisagreement>,
    pub a3_graph_transform: f64,
    pub a3_parameterization: f64,
    pub warnings: Vec<String>,
}

impl ComparisonReport {
    pub fn agrees(&self) -> bool {
        self.max_excess <= 1.0
    }
}

/// Compares `curve` with `phi` at the curve nodes in `[lo, hi]`, clipping the
/// window to the curve's domain.
pub fn compare_curve_and_phi(
    curve: &Curve,
    phi: &Series1,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<ComparisonReport, CompareError> {
    let mut warnings = Vec::new();
    let top = hi.min(curve.x_max());
    if top < hi {
        warnings.push(format!(
            "window clipped to the curve domain: upper end {hi:e} -> {top:e}"
        ));
    }
    if !(lo > 0.0 && lo < top) {
        return Err(CompareError::EmptyWindow { lo, hi: top });
    }
    let pts: Vec<(f64, f64)> = curve
        .xs()
        .iter()
        .zip(curve.fs())
        .filter(|(x, _)| **x >= lo && **x <= top)
        .map(|(&x, &f)| (x, (f - phi.eval(x)).abs()))
        .collect();
    if pts.is_empty() {
        return Err(CompareError::EmptyWindow { lo, hi: top });
    }
    let mut decades = Vec::new();
    let mut d_lo = lo;
    while d_lo < top {
        let d_hi = (10.0 * d_lo).min(top);
        let (mut s, mut s3) = (0.0f64, 0.0f64);
        for &(x, e) in pts.iter().filter(|p| p.0 >= d_lo && p.0 <= d_hi) {
            s = s.max(e);
            s3 = s3.max(e / (x * x * x));
        }
        decades.push(DecadeDisagreement {
            lo: d_lo,
            hi: d_hi,
            sup_abs: s,
            sup_over_x3: s3,
        });
        d_lo *= 10.0;
    }
    let fit = tangency_fit(curve)?;
    Ok(ComparisonReport {
        lo,
        hi: top,
        samples: pts.len(),
        sup_disagreement: pts.iter().map(|p| p.1).fold(0.0, f64::max),
        max_excess: pts
            .iter()
            .map(|&(x, e)| e / (AGREEMENT_REL * x * x * x).max(tol))
            .fold(0.0, f64::max),
        decades,
        a3_graph_transform: fit.a3,
        a3_parameterization: phi.coeff(3),
        warnings,
    })
}

/// Runs both solvers and compares them on `[δ·1e−3, δ/2]`.
pub fn compare_methods(
    m: &MapSpec,
    cfg: &SolverConfig,
    order: usize,
) -> Result<ComparisonReport, CompareError> {
    let sol = solve_manifold(m, cfg)?;
    let conj = parameterize(m, order)?;
    compare_curve_and_phi(
        &sol.curve,
        &conj.phi,
        cfg.delta * 1e-3,
        cfg.delta / 2.0,
        cfg.tol_converge,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_methods_agree_exactly() {
        let m = MapSpec::canon(1.0, 0.0).unwrap();
        let r = compare_methods(&m, &SolverConfig::default(), 10).unwrap();
        assert!(r.sup_disagreement <= 1e-12);
        assert!(r.agrees());
        assert_eq!(r.a3_parameterization, 0.0);
    }

    #[test]
    fn perturbed_methods_agree() {
        let m = MapSpec::pert(1.0, 0.0, 0.1).unwrap();
        let r = compare_methods(&m, &SolverConfig::default(), 10).unwrap();
        assert!(r.agrees(), "excess {}", r.max_excess);
        assert!((r.a3_graph_transform - 0.05).abs() < 5e-4);
        assert!((r.a3_parameterization - 0.05).abs() < 1e-12);
        assert!(r.decades.len() >= 3);
    }

    #[test]
    fn window_clipped_with_warning() {
        let c = Curve::zero(0.01, 256);
        let r = compare_curve_and_phi(&c, &Series1::zero(8), 1e-5, 0.025, 1e-12).unwrap();
        assert_eq!(r.hi, 0.01);
        assert_eq!(r.warnings.len(), 1);
        assert!(compare_curve_and_phi(&c, &Series1::zero(8), 0.02, 0.025, 1e-12).is_err());
    }
}
