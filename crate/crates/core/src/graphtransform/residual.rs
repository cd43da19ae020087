use super::{Curve, GraphTransformError};
use crate::poly::{PlanarMap, Point};

/// Invariance defect at one sample.
#[derive(Clone, Debug, PartialEq)]
pub struct InvarianceSample {
    pub x: f64,
    /// `None` when no preimage abscissa was found.
    pub residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InvarianceReport {
    /// Maximum over the samples that have a residual.
    pub max_residual: f64,
    pub samples: Vec<InvarianceSample>,
    pub warnings: Vec<String>,
}

/// Finds `x̂` with `X(x̂, F(x̂)) = x̄`, by Newton steps safeguarded with
/// bisection on a sign-changing bracket.
fn preimage<M: PlanarMap + ?Sized>(map: &M, c: &Curve, xbar: f64) -> Option<f64> {
    let g = |t: f64| {
        let (f, df) = c.eval_with_slope(t);
        let (img, j) = map.eval_with_jacobian(Point::new(t, f));
        (img.x - xbar, j[0][0] + j[0][1] * df)
    };
    let (mut lo, mut hi) = (0.0, xbar);
    let (g_lo, _) = g(lo);
    let (mut g_hi, _) = g(hi);
    while g_hi < 0.0 {
        if hi >= c.x_max() {
            return None;
        }
        hi = (2.0 * hi).min(c.x_max());
        g_hi = g(hi).0;
    }
    if g_lo > 0.0 {
        return None;
    }
    let mut t = (xbar - xbar * xbar).clamp(lo, hi);
    for _ in 0..200 {
        let (v, dv) = g(t);
        if v == 0.0 {
            return Some(t);
        }
        if v < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let mut next = t - v / dv;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= 2.0 * f64::EPSILON * t.abs() || hi - lo <= f64::EPSILON * hi {
            return Some(next);
        }
        t = next;
    }
    Some(t)
}

/// For each node `x̄ ≤ min(upper, x_max/2)`, solves `X(x̂, F(x̂)) = x̄` and
/// measures `|F(x̄) − Y(x̂, F(x̂))|`.
pub fn invariance_residual<M: PlanarMap + ?Sized>(
    map: &M,
    c: &Curve,
    upper: Option<f64>,
) -> InvarianceReport {
    let limit = upper.unwrap_or(f64::INFINITY).min(c.x_max() / 2.0);
    let mut samples = Vec::new();
    let mut warnings = Vec::new();
    let mut max_residual: f64 = 0.0;
    for (&x, &f) in c.xs().iter().zip(c.fs()) {
        if x > limit {
            break;
        }
        let residual = preimage(map, c, x).map(|xh| {
            let img = map.eval(Point::new(xh, c.eval(xh)));
            (f - img.y).abs()
        });
        match residual {
            Some(r) => max_residual = max_residual.max(r),
            None => warnings.push(format!("no preimage found for x = {x:e}; sample excluded")),
        }
        samples.push(InvarianceSample { x, residual });
    }
    InvarianceReport {
        max_residual,
        samples,
        warnings,
    }
}

/// Sup of `|F|/x³` and `|F|/x^(2/3)` over one decade of nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct DecadeStat {
    pub lo: f64,
    pub hi: f64,
    pub sup_f_over_x3: f64,
    pub sup_f_over_x23: f64,
}

/// Decade-by-decade behaviour of `F` near 0, from the smallest decade up.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayReport {
    pub decades: Vec<DecadeStat>,
    /// False when `sup |F|/x³` grows by more than a factor 3 from one decade
    /// to the next smaller one, i.e. `F` is not `O(x³)`.
    pub cubic_bounded: bool,
    /// True when `sup |F|/x^(2/3)` on the smallest decade is below its value
    /// on the largest one.
    pub x23_decays: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TangencyFit {
    /// Fitted limit of `F(x)/x³` as `x → 0`.
    pub a3: f64,
    /// Fitted slope of `F(x)/x³` in `x`.
    pub slope: f64,
    pub samples: usize,
    pub decay: DecayReport,
}

/// Least-squares fit `F(x)/x³ ≈ a3 + b·x` over the smallest decade of
/// positive nodes, plus the per-decade decay report.
pub fn tangency_fit(c: &Curve) -> Result<TangencyFit, GraphTransformError> {
    let pos: Vec<(f64, f64)> = c
        .xs()
        .iter()
        .zip(c.fs())
        .filter(|(x, _)| **x > 0.0)
        .map(|(&x, &f)| (x, f))
        .collect();
    let x1 = pos.first().map(|p| p.0).unwrap_or(0.0);
    let small: Vec<(f64, f64)> = pos.iter().copied().filter(|p| p.0 <= 10.0 * x1).collect();
    if small.len() < 8 {
        return Err(GraphTransformError::InsufficientSamples(small.len()));
    }
    let n = small.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, f) in &small {
        let y = f / (x * x * x);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let det = n * sxx - sx * sx;
    let (a3, slope) = if det.abs() > 0.0 {
        ((sxx * sy - sx * sxy) / det, (n * sxy - sx * sy) / det)
    } else {
        (sy / n, 0.0)
    };

    let mut decades = Vec::new();
    let mut lo = x1;
    let top = c.x_max();
    while lo < top {
        let hi = (lo * 10.0).min(top);
        let (mut s3, mut s23) = (0.0f64, 0.0f64);
        for &(x, f) in pos.iter().filter(|p| p.0 >= lo && p.0 <= hi) {
            s3 = s3.max(f.abs() / (x * x * x));
            s23 = s23.max(f.abs() / x.powf(2.0 / 3.0));
        }
        decades.push(DecadeStat {
            lo,
            hi,
            sup_f_over_x3: s3,
            sup_f_over_x23: s23,
        });
        lo *= 10.0;
    }
    let cubic_bounded = decades
        .windows(2)
        .all(|w| w[0].sup_f_over_x3 <= 3.0 * w[1].sup_f_over_x3 || w[0].sup_f_over_x3 == 0.0);
    let x23_decays = match (decades.first(), decades.last()) {
        (Some(a), Some(b)) => a.sup_f_over_x23 <= b.sup_f_over_x23,
        _ => true,
    };
    Ok(TangencyFit {
        a3,
        slope,
        samples: small.len(),
        decay: DecayReport {
            decades,
            cubic_bounded,
            x23_decays,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapdef::MapSpec;

    #[test]
    fn canonical_zero_curve_is_invariant() {
        let m = MapSpec::canon(1.0, 0.0).unwrap();
        let r = invariance_residual(&m, &Curve::zero(0.05, 256), None);
        assert!(r.max_residual <= 1e-14);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn seed_defect_under_perturbation() {
        let m = MapSpec::pert(1.0, 0.0, 0.1).unwrap();
        let c = Curve::zero(0.05, 256);
        let r = invariance_residual(&m, &c, None);
        for s in r.samples.iter().filter(|s| s.x > 1e-3) {
            let xh = preimage(&m, &c, s.x).unwrap();
            let res = s.residual.unwrap();
            assert!((res - 0.1 * xh.powi(3)).abs() <= 1e-12 * res);
        }
        assert!(r.max_residual > 0.0);
    }

    #[test]
    fn fit_of_zero_and_cubic() {
        let z = tangency_fit(&Curve::zero(0.05, 512)).unwrap();
        assert_eq!(z.a3, 0.0);
        assert!(z.decay.cubic_bounded);
        let c = Curve::from_fn(0.05, 512, |x| 0.05 * x.powi(3) - 0.05 * x.powi(4), |x| {
            0.15 * x * x - 0.2 * x.powi(3)
        })
        .unwrap();
        let t = tangency_fit(&c).unwrap();
        assert!((t.a3 - 0.05).abs() < 1e-12);
        assert!(t.decay.cubic_bounded && t.decay.x23_decays);
    }

    #[test]
    fn quadratic_curve_flagged() {
        let c = Curve::from_fn(0.05, 512, |x| x * x, |x| 2.0 * x).unwrap();
        let t = tangency_fit(&c).unwrap();
        assert!(!t.decay.cubic_bounded);
    }

    #[test]
    fn sparse_small_decade_rejected() {
        let c = Curve::zero(0.05, 32);
        assert!(matches!(
            tangency_fit(&c),
            Err(GraphTransformError::InsufficientSamples(_))
        ));
    }
}
