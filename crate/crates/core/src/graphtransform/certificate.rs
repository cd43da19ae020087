use super::{Curve, GraphTransformError};

/// Measured derivative bounds `K_m = sup x^(m−N) |F⁽ᵐ⁾(x)|` of a curve,
/// together with the smallest `dX/dx` seen by the push that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundCertificate {
    /// Exponent `N` the bounds are measured against.
    pub n: usize,
    /// `measured_k[m]` for `m = 0..=m_max`.
    pub measured_k: Vec<f64>,
    /// Smallest `dX/dx` over the pushed nodes (`None` when the curve was
    /// not produced by a push).
    pub min_dxdx: Option<f64>,
}

/// Finite-difference weights for the `m`-th derivative at `x0` over `nodes`
/// (Fornberg's recursion).
fn fd_weights(x0: f64, nodes: &[f64], m: usize) -> Vec<f64> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|row| row[m]).collect()
}

/// Derivative bounds by centred finite differences on the curve's nodes.
///
/// The `m`-th derivative at node `i` uses nodes `i − h ..= i + h` with
/// `h = ⌈m/2⌉`. Node 0 is skipped (the weight `x^(m−N)` is singular there),
/// as are nodes whose stencil would reach node 0 or leave the grid.
pub fn bound_certificate(
    c: &Curve,
    n: usize,
    m_max: usize,
) -> Result<BoundCertificate, GraphTransformError> {
    if m_max > 3 {
        return Err(GraphTransformError::InvalidConfig(format!(
            "m_max must be at most 3, got {m_max}"
        )));
    }
    if c.len() < 8 * m_max.max(1) {
        return Err(GraphTransformError::TooSparse {
            nodes: c.len(),
            m_max,
        });
    }
    let (xs, fs) = (c.xs(), c.fs());
    let mut measured_k = vec![0.0; m_max + 1];
    for (m, k) in measured_k.iter_mut().enumerate() {
        let h = m.div_ceil(2);
        for i in (h + 1).max(1)..xs.len().saturating_sub(h) {
            let d = if m == 0 {
                fs[i]
            } else {
                let w = fd_weights(xs[i], &xs[i - h..=i + h], m);
                w.iter().zip(&fs[i - h..=i + h]).map(|(a, b)| a * b).sum()
            };
            let w = xs[i].powi(m as i32 - n as i32);
            *k = f64::max(*k, w * d.abs());
        }
    }
    Ok(BoundCertificate {
        n,
        measured_k,
        min_dxdx: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_curve_has_zero_bounds() {
        let c = Curve::zero(0.05, 64);
        let b = bound_certificate(&c, 8, 3).unwrap();
        assert_eq!(b.measured_k, vec![0.0; 4]);
    }

    #[test]
    fn monomial_bound_is_one() {
        let n = 8;
        let c = Curve::from_fn(0.05, 512, |x| x.powi(n), |x| 8.0 * x.powi(n - 1)).unwrap();
        let b = bound_certificate(&c, n as usize, 2).unwrap();
        assert!((b.measured_k[0] - 1.0).abs() <= 1e-6);
        assert!((b.measured_k[1] - 8.0).abs() < 0.05);
        assert!((b.measured_k[2] - 56.0).abs() < 0.5);
    }

    #[test]
    fn sparse_grid_rejected() {
        let c = Curve::zero(0.05, 20);
        assert!(matches!(
            bound_certificate(&c, 8, 3),
            Err(GraphTransformError::TooSparse { .. })
        ));
    }
}
