use super::{Series2, SeriesError};
use crate::poly::{Poly2, PolyMap};

/// A planar map germ `(x, y) ↦ (fx, fy)` fixing the origin, truncated at a
/// common order.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanarSeriesMap {
    fx: Series2,
    fy: Series2,
}

impl PlanarSeriesMap {
    /// Validates a fixed point at the origin and an invertible linear part.
    pub fn new(fx: Series2, fy: Series2) -> Result<Self, SeriesError> {
        let m = Self::from_parts(fx, fy)?;
        let det = m.determinant();
        if det == 0.0 || !det.is_finite() {
            return Err(SeriesError::SingularLinear(det));
        }
        Ok(m)
    }

    /// Like [`PlanarSeriesMap::new`] but allows a singular linear part; used
    /// for shears and intermediate algebra.
    fn from_parts(fx: Series2, fy: Series2) -> Result<Self, SeriesError> {
        if fx.order() != fy.order() {
            return Err(SeriesError::OrderMismatch(fx.order(), fy.order()));
        }
        for s in [&fx, &fy] {
            let c = s.coeff(0, 0);
            if c != 0.0 {
                return Err(SeriesError::NotFixedAtOrigin(c));
            }
        }
        Ok(PlanarSeriesMap { fx, fy })
    }

    pub fn identity(order: usize) -> Self {
        PlanarSeriesMap {
            fx: Series2::x(order),
            fy: Series2::y(order),
        }
    }

    pub fn order(&self) -> usize {
        self.fx.order()
    }

    pub fn fx(&self) -> &Series2 {
        &self.fx
    }

    pub fn fy(&self) -> &Series2 {
        &self.fy
    }

    /// `[[∂X/∂x, ∂X/∂y], [∂Y/∂x, ∂Y/∂y]]` at the origin.
    pub fn linear_part(&self) -> [[f64; 2]; 2] {
        [
            [self.fx.coeff(1, 0), self.fx.coeff(0, 1)],
            [self.fy.coeff(1, 0), self.fy.coeff(0, 1)],
        ]
    }

    fn determinant(&self) -> f64 {
        let l = self.linear_part();
        l[0][0] * l[1][1] - l[0][1] * l[1][0]
    }

    pub fn truncate(&self, order: usize) -> Self {
        PlanarSeriesMap {
            fx: self.fx.truncate(order),
            fy: self.fy.truncate(order),
        }
    }

    /// Largest coefficient difference over both components.
    pub fn max_abs_diff(&self, other: &PlanarSeriesMap) -> f64 {
        self.fx
            .max_abs_diff(&other.fx)
            .max(self.fy.max_abs_diff(&other.fy))
    }

    /// Compiled evaluator for the truncated polynomial.
    pub fn to_poly_map(&self) -> PolyMap {
        PolyMap::new(
            Poly2::from_map(self.fx.terms()),
            Poly2::from_map(self.fy.terms()),
        )
    }
}

fn compose_parts(
    outer: (&Series2, &Series2),
    inner: (&Series2, &Series2),
) -> Result<(Series2, Series2), SeriesError> {
    Ok((
        outer.0.compose(inner.0, inner.1)?,
        outer.1.compose(inner.0, inner.1)?,
    ))
}

/// `outer ∘ inner`. Both maps must carry the same truncation order.
pub fn compose_maps(
    outer: &PlanarSeriesMap,
    inner: &PlanarSeriesMap,
) -> Result<PlanarSeriesMap, SeriesError> {
    if outer.order() != inner.order() {
        return Err(SeriesError::OrderMismatch(outer.order(), inner.order()));
    }
    let (fx, fy) = compose_parts((&outer.fx, &outer.fy), (&inner.fx, &inner.fy))?;
    PlanarSeriesMap::from_parts(fx, fy)
}

/// Local inverse through the truncation order.
///
/// With `m = L + N` (linear plus nonlinear part), iterates
/// `G ← L⁻¹(id − N∘G)` starting from `L⁻¹`; each pass fixes one more order.
pub fn invert_map_series(m: &PlanarSeriesMap) -> Result<PlanarSeriesMap, SeriesError> {
    let order = m.order();
    let l = m.linear_part();
    let det = m.determinant();
    let scale = l.iter().flatten().fold(0.0f64, |a, b| a.max(b.abs()));
    if !det.is_finite() || det.abs() <= 1e-14 * scale * scale {
        return Err(SeriesError::SingularLinear(det));
    }
    let inv = [
        [l[1][1] / det, -l[0][1] / det],
        [-l[1][0] / det, l[0][0] / det],
    ];
    let linear = |a: f64, b: f64| {
        Series2::from_terms([((1, 0), a), ((0, 1), b)], order)
    };
    let nx = &m.fx - &linear(l[0][0], l[0][1]);
    let ny = &m.fy - &linear(l[1][0], l[1][1]);
    let apply_inv = |u: &Series2, v: &Series2| {
        (
            &u.scale(inv[0][0]) + &v.scale(inv[0][1]),
            &u.scale(inv[1][0]) + &v.scale(inv[1][1]),
        )
    };
    let (mut gx, mut gy) = apply_inv(&Series2::x(order), &Series2::y(order));
    for _ in 1..order {
        let (ngx, ngy) = compose_parts((&nx, &ny), (&gx, &gy))?;
        let u = &Series2::x(order) - &ngx;
        let v = &Series2::y(order) - &ngy;
        (gx, gy) = apply_inv(&u, &v);
    }
    PlanarSeriesMap::new(gx, gy)
}
