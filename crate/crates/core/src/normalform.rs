//! Shears `ỹ = y + γxⁿ` that remove the pure `xⁿ` terms from the Y
//! component, one order at a time.

use thiserror::Error;

use crate::graphtransform::Curve;
use crate::series::{compose_maps, PlanarSeriesMap, Series1, Series2, SeriesError};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum NormalFormError {
    #[error("normalform: step order {n} must lie in 3..={order}")]
    StepOutOfRange { n: usize, order: usize },
    #[error("normalform: truncation order {order} is below N + 2 = {}", .n + 2)]
    OrderTooLow { order: usize, n: usize },
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Output of [`normalize_to_order`].
#[derive(Clone, Debug, PartialEq)]
pub struct NormalFormResult {
    /// The conjugated map, free of pure `xᵏ` Y terms for `3 ≤ k ≤ order`.
    pub normalized: PlanarSeriesMap,
    /// `γ₃ ..= γ_N`.
    pub gammas: Vec<f64>,
    /// `s(x) = Σ γₙ xⁿ`.
    pub shift: Series1,
    /// The normalization order `N`.
    pub order: usize,
}

impl NormalFormResult {
    /// The composite change of variables `(x, y) ↦ (x, y + s(x))`.
    pub fn composite_shear(&self) -> PlanarSeriesMap {
        shear_series(&self.shift, self.normalized.order())
    }
}

/// `(x, y) ↦ (x, y + s(x))`.
fn shear_series(s: &Series1, order: usize) -> PlanarSeriesMap {
    let fy = Series2::from_terms(
        std::iter::once(((0, 1), 1.0))
            .chain((0..=order).map(|k| ((k as u32, 0), s.coeff(k)))),
        order,
    );
    PlanarSeriesMap::new(Series2::x(order), fy).expect("shear has unit determinant")
}

/// `T(x, y) = (x, y + γxⁿ)`.
pub fn shear(gamma: f64, n: usize, order: usize) -> PlanarSeriesMap {
    shear_series(&Series1::monomial(n, gamma, order), order)
}

/// One conjugation `T ∘ m ∘ T⁻¹` with `γ = −β/2`, β the `xⁿ` coefficient of
/// the Y component. The killed coefficient is stored as an exact zero.
pub fn normalize_step(
    m: &PlanarSeriesMap,
    n: usize,
) -> Result<(PlanarSeriesMap, f64), NormalFormError> {
    let order = m.order();
    if n < 3 || n > order {
        return Err(NormalFormError::StepOutOfRange { n, order });
    }
    let beta = m.fy().coeff(n as u32, 0);
    if beta == 0.0 {
        return Ok((m.clone(), 0.0));
    }
    let gamma = -beta / 2.0;
    let t = shear(gamma, n, order);
    let t_inv = shear(-gamma, n, order);
    let conj = compose_maps(&t, &compose_maps(m, &t_inv)?)?;
    let fy = conj.fy().clone().with_coeff(n as u32, 0, 0.0);
    let out = PlanarSeriesMap::new(conj.fx().clone(), fy)?;
    Ok((out, gamma))
}

/// Applies [`normalize_step`] for `n = 3..=big_n`. `big_n = 2` performs no
/// step and returns the input unchanged.
pub fn normalize_to_order(
    m: &PlanarSeriesMap,
    big_n: usize,
) -> Result<NormalFormResult, NormalFormError> {
    let order = m.order();
    if order < big_n + 2 {
        return Err(NormalFormError::OrderTooLow { order, n: big_n });
    }
    let mut cur = m.clone();
    let mut gammas = Vec::new();
    let mut shift = Series1::zero(order);
    for n in 3..=big_n {
        let (next, g) = normalize_step(&cur, n)?;
        gammas.push(g);
        shift = shift.with_coeff(n, g);
        cur = next;
    }
    Ok(NormalFormResult {
        normalized: cur,
        gammas,
        shift,
        order: big_n,
    })
}

/// Graph function in original coordinates: `F_orig = F_norm − s`.
pub fn pullback_series(f_norm: &Series1, shift: &Series1) -> Series1 {
    f_norm - shift
}

/// Sampled version of [`pullback_series`]; slopes are shifted by `s′`.
pub fn pullback_curve(c: &Curve, shift: &Series1) -> Curve {
    c.map_values(|x, f, df| (f - shift.eval(x), df - shift.eval_derivative(x)))
}
