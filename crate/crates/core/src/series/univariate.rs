use std::ops::{Add, Mul, Neg, Sub};

use super::SeriesError;

/// Dense truncated series `Σ_{k=0}^{order} c_k t^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Series1 {
    coeffs: Vec<f64>,
}

impl Series1 {
    pub fn zero(order: usize) -> Self {
        Series1 {
            coeffs: vec![0.0; order + 1],
        }
    }

    /// Coefficients past `order` are dropped, missing ones are zero.
    pub fn from_coeffs(coeffs: &[f64], order: usize) -> Self {
        let mut s = Self::zero(order);
        for (k, &c) in coeffs.iter().enumerate().take(order + 1) {
            s.coeffs[k] = c;
        }
        s
    }

    /// The series `t`.
    pub fn identity(order: usize) -> Self {
        Self::monomial(1, 1.0, order)
    }

    pub fn monomial(k: usize, c: f64, order: usize) -> Self {
        let mut s = Self::zero(order);
        if k <= order {
            s.coeffs[k] = c;
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Copy with coefficient `k` replaced; ignored past the order.
    pub fn with_coeff(mut self, k: usize, c: f64) -> Self {
        if k <= self.order() {
            self.coeffs[k] = c;
        }
        self
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self::from_coeffs(&self.coeffs, order)
    }

    pub fn scale(&self, c: f64) -> Self {
        Series1 {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    pub fn eval_derivative(&self, t: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, &c)| acc * t + k as f64 * c)
    }

    /// Formal derivative, kept at the same order with a zero top coefficient.
    pub fn derivative(&self) -> Self {
        let n = self.order();
        let mut d = Self::zero(n);
        for k in 1..=n {
            d.coeffs[k - 1] = k as f64 * self.coeffs[k];
        }
        d
    }

    /// `self ∘ inner`, truncated to the smaller order.
    pub fn compose(&self, inner: &Series1) -> Result<Series1, SeriesError> {
        if inner.coeff(0) != 0.0 {
            return Err(SeriesError::NonzeroConstant(inner.coeff(0)));
        }
        let order = self.order().min(inner.order());
        let inner = inner.truncate(order);
        let mut acc = Series1::zero(order);
        for &c in self.coeffs.iter().take(order + 1).rev() {
            acc = &acc * &inner;
            acc.coeffs[0] += c;
        }
        Ok(acc)
    }

    /// Largest coefficient difference over the common order.
    pub fn max_abs_diff(&self, other: &Series1) -> f64 {
        let n = self.order().max(other.order());
        (0..=n)
            .map(|k| (self.coeff(k) - other.coeff(k)).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

impl Add for &Series1 {
    type Output = Series1;
    fn add(self, o: &Series1) -> Series1 {
        let n = self.order().min(o.order());
        Series1 {
            coeffs: (0..=n).map(|k| self.coeffs[k] + o.coeffs[k]).collect(),
        }
    }
}

impl Sub for &Series1 {
    type Output = Series1;
    fn sub(self, o: &Series1) -> Series1 {
        let n = self.order().min(o.order());
        Series1 {
            coeffs: (0..=n).map(|k| self.coeffs[k] - o.coeffs[k]).collect(),
        }
    }
}

impl Mul for &Series1 {
    type Output = Series1;
    fn mul(self, o: &Series1) -> Series1 {
        let n = self.order().min(o.order());
        let mut out = vec![0.0; n + 1];
        for (i, &a) in self.coeffs.iter().enumerate().take(n + 1) {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in o.coeffs.iter().enumerate().take(n + 1 - i) {
                out[i + j] += a * b;
            }
        }
        Series1 { coeffs: out }
    }
}

impl Neg for &Series1 {
    type Output = Series1;
    fn neg(self) -> Series1 {
        self.scale(-1.0)
    }
}

/// Compositional inverse `r` with `s ∘ r = t` through the order of `s`.
///
/// Each correction step `r ← r − (s∘r − t)/s₁` fixes one more coefficient.
pub fn reverse_series(s: &Series1) -> Result<Series1, SeriesError> {
    if s.coeff(0) != 0.0 {
        return Err(SeriesError::NonzeroConstant(s.coeff(0)));
    }
    let s1 = s.coeff(1);
    if s1 == 0.0 {
        return Err(SeriesError::ZeroLinear);
    }
    let order = s.order();
    let id = Series1::identity(order);
    let mut r = Series1::monomial(1, 1.0 / s1, order);
    for _ in 1..order {
        let defect = &s.compose(&r)? - &id;
        r = &r - &defect.scale(1.0 / s1);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn product_of_canonical_factors() {
        let a = Series1::from_coeffs(&[1.0, -1.0], 3);
        let b = Series1::from_coeffs(&[1.0, -1.0, -1.0], 3);
        assert_eq!((&a * &b).coeffs(), &[1.0, -2.0, 0.0, 1.0]);
    }

    #[test]
    fn reverse_catalan() {
        let s = Series1::from_coeffs(&[0.0, 1.0, 1.0], 4);
        let r = reverse_series(&s).unwrap();
        assert_eq!(r.coeffs(), &[0.0, 1.0, -1.0, 2.0, -5.0]);
    }

    #[test]
    fn reverse_linear_and_identity() {
        let r = reverse_series(&Series1::monomial(1, 2.0, 6)).unwrap();
        assert_eq!(r, Series1::monomial(1, 0.5, 6));
        let id = Series1::identity(6);
        assert_eq!(reverse_series(&id).unwrap(), id);
    }

    #[test]
    fn reverse_rejects_degenerate_input() {
        let s = Series1::from_coeffs(&[0.0, 0.0, 1.0], 4);
        assert_eq!(reverse_series(&s), Err(SeriesError::ZeroLinear));
        let s = Series1::from_coeffs(&[0.1, 1.0], 4);
        assert!(matches!(
            reverse_series(&s),
            Err(SeriesError::NonzeroConstant(_))
        ));
    }

    #[test]
    fn eval_and_derivative() {
        let s = Series1::from_coeffs(&[1.0, 2.0, 3.0], 2);
        assert_eq!(s.eval(2.0), 17.0);
        assert_eq!(s.eval_derivative(2.0), 14.0);
        assert_eq!(s.derivative().coeffs(), &[2.0, 6.0, 0.0]);
    }

    proptest! {
        #[test]
        fn double_reversion_is_identity(
            lin in prop_oneof![0.5f64..2.0, -2.0f64..-0.5],
            rest in proptest::collection::vec(-1.0f64..1.0, 7),
        ) {
            let mut c = vec![0.0, lin];
            c.extend(rest);
            let s = Series1::from_coeffs(&c, 8);
            let rr = reverse_series(&reverse_series(&s).unwrap()).unwrap();
            prop_assert!(rr.max_abs_diff(&s) <= 1e-10);
        }
    }
}
