use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use super::{Series1, SeriesError};

/// Sparse truncated series `Σ c_ij x^i y^j` with `i + j ≤ order`.
///
/// Zero coefficients are never stored, so two series with the same nonzero
/// coefficients compare equal.
#[derive(Clone, Debug, PartialEq)]
pub struct Series2 {
    terms: BTreeMap<(u32, u32), f64>,
    order: usize,
}

impl Series2 {
    pub fn zero(order: usize) -> Self {
        Series2 {
            terms: BTreeMap::new(),
            order,
        }
    }

    /// Builds a series from `((i, j), c)` pairs. Repeated keys are summed;
    /// terms above the order and zero sums are dropped.
    pub fn from_terms<I>(terms: I, order: usize) -> Self
    where
        I: IntoIterator<Item = ((u32, u32), f64)>,
    {
        let mut map = BTreeMap::new();
        for ((i, j), c) in terms {
            if (i + j) as usize <= order {
                *map.entry((i, j)).or_insert(0.0) += c;
            }
        }
        map.retain(|_, c| *c != 0.0);
        Series2 { terms: map, order }
    }

    pub fn monomial(i: u32, j: u32, c: f64, order: usize) -> Self {
        Self::from_terms([((i, j), c)], order)
    }

    /// The series `x`.
    pub fn x(order: usize) -> Self {
        Self::monomial(1, 0, 1.0, order)
    }

    /// The series `y`.
    pub fn y(order: usize) -> Self {
        Self::monomial(0, 1, 1.0, order)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeff(&self, i: u32, j: u32) -> f64 {
        self.terms.get(&(i, j)).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> &BTreeMap<(u32, u32), f64> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Copy with coefficient `(i, j)` replaced (removed when `c == 0`).
    pub fn with_coeff(mut self, i: u32, j: u32, c: f64) -> Self {
        if c == 0.0 {
            self.terms.remove(&(i, j));
        } else if (i + j) as usize <= self.order {
            self.terms.insert((i, j), c);
        }
        self
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self::from_terms(self.terms.iter().map(|(&k, &c)| (k, c)), order)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_terms(self.terms.iter().map(|(&k, &v)| (k, v * c)), self.order)
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|(&(i, j), &c)| c * x.powi(i as i32) * y.powi(j as i32))
            .sum()
    }

    /// Largest coefficient difference over both supports.
    pub fn max_abs_diff(&self, other: &Series2) -> f64 {
        (self - other).max_abs_coeff()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Integer powers `self^0 ..= self^k`.
    fn powers(&self, k: u32, order: usize) -> Vec<Series2> {
        let base = self.truncate(order);
        let mut out = vec![Series2::monomial(0, 0, 1.0, order)];
        for p in 1..=k as usize {
            out.push(&out[p - 1] * &base);
        }
        out
    }

    fn max_exponents(&self) -> (u32, u32) {
        self.terms
            .keys()
            .fold((0, 0), |(a, b), &(i, j)| (a.max(i), b.max(j)))
    }

    /// `self(u, v)` for bivariate `u, v` with zero constant terms.
    pub fn compose(&self, u: &Series2, v: &Series2) -> Result<Series2, SeriesError> {
        for s in [u, v] {
            let c = s.coeff(0, 0);
            if c != 0.0 {
                return Err(SeriesError::NonzeroConstant(c));
            }
        }
        let order = self.order.min(u.order).min(v.order);
        let (mi, mj) = self.max_exponents();
        let pu = u.powers(mi, order);
        let pv = v.powers(mj, order);
        let mut acc = Series2::zero(order);
        for (&(i, j), &c) in &self.terms {
            if (i + j) as usize > order {
                continue;
            }
            acc = &acc + &(&pu[i as usize] * &pv[j as usize]).scale(c);
        }
        Ok(acc)
    }

    /// `self(u(t), v(t))` for univariate `u, v` with zero constant terms.
    pub fn compose_univariate(&self, u: &Series1, v: &Series1) -> Result<Series1, SeriesError> {
        for s in [u, v] {
            if s.coeff(0) != 0.0 {
                return Err(SeriesError::NonzeroConstant(s.coeff(0)));
            }
        }
        let order = self.order.min(u.order()).min(v.order());
        let (mi, mj) = self.max_exponents();
        let mut pu = vec![Series1::monomial(0, 1.0, order)];
        for p in 1..=mi as usize {
            pu.push(&pu[p - 1] * u);
        }
        let mut pv = vec![Series1::monomial(0, 1.0, order)];
        for p in 1..=mj as usize {
            pv.push(&pv[p - 1] * v);
        }
        let mut acc = Series1::zero(order);
        for (&(i, j), &c) in &self.terms {
            acc = &acc + &(&pu[i as usize] * &pv[j as usize]).scale(c);
        }
        Ok(acc)
    }
}

impl Add for &Series2 {
    type Output = Series2;
    fn add(self, o: &Series2) -> Series2 {
        let order = self.order.min(o.order);
        Series2::from_terms(
            self.terms
                .iter()
                .chain(o.terms.iter())
                .map(|(&k, &c)| (k, c)),
            order,
        )
    }
}

impl Sub for &Series2 {
    type Output = Series2;
    fn sub(self, o: &Series2) -> Series2 {
        let order = self.order.min(o.order);
        Series2::from_terms(
            self.terms
                .iter()
                .map(|(&k, &c)| (k, c))
                .chain(o.terms.iter().map(|(&k, &c)| (k, -c))),
            order,
        )
    }
}

impl Mul for &Series2 {
    type Output = Series2;
    fn mul(self, o: &Series2) -> Series2 {
        let order = self.order.min(o.order);
        // dense triangular accumulator indexed by (total degree, j)
        let idx = |i: usize, j: usize| {
            let d = i + j;
            d * (d + 1) / 2 + j
        };
        let mut acc = vec![0.0; (order + 1) * (order + 2) / 2];
        for (&(i1, j1), &a) in &self.terms {
            for (&(i2, j2), &b) in &o.terms {
                let (i, j) = ((i1 + i2) as usize, (j1 + j2) as usize);
                if i + j <= order {
                    acc[idx(i, j)] += a * b;
                }
            }
        }
        let mut terms = BTreeMap::new();
        for d in 0..=order {
            for j in 0..=d {
                let c = acc[idx(d - j, j)];
                if c != 0.0 {
                    terms.insert(((d - j) as u32, j as u32), c);
                }
            }
        }
        Series2 { terms, order }
    }
}

impl Neg for &Series2 {
    type Output = Series2;
    fn neg(self) -> Series2 {
        self.scale(-1.0)
    }
}
