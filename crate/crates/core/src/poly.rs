//! Points, planar maps, and a compiled evaluator for sparse bivariate
//! polynomials.
//!
//! Every map in this crate is polynomial, so [`PolyMap`] is the single hot
//! path used by the graph transform, shadowing and repulsion experiments.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

/// A point of the plane.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Max-norm.
    pub fn norm_inf(self) -> f64 {
        self.x.abs().max(self.y.abs())
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

/// Row-major 2×2 matrix: `j[0] = [dX/dx, dX/dy]`, `j[1] = [dY/dx, dY/dy]`.
pub type Jacobian = [[f64; 2]; 2];

/// A map of the plane with exact first derivatives.
pub trait PlanarMap {
    fn eval(&self, p: Point) -> Point;

    fn eval_with_jacobian(&self, p: Point) -> (Point, Jacobian);

    /// `Φ(p + dp) − Φ(p)`.
    ///
    /// Polynomial maps override this with a cancellation-free expansion so
    /// that increments far below the ulp of `p` survive.
    fn eval_increment(&self, p: Point, dp: Point) -> Point {
        self.eval(p + dp) - self.eval(p)
    }
}

impl<M: PlanarMap + ?Sized> PlanarMap for &M {
    fn eval(&self, p: Point) -> Point {
        (**self).eval(p)
    }
    fn eval_with_jacobian(&self, p: Point) -> (Point, Jacobian) {
        (**self).eval_with_jacobian(p)
    }
    fn eval_increment(&self, p: Point, dp: Point) -> Point {
        (**self).eval_increment(p, dp)
    }
}

/// Sparse bivariate polynomial compiled for repeated evaluation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly2 {
    terms: Vec<(usize, usize, f64)>,
    deg_x: usize,
    deg_y: usize,
}

impl Poly2 {
    pub fn from_terms<'a, I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (&'a (u32, u32), &'a f64)>,
    {
        let terms: Vec<(usize, usize, f64)> = terms
            .into_iter()
            .filter(|(_, c)| **c != 0.0)
            .map(|(&(i, j), &c)| (i as usize, j as usize, c))
            .collect();
        let deg_x = terms.iter().map(|t| t.0).max().unwrap_or(0);
        let deg_y = terms.iter().map(|t| t.1).max().unwrap_or(0);
        Poly2 {
            terms,
            deg_x,
            deg_y,
        }
    }

    pub fn from_map(terms: &BTreeMap<(u32, u32), f64>) -> Self {
        Self::from_terms(terms.iter())
    }

    pub fn terms(&self) -> &[(usize, usize, f64)] {
        &self.terms
    }

    fn powers(base: f64, deg: usize) -> Vec<f64> {
        let mut p = Vec::with_capacity(deg + 1);
        let mut acc = 1.0;
        for _ in 0..=deg {
            p.push(acc);
            acc *= base;
        }
        p
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let px = Self::powers(x, self.deg_x);
        let py = Self::powers(y, self.deg_y);
        self.terms.iter().map(|&(i, j, c)| c * px[i] * py[j]).sum()
    }

    /// Value and both partial derivatives.
    pub fn eval_grad(&self, x: f64, y: f64) -> (f64, f64, f64) {
        let px = Self::powers(x, self.deg_x);
        let py = Self::powers(y, self.deg_y);
        self.eval_grad_with(&px, &py)
    }

    fn eval_grad_with(&self, px: &[f64], py: &[f64]) -> (f64, f64, f64) {
        let (mut v, mut dx, mut dy) = (0.0, 0.0, 0.0);
        for &(i, j, c) in &self.terms {
            v += c * px[i] * py[j];
            if i > 0 {
                dx += c * i as f64 * px[i - 1] * py[j];
            }
            if j > 0 {
                dy += c * j as f64 * px[i] * py[j - 1];
            }
        }
        (v, dx, dy)
    }

    /// `P(x + dx, y + dy) − P(x, y)` without subtracting nearly equal values.
    pub fn eval_increment(&self, x: f64, y: f64, dx: f64, dy: f64) -> f64 {
        let inc = |base: f64, d: f64, deg: usize| -> (Vec<f64>, Vec<f64>) {
            // a[k] = (base + d)^k - base^k via a[k] = (base + d) a[k-1] + d base^(k-1)
            let pw = Self::powers(base, deg);
            let mut a = vec![0.0; deg + 1];
            for k in 1..=deg {
                a[k] = (base + d) * a[k - 1] + d * pw[k - 1];
            }
            (pw, a)
        };
        let (px, ax) = inc(x, dx, self.deg_x);
        let (py, ay) = inc(y, dy, self.deg_y);
        self.terms
            .iter()
            .map(|&(i, j, c)| c * (ax[i] * (py[j] + ay[j]) + px[i] * ay[j]))
            .sum()
    }
}

/// A polynomial planar map `(x, y) ↦ (X(x, y), Y(x, y))`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PolyMap {
    pub x: Poly2,
    pub y: Poly2,
}

impl PolyMap {
    pub fn new(x: Poly2, y: Poly2) -> Self {
        PolyMap { x, y }
    }
}

impl PlanarMap for PolyMap {
    fn eval(&self, p: Point) -> Point {
        Point::new(self.x.eval(p.x, p.y), self.y.eval(p.x, p.y))
    }

    fn eval_with_jacobian(&self, p: Point) -> (Point, Jacobian) {
        let deg_x = self.x.deg_x.max(self.y.deg_x);
        let deg_y = self.x.deg_y.max(self.y.deg_y);
        let px = Poly2::powers(p.x, deg_x);
        let py = Poly2::powers(p.y, deg_y);
        let (xv, xdx, xdy) = self.x.eval_grad_with(&px, &py);
        let (yv, ydx, ydy) = self.y.eval_grad_with(&px, &py);
        (Point::new(xv, yv), [[xdx, xdy], [ydx, ydy]])
    }

    fn eval_increment(&self, p: Point, dp: Point) -> Point {
        Point::new(
            self.x.eval_increment(p.x, p.y, dp.x, dp.y),
            self.y.eval_increment(p.x, p.y, dp.x, dp.y),
        )
    }
}
