//! Polynomial maps of the form
//! `X = x + x² + μxy + O³`, `Y = −y + λxy + O³` with `λ > 0`.
//!
//! A [`MapSpec`] is always validated on construction, so downstream code can
//! rely on the linear part `diag(1, −1)` and the fixed quadratic part.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use thiserror::Error;

use crate::poly::{Jacobian, PlanarMap, Point, Poly2, PolyMap};
use crate::series::{PlanarSeriesMap, Series2, SeriesError};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum MapError {
    #[error("mapdef: line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("mapdef: {0}")]
    Validation(String),
    #[error("mapdef: lambda must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error("mapdef: Newton inversion did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Which component a coefficient belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Component {
    X,
    Y,
}

impl Component {
    fn name(self) -> &'static str {
        match self {
            Component::X => "X",
            Component::Y => "Y",
        }
    }
}

pub type Terms = BTreeMap<(u32, u32), f64>;

/// A validated polynomial map with the prescribed linear and quadratic part.
#[derive(Clone, Debug, PartialEq)]
pub struct MapSpec {
    x_terms: Terms,
    y_terms: Terms,
    lambda: f64,
    mu: f64,
    compiled: PolyMap,
}

impl MapSpec {
    /// Validates the coefficient tables; λ and μ are read from the `xy`
    /// coefficients of `Y` and `X`.
    pub fn new(mut x_terms: Terms, mut y_terms: Terms) -> Result<Self, MapError> {
        x_terms.retain(|_, c| *c != 0.0);
        y_terms.retain(|_, c| *c != 0.0);
        for (comp, terms) in [(Component::X, &x_terms), (Component::Y, &y_terms)] {
            if let Some((&(i, j), &c)) = terms.iter().find(|(_, c)| !c.is_finite()) {
                return Err(MapError::Validation(format!(
                    "coefficient {} {i} {j} is not finite ({c})",
                    comp.name()
                )));
            }
        }
        let get = |t: &Terms, i, j| t.get(&(i, j)).copied().unwrap_or(0.0);
        let require = |comp: Component, i: u32, j: u32, want: f64, what: &str| {
            let t = if comp == Component::X { &x_terms } else { &y_terms };
            let got = get(t, i, j);
            if got != want {
                Err(MapError::Validation(format!(
                    "{what} (coefficient {} {i} {j} must be {want}, got {got})",
                    comp.name()
                )))
            } else {
                Ok(())
            }
        };
        require(Component::X, 0, 0, 0.0, "the origin must be fixed")?;
        require(Component::Y, 0, 0, 0.0, "the origin must be fixed")?;
        require(Component::X, 1, 0, 1.0, "linear part of X must be x")?;
        require(Component::X, 0, 1, 0.0, "linear part of X must be x")?;
        require(Component::Y, 1, 0, 0.0, "linear part of Y must be -y")?;
        require(Component::Y, 0, 1, -1.0, "linear part of Y must be -y")?;
        require(Component::X, 2, 0, 1.0, "quadratic part of X must be x² + μxy")?;
        require(Component::X, 0, 2, 0.0, "quadratic part of X must be x² + μxy")?;
        require(Component::Y, 2, 0, 0.0, "quadratic part of Y must be λxy")?;
        require(Component::Y, 0, 2, 0.0, "quadratic part of Y must be λxy")?;
        let lambda = get(&y_terms, 1, 1);
        if lambda <= 0.0 {
            return Err(MapError::NonPositiveLambda(lambda));
        }
        let mu = get(&x_terms, 1, 1);
        let compiled = PolyMap::new(Poly2::from_map(&x_terms), Poly2::from_map(&y_terms));
        Ok(MapSpec {
            x_terms,
            y_terms,
            lambda,
            mu,
            compiled,
        })
    }

    /// `(x + x² + μxy, −y(1 − λx))`, whose invariant curve is the x-axis.
    pub fn canon(lambda: f64, mu: f64) -> Result<Self, MapError> {
        Self::pert(lambda, mu, 0.0)
    }

    /// The canonical map plus `c·x³` in the Y component.
    pub fn pert(lambda: f64, mu: f64, c: f64) -> Result<Self, MapError> {
        let x = Terms::from([((1, 0), 1.0), ((2, 0), 1.0), ((1, 1), mu)]);
        let y = Terms::from([((0, 1), -1.0), ((1, 1), lambda), ((3, 0), c)]);
        Self::new(x, y)
    }

    /// A random map of the admissible form: λ ∈ [0.5, 2], μ ∈ [−1, 1], and
    /// every cubic and quartic coefficient of both components in [−1, 1].
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let lambda = rng.random_range(0.5..=2.0);
        let mu = rng.random_range(-1.0..=1.0);
        let mut x = Terms::from([((1, 0), 1.0), ((2, 0), 1.0), ((1, 1), mu)]);
        let mut y = Terms::from([((0, 1), -1.0), ((1, 1), lambda)]);
        for d in 3..=4u32 {
            for j in 0..=d {
                x.insert((d - j, j), rng.random_range(-1.0..=1.0));
                y.insert((d - j, j), rng.random_range(-1.0..=1.0));
            }
        }
        Self::new(x, y).expect("random map has the admissible form by construction")
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn x_terms(&self) -> &Terms {
        &self.x_terms
    }

    pub fn y_terms(&self) -> &Terms {
        &self.y_terms
    }

    /// Largest total degree of any stored monomial.
    pub fn degree(&self) -> usize {
        self.x_terms
            .keys()
            .chain(self.y_terms.keys())
            .map(|&(i, j)| (i + j) as usize)
            .max()
            .unwrap_or(0)
    }

    /// Exact evaluation, optionally with the exact Jacobian.
    pub fn eval_map(&self, p: Point, with_jacobian: bool) -> (Point, Option<Jacobian>) {
        if with_jacobian {
            let (v, j) = self.compiled.eval_with_jacobian(p);
            (v, Some(j))
        } else {
            (self.compiled.eval(p), None)
        }
    }

    /// The same polynomial as a truncated series map; monomials above
    /// `order` are dropped.
    pub fn to_series(&self, order: usize) -> Result<PlanarSeriesMap, MapError> {
        if order < 2 {
            return Err(MapError::Validation(format!(
                "series order must be at least 2, got {order}"
            )));
        }
        let conv = |t: &Terms| Series2::from_terms(t.iter().map(|(&k, &c)| (k, c)), order);
        Ok(PlanarSeriesMap::new(
            conv(&self.x_terms),
            conv(&self.y_terms),
        )?)
    }

    /// Text in the map-spec format; [`parse_map_spec`] reads it back exactly.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (comp, terms) in [("X", &self.x_terms), ("Y", &self.y_terms)] {
            for (&(i, j), &c) in terms {
                let _ = writeln!(s, "{comp} {i} {j} {c:?}");
            }
        }
        s
    }
}

impl PlanarMap for MapSpec {
    fn eval(&self, p: Point) -> Point {
        self.compiled.eval(p)
    }

    fn eval_with_jacobian(&self, p: Point) -> (Point, Jacobian) {
        self.compiled.eval_with_jacobian(p)
    }

    fn eval_increment(&self, p: Point, dp: Point) -> Point {
        self.compiled.eval_increment(p, dp)
    }
}

/// Reads the line-oriented map-spec format:
///
/// ```text
/// # comment
/// X 1 0 1
/// X 2 0 1
/// Y 0 1 -1
/// Y 1 1 1
/// ```
pub fn parse_map_spec(text: &str) -> Result<MapSpec, MapError> {
    let mut x = Terms::new();
    let mut y = Terms::new();
    let mut seen = std::collections::BTreeSet::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let err = |msg: String| MapError::Parse { line, msg };
        let tok: Vec<&str> = t.split_whitespace().collect();
        if tok.len() != 4 {
            return Err(err(format!(
                "expected `X|Y i j c`, found {} fields",
                tok.len()
            )));
        }
        let comp = match tok[0] {
            "X" => Component::X,
            "Y" => Component::Y,
            other => return Err(err(format!("unknown component `{other}`"))),
        };
        let exp = |s: &str| {
            s.parse::<u32>()
                .map_err(|_| err(format!("invalid exponent `{s}`")))
        };
        let (i, j) = (exp(tok[1])?, exp(tok[2])?);
        let c: f64 = tok[3]
            .parse()
            .map_err(|_| err(format!("invalid coefficient `{}`", tok[3])))?;
        if !c.is_finite() {
            return Err(err(format!("coefficient `{}` is not finite", tok[3])));
        }
        if !seen.insert((tok[0], i, j)) {
            return Err(err(format!("duplicate term {} {i} {j}", tok[0])));
        }
        match comp {
            Component::X => x.insert((i, j), c),
            Component::Y => y.insert((i, j), c),
        };
    }
    MapSpec::new(x, y)
}

/// Solves `Φ(p) = target` by damped Newton iteration with the exact
/// Jacobian.
///
/// The default guess `(X − X², −Y)` inverts the linear and leading quadratic
/// part. Iteration continues while the residual decreases, so the result is
/// accurate to round-off; convergence means a residual ≤ 1e−12.
pub fn invert_point<M: PlanarMap + ?Sized>(
    m: &M,
    target: Point,
    guess: Option<Point>,
) -> Result<Point, MapError> {
    const CAP: usize = 50;
    let mut p = guess.unwrap_or(Point::new(target.x - target.x * target.x, -target.y));
    let resid = |q: Point| (m.eval(q) - target).norm_inf();
    let mut r = resid(p);
    let mut iterations = 0;
    while iterations < CAP && r > 0.0 {
        iterations += 1;
        let (v, j) = m.eval_with_jacobian(p);
        let f = v - target;
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let step = Point::new(
            (j[1][1] * f.x - j[0][1] * f.y) / det,
            (-j[1][0] * f.x + j[0][0] * f.y) / det,
        );
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let cand = p - step * t;
            let rc = resid(cand);
            if rc < r {
                p = cand;
                r = rc;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    if r <= 1e-12 && p.is_finite() {
        Ok(p)
    } else {
        Err(MapError::NoConvergence {
            iterations,
            residual: r,
        })
    }
}
