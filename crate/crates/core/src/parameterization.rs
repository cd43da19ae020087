//! The conjugacy method: with `Ψ = Φ⁻²`, solve `Ψ ∘ K = K ∘ R` for
//! `K(t) = (t + O(t³), O(t³))` and `R(t) = t + r₂t² + dt³` order by order,
//! then read off the invariant graph `φ = K₂ ∘ K₁⁻¹`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;
use twofloat::TwoFloat;

use crate::graphtransform::Curve;
use crate::mapdef::{invert_point, MapError, MapSpec};
use crate::poly::{PlanarMap, Point};
use crate::series::{
    compose_maps, invert_map_series, reverse_series, PlanarSeriesMap, Series1, SeriesError,
};

/// Bound on coefficients that must vanish structurally before they are
/// stored as exact zeros.
const STRUCTURAL_ZERO: f64 = 1e-12;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ParamError {
    #[error("parameterization: order {order} too low (need at least {min})")]
    OrderTooLow { order: usize, min: usize },
    #[error("parameterization: sign condition failed: {0}")]
    SignCondition(String),
    #[error("parameterization: structure check failed: {0}")]
    Structure(String),
    #[error("parameterization: order-{order} equations have no admissible solution (residual {residual:e})")]
    RankDeficient { order: usize, residual: f64 },
    #[error("parameterization: {0}")]
    Hypothesis(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Map(#[from] MapError),
}

/// `Ψ = Φ⁻²` together with the square `Φ²` it was inverted from.
#[derive(Clone, Debug, PartialEq)]
pub struct Psi {
    pub psi: PlanarSeriesMap,
    pub phi2: PlanarSeriesMap,
}

/// Forms `Φ²` and `Ψ = (Φ²)⁻¹` and checks the expected low-order structure:
/// no pure `x³` term in the second component of `Φ²`, `x²`-coefficient `−2`
/// in `Ψ₁` and `xy`-coefficient `2λ` in `Ψ₂`.
pub fn build_psi(m: &MapSpec, order: usize) -> Result<Psi, ParamError> {
    if order < 4 {
        return Err(ParamError::OrderTooLow { order, min: 4 });
    }
    let phi = m.to_series(order)?;
    let phi2 = compose_maps(&phi, &phi)?;
    let psi = invert_map_series(&phi2)?;
    let checks = [
        ("pure x³ coefficient of the second component of Φ²", phi2.fy().coeff(3, 0), 0.0),
        ("x² coefficient of Ψ₁", psi.fx().coeff(2, 0), -2.0),
        ("xy coefficient of Ψ₂", psi.fy().coeff(1, 1), 2.0 * m.lambda()),
    ];
    for (what, got, want) in checks {
        if (got - want).abs() > STRUCTURAL_ZERO {
            return Err(ParamError::Structure(format!("{what} is {got}, expected {want}")));
        }
    }
    Ok(Psi { psi, phi2 })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConjugacyResult {
    pub k1: Series1,
    pub k2: Series1,
    /// Low words of the double-double coefficients of `K`: the certified
    /// parameterization is `(k1 + k_tail.0, k2 + k_tail.1)`.
    pub k_tail: (Series1, Series1),
    /// Quadratic coefficient of `R`.
    pub r_quadratic: f64,
    /// Cubic coefficient of `R`.
    pub d: f64,
    /// Graph function of the invariant curve, `O(x³)`.
    pub phi: Series1,
    /// Coefficients of `Ψ∘K − K∘R` vanish through this order.
    pub residual_order: usize,
    /// Largest residual coefficient through `residual_order`.
    pub residual_max: f64,
}

impl ConjugacyResult {
    pub fn r(&self) -> Series1 {
        Series1::from_coeffs(&[0.0, 1.0, self.r_quadratic, self.d], self.k1.order())
    }
}

/// Options for [`solve_conjugacy_with`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ConjugacyOptions {
    /// Added along the null direction of every rank-deficient order
    /// equation, on top of the minimum-norm solution.
    pub null_shift: f64,
}

/// Unknowns of one elimination step.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Unknown {
    A(usize),
    B(usize),
    R2,
    D,
}

type Dd = TwoFloat;

fn dd_zero(order: usize) -> Vec<Dd> {
    vec![Dd::from(0.0); order + 1]
}

fn dd_is_zero(v: Dd) -> bool {
    v.hi() == 0.0 && v.lo() == 0.0
}

/// Truncated product of two double-double series of equal order.
fn dd_mul(a: &[Dd], b: &[Dd]) -> Vec<Dd> {
    let mut c = dd_zero(a.len() - 1);
    for (i, &ai) in a.iter().enumerate().filter(|(_, v)| !dd_is_zero(**v)) {
        for (j, &bj) in b[..a.len() - i].iter().enumerate() {
            if !dd_is_zero(bj) {
                c[i + j] += ai * bj;
            }
        }
    }
    c
}

/// `a ∘ r` by Horner's rule; `r` has no constant term.
fn dd_compose(a: &[Dd], r: &[Dd]) -> Vec<Dd> {
    let mut acc = dd_zero(a.len() - 1);
    for &ak in a.iter().rev() {
        acc = dd_mul(&acc, r);
        acc[0] += ak;
    }
    acc
}

/// Unknown coefficients of `K` and `R`, kept in double-double precision so
/// that rounding them does not dominate the residual when `K` has large
/// coefficients.
struct State {
    k1: Vec<Dd>,
    k2: Vec<Dd>,
    r: Vec<Dd>,
}

impl State {
    fn new(order: usize) -> Self {
        let mut k1 = dd_zero(order);
        k1[1] = Dd::from(1.0);
        let r = k1.clone();
        State {
            k1,
            k2: dd_zero(order),
            r,
        }
    }

    fn slot(&mut self, u: Unknown) -> &mut Dd {
        match u {
            Unknown::A(k) => &mut self.k1[k],
            Unknown::B(k) => &mut self.k2[k],
            Unknown::R2 => &mut self.r[2],
            Unknown::D => &mut self.r[3],
        }
    }

    fn set(&mut self, u: Unknown, v: Dd) {
        *self.slot(u) = v;
    }

    fn get(&mut self, u: Unknown) -> Dd {
        *self.slot(u)
    }

    /// `(Ψ∘K − K∘R)` through `t^upto`.
    fn residual(&self, psi: &PlanarSeriesMap, upto: usize) -> (Vec<Dd>, Vec<Dd>) {
        let cut = |v: &[Dd]| v[..=upto].to_vec();
        let (k1, k2, r) = (cut(&self.k1), cut(&self.k2), cut(&self.r));
        let mut one = dd_zero(upto);
        one[0] = Dd::from(1.0);
        let mut p1 = vec![one.clone()];
        let mut p2 = vec![one];
        let mut lhs = [dd_zero(upto), dd_zero(upto)];
        for (c, comp) in [psi.fx(), psi.fy()].into_iter().enumerate() {
            for (&(i, j), &coef) in comp.terms() {
                let (i, j) = (i as usize, j as usize);
                if i + j > upto {
                    continue;
                }
                while p1.len() <= i {
                    let next = dd_mul(p1.last().unwrap(), &k1);
                    p1.push(next);
                }
                while p2.len() <= j {
                    let next = dd_mul(p2.last().unwrap(), &k2);
                    p2.push(next);
                }
                for (acc, v) in lhs[c].iter_mut().zip(dd_mul(&p1[i], &p2[j])) {
                    *acc += v * coef;
                }
            }
        }
        let [mut x, mut y] = lhs;
        for (acc, v) in x.iter_mut().zip(dd_compose(&k1, &r)) {
            *acc -= v;
        }
        for (acc, v) in y.iter_mut().zip(dd_compose(&k2, &r)) {
            *acc -= v;
        }
        (x, y)
    }
}

/// Corrects `unknowns` so that coefficient `t^eq_order` of the residual
/// vanishes, taking the minimum-norm correction (plus `null_shift` along the
/// null space when it is nontrivial). The residual is affine in the
/// unknowns, so one call solves the equations and a repeat call refines.
fn solve_step(
    st: &mut State,
    psi: &PlanarSeriesMap,
    unknowns: &[Unknown],
    eq_order: usize,
    null_shift: f64,
) -> Result<(), ParamError> {
    let eval = |st: &State| {
        let (rx, ry) = st.residual(psi, eq_order);
        [rx[eq_order].hi(), ry[eq_order].hi()]
    };
    let base: Vec<Dd> = unknowns.iter().map(|&u| st.get(u)).collect();
    let r0 = eval(st);
    let mut a = DMatrix::<f64>::zeros(2, unknowns.len());
    for (j, &u) in unknowns.iter().enumerate() {
        st.set(u, base[j] + 1.0);
        let rj = eval(st);
        st.set(u, base[j]);
        a[(0, j)] = rj[0] - r0[0];
        a[(1, j)] = rj[1] - r0[1];
    }
    let b = DVector::from_vec(vec![-r0[0], -r0[1]]);
    let scale = a.amax().max(1.0);
    let svd = a.clone().svd(true, true);
    let mut sol = svd
        .solve(&b, 1e-12 * scale)
        .map_err(|e| ParamError::Structure(format!("order {eq_order}: {e}")))?;
    if null_shift != 0.0 {
        // a thin SVD of a wide matrix omits null directions, so use AᵀA
        let eig = (a.transpose() * &a).symmetric_eigen();
        for (k, ev) in eig.eigenvalues.iter().enumerate() {
            if ev.abs() <= 1e-24 * scale * scale {
                sol += eig.eigenvectors.column(k) * null_shift;
            }
        }
    }
    let residual = (&a * &sol - &b).amax();
    if residual > 1e-10 * (1.0 + b.amax()) {
        return Err(ParamError::RankDeficient {
            order: eq_order,
            residual,
        });
    }
    for (j, &u) in unknowns.iter().enumerate() {
        st.set(u, base[j] + sol[j]);
    }
    Ok(())
}

/// [`solve_conjugacy_with`] using the minimum-norm normalization.
pub fn solve_conjugacy(psi: &PlanarSeriesMap, order: usize) -> Result<ConjugacyResult, ParamError> {
    solve_conjugacy_with(psi, order, ConjugacyOptions::default())
}

/// Determines `K` through `t^order` together with `R`.
///
/// The order-`n` coefficients of `K` drop out of the order-`n` equations
/// (the linear part of `Ψ` is the identity), so they are fixed by the
/// order-`n + 1` equations; `psi` must therefore be truncated at
/// `order + 1` or higher, and the residual vanishes through `order + 1`.
/// The residual is evaluated in double-double arithmetic.
pub fn solve_conjugacy_with(
    psi: &PlanarSeriesMap,
    order: usize,
    opts: ConjugacyOptions,
) -> Result<ConjugacyResult, ParamError> {
    if order < 3 {
        return Err(ParamError::OrderTooLow { order, min: 3 });
    }
    if psi.order() < order + 1 {
        return Err(ParamError::OrderTooLow {
            order: psi.order(),
            min: order + 1,
        });
    }
    let (c20, c11) = (psi.fx().coeff(2, 0), psi.fy().coeff(1, 1));
    if !(c20 < 0.0) {
        return Err(ParamError::SignCondition(format!(
            "x² coefficient of Ψ₁ must be negative, got {c20}"
        )));
    }
    if !(c11 > 0.0) {
        return Err(ParamError::SignCondition(format!(
            "xy coefficient of Ψ₂ must be positive, got {c11}"
        )));
    }
    let s = order + 1;
    let psi = psi.truncate(s);
    let mut st = State::new(s);
    // later sweeps refine against round-off
    for sweep in 0..3 {
        let shift = if sweep == 0 { opts.null_shift } else { 0.0 };
        solve_step(&mut st, &psi, &[Unknown::R2], 2, 0.0)?;
        solve_step(
            &mut st,
            &psi,
            &[Unknown::A(2), Unknown::B(2), Unknown::D],
            3,
            shift,
        )?;
        if opts.null_shift == 0.0 {
            // a₂ spans the null direction; pin it exactly
            st.set(Unknown::A(2), Dd::from(0.0));
        }
        let b2 = st.get(Unknown::B(2)).hi();
        if b2.abs() > STRUCTURAL_ZERO {
            return Err(ParamError::Structure(format!(
                "t² coefficient of K₂ is {b2}, expected 0"
            )));
        }
        st.set(Unknown::B(2), Dd::from(0.0));
        for n in 3..=order {
            solve_step(&mut st, &psi, &[Unknown::A(n), Unknown::B(n)], n + 1, 0.0)?;
        }
    }
    let (rx, ry) = st.residual(&psi, s);
    let residual_max = rx.iter().chain(&ry).map(|v| v.hi().abs()).fold(0.0, f64::max);

    let split = |v: &[Dd], part: fn(&Dd) -> f64| {
        let c: Vec<f64> = v[..=order].iter().map(part).collect();
        Series1::from_coeffs(&c, order)
    };
    let k1 = split(&st.k1, Dd::hi);
    let k2 = split(&st.k2, Dd::hi);
    let k_tail = (split(&st.k1, Dd::lo), split(&st.k2, Dd::lo));
    let mut phi = k2.compose(&reverse_series(&k1)?)?;
    for k in 0..3 {
        let c = phi.coeff(k);
        if c.abs() > STRUCTURAL_ZERO {
            return Err(ParamError::Structure(format!(
                "graph function has t^{k} coefficient {c}, expected 0"
            )));
        }
        phi = phi.with_coeff(k, 0.0);
    }
    Ok(ConjugacyResult {
        k1,
        k2,
        k_tail,
        r_quadratic: st.get(Unknown::R2).hi(),
        d: st.get(Unknown::D).hi(),
        phi,
        residual_order: s,
        residual_max,
    })
}

/// Builds `Ψ` at `order + 1` and solves the conjugacy through `order`.
pub fn parameterize(m: &MapSpec, order: usize) -> Result<ConjugacyResult, ParamError> {
    let p = build_psi(m, order + 1)?;
    solve_conjugacy(&p.psi, order)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphInvarianceReport {
    /// Graph of `Φ⁻¹(graph φ)`.
    pub phi_tilde: Series1,
    /// Largest `|φ_k − φ̃_k|` over `k ≤ order`.
    pub max_diff: f64,
    /// Lowest order whose coefficients differ by more than 1e−8.
    pub first_mismatch: Option<usize>,
    /// Whether `φ̃` has no terms below `x³` (to 1e−12).
    pub tilde_is_cubic: bool,
}

/// Pulls the graph of `phi` back by `Φ` and compares the resulting graph
/// function with `phi` coefficient by coefficient.
pub fn graph_invariance_check(
    m: &MapSpec,
    phi: &Series1,
    order: usize,
) -> Result<GraphInvarianceReport, ParamError> {
    let inv = invert_map_series(&m.to_series(order)?)?;
    let phi = phi.truncate(order);
    let u = inv.fx().compose_univariate(&Series1::identity(order), &phi)?;
    let v = inv.fy().compose_univariate(&Series1::identity(order), &phi)?;
    let phi_tilde = v.compose(&reverse_series(&u)?)?;
    let diffs: Vec<f64> = (0..=order)
        .map(|k| (phi.coeff(k) - phi_tilde.coeff(k)).abs())
        .collect();
    Ok(GraphInvarianceReport {
        max_diff: diffs.iter().copied().fold(0.0, f64::max),
        first_mismatch: diffs.iter().position(|&d| d > 1e-8),
        tilde_is_cubic: (0..3).all(|k| phi_tilde.coeff(k).abs() <= STRUCTURAL_ZERO),
        phi_tilde,
    })
}

/// The invariant graph, as a series or as a sampled curve.
#[derive(Clone, Debug, PartialEq)]
pub enum ManifoldGraph {
    Series(Series1),
    Curve(Curve),
}

impl ManifoldGraph {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            ManifoldGraph::Series(s) => s.eval(x),
            ManifoldGraph::Curve(c) => c.eval(x),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RepulsionStep {
    pub step: usize,
    pub x: f64,
    pub y: f64,
    /// `y − F(x)`.
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RepulsionTrace {
    pub steps: Vec<RepulsionStep>,
    /// Set when a pointwise inversion failed and the trace was cut short.
    pub warning: Option<String>,
}

impl RepulsionTrace {
    /// `|deviation|` never decreases.
    pub fn deviation_non_decreasing(&self) -> bool {
        self.steps
            .windows(2)
            .all(|w| w[1].deviation.abs() >= w[0].deviation.abs())
    }

    /// Ratio of the first two deviations.
    pub fn first_ratio(&self) -> Option<f64> {
        match self.steps.as_slice() {
            [a, b, ..] if a.deviation != 0.0 => Some(b.deviation / a.deviation),
            _ => None,
        }
    }

    /// Largest `x_{ν+1} − (x_ν − ½x_ν²)`; negative when every step moves at
    /// least that far toward 0.
    pub fn max_step_excess(&self) -> f64 {
        self.steps
            .windows(2)
            .map(|w| w[1].x - (w[0].x - 0.5 * w[0].x * w[0].x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// CSV with header `step,x,y,deviation`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("step,x,y,deviation\n");
        for st in &self.steps {
            s.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e}\n",
                st.step, st.x, st.y, st.deviation
            ));
        }
        s
    }
}

/// `Φ⁻²` at a point, by two pointwise inversions of `Φ`.
pub fn inverse_square<M: PlanarMap + ?Sized>(m: &M, p: Point) -> Result<Point, MapError> {
    let q = invert_point(m, p, None)?;
    invert_point(m, q, None)
}

/// Iterates `Φ⁻²` from `(x0, F(x0) + offset)` and records the vertical
/// deviation from the graph at every step.
pub fn repulsion_check(
    m: &MapSpec,
    graph: &ManifoldGraph,
    x0: f64,
    offset: f64,
    steps: usize,
) -> Result<RepulsionTrace, ParamError> {
    if !(x0 > 0.0) {
        return Err(ParamError::Hypothesis(format!("x0 must be positive, got {x0}")));
    }
    if offset.abs() > x0.powi(3) {
        return Err(ParamError::Hypothesis(format!(
            "|offset| ≤ x0³ fails: {offset:e} > {:e}",
            x0.powi(3)
        )));
    }
    let mut p = Point::new(x0, graph.eval(x0) + offset);
    let mut out = vec![RepulsionStep {
        step: 0,
        x: p.x,
        y: p.y,
        deviation: offset,
    }];
    let mut warning = None;
    for k in 1..=steps {
        match inverse_square(m, p) {
            Ok(q) if q.x > 0.0 => {
                p = q;
                out.push(RepulsionStep {
                    step: k,
                    x: p.x,
                    y: p.y,
                    deviation: p.y - graph.eval(p.x),
                });
            }
            Ok(q) => {
                warning = Some(format!("orbit reached x = {:e} at step {k}; trace truncated", q.x));
                break;
            }
            Err(e) => {
                warning = Some(format!("step {k}: {e}; trace truncated"));
                break;
            }
        }
    }
    Ok(RepulsionTrace {
        steps: out,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn random_maps_conjugate(seed in 0u64..u64::MAX) {
            let m = MapSpec::random(&mut ChaCha8Rng::seed_from_u64(seed));
            let r = parameterize(&m, 10).unwrap();
            proptest::prop_assert!(r.residual_max <= 1e-10);
            proptest::prop_assert_eq!(r.r_quadratic, -2.0);
            proptest::prop_assert!((0..3).all(|k| r.phi.coeff(k) == 0.0));
            let inv = graph_invariance_check(&m, &r.phi, 8).unwrap();
            proptest::prop_assert!(inv.max_diff <= 1e-8, "{}", inv.max_diff);
        }
    }

    #[test]
    fn canonical_psi() {
        let m = MapSpec::canon(1.0, 0.0).unwrap();
        let p = build_psi(&m, 8).unwrap();
        assert!((p.psi.fx().coeff(3, 0) - 6.0).abs() < 1e-12);
        assert!(p.psi.fx().terms().keys().all(|&(_, j)| j == 0));
        assert!((p.psi.fy().coeff(1, 1) - 2.0).abs() < 1e-12);
        assert!(build_psi(&m, 3).is_err());
    }

    #[test]
    fn canonical_conjugacy_is_trivial() {
        let m = MapSpec::canon(1.0, 0.0).unwrap();
        let r = parameterize(&m, 10).unwrap();
        assert!(r.k2.max_abs_coeff() == 0.0);
        assert!(r.phi.max_abs_coeff() == 0.0);
        assert!(r.residual_max <= 1e-10);
        assert_eq!(r.r_quadratic, -2.0);
        assert_eq!(r.k1.coeff(1), 1.0);
        assert_eq!(r.k1.coeff(2), 0.0);
    }

    #[test]
    fn perturbed_phi_matches_oracle() {
        let m = MapSpec::pert(1.0, 0.0, 0.1).unwrap();
        let r = parameterize(&m, 10).unwrap();
        let oracle = [0.05, -0.05, 0.0, 0.125, -0.2125, -0.275, 1.94375, -1.14375];
        for (k, &a) in oracle.iter().enumerate() {
            assert!((r.phi.coeff(k + 3) - a).abs() < 1e-10, "k = {}", k + 3);
        }
        assert!(r.residual_max <= 1e-10);
        assert_eq!(r.residual_order, 11);
        assert!((r.r_quadratic + 2.0).abs() < 1e-12);
    }

    #[test]
    fn mixed_map_matches_oracle() {
        // X = x + x² + ½xy + 0.3x³ − 0.2x²y,  Y = −y + 2xy + 0.4x³ − 0.7x⁴ + 0.25xy²
        let x = [((1, 0), 1.0), ((2, 0), 1.0), ((1, 1), 0.5), ((3, 0), 0.3), ((2, 1), -0.2)];
        let y = [((0, 1), -1.0), ((1, 1), 2.0), ((3, 0), 0.4), ((4, 0), -0.7), ((1, 2), 0.25)];
        let m = MapSpec::new(x.into_iter().collect(), y.into_iter().collect()).unwrap();
        let r = parameterize(&m, 10).unwrap();
        let oracle = [0.2, -0.45, 0.06, 1.22, -1.0775, -6.83575, 14.5660375];
        for (k, &a) in oracle.iter().enumerate() {
            assert!((r.phi.coeff(k + 3) - a).abs() < 1e-9, "k = {}", k + 3);
        }
    }

    #[test]
    fn null_shift_changes_k_but_not_phi() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = MapSpec::random(&mut rng);
        let psi = build_psi(&m, 11).unwrap().psi;
        let a = solve_conjugacy(&psi, 10).unwrap();
        let b = solve_conjugacy_with(&psi, 10, ConjugacyOptions { null_shift: 0.7 }).unwrap();
        assert!((b.k1.coeff(2) - a.k1.coeff(2)).abs() > 0.1);
        assert!(a.residual_max <= 1e-10, "{:e}", a.residual_max);
        assert!(b.residual_max <= 1e-10);
        assert!(a.phi.max_abs_diff(&b.phi) <= 1e-9);
    }

    #[test]
    fn sign_conditions_checked() {
        let m = MapSpec::canon(1.0, 0.0).unwrap();
        // Φ itself (not Φ⁻²) has a positive x² coefficient in its first component
        let phi = m.to_series(11).unwrap();
        assert!(matches!(
            solve_conjugacy(&phi, 10),
            Err(ParamError::SignCondition(_))
        ));
        let psi = build_psi(&m, 8).unwrap().psi;
        assert!(matches!(
            solve_conjugacy(&psi, 10),
            Err(ParamError::OrderTooLow { .. })
        ));
    }

    #[test]
    fn graph_invariance_examples() {
        let canon = MapSpec::canon(1.0, 0.0).unwrap();
        let rep = graph_invariance_check(&canon, &Series1::zero(8), 8).unwrap();
        assert_eq!(rep.max_diff, 0.0);
        let pert = MapSpec::pert(1.0, 0.0, 0.1).unwrap();
        let phi = parameterize(&pert, 10).unwrap().phi;
        let rep = graph_invariance_check(&pert, &phi, 6).unwrap();
        assert!(rep.max_diff <= 1e-8);
        assert!(rep.tilde_is_cubic);
        let wrong = &phi + &Series1::monomial(4, 1.0, phi.order());
        let rep = graph_invariance_check(&pert, &wrong, 6).unwrap();
        assert_eq!(rep.first_mismatch, Some(4));
    }

    #[test]
    fn repulsion_examples() {
        let canon = MapSpec::canon(1.0, 0.0).unwrap();
        let g = ManifoldGraph::Series(Series1::zero(10));
        let t = repulsion_check(&canon, &g, 0.1, 1e-6, 5).unwrap();
        let ratio = t.first_ratio().unwrap();
        assert!((ratio - 1.2).abs() < 0.05 * 1.2, "ratio {ratio}");
        assert!(t.deviation_non_decreasing());
        assert!(t.max_step_excess() < 1e-12);
        let t = repulsion_check(&canon, &g, 0.1, 0.0, 5).unwrap();
        assert!(t.steps.iter().all(|s| s.deviation.abs() < 1e-15));
        assert!(repulsion_check(&canon, &g, 0.1, 1e-2, 5).is_err());
    }
}
