//! The weighted distance `(|x − x̂| + x⁻³|y − ŷ|)/x⁸` and its one-step
//! non-expansion along paired orbits.
//!
//! Pairs are stored as a base point plus an offset, and images of the offset
//! are computed with [`PlanarMap::eval_increment`], so offsets far below the
//! ulp of the base point (routinely `x⁸ ≈ 1e−11` and smaller) are resolved.

use rand::Rng;
use thiserror::Error;

use crate::mapdef::MapSpec;
use crate::normalform::{normalize_to_order, NormalFormError};
use crate::poly::{PlanarMap, Point, PolyMap};
use crate::series::DEFAULT_ORDER;

/// Weight exponent of the x-gap denominator.
pub const METRIC_X_POWER: i32 = 8;
/// Extra weight exponent on the y-gap.
pub const METRIC_Y_POWER: i32 = 3;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ShadowError {
    #[error("shadowing: base abscissa must be positive, got {0}")]
    NonPositiveX(f64),
    #[error("shadowing: hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("shadowing: {0}")]
    Map(#[from] crate::mapdef::MapError),
    #[error(transparent)]
    NormalForm(#[from] NormalFormError),
}

/// A point `p` and its companion `q = p + offset`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShadowPair {
    pub p: Point,
    pub offset: Point,
}

impl ShadowPair {
    pub fn from_points(p: Point, q: Point) -> Self {
        ShadowPair { p, offset: q - p }
    }

    pub fn with_offset(p: Point, offset: Point) -> Self {
        ShadowPair { p, offset }
    }

    /// The hatted point.
    pub fn q(&self) -> Point {
        self.p + self.offset
    }
}

/// `(|x − x̂| + x⁻³|y − ŷ|)/x⁸`.
pub fn shadow_metric(pair: &ShadowPair) -> Result<f64, ShadowError> {
    let x = pair.p.x;
    if !(x > 0.0) {
        return Err(ShadowError::NonPositiveX(x));
    }
    Ok(
        (pair.offset.x.abs() + pair.offset.y.abs() / x.powi(METRIC_Y_POWER))
            / x.powi(METRIC_X_POWER),
    )
}

/// Hypotheses of the one-step check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShadowHypotheses {
    /// Flatness exponent: `|y| ≤ x^n`.
    pub n: usize,
    /// Upper bound on `x`; unchecked when `None`.
    pub delta: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepCheck {
    pub before: f64,
    pub after: f64,
    pub ok: bool,
    /// The image pair.
    pub image: ShadowPair,
}

fn check_hypotheses(pair: &ShadowPair, hyp: &ShadowHypotheses) -> Result<f64, ShadowError> {
    let (x, y) = (pair.p.x, pair.p.y);
    if !(x > 0.0) {
        return Err(ShadowError::NonPositiveX(x));
    }
    if let Some(d) = hyp.delta {
        if x > d {
            return Err(ShadowError::Hypothesis(format!("0 < x ≤ δ fails: x = {x}, δ = {d}")));
        }
    }
    let bound = x.powi(hyp.n as i32);
    if y.abs() > bound {
        return Err(ShadowError::Hypothesis(format!(
            "|y| ≤ x^{} fails: |y| = {:e} > {bound:e}",
            hyp.n,
            y.abs()
        )));
    }
    let before = shadow_metric(pair)?;
    if before > 1.0 {
        return Err(ShadowError::Hypothesis(format!(
            "initial distance ≤ 1 fails: {before}"
        )));
    }
    Ok(before)
}

/// Image of a pair under `map`.
pub fn push_pair<M: PlanarMap + ?Sized>(map: &M, pair: &ShadowPair) -> ShadowPair {
    ShadowPair {
        p: map.eval(pair.p),
        offset: map.eval_increment(pair.p, pair.offset),
    }
}

/// Applies the map to both points and compares the distances before and
/// after.
pub fn shadow_step_check<M: PlanarMap + ?Sized>(
    map: &M,
    pair: &ShadowPair,
    hyp: &ShadowHypotheses,
) -> Result<StepCheck, ShadowError> {
    let before = check_hypotheses(pair, hyp)?;
    let image = push_pair(map, pair);
    let after = shadow_metric(&image)?;
    Ok(StepCheck {
        before,
        after,
        ok: after <= before,
        image,
    })
}

/// The map in coordinates where the Y component has no pure `xᵏ` terms for
/// `3 ≤ k ≤ n` (truncated at the default series order).
pub fn normalized_map(m: &MapSpec, n: usize) -> Result<PolyMap, ShadowError> {
    let order = DEFAULT_ORDER.max(n + 2);
    let nf = normalize_to_order(&m.to_series(order)?, n)?;
    Ok(nf.normalized.to_poly_map())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitStep {
    pub step: usize,
    pub x: f64,
    pub xhat: f64,
    pub metric: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitTrace {
    pub steps: Vec<OrbitStep>,
    /// Set when the orbit left `(0, bound]` before the requested step count.
    pub warning: Option<String>,
}

impl OrbitTrace {
    pub fn is_non_increasing(&self) -> bool {
        self.steps.windows(2).all(|w| w[1].metric <= w[0].metric)
    }

    /// CSV with header `step,x,xhat,metric`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("step,x,xhat,metric\n");
        for st in &self.steps {
            s.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e}\n",
                st.step, st.x, st.xhat, st.metric
            ));
        }
        s
    }
}

/// Iterates `(x0, 0)` and `(x0, ỹ0)` side by side and records the distance
/// after every step. The orbit is cut off, with a warning, once `x` leaves
/// `(0, bound]`.
pub fn orbit_shadow_experiment<M: PlanarMap + ?Sized>(
    map: &M,
    x0: f64,
    ytilde0: f64,
    steps: usize,
    n: usize,
    bound: f64,
) -> Result<OrbitTrace, ShadowError> {
    if !(x0 > 0.0) {
        return Err(ShadowError::NonPositiveX(x0));
    }
    if ytilde0.abs() > x0.powi(n as i32) {
        return Err(ShadowError::Hypothesis(format!(
            "|ỹ0| ≤ x0^{n} fails: {:e}",
            ytilde0.abs()
        )));
    }
    let mut pair = ShadowPair::with_offset(Point::new(x0, 0.0), Point::new(0.0, ytilde0));
    let record = |k: usize, pr: &ShadowPair| -> Result<OrbitStep, ShadowError> {
        Ok(OrbitStep {
            step: k,
            x: pr.p.x,
            xhat: pr.q().x,
            metric: shadow_metric(pr)?,
        })
    };
    let mut out = vec![record(0, &pair)?];
    let mut warning = None;
    for k in 1..=steps {
        let next = push_pair(map, &pair);
        if !(next.p.x > 0.0 && next.p.x <= bound) || !next.p.is_finite() {
            warning = Some(format!(
                "orbit left (0, {bound}] at step {k} (x = {:e}); trace truncated",
                next.p.x
            ));
            break;
        }
        pair = next;
        out.push(record(k, &pair)?);
    }
    Ok(OrbitTrace {
        steps: out,
        warning,
    })
}

/// Outcome of a random-pair survey.
#[derive(Clone, Debug, PartialEq)]
pub struct SurveyResult {
    pub tested: usize,
    pub violations: usize,
    /// Largest observed `after / before`.
    pub worst_ratio: f64,
    /// First violating pair, if any.
    pub first_violation: Option<ShadowPair>,
}

/// A random pair respecting the hypotheses: `x ∈ (0, δ]`, `|y| ≤ x^n`, and
/// distance in `[0, 1]` split at random between the x- and y-gaps.
pub fn random_pair<R: Rng + ?Sized>(rng: &mut R, n: usize, delta: f64) -> ShadowPair {
    let x = delta * (1.0 - rng.random::<f64>());
    let y = x.powi(n as i32) * rng.random_range(-1.0..=1.0);
    let m: f64 = rng.random();
    let w: f64 = rng.random();
    let sign = |r: &mut R| if r.random::<bool>() { 1.0 } else { -1.0 };
    let dx = sign(rng) * w * m * x.powi(METRIC_X_POWER);
    let dy = sign(rng) * (1.0 - w) * m * x.powi(METRIC_X_POWER + METRIC_Y_POWER);
    ShadowPair::with_offset(Point::new(x, y), Point::new(dx, dy))
}

/// Checks non-expansion on `count` random hypothesis-respecting pairs.
pub fn random_pair_survey<M: PlanarMap + ?Sized, R: Rng + ?Sized>(
    map: &M,
    n: usize,
    delta: f64,
    count: usize,
    rng: &mut R,
) -> Result<SurveyResult, ShadowError> {
    let hyp = ShadowHypotheses {
        n,
        delta: Some(delta),
    };
    let mut res = SurveyResult {
        tested: 0,
        violations: 0,
        worst_ratio: 0.0,
        first_violation: None,
    };
    for _ in 0..count {
        let pair = random_pair(rng, n, delta);
        let chk = shadow_step_check(map, &pair, &hyp)?;
        res.tested += 1;
        if chk.before > 0.0 {
            res.worst_ratio = res.worst_ratio.max(chk.after / chk.before);
        }
        if !chk.ok {
            res.violations += 1;
            res.first_violation.get_or_insert(pair);
        }
    }
    Ok(res)
}

/// Largest of the candidate δ values (scanned in increasing order) for which
/// `count` random pairs showed no violation; scanning stops at the first
/// violating δ.
pub fn largest_clean_delta<M: PlanarMap + ?Sized, R: Rng + ?Sized>(
    map: &M,
    n: usize,
    candidates: &[f64],
    count: usize,
    rng: &mut R,
) -> Result<Option<f64>, ShadowError> {
    let mut sorted = candidates.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut best = None;
    for d in sorted {
        if random_pair_survey(map, n, d, count, rng)?.violations > 0 {
            break;
        }
        best = Some(d);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pair(x: f64, xh: f64, y: f64, yh: f64) -> ShadowPair {
        ShadowPair::from_points(Point::new(x, y), Point::new(xh, yh))
    }

    #[test]
    fn metric_examples() {
        assert_eq!(shadow_metric(&pair(0.1, 0.1, 0.0, 0.0)).unwrap(), 0.0);
        let m = shadow_metric(&pair(0.1, 0.1 + 1e-9, 0.0, 0.0)).unwrap();
        assert!((m - 0.1).abs() < 1e-7);
        let m = shadow_metric(&pair(0.1, 0.1, 0.0, 1e-12)).unwrap();
        assert!((m - 0.1).abs() < 1e-12);
        assert!(shadow_metric(&pair(0.0, 0.1, 0.0, 0.0)).is_err());
    }

    #[test]
    fn metric_is_linear_in_y_gap() {
        let p = Point::new(0.03, 0.0);
        let base = ShadowPair::with_offset(p, Point::new(0.0, 1e-20));
        let scaled = ShadowPair::with_offset(p, Point::new(0.0, 3e-20));
        let (a, b) = (shadow_metric(&base).unwrap(), shadow_metric(&scaled).unwrap());
        assert!((b - 3.0 * a).abs() <= 1e-15 * b);
    }

    #[test]
    fn canonical_step_example() {
        let m = MapSpec::canon(1.0, 0.0).unwrap();
        let hyp = ShadowHypotheses { n: 8, delta: None };
        let c = shadow_step_check(&m, &pair(0.1, 0.100000001, 0.0, 0.0), &hyp).unwrap();
        assert!((c.before - 0.1).abs() < 1e-7);
        let expect = 1e-9 * 1.2 / 0.11f64.powi(8);
        assert!((c.after - expect).abs() < 1e-6 * expect);
        assert!((c.after - 0.056).abs() < 1e-3);
        assert!(c.ok);
        let same = shadow_step_check(&m, &pair(0.1, 0.1, 0.0, 0.0), &hyp).unwrap();
        assert_eq!((same.before, same.after, same.ok), (0.0, 0.0, true));
    }

    #[test]
    fn hypotheses_are_gated() {
        let m = MapSpec::canon(1.0, 0.0).unwrap();
        let hyp = ShadowHypotheses {
            n: 8,
            delta: Some(0.05),
        };
        let far = pair(0.01, 0.01 + 1e-15, 0.0, 0.0);
        assert!(matches!(
            shadow_step_check(&m, &far, &hyp),
            Err(ShadowError::Hypothesis(_))
        ));
        let out = pair(0.1, 0.1, 0.0, 0.0);
        assert!(shadow_step_check(&m, &out, &hyp).is_err());
        let steep = pair(0.01, 0.01, 1e-10, 1e-10);
        assert!(shadow_step_check(&m, &steep, &hyp).is_err());
    }

    #[test]
    fn orbit_examples() {
        let canon = MapSpec::canon(1.0, 0.0).unwrap();
        let t = orbit_shadow_experiment(&canon, 0.01, 0.0, 20, 8, 0.1).unwrap();
        assert!(t.steps.iter().all(|s| s.metric == 0.0));
        let t = orbit_shadow_experiment(&canon, 0.01, 1e-30, 50, 8, 0.1).unwrap();
        assert_eq!(t.steps.len(), 51);
        assert!(t.warning.is_none());
        assert!(t.is_non_increasing());
        let first = t.steps[0].metric;
        let last = t.steps.last().unwrap();
        let xf = last.x;
        let fin = orbit_final_gap(&canon, 0.01, 1e-30, 50);
        assert!(fin <= first * xf.powi(8) * (1.0 + xf.powi(3)));
        let pert = normalized_map(&MapSpec::pert(1.0, 0.0, 0.1).unwrap(), 8).unwrap();
        let t = orbit_shadow_experiment(&pert, 0.01, 1e-30, 50, 8, 0.1).unwrap();
        assert!(t.is_non_increasing());
    }

    fn orbit_final_gap(m: &MapSpec, x0: f64, y0: f64, steps: usize) -> f64 {
        let mut pr = ShadowPair::with_offset(Point::new(x0, 0.0), Point::new(0.0, y0));
        for _ in 0..steps {
            pr = push_pair(m, &pr);
        }
        pr.offset.norm_inf()
    }

    #[test]
    fn orbit_escape_truncates() {
        let canon = MapSpec::canon(1.0, 0.0).unwrap();
        let t = orbit_shadow_experiment(&canon, 0.04, 1e-20, 100, 8, 0.05).unwrap();
        assert!(t.warning.is_some());
        assert!(t.steps.len() < 101);
    }

    #[test]
    fn survey_on_canonical_map() {
        let m = MapSpec::canon(1.0, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = random_pair_survey(&m, 8, 0.05, 500, &mut rng).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.worst_ratio <= 1.0);
    }

    #[test]
    fn raw_perturbed_map_can_expand() {
        // ∂Y/∂x = 3cx² is not small against the x⁻³ weight in raw coordinates
        let raw = MapSpec::pert(1.0, 0.0, 0.1).unwrap();
        let p = ShadowPair::with_offset(Point::new(0.01, 0.0), Point::new(0.5 * 1e-16, 0.0));
        let hyp = ShadowHypotheses { n: 8, delta: Some(0.05) };
        assert!(!shadow_step_check(&raw, &p, &hyp).unwrap().ok);
        let norm = normalized_map(&raw, 8).unwrap();
        assert!(shadow_step_check(&norm, &p, &hyp).unwrap().ok);
    }
}
