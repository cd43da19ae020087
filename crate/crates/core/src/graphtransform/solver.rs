use super::{bound_certificate, graded_grid, BoundCertificate, Curve, GraphTransformError};
use crate::interp::resample;
use crate::mapdef::MapSpec;
use crate::normalform::{normalize_to_order, pullback_curve, NormalFormResult};
use crate::poly::{PlanarMap, Point};
use crate::series::DEFAULT_ORDER;

/// Tunables of [`solve_manifold`].
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Normalization order `N`; 2 disables normalization.
    pub n: usize,
    pub delta: f64,
    pub rho0: f64,
    pub rho_factor: f64,
    pub grid_size: usize,
    /// Highest derivative order in the bound certificates.
    pub m_max: usize,
    /// Sup-norm gap on `[0, δ/2]` at which ρ-refinement stops.
    pub tol_converge: f64,
    pub tol_invariance: f64,
    /// Truncation order of the series map the curve is pushed under.
    pub series_order: usize,
    /// Number of ρ reductions allowed after the first run.
    pub max_refinements: usize,
    /// Final curves must satisfy `|F(x)| ≤ bound_cap · x³`.
    pub bound_cap: f64,
    /// Any measured `K_m` above this during a run counts as blow-up.
    pub k_cap: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let delta = 0.05;
        SolverConfig {
            n: 8,
            delta,
            rho0: delta / 50.0,
            rho_factor: 0.5,
            grid_size: 512,
            m_max: 2,
            tol_converge: 1e-12,
            tol_invariance: 1e-8,
            series_order: DEFAULT_ORDER,
            max_refinements: 6,
            bound_cap: 1e3,
            k_cap: 1e8,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), GraphTransformError> {
        let bad = |m: String| Err(GraphTransformError::InvalidConfig(m));
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return bad(format!("delta must be positive, got {}", self.delta));
        }
        if !(self.rho0 > 0.0 && self.rho0 < self.delta) {
            return bad(format!("rho0 must lie in (0, delta), got {}", self.rho0));
        }
        if !(self.rho_factor > 0.0 && self.rho_factor < 1.0) {
            return bad(format!("rho_factor must lie in (0, 1), got {}", self.rho_factor));
        }
        if self.grid_size < 64 {
            return bad(format!("grid_size must be at least 64, got {}", self.grid_size));
        }
        if self.m_max > 3 {
            return bad(format!("m_max must be at most 3, got {}", self.m_max));
        }
        if self.n < 2 {
            return bad(format!("N must be at least 2, got {}", self.n));
        }
        if self.series_order < self.n + 2 {
            return bad(format!(
                "series order {} must be at least N + 2 = {}",
                self.series_order,
                self.n + 2
            ));
        }
        for (name, v) in [
            ("tol_converge", self.tol_converge),
            ("tol_invariance", self.tol_invariance),
            ("bound_cap", self.bound_cap),
            ("k_cap", self.k_cap),
        ] {
            if !(v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        let smallest = self.rho0 * self.rho_factor.powi(self.max_refinements as i32);
        if smallest <= self.delta / super::GRID_SPAN {
            return bad(format!(
                "smallest rho {smallest:e} does not exceed the smallest grid node {:e}",
                self.delta / super::GRID_SPAN
            ));
        }
        Ok(())
    }

    /// Hard cap on pushes for one seed: `⌈2/ρ⌉ · ⌈1 + ln(δ/ρ)⌉`.
    pub fn iteration_cap(&self, rho: f64) -> usize {
        ((2.0 / rho).ceil() * (1.0 + (self.delta / rho).ln()).ceil()) as usize
    }
}

/// Pushes the nodes forward, checks the abscissae stay increasing and
/// re-grids. Returns the new curve and the smallest `dX/dx`.
fn push_raw<M: PlanarMap + ?Sized>(
    map: &M,
    c: &Curve,
    grid_size: usize,
) -> Result<(Curve, f64), GraphTransformError> {
    let n = c.len();
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    let mut ms = Vec::with_capacity(n);
    let mut min_dxdx = f64::INFINITY;
    for i in 0..n {
        let (x, f, df) = (c.xs()[i], c.fs()[i], c.slopes()[i]);
        let (img, j) = map.eval_with_jacobian(Point::new(x, f));
        let dxdx = j[0][0] + j[0][1] * df;
        let dydx = j[1][0] + j[1][1] * df;
        if !(dxdx > 0.0) || !img.is_finite() {
            return Err(GraphTransformError::GuardFailed {
                x,
                detail: format!("dX/dx = {dxdx:e}"),
            });
        }
        if i > 0 && !(img.x > xs[i - 1]) {
            return Err(GraphTransformError::GuardFailed {
                x,
                detail: format!("image abscissa {:e} does not exceed {:e}", img.x, xs[i - 1]),
            });
        }
        min_dxdx = min_dxdx.min(dxdx);
        xs.push(img.x);
        ys.push(img.y);
        ms.push(dydx / dxdx);
    }
    let grid = graded_grid(xs[n - 1], grid_size);
    let (fs, slopes) = resample(&xs, &ys, &ms, &grid)?;
    Ok((Curve::new(grid, fs, Some(slopes))?, min_dxdx))
}

/// One graph-transform step: the image of `c` under `map`, re-graphed onto
/// the graded grid, with derivative bounds measured against `x^(N−m)`.
pub fn push_curve<M: PlanarMap + ?Sized>(
    map: &M,
    c: &Curve,
    grid_size: usize,
    n: usize,
    m_max: usize,
) -> Result<(Curve, BoundCertificate), GraphTransformError> {
    let (next, min_dxdx) = push_raw(map, c, grid_size)?;
    let mut cert = bound_certificate(&next, n, m_max)?;
    cert.min_dxdx = Some(min_dxdx);
    Ok((next, cert))
}

/// Record of one seed run at fixed ρ.
#[derive(Clone, Debug, PartialEq)]
pub struct RhoRun {
    pub rho: f64,
    /// Number of pushes until `x_max > δ`.
    pub nu_bar: usize,
    /// `x_max` after each push, starting with ρ.
    pub xmax_trace: Vec<f64>,
    /// Steps `ν` where `x_maxᵛ < x_maxᵛ⁻¹ + ½(x_maxᵛ⁻¹)²` with `x_maxᵛ⁻¹ ≤ δ`.
    pub growth_violations: Vec<usize>,
    pub min_dxdx: f64,
    /// Largest `|X_max − (x_max + x_max²)| / x_max³` over the run.
    pub xmax_drift: f64,
    /// Bounds of the final curve (normalized coordinates).
    pub certificate: BoundCertificate,
    /// Sup-norm gap on `[0, δ/2]` to the previous run's final curve.
    pub gap: Option<f64>,
    /// Final curve in normalized coordinates.
    pub curve: Curve,
}

/// Converged result of [`solve_manifold`].
#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldSolution {
    /// Graph in the original coordinates.
    pub curve: Curve,
    /// Bounds of `curve` against `x³`.
    pub certificate: BoundCertificate,
    pub normal_form: NormalFormResult,
    pub runs: Vec<RhoRun>,
}

impl ManifoldSolution {
    pub fn last_run(&self) -> &RhoRun {
        self.runs.last().expect("a solution has at least one run")
    }

    /// Graph in normalized coordinates.
    pub fn normalized_curve(&self) -> &Curve {
        &self.last_run().curve
    }
}

fn run_seed<M: PlanarMap + ?Sized>(
    map: &M,
    rho: f64,
    cfg: &SolverConfig,
) -> Result<RhoRun, GraphTransformError> {
    const CHECK_EVERY: usize = 64;
    let cap = cfg.iteration_cap(rho);
    let mut c = Curve::zero(rho, cfg.grid_size);
    let mut trace = vec![rho];
    let mut violations = Vec::new();
    let mut min_dxdx = f64::INFINITY;
    let mut drift: f64 = 0.0;
    let mut nu = 0;
    while c.x_max() <= cfg.delta {
        if nu >= cap {
            return Err(GraphTransformError::IterationCap {
                rho,
                cap,
                x_max: c.x_max(),
            });
        }
        let (next, mdx) = push_raw(map, &c, cfg.grid_size)?;
        nu += 1;
        let (prev, new) = (c.x_max(), next.x_max());
        if prev <= cfg.delta && new < prev + 0.5 * prev * prev {
            violations.push(nu);
        }
        drift = drift.max((new - prev - prev * prev).abs() / (prev * prev * prev));
        min_dxdx = min_dxdx.min(mdx);
        trace.push(new);
        if nu % CHECK_EVERY == 0 {
            check_blow_up(&next, cfg, nu)?;
        }
        c = next;
    }
    check_blow_up(&c, cfg, nu)?;
    let mut certificate = bound_certificate(&c, cfg.n, cfg.m_max)?;
    certificate.min_dxdx = Some(min_dxdx);
    Ok(RhoRun {
        rho,
        nu_bar: nu,
        xmax_trace: trace,
        growth_violations: violations,
        min_dxdx,
        xmax_drift: drift,
        certificate,
        gap: None,
        curve: c,
    })
}

fn check_blow_up(c: &Curve, cfg: &SolverConfig, nu: usize) -> Result<(), GraphTransformError> {
    let cert = bound_certificate(c, cfg.n, cfg.m_max)?;
    for (m, &k) in cert.measured_k.iter().enumerate() {
        if !(k <= cfg.k_cap) {
            return Err(GraphTransformError::BlowUp {
                m,
                k,
                iteration: nu,
            });
        }
    }
    Ok(())
}

fn normalized_poly_map(
    map: &MapSpec,
    cfg: &SolverConfig,
) -> Result<(crate::poly::PolyMap, NormalFormResult), GraphTransformError> {
    let series = map.to_series(cfg.series_order)?;
    let nf = normalize_to_order(&series, cfg.n)?;
    Ok((nf.normalized.to_poly_map(), nf))
}

/// Runs the seeds `ρ₀·factorᵏ` for `k < count` without a stopping rule,
/// recording the gap between successive final curves.
pub fn rho_schedule(
    map: &MapSpec,
    cfg: &SolverConfig,
    count: usize,
) -> Result<Vec<RhoRun>, GraphTransformError> {
    cfg.validate()?;
    let (pm, _) = normalized_poly_map(map, cfg)?;
    let mut runs: Vec<RhoRun> = Vec::with_capacity(count);
    let mut rho = cfg.rho0;
    for _ in 0..count {
        let mut run = run_seed(&pm, rho, cfg)?;
        if let Some(prev) = runs.last() {
            run.gap = Some(run.curve.sup_distance(&prev.curve, cfg.delta / 2.0));
        }
        runs.push(run);
        rho *= cfg.rho_factor;
    }
    Ok(runs)
}

/// Normalizes to order `N`, runs the graph transform from shrinking seeds
/// until two successive final curves agree to `tol_converge` on `[0, δ/2]`,
/// and returns the last curve in the original coordinates.
pub fn solve_manifold(
    map: &MapSpec,
    cfg: &SolverConfig,
) -> Result<ManifoldSolution, GraphTransformError> {
    cfg.validate()?;
    let (pm, nf) = normalized_poly_map(map, cfg)?;
    let mut runs: Vec<RhoRun> = Vec::new();
    let mut rho = cfg.rho0;
    loop {
        let mut run = run_seed(&pm, rho, cfg)?;
        if let Some(prev) = runs.last() {
            run.gap = Some(run.curve.sup_distance(&prev.curve, cfg.delta / 2.0));
        }
        let done = run.gap.is_some_and(|g| g <= cfg.tol_converge);
        runs.push(run);
        if done {
            break;
        }
        if runs.len() > cfg.max_refinements {
            return Err(GraphTransformError::NotConverged {
                history: runs.iter().filter_map(|r| r.gap).collect(),
            });
        }
        rho *= cfg.rho_factor;
    }
    let last = runs.last().expect("loop pushes a run");
    let curve = pullback_curve(&last.curve, &nf.shift);
    curve.check_tangency_cap(cfg.bound_cap)?;
    let certificate = bound_certificate(&curve, 3, cfg.m_max)?;
    Ok(ManifoldSolution {
        curve,
        certificate,
        normal_form: nf,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::PlanarSeriesMap;
    use proptest::prelude::*;

    #[test]
    fn canonical_seed_stays_on_axis() {
        let m = MapSpec::canon(1.0, 0.0).unwrap();
        let rho = 0.01;
        let seed = Curve::zero(rho, 128);
        let (c, cert) = push_curve(&m, &seed, 128, 8, 2).unwrap();
        assert!(c.fs().iter().all(|&f| f == 0.0));
        assert_eq!(c.x_max(), rho + rho * rho);
        assert!(cert.min_dxdx.unwrap() >= 1.0);
    }

    #[test]
    fn perturbed_seed_push_is_cubic() {
        let m = MapSpec::pert(1.0, 0.0, 0.1).unwrap();
        let rho = 0.05;
        let (c, _) = push_curve(&m, &Curve::zero(rho, 512), 512, 3, 2).unwrap();
        let xm = rho + rho * rho;
        let sup = c.fs().iter().fold(0.0f64, |a, f| a.max(f.abs()));
        assert!(sup <= 0.1 * xm.powi(3) * (1.0 + 1e-12));
        for (&x, &f) in c.xs().iter().zip(c.fs()) {
            assert!(f.abs() <= 0.1 * x.powi(3) * (1.0 + 1e-9));
        }
    }

    #[test]
    fn guard_rejects_folding_image() {
        // X = x − 10x² folds over beyond x = 0.05
        let fx = crate::series::Series2::from_terms([((1, 0), 1.0), ((2, 0), -10.0)], 4);
        let fy = crate::series::Series2::from_terms([((0, 1), -1.0)], 4);
        let pm = PlanarSeriesMap::new(fx, fy).unwrap().to_poly_map();
        let r = push_curve(&pm, &Curve::zero(0.1, 64), 64, 3, 2);
        assert!(matches!(r, Err(GraphTransformError::GuardFailed { .. })));
    }

    #[test]
    fn config_validation() {
        let ok = SolverConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            SolverConfig { rho0: 0.06, ..ok.clone() },
            SolverConfig { rho_factor: 1.0, ..ok.clone() },
            SolverConfig { grid_size: 32, ..ok.clone() },
            SolverConfig { m_max: 4, ..ok.clone() },
            SolverConfig { tol_converge: 0.0, ..ok.clone() },
            SolverConfig { series_order: 9, ..ok.clone() },
            SolverConfig { rho0: 1e-7, ..ok.clone() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn canonical_solution_is_zero() {
        let m = MapSpec::canon(1.0, 0.0).unwrap();
        let sol = solve_manifold(&m, &SolverConfig::default()).unwrap();
        assert!(sol.curve.fs().iter().all(|f| f.abs() <= 1e-12));
        assert!(sol.curve.x_max() > 0.05);
        assert!(sol.runs.iter().all(|r| r.growth_violations.is_empty()));
    }

    #[test]
    fn perturbed_solution_matches_oracle_coefficients() {
        let m = MapSpec::pert(1.0, 0.0, 0.1).unwrap();
        let sol = solve_manifold(&m, &SolverConfig::default()).unwrap();
        // series coefficients from exact rational matching of the invariance
        // identity, x³ through x¹⁰
        let a = [0.05, -0.05, 0.0, 0.125, -0.2125, -0.275, 1.94375, -1.14375];
        let f = |x: f64| a.iter().enumerate().map(|(k, c)| c * x.powi(k as i32 + 3)).sum::<f64>();
        for &x in &[1e-4, 1e-3, 0.01, 0.02] {
            let e = (sol.curve.eval(x) - f(x)).abs();
            assert!(e <= 1e-6 * x.powi(3) * 1e-3, "x = {x}: error {e:e}");
        }
        assert!((sol.certificate.measured_k[0] - 0.05).abs() < 1e-3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn pushes_preserve_flatness_bound(
            c3 in -0.1f64..0.1, c4 in -0.1f64..0.1, mu in -1.0f64..1.0,
            amp in -1.0f64..1.0, x0 in 0.002f64..0.05,
        ) {
            let n = 8;
            let mut m = MapSpec::canon(1.0, mu).unwrap().to_series(12).unwrap();
            let fy = m.fy().clone().with_coeff(3, 0, c3).with_coeff(2, 1, c4);
            m = PlanarSeriesMap::new(m.fx().clone(), fy).unwrap();
            let nf = normalize_to_order(&m, n).unwrap();
            let pm = nf.normalized.to_poly_map();
            let seed = Curve::from_fn(x0, 256, |x| amp * x.powi(n as i32), |x| 8.0 * amp * x.powi(7)).unwrap();
            let (c, cert) = push_curve(&pm, &seed, 256, n, 2).unwrap();
            prop_assert!(cert.min_dxdx.unwrap() >= 1.0);
            for (&x, &f) in c.xs().iter().zip(c.fs()) {
                prop_assert!(f.abs() <= x.powi(n as i32));
            }
        }
    }
}
