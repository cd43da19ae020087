use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use invcurve::compare::{compare_methods, ComparisonReport};
use invcurve::graphtransform::{
    invariance_residual, solve_manifold, tangency_fit, Curve, ManifoldSolution, SolverConfig,
};
use invcurve::mapdef::{parse_map_spec, MapSpec};
use invcurve::normalform::normalize_to_order;
use invcurve::parameterization::{parameterize, repulsion_check, ManifoldGraph};
use invcurve::poly::{PlanarMap, Point};
use invcurve::series::{Series2, DEFAULT_ORDER};
use invcurve::shadowing::{
    normalized_map, orbit_shadow_experiment, random_pair_survey, shadow_step_check, ShadowHypotheses,
    ShadowPair,
};

/// Where a map comes from: `builtin:NAME(key=val,...)` or a map-spec file.
#[derive(Clone, Debug)]
pub enum MapSource {
    Builtin(Box<MapSpec>),
    File(PathBuf),
}

impl FromStr for MapSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let Some(rest) = s.strip_prefix("builtin:") else {
            return Ok(MapSource::File(PathBuf::from(s)));
        };
        let (name, args) = match rest.split_once('(') {
            Some((n, a)) => (
                n.trim(),
                a.strip_suffix(')').ok_or_else(|| format!("missing ')' in {s:?}"))?,
            ),
            None => (rest.trim(), ""),
        };
        let (mut lambda, mut mu, mut c) = (1.0, 0.0, 0.1);
        for kv in args.split(',').map(str::trim).filter(|a| !a.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got {kv:?}"))?;
            let v: f64 = v.trim().parse().map_err(|e| format!("{k}: {e}"))?;
            match (name, k.trim()) {
                (_, "lambda") => lambda = v,
                (_, "mu") => mu = v,
                ("PERT", "c") => c = v,
                (_, k) => return Err(format!("unknown parameter {k:?} for builtin {name}")),
            }
        }
        let spec = match name {
            "CANON" => MapSpec::canon(lambda, mu),
            "PERT" => MapSpec::pert(lambda, mu, c),
            _ => return Err(format!("unknown builtin map {name:?} (expected CANON or PERT)")),
        }
        .map_err(|e| e.to_string())?;
        Ok(MapSource::Builtin(Box::new(spec)))
    }
}

impl MapSource {
    fn load(&self) -> Result<MapSpec> {
        match self {
            MapSource::Builtin(m) => Ok((**m).clone()),
            MapSource::File(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading map spec {}", p.display()))?;
                Ok(parse_map_spec(&text)?)
            }
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "invcurve", version, about = "Invariant curves of parabolic planar maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct MapArgs {
    /// Map-spec file, or builtin:CANON(lambda=..,mu=..) / builtin:PERT(lambda=..,mu=..,c=..)
    #[arg(long)]
    pub map: MapSource,
    /// Output file for the primary artifact (standard output when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    /// Normalization order N (2 disables normalization)
    #[arg(long, default_value_t = 8)]
    pub order: usize,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    /// Initial seed length (default δ/50)
    #[arg(long)]
    pub rho0: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub rho_factor: f64,
    #[arg(long, default_value_t = 512)]
    pub grid: usize,
    #[arg(long, default_value_t = 2)]
    pub mmax: usize,
    /// Convergence tolerance of the ρ-refinement
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    pub series_order: usize,
    #[arg(long, default_value_t = 6)]
    pub max_refinements: usize,
}

impl SolverArgs {
    pub fn config(&self) -> SolverConfig {
        SolverConfig {
            n: self.order,
            delta: self.delta,
            rho0: self.rho0.unwrap_or(self.delta / 50.0),
            rho_factor: self.rho_factor,
            grid_size: self.grid,
            m_max: self.mmax,
            tol_converge: self.tol,
            series_order: self.series_order.max(self.order + 2),
            max_refinements: self.max_refinements,
            ..SolverConfig::default()
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Remove pure xᵏ terms (3 ≤ k ≤ N) from the Y component
    Normalize {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value_t = 8)]
        order: usize,
        #[arg(long, default_value_t = DEFAULT_ORDER)]
        series_order: usize,
    },
    /// Invariant curve by the graph transform; CSV `x,F`
    ManifoldGt {
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Invariant curve by the conjugacy method; CSV `k,phi_k`
    ManifoldParam {
        #[command(flatten)]
        map: MapArgs,
        /// Conjugacy order
        #[arg(long, default_value_t = 10)]
        order: usize,
    },
    /// Invariance residual of a computed (or supplied) curve on [0, δ/2]
    VerifyInvariance {
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Curve CSV (`x,F`) to check instead of solving
        #[arg(long)]
        curve: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-8)]
        tol_invariance: f64,
    },
    /// One-step shadowing check, orbit experiment or random survey
    VerifyShadow {
        #[command(flatten)]
        map: MapArgs,
        /// Normalization order N (also the flatness exponent)
        #[arg(long, default_value_t = 8)]
        order: usize,
        /// Enforce 0 < x ≤ δ when given
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        x: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        y: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        xhat: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        yhat: Option<f64>,
        /// Also iterate the pair for this many steps; CSV `step,x,xhat,metric`
        #[arg(long)]
        steps: Option<usize>,
        /// Test this many random admissible pairs instead of one
        #[arg(long)]
        random: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use the map as given instead of its normal form
        #[arg(long)]
        raw: bool,
    },
    /// Iterate Φ⁻² off the manifold; CSV `step,x,y,deviation`
    Repulsion {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value_t = 0.02)]
        x0: f64,
        #[arg(long, default_value_t = 1e-9, allow_negative_numbers = true)]
        offset: f64,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        /// Conjugacy order of the reference graph
        #[arg(long, default_value_t = 10)]
        order: usize,
        /// Curve CSV (`x,F`) to use as the reference graph
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Run both solvers and report their disagreement
    Compare {
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Conjugacy order
        #[arg(long, default_value_t = 10)]
        param_order: usize,
    },
}

/// `key = value` lines followed by free text.
#[derive(Default)]
struct Report {
    body: String,
    notes: Vec<String>,
}

impl Report {
    fn kv(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        let _ = writeln!(self.body, "{key} = {value}");
        self
    }

    fn num(&mut self, key: &str, v: f64) -> &mut Self {
        self.kv(key, format!("{v:.16e}"))
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    fn render(&self) -> String {
        let mut s = self.body.clone();
        if !self.notes.is_empty() {
            s.push('\n');
            for n in &self.notes {
                s.push_str(n);
                s.push('\n');
            }
        }
        s
    }
}

/// Writes the CSV to `out` (or stdout) and the report to stdout when that
/// is free, otherwise to stderr.
fn emit(out: Option<&Path>, report: &Report, csv: Option<String>) -> Result<()> {
    let text = report.render();
    match (csv, out) {
        (Some(csv), Some(p)) => {
            write_file(p, &csv)?;
            print!("{text}");
        }
        (Some(csv), None) => {
            eprint!("{text}");
            print!("{csv}");
        }
        (None, Some(p)) => write_file(p, &text)?,
        (None, None) => print!("{text}"),
    }
    Ok(())
}

fn write_file(p: &Path, s: &str) -> Result<()> {
    std::fs::write(p, s).with_context(|| format!("writing {}", p.display()))
}

fn read_curve(p: &Path) -> Result<Curve> {
    let text = std::fs::read_to_string(p).with_context(|| format!("reading curve {}", p.display()))?;
    Ok(Curve::from_csv(&text)?)
}

fn format_terms(r: &mut Report, label: &str, s: &Series2) {
    for (&(i, j), &c) in s.terms() {
        r.note(format!("{label} {i} {j} {c:.16e}"));
    }
}

fn solution_report(r: &mut Report, sol: &ManifoldSolution) {
    let last = sol.last_run();
    r.num("rho_final", last.rho)
        .kv("rho_runs", sol.runs.len())
        .kv("nu_bar", last.nu_bar)
        .num("x_max", sol.curve.x_max())
        .num("min_dX_dx", last.min_dxdx)
        .kv("growth_violations", last.growth_violations.len());
    let gaps: Vec<String> = sol.runs.iter().filter_map(|g| g.gap).map(|g| format!("{g:.3e}")).collect();
    r.kv("gaps", gaps.join(" "));
    for (m, k) in sol.certificate.measured_k.iter().enumerate() {
        r.num(&format!("K_{m}"), *k);
    }
    for (k, g) in sol.normal_form.gammas.iter().enumerate() {
        r.num(&format!("gamma_{}", k + 3), *g);
    }
}

fn comparison_report(r: &mut Report, c: &ComparisonReport) {
    r.num("window_lo", c.lo)
        .num("window_hi", c.hi)
        .kv("samples", c.samples)
        .num("max_disagreement", c.sup_disagreement)
        .num("max_excess", c.max_excess)
        .num("a3_graph_transform", c.a3_graph_transform)
        .num("a3_parameterization", c.a3_parameterization)
        .kv("agree", c.agrees());
    for d in &c.decades {
        r.note(format!(
            "decade [{:.3e}, {:.3e}]: sup |F - phi| = {:.3e}, sup |F - phi|/x^3 = {:.3e}",
            d.lo, d.hi, d.sup_abs, d.sup_over_x3
        ));
    }
    for w in &c.warnings {
        r.note(format!("warning: {w}"));
    }
}

/// Executes one command; `Ok(false)` means a verification failed.
pub fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Normalize {
            map,
            order,
            series_order,
        } => {
            let m = map.map.load()?;
            let so = series_order.max(order + 2);
            let nf = normalize_to_order(&m.to_series(so)?, order)?;
            let mut r = Report::default();
            r.num("lambda", m.lambda()).num("mu", m.mu()).kv("order", order).kv("series_order", so);
            for (k, g) in nf.gammas.iter().enumerate() {
                r.num(&format!("gamma_{}", k + 3), *g);
            }
            format_terms(&mut r, "X", nf.normalized.fx());
            format_terms(&mut r, "Y", nf.normalized.fy());
            emit(map.out.as_deref(), &r, None)?;
            Ok(true)
        }
        Command::ManifoldGt { map, solver } => {
            let m = map.map.load()?;
            let sol = solve_manifold(&m, &solver.config())?;
            let mut r = Report::default();
            solution_report(&mut r, &sol);
            if let Ok(fit) = tangency_fit(&sol.curve) {
                r.num("a3", fit.a3);
            }
            emit(map.out.as_deref(), &r, Some(sol.curve.to_csv()))?;
            Ok(true)
        }
        Command::ManifoldParam { map, order } => {
            let m = map.map.load()?;
            let res = parameterize(&m, order)?;
            let mut r = Report::default();
            r.kv("order", order)
                .num("r_quadratic", res.r_quadratic)
                .num("d", res.d)
                .kv("residual_order", res.residual_order)
                .num("residual_max", res.residual_max);
            for k in 0..=order {
                r.num(&format!("K1_{k}"), res.k1.coeff(k));
            }
            for k in 0..=order {
                r.num(&format!("K2_{k}"), res.k2.coeff(k));
            }
            let mut csv = String::from("k,phi_k\n");
            for k in 0..=order {
                let _ = writeln!(csv, "{k},{:.16e}", res.phi.coeff(k));
            }
            emit(map.out.as_deref(), &r, Some(csv))?;
            Ok(true)
        }
        Command::VerifyInvariance {
            map,
            solver,
            curve,
            tol_invariance,
        } => {
            let m = map.map.load()?;
            let cfg = solver.config();
            let c = match curve {
                Some(p) => read_curve(&p)?,
                None => solve_manifold(&m, &cfg)?.curve,
            };
            let rep = invariance_residual(&m, &c, Some(cfg.delta / 2.0));
            let ok = rep.max_residual <= tol_invariance && rep.warnings.is_empty();
            let mut r = Report::default();
            r.num("max_residual", rep.max_residual)
                .num("tolerance", tol_invariance)
                .kv("samples", rep.samples.len())
                .kv("result", if ok { "PASS" } else { "FAIL" });
            for w in rep.warnings {
                r.note(format!("warning: {w}"));
            }
            emit(map.out.as_deref(), &r, None)?;
            Ok(ok)
        }
        Command::VerifyShadow {
            map,
            order,
            delta,
            x,
            y,
            xhat,
            yhat,
            steps,
            random,
            seed,
            raw,
        } => {
            let m = map.map.load()?;
            let nm;
            let pm: &dyn PlanarMap = if raw {
                &m
            } else {
                nm = normalized_map(&m, order)?;
                &nm
            };
            let mut r = Report::default();
            r.kv("coordinates", if raw { "raw" } else { "normalized" }).kv("order", order);
            if let Some(count) = random {
                let d = delta.unwrap_or(0.05);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let s = random_pair_survey(pm, order, d, count, &mut rng)?;
                r.kv("tested", s.tested)
                    .kv("violations", s.violations)
                    .num("worst_ratio", s.worst_ratio)
                    .kv("result", if s.violations == 0 { "PASS" } else { "FAIL" });
                emit(map.out.as_deref(), &r, None)?;
                return Ok(s.violations == 0);
            }
            let (Some(x), Some(xhat)) = (x, xhat) else {
                bail!("verify-shadow needs --x and --xhat (or --random)");
            };
            let (y, yhat) = (y.unwrap_or(0.0), yhat.unwrap_or(0.0));
            let pair = ShadowPair::from_points(Point::new(x, y), Point::new(xhat, yhat));
            let chk = shadow_step_check(pm, &pair, &ShadowHypotheses { n: order, delta })?;
            r.num("before", chk.before)
                .num("after", chk.after)
                .kv("result", if chk.ok { "PASS" } else { "FAIL" });
            let mut ok = chk.ok;
            let csv = match steps {
                Some(n) => {
                    if y != 0.0 || xhat != x {
                        bail!("--steps iterates (x, 0) against (x, yhat); it needs --y 0 and --xhat equal to --x");
                    }
                    let t = orbit_shadow_experiment(pm, x, yhat, n, order, delta.unwrap_or(f64::INFINITY))?;
                    let mono = t.is_non_increasing();
                    r.kv("orbit_steps", t.steps.len() - 1).kv("orbit_non_increasing", mono);
                    if let Some(w) = &t.warning {
                        r.note(format!("warning: {w}"));
                    }
                    ok &= mono;
                    Some(t.to_csv())
                }
                None => None,
            };
            emit(map.out.as_deref(), &r, csv)?;
            Ok(ok)
        }
        Command::Repulsion {
            map,
            x0,
            offset,
            steps,
            order,
            curve,
        } => {
            let m = map.map.load()?;
            let graph = match curve {
                Some(p) => ManifoldGraph::Curve(read_curve(&p)?),
                None => ManifoldGraph::Series(parameterize(&m, order)?.phi),
            };
            let t = repulsion_check(&m, &graph, x0, offset, steps)?;
            let mono = t.deviation_non_decreasing();
            let excess = t.max_step_excess();
            let ok = mono && excess < 1e-12 && t.warning.is_none();
            let mut r = Report::default();
            r.kv("steps", t.steps.len() - 1)
                .num("expected_ratio", 1.0 + 2.0 * m.lambda() * x0)
                .kv("first_ratio", t.first_ratio().map_or("n/a".into(), |v| format!("{v:.16e}")))
                .kv("deviation_non_decreasing", mono)
                .num("max_step_excess", excess)
                .kv("result", if ok { "PASS" } else { "FAIL" });
            if let Some(w) = &t.warning {
                r.note(format!("warning: {w}"));
            }
            emit(map.out.as_deref(), &r, Some(t.to_csv()))?;
            Ok(ok)
        }
        Command::Compare {
            map,
            solver,
            param_order,
        } => {
            let m = map.map.load()?;
            let c = compare_methods(&m, &solver.config(), param_order)?;
            let mut r = Report::default();
            comparison_report(&mut r, &c);
            emit(map.out.as_deref(), &r, None)?;
            Ok(c.agrees())
        }
    }
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
