//! End-to-end runs across modules through the public API.

use invcurve::compare::compare_curve_and_phi;
use invcurve::graphtransform::{invariance_residual, solve_manifold, Curve, SolverConfig};
use invcurve::mapdef::{parse_map_spec, MapSpec};
use invcurve::parameterization::{graph_invariance_check, parameterize, repulsion_check, ManifoldGraph};

const MIX: &str = "\
X 1 0 1
X 2 0 1
X 1 1 0.5
X 3 0 0.3
X 2 1 -0.2
Y 0 1 -1
Y 1 1 2
Y 3 0 0.4
Y 4 0 -0.7
Y 1 2 0.25
";

#[test]
fn spec_text_round_trip_feeds_both_solvers() {
    let m = parse_map_spec(MIX).unwrap();
    assert_eq!(m.lambda(), 2.0);
    assert_eq!(m.mu(), 0.5);
    let again = parse_map_spec(&m.to_text()).unwrap();
    assert_eq!(again.x_terms(), m.x_terms());
    assert_eq!(again.y_terms(), m.y_terms());

    let cfg = SolverConfig::default();
    let sol = solve_manifold(&again, &cfg).unwrap();
    let conj = parameterize(&again, 10).unwrap();
    // exact rational oracle, x³ through x⁹
    let oracle = [0.2, -0.45, 0.06, 1.22, -1.0775, -6.83575, 14.5660375];
    for (k, a) in oracle.iter().enumerate() {
        assert!((conj.phi.coeff(k + 3) - a).abs() < 1e-9);
    }
    let cmp = compare_curve_and_phi(&sol.curve, &conj.phi, 5e-5, 0.025, cfg.tol_converge).unwrap();
    assert!(cmp.agrees(), "excess {}", cmp.max_excess);
    assert!(graph_invariance_check(&again, &conj.phi, 8).unwrap().max_diff <= 1e-8);
}

#[test]
fn curve_csv_round_trip_keeps_invariance() {
    let m = MapSpec::pert(1.0, 0.0, 0.4).unwrap();
    let sol = solve_manifold(&m, &SolverConfig::default()).unwrap();
    let text = sol.curve.to_csv();
    let back = Curve::from_csv(&text).unwrap();
    assert_eq!(back.xs(), sol.curve.xs());
    assert_eq!(back.fs(), sol.curve.fs());
    let r = invariance_residual(&m, &back, Some(0.025));
    assert!(r.max_residual <= 1e-8, "{}", r.max_residual);
}

#[test]
fn repulsion_from_either_graph() {
    let m = MapSpec::pert(1.0, 0.0, 0.1).unwrap();
    let sol = solve_manifold(&m, &SolverConfig::default()).unwrap();
    let phi = parameterize(&m, 10).unwrap().phi;
    let a = repulsion_check(&m, &ManifoldGraph::Curve(sol.curve), 0.02, 1e-9, 10).unwrap();
    let b = repulsion_check(&m, &ManifoldGraph::Series(phi), 0.02, 1e-9, 10).unwrap();
    assert!(a.deviation_non_decreasing() && b.deviation_non_decreasing());
    for (p, q) in a.steps.iter().zip(&b.steps) {
        assert!((p.deviation - q.deviation).abs() <= 1e-6 * q.deviation.abs());
    }
}
