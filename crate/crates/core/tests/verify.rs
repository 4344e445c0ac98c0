use std::sync::Arc;

use hyperflow_core::flows::{run, FlowSpec};
use hyperflow_core::grid::SphereGrid;
use hyperflow_core::hypersurface::{make_shape, ShapeSpec};
use hyperflow_core::verify::{
    audit_series, check_corpus, check_thm13, check_thm14, check_thm15, exploratory_probe, monotone_claims,
    monotonicity_audit, run_checks, standard_corpus, CheckName, Direction, Functional, InequalityReport, Snapshot,
    Tolerances, Verdict,
};

fn snap(grid: Arc<SphereGrid>, shape: ShapeSpec) -> Snapshot {
    Snapshot::new("s", make_shape(grid, &shape).unwrap()).unwrap()
}

#[test]
fn centered_spheres_give_equality_everywhere() {
    let tol = Tolerances::default();
    let grids = [
        Arc::new(SphereGrid::full2d(32, 32).unwrap()),
        Arc::new(SphereGrid::axisym(3, 64).unwrap()),
        Arc::new(SphereGrid::axisym(5, 64).unwrap()),
    ];
    for g in grids {
        for r0 in [0.5, 1.0, 2.0] {
            let s = snap(g.clone(), ShapeSpec::CenteredSphere { r0 });
            let h2 = s.h().powi(2);
            for r in run_checks(&s, &CheckName::ALL, &tol).unwrap() {
                if r.name == CheckName::NewtonMaclaurin {
                    continue;
                }
                assert_eq!(r.verdict, Verdict::Equality, "{}", r.summary_line());
                assert!(r.relative_slack.abs() <= 10.0 * h2);
                if let Some(a) = r.rhs_agreement {
                    assert!(a <= 1e-10);
                }
            }
        }
    }
}

#[test]
fn non_centered_static_convex_shapes_have_positive_slack() {
    let tol = Tolerances::default();
    let g = Arc::new(SphereGrid::full2d(64, 64).unwrap());
    let off = snap(g.clone(), ShapeSpec::OffcenterSphere { rho: 1.0, d: 0.3 });
    assert!(off.static_convex(&tol));
    for k in 1..=3 {
        let r = check_thm13(&off, k, &tol).unwrap();
        assert!(r.slack > 0.0 && r.verdict != Verdict::Fail, "{}", r.summary_line());
        assert!(r.rhs_agreement.unwrap() <= 1e-10);
    }
    assert!(check_thm14(&off, &tol).unwrap().slack > 0.0);
    assert!(check_thm15(&off, 1, 1, &tol).unwrap().slack > 0.0);

    let pert = snap(g, ShapeSpec::PerturbedSphere { r0: 1.0, eps: 0.05, m: 2 });
    assert!(pert.static_convex(&tol));
    assert!(check_thm13(&pert, 2, &tol).unwrap().slack > 0.0);
    assert!(check_thm15(&pert, 2, 0, &tol).unwrap().slack > 0.0);
}

#[test]
fn volume_inequality_needs_only_star_shapedness() {
    let tol = Tolerances::default();
    let s = snap(Arc::new(SphereGrid::full2d(64, 64).unwrap()), ShapeSpec::PerturbedSphere { r0: 1.0, eps: 0.3, m: 3 });
    assert!(!s.static_convex(&tol));
    let r = check_thm14(&s, &tol).unwrap();
    assert!(r.hypothesis_ok && r.slack > 0.0 && r.verdict == Verdict::Pass);
    // The convex-only checks withhold their verdict.
    for r in run_checks(&s, &[CheckName::Thm13, CheckName::Thm15], &tol).unwrap() {
        assert_eq!(r.verdict, Verdict::Informational);
        assert!(!r.hypothesis_ok);
    }
}

#[test]
fn index_ranges_are_checked() {
    let tol = Tolerances::default();
    let s = snap(Arc::new(SphereGrid::axisym(2, 16).unwrap()), ShapeSpec::CenteredSphere { r0: 1.0 });
    assert!(check_thm13(&s, 0, &tol).is_err());
    assert!(check_thm13(&s, 4, &tol).is_err());
    assert!(check_thm15(&s, 1, 2, &tol).is_err());
    assert!(check_thm15(&s, 3, 0, &tol).is_err());
}

#[test]
fn corpus_has_no_failures() {
    let g = Arc::new(SphereGrid::full2d(64, 64).unwrap());
    let reps = check_corpus(g, &standard_corpus(), &CheckName::ALL, &Tolerances::default()).unwrap();
    assert!(reps.len() > 100);
    for r in &reps {
        assert_ne!(r.verdict, Verdict::Fail, "{}", r.summary_line());
    }
}

#[test]
fn report_rows_match_header() {
    let s = snap(Arc::new(SphereGrid::axisym(2, 16).unwrap()), ShapeSpec::CenteredSphere { r0: 1.0 });
    for r in run_checks(&s, &CheckName::ALL, &Tolerances::default()).unwrap() {
        assert_eq!(r.csv_row().len(), InequalityReport::csv_header().len());
    }
}

#[test]
fn stationary_history_is_constant() {
    let g = Arc::new(SphereGrid::axisym(2, 32).unwrap());
    let graph = make_shape(g, &ShapeSpec::CenteredSphere { r0: 1.0 }).unwrap();
    let mut spec = FlowSpec::inverse_quotient_type(2, 2, 0.05).unwrap();
    spec.convergence_threshold = 0.0;
    let res = run(graph, &spec).unwrap();
    let h = 0.1;
    for k in 0..=3 {
        assert!(audit_series(&res.state.monitors, Functional::Weighted(k), Direction::Constant, h, 1.0).holds);
    }
    for k in 0..=2 {
        assert!(audit_series(&res.state.monitors, Functional::Quermass(k), Direction::Constant, h, 1.0).holds);
    }
    assert!(monotonicity_audit(&res.state.monitors, &spec, h, 1.0).all_hold());
}

#[test]
fn claims_per_family() {
    let c = monotone_claims(&FlowSpec::mean_curvature_type(3, 1.0).unwrap());
    assert!(c.contains(&(Functional::Weighted(0), Direction::Constant)));
    assert!(c.contains(&(Functional::Weighted(2), Direction::NonIncreasing)));
    assert!(c.contains(&(Functional::Quermass(0), Direction::NonDecreasing)));
    let c = monotone_claims(&FlowSpec::inverse_quotient_type(3, 2, 1.0).unwrap());
    assert!(c.contains(&(Functional::Weighted(0), Direction::NonDecreasing)));
    assert!(c.contains(&(Functional::Weighted(3), Direction::NonIncreasing)));
    assert!(c.contains(&(Functional::Quermass(1), Direction::NonDecreasing)));
    assert!(c.contains(&(Functional::Quermass(2), Direction::NonDecreasing)));
}

#[test]
fn decreasing_series_breaks_a_non_decreasing_claim() {
    let g = Arc::new(SphereGrid::axisym(2, 64).unwrap());
    let graph = make_shape(g, &ShapeSpec::PerturbedSphere { r0: 1.0, eps: 0.05, m: 2 }).unwrap();
    let res = run(graph, &FlowSpec::mean_curvature_type(2, 0.5).unwrap()).unwrap();
    let m = &res.state.monitors;
    // Wl_1 strictly decreases along this flow.
    assert!(audit_series(m, Functional::Weighted(1), Direction::NonIncreasing, 0.05, 1.0).holds);
    assert!(!audit_series(m, Functional::Weighted(1), Direction::NonDecreasing, 0.05, 1.0).holds);
}

#[test]
fn probe_reports_without_asserting() {
    let tol = Tolerances::default();
    let s = snap(Arc::new(SphereGrid::axisym(2, 128).unwrap()), ShapeSpec::PerturbedSphere { r0: 1.0, eps: 0.12, m: 3 });
    let p = exploratory_probe(&s, &tol);
    assert!(!p.is_empty());
    assert!(p.iter().all(|r| r.slack.is_finite()));
    let c = snap(Arc::new(SphereGrid::axisym(2, 32).unwrap()), ShapeSpec::CenteredSphere { r0: 1.0 });
    assert!(exploratory_probe(&c, &tol).iter().all(|r| !r.violated));
}
