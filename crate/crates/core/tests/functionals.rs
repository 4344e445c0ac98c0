use std::f64::consts::PI;
use std::sync::Arc;

use hyperflow_core::functionals::{
    ball_profile, ball_profile_derivative, ball_profile_inverse, curvature_integrals, enclosed_volume,
    heintze_karcher_slack, quermassintegrals, sinh_power_integral, weighted_bound_explicit,
    weighted_integrals, FunctionalRecord, ProfileKind,
};
use hyperflow_core::grid::{sphere_area, SphereGrid};
use hyperflow_core::hypersurface::{curvature, make_shape, ShapeSpec};
use hyperflow_core::Error;
use proptest::prelude::*;

fn axisym(n: usize, nt: usize) -> Arc<SphereGrid> {
    Arc::new(SphereGrid::axisym(n, nt).unwrap())
}

/// Composite Simpson rule with many panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let m = 20_000;
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for i in 1..m {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn sphere_areas() {
    assert!((sphere_area(1) - 2.0 * PI).abs() < 1e-14);
    assert!((sphere_area(2) - 4.0 * PI).abs() < 1e-13);
    assert!((sphere_area(3) - 2.0 * PI * PI).abs() < 1e-13);
}

#[test]
fn sinh_power_integral_matches_quadrature() {
    for n in 1..=7 {
        for r in [0.01, 0.2, 0.9, 2.0, 4.0] {
            let q = simpson(|s| s.sinh().powi(n as i32), 0.0, r);
            let v = sinh_power_integral(n, r);
            assert!((v - q).abs() <= 1e-10 * q.max(1e-300), "n={n} r={r}: {v} vs {q}");
        }
    }
}

#[test]
fn unit_ball_in_hyperbolic_three_space() {
    let w0 = PI * 2.0f64.sinh() - 2.0 * PI;
    assert!((w0 - 5.1109).abs() < 1e-4);
    assert!((ball_profile(2, 0, ProfileKind::Quermass, 1.0).unwrap() - w0).abs() < 1e-12);
    let wl0 = 4.0 * PI * 1.0f64.sinh().powi(3);
    assert!((wl0 - 20.396).abs() < 1e-3);
    assert!((ball_profile(2, 0, ProfileKind::Weighted, 1.0).unwrap() - wl0).abs() < 1e-12);

    let g = axisym(2, 64);
    let graph = make_shape(g, &ShapeSpec::CenteredSphere { r0: 1.0 }).unwrap();
    let f = curvature(&graph).unwrap();
    assert!((enclosed_volume(&graph) - w0).abs() < 1e-12 * w0);
    let wi = weighted_integrals(&f, &graph);
    assert!((wi.wl[0] - wl0).abs() < 1e-12 * wl0);
    assert!((wi.volume_form - wl0).abs() < 1e-12 * wl0);
}

#[test]
fn centered_sphere_closed_forms() {
    for n in 2..=5 {
        let g = axisym(n, 48);
        for r0 in [0.4, 1.0, 2.0] {
            let graph = make_shape(g.clone(), &ShapeSpec::CenteredSphere { r0 }).unwrap();
            let f = curvature(&graph).unwrap();
            let om = sphere_area(n);
            let (s, c) = (r0.sinh(), r0.cosh());
            let ek = curvature_integrals(&f);
            for (k, v) in ek.iter().enumerate() {
                let exact = om * s.powi(n as i32) * (c / s).powi(k as i32);
                assert!((v - exact).abs() < 1e-12 * exact, "n={n} k={k}");
            }
            let wi = weighted_integrals(&f, &graph);
            for (k, v) in wi.wl.iter().enumerate() {
                let exact = om * s.powi((n + 1 - k) as i32) * c.powi(k as i32);
                assert!((v - exact).abs() < 1e-12 * exact, "n={n} k={k}");
                assert!((ball_profile(n, k, ProfileKind::Weighted, r0).unwrap() - exact).abs() < 1e-12 * exact);
            }
            let w = quermassintegrals(&f, &graph);
            let area = f.integrate(|_| 1.0);
            assert!((w[1] * (n as f64 + 1.0) - area).abs() < 1e-12 * area);
            for (k, v) in w.iter().enumerate() {
                let exact = ball_profile(n, k, ProfileKind::Quermass, r0).unwrap();
                assert!((v - exact).abs() < 1e-11 * exact.abs().max(1.0), "n={n} k={k}");
            }
            assert!(heintze_karcher_slack(&f).unwrap().abs() < 1e-12 * area);
        }
    }
}

#[test]
fn extreme_weighted_profiles() {
    for n in 1..=6 {
        let om = sphere_area(n);
        for r in [0.3, 1.7] {
            let top = ball_profile(n, n + 1, ProfileKind::Weighted, r).unwrap();
            assert!((top - om * r.cosh().powi(n as i32 + 1)).abs() < 1e-12 * top);
            let bottom = ball_profile(n, 0, ProfileKind::Weighted, r).unwrap();
            assert!((bottom - om * r.sinh().powi(n as i32 + 1)).abs() < 1e-12 * bottom);
            // The top quermassintegral of a ball is the constant ω_n/(n+1).
            let fq = ball_profile(n, n + 1, ProfileKind::Quermass, r).unwrap();
            assert!((fq - om / (n as f64 + 1.0)).abs() < 1e-10 * om);
        }
        assert!(ball_profile_inverse(n, n + 1, ProfileKind::Quermass, 1.0).is_err());
    }
}

#[test]
fn profile_domain_errors() {
    assert!(matches!(ball_profile(2, 0, ProfileKind::Weighted, -1.0), Err(Error::Domain(_))));
    assert!(matches!(ball_profile_inverse(2, 1, ProfileKind::Weighted, -3.0), Err(Error::Domain(_))));
    assert!(matches!(ball_profile_inverse(2, 0, ProfileKind::Quermass, 0.0), Err(Error::Domain(_))));
    assert!(matches!(ball_profile_inverse(2, 0, ProfileKind::Weighted, f64::INFINITY), Err(Error::Domain(_))));
    assert!(ball_profile(2, 4, ProfileKind::Weighted, 1.0).is_err());
}

#[test]
fn explicit_bound_agrees_with_composition() {
    for n in 1..=6 {
        for k in 1..=n + 1 {
            for r in [0.2, 1.0, 2.5] {
                let v = ball_profile(n, 0, ProfileKind::Weighted, r).unwrap();
                let r0 = ball_profile_inverse(n, 0, ProfileKind::Weighted, v).unwrap();
                let comp = ball_profile(n, k, ProfileKind::Weighted, r0).unwrap();
                let expl = weighted_bound_explicit(n, k, v).unwrap();
                assert!((comp - expl).abs() <= 1e-10 * comp, "n={n} k={k} r={r}");
            }
        }
    }
}

proptest! {
    #[test]
    fn profiles_round_trip_and_increase(n in 1usize..=6, k in 0usize..=7, r in 0.1f64..3.0) {
        let k = k % (n + 2);
        for kind in [ProfileKind::Weighted, ProfileKind::Quermass] {
            if kind == ProfileKind::Quermass && k == n + 1 {
                continue;
            }
            let v = ball_profile(n, k, kind, r).unwrap();
            let back = ball_profile_inverse(n, k, kind, v).unwrap();
            prop_assert!((back - r).abs() <= 1e-10, "{kind:?} n={n} k={k}: {back} vs {r}");
            let h = 1e-5;
            let fd = (ball_profile(n, k, kind, r + h).unwrap() - ball_profile(n, k, kind, r - h).unwrap()) / (2.0 * h);
            let d = ball_profile_derivative(n, k, kind, r).unwrap();
            prop_assert!(d > 0.0);
            prop_assert!((fd - d).abs() <= 1e-6 * d.max(1.0), "{kind:?} n={n} k={k}: fd {fd} vs {d}");
        }
    }
}

fn minkowski_error(n: usize, nt: usize, shape: &ShapeSpec) -> (f64, f64) {
    let graph = make_shape(axisym(n, nt), shape).unwrap();
    let f = curvature(&graph).unwrap();
    let wi = weighted_integrals(&f, &graph);
    let mink = wi
        .minkowski_residuals
        .iter()
        .enumerate()
        .map(|(i, r)| (r / wi.wl[i + 1]).abs())
        .fold(0.0, f64::max);
    let vol = ((wi.wl[0] - wi.volume_form) / wi.volume_form).abs();
    (mink, vol)
}

#[test]
fn minkowski_and_weighted_volume_converge() {
    for n in [2, 3, 5] {
        for shape in [
            ShapeSpec::OffcenterSphere { rho: 1.0, d: 0.4 },
            ShapeSpec::PerturbedSphere { r0: 1.0, eps: 0.1, m: 3 },
        ] {
            let errs: Vec<(f64, f64)> = [32, 64, 128, 256].iter().map(|&nt| minkowski_error(n, nt, &shape)).collect();
            for w in errs.windows(2) {
                let p = (w[0].0 / w[1].0).log2();
                assert!((1.7..=2.3).contains(&p), "minkowski n={n} {shape:?}: {errs:?}");
                // The volume form and the support-function form share the cell-exact
                // quadrature, so their gap is either O(h²) or at round-off.
                if w[1].1 > 1e-13 {
                    let q = (w[0].1 / w[1].1).log2();
                    assert!(q > 1.7, "volume form n={n} {shape:?}: {errs:?}");
                }
            }
        }
    }
}

#[test]
fn heintze_karcher_on_non_centered_shapes() {
    let perturbed = ShapeSpec::PerturbedSphere { r0: 1.0, eps: 0.1, m: 2 };
    let f = curvature(&make_shape(axisym(2, 128), &perturbed).unwrap()).unwrap();
    assert!(heintze_karcher_slack(&f).unwrap() > 1e-2);
    // Every geodesic sphere is umbilic and attains equality, centered or not.
    let off = ShapeSpec::OffcenterSphere { rho: 1.0, d: 0.3 };
    let slack: Vec<f64> = [32, 64, 128, 256]
        .iter()
        .map(|&nt| heintze_karcher_slack(&curvature(&make_shape(axisym(2, nt), &off).unwrap()).unwrap()).unwrap().abs())
        .collect();
    for w in slack.windows(2) {
        assert!(((w[0] / w[1]).log2() - 2.0).abs() < 0.3, "{slack:?}");
    }
    let f = curvature(&make_shape(axisym(2, 128), &ShapeSpec::PerturbedSphere { r0: 1.0, eps: 0.4, m: 6 }).unwrap()).unwrap();
    assert!(matches!(heintze_karcher_slack(&f), Err(Error::ConeViolation { .. })));
}

#[test]
fn record_columns_line_up() {
    let graph = make_shape(axisym(3, 32), &ShapeSpec::PerturbedSphere { r0: 1.0, eps: 0.05, m: 2 }).unwrap();
    let f = curvature(&graph).unwrap();
    let rec = FunctionalRecord::evaluate(&f, &graph, 0.5);
    assert_eq!(FunctionalRecord::csv_header(3).len(), rec.csv_row().len());
    assert_eq!(rec.w.len(), 4);
    assert_eq!(rec.wl.len(), 5);
    assert!(rec.heintze_karcher_slack.unwrap() > 0.0);
}
