use hyperflow_core::symfun::{
    binomial, concavity_diagnostics, eval_speed, newton_identities_check, newton_maclaurin_margin,
    PhiKind, SpeedFunctionSpec, SpeedKind, SymmetricPoint,
};
use hyperflow_core::Error;
use proptest::prelude::*;

/// Normalized elementary symmetric functions by summing over all subsets.
fn enumerate(kappa: &[f64]) -> Vec<f64> {
    let n = kappa.len();
    let mut e = vec![0.0; n + 1];
    for mask in 0u32..(1 << n) {
        let k = mask.count_ones() as usize;
        let prod: f64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| kappa[i]).product();
        e[k] += prod;
    }
    (0..=n).map(|k| e[k] / binomial(n, k)).collect()
}

fn kappa_vec(max_n: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    (1..=max_n).prop_flat_map(move |n| prop::collection::vec(lo..hi, n))
}

#[test]
fn one_two_three() {
    let p = SymmetricPoint::from_slice(&[1.0, 2.0, 3.0]).unwrap();
    assert!((p.e(1) - 2.0).abs() < 1e-15);
    assert!((p.e(2) - 11.0 / 3.0).abs() < 1e-15);
    // σ_3 = 6 and C(3,3) = 1.
    assert!((p.e(3) - 6.0).abs() < 1e-15);
    let m = newton_maclaurin_margin(&p, 1).unwrap();
    assert!((m - 1.0 / 3.0).abs() < 1e-14);
    for r in newton_identities_check(&p, 2).unwrap() {
        assert!(r.abs() < 1e-12);
    }
}

#[test]
fn diagonal_ray_has_zero_margin() {
    for n in 2..=7 {
        let p = SymmetricPoint::from_slice(&vec![1.7; n]).unwrap();
        for k in 1..n {
            assert!(newton_maclaurin_margin(&p, k).unwrap().abs() < 1e-12);
        }
        for k in 0..=n {
            for r in newton_identities_check(&p, k).unwrap() {
                assert!(r.abs() < 1e-12);
            }
        }
    }
}

#[test]
fn product_identity() {
    for t in [0.1, 0.5, 2.0, 17.0] {
        let p = SymmetricPoint::from_slice(&[t, 1.0 / t]).unwrap();
        assert!((p.e(2) - 1.0).abs() < 1e-14);
    }
}

#[test]
fn harmonic_mean_quotient() {
    let spec = SpeedFunctionSpec::new(SpeedKind::Quotient { k: 2, l: 1 }, PhiKind::Identity, 2).unwrap();
    for (a, b) in [(1.0, 2.0), (0.3, 5.0), (4.0, 4.0)] {
        let p = SymmetricPoint::from_slice(&[a, b]).unwrap();
        let f = eval_speed(&spec, &p).unwrap().f;
        assert!((f - 2.0 * a * b / (a + b)).abs() < 1e-14);
    }
}

#[test]
fn quotient_needs_cone() {
    let spec = SpeedFunctionSpec::new(SpeedKind::Quotient { k: 2, l: 1 }, PhiKind::Identity, 3).unwrap();
    let p = SymmetricPoint::from_slice(&[1.0, 1.0, -0.9]).unwrap();
    match eval_speed(&spec, &p) {
        Err(Error::ConeViolation { cone_index, required, .. }) => {
            assert_eq!(cone_index, 1);
            assert_eq!(required, 2);
        }
        other => panic!("expected cone violation, got {other:?}"),
    }
}

#[test]
fn non_finite_and_bad_indices() {
    assert!(SymmetricPoint::from_slice(&[1.0, f64::NAN]).is_err());
    assert!(SymmetricPoint::from_slice(&[]).is_err());
    let p = SymmetricPoint::from_slice(&[1.0, 2.0, 3.0]).unwrap();
    assert!(newton_maclaurin_margin(&p, 0).is_err());
    assert!(newton_maclaurin_margin(&p, 3).is_err());
    assert!(SpeedFunctionSpec::new(SpeedKind::Quotient { k: 2, l: 2 }, PhiKind::Identity, 3).is_err());
    assert!(SpeedFunctionSpec::new(SpeedKind::Quotient { k: 4, l: 1 }, PhiKind::Identity, 3).is_err());
}

#[test]
fn mean_curvature_is_linear() {
    let spec = SpeedFunctionSpec::new(SpeedKind::Mean, PhiKind::Identity, 3).unwrap();
    let p = SymmetricPoint::from_slice(&[0.5, 1.5, 4.0]).unwrap();
    let d = concavity_diagnostics(&spec, &p).unwrap();
    assert!(d.hessian_max_eigenvalue.abs() < 1e-6 && d.hessian_min_eigenvalue.abs() < 1e-6);
    assert!(d.is_concave(1e-8) && d.is_inverse_concave(1e-8));
}

#[test]
fn harmonic_quotient_diagnostics() {
    let spec = SpeedFunctionSpec::new(SpeedKind::Quotient { k: 2, l: 1 }, PhiKind::Identity, 3).unwrap();
    let p = SymmetricPoint::from_slice(&[1.0, 2.0, 3.0]).unwrap();
    let d = concavity_diagnostics(&spec, &p).unwrap();
    assert!(d.hessian_max_eigenvalue <= 1e-8, "{d:?}");
    assert!(d.inverse_concavity_min_eigenvalue >= -1e-8, "{d:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn recurrence_matches_enumeration(kappa in kappa_vec(8, -3.0, 3.0)) {
        let p = SymmetricPoint::from_slice(&kappa).unwrap();
        let oracle = enumerate(&kappa);
        let n = kappa.len();
        // Scale of the largest subset product term for the relative comparison.
        let scale = kappa.iter().map(|x| x.abs()).fold(1.0, f64::max).powi(n as i32);
        for k in 0..=n {
            prop_assert!((p.e(k) - oracle[k]).abs() <= 1e-12 * scale.max(oracle[k].abs()),
                "k={} rec={} enum={}", k, p.e(k), oracle[k]);
        }
        prop_assert_eq!(p.e(0), 1.0);
        prop_assert_eq!(p.e(n + 1), 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences(kappa in kappa_vec(7, 0.1, 10.0)) {
        let p = SymmetricPoint::from_slice(&kappa).unwrap();
        let n = kappa.len();
        for k in 1..=n {
            let g = p.grad_e(k);
            for i in 0..n {
                let h = 1e-5 * kappa[i];
                let mut x = kappa.clone();
                x[i] += h;
                let ep = SymmetricPoint::from_slice(&x).unwrap().e(k);
                x[i] -= 2.0 * h;
                let em = SymmetricPoint::from_slice(&x).unwrap().e(k);
                let fd = (ep - em) / (2.0 * h);
                prop_assert!((fd - g[i]).abs() <= 1e-6 * g[i].abs().max(1e-12), "k={k} i={i} fd={fd} g={}", g[i]);
            }
        }
    }

    #[test]
    fn newton_identities(kappa in kappa_vec(8, -4.0, 4.0)) {
        let p = SymmetricPoint::from_slice(&kappa).unwrap();
        let scale = kappa.iter().map(|x| x.abs()).fold(1.0, f64::max);
        for k in 0..=kappa.len() {
            let res = newton_identities_check(&p, k).unwrap();
            let bound = 1e-10 * (1.0 + p.e(k).abs()) * scale.powi(k as i32 + 2);
            for r in res {
                prop_assert!(r.abs() <= bound, "k={k} residual {r}");
            }
        }
    }

    #[test]
    fn speed_is_homogeneous_and_increasing(
        kappa in kappa_vec(6, 0.05, 8.0),
        c in 0.1f64..10.0,
        kl in (1usize..=6, 0usize..6),
    ) {
        let n = kappa.len();
        let k = 1 + (kl.0 - 1) % n;
        let l = kl.1 % k;
        let spec = SpeedFunctionSpec::new(SpeedKind::Quotient { k, l }, PhiKind::Identity, n).unwrap();
        let p = SymmetricPoint::from_slice(&kappa).unwrap();
        let v = eval_speed(&spec, &p).unwrap();
        let scaled: Vec<f64> = kappa.iter().map(|x| c * x).collect();
        let vc = eval_speed(&spec, &SymmetricPoint::from_slice(&scaled).unwrap()).unwrap();
        prop_assert!((vc.f - c * v.f).abs() <= 1e-12 * vc.f.abs());
        for g in &v.grad {
            prop_assert!(*g > 0.0);
        }
        let ones = SymmetricPoint::from_slice(&vec![1.0; n]).unwrap();
        prop_assert!((eval_speed(&spec, &ones).unwrap().f - 1.0).abs() < 1e-14);
    }

    #[test]
    fn nth_root_of_product_is_concave_and_inverse_concave(kappa in kappa_vec(5, 0.2, 5.0)) {
        let n = kappa.len();
        prop_assume!(n >= 2);
        let spec = SpeedFunctionSpec::new(SpeedKind::Quotient { k: n, l: 0 }, PhiKind::Identity, n).unwrap();
        let p = SymmetricPoint::from_slice(&kappa).unwrap();
        let d = concavity_diagnostics(&spec, &p).unwrap();
        prop_assert!(d.hessian_max_eigenvalue <= 1e-8 * (1.0 + p.e(1)), "{d:?}");
        prop_assert!(d.inverse_concavity_min_eigenvalue >= -1e-8 * (1.0 + p.e(1)), "{d:?}");
    }
}

/// Random points of Γ_k^+: shifted Gaussian vectors, rejected until the cone holds.
#[test]
fn newton_maclaurin_on_ten_thousand_cone_samples() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    let mut tested = 0;
    while tested < 10_000 {
        let n = rng.random_range(2..=8);
        let k = rng.random_range(1..n);
        let shift: f64 = rng.random_range(-0.5..2.0);
        let kappa: Vec<f64> = (0..n).map(|_| shift + rng.random_range(-2.0..2.0)).collect();
        let p = SymmetricPoint::from_slice(&kappa).unwrap();
        if !p.in_cone(k) {
            continue;
        }
        let m = newton_maclaurin_margin(&p, k).unwrap();
        let scale = p.e(k) * p.e(k) + (p.e(k + 1) * p.e(k - 1)).abs();
        assert!(m >= -1e-12 * scale, "kappa={kappa:?} k={k} margin={m}");
        tested += 1;
    }
}
