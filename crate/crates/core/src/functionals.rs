//! Quermassintegrals `W_k`, weighted curvature integrals `W_k^{λ′}`, their
//! geodesic-ball profiles, and the integral identities that tie them together.

use crate::error::{Error, Result};
use crate::grid::sphere_area;
use crate::hypersurface::{pairwise_sum, CurvatureField, RadialGraph};

/// `∫_0^r sinh^n s ds`.
pub fn sinh_power_integral(n: usize, r: f64) -> f64 {
    if n <= 4 && r >= 0.25 {
        let (s, c) = (r.sinh(), r.cosh());
        let mut prev = r; // I_0
        let mut cur = 2.0 * (0.5 * r).sinh().powi(2); // I_1
        if n == 0 {
            return prev;
        }
        for m in 2..=n {
            let next = s.powi(m as i32 - 1) * c / m as f64 - (m - 1) as f64 / m as f64 * prev;
            prev = cur;
            cur = next;
        }
        cur
    } else {
        adaptive_simpson(&|s: f64| s.sinh().powi(n as i32), 0.0, r, 1e-15)
    }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if b <= a {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = simpson(fa, fm, fb, a, b);
    // crude magnitude estimate for the relative tolerance
    let scale = whole.abs().max(f64::MIN_POSITIVE);
    rec(f, a, b, fa, fm, fb, whole, rel_tol * scale, 40)
}

/// Which family of ball profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    /// `f_k(r) = W_k(B_r)`.
    Quermass,
    /// `h_k(r) = W_k^{λ′}(B_r)`.
    Weighted,
}

fn check_profile_args(n: usize, k: usize, kind: ProfileKind) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidInput("dimension must be >= 1".into()));
    }
    if k > n + 1 {
        return Err(Error::InvalidInput(format!(
            "profile index {k} exceeds n+1={}",
            n + 1
        )));
    }
    let _ = kind;
    Ok(())
}

/// `f_k(r)` or `h_k(r)` on `H^{n+1}`, `0 <= k <= n+1`.
pub fn ball_profile(n: usize, k: usize, kind: ProfileKind, r: f64) -> Result<f64> {
    check_profile_args(n, k, kind)?;
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("radius {r} must be non-negative")));
    }
    let om = sphere_area(n);
    let (s, c) = (r.sinh(), r.cosh());
    Ok(match kind {
        ProfileKind::Weighted => om * s.powi((n + 1 - k) as i32) * c.powi(k as i32),
        ProfileKind::Quermass => quermass_profile(n, k, r, om),
    })
}

fn quermass_profile(n: usize, k: usize, r: f64, om: f64) -> f64 {
    let nf = n as f64;
    let f0 = om * sinh_power_integral(n, r);
    if k == 0 {
        return f0;
    }
    let s = r.sinh();
    let sn = s.powi(n as i32);
    // surface term ω s^n coth^j, written as ω s^{n−j} c^j
    let surf = |j: usize| om * s.powi(n as i32 - j as i32) * r.cosh().powi(j as i32);
    let mut prev = f0;
    let mut cur = om * sn / (nf + 1.0);
    for j in 1..k {
        let next = surf(j) / (nf + 1.0) - j as f64 / (nf + 2.0 - j as f64) * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `d/dr` of [`ball_profile`].
pub fn ball_profile_derivative(n: usize, k: usize, kind: ProfileKind, r: f64) -> Result<f64> {
    check_profile_args(n, k, kind)?;
    let om = sphere_area(n);
    let (s, c) = (r.sinh(), r.cosh());
    let nf = n as f64;
    Ok(match kind {
        ProfileKind::Weighted => {
            let a = (n + 1 - k) as f64 * s.powi(n as i32 - k as i32) * c.powi(k as i32 + 1);
            let b = if k > 0 {
                k as f64 * s.powi(n as i32 + 2 - k as i32) * c.powi(k as i32 - 1)
            } else {
                0.0
            };
            om * (a + b)
        }
        ProfileKind::Quermass => {
            (nf + 1.0 - k as f64) / (nf + 1.0) * om * s.powi(n as i32 - k as i32) * c.powi(k as i32)
        }
    })
}

/// Inverse of [`ball_profile`] to relative tolerance 1e-12 or better.
pub fn ball_profile_inverse(n: usize, k: usize, kind: ProfileKind, value: f64) -> Result<f64> {
    check_profile_args(n, k, kind)?;
    if kind == ProfileKind::Quermass && k == n + 1 {
        return Err(Error::Domain(format!(
            "f_{k} is constant in dimension n={n} and has no inverse"
        )));
    }
    let floor = ball_profile(n, k, kind, 0.0)?;
    if !(value > floor) || !value.is_finite() {
        return Err(Error::Domain(format!(
            "value {value} outside the range ({floor}, inf) of the profile"
        )));
    }
    let f = |r: f64| ball_profile(n, k, kind, r).map(|v| v - value);
    let mut hi = 1.0;
    loop {
        let v = f(hi)?;
        if !v.is_finite() {
            return Err(Error::Domain(format!(
                "value {value} above the numeric range of the profile"
            )));
        }
        if v >= 0.0 {
            break;
        }
        hi *= 2.0;
    }
    let mut lo = 0.0;
    let mut r = 0.5 * hi;
    for _ in 0..300 {
        let g = f(r)?;
        if g == 0.0 {
            return Ok(r);
        }
        if g > 0.0 {
            hi = r;
        } else {
            lo = r;
        }
        let d = ball_profile_derivative(n, k, kind, r)?;
        let mut next = r - g / d;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - r).abs() <= 1e-15 * next || hi - lo <= 1e-15 * hi {
            return Ok(next);
        }
        r = next;
    }
    Ok(r)
}

/// The explicit form of `h_k ∘ h_0^{-1}(V)`: `ω((V/ω)^{2/k} + (V/ω)^{2(n−k+1)/((n+1)k)})^{k/2}`.
pub fn weighted_bound_explicit(n: usize, k: usize, v: f64) -> Result<f64> {
    if k == 0 || k > n + 1 {
        return Err(Error::InvalidInput(format!(
            "explicit form needs 1 <= k <= n+1, got k={k}"
        )));
    }
    let om = sphere_area(n);
    let x = v / om;
    let (kf, nf) = (k as f64, n as f64);
    let inner = x.powf(2.0 / kf) + x.powf(2.0 * (nf - kf + 1.0) / ((nf + 1.0) * kf));
    Ok(om * inner.powf(kf / 2.0))
}

/// `∫_M E_k dμ` for `k = 0..=n`.
pub fn curvature_integrals(field: &CurvatureField) -> Vec<f64> {
    (0..=field.n).map(|k| field.integrate(|i| field.e_k(i, k))).collect()
}

/// Enclosed volume `∫_{S^n} ∫_0^{r(θ)} sinh^n s ds dσ`.
pub fn enclosed_volume(graph: &RadialGraph) -> f64 {
    let g = graph.grid();
    let n = g.dim();
    let terms: Vec<f64> = graph
        .radius()
        .iter()
        .enumerate()
        .map(|(i, &r)| sinh_power_integral(n, r) * g.weight(i))
        .collect();
    pairwise_sum(&terms)
}

/// `(n+1) ∫_Ω λ′ dvol`, integrated exactly along each ray.
pub fn weighted_volume(graph: &RadialGraph) -> f64 {
    let g = graph.grid();
    let n = g.dim() as i32;
    let terms: Vec<f64> = graph
        .radius()
        .iter()
        .enumerate()
        .map(|(i, &r)| r.sinh().powi(n + 1) * g.weight(i))
        .collect();
    pairwise_sum(&terms)
}

/// `W_0..W_n`.
pub fn quermassintegrals(field: &CurvatureField, graph: &RadialGraph) -> Vec<f64> {
    quermass_from(field.n, enclosed_volume(graph), &curvature_integrals(field))
}

fn quermass_from(n: usize, volume: f64, ek: &[f64]) -> Vec<f64> {
    let nf = n as f64;
    let mut w = Vec::with_capacity(n + 1);
    w.push(volume);
    if n >= 1 {
        w.push(ek[0] / (nf + 1.0));
    }
    for k in 1..n {
        let next = ek[k] / (nf + 1.0) - k as f64 / (nf + 2.0 - k as f64) * w[k - 1];
        w.push(next);
    }
    w
}

/// Weighted integrals and their Minkowski duals.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedIntegrals {
    /// `Wl_0 = ∫u dμ`, `Wl_k = ∫λ′E_{k−1} dμ` for `1 <= k <= n+1`.
    pub wl: Vec<f64>,
    /// `∫u E_k dμ` for `0 <= k <= n`.
    pub dual: Vec<f64>,
    /// `∫λ′E_{k−1} − ∫uE_k` for `k = 1..=n`.
    pub minkowski_residuals: Vec<f64>,
    /// `(n+1) ∫_Ω λ′ dvol`.
    pub volume_form: f64,
}

pub fn weighted_integrals(field: &CurvatureField, graph: &RadialGraph) -> WeightedIntegrals {
    let n = field.n;
    let mut wl = Vec::with_capacity(n + 2);
    wl.push(field.integrate(|i| field.u[i]));
    for k in 1..=n + 1 {
        wl.push(field.integrate(|i| field.lambda_prime[i] * field.e_k(i, k - 1)));
    }
    let dual: Vec<f64> = (0..=n)
        .map(|k| field.integrate(|i| field.u[i] * field.e_k(i, k)))
        .collect();
    let minkowski_residuals = (1..=n).map(|k| wl[k] - dual[k]).collect();
    WeightedIntegrals {
        wl,
        dual,
        minkowski_residuals,
        volume_form: weighted_volume(graph),
    }
}

/// `∫_M (λ′/E_1 − u) dμ`.
pub fn heintze_karcher_slack(field: &CurvatureField) -> Result<f64> {
    if let Some(i) = (0..field.len()).find(|&i| !(field.e_k(i, 1) > 0.0)) {
        return Err(Error::ConeViolation {
            cone_index: field.cone_index(i),
            required: 1,
            location: None,
        });
    }
    Ok(field.integrate(|i| field.lambda_prime[i] / field.e_k(i, 1) - field.u[i]))
}

/// One snapshot of every monitored functional.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalRecord {
    pub t: f64,
    pub n: usize,
    /// `W_0..W_n`.
    pub w: Vec<f64>,
    /// `Wl_0..Wl_{n+1}`.
    pub wl: Vec<f64>,
    pub area: f64,
    /// `k = 1..=n`.
    pub minkowski_residuals: Vec<f64>,
    /// `None` when the surface is not mean convex.
    pub heintze_karcher_slack: Option<f64>,
    /// `(n+1) ∫_Ω λ′ dvol`.
    pub wl0_volume_form: f64,
    /// `∫_M E_k dμ`, `k = 0..=n`.
    pub curvature_integrals: Vec<f64>,
}

impl FunctionalRecord {
    pub fn evaluate(field: &CurvatureField, graph: &RadialGraph, t: f64) -> Self {
        let n = field.n;
        let ek = curvature_integrals(field);
        let wi = weighted_integrals(field, graph);
        FunctionalRecord {
            t,
            n,
            w: quermass_from(n, enclosed_volume(graph), &ek),
            wl: wi.wl,
            area: ek[0],
            minkowski_residuals: wi.minkowski_residuals,
            heintze_karcher_slack: heintze_karcher_slack(field).ok(),
            wl0_volume_form: wi.volume_form,
            curvature_integrals: ek,
        }
    }

    /// Column names, in the order [`csv_row`](Self::csv_row) writes them:
    /// `t, area, W_0..W_n, Wl_0..Wl_{n+1}, mink_1..mink_n, hk_slack, wl0_volume`.
    pub fn csv_header(n: usize) -> Vec<String> {
        let mut h = vec!["t".to_string(), "area".to_string()];
        h.extend((0..=n).map(|k| format!("W_{k}")));
        h.extend((0..=n + 1).map(|k| format!("Wl_{k}")));
        h.extend((1..=n).map(|k| format!("mink_{k}")));
        h.push("hk_slack".into());
        h.push("wl0_volume".into());
        h
    }

    pub fn csv_row(&self) -> Vec<String> {
        let f = |x: f64| format!("{x:.17e}");
        let mut row = vec![f(self.t), f(self.area)];
        row.extend(self.w.iter().map(|&x| f(x)));
        row.extend(self.wl.iter().map(|&x| f(x)));
        row.extend(self.minkowski_residuals.iter().map(|&x| f(x)));
        row.push(self.heintze_karcher_slack.map_or("nan".into(), f));
        row.push(f(self.wl0_volume_form));
        row
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn sinh_integral_branches_agree() {
        for n in 0..=4 {
            for r in [0.3, 1.0, 2.5] {
                let closed = sinh_power_integral(n, r);
                let quad = adaptive_simpson(&|s: f64| s.sinh().powi(n as i32), 0.0, r, 1e-15);
                assert_relative_eq!(closed, quad, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn ball_volume_n2() {
        let v = ball_profile(2, 0, ProfileKind::Quermass, 1.0).unwrap();
        assert_relative_eq!(v, PI * 2f64.sinh() - 2.0 * PI, max_relative = 1e-14);
    }

    #[test]
    fn top_profiles() {
        let om = sphere_area(3);
        let r = 0.7f64;
        assert_relative_eq!(
            ball_profile(3, 4, ProfileKind::Weighted, r).unwrap(),
            om * r.cosh().powi(4),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            ball_profile(3, 4, ProfileKind::Quermass, r).unwrap(),
            om / 4.0,
            max_relative = 1e-12
        );
        assert!(ball_profile_inverse(3, 4, ProfileKind::Quermass, 1.0).is_err());
    }

    #[test]
    fn inverse_domain_errors() {
        assert!(ball_profile_inverse(2, 0, ProfileKind::Weighted, -1.0).is_err());
        assert!(ball_profile_inverse(2, 0, ProfileKind::Weighted, 0.0).is_err());
        assert!(ball_profile_inverse(2, 3, ProfileKind::Weighted, 1.0).is_err());
        assert!(ball_profile_inverse(2, 0, ProfileKind::Weighted, 1e308).is_err());
    }

    #[test]
    fn explicit_form_matches_composition() {
        for n in 2..=4 {
            for k in 1..=n + 1 {
                let r = 0.9;
                let v = ball_profile(n, 0, ProfileKind::Weighted, r).unwrap();
                let h = ball_profile(n, k, ProfileKind::Weighted, r).unwrap();
                assert_relative_eq!(weighted_bound_explicit(n, k, v).unwrap(), h, max_relative = 1e-12);
            }
        }
    }
}
