//! Normalized elementary symmetric functions of principal curvatures.
//!
//! `E_k(κ) = C(n,k)^{-1} σ_k(κ)` with `E_0 = 1` and `E_k = 0` for `k > n`.
//! Derivatives use the convention `Ė_k^i = ∂E_k/∂κ_i = σ_{k-1}(κ without κ_i) / C(n,k)`,
//! under which `Σ_i Ė_k^i = k E_{k-1}` holds exactly.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Principal curvatures at a point, `n >= 1` finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureVector(Vec<f64>);

impl CurvatureVector {
    pub fn new(kappa: Vec<f64>) -> Result<Self> {
        if kappa.is_empty() {
            return Err(Error::InvalidInput("curvature vector must be non-empty".into()));
        }
        if let Some(i) = kappa.iter().position(|k| !k.is_finite()) {
            return Err(Error::InvalidInput(format!("kappa[{i}] is not finite")));
        }
        Ok(Self(kappa))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// `C(n, k)` as a float; zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Unnormalized elementary symmetric sums `σ_0..σ_m` by adding one variable at a time.
pub fn elementary_sums(x: &[f64]) -> Vec<f64> {
    let mut s = vec![0.0; x.len() + 1];
    s[0] = 1.0;
    for (i, &xi) in x.iter().enumerate() {
        for k in (1..=i + 1).rev() {
            s[k] += xi * s[k - 1];
        }
    }
    s
}

/// Normalized `E_0..E_n` without derivatives.
pub fn normalized_elementary(kappa: &[f64]) -> Vec<f64> {
    let n = kappa.len();
    let mut s = elementary_sums(kappa);
    for (k, v) in s.iter_mut().enumerate() {
        *v /= binomial(n, k);
    }
    s
}

/// Largest `k` with `E_1..E_k > 0` (strict sign test).
pub fn cone_index_of(e: &[f64]) -> usize {
    e.iter().skip(1).take_while(|&&v| v > 0.0).count()
}

/// A curvature vector with its normalized symmetric functions, their gradients and
/// Garding-cone membership.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricPoint {
    kappa: CurvatureVector,
    e: Vec<f64>,
    grad_e: Vec<Vec<f64>>,
    cone_index: usize,
}

/// Evaluate `E_k` and `∂E_k/∂κ_i` for all `k`.
pub fn eval_elementary(kappa: &CurvatureVector) -> SymmetricPoint {
    let x = kappa.as_slice();
    let n = x.len();
    let e = normalized_elementary(x);

    let mut grad_e = vec![vec![0.0; n]; n + 1];
    let mut rest = Vec::with_capacity(n.saturating_sub(1));
    for i in 0..n {
        rest.clear();
        rest.extend(x.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &v)| v));
        let s = elementary_sums(&rest);
        for k in 1..=n {
            grad_e[k][i] = s[k - 1] / binomial(n, k);
        }
    }

    let cone_index = cone_index_of(&e);
    SymmetricPoint {
        kappa: kappa.clone(),
        e,
        grad_e,
        cone_index,
    }
}

impl SymmetricPoint {
    pub fn from_slice(kappa: &[f64]) -> Result<Self> {
        Ok(eval_elementary(&CurvatureVector::new(kappa.to_vec())?))
    }

    pub fn dim(&self) -> usize {
        self.kappa.dim()
    }

    pub fn kappa(&self) -> &[f64] {
        self.kappa.as_slice()
    }

    /// `E_k`, zero for `k > n`.
    pub fn e(&self, k: usize) -> f64 {
        self.e.get(k).copied().unwrap_or(0.0)
    }

    pub fn e_all(&self) -> &[f64] {
        &self.e
    }

    /// `∂E_k/∂κ_i`; the zero vector for `k = 0` and `k > n`.
    pub fn grad_e(&self, k: usize) -> Vec<f64> {
        self.grad_e
            .get(k)
            .cloned()
            .unwrap_or_else(|| vec![0.0; self.dim()])
    }

    pub fn cone_index(&self) -> usize {
        self.cone_index
    }

    pub fn in_cone(&self, k: usize) -> bool {
        self.cone_index >= k
    }
}

/// Residuals of the three Newton-tensor identities for a fixed `k`:
/// `Σ Ė_k^i κ_i − k E_k`, `Σ Ė_k^i − k E_{k−1}`,
/// `Σ Ė_k^i κ_i² − (n E_1 E_k − (n−k) E_{k+1})`.
pub fn newton_identities_check(p: &SymmetricPoint, k: usize) -> Result<[f64; 3]> {
    let n = p.dim();
    if k > n {
        return Err(Error::InvalidInput(format!("k={k} exceeds n={n}")));
    }
    let g = p.grad_e(k);
    let kap = p.kappa();
    let s1: f64 = g.iter().zip(kap).map(|(d, x)| d * x).sum();
    let s0: f64 = g.iter().sum();
    let s2: f64 = g.iter().zip(kap).map(|(d, x)| d * x * x).sum();
    let kf = k as f64;
    let e_km1 = if k == 0 { 0.0 } else { p.e(k - 1) };
    Ok([
        s1 - kf * p.e(k),
        s0 - kf * e_km1,
        s2 - (n as f64 * p.e(1) * p.e(k) - (n - k) as f64 * p.e(k + 1)),
    ])
}

/// `E_k² − E_{k+1} E_{k−1}` for `1 <= k <= n−1` and `κ ∈ Γ_k^+`.
pub fn newton_maclaurin_margin(p: &SymmetricPoint, k: usize) -> Result<f64> {
    let n = p.dim();
    if k == 0 || k + 1 > n {
        return Err(Error::InvalidInput(format!(
            "Newton-MacLaurin index k={k} outside 1..={}",
            n.saturating_sub(1)
        )));
    }
    if !p.in_cone(k) {
        return Err(Error::ConeViolation {
            cone_index: p.cone_index(),
            required: k,
            location: None,
        });
    }
    Ok(p.e(k) * p.e(k) - p.e(k + 1) * p.e(k - 1))
}

/// Curvature function `F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpeedKind {
    /// `F = (E_k/E_l)^{1/(k−l)}`.
    Quotient { k: usize, l: usize },
    /// `F = E_1`.
    Mean,
}

impl SpeedKind {
    /// The `(k, l)` pair of the equivalent quotient.
    pub fn indices(&self) -> (usize, usize) {
        match *self {
            SpeedKind::Quotient { k, l } => (k, l),
            SpeedKind::Mean => (1, 0),
        }
    }
}

/// Outer function `Φ` applied to the curvature term of a flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhiKind {
    /// `Φ(s) = s^p`, `p > 0`.
    Power(f64),
    /// `Φ(s) = −s^{−p}`, `0 < p <= 1`.
    NegInvPower(f64),
    /// `Φ(s) = ln s`.
    Log,
    /// `Φ(s) = s`.
    Identity,
}

impl PhiKind {
    pub fn value(&self, s: f64) -> f64 {
        match *self {
            PhiKind::Power(p) => s.powf(p),
            PhiKind::NegInvPower(p) => -s.powf(-p),
            PhiKind::Log => s.ln(),
            PhiKind::Identity => s,
        }
    }

    pub fn d1(&self, s: f64) -> f64 {
        match *self {
            PhiKind::Power(p) => p * s.powf(p - 1.0),
            PhiKind::NegInvPower(p) => p * s.powf(-p - 1.0),
            PhiKind::Log => 1.0 / s,
            PhiKind::Identity => 1.0,
        }
    }

    pub fn d2(&self, s: f64) -> f64 {
        match *self {
            PhiKind::Power(p) => p * (p - 1.0) * s.powf(p - 2.0),
            PhiKind::NegInvPower(p) => -p * (p + 1.0) * s.powf(-p - 2.0),
            PhiKind::Log => -1.0 / (s * s),
            PhiKind::Identity => 0.0,
        }
    }

    /// Only the identity is defined for non-positive arguments.
    pub fn needs_positive_argument(&self) -> bool {
        !matches!(self, PhiKind::Identity)
    }

    /// Checks `Φ′ > 0` and `Φ″ s + 2Φ′ >= 0` on a log-spaced sample of `(1e-3, 1e3)`.
    pub fn check_admissible(&self) -> Result<()> {
        for i in 0..=120 {
            let s = 10f64.powf(-3.0 + 6.0 * i as f64 / 120.0);
            let d1 = self.d1(s);
            let d2 = self.d2(s);
            if !(d1 > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "{self:?}: Phi'({s:.3e}) = {d1:.3e} is not positive"
                )));
            }
            let c = d2 * s + 2.0 * d1;
            if c < -1e-12 * d1.abs() {
                return Err(Error::InvalidInput(format!(
                    "{self:?}: Phi''(s)s + 2Phi'(s) = {c:.3e} < 0 at s={s:.3e}"
                )));
            }
        }
        Ok(())
    }
}

/// A validated speed: curvature function plus outer `Φ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedFunctionSpec {
    kind: SpeedKind,
    phi: PhiKind,
    n: usize,
}

impl SpeedFunctionSpec {
    pub fn new(kind: SpeedKind, phi: PhiKind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("dimension must be >= 1".into()));
        }
        if let SpeedKind::Quotient { k, l } = kind {
            if !(l < k && k <= n) {
                return Err(Error::InvalidInput(format!(
                    "quotient requires 0 <= l < k <= n, got k={k}, l={l}, n={n}"
                )));
            }
        }
        phi.check_admissible()?;
        Ok(Self { kind, phi, n })
    }

    pub fn kind(&self) -> SpeedKind {
        self.kind
    }

    pub fn phi(&self) -> PhiKind {
        self.phi
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Cone index a point must reach for `F` to be evaluable.
    pub fn required_cone(&self) -> usize {
        match self.kind {
            SpeedKind::Quotient { k, .. } => k,
            SpeedKind::Mean => 0,
        }
    }

    /// `F` from precomputed `E_0..E_n`; `cone_index` must already have been checked.
    pub(crate) fn value_from_e(&self, e: &[f64]) -> f64 {
        match self.kind {
            SpeedKind::Mean => e[1],
            SpeedKind::Quotient { k, l } => {
                let q = e[k] / e[l];
                if k - l == 1 {
                    q
                } else {
                    q.powf(1.0 / (k - l) as f64)
                }
            }
        }
    }
}

/// `F` and `∂F/∂κ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedValue {
    pub f: f64,
    pub grad: Vec<f64>,
}

pub fn eval_speed(spec: &SpeedFunctionSpec, p: &SymmetricPoint) -> Result<SpeedValue> {
    if p.dim() != spec.dim() {
        return Err(Error::InvalidInput(format!(
            "speed built for n={}, point has n={}",
            spec.dim(),
            p.dim()
        )));
    }
    match spec.kind {
        SpeedKind::Mean => Ok(SpeedValue {
            f: p.e(1),
            grad: p.grad_e(1),
        }),
        SpeedKind::Quotient { k, l } => {
            if !p.in_cone(k) {
                return Err(Error::ConeViolation {
                    cone_index: p.cone_index(),
                    required: k,
                    location: None,
                });
            }
            let f = spec.value_from_e(p.e_all());
            let ek = p.e(k);
            let el = p.e(l);
            let gk = p.grad_e(k);
            let gl = p.grad_e(l);
            let scale = f / (k - l) as f64;
            let grad = gk
                .iter()
                .zip(&gl)
                .map(|(a, b)| scale * (a / ek - b / el))
                .collect();
            Ok(SpeedValue { f, grad })
        }
    }
}

/// Concavity and inverse-concavity diagnostics of `f` at a point of `Γ_+`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcavityReport {
    /// Spectrum of the finite-difference Hessian `(f̈^{kl})`.
    pub hessian_min_eigenvalue: f64,
    pub hessian_max_eigenvalue: f64,
    /// Smallest eigenvalue of `f̈^{kl} + 2 ḟ^k/κ_k δ_{kl}`.
    pub inverse_concavity_min_eigenvalue: f64,
    /// Largest `(ḟ^k − ḟ^l)/(κ_k − κ_l)` over pairs; `None` when skipped.
    pub pairwise_max: Option<f64>,
    /// Smallest `(ḟ^k − ḟ^l)/(κ_k − κ_l) + ḟ^k/κ_l + ḟ^l/κ_k` over pairs.
    pub pairwise_inverse_min: Option<f64>,
    /// Some entries coincide within 1e-8; pairwise terms were skipped.
    pub degenerate_spectrum: bool,
}

impl ConcavityReport {
    pub fn is_concave(&self, tol: f64) -> bool {
        self.hessian_max_eigenvalue <= tol && self.pairwise_max.map_or(true, |v| v <= tol)
    }

    pub fn is_inverse_concave(&self, tol: f64) -> bool {
        self.inverse_concavity_min_eigenvalue >= -tol
            && self.pairwise_inverse_min.map_or(true, |v| v >= -tol)
    }
}

pub fn concavity_diagnostics(
    spec: &SpeedFunctionSpec,
    p: &SymmetricPoint,
) -> Result<ConcavityReport> {
    let kap = p.kappa();
    let n = kap.len();
    if kap.iter().any(|&x| x <= 0.0) {
        return Err(Error::InvalidInput(
            "concavity diagnostics need kappa in the positive cone".into(),
        ));
    }
    let grad = eval_speed(spec, p)?.grad;
    let norm = kap.iter().map(|x| x * x).sum::<f64>().sqrt();
    let h = 1e-4 * norm;

    let f_at = |x: &[f64]| -> Result<f64> {
        let q = SymmetricPoint::from_slice(x)?;
        Ok(eval_speed(spec, &q)?.f)
    };
    let f0 = f_at(kap)?;
    let mut hess = DMatrix::<f64>::zeros(n, n);
    let mut x = kap.to_vec();
    for i in 0..n {
        x[i] = kap[i] + h;
        let fp = f_at(&x)?;
        x[i] = kap[i] - h;
        let fm = f_at(&x)?;
        x[i] = kap[i];
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
        for j in 0..i {
            let mut corner = |si: f64, sj: f64| -> Result<f64> {
                x[i] = kap[i] + si * h;
                x[j] = kap[j] + sj * h;
                let v = f_at(&x);
                x[i] = kap[i];
                x[j] = kap[j];
                v
            };
            let v = (corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)?
                + corner(-1.0, -1.0)?)
                / (4.0 * h * h);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }

    let eig = SymmetricEigen::new(hess.clone()).eigenvalues;
    let hmin = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let hmax = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let mut inv = hess;
    for k in 0..n {
        inv[(k, k)] += 2.0 * grad[k] / kap[k];
    }
    let inv_min = SymmetricEigen::new(inv)
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);

    let mut degenerate = false;
    let mut pmax = f64::NEG_INFINITY;
    let mut pinv = f64::INFINITY;
    for k in 0..n {
        for l in 0..k {
            let dk = kap[k] - kap[l];
            if dk.abs() < 1e-8 {
                degenerate = true;
                continue;
            }
            let q = (grad[k] - grad[l]) / dk;
            pmax = pmax.max(q);
            pinv = pinv.min(q + grad[k] / kap[l] + grad[l] / kap[k]);
        }
    }
    let have_pairs = pmax.is_finite();
    Ok(ConcavityReport {
        hessian_min_eigenvalue: hmin,
        hessian_max_eigenvalue: hmax,
        inverse_concavity_min_eigenvalue: inv_min,
        pairwise_max: have_pairs.then_some(pmax),
        pairwise_inverse_min: have_pairs.then_some(pinv),
        degenerate_spectrum: degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn point(k: &[f64]) -> SymmetricPoint {
        SymmetricPoint::from_slice(k).unwrap()
    }

    #[test]
    fn ones_give_unit_values() {
        for n in 1..=7 {
            let p = point(&vec![1.0; n]);
            for k in 0..=n {
                assert_relative_eq!(p.e(k), 1.0, epsilon = 1e-14);
            }
            assert_eq!(p.e(n + 1), 0.0);
            assert_eq!(p.cone_index(), n);
        }
    }

    #[test]
    fn one_two_three() {
        let p = point(&[1.0, 2.0, 3.0]);
        assert_relative_eq!(p.e(1), 2.0, epsilon = 1e-14);
        assert_relative_eq!(p.e(2), 11.0 / 3.0, epsilon = 1e-14);
        // σ_3 = 6 and C(3,3) = 1.
        assert_relative_eq!(p.e(3), 6.0, epsilon = 1e-14);
        let r = newton_identities_check(&p, 2).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-12), "{r:?}");
        assert_relative_eq!(newton_maclaurin_margin(&p, 1).unwrap(), 1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn product_identity_in_two_dimensions() {
        for t in [0.1, 0.5, 2.0, 17.0] {
            assert_relative_eq!(point(&[t, 1.0 / t]).e(2), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn rejects_non_finite() {
        assert!(CurvatureVector::new(vec![1.0, f64::NAN]).is_err());
        assert!(CurvatureVector::new(vec![]).is_err());
    }

    #[test]
    fn cone_index_tracks_sign_changes() {
        assert_eq!(point(&[1.0, 1.0, -0.25]).cone_index(), 2);
        assert_eq!(point(&[-1.0, -1.0, 0.5]).cone_index(), 0);
        // E_1 > 0 but E_2 < 0
        assert_eq!(point(&[3.0, -1.0]).cone_index(), 1);
    }

    #[test]
    fn newton_maclaurin_range_and_cone() {
        let p = point(&[1.0, 2.0, 3.0]);
        assert!(newton_maclaurin_margin(&p, 0).is_err());
        assert!(newton_maclaurin_margin(&p, 3).is_err());
        let q = point(&[2.0, -1.0, 0.5]);
        assert!(matches!(
            newton_maclaurin_margin(&q, 2),
            Err(Error::ConeViolation { .. })
        ));
        assert_eq!(newton_maclaurin_margin(&point(&[0.7; 4]), 2).unwrap(), 0.0);
    }

    #[test]
    fn harmonic_mean_closed_form() {
        let spec =
            SpeedFunctionSpec::new(SpeedKind::Quotient { k: 2, l: 1 }, PhiKind::Identity, 2)
                .unwrap();
        for (a, b) in [(1.0, 2.0), (0.3, 5.0), (4.0, 4.0)] {
            let v = eval_speed(&spec, &point(&[a, b])).unwrap();
            assert_relative_eq!(v.f, 2.0 * a * b / (a + b), epsilon = 1e-14);
            // d/da of 2ab/(a+b) = 2b²/(a+b)²
            assert_relative_eq!(v.grad[0], 2.0 * b * b / ((a + b) * (a + b)), epsilon = 1e-13);
        }
    }

    #[test]
    fn quotient_outside_cone_is_rejected() {
        let spec =
            SpeedFunctionSpec::new(SpeedKind::Quotient { k: 2, l: 1 }, PhiKind::Identity, 2)
                .unwrap();
        let err = eval_speed(&spec, &point(&[3.0, -1.0])).unwrap_err();
        assert_eq!(
            err,
            Error::ConeViolation {
                cone_index: 1,
                required: 2,
                location: None
            }
        );
    }

    #[test]
    fn speed_spec_validation() {
        let q = |k, l| SpeedKind::Quotient { k, l };
        assert!(SpeedFunctionSpec::new(q(3, 1), PhiKind::Identity, 2).is_err());
        assert!(SpeedFunctionSpec::new(q(1, 1), PhiKind::Identity, 2).is_err());
        assert!(SpeedFunctionSpec::new(SpeedKind::Mean, PhiKind::Power(0.0), 2).is_err());
        assert!(SpeedFunctionSpec::new(SpeedKind::Mean, PhiKind::NegInvPower(1.5), 2).is_err());
        for phi in [
            PhiKind::Power(0.5),
            PhiKind::Power(3.0),
            PhiKind::NegInvPower(1.0),
            PhiKind::NegInvPower(0.25),
            PhiKind::Log,
            PhiKind::Identity,
        ] {
            SpeedFunctionSpec::new(q(2, 0), phi, 3).unwrap();
        }
    }

    #[test]
    fn mean_is_linear_for_diagnostics() {
        let spec = SpeedFunctionSpec::new(SpeedKind::Mean, PhiKind::Identity, 3).unwrap();
        let r = concavity_diagnostics(&spec, &point(&[1.0, 2.0, 3.0])).unwrap();
        assert!(r.hessian_max_eigenvalue.abs() < 1e-8);
        assert!(r.hessian_min_eigenvalue.abs() < 1e-8);
        assert!(r.is_concave(1e-8));
        assert!(r.is_inverse_concave(1e-8));
    }

    #[test]
    fn repeated_entries_flag_degenerate() {
        let spec =
            SpeedFunctionSpec::new(SpeedKind::Quotient { k: 2, l: 1 }, PhiKind::Identity, 3)
                .unwrap();
        let r = concavity_diagnostics(&spec, &point(&[1.0, 1.0, 2.0])).unwrap();
        assert!(r.degenerate_spectrum);
        assert!(r.pairwise_max.is_some());
        let r = concavity_diagnostics(&spec, &point(&[1.5, 1.5, 1.5])).unwrap();
        assert!(r.pairwise_max.is_none());
    }
}
