//! Inequality checks on static shapes, monotonicity audits along flow histories,
//! and an exploratory probe of the open weighted inequalities.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::flows::{FlowFamily, FlowSpec, MonitorSample};
use crate::functionals::{
    ball_profile, ball_profile_inverse, heintze_karcher_slack, quermassintegrals,
    weighted_bound_explicit, weighted_integrals, ProfileKind, WeightedIntegrals,
};
use crate::grid::SphereGrid;
use crate::hypersurface::{curvature, make_shape, CurvatureField, RadialGraph, ShapeSpec};
use crate::symfun::{PhiKind, SpeedKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    /// `|slack|` within the equality tolerance.
    Equality,
    Fail,
    /// Hypothesis not met; no verdict.
    Informational,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Equality => "equality",
            Verdict::Fail => "fail",
            Verdict::Informational => "informational",
        })
    }
}

/// Tolerances, each multiplied by `h²` (and by `|lhs|` for the inequality ones).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub equality: f64,
    pub fail: f64,
    /// Allowed negative static margin, in units of `h²`.
    pub static_margin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            equality: 10.0,
            fail: 10.0,
            static_margin: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CheckName {
    Thm13,
    Thm14,
    Thm15,
    Minkowski,
    HeintzeKarcher,
    NewtonMaclaurin,
}

impl CheckName {
    pub const ALL: [CheckName; 6] = [
        CheckName::Thm13,
        CheckName::Thm14,
        CheckName::Thm15,
        CheckName::Minkowski,
        CheckName::HeintzeKarcher,
        CheckName::NewtonMaclaurin,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CheckName::Thm13 => "thm13",
            CheckName::Thm14 => "thm14",
            CheckName::Thm15 => "thm15",
            CheckName::Minkowski => "minkowski",
            CheckName::HeintzeKarcher => "heintze_karcher",
            CheckName::NewtonMaclaurin => "newton_maclaurin",
        }
    }
}

impl FromStr for CheckName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        CheckName::ALL
            .iter()
            .find(|c| c.as_str() == s)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("unknown check '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport {
    pub name: CheckName,
    /// Index parameters, e.g. `k=2` or `k=1,m=0`.
    pub params: String,
    pub shape_id: String,
    /// Polar resolution `N_θ`.
    pub resolution: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub relative_slack: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub hypothesis_ok: bool,
    /// Relative disagreement of two independent evaluations of `rhs`, when available.
    pub rhs_agreement: Option<f64>,
}

impl InequalityReport {
    pub fn csv_header() -> Vec<&'static str> {
        vec![
            "name",
            "params",
            "shape_id",
            "resolution",
            "lhs",
            "rhs",
            "slack",
            "relative_slack",
            "tolerance",
            "verdict",
            "hypothesis_ok",
            "rhs_agreement",
        ]
    }

    pub fn csv_row(&self) -> Vec<String> {
        let f = |x: f64| format!("{x:.17e}");
        vec![
            self.name.as_str().to_string(),
            self.params.clone(),
            self.shape_id.clone(),
            self.resolution.to_string(),
            f(self.lhs),
            f(self.rhs),
            f(self.slack),
            f(self.relative_slack),
            f(self.tolerance),
            self.verdict.to_string(),
            self.hypothesis_ok.to_string(),
            self.rhs_agreement.map_or(String::new(), f),
        ]
    }

    pub fn summary_line(&self) -> String {
        format!(
            "{:<17} {:<9} {:<28} N={:<4} lhs={:.10e} rhs={:.10e} rel_slack={:+.3e} {}",
            self.name.as_str(),
            self.params,
            self.shape_id,
            self.resolution,
            self.lhs,
            self.rhs,
            self.relative_slack,
            self.verdict
        )
    }
}

/// A shape with everything the checks need, computed once.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub shape_id: String,
    pub graph: RadialGraph,
    pub field: CurvatureField,
    pub weighted: WeightedIntegrals,
    pub quermass: Vec<f64>,
}

impl Snapshot {
    pub fn new(shape_id: impl Into<String>, graph: RadialGraph) -> Result<Self> {
        let field = curvature(&graph)?;
        let weighted = weighted_integrals(&field, &graph);
        let quermass = quermassintegrals(&field, &graph);
        Ok(Self {
            shape_id: shape_id.into(),
            graph,
            field,
            weighted,
            quermass,
        })
    }

    pub fn h(&self) -> f64 {
        self.graph.grid().h()
    }

    pub fn n(&self) -> usize {
        self.field.n
    }

    pub fn static_convex(&self, tol: &Tolerances) -> bool {
        self.field.min_static_margin() >= -tol.static_margin * self.h().powi(2)
    }

    fn report(
        &self,
        name: CheckName,
        params: String,
        lhs: f64,
        rhs: f64,
        hypothesis_ok: bool,
        tol: &Tolerances,
    ) -> InequalityReport {
        let h2 = self.h().powi(2);
        let slack = lhs - rhs;
        let eq_tol = tol.equality * h2 * lhs.abs();
        let fail_tol = tol.fail * h2 * lhs.abs();
        let verdict = if !hypothesis_ok {
            Verdict::Informational
        } else if slack.abs() <= eq_tol {
            Verdict::Equality
        } else if slack < -fail_tol {
            Verdict::Fail
        } else {
            Verdict::Pass
        };
        InequalityReport {
            name,
            params,
            shape_id: self.shape_id.clone(),
            resolution: self.graph.grid().n_theta(),
            lhs,
            rhs,
            slack,
            relative_slack: if lhs != 0.0 { slack / lhs.abs() } else { slack },
            tolerance: eq_tol,
            verdict,
            hypothesis_ok,
            rhs_agreement: None,
        }
    }
}

/// `Wl_k >= h_k(h_0^{-1}(Wl_0))` for static convex shapes, `1 <= k <= n+1`.
pub fn check_thm13(s: &Snapshot, k: usize, tol: &Tolerances) -> Result<InequalityReport> {
    let n = s.n();
    if k == 0 || k > n + 1 {
        return Err(Error::InvalidInput(format!("need 1 <= k <= n+1, got k={k}")));
    }
    let wl0 = s.weighted.wl[0];
    let r = ball_profile_inverse(n, 0, ProfileKind::Weighted, wl0)?;
    let rhs = ball_profile(n, k, ProfileKind::Weighted, r)?;
    let explicit = weighted_bound_explicit(n, k, s.weighted.volume_form)?;
    let mut rep = s.report(
        CheckName::Thm13,
        format!("k={k}"),
        s.weighted.wl[k],
        rhs,
        s.static_convex(tol),
        tol,
    );
    rep.rhs_agreement = Some((rhs - explicit).abs() / rhs.abs());
    Ok(rep)
}

/// `Wl_0 >= h_0(f_0^{-1}(W_0))` for star-shaped shapes.
pub fn check_thm14(s: &Snapshot, tol: &Tolerances) -> Result<InequalityReport> {
    let n = s.n();
    let r = ball_profile_inverse(n, 0, ProfileKind::Quermass, s.quermass[0])?;
    let rhs = ball_profile(n, 0, ProfileKind::Weighted, r)?;
    Ok(s.report(CheckName::Thm14, String::new(), s.weighted.wl[0], rhs, true, tol))
}

/// `Wl_{k+1} >= h_{k+1}(f_m^{-1}(W_m))` for static convex shapes, `0 <= m <= k <= n`.
pub fn check_thm15(s: &Snapshot, k: usize, m: usize, tol: &Tolerances) -> Result<InequalityReport> {
    let n = s.n();
    if !(m <= k && k <= n) {
        return Err(Error::InvalidInput(format!("need 0 <= m <= k <= n, got k={k}, m={m}")));
    }
    let r = ball_profile_inverse(n, m, ProfileKind::Quermass, s.quermass[m])?;
    let rhs = ball_profile(n, k + 1, ProfileKind::Weighted, r)?;
    Ok(s.report(
        CheckName::Thm15,
        format!("k={k},m={m}"),
        s.weighted.wl[k + 1],
        rhs,
        s.static_convex(tol),
        tol,
    ))
}

/// `∫λ′E_{k−1} = ∫uE_k`, `1 <= k <= n`; an identity, so only equality passes.
pub fn check_minkowski(s: &Snapshot, k: usize, tol: &Tolerances) -> Result<InequalityReport> {
    let n = s.n();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!("need 1 <= k <= n, got k={k}")));
    }
    let mut rep = s.report(
        CheckName::Minkowski,
        format!("k={k}"),
        s.weighted.wl[k],
        s.weighted.dual[k],
        true,
        tol,
    );
    if rep.verdict == Verdict::Pass {
        rep.verdict = Verdict::Fail;
    }
    Ok(rep)
}

/// `∫λ′/E_1 dμ >= ∫u dμ` for mean convex shapes.
pub fn check_heintze_karcher(s: &Snapshot, tol: &Tolerances) -> Result<InequalityReport> {
    let f = &s.field;
    let mean_convex = (0..f.len()).all(|i| f.e_k(i, 1) > 0.0);
    let (lhs, rhs) = if mean_convex {
        let slack = heintze_karcher_slack(f)?;
        let u = s.weighted.wl[0];
        (u + slack, u)
    } else {
        (f64::NAN, s.weighted.wl[0])
    };
    Ok(s.report(CheckName::HeintzeKarcher, String::new(), lhs, rhs, mean_convex, tol))
}

/// Smallest `E_k² − E_{k+1}E_{k−1}` over nodes in `Γ_k^+`, against 0.
pub fn check_newton_maclaurin(s: &Snapshot, k: usize, tol: &Tolerances) -> Result<InequalityReport> {
    let f = &s.field;
    let n = f.n;
    if k == 0 || k + 1 > n {
        return Err(Error::InvalidInput(format!("need 1 <= k <= n-1, got k={k}")));
    }
    let mut margin = f64::INFINITY;
    let mut scale = 0.0f64;
    let mut any = false;
    for i in 0..f.len() {
        if f.cone_index(i) < k {
            continue;
        }
        any = true;
        let ek = f.e_k(i, k);
        margin = margin.min(ek * ek - f.e_k(i, k + 1) * f.e_k(i, k - 1));
        scale = scale.max(ek * ek);
    }
    let h2 = s.h().powi(2);
    let mut rep = s.report(CheckName::NewtonMaclaurin, format!("k={k}"), margin, 0.0, any, tol);
    // pointwise quantity: tolerances relative to E_k², not to the margin itself
    rep.tolerance = tol.equality * h2 * scale;
    rep.relative_slack = if scale > 0.0 { margin / scale } else { margin };
    if any {
        rep.verdict = if margin.abs() <= rep.tolerance {
            Verdict::Equality
        } else if margin < -tol.fail * h2 * scale {
            Verdict::Fail
        } else {
            Verdict::Pass
        };
    }
    Ok(rep)
}

/// Every index combination of the requested checks.
pub fn run_checks(s: &Snapshot, names: &[CheckName], tol: &Tolerances) -> Result<Vec<InequalityReport>> {
    let n = s.n();
    let mut out = Vec::new();
    for name in names {
        match name {
            CheckName::Thm13 => {
                for k in 1..=n + 1 {
                    out.push(check_thm13(s, k, tol)?);
                }
            }
            CheckName::Thm14 => out.push(check_thm14(s, tol)?),
            CheckName::Thm15 => {
                for k in 0..=n {
                    for m in 0..=k {
                        out.push(check_thm15(s, k, m, tol)?);
                    }
                }
            }
            CheckName::Minkowski => {
                for k in 1..=n {
                    out.push(check_minkowski(s, k, tol)?);
                }
            }
            CheckName::HeintzeKarcher => out.push(check_heintze_karcher(s, tol)?),
            CheckName::NewtonMaclaurin => {
                for k in 1..n {
                    out.push(check_newton_maclaurin(s, k, tol)?);
                }
            }
        }
    }
    Ok(out)
}

/// Named shapes: centered spheres, star-shaped off-center spheres and perturbed spheres.
pub fn standard_corpus() -> Vec<(String, ShapeSpec)> {
    let mut v = Vec::new();
    for r0 in [0.5, 1.0, 2.0] {
        v.push((format!("centered_r{r0}"), ShapeSpec::CenteredSphere { r0 }));
    }
    for d in [0.1, 0.3, 0.5] {
        v.push((format!("offcenter_rho1_d{d}"), ShapeSpec::OffcenterSphere { rho: 1.0, d }));
    }
    for eps in [0.02, 0.05, 0.1] {
        for m in [2, 3] {
            v.push((
                format!("perturbed_r1_eps{eps}_m{m}"),
                ShapeSpec::PerturbedSphere { r0: 1.0, eps, m },
            ));
        }
    }
    v
}

/// Runs `names` on every corpus shape.
pub fn check_corpus(
    grid: Arc<SphereGrid>,
    corpus: &[(String, ShapeSpec)],
    names: &[CheckName],
    tol: &Tolerances,
) -> Result<Vec<InequalityReport>> {
    let mut out = Vec::new();
    for (id, shape) in corpus {
        let s = Snapshot::new(id.clone(), make_shape(grid.clone(), shape)?)?;
        out.extend(run_checks(&s, names, tol)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Constant,
    NonIncreasing,
    NonDecreasing,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Constant => "constant",
            Direction::NonIncreasing => "non-increasing",
            Direction::NonDecreasing => "non-decreasing",
        })
    }
}

/// A functional of the monitor record, `"Wl_k"` or `"W_k"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Functional {
    Weighted(usize),
    Quermass(usize),
}

impl Functional {
    pub fn value(&self, m: &MonitorSample) -> f64 {
        match *self {
            Functional::Weighted(k) => m.functionals.wl[k],
            Functional::Quermass(k) => m.functionals.w[k],
        }
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Functional::Weighted(k) => write!(f, "Wl_{k}"),
            Functional::Quermass(k) => write!(f, "W_{k}"),
        }
    }
}

/// Monotone behaviour known to hold along a flow family.
pub fn monotone_claims(spec: &FlowSpec) -> Vec<(Functional, Direction)> {
    let n = spec.speed.dim();
    let mut v = Vec::new();
    match spec.family {
        FlowFamily::WeightedVolumePreserving if spec.conserves_weighted_volume() => {
            v.push((Functional::Weighted(0), Direction::Constant));
            for k in 1..n {
                v.push((Functional::Weighted(k), Direction::NonIncreasing));
            }
            v.push((Functional::Quermass(0), Direction::NonDecreasing));
        }
        FlowFamily::SxInverse if spec.speed.phi() == PhiKind::NegInvPower(1.0) => {
            if let SpeedKind::Quotient { k, l } = spec.speed.kind() {
                if l + 1 == k {
                    v.push((Functional::Weighted(0), Direction::NonDecreasing));
                    v.push((Functional::Weighted(k + 1), Direction::NonIncreasing));
                    for m in 1..=k {
                        v.push((Functional::Quermass(m), Direction::NonDecreasing));
                    }
                }
            }
        }
        FlowFamily::Bgl => {
            let (k, _) = spec.speed.kind().indices();
            v.push((Functional::Quermass(k), Direction::Constant));
        }
        _ => {}
    }
    v
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClaimResult {
    pub functional: Functional,
    pub direction: Direction,
    /// Largest step against the claimed direction (0 when none).
    pub worst_violation: f64,
    /// Tolerance for that worst step.
    pub tolerance: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub claims: Vec<ClaimResult>,
    /// Smallest `λ′κ_i − u` over all samples.
    pub min_static_factor: f64,
    /// Samples where `λ′κ_i − u` dropped below `−tol·h²`.
    pub static_factor_violations: usize,
}

impl AuditReport {
    pub fn all_hold(&self) -> bool {
        self.claims.iter().all(|c| c.holds)
    }
}

/// Checks sampled monotonicity of `q` with tolerance `c h² Δt |q|` per sample step.
pub fn audit_series(
    history: &[MonitorSample],
    q: Functional,
    dir: Direction,
    h: f64,
    c: f64,
) -> ClaimResult {
    let mut worst = 0.0f64;
    let mut worst_tol = 0.0f64;
    let mut holds = true;
    for w in history.windows(2) {
        let (a, b) = (q.value(&w[0]), q.value(&w[1]));
        let dt = w[1].t - w[0].t;
        let tol = c * h * h * dt * a.abs().max(b.abs()) + 1e-13 * a.abs();
        let bad = match dir {
            Direction::Constant => (b - a).abs(),
            Direction::NonIncreasing => b - a,
            Direction::NonDecreasing => a - b,
        };
        if bad > tol {
            holds = false;
        }
        if bad > worst {
            worst = bad;
            worst_tol = tol;
        }
    }
    ClaimResult {
        functional: q,
        direction: dir,
        worst_violation: worst,
        tolerance: worst_tol,
        holds,
    }
}

pub fn monotonicity_audit(history: &[MonitorSample], spec: &FlowSpec, h: f64, c: f64) -> AuditReport {
    let claims = monotone_claims(spec)
        .into_iter()
        .map(|(q, d)| audit_series(history, q, d, h, c))
        .collect();
    let min_static_factor = history
        .iter()
        .map(|m| m.min_static_factor)
        .fold(f64::INFINITY, f64::min);
    let static_factor_violations = history
        .iter()
        .filter(|m| m.min_static_factor < -c * h * h)
        .count();
    AuditReport {
        claims,
        min_static_factor,
        static_factor_violations,
    }
}

/// One evaluation of an open weighted inequality. Logged, never asserted.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    /// `"weighted_ratio"`: `Wl_k >= h_k(h_l^{-1}(Wl_l))`; `"weighted_af"`:
    /// `Wl_{k+1} >= h_{k+1}(f_m^{-1}(W_m))` beyond static convexity.
    pub family: &'static str,
    pub params: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub static_convex: bool,
    pub cone_index: usize,
    pub violated: bool,
}

/// Evaluates the open inequalities on a snapshot, for every index pair whose
/// convexity hypothesis the shape meets.
pub fn exploratory_probe(s: &Snapshot, tol: &Tolerances) -> Vec<ProbeResult> {
    let n = s.n();
    let f = &s.field;
    let cone = (0..f.len()).map(|i| f.cone_index(i)).min().unwrap_or(0);
    let convex = s.static_convex(tol);
    let mut out = Vec::new();
    for l in 1..=n {
        for k in l + 1..=n + 1 {
            if !(convex || cone + 1 >= k) {
                continue;
            }
            let Ok(r) = ball_profile_inverse(n, l, ProfileKind::Weighted, s.weighted.wl[l]) else {
                continue;
            };
            let Ok(rhs) = ball_profile(n, k, ProfileKind::Weighted, r) else {
                continue;
            };
            let lhs = s.weighted.wl[k];
            out.push(ProbeResult {
                family: "weighted_ratio",
                params: format!("k={k},l={l}"),
                lhs,
                rhs,
                slack: lhs - rhs,
                static_convex: convex,
                cone_index: cone,
                violated: lhs - rhs < -tol.fail * s.h().powi(2) * lhs.abs(),
            });
        }
    }
    if !convex {
        for k in 0..=n.min(cone) {
            for m in 0..=k {
                let Ok(r) = ball_profile_inverse(n, m, ProfileKind::Quermass, s.quermass[m]) else {
                    continue;
                };
                let Ok(rhs) = ball_profile(n, k + 1, ProfileKind::Weighted, r) else {
                    continue;
                };
                let lhs = s.weighted.wl[k + 1];
                out.push(ProbeResult {
                    family: "weighted_af",
                    params: format!("k={k},m={m}"),
                    lhs,
                    rhs,
                    slack: lhs - rhs,
                    static_convex: convex,
                    cone_index: cone,
                    violated: lhs - rhs < -tol.fail * s.h().powi(2) * lhs.abs(),
                });
            }
        }
    }
    out
}
