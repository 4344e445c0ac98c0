//! Time integration of `∂φ/∂t = 𝓕 v / λ` for the locally constrained flows.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::functionals::{ball_profile_inverse, FunctionalRecord, ProfileKind};
use crate::grid::PolarFilter;
use crate::hypersurface::{curvature, induced_laplacian, CurvatureField, RadialGraph};
use crate::symfun::{cone_index_of, PhiKind, SpeedFunctionSpec, SpeedKind, SymmetricPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowFamily {
    /// `𝓕 = Φ(1) − Φ(uF/λ′)`; identity `Φ` with `F = E_1` keeps `Wl_0` fixed.
    WeightedVolumePreserving,
    /// `𝓕 = Φ(λ′/u) − Φ(F)`; `Φ(s) = −1/s` gives `1/F − u/λ′`.
    SxInverse,
    /// `𝓕 = λ′E_{k−1}/E_k − u`.
    Bgl,
}

impl FlowFamily {
    pub fn name(&self) -> &'static str {
        match self {
            FlowFamily::WeightedVolumePreserving => "weighted_vol_preserving",
            FlowFamily::SxInverse => "sx_inverse",
            FlowFamily::Bgl => "bgl",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSpec {
    pub family: FlowFamily,
    pub speed: SpeedFunctionSpec,
    pub t_end: f64,
    /// Safety factor on the explicit step, in `(0, 1]`.
    pub cfl: f64,
    /// Time between monitor samples.
    pub sample_interval: f64,
    /// Stop once `max |Dφ|²` falls below this.
    pub convergence_threshold: f64,
    pub max_steps: usize,
}

impl FlowSpec {
    pub fn new(family: FlowFamily, speed: SpeedFunctionSpec, t_end: f64) -> Result<Self> {
        let spec = Self {
            family,
            speed,
            t_end,
            cfl: 0.9,
            sample_interval: (t_end / 200.0).max(1e-12),
            convergence_threshold: 1e-10,
            max_steps: 10_000_000,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Flow `∂_t X = (1 − u E_1/λ′) ν`.
    pub fn mean_curvature_type(n: usize, t_end: f64) -> Result<Self> {
        let speed = SpeedFunctionSpec::new(SpeedKind::Mean, PhiKind::Identity, n)?;
        Self::new(FlowFamily::WeightedVolumePreserving, speed, t_end)
    }

    /// Flow `∂_t X = (1/F − u/λ′) ν` with `F = E_k / E_{k−1}`.
    pub fn inverse_quotient_type(n: usize, k: usize, t_end: f64) -> Result<Self> {
        let speed = SpeedFunctionSpec::new(SpeedKind::Quotient { k, l: k - 1 }, PhiKind::NegInvPower(1.0), n)?;
        Self::new(FlowFamily::SxInverse, speed, t_end)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidInput(format!("t_end must be positive, got {}", self.t_end)));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidInput(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.sample_interval > 0.0) {
            return Err(Error::InvalidInput("sample_interval must be positive".into()));
        }
        if self.family == FlowFamily::Bgl {
            let (k, l) = self.speed.kind().indices();
            if l + 1 != k {
                return Err(Error::InvalidInput(format!(
                    "bgl flow needs F = E_k/E_(k-1), got k={k}, l={l}"
                )));
            }
        }
        Ok(())
    }

    /// `F = E_1` with the weighted-volume-preserving family.
    pub fn conserves_weighted_volume(&self) -> bool {
        self.family == FlowFamily::WeightedVolumePreserving
            && self.speed.kind() == SpeedKind::Mean
            && self.speed.phi() == PhiKind::Identity
    }
}

/// Per-node normal speed `𝓕`.
pub fn speed_field(spec: &FlowSpec, field: &CurvatureField, graph: &RadialGraph) -> Result<Vec<f64>> {
    let sp = &spec.speed;
    if sp.dim() != field.n {
        return Err(Error::InvalidInput(format!(
            "speed built for n={}, surface has n={}",
            sp.dim(),
            field.n
        )));
    }
    let need = sp.required_cone();
    let phi = sp.phi();
    // 1 − uE_1/λ′ = Δ_g λ′ / (nλ′); the flux form keeps ∫λ′𝓕 dμ = 0 exactly.
    let divergence = spec
        .conserves_weighted_volume()
        .then(|| induced_laplacian(field, graph, &field.lambda_prime));
    let mut out = Vec::with_capacity(field.len());
    for i in 0..field.len() {
        let e = field.e_at(i);
        let u = field.u[i];
        if !(u > 0.0) || !u.is_finite() {
            return Err(Error::LostStarShapedness(graph.grid().location(i)));
        }
        let cone = cone_index_of(e);
        if cone < need {
            return Err(Error::ConeViolation {
                cone_index: cone,
                required: need,
                location: Some(graph.grid().location(i)),
            });
        }
        let f = sp.value_from_e(e);
        let lp = field.lambda_prime[i];
        let positive = |s: f64| -> Result<f64> {
            if phi.needs_positive_argument() && !(s > 0.0) {
                Err(Error::ConeViolation {
                    cone_index: cone,
                    required: need.max(1),
                    location: Some(graph.grid().location(i)),
                })
            } else {
                Ok(s)
            }
        };
        let value = match spec.family {
            FlowFamily::WeightedVolumePreserving => match &divergence {
                Some(lap) => lap[i] / (field.n as f64 * lp),
                None => phi.value(1.0) - phi.value(positive(u * f / lp)?),
            },
            FlowFamily::SxInverse => phi.value(lp / u) - phi.value(positive(f)?),
            FlowFamily::Bgl => lp / positive(f)? - u,
        };
        out.push(value);
    }
    Ok(out)
}

/// Per-node coefficient of the leading second-order term of `∂_t φ`.
pub fn diffusion_coefficients(spec: &FlowSpec, field: &CurvatureField, speed: &[f64]) -> Vec<f64> {
    let sp = &spec.speed;
    let phi = sp.phi();
    let _ = speed;
    (0..field.len())
        .map(|i| {
            let e = field.e_at(i);
            let f = sp.value_from_e(e);
            let fdot = match sp.kind() {
                SpeedKind::Mean => 1.0 / field.n as f64,
                SpeedKind::Quotient { .. } => max_speed_derivative(sp, field.kappa_at(i)),
            };
            let (u, lp, lam) = (field.u[i], field.lambda_prime[i], field.lambda[i]);
            let weight = match spec.family {
                FlowFamily::WeightedVolumePreserving => phi.d1(u * f / lp) * u / lp,
                FlowFamily::SxInverse => phi.d1(f),
                FlowFamily::Bgl => lp / (f * f),
            };
            (weight * fdot / (lam * lam)).abs()
        })
        .collect()
}

fn max_speed_derivative(sp: &SpeedFunctionSpec, kappa: &[f64]) -> f64 {
    let p = match SymmetricPoint::from_slice(kappa) {
        Ok(p) => p,
        Err(_) => return f64::NAN,
    };
    match crate::symfun::eval_speed(sp, &p) {
        Ok(v) => v.grad.iter().fold(0.0f64, |m, g| m.max(g.abs())),
        Err(_) => f64::NAN,
    }
}

/// Right-hand sides of the first-variation formulas at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationRates {
    /// `∫(k u E_{k−1} + (n+1−k) λ′ E_k) 𝓕 dμ`, `k = 0..=n+1`.
    pub wl: Vec<f64>,
    /// Same integrand in absolute value; sets the discretization floor.
    pub wl_abs: Vec<f64>,
    /// `(n+1−k)/(n+1) ∫ E_k 𝓕 dμ`, `k = 0..=n`.
    pub w: Vec<f64>,
    pub w_abs: Vec<f64>,
}

pub fn variation_rates(field: &CurvatureField, speed: &[f64]) -> VariationRates {
    let n = field.n;
    let nf = n as f64;
    let mut r = VariationRates {
        wl: Vec::with_capacity(n + 2),
        wl_abs: Vec::with_capacity(n + 2),
        w: Vec::with_capacity(n + 1),
        w_abs: Vec::with_capacity(n + 1),
    };
    for k in 0..=n + 1 {
        let kf = k as f64;
        let g = |i: usize| {
            let a = if k > 0 { kf * field.u[i] * field.e_k(i, k - 1) } else { 0.0 };
            (a + (nf + 1.0 - kf) * field.lambda_prime[i] * field.e_k(i, k)) * speed[i]
        };
        r.wl.push(field.integrate(g));
        r.wl_abs.push(field.integrate(|i| g(i).abs()));
    }
    for k in 0..=n {
        let c = (nf + 1.0 - k as f64) / (nf + 1.0);
        r.w.push(c * field.integrate(|i| field.e_k(i, k) * speed[i]));
        r.w_abs.push(c * field.integrate(|i| (field.e_k(i, k) * speed[i]).abs()));
    }
    r
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorSample {
    pub t: f64,
    pub step: usize,
    pub min_phi: f64,
    pub max_phi: f64,
    pub max_grad_sq: f64,
    pub min_static_margin: f64,
    /// Smallest `λ′κ_i − u` over the surface.
    pub min_static_factor: f64,
    /// `min 2(n−1)/(n λ λ′ v)` over nodes.
    pub alpha_bound: f64,
    pub functionals: FunctionalRecord,
    pub rates: VariationRates,
    pub max_abs_speed: f64,
}

impl MonitorSample {
    pub fn from_state(graph: &RadialGraph, field: &CurvatureField, speed: &[f64], t: f64, step: usize) -> Self {
        let n = field.n as f64;
        let (min_phi, max_phi) = graph.phi_bounds();
        let alpha_bound = (0..field.len())
            .map(|i| 2.0 * (n - 1.0) / (n * field.lambda[i] * field.lambda_prime[i] * field.v[i]))
            .fold(f64::INFINITY, f64::min);
        MonitorSample {
            t,
            step,
            min_phi,
            max_phi,
            max_grad_sq: field.grad_sq.iter().cloned().fold(0.0, f64::max),
            min_static_margin: field.min_static_margin(),
            min_static_factor: field.min_static_factor(),
            alpha_bound,
            functionals: FunctionalRecord::evaluate(field, graph, t),
            rates: variation_rates(field, speed),
            max_abs_speed: speed.iter().fold(0.0f64, |m, s| m.max(s.abs())),
        }
    }

    /// Column names for [`csv_row`](Self::csv_row): the monitor scalars followed by
    /// the functional columns (minus their leading `t`).
    pub fn csv_header(n: usize) -> Vec<String> {
        let mut h: Vec<String> = [
            "t",
            "step",
            "min_phi",
            "max_phi",
            "max_grad_sq",
            "min_static_margin",
            "min_static_factor",
            "alpha_bound",
            "max_abs_speed",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        h.extend(FunctionalRecord::csv_header(n).into_iter().skip(1));
        h
    }

    pub fn csv_row(&self) -> Vec<String> {
        let f = |x: f64| format!("{x:.17e}");
        let mut row = vec![
            f(self.t),
            self.step.to_string(),
            f(self.min_phi),
            f(self.max_phi),
            f(self.max_grad_sq),
            f(self.min_static_margin),
            f(self.min_static_factor),
            f(self.alpha_bound),
            f(self.max_abs_speed),
        ];
        row.extend(self.functionals.csv_row().into_iter().skip(1));
        row
    }
}

#[derive(Debug, Clone)]
pub struct FlowState {
    pub graph: RadialGraph,
    pub t: f64,
    /// Last step taken.
    pub dt: f64,
    pub steps: usize,
    pub monitors: Vec<MonitorSample>,
    /// `(min φ, max φ)` of the initial surface.
    pub initial_phi_bounds: (f64, f64),
    /// Largest one-step increase of `max φ` or decrease of `min φ`.
    pub worst_barrier_step: f64,
    /// Smallest static margin seen at any step.
    pub min_static_margin_seen: f64,
    /// Steps that needed the halved-step retry.
    pub retries: usize,
    filter: Option<Arc<PolarFilter>>,
}

impl FlowState {
    pub fn new(graph: RadialGraph) -> Self {
        let filter = PolarFilter::new(graph.grid()).map(Arc::new);
        let bounds = graph.phi_bounds();
        Self {
            graph,
            t: 0.0,
            dt: 0.0,
            steps: 0,
            monitors: Vec::new(),
            initial_phi_bounds: bounds,
            worst_barrier_step: f64::NEG_INFINITY,
            min_static_margin_seen: f64::INFINITY,
            retries: 0,
            filter,
        }
    }

    fn record(&mut self, field: &CurvatureField, speed: &[f64]) {
        let s = MonitorSample::from_state(&self.graph, field, speed, self.t, self.steps);
        self.monitors.push(s);
    }
}

/// `∂_t φ`, with its field and speed at the same state.
fn tendency(
    graph: &RadialGraph,
    spec: &FlowSpec,
    filter: Option<&PolarFilter>,
) -> Result<(Vec<f64>, CurvatureField, Vec<f64>)> {
    let field = curvature(graph)?;
    let speed = speed_field(spec, &field, graph)?;
    let mut rate: Vec<f64> = (0..field.len())
        .map(|i| speed[i] * field.v[i] / field.lambda[i])
        .collect();
    if let Some(f) = filter {
        f.apply(&mut rate);
    }
    Ok((rate, field, speed))
}

/// Largest stable step for the current state.
pub fn stable_dt(spec: &FlowSpec, graph: &RadialGraph, field: &CurvatureField, speed: &[f64]) -> f64 {
    let d = diffusion_coefficients(spec, field, speed);
    let grid = graph.grid();
    let worst = (0..grid.len())
        .map(|i| d[i] * grid.stencil_radius(i))
        .fold(0.0f64, |m, x| if x.is_nan() { f64::INFINITY } else { m.max(x) });
    if worst > 0.0 {
        spec.cfl * 2.0 / worst
    } else {
        f64::INFINITY
    }
}

fn axpy(base: &[f64], a: f64, x: &[f64]) -> Vec<f64> {
    base.iter().zip(x).map(|(b, x)| b + a * x).collect()
}

/// One classical RK4 step of size `dt`, given the first stage.
fn rk4(
    state: &FlowState,
    spec: &FlowSpec,
    k1: &[f64],
    dt: f64,
) -> Result<Vec<f64>> {
    let phi = state.graph.phi();
    let filter = state.filter.as_deref();
    let stage = |y: Vec<f64>| -> Result<Vec<f64>> {
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { t: state.t });
        }
        let g = state.graph.with_phi(y).map_err(|_| Error::BlowUp { t: state.t })?;
        Ok(tendency(&g, spec, filter)?.0)
    };
    let k2 = stage(axpy(phi, 0.5 * dt, k1))?;
    let k3 = stage(axpy(phi, 0.5 * dt, &k2))?;
    let k4 = stage(axpy(phi, dt, &k3))?;
    Ok((0..phi.len())
        .map(|i| phi[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

fn advance(state: &mut FlowState, spec: &FlowSpec, k1: &[f64], dt: f64) -> Result<()> {
    let attempt = rk4(state, spec, k1, dt);
    let (phi, used) = match attempt {
        Ok(phi) if phi.iter().all(|v| v.is_finite()) && phi.iter().all(|&v| v < 0.0) => (phi, dt),
        Ok(_) | Err(Error::BlowUp { .. }) => {
            state.retries += 1;
            let half = 0.5 * dt;
            let phi = rk4(state, spec, k1, half)?;
            if phi.iter().any(|v| !v.is_finite() || *v >= 0.0) {
                return Err(Error::BlowUp { t: state.t });
            }
            (phi, half)
        }
        Err(e) => return Err(e),
    };
    let (old_lo, old_hi) = state.graph.phi_bounds();
    state.graph = state.graph.with_phi(phi).map_err(|_| Error::BlowUp { t: state.t })?;
    let (lo, hi) = state.graph.phi_bounds();
    state.worst_barrier_step = state.worst_barrier_step.max(hi - old_hi).max(old_lo - lo);
    state.t += used;
    state.dt = used;
    state.steps += 1;
    Ok(())
}

/// Advances by one step of size `min(stable dt, dt_max)`.
pub fn step_with_limit(state: &mut FlowState, spec: &FlowSpec, dt_max: f64) -> Result<()> {
    let (k1, field, speed) = tendency(&state.graph, spec, state.filter.as_deref())?;
    state.min_static_margin_seen = state.min_static_margin_seen.min(field.min_static_margin());
    let dt = stable_dt(spec, &state.graph, &field, &speed).min(dt_max);
    advance(state, spec, &k1, dt)
}

/// Advances by one step of exactly `dt`, ignoring the stability limit.
pub fn step_fixed(state: &mut FlowState, spec: &FlowSpec, dt: f64) -> Result<()> {
    let (k1, _, _) = tendency(&state.graph, spec, state.filter.as_deref())?;
    advance(state, spec, &k1, dt)
}

/// One step at the stable size.
pub fn step(state: &mut FlowState, spec: &FlowSpec) -> Result<()> {
    step_with_limit(state, spec, f64::INFINITY)
}

#[derive(Debug, Clone)]
pub struct FlowResult {
    pub state: FlowState,
    pub converged: bool,
    /// Slope of `−ln max|Dφ|²` over the last half of the samples.
    pub decay_rate: Option<f64>,
    /// Run minimum of `2(n−1)/(nλλ′v)`.
    pub alpha_hat: f64,
    /// Sphere-averaged final radius.
    pub r_final_mean: f64,
    pub r_final_spread: f64,
    /// Radius of the centered ball with the initial `Wl_0`, for flows conserving it.
    pub r_predicted: Option<f64>,
}

/// Failure with the state and monitor history at the last good step.
#[derive(Debug, Clone)]
pub struct FlowAbort {
    pub error: Error,
    pub state: FlowState,
}

impl std::fmt::Display for FlowAbort {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (t={:.6e}, step {})", self.error, self.state.t, self.state.steps)
    }
}

impl std::error::Error for FlowAbort {}

pub fn run(initial: RadialGraph, spec: &FlowSpec) -> std::result::Result<FlowResult, Box<FlowAbort>> {
    let mut state = FlowState::new(initial);
    if let Err(error) = spec.validate() {
        return Err(Box::new(FlowAbort { error, state }));
    }
    let mut next_sample = 0.0;
    let mut converged = false;
    let eps_t = 1e-12 * spec.t_end;
    loop {
        let (k1, field, speed) = match tendency(&state.graph, spec, state.filter.as_deref()) {
            Ok(v) => v,
            Err(error) => return Err(Box::new(FlowAbort { error, state })),
        };
        let max_grad = field.grad_sq.iter().cloned().fold(0.0, f64::max);
        let at_sample = state.t >= next_sample - eps_t;
        let done = state.t >= spec.t_end - eps_t || state.steps >= spec.max_steps;
        if max_grad < spec.convergence_threshold {
            converged = true;
        }
        if at_sample || done || converged {
            state.record(&field, &speed);
            while next_sample <= state.t + eps_t {
                next_sample += spec.sample_interval;
            }
        }
        if done || converged {
            break;
        }
        state.min_static_margin_seen = state.min_static_margin_seen.min(field.min_static_margin());
        let dt = stable_dt(spec, &state.graph, &field, &speed)
            .min(next_sample - state.t)
            .min(spec.t_end - state.t);
        if let Err(error) = advance(&mut state, spec, &k1, dt) {
            return Err(Box::new(FlowAbort { error, state }));
        }
    }
    Ok(finish(state, spec, converged))
}

fn finish(state: FlowState, spec: &FlowSpec, converged: bool) -> FlowResult {
    let grid = state.graph.grid();
    let w = grid.weights();
    let total: f64 = w.iter().sum();
    let r = state.graph.radius();
    let mean = r.iter().zip(&w).map(|(r, w)| r * w).sum::<f64>() / total;
    let spread = r.iter().fold(0.0f64, |m, x| m.max((x - mean).abs()));
    let alpha_hat = state
        .monitors
        .iter()
        .map(|m| m.alpha_bound)
        .fold(f64::INFINITY, f64::min);
    let r_predicted = if spec.conserves_weighted_volume() {
        state
            .monitors
            .first()
            .and_then(|m| ball_profile_inverse(grid.dim(), 0, ProfileKind::Weighted, m.functionals.wl[0]).ok())
    } else {
        None
    };
    let decay_rate = fit_decay_rate(&state.monitors);
    FlowResult {
        state,
        converged,
        decay_rate,
        alpha_hat,
        r_final_mean: mean,
        r_final_spread: spread,
        r_predicted,
    }
}

/// Least-squares slope of `−ln max|Dφ|²` against `t` over the last half of the
/// samples with positive gradient.
pub fn fit_decay_rate(monitors: &[MonitorSample]) -> Option<f64> {
    let tail = &monitors[monitors.len() / 2..];
    let pts: Vec<(f64, f64)> = tail
        .iter()
        .filter(|m| m.max_grad_sq > 0.0)
        .map(|m| (m.t, m.max_grad_sq.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let nf = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return None;
    }
    Some(-sxy / sxx)
}

/// Result of comparing `max|Dφ|²(t)` with `max|Dφ|²(0) e^{−α̂ t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayCheck {
    pub alpha_hat: f64,
    /// Largest `max|Dφ|²(t) / (max|Dφ|²(0) e^{−α̂ t})` over the samples.
    pub worst_ratio: f64,
    pub holds: bool,
}

pub fn gradient_decay_check(monitors: &[MonitorSample], rel_slack: f64) -> Option<DecayCheck> {
    let first = monitors.first()?;
    let alpha_hat = monitors
        .iter()
        .map(|m| m.alpha_bound)
        .fold(f64::INFINITY, f64::min);
    let g0 = first.max_grad_sq;
    let worst_ratio = monitors
        .iter()
        .map(|m| {
            let bound = g0 * (-alpha_hat * (m.t - first.t)).exp();
            if bound > 0.0 {
                m.max_grad_sq / bound
            } else if m.max_grad_sq == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max);
    Some(DecayCheck {
        alpha_hat,
        worst_ratio,
        holds: worst_ratio <= 1.0 + rel_slack,
    })
}

/// Agreement of a measured rate with its first-variation formula.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalEntry {
    /// `"Wl_k"` or `"W_k"`.
    pub name: String,
    pub max_abs_residual: f64,
    pub max_abs_rhs: f64,
    /// Largest `|measured − rhs| / (rel_tol |rhs| + floor)`; at most 1 when consistent.
    pub worst_ratio: f64,
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationalReport {
    pub entries: Vec<VariationalEntry>,
    pub rel_tol: f64,
    pub floor_factor: f64,
}

impl VariationalReport {
    pub fn all_consistent(&self) -> bool {
        self.entries.iter().all(|e| e.consistent)
    }

    pub fn entry(&self, name: &str) -> Option<&VariationalEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

/// Second-order three-point derivative at the middle of possibly uneven samples.
fn three_point(t: [f64; 3], y: [f64; 3]) -> f64 {
    let h1 = t[1] - t[0];
    let h2 = t[2] - t[1];
    -h2 / (h1 * (h1 + h2)) * y[0] + (h2 - h1) / (h1 * h2) * y[1] + h1 / (h2 * (h1 + h2)) * y[2]
}

/// Compares centered differences of each `W_k` and `W_k^{λ′}` with the surface
/// integrals stored at the samples. The tolerance at a sample is
/// `rel_tol |rhs| + floor_factor · h² · ∫|integrand|` plus the round-off of
/// differencing the stored values.
pub fn variational_consistency(
    history: &[MonitorSample],
    h: f64,
    rel_tol: f64,
    floor_factor: f64,
) -> Result<VariationalReport> {
    if history.len() < 3 {
        return Err(Error::NeedsMoreSamples {
            have: history.len(),
            need: 3,
        });
    }
    let n = history[0].functionals.n;
    let mut entries = Vec::new();
    let mut assess = |name: String, value: &dyn Fn(&MonitorSample) -> f64, rhs: &dyn Fn(&MonitorSample) -> (f64, f64)| {
        let mut max_res = 0.0f64;
        let mut max_rhs = 0.0f64;
        let mut worst = 0.0f64;
        for w in history.windows(3) {
            if !(w[1].t > w[0].t && w[2].t > w[1].t) {
                continue;
            }
            let measured = three_point([w[0].t, w[1].t, w[2].t], [value(&w[0]), value(&w[1]), value(&w[2])]);
            let (r, r_abs) = rhs(&w[1]);
            let res = (measured - r).abs();
            let dt_min = (w[1].t - w[0].t).min(w[2].t - w[1].t);
            let tol = rel_tol * r.abs() + floor_factor * h * h * r_abs + 1e-14 * value(&w[1]).abs() / dt_min;
            max_res = max_res.max(res);
            max_rhs = max_rhs.max(r.abs());
            worst = worst.max(if tol > 0.0 { res / tol } else if res == 0.0 { 0.0 } else { f64::INFINITY });
        }
        entries.push(VariationalEntry {
            name,
            max_abs_residual: max_res,
            max_abs_rhs: max_rhs,
            worst_ratio: worst,
            consistent: worst <= 1.0,
        });
    };
    for k in 0..=n + 1 {
        assess(
            format!("Wl_{k}"),
            &|m: &MonitorSample| m.functionals.wl[k],
            &|m: &MonitorSample| (m.rates.wl[k], m.rates.wl_abs[k]),
        );
    }
    for k in 0..=n {
        assess(
            format!("W_{k}"),
            &|m: &MonitorSample| m.functionals.w[k],
            &|m: &MonitorSample| (m.rates.w[k], m.rates.w_abs[k]),
        );
    }
    Ok(VariationalReport {
        entries,
        rel_tol,
        floor_factor,
    })
}

/// Rate of `λ′` at fixed direction over one step, against the normal-motion identity.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaPrimeRate {
    /// `(λ′(t+dt) − λ′(t)) / dt` per node.
    pub measured: Vec<f64>,
    /// Trapezoidal average of `u 𝓕 v²` at the two ends; equals `u𝓕` plus the
    /// tangential transport of `λ′` when following rays instead of normals.
    pub predicted: Vec<f64>,
    pub max_abs_residual: f64,
}

pub fn lambda_prime_rate_check(graph: &RadialGraph, spec: &FlowSpec, dt: f64) -> Result<LambdaPrimeRate> {
    let mut state = FlowState::new(graph.clone());
    let f0 = curvature(graph)?;
    let s0 = speed_field(spec, &f0, graph)?;
    step_fixed(&mut state, spec, dt)?;
    let f1 = curvature(&state.graph)?;
    let s1 = speed_field(spec, &f1, &state.graph)?;
    let pred = |f: &CurvatureField, s: &[f64], i: usize| f.u[i] * s[i] * f.v[i] * f.v[i];
    let measured: Vec<f64> = (0..f0.len())
        .map(|i| (f1.lambda_prime[i] - f0.lambda_prime[i]) / dt)
        .collect();
    let predicted: Vec<f64> = (0..f0.len())
        .map(|i| 0.5 * (pred(&f0, &s0, i) + pred(&f1, &s1, i)))
        .collect();
    let max_abs_residual = measured
        .iter()
        .zip(&predicted)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(LambdaPrimeRate {
        measured,
        predicted,
        max_abs_residual,
    })
}
