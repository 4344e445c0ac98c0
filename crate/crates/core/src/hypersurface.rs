//! Star-shaped hypersurfaces of `H^{n+1}` as radial graphs `r(θ)` over `S^n`.
//!
//! The graph is stored through `φ = Ψ(r)` with `Ψ(r) = ln tanh(r/2)`, the
//! antiderivative of `1/sinh r` that vanishes at infinity. So `φ < 0`, and the
//! additive constant never enters a derivative.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{GridMode, Jet, SphereGrid};
use crate::symfun::{binomial, cone_index_of};

/// `Ψ(r) = ln tanh(r/2)`.
pub fn psi(r: f64) -> f64 {
    let q = (-r).exp();
    (-q).ln_1p() - q.ln_1p()
}

/// Inverse of [`psi`]: `r = ln(1 + e^φ) − ln(−expm1 φ)`; `NaN` for `φ >= 0`.
pub fn psi_inverse(phi: f64) -> f64 {
    if !(phi < 0.0) {
        return f64::NAN;
    }
    phi.exp().ln_1p() - (-phi.exp_m1()).ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGraph {
    grid: Arc<SphereGrid>,
    phi: Vec<f64>,
    r: Vec<f64>,
}

impl RadialGraph {
    pub fn from_phi(grid: Arc<SphereGrid>, phi: Vec<f64>) -> Result<Self> {
        if phi.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "phi has {} values, grid has {} nodes",
                phi.len(),
                grid.len()
            )));
        }
        let mut r = Vec::with_capacity(phi.len());
        for (i, &p) in phi.iter().enumerate() {
            let ri = psi_inverse(p);
            if !ri.is_finite() || ri <= 0.0 {
                return Err(Error::InvalidShape(format!(
                    "phi={p} at {} does not give a finite positive radius",
                    grid.location(i)
                )));
            }
            r.push(ri);
        }
        Ok(Self { grid, phi, r })
    }

    pub fn from_radius(grid: Arc<SphereGrid>, r: Vec<f64>) -> Result<Self> {
        if r.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "r has {} values, grid has {} nodes",
                r.len(),
                grid.len()
            )));
        }
        if let Some(i) = r.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidShape(format!(
                "radius {} at {} is not positive",
                r[i],
                grid.location(i)
            )));
        }
        let phi = r.iter().map(|&x| psi(x)).collect();
        Ok(Self { grid, phi, r })
    }

    pub fn grid(&self) -> &SphereGrid {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn radius(&self) -> &[f64] {
        &self.r
    }

    /// `(min φ, max φ)`.
    pub fn phi_bounds(&self) -> (f64, f64) {
        self.phi
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| {
                (lo.min(p), hi.max(p))
            })
    }

    /// Same grid, new `φ`.
    pub fn with_phi(&self, phi: Vec<f64>) -> Result<Self> {
        Self::from_phi(self.grid.clone(), phi)
    }

    /// Profile table: `θ r` per line for axisymmetric grids, `θ ξ r` on full grids.
    pub fn profile_table(&self) -> String {
        let mut s = String::from("# phi = ln tanh(r/2)\n");
        match self.grid.mode() {
            GridMode::Axisym => {
                s.push_str("# theta r\n");
                for (i, r) in self.r.iter().enumerate() {
                    s.push_str(&format!("{:e} {:e}\n", self.grid.theta_of(i), r));
                }
            }
            GridMode::Full2d => {
                s.push_str("# theta xi r\n");
                for (i, r) in self.r.iter().enumerate() {
                    s.push_str(&format!(
                        "{:e} {:e} {:e}\n",
                        self.grid.theta_of(i),
                        self.grid.xi_of(i).unwrap_or(0.0),
                        r
                    ));
                }
            }
        }
        s
    }
}

/// Analytic shapes and tabulated profiles, all axisymmetric about `θ = 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum ShapeSpec {
    CenteredSphere { r0: f64 },
    /// Geodesic sphere of radius `rho` whose center lies at distance `d` along `θ = 0`.
    OffcenterSphere { rho: f64, d: f64 },
    /// `r(θ) = r0 + eps cos(m θ)`.
    PerturbedSphere { r0: f64, eps: f64, m: u32 },
    /// `(θ, r)` pairs, linearly resampled.
    CustomProfile { table: Vec<(f64, f64)> },
}

/// Radius of the off-center sphere along direction `θ`, from
/// `cosh ρ = cosh d cosh r − sinh d sinh r cos θ`, by Newton safeguarded with bisection.
pub fn offcenter_radius(rho: f64, d: f64, theta: f64) -> f64 {
    let (a, b, c) = (d.cosh(), d.sinh() * theta.cos(), rho.cosh());
    let g = |r: f64| a * r.cosh() - b * r.sinh() - c;
    let dg = |r: f64| a * r.sinh() - b * r.cosh();
    let (mut lo, mut hi) = (rho - d, rho + d);
    if hi - lo <= 0.0 {
        return rho;
    }
    let mut r = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = g(r);
        if f > 0.0 {
            hi = r;
        } else {
            lo = r;
        }
        let slope = dg(r);
        let mut next = if slope > 0.0 { r - f / slope } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - r).abs() <= 1e-15 * r.max(1.0) {
            return next;
        }
        r = next;
    }
    r
}

pub fn make_shape(grid: Arc<SphereGrid>, kind: &ShapeSpec) -> Result<RadialGraph> {
    let thetas: Vec<f64> = (0..grid.len()).map(|i| grid.theta_of(i)).collect();
    let r: Vec<f64> = match kind {
        ShapeSpec::CenteredSphere { r0 } => {
            if !(*r0 > 0.0 && r0.is_finite()) {
                return Err(Error::InvalidShape(format!("radius {r0} must be positive")));
            }
            vec![*r0; grid.len()]
        }
        ShapeSpec::OffcenterSphere { rho, d } => {
            if !(*rho > 0.0) || !(*d >= 0.0) {
                return Err(Error::InvalidShape(format!(
                    "need rho > 0 and d >= 0, got rho={rho}, d={d}"
                )));
            }
            if d >= rho {
                return Err(Error::NotStarShaped(format!(
                    "origin lies outside the geodesic ball (d={d} >= rho={rho})"
                )));
            }
            thetas.iter().map(|&t| offcenter_radius(*rho, *d, t)).collect()
        }
        ShapeSpec::PerturbedSphere { r0, eps, m } => {
            if !(r0 - eps.abs() > 0.0) {
                return Err(Error::InvalidShape(format!(
                    "r0={r0} with |eps|={} leaves non-positive radii",
                    eps.abs()
                )));
            }
            thetas
                .iter()
                .map(|&t| r0 + eps * (*m as f64 * t).cos())
                .collect()
        }
        ShapeSpec::CustomProfile { table } => {
            validate_table(table)?;
            thetas.iter().map(|&t| interpolate(table, t)).collect()
        }
    };
    RadialGraph::from_radius(grid, r)
}

fn validate_table(table: &[(f64, f64)]) -> Result<()> {
    if table.is_empty() {
        return Err(Error::InvalidShape("empty profile table".into()));
    }
    for w in table.windows(2) {
        if !(w[1].0 > w[0].0) {
            return Err(Error::InvalidShape(
                "profile angles must be strictly increasing".into(),
            ));
        }
    }
    if let Some(&(t, r)) = table.iter().find(|&&(t, r)| !(r > 0.0) || !t.is_finite()) {
        return Err(Error::InvalidShape(format!(
            "profile entry ({t}, {r}) needs finite theta and r > 0"
        )));
    }
    Ok(())
}

/// Piecewise-linear interpolation, constant beyond the table ends.
fn interpolate(table: &[(f64, f64)], t: f64) -> f64 {
    let first = table[0];
    let last = table[table.len() - 1];
    if t <= first.0 {
        return first.1;
    }
    if t >= last.0 {
        return last.1;
    }
    let i = table.partition_point(|&(x, _)| x <= t);
    let (t0, r0) = table[i - 1];
    let (t1, r1) = table[i];
    r0 + (r1 - r0) * (t - t0) / (t1 - t0)
}

/// Parses a two-column `θ r` table; `#` starts a comment, separators are
/// whitespace or commas.
pub fn parse_profile_table(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .collect();
        if cols.len() != 2 {
            return Err(Error::InvalidInput(format!(
                "line {}: expected 2 columns, got {}",
                lineno + 1,
                cols.len()
            )));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::InvalidInput(format!("line {}: {e}", lineno + 1)))
        };
        out.push((parse(cols[0])?, parse(cols[1])?));
    }
    validate_table(&out)?;
    Ok(out)
}

/// Per-node geometry of a radial graph.
///
/// Tensors are stored in the `σ`-orthonormal frame `(e_θ, e_ξ / sin θ)` on full
/// grids and in the `(e_θ, angular)` frame on axisymmetric grids, where the
/// angular block is a multiple of the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureField {
    pub n: usize,
    pub r: Vec<f64>,
    pub lambda: Vec<f64>,
    pub lambda_prime: Vec<f64>,
    /// `|Dφ|²`.
    pub grad_sq: Vec<f64>,
    /// `√(1 + |Dφ|²)`.
    pub v: Vec<f64>,
    /// Support function `λ / v`.
    pub u: Vec<f64>,
    /// Induced metric `[g11, g12, g22]`.
    pub metric: Vec<[f64; 3]>,
    /// Weingarten map `[h_1^1, h_1^2, h_2^1, h_2^2]`.
    pub weingarten: Vec<[f64; 4]>,
    /// Principal curvatures, ascending, node-major with stride `n`.
    pub kappa: Vec<f64>,
    /// `E_0..E_n`, node-major with stride `n + 1`.
    pub e: Vec<f64>,
    /// `min κ − u/λ′`, the smallest generalized eigenvalue of `(h − (u/λ′) g, g)`.
    pub static_margin: Vec<f64>,
    /// `λ^n v` times the sphere quadrature weight.
    pub area_weight: Vec<f64>,
    /// `Δ_σ φ`.
    pub laplacian_phi: Vec<f64>,
}

impl CurvatureField {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn kappa_at(&self, i: usize) -> &[f64] {
        &self.kappa[i * self.n..(i + 1) * self.n]
    }

    pub fn e_at(&self, i: usize) -> &[f64] {
        &self.e[i * (self.n + 1)..(i + 1) * (self.n + 1)]
    }

    /// `E_k` at node `i`; zero for `k > n`.
    pub fn e_k(&self, i: usize, k: usize) -> f64 {
        if k > self.n {
            0.0
        } else {
            self.e[i * (self.n + 1) + k]
        }
    }

    pub fn cone_index(&self, i: usize) -> usize {
        cone_index_of(self.e_at(i))
    }

    pub fn min_static_margin(&self) -> f64 {
        self.static_margin.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Smallest `λ′ κ_i − u` over nodes and directions.
    pub fn min_static_factor(&self) -> f64 {
        (0..self.len())
            .map(|i| self.lambda_prime[i] * self.kappa_at(i)[0] - self.u[i])
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest spread `max κ − min κ` over nodes.
    pub fn max_umbilicity_defect(&self) -> f64 {
        (0..self.len())
            .map(|i| {
                let k = self.kappa_at(i);
                k[self.n - 1] - k[0]
            })
            .fold(0.0, f64::max)
    }

    /// `∫_M f dμ` by the grid quadrature.
    pub fn integrate<F: Fn(usize) -> f64>(&self, f: F) -> f64 {
        let terms: Vec<f64> = (0..self.len()).map(|i| f(i) * self.area_weight[i]).collect();
        pairwise_sum(&terms)
    }
}

/// Deterministic pairwise summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Ascending eigenvalues of a symmetric 2×2 matrix.
fn sym2_eigenvalues(a11: f64, a12: f64, a22: f64) -> (f64, f64) {
    let mean = 0.5 * (a11 + a22);
    let rad = (0.5 * (a11 - a22)).hypot(a12);
    (mean - rad, mean + rad)
}

/// Normalized `E_0..E_n` of `kappa` written into `out`.
fn elementary_into(kappa: &[f64], out: &mut [f64]) {
    let n = kappa.len();
    out.iter_mut().for_each(|v| *v = 0.0);
    out[0] = 1.0;
    for (i, &x) in kappa.iter().enumerate() {
        for k in (1..=i + 1).rev() {
            out[k] += x * out[k - 1];
        }
    }
    for (k, v) in out.iter_mut().enumerate().skip(1) {
        *v /= binomial(n, k);
    }
}

/// Covariant gradient and Hessian of `φ` at every node.
pub fn sphere_gradient_hessian(graph: &RadialGraph) -> Vec<Jet> {
    graph.grid().jets(graph.phi())
}

pub fn curvature(graph: &RadialGraph) -> Result<CurvatureField> {
    let grid = graph.grid();
    let n = grid.dim();
    let len = grid.len();
    let jets = sphere_gradient_hessian(graph);

    let mut f = CurvatureField {
        n,
        r: graph.radius().to_vec(),
        lambda: Vec::with_capacity(len),
        lambda_prime: Vec::with_capacity(len),
        grad_sq: Vec::with_capacity(len),
        v: Vec::with_capacity(len),
        u: Vec::with_capacity(len),
        metric: Vec::with_capacity(len),
        weingarten: Vec::with_capacity(len),
        kappa: Vec::with_capacity(len * n),
        e: vec![0.0; len * (n + 1)],
        static_margin: Vec::with_capacity(len),
        area_weight: Vec::with_capacity(len),
        laplacian_phi: Vec::with_capacity(len),
    };
    let mut kap = vec![0.0; n];

    for (i, jet) in jets.iter().enumerate() {
        let r = graph.radius()[i];
        let lam = r.sinh();
        let lamp = r.cosh();
        let gsq = jet.grad_norm_sq();
        let v = (1.0 + gsq).sqrt();
        let u = lam / v;
        let base = lamp / (lam * v);
        let lam2 = lam * lam;

        match *jet {
            Jet::Axisym { d1, d2, cot_theta } => {
                let k_theta = base - d2 / (lam * v * v * v);
                let k_ang = base - cot_theta * d1 / (lam * v);
                f.metric.push([lam2 * v * v, 0.0, lam2]);
                f.weingarten.push([k_theta, 0.0, 0.0, k_ang]);
                kap[0] = k_theta;
                for k in kap.iter_mut().skip(1) {
                    *k = k_ang;
                }
            }
            Jet::Full {
                grad,
                hess,
                sin_theta,
            } => {
                if !(sin_theta > 0.0) || !v.is_finite() {
                    return Err(Error::DegenerateMetric(grid.location(i)));
                }
                // orthonormal-frame components
                let p = [grad[0], grad[1] / sin_theta];
                let h11 = hess[0];
                let h12 = hess[1] / sin_theta;
                let h22 = hess[2] / (sin_theta * sin_theta);
                let g = [lam2 * (1.0 + p[0] * p[0]), lam2 * p[0] * p[1], lam2 * (1.0 + p[1] * p[1])];
                let det = g[0] * g[2] - g[1] * g[1];
                if !(det > 0.0) || !(g[0] > 0.0) {
                    return Err(Error::DegenerateMetric(grid.location(i)));
                }
                // (I + p pᵀ)^{-1/2} = I + (1/v − 1) p̂ p̂ᵀ
                let (c11, c12, c22) = if gsq > 0.0 {
                    let a = (1.0 / v - 1.0) / gsq;
                    (1.0 + a * p[0] * p[0], a * p[0] * p[1], 1.0 + a * p[1] * p[1])
                } else {
                    (1.0, 0.0, 1.0)
                };
                // M = C H C
                let t11 = c11 * h11 + c12 * h12;
                let t12 = c11 * h12 + c12 * h22;
                let t21 = c12 * h11 + c22 * h12;
                let t22 = c12 * h12 + c22 * h22;
                let m11 = t11 * c11 + t12 * c12;
                let m12 = t11 * c12 + t12 * c22;
                let m22 = t21 * c12 + t22 * c22;
                let (mu_lo, mu_hi) = sym2_eigenvalues(m11, m12, m22);
                let s = 1.0 / (lam * v);
                kap[0] = base - mu_hi * s;
                kap[1] = base - mu_lo * s;
                // W = base I − s (I − p pᵀ / v²) H
                let v2 = v * v;
                let a11 = 1.0 - p[0] * p[0] / v2;
                let a12 = -p[0] * p[1] / v2;
                let a22 = 1.0 - p[1] * p[1] / v2;
                let w11 = base - s * (a11 * h11 + a12 * h12);
                let w12 = -s * (a11 * h12 + a12 * h22);
                let w21 = -s * (a12 * h11 + a22 * h12);
                let w22 = base - s * (a12 * h12 + a22 * h22);
                f.metric.push(g);
                f.weingarten.push([w11, w12, w21, w22]);
            }
        }
        if kap.iter().any(|k| !k.is_finite()) {
            return Err(Error::DegenerateMetric(grid.location(i)));
        }
        kap.sort_by(|a, b| a.partial_cmp(b).unwrap());
        elementary_into(&kap, &mut f.e[i * (n + 1)..(i + 1) * (n + 1)]);
        f.kappa.extend_from_slice(&kap);
        f.static_margin.push(kap[0] - u / lamp);
        f.area_weight.push(lam.powi(n as i32) * v * grid.weight(i));
        f.laplacian_phi.push(jet.laplacian(n));
        f.lambda.push(lam);
        f.lambda_prime.push(lamp);
        f.grad_sq.push(gsq);
        f.v.push(v);
        f.u.push(u);
    }
    Ok(f)
}

/// Laplace–Beltrami operator of the induced metric applied to a nodal function,
/// in finite-volume form (fluxes through cell faces, zero through the poles).
pub fn induced_laplacian(field: &CurvatureField, graph: &RadialGraph, values: &[f64]) -> Vec<f64> {
    let grid = graph.grid();
    let n = grid.dim();
    let h = grid.h_theta();
    let nt = grid.n_theta();
    let mut out = vec![0.0; grid.len()];
    match grid.mode() {
        GridMode::Axisym => {
            // √g g^{θθ} = λ^{n−2} sin^{n−1}θ / v
            let a: Vec<f64> = (0..nt)
                .map(|j| field.lambda[j].powi(n as i32 - 2) / field.v[j])
                .collect();
            let flux = |j: usize| -> f64 {
                // face between j and j+1
                let tf = (j + 1) as f64 * h;
                0.5 * (a[j] + a[j + 1]) * tf.sin().powi(n as i32 - 1) * (values[j + 1] - values[j]) / h
            };
            for j in 0..nt {
                let up = if j + 1 < nt { flux(j) } else { 0.0 };
                let down = if j > 0 { flux(j - 1) } else { 0.0 };
                let vol = h * grid.cell_sine(j) * field.lambda[j].powi(n as i32) * field.v[j];
                out[j] = (up - down) / vol;
            }
        }
        GridMode::Full2d => {
            let nx = grid.n_xi();
            let hx = grid.h_xi();
            let jets = sphere_gradient_hessian(graph);
            // nodal derivatives of the function
            let fjets = grid.jets(values);
            let mut k_tt = vec![0.0; grid.len()]; // K^{θθ} / sin θ
            let mut k_tx_fx = vec![0.0; grid.len()]; // K^{θξ} f_ξ / sin θ
            let mut k_xx = vec![0.0; grid.len()]; // K^{ξξ}
            let mut k_xt_ft = vec![0.0; grid.len()]; // K^{ξθ} f_θ
            for i in 0..grid.len() {
                let (pt, px, s) = match jets[i] {
                    Jet::Full { grad, sin_theta, .. } => (grad[0], grad[1], sin_theta),
                    _ => unreachable!(),
                };
                let (ft, fx) = match fjets[i] {
                    Jet::Full { grad, .. } => (grad[0], grad[1]),
                    _ => unreachable!(),
                };
                let v = field.v[i];
                k_tt[i] = (s * s + px * px) / (s * s * v);
                k_tx_fx[i] = -pt * px / (s * s * v) * fx;
                k_xx[i] = (1.0 + pt * pt) / (s * v);
                k_xt_ft[i] = -pt * px / (s * v) * ft;
            }
            let theta_flux = |j: usize, k: usize| -> f64 {
                let a = grid.index(j, k);
                let b = grid.index(j + 1, k);
                let sf = ((j + 1) as f64 * h).sin();
                sf * (0.5 * (k_tt[a] + k_tt[b]) * (values[b] - values[a]) / h
                    + 0.5 * (k_tx_fx[a] + k_tx_fx[b]))
            };
            for j in 0..nt {
                for k in 0..nx {
                    let i = grid.index(j, k);
                    let up = if j + 1 < nt { theta_flux(j, k) } else { 0.0 };
                    let down = if j > 0 { theta_flux(j - 1, k) } else { 0.0 };
                    let kp = grid.index(j, (k + 1) % nx);
                    let km = grid.index(j, (k + nx - 1) % nx);
                    let east = 0.5 * (k_xx[i] + k_xx[kp]) * (values[kp] - values[i]) / hx
                        + 0.5 * (k_xt_ft[i] + k_xt_ft[kp]);
                    let west = 0.5 * (k_xx[i] + k_xx[km]) * (values[i] - values[km]) / hx
                        + 0.5 * (k_xt_ft[i] + k_xt_ft[km]);
                    let vol = grid.cell_sine(j) * field.lambda[i].powi(2) * field.v[i];
                    out[i] = ((up - down) / h + (east - west) / hx) / vol;
                }
            }
        }
    }
    out
}

/// Pointwise residual of the traced Hessian identity `Δ_g λ′ = n (λ′ − u E_1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lemma24Report {
    pub residual: Vec<f64>,
    pub max_abs: f64,
    /// Area-weighted root mean square.
    pub rms: f64,
}

pub fn lemma24_residuals(field: &CurvatureField, graph: &RadialGraph) -> Lemma24Report {
    let lap = induced_laplacian(field, graph, &field.lambda_prime);
    let n = field.n as f64;
    let residual: Vec<f64> = (0..field.len())
        .map(|i| lap[i] - n * (field.lambda_prime[i] - field.u[i] * field.e_k(i, 1)))
        .collect();
    let max_abs = residual.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let area = field.integrate(|_| 1.0);
    let rms = (field.integrate(|i| residual[i] * residual[i]) / area).sqrt();
    Lemma24Report {
        residual,
        max_abs,
        rms,
    }
}
