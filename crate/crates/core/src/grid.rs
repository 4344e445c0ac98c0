//! Discretizations of the unit sphere `S^n`.
//!
//! Both modes use a polar grid staggered by half a cell from the poles:
//! `θ_j = (j + ½) h_θ`, `h_θ = π / N_θ`. The full lat–long grid (n = 2 only) adds
//! `ξ_k = k h_ξ`, `h_ξ = 2π / N_ξ`, and closes the poles with the across-pole
//! reflection `φ(−θ, ξ) = φ(θ, ξ + π)`. The axisymmetric grid stores a profile
//! in `θ` with even reflection at both poles.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::{num_complex::Complex, Fft, FftPlanner};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, NodeLocation, Result};

/// Smallest supported number of polar nodes.
pub const MIN_THETA_NODES: usize = 8;

/// Area of the unit sphere `S^dim ⊂ R^{dim+1}`.
pub fn sphere_area(dim: usize) -> f64 {
    let a = (dim as f64 + 1.0) / 2.0;
    2.0 * (a * PI.ln() - ln_gamma(a)).exp()
}

/// `∫_0^θ sin^m s ds`.
fn sin_power_integral(m: usize, theta: f64) -> f64 {
    match m {
        0 => theta,
        1 => 1.0 - theta.cos(),
        _ => {
            let mf = m as f64;
            -theta.sin().powi(m as i32 - 1) * theta.cos() / mf
                + (mf - 1.0) / mf * sin_power_integral(m - 2, theta)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridMode {
    /// `N_θ × N_ξ` latitude–longitude grid on `S^2`.
    Full2d,
    /// Profile in the polar angle on `S^n`, any `n >= 2`.
    Axisym,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphereGrid {
    mode: GridMode,
    n: usize,
    n_theta: usize,
    n_xi: usize,
    h_theta: f64,
    h_xi: f64,
    theta: Vec<f64>,
    sin_theta: Vec<f64>,
    cot_theta: Vec<f64>,
    /// `σ`-measure of one cell in row `j`.
    cell_measure: Vec<f64>,
}

impl SphereGrid {
    pub fn axisym(n: usize, n_theta: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!("axisym grid needs n >= 2, got {n}")));
        }
        Self::build(GridMode::Axisym, n, n_theta, 1)
    }

    pub fn full2d(n_theta: usize, n_xi: usize) -> Result<Self> {
        if n_xi < 4 || n_xi % 2 != 0 {
            return Err(Error::Resolution(format!(
                "N_xi must be even and >= 4, got {n_xi}"
            )));
        }
        Self::build(GridMode::Full2d, 2, n_theta, n_xi)
    }

    pub fn new(mode: GridMode, n: usize, n_theta: usize, n_xi: usize) -> Result<Self> {
        match mode {
            GridMode::Full2d => {
                if n != 2 {
                    return Err(Error::InvalidInput(format!("full2d grid requires n = 2, got {n}")));
                }
                Self::full2d(n_theta, n_xi)
            }
            GridMode::Axisym => Self::axisym(n, n_theta),
        }
    }

    fn build(mode: GridMode, n: usize, n_theta: usize, n_xi: usize) -> Result<Self> {
        if n_theta < MIN_THETA_NODES {
            return Err(Error::Resolution(format!(
                "N_theta = {n_theta} < {MIN_THETA_NODES}"
            )));
        }
        let h_theta = PI / n_theta as f64;
        let h_xi = 2.0 * PI / n_xi as f64;
        let theta: Vec<f64> = (0..n_theta).map(|j| (j as f64 + 0.5) * h_theta).collect();
        let sin_theta = theta.iter().map(|t| t.sin()).collect();
        let cot_theta = theta.iter().map(|t| 1.0 / t.tan()).collect();
        let (power, factor) = match mode {
            GridMode::Full2d => (1, h_xi),
            GridMode::Axisym => (n - 1, sphere_area(n - 1)),
        };
        let cell_measure = theta
            .iter()
            .map(|&t| {
                let a = t - 0.5 * h_theta;
                let b = t + 0.5 * h_theta;
                factor * (sin_power_integral(power, b) - sin_power_integral(power, a))
            })
            .collect();
        Ok(Self {
            mode,
            n,
            n_theta,
            n_xi,
            h_theta,
            h_xi,
            theta,
            sin_theta,
            cot_theta,
            cell_measure,
        })
    }

    pub fn mode(&self) -> GridMode {
        self.mode
    }

    /// Dimension of the sphere (and of the hypersurface).
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    /// Azimuthal node count; 1 on axisymmetric grids.
    pub fn n_xi(&self) -> usize {
        self.n_xi
    }

    pub fn h_theta(&self) -> f64 {
        self.h_theta
    }

    pub fn h_xi(&self) -> f64 {
        self.h_xi
    }

    /// Resolution used in all `O(h²)` tolerances.
    pub fn h(&self) -> f64 {
        self.h_theta
    }

    pub fn len(&self) -> usize {
        self.n_theta * self.n_xi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, idx: usize) -> usize {
        idx / self.n_xi
    }

    pub fn col(&self, idx: usize) -> usize {
        idx % self.n_xi
    }

    pub fn index(&self, j: usize, k: usize) -> usize {
        j * self.n_xi + k
    }

    pub fn thetas(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_of(&self, idx: usize) -> f64 {
        self.theta[self.row(idx)]
    }

    pub fn xi_of(&self, idx: usize) -> Option<f64> {
        match self.mode {
            GridMode::Full2d => Some(self.col(idx) as f64 * self.h_xi),
            GridMode::Axisym => None,
        }
    }

    pub fn location(&self, idx: usize) -> NodeLocation {
        NodeLocation {
            index: idx,
            theta: self.theta_of(idx),
            xi: self.xi_of(idx),
        }
    }

    /// Quadrature weight of a node for `∫_{S^n} · dσ`; weights of a row sum to the
    /// exact measure of its latitude band.
    pub fn weight(&self, idx: usize) -> f64 {
        self.cell_measure[self.row(idx)]
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.weight(i)).collect()
    }

    /// Cell measure of row `j` divided by `h_θ` (and `h_ξ`): the finite-volume stand-in
    /// for `sin^{n−1} θ_j`.
    pub(crate) fn cell_sine(&self, j: usize) -> f64 {
        match self.mode {
            GridMode::Full2d => self.cell_measure[j] / (self.h_theta * self.h_xi),
            GridMode::Axisym => self.cell_measure[j] / (self.h_theta * sphere_area(self.n - 1)),
        }
    }

    /// Value at possibly out-of-range row `j` through the pole closure.
    #[inline]
    pub(crate) fn ghost(&self, field: &[f64], j: isize, k: usize) -> f64 {
        let nt = self.n_theta as isize;
        let (jj, shift) = if j < 0 {
            ((-j - 1) as usize, true)
        } else if j >= nt {
            ((2 * nt - 1 - j) as usize, true)
        } else {
            (j as usize, false)
        };
        let kk = if shift && self.mode == GridMode::Full2d {
            (k + self.n_xi / 2) % self.n_xi
        } else {
            k
        };
        field[jj * self.n_xi + kk]
    }

    /// Covariant gradient and Hessian of `φ` on `(S^n, σ)` at every node.
    pub fn jets(&self, phi: &[f64]) -> Vec<Jet> {
        assert_eq!(phi.len(), self.len());
        let h = self.h_theta;
        let mut out = Vec::with_capacity(self.len());
        match self.mode {
            GridMode::Axisym => {
                for j in 0..self.n_theta {
                    let jj = j as isize;
                    let p = phi[j];
                    let pp = self.ghost(phi, jj + 1, 0);
                    let pm = self.ghost(phi, jj - 1, 0);
                    out.push(Jet::Axisym {
                        d1: (pp - pm) / (2.0 * h),
                        d2: (pp - 2.0 * p + pm) / (h * h),
                        cot_theta: self.cot_theta[j],
                    });
                }
            }
            GridMode::Full2d => {
                let hx = self.h_xi;
                let nx = self.n_xi;
                for j in 0..self.n_theta {
                    let jj = j as isize;
                    let s = self.sin_theta[j];
                    let cot = self.cot_theta[j];
                    let c = s * cot;
                    for k in 0..nx {
                        let kp = (k + 1) % nx;
                        let km = (k + nx - 1) % nx;
                        let p = phi[j * nx + k];
                        let pn = self.ghost(phi, jj - 1, k);
                        let ps = self.ghost(phi, jj + 1, k);
                        let pe = phi[j * nx + kp];
                        let pw = phi[j * nx + km];
                        let pt = (ps - pn) / (2.0 * h);
                        let px = (pe - pw) / (2.0 * hx);
                        let ptt = (ps - 2.0 * p + pn) / (h * h);
                        let pxx = (pe - 2.0 * p + pw) / (hx * hx);
                        let ptx = (self.ghost(phi, jj + 1, kp) - self.ghost(phi, jj + 1, km)
                            - self.ghost(phi, jj - 1, kp)
                            + self.ghost(phi, jj - 1, km))
                            / (4.0 * h * hx);
                        out.push(Jet::Full {
                            grad: [pt, px],
                            hess: [ptt, ptx - cot * px, pxx + s * c * pt],
                            sin_theta: s,
                        });
                    }
                }
            }
        }
        out
    }

    /// Gershgorin bound on the spectral radius of the discrete Laplacian stencil
    /// at a node, after polar filtering on the full grid.
    pub fn stencil_radius(&self, idx: usize) -> f64 {
        let j = self.row(idx);
        let h = self.h_theta;
        let h2 = h * h;
        let (cot_coef, pole_fold) = match self.mode {
            GridMode::Axisym => ((self.n - 1) as f64 * self.cot_theta[j] / (2.0 * h), true),
            GridMode::Full2d => (self.cot_theta[j] / (2.0 * h), false),
        };
        let mut diag = -2.0 / h2;
        let up = 1.0 / h2 + cot_coef;
        let down = 1.0 / h2 - cot_coef;
        let mut off = 0.0;
        if j == 0 && pole_fold {
            diag += down;
        } else {
            off += down.abs();
        }
        if j + 1 == self.n_theta && pole_fold {
            diag += up;
        } else {
            off += up.abs();
        }
        let mut radius = diag.abs() + off;
        if self.mode == GridMode::Full2d {
            let sx = self.h_xi * self.sin_theta[j];
            radius += (4.0 / (sx * sx)).min(4.0 / h2);
        }
        radius
    }
}

/// Local first and second covariant derivatives of a function on the sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Jet {
    /// Components in `(θ, ξ)`: `grad = [φ_θ, φ_ξ]`, `hess = [H_θθ, H_θξ, H_ξξ]`.
    Full {
        grad: [f64; 2],
        hess: [f64; 3],
        sin_theta: f64,
    },
    /// `φ'`, `φ''` of a profile; the angular Hessian block is `cot θ φ' σ`.
    Axisym { d1: f64, d2: f64, cot_theta: f64 },
}

impl Jet {
    /// `|Dφ|²_σ`.
    pub fn grad_norm_sq(&self) -> f64 {
        match *self {
            Jet::Full {
                grad, sin_theta, ..
            } => grad[0] * grad[0] + grad[1] * grad[1] / (sin_theta * sin_theta),
            Jet::Axisym { d1, .. } => d1 * d1,
        }
    }

    /// `Δ_σ φ` on `S^n`.
    pub fn laplacian(&self, n: usize) -> f64 {
        match *self {
            Jet::Full {
                hess, sin_theta, ..
            } => hess[0] + hess[2] / (sin_theta * sin_theta),
            Jet::Axisym { d1, d2, cot_theta } => d2 + (n - 1) as f64 * cot_theta * d1,
        }
    }

    /// `|D²φ|²_σ`.
    pub fn hessian_norm_sq(&self, n: usize) -> f64 {
        match *self {
            Jet::Full {
                hess, sin_theta, ..
            } => {
                let s2 = sin_theta * sin_theta;
                hess[0] * hess[0] + 2.0 * hess[1] * hess[1] / s2 + hess[2] * hess[2] / (s2 * s2)
            }
            Jet::Axisym { d1, d2, cot_theta } => {
                let a = cot_theta * d1;
                d2 * d2 + (n - 1) as f64 * a * a
            }
        }
    }
}

/// Removes azimuthal Fourier modes near the poles whose discrete eigenvalue
/// exceeds the largest polar one, so explicit steps are limited by `h_θ`.
pub struct PolarFilter {
    n_xi: usize,
    rows: Vec<(usize, Vec<bool>)>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for PolarFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PolarFilter")
            .field("n_xi", &self.n_xi)
            .field("filtered_rows", &self.rows.len())
            .finish()
    }
}

impl PolarFilter {
    /// `None` for axisymmetric grids.
    pub fn new(grid: &SphereGrid) -> Option<Self> {
        if grid.mode != GridMode::Full2d {
            return None;
        }
        let nx = grid.n_xi;
        let mut rows = Vec::new();
        for j in 0..grid.n_theta {
            let limit = grid.h_xi * grid.sin_theta[j] / grid.h_theta;
            if limit >= 1.0 {
                continue;
            }
            let keep: Vec<bool> = (0..nx)
                .map(|b| {
                    let m = b.min(nx - b) as f64;
                    (m * grid.h_xi / 2.0).sin().abs() <= limit
                })
                .collect();
            rows.push((j, keep));
        }
        let mut planner = FftPlanner::new();
        Some(Self {
            n_xi: nx,
            rows,
            forward: planner.plan_fft_forward(nx),
            inverse: planner.plan_fft_inverse(nx),
        })
    }

    pub fn apply(&self, field: &mut [f64]) {
        let nx = self.n_xi;
        let mut buf = vec![Complex::new(0.0, 0.0); nx];
        let scale = 1.0 / nx as f64;
        for (j, keep) in &self.rows {
            let row = &mut field[j * nx..(j + 1) * nx];
            for (b, v) in buf.iter_mut().zip(row.iter()) {
                *b = Complex::new(*v, 0.0);
            }
            self.forward.process(&mut buf);
            for (b, &k) in buf.iter_mut().zip(keep) {
                if !k {
                    *b = Complex::new(0.0, 0.0);
                }
            }
            self.inverse.process(&mut buf);
            for (v, b) in row.iter_mut().zip(&buf) {
                *v = b.re * scale;
            }
        }
    }
}
