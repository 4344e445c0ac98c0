//! Refinement studies: observed spatial orders and the RK4 temporal order.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::flows::{stable_dt, speed_field, step_fixed, FlowSpec, FlowState};
use crate::grid::SphereGrid;
use crate::hypersurface::{curvature, lemma24_residuals, make_shape, RadialGraph, ShapeSpec};
use crate::verify::{run_checks, CheckName, Snapshot, Tolerances};

/// Errors below this (relative) are treated as exact and get no order.
pub const ROUND_OFF: f64 = 1e-12;

/// Observed order between two resolutions; `None` when either error is at round-off.
pub fn observed_order(e_coarse: f64, e_fine: f64, n_coarse: usize, n_fine: usize) -> Option<f64> {
    if !(e_coarse > 0.0 && e_fine > 0.0) || n_fine <= n_coarse {
        return None;
    }
    Some((e_coarse / e_fine).ln() / (n_fine as f64 / n_coarse as f64).ln())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelErrors {
    pub n_theta: usize,
    pub h: f64,
    /// `max_k |∫λ′E_{k−1} − ∫uE_k| / ∫λ′E_{k−1}`.
    pub minkowski: f64,
    /// `max (κ_max − κ_min)` over nodes of the configured shape.
    pub umbilicity: f64,
    /// `max |κ − coth ρ|` when the shape is a geodesic sphere.
    pub sphere_curvature: Option<f64>,
    /// Area-weighted RMS of the traced Hessian identity for `λ′`.
    pub lemma24: f64,
    /// Largest `|relative slack|` of the inequality checks on the centered sphere of the same radius.
    pub centered_slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub levels: Vec<LevelErrors>,
}

impl ConvergenceTable {
    /// Names of the tracked quantities, in [`errors`](Self::errors) order.
    pub const QUANTITIES: [&'static str; 5] =
        ["minkowski", "umbilicity", "sphere_curvature", "lemma24", "centered_slack"];

    pub fn errors(level: &LevelErrors) -> [Option<f64>; 5] {
        [
            Some(level.minkowski),
            Some(level.umbilicity),
            level.sphere_curvature,
            Some(level.lemma24),
            Some(level.centered_slack),
        ]
    }

    /// Orders between consecutive levels, per quantity.
    pub fn orders(&self) -> Vec<Vec<Option<f64>>> {
        (0..Self::QUANTITIES.len())
            .map(|q| {
                self.levels
                    .windows(2)
                    .map(|w| {
                        let a = Self::errors(&w[0])[q]?;
                        let b = Self::errors(&w[1])[q]?;
                        if a.abs() < ROUND_OFF || b.abs() < ROUND_OFF {
                            return None;
                        }
                        observed_order(a.abs(), b.abs(), w[0].n_theta, w[1].n_theta)
                    })
                    .collect()
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("n_theta  h            minkowski    umbilicity   sphere_curv  lemma24      centered_slack\n");
        for l in &self.levels {
            let e = Self::errors(l);
            s.push_str(&format!("{:<8} {:<12.5e}", l.n_theta, l.h));
            for v in e {
                match v {
                    Some(x) => s.push_str(&format!(" {x:<12.5e}")),
                    None => s.push_str(&format!(" {:<12}", "-")),
                }
            }
            s.push('\n');
        }
        s.push_str("\nobserved orders between consecutive levels\n");
        for (name, ords) in Self::QUANTITIES.iter().zip(self.orders()) {
            let cells: Vec<String> = ords
                .iter()
                .map(|o| o.map_or("exact/n.a.".to_string(), |p| format!("{p:.3}")))
                .collect();
            s.push_str(&format!("{name:<16} {}\n", cells.join("  ")));
        }
        s
    }
}

fn sphere_radius(shape: &ShapeSpec) -> Option<f64> {
    match *shape {
        ShapeSpec::CenteredSphere { r0 } => Some(r0),
        ShapeSpec::OffcenterSphere { rho, .. } => Some(rho),
        _ => None,
    }
}

/// Evaluates the tracked errors at each grid produced by `grid_at`.
pub fn convergence_study<G>(grid_at: G, shape: &ShapeSpec, levels: &[usize]) -> Result<ConvergenceTable>
where
    G: Fn(usize) -> Result<Arc<SphereGrid>>,
{
    if levels.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "a convergence study needs at least 3 levels, got {}",
            levels.len()
        )));
    }
    let mut sorted = levels.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let r_ref = match *shape {
        ShapeSpec::CenteredSphere { r0 } | ShapeSpec::PerturbedSphere { r0, .. } => r0,
        ShapeSpec::OffcenterSphere { rho, .. } => rho,
        ShapeSpec::CustomProfile { .. } => 1.0,
    };
    let mut out = Vec::new();
    for &nt in &sorted {
        let grid = grid_at(nt)?;
        let graph = make_shape(grid.clone(), shape)?;
        let snap = Snapshot::new("study", graph)?;
        let f = &snap.field;
        let minkowski = snap
            .weighted
            .minkowski_residuals
            .iter()
            .enumerate()
            .map(|(i, r)| (r / snap.weighted.wl[i + 1]).abs())
            .fold(0.0, f64::max);
        let sphere_curvature = sphere_radius(shape).map(|rho| {
            let c = 1.0 / rho.tanh();
            f.kappa.iter().fold(0.0f64, |m, k| m.max((k - c).abs()))
        });
        let lemma24 = lemma24_residuals(f, &snap.graph).rms;
        let centered = Snapshot::new("centered", make_shape(grid.clone(), &ShapeSpec::CenteredSphere { r0: r_ref })?)?;
        let centered_slack = run_checks(
            &centered,
            &[CheckName::Thm13, CheckName::Thm14, CheckName::Thm15],
            &Tolerances::default(),
        )?
        .iter()
        .map(|r| r.relative_slack.abs())
        .fold(0.0, f64::max);
        out.push(LevelErrors {
            n_theta: nt,
            h: grid.h(),
            minkowski,
            umbilicity: f.max_umbilicity_defect(),
            sphere_curvature,
            lemma24,
            centered_slack,
        });
    }
    Ok(ConvergenceTable { levels: out })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemporalOrder {
    pub dt: f64,
    pub horizon: f64,
    /// `|φ_dt − φ_{dt/2}|_∞` and `|φ_{dt/2} − φ_{dt/4}|_∞`.
    pub differences: [f64; 2],
    pub order: Option<f64>,
}

fn integrate_fixed(graph: &RadialGraph, spec: &FlowSpec, dt: f64, steps: usize) -> Result<Vec<f64>> {
    let mut st = FlowState::new(graph.clone());
    for _ in 0..steps {
        step_fixed(&mut st, spec, dt)?;
    }
    Ok(st.graph.phi().to_vec())
}

/// Integrates `steps` steps of `dt`, then the same horizon at `dt/2` and `dt/4`.
/// `dt = None` takes the stable step of the initial state.
pub fn temporal_order(graph: &RadialGraph, spec: &FlowSpec, dt: Option<f64>, steps: usize) -> Result<TemporalOrder> {
    let dt = match dt {
        Some(d) => d,
        None => {
            let f = curvature(graph)?;
            let s = speed_field(spec, &f, graph)?;
            stable_dt(spec, graph, &f, &s)
        }
    };
    let a = integrate_fixed(graph, spec, dt, steps)?;
    let b = integrate_fixed(graph, spec, dt / 2.0, 2 * steps)?;
    let c = integrate_fixed(graph, spec, dt / 4.0, 4 * steps)?;
    let diff = |x: &[f64], y: &[f64]| x.iter().zip(y).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
    let d1 = diff(&a, &b);
    let d2 = diff(&b, &c);
    let order = if d1 > 0.0 && d2 > 0.0 { Some((d1 / d2).log2()) } else { None };
    Ok(TemporalOrder {
        dt,
        horizon: dt * steps as f64,
        differences: [d1, d2],
        order,
    })
}
