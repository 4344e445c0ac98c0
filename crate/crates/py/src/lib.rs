//! Python bindings: grids, radial graphs, symmetric functions, functionals,
//! inequality checks and flows.

use std::sync::Arc;

use hyperflow_core::flows::{run, variational_consistency, FlowFamily, FlowResult, FlowSpec, MonitorSample};
use hyperflow_core::functionals::{ball_profile, ball_profile_inverse, FunctionalRecord, ProfileKind};
use hyperflow_core::grid::{GridMode, SphereGrid};
use hyperflow_core::hypersurface::{curvature, make_shape, psi, psi_inverse, RadialGraph, ShapeSpec};
use hyperflow_core::symfun::{newton_maclaurin_margin, PhiKind, SpeedFunctionSpec, SpeedKind};
use hyperflow_core::verify::{
    exploratory_probe, monotonicity_audit, run_checks, CheckName, InequalityReport, Snapshot, Tolerances,
};
use hyperflow_core::Error;
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(hyperflow, FlowAbortError, PyRuntimeError);
create_exception!(hyperflow, ConeViolationError, PyValueError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::ConeViolation { .. } => ConeViolationError::new_err(e.to_string()),
        Error::BlowUp { .. } | Error::Io(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

pub fn parse_profile_kind(kind: &str) -> hyperflow_core::Result<ProfileKind> {
    match kind {
        "weighted" => Ok(ProfileKind::Weighted),
        "quermass" => Ok(ProfileKind::Quermass),
        k => Err(Error::InvalidInput(format!("unknown profile kind '{k}'"))),
    }
}

pub fn parse_phi(phi: &str, p: Option<f64>) -> hyperflow_core::Result<PhiKind> {
    let need = || p.ok_or_else(|| Error::InvalidInput(format!("phi '{phi}' needs phi_p")));
    Ok(match phi {
        "identity" => PhiKind::Identity,
        "log" => PhiKind::Log,
        "power" => PhiKind::Power(need()?),
        "neg_inv_power" => PhiKind::NegInvPower(need()?),
        s => return Err(Error::InvalidInput(format!("unknown phi '{s}'"))),
    })
}

/// Flow spec from the same names the TOML configs use.
#[allow(clippy::too_many_arguments)]
pub fn build_flow_spec(
    n: usize,
    flow: &str,
    speed: &str,
    k: Option<usize>,
    l: Option<usize>,
    phi: &str,
    phi_p: Option<f64>,
    t_end: f64,
) -> hyperflow_core::Result<FlowSpec> {
    let family = match flow {
        "weighted_vol_preserving" => FlowFamily::WeightedVolumePreserving,
        "sx_inverse" => FlowFamily::SxInverse,
        "bgl" => FlowFamily::Bgl,
        f => return Err(Error::InvalidInput(format!("unknown flow '{f}'"))),
    };
    let kind = match speed {
        "mean" => SpeedKind::Mean,
        "quotient" => {
            let k = k.ok_or_else(|| Error::InvalidInput("speed 'quotient' needs k".into()))?;
            SpeedKind::Quotient {
                k,
                l: l.unwrap_or(k.saturating_sub(1)),
            }
        }
        s => return Err(Error::InvalidInput(format!("unknown speed '{s}'"))),
    };
    FlowSpec::new(family, SpeedFunctionSpec::new(kind, parse_phi(phi, phi_p)?, n)?, t_end)
}

#[pyclass(name = "Grid", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyGrid {
    inner: Arc<SphereGrid>,
}

#[pymethods]
impl PyGrid {
    #[staticmethod]
    fn axisym(n: usize, n_theta: usize) -> PyResult<Self> {
        Ok(Self {
            inner: Arc::new(SphereGrid::axisym(n, n_theta).map_err(to_py)?),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (n_theta, n_xi=None))]
    fn full2d(n_theta: usize, n_xi: Option<usize>) -> PyResult<Self> {
        Ok(Self {
            inner: Arc::new(SphereGrid::full2d(n_theta, n_xi.unwrap_or(n_theta)).map_err(to_py)?),
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.h()
    }

    #[getter]
    fn mode(&self) -> &'static str {
        match self.inner.mode() {
            GridMode::Full2d => "full2d",
            GridMode::Axisym => "axisym",
        }
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn theta(&self) -> Vec<f64> {
        (0..self.inner.len()).map(|i| self.inner.theta_of(i)).collect()
    }

    fn __repr__(&self) -> String {
        format!("Grid({}, n={}, nodes={})", self.mode(), self.n(), self.inner.len())
    }
}

/// A star-shaped radial graph `r(θ)` over a grid.
#[pyclass(name = "Surface", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PySurface {
    inner: RadialGraph,
}

fn shape(grid: &PyGrid, spec: ShapeSpec) -> PyResult<PySurface> {
    Ok(PySurface {
        inner: make_shape(grid.inner.clone(), &spec).map_err(to_py)?,
    })
}

fn report_dict<'py>(py: Python<'py>, r: &InequalityReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("name", r.name.as_str())?;
    d.set_item("params", &r.params)?;
    d.set_item("shape_id", &r.shape_id)?;
    d.set_item("resolution", r.resolution)?;
    d.set_item("lhs", r.lhs)?;
    d.set_item("rhs", r.rhs)?;
    d.set_item("slack", r.slack)?;
    d.set_item("relative_slack", r.relative_slack)?;
    d.set_item("tolerance", r.tolerance)?;
    d.set_item("verdict", r.verdict.to_string())?;
    d.set_item("hypothesis_ok", r.hypothesis_ok)?;
    d.set_item("rhs_agreement", r.rhs_agreement)?;
    Ok(d)
}

fn record_dict<'py>(py: Python<'py>, r: &FunctionalRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("t", r.t)?;
    d.set_item("area", r.area)?;
    d.set_item("W", r.w.clone())?;
    d.set_item("Wl", r.wl.clone())?;
    d.set_item("minkowski_residuals", r.minkowski_residuals.clone())?;
    d.set_item("heintze_karcher_slack", r.heintze_karcher_slack)?;
    d.set_item("wl0_volume_form", r.wl0_volume_form)?;
    Ok(d)
}

fn monitor_dict<'py>(py: Python<'py>, m: &MonitorSample) -> PyResult<Bound<'py, PyDict>> {
    let d = record_dict(py, &m.functionals)?;
    d.set_item("step", m.step)?;
    d.set_item("min_phi", m.min_phi)?;
    d.set_item("max_phi", m.max_phi)?;
    d.set_item("max_grad_sq", m.max_grad_sq)?;
    d.set_item("min_static_margin", m.min_static_margin)?;
    d.set_item("alpha_bound", m.alpha_bound)?;
    d.set_item("max_abs_speed", m.max_abs_speed)?;
    Ok(d)
}

#[pymethods]
impl PySurface {
    #[staticmethod]
    fn centered_sphere(grid: &PyGrid, r0: f64) -> PyResult<Self> {
        shape(grid, ShapeSpec::CenteredSphere { r0 })
    }

    #[staticmethod]
    fn offcenter_sphere(grid: &PyGrid, rho: f64, d: f64) -> PyResult<Self> {
        shape(grid, ShapeSpec::OffcenterSphere { rho, d })
    }

    #[staticmethod]
    fn perturbed_sphere(grid: &PyGrid, r0: f64, eps: f64, m: u32) -> PyResult<Self> {
        shape(grid, ShapeSpec::PerturbedSphere { r0, eps, m })
    }

    #[staticmethod]
    fn from_radius(grid: &PyGrid, r: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: RadialGraph::from_radius(grid.inner.clone(), r).map_err(to_py)?,
        })
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid {
            inner: self.inner.grid_arc().clone(),
        }
    }

    fn radius(&self) -> Vec<f64> {
        self.inner.radius().to_vec()
    }

    fn phi(&self) -> Vec<f64> {
        self.inner.phi().to_vec()
    }

    fn profile_table(&self) -> String {
        self.inner.profile_table()
    }

    /// Per-node geometry: principal curvatures (one list per node), `E_k`,
    /// support function, static margin and `|Dφ|²`.
    fn curvature<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let f = curvature(&self.inner).map_err(to_py)?;
        let d = PyDict::new(py);
        let kappa: Vec<Vec<f64>> = (0..f.len()).map(|i| f.kappa_at(i).to_vec()).collect();
        let e: Vec<Vec<f64>> = (0..f.len()).map(|i| f.e_at(i).to_vec()).collect();
        d.set_item("kappa", kappa)?;
        d.set_item("E", e)?;
        d.set_item("u", f.u.clone())?;
        d.set_item("lambda_prime", f.lambda_prime.clone())?;
        d.set_item("static_margin", f.static_margin.clone())?;
        d.set_item("grad_sq", f.grad_sq.clone())?;
        d.set_item("min_static_margin", f.min_static_margin())?;
        d.set_item("max_umbilicity_defect", f.max_umbilicity_defect())?;
        Ok(d)
    }

    fn functionals<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let f = curvature(&self.inner).map_err(to_py)?;
        record_dict(py, &FunctionalRecord::evaluate(&f, &self.inner, 0.0))
    }

    /// Runs the named checks (all of them by default) and returns one dict per report.
    #[pyo3(signature = (names=None, shape_id="surface"))]
    fn check<'py>(
        &self,
        py: Python<'py>,
        names: Option<Vec<String>>,
        shape_id: &str,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let names: Vec<CheckName> = match names {
            Some(v) => v
                .iter()
                .map(|s| s.parse::<CheckName>())
                .collect::<Result<_, _>>()
                .map_err(to_py)?,
            None => CheckName::ALL.to_vec(),
        };
        let snap = Snapshot::new(shape_id, self.inner.clone()).map_err(to_py)?;
        let reps = run_checks(&snap, &names, &Tolerances::default()).map_err(to_py)?;
        reps.iter().map(|r| report_dict(py, r)).collect()
    }

    /// Open inequalities, evaluated but not asserted.
    fn probe<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let snap = Snapshot::new("surface", self.inner.clone()).map_err(to_py)?;
        exploratory_probe(&snap, &Tolerances::default())
            .iter()
            .map(|p| {
                let d = PyDict::new(py);
                d.set_item("family", p.family)?;
                d.set_item("params", &p.params)?;
                d.set_item("slack", p.slack)?;
                d.set_item("violated", p.violated)?;
                Ok(d)
            })
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("Surface(nodes={}, n={})", self.inner.radius().len(), self.inner.grid().dim())
    }
}

/// Outcome of a completed flow.
#[pyclass(name = "FlowRun", frozen)]
pub struct PyFlowRun {
    result: FlowResult,
    spec: FlowSpec,
}

#[pymethods]
impl PyFlowRun {
    #[getter]
    fn converged(&self) -> bool {
        self.result.converged
    }

    #[getter]
    fn t(&self) -> f64 {
        self.result.state.t
    }

    #[getter]
    fn steps(&self) -> usize {
        self.result.state.steps
    }

    #[getter]
    fn decay_rate(&self) -> Option<f64> {
        self.result.decay_rate
    }

    #[getter]
    fn alpha_hat(&self) -> f64 {
        self.result.alpha_hat
    }

    #[getter]
    fn r_final_mean(&self) -> f64 {
        self.result.r_final_mean
    }

    #[getter]
    fn r_predicted(&self) -> Option<f64> {
        self.result.r_predicted
    }

    #[getter]
    fn worst_barrier_step(&self) -> f64 {
        self.result.state.worst_barrier_step
    }

    #[getter]
    fn surface(&self) -> PySurface {
        PySurface {
            inner: self.result.state.graph.clone(),
        }
    }

    fn monitors<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.result.state.monitors.iter().map(|m| monitor_dict(py, m)).collect()
    }

    /// `{claim: holds}` for the monotone functionals of this flow family.
    #[pyo3(signature = (c=1.0))]
    fn audit<'py>(&self, py: Python<'py>, c: f64) -> PyResult<Bound<'py, PyDict>> {
        let h = self.result.state.graph.grid().h();
        let a = monotonicity_audit(&self.result.state.monitors, &self.spec, h, c);
        let d = PyDict::new(py);
        for cl in &a.claims {
            d.set_item(format!("{} {:?}", cl.functional, cl.direction), cl.holds)?;
        }
        Ok(d)
    }

    /// `{functional: worst ratio}`; a ratio at most 1 means consistent.
    #[pyo3(signature = (rel_tol=0.02, floor=10.0))]
    fn variational<'py>(&self, py: Python<'py>, rel_tol: f64, floor: f64) -> PyResult<Bound<'py, PyDict>> {
        let h = self.result.state.graph.grid().h();
        let v = variational_consistency(&self.result.state.monitors, h, rel_tol, floor).map_err(to_py)?;
        let d = PyDict::new(py);
        for e in &v.entries {
            d.set_item(&e.name, e.worst_ratio)?;
        }
        Ok(d)
    }
}

#[pyfunction]
#[pyo3(signature = (surface, flow, speed, t_end, k=None, l=None, phi="identity", phi_p=None, sample_interval=None, cfl=None, convergence_threshold=None))]
#[allow(clippy::too_many_arguments)]
fn run_flow(
    py: Python<'_>,
    surface: &PySurface,
    flow: &str,
    speed: &str,
    t_end: f64,
    k: Option<usize>,
    l: Option<usize>,
    phi: &str,
    phi_p: Option<f64>,
    sample_interval: Option<f64>,
    cfl: Option<f64>,
    convergence_threshold: Option<f64>,
) -> PyResult<PyFlowRun> {
    let n = surface.inner.grid().dim();
    let mut spec = build_flow_spec(n, flow, speed, k, l, phi, phi_p, t_end).map_err(to_py)?;
    if let Some(s) = sample_interval {
        spec.sample_interval = s;
    }
    if let Some(c) = cfl {
        spec.cfl = c;
    }
    if let Some(c) = convergence_threshold {
        spec.convergence_threshold = c;
    }
    spec.validate().map_err(to_py)?;
    let graph = surface.inner.clone();
    let result = py
        .detach(|| run(graph, &spec))
        .map_err(|abort| FlowAbortError::new_err(abort.to_string()))?;
    Ok(PyFlowRun { result, spec })
}

#[pyfunction]
#[pyo3(signature = (n, k, r, kind="weighted"))]
fn ball_profile_value(n: usize, k: usize, r: f64, kind: &str) -> PyResult<f64> {
    ball_profile(n, k, parse_profile_kind(kind).map_err(to_py)?, r).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (n, k, value, kind="weighted"))]
fn ball_profile_radius(n: usize, k: usize, value: f64, kind: &str) -> PyResult<f64> {
    ball_profile_inverse(n, k, parse_profile_kind(kind).map_err(to_py)?, value).map_err(to_py)
}

/// Normalized `E_0..E_n` of a curvature vector.
#[pyfunction]
fn elementary(kappa: Vec<f64>) -> PyResult<Vec<f64>> {
    let p = hyperflow_core::symfun::SymmetricPoint::from_slice(&kappa).map_err(to_py)?;
    Ok(p.e_all().to_vec())
}

#[pyfunction]
fn newton_maclaurin(kappa: Vec<f64>, k: usize) -> PyResult<f64> {
    let p = hyperflow_core::symfun::SymmetricPoint::from_slice(&kappa).map_err(to_py)?;
    newton_maclaurin_margin(&p, k).map_err(to_py)
}

#[pyfunction(name = "psi")]
fn py_psi(r: f64) -> f64 {
    psi(r)
}

#[pyfunction(name = "psi_inverse")]
fn py_psi_inverse(phi: f64) -> f64 {
    psi_inverse(phi)
}

/// Adds every class and function to `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PySurface>()?;
    m.add_class::<PyFlowRun>()?;
    m.add_function(wrap_pyfunction!(run_flow, m)?)?;
    m.add_function(wrap_pyfunction!(ball_profile_value, m)?)?;
    m.add_function(wrap_pyfunction!(ball_profile_radius, m)?)?;
    m.add_function(wrap_pyfunction!(elementary, m)?)?;
    m.add_function(wrap_pyfunction!(newton_maclaurin, m)?)?;
    m.add_function(wrap_pyfunction!(py_psi, m)?)?;
    m.add_function(wrap_pyfunction!(py_psi_inverse, m)?)?;
    m.add("FlowAbortError", m.py().get_type::<FlowAbortError>())?;
    m.add("ConeViolationError", m.py().get_type::<ConeViolationError>())?;
    Ok(())
}

#[pymodule]
fn hyperflow(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}
