//! Flat TOML run configuration.
//!
//! Every key is top level; unknown keys are rejected. See `configs/` for one
//! commented example per use case.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::flows::{FlowFamily, FlowSpec};
use crate::grid::{GridMode, SphereGrid};
use crate::hypersurface::{make_shape, parse_profile_table, RadialGraph, ShapeSpec};
use crate::symfun::{PhiKind, SpeedFunctionSpec, SpeedKind};
use crate::verify::{CheckName, Tolerances};

/// Environment variable naming the directory relative output paths resolve against.
pub const OUTPUT_ROOT_ENV: &str = "HYPERFLOW_OUTPUT_ROOT";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    /// `"full2d"` or `"axisym"`.
    #[serde(default = "default_grid")]
    pub grid: String,
    pub n_theta: usize,
    #[serde(default)]
    pub n_xi: Option<usize>,

    /// `centered_sphere`, `offcenter_sphere`, `perturbed_sphere` or `custom_profile`.
    pub shape: String,
    #[serde(default)]
    pub r0: Option<f64>,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub d: Option<f64>,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub m: Option<u32>,
    /// Two-column `θ r` table, relative to the config file.
    #[serde(default)]
    pub profile: Option<String>,

    /// `none`, `weighted_vol_preserving`, `sx_inverse` or `bgl`.
    #[serde(default = "default_flow")]
    pub flow: String,
    /// `mean` or `quotient`.
    #[serde(default)]
    pub speed: Option<String>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub l: Option<usize>,
    /// `identity`, `power`, `neg_inv_power` or `log`.
    #[serde(default)]
    pub phi: Option<String>,
    #[serde(default)]
    pub phi_p: Option<f64>,
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default)]
    pub cfl: Option<f64>,
    #[serde(default)]
    pub sample_interval: Option<f64>,
    #[serde(default)]
    pub convergence_threshold: Option<f64>,
    #[serde(default)]
    pub max_steps: Option<usize>,

    #[serde(default)]
    pub checks: Vec<String>,
    #[serde(default)]
    pub probe: bool,
    #[serde(default)]
    pub tol_equality: Option<f64>,
    #[serde(default)]
    pub tol_fail: Option<f64>,
    #[serde(default)]
    pub tol_static: Option<f64>,

    #[serde(default = "default_output")]
    pub output_dir: String,
    #[serde(default = "default_plots")]
    pub plots: bool,

    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_grid() -> String {
    "axisym".into()
}
fn default_flow() -> String {
    "none".into()
}
fn default_output() -> String {
    "hyperflow_out".into()
}
fn default_plots() -> bool {
    true
}

fn need<T: Copy>(v: Option<T>, key: &str, what: &str) -> Result<T> {
    v.ok_or_else(|| Error::Config(format!("{what} needs key '{key}'")))
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let mode = self.grid_mode()?;
        if mode == GridMode::Full2d && self.n != 2 {
            return Err(Error::Config(format!("full2d grid requires n = 2, got n = {}", self.n)));
        }
        if self.flow != "none" && self.speed.is_none() {
            return Err(Error::Config(format!("flow '{}' needs a 'speed'", self.flow)));
        }
        for c in &self.checks {
            c.parse::<CheckName>().map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn grid_mode(&self) -> Result<GridMode> {
        match self.grid.as_str() {
            "full2d" => Ok(GridMode::Full2d),
            "axisym" => Ok(GridMode::Axisym),
            g => Err(Error::Config(format!("unknown grid '{g}'"))),
        }
    }

    /// Grid at the configured resolution, or at `n_theta` polar nodes.
    pub fn build_grid_at(&self, n_theta: usize) -> Result<Arc<SphereGrid>> {
        let mode = self.grid_mode()?;
        let n_xi = match mode {
            GridMode::Full2d => {
                let ratio = self.n_xi.unwrap_or(self.n_theta) as f64 / self.n_theta as f64;
                ((n_theta as f64 * ratio).round() as usize).max(4)
            }
            GridMode::Axisym => 1,
        };
        Ok(Arc::new(SphereGrid::new(mode, self.n, n_theta, n_xi)?))
    }

    pub fn build_grid(&self) -> Result<Arc<SphereGrid>> {
        self.build_grid_at(self.n_theta)
    }

    pub fn shape_spec(&self) -> Result<ShapeSpec> {
        let what = format!("shape '{}'", self.shape);
        Ok(match self.shape.as_str() {
            "centered_sphere" => ShapeSpec::CenteredSphere {
                r0: need(self.r0, "r0", &what)?,
            },
            "offcenter_sphere" => ShapeSpec::OffcenterSphere {
                rho: need(self.rho, "rho", &what)?,
                d: need(self.d, "d", &what)?,
            },
            "perturbed_sphere" => ShapeSpec::PerturbedSphere {
                r0: need(self.r0, "r0", &what)?,
                eps: need(self.eps, "eps", &what)?,
                m: need(self.m, "m", &what)?,
            },
            "custom_profile" => {
                let rel = self
                    .profile
                    .as_ref()
                    .ok_or_else(|| Error::Config(format!("{what} needs key 'profile'")))?;
                let path = self.base_dir.join(rel);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                ShapeSpec::CustomProfile {
                    table: parse_profile_table(&text)?,
                }
            }
            s => return Err(Error::Config(format!("unknown shape '{s}'"))),
        })
    }

    pub fn build_shape(&self, grid: Arc<SphereGrid>) -> Result<RadialGraph> {
        make_shape(grid, &self.shape_spec()?)
    }

    fn phi_kind(&self) -> Result<PhiKind> {
        let p = self.phi_p;
        Ok(match self.phi.as_deref().unwrap_or("identity") {
            "identity" => PhiKind::Identity,
            "log" => PhiKind::Log,
            "power" => PhiKind::Power(need(p, "phi_p", "phi 'power'")?),
            "neg_inv_power" => PhiKind::NegInvPower(need(p, "phi_p", "phi 'neg_inv_power'")?),
            s => return Err(Error::Config(format!("unknown phi '{s}'"))),
        })
    }

    pub fn speed_spec(&self) -> Result<SpeedFunctionSpec> {
        let kind = match self.speed.as_deref() {
            Some("mean") => SpeedKind::Mean,
            Some("quotient") => {
                let k = need(self.k, "k", "speed 'quotient'")?;
                let l = self.l.unwrap_or(k.saturating_sub(1));
                SpeedKind::Quotient { k, l }
            }
            Some(s) => return Err(Error::Config(format!("unknown speed '{s}'"))),
            None => return Err(Error::Config("missing 'speed'".into())),
        };
        SpeedFunctionSpec::new(kind, self.phi_kind()?, self.n).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn flow_spec(&self) -> Result<Option<FlowSpec>> {
        let family = match self.flow.as_str() {
            "none" => return Ok(None),
            "weighted_vol_preserving" => FlowFamily::WeightedVolumePreserving,
            "sx_inverse" => FlowFamily::SxInverse,
            "bgl" => FlowFamily::Bgl,
            f => return Err(Error::Config(format!("unknown flow '{f}'"))),
        };
        let t_end = need(self.t_end, "t_end", "a flow")?;
        let mut spec = FlowSpec::new(family, self.speed_spec()?, t_end)
            .map_err(|e| Error::Config(e.to_string()))?;
        if let Some(c) = self.cfl {
            spec.cfl = c;
        }
        if let Some(s) = self.sample_interval {
            spec.sample_interval = s;
        }
        if let Some(c) = self.convergence_threshold {
            spec.convergence_threshold = c;
        }
        if let Some(m) = self.max_steps {
            spec.max_steps = m;
        }
        spec.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(Some(spec))
    }

    pub fn check_names(&self) -> Vec<CheckName> {
        self.checks.iter().filter_map(|c| c.parse().ok()).collect()
    }

    pub fn tolerances(&self) -> Tolerances {
        let d = Tolerances::default();
        Tolerances {
            equality: self.tol_equality.unwrap_or(d.equality),
            fail: self.tol_fail.unwrap_or(d.fail),
            static_margin: self.tol_static.unwrap_or(d.static_margin),
        }
    }

    /// `output_dir`, under `$HYPERFLOW_OUTPUT_ROOT` when it is relative and the variable is set.
    pub fn output_path(&self) -> PathBuf {
        let p = PathBuf::from(&self.output_dir);
        if p.is_absolute() {
            return p;
        }
        match std::env::var_os(OUTPUT_ROOT_ENV) {
            Some(root) => PathBuf::from(root).join(p),
            None => p,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
n = 2
grid = "axisym"
n_theta = 32
shape = "perturbed_sphere"
r0 = 1.0
eps = 0.05
m = 2
flow = "weighted_vol_preserving"
speed = "mean"
t_end = 1.0
checks = ["thm13", "thm14"]
"#;

    #[test]
    fn parses_and_builds() {
        let c = RunConfig::from_toml_str(BASE).unwrap();
        assert!(c.build_shape(c.build_grid().unwrap()).is_ok());
        let f = c.flow_spec().unwrap().unwrap();
        assert!(f.conserves_weighted_volume());
        assert_eq!(c.check_names().len(), 2);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(RunConfig::from_toml_str("n = 2\nbogus = 1\nn_theta = 8\nshape = \"centered_sphere\"").is_err());
        let full3 = BASE.replace("grid = \"axisym\"", "grid = \"full2d\"").replace("n = 2", "n = 3");
        assert!(RunConfig::from_toml_str(&full3).is_err());
        let nospeed = BASE.replace("speed = \"mean\"", "");
        assert!(RunConfig::from_toml_str(&nospeed).is_err());
        let badcheck = BASE.replace("thm14", "thm99");
        assert!(RunConfig::from_toml_str(&badcheck).is_err());
        let c = RunConfig::from_toml_str(&BASE.replace("eps = 0.05", "")).unwrap();
        assert!(matches!(c.shape_spec(), Err(Error::Config(_))));
    }
}
