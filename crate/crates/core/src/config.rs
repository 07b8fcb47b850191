//! TOML case configuration. Unknown keys are rejected and every section is
//! validated before any assembly starts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bem::{BemQuadrature, PotentialQuadrature};
use crate::coupling::HalfSign;
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::linalg::C64;
use crate::solver::{GmresOptions, PreconditionerOptions, DENSE_CAP};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    #[serde(default = "default_formulation")]
    pub formulation: String,
    #[serde(default = "one")]
    pub eta_re: f64,
    #[serde(default)]
    pub eta_im: f64,
    /// Sign of the ½ mass term in the auxiliary equation of the stable system.
    #[serde(default = "default_half_sign")]
    pub stable_half_sign: HalfSign,
    pub mesh: MeshConfig,
    #[serde(default)]
    pub ambient: AmbientConfig,
    pub frequency: FrequencyConfig,
    #[serde(default)]
    pub flow: FlowConfig,
    pub incident: IncidentConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

fn default_formulation() -> String {
    "stable".into()
}

fn one() -> f64 {
    1.0
}

fn default_half_sign() -> HalfSign {
    HalfSign::Plus
}

/// Coordinates in which mesh and shape parameters are given.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    /// Physical coordinates; the Prandtl–Glauert map is applied.
    #[default]
    Physical,
    /// Already transformed coordinates.
    Transformed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    /// `gmsh`, `ball` or `shell`.
    pub kind: String,
    #[serde(default)]
    pub frame: Frame,
    /// Gmsh file, relative paths resolved against the config file.
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub object_names: Option<Vec<String>>,
    #[serde(default)]
    pub farfield_names: Option<Vec<String>>,
    #[serde(default)]
    pub center: [f64; 3],
    /// Semi-axes of the outer (Γ∞) ellipsoid.
    pub outer: Option<[f64; 3]>,
    /// Semi-axes of the inner (obstacle) ellipsoid.
    pub inner: Option<[f64; 3]>,
    pub n_outer: Option<usize>,
    pub n_inner: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AmbientConfig {
    pub rho: f64,
    pub c: f64,
    /// `|M∞|`.
    pub mach: f64,
    /// Flow direction (normalized on use).
    pub axis: [f64; 3],
}

impl Default for AmbientConfig {
    fn default() -> Self {
        AmbientConfig {
            rho: 1.2,
            c: 340.0,
            mach: 0.0,
            axis: [0.0, 0.0, 1.0],
        }
    }
}

impl AmbientConfig {
    pub fn mach_vector(&self) -> Result<Vec3> {
        let axis = Vec3(self.axis);
        if self.mach == 0.0 {
            return Ok(Vec3::ZERO);
        }
        if !(axis.norm() > 0.0) {
            return Err(Error::Config(
                "ambient.axis must be non-zero when ambient.mach > 0".into(),
            ));
        }
        Ok(axis.normalized() * self.mach)
    }
}

/// Exactly one of `hz` and `k_hat`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyConfig {
    pub hz: Option<f64>,
    pub k_hat: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowConfig {
    /// `uniform`, `sphere_dipole` or `nodal`.
    pub kind: String,
    /// Dipole sphere radius and center, physical frame.
    pub radius: Option<f64>,
    pub center: [f64; 3],
    pub inner_tolerance: Option<f64>,
    /// Nodal CSV, relative paths resolved against the config file.
    pub path: Option<PathBuf>,
    /// Relative tolerance of the flow-continuity check on Γ∞.
    pub continuity_tolerance: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            kind: "uniform".into(),
            radius: None,
            center: [0.0; 3],
            inner_tolerance: None,
            path: None,
            continuity_tolerance: 1e-2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IncidentConfig {
    /// `monopole` or `plane_wave`.
    pub kind: String,
    /// Monopole position, physical frame.
    pub position: Option<[f64; 3]>,
    /// Plane-wave direction, transformed frame.
    pub direction: Option<[f64; 3]>,
    #[serde(default = "one")]
    pub amplitude_re: f64,
    #[serde(default)]
    pub amplitude_im: f64,
}

impl IncidentConfig {
    pub fn amplitude(&self) -> C64 {
        C64::new(self.amplitude_re, self.amplitude_im)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// `block_spai` or `none`.
    pub preconditioner: String,
    pub pattern_radius: usize,
    pub strict_rank: bool,
    /// Compute the dense condition number of the system.
    pub condition_number: bool,
    pub dense_cap: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let g = GmresOptions::default();
        let p = PreconditionerOptions::default();
        SolverConfig {
            tol: g.tol,
            max_iter: g.max_iter,
            preconditioner: "block_spai".into(),
            pattern_radius: p.pattern_radius,
            strict_rank: p.strict_rank,
            condition_number: false,
            dense_cap: DENSE_CAP,
        }
    }
}

impl SolverConfig {
    pub fn gmres(&self) -> GmresOptions {
        GmresOptions {
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }

    pub fn preconditioner_options(&self) -> PreconditionerOptions {
        PreconditionerOptions {
            pattern_radius: self.pattern_radius,
            strict_rank: self.strict_rank,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    /// Polynomial degree of the tetrahedral rule (2 or 5).
    pub tet_degree: u32,
    pub bem: BemQuadrature,
    pub potential: PotentialQuadrature,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            tet_degree: 2,
            bem: BemQuadrature::default(),
            potential: PotentialQuadrature::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub vtk: bool,
    pub residual_history: bool,
    /// Probe sphere (transformed frame) with `probe_count` points.
    pub probe_radius: Option<f64>,
    pub probe_center: [f64; 3],
    pub probe_count: usize,
    /// Extra probe points (transformed frame).
    pub probe_points: Vec<[f64; 3]>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            vtk: true,
            residual_history: true,
            probe_radius: None,
            probe_center: [0.0; 3],
            probe_count: 0,
            probe_points: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub fmin: Option<f64>,
    pub fmax: Option<f64>,
    pub k_hat_min: Option<f64>,
    pub k_hat_max: Option<f64>,
    pub steps: usize,
    /// Also solve both systems at every frequency and record iterations.
    #[serde(default)]
    pub solve: bool,
}

impl CaseConfig {
    /// Parse and validate; relative paths are resolved against `base`.
    pub fn from_toml(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut cfg: CaseConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(base) = base {
            for p in [&mut cfg.mesh.path, &mut cfg.flow.path]
                .into_iter()
                .flatten()
            {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path.parent())
    }

    pub fn eta(&self) -> C64 {
        C64::new(self.eta_re, self.eta_im)
    }

    /// Checks that do not need the mesh or any assembly.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !["unstable", "stable"].contains(&self.formulation.as_str()) {
            return Err(Error::UnknownStrategy {
                registry: "formulation",
                name: self.formulation.clone(),
                available: "unstable, stable".into(),
            });
        }
        if self.formulation == "stable" && self.eta_re == 0.0 {
            return Err(Error::Eta(self.eta()));
        }
        if !(self.ambient.rho > 0.0 && self.ambient.c > 0.0) {
            return bad("ambient.rho and ambient.c must be positive".into());
        }
        if !(0.0..1.0).contains(&self.ambient.mach) {
            return Err(Error::Supersonic {
                mach: self.ambient.mach,
                point: [f64::NAN; 3],
            });
        }
        self.ambient.mach_vector()?;
        match (self.frequency.hz, self.frequency.k_hat) {
            (Some(f), None) if f > 0.0 && f.is_finite() => {}
            (None, Some(k)) if k > 0.0 && k.is_finite() => {}
            _ => {
                return bad(
                    "set exactly one positive value of frequency.hz or frequency.k_hat".into(),
                )
            }
        }
        match self.mesh.kind.as_str() {
            "gmsh" => {
                if self.mesh.path.is_none() {
                    return bad("mesh.path is required for gmsh meshes".into());
                }
            }
            "ball" => {
                if self.mesh.outer.is_none() || self.mesh.n_outer.is_none() {
                    return bad("ball meshes need mesh.outer and mesh.n_outer".into());
                }
            }
            "shell" => {
                if self.mesh.outer.is_none()
                    || self.mesh.inner.is_none()
                    || self.mesh.n_outer.is_none()
                    || self.mesh.n_inner.is_none()
                {
                    return bad(
                        "shell meshes need mesh.outer, mesh.inner, mesh.n_outer and mesh.n_inner"
                            .into(),
                    );
                }
            }
            other => {
                return Err(Error::UnknownStrategy {
                    registry: "mesh source",
                    name: other.into(),
                    available: "gmsh, ball, shell".into(),
                })
            }
        }
        match self.flow.kind.as_str() {
            "uniform" => {}
            "sphere_dipole" => {
                if !self.flow.radius.is_some_and(|r| r > 0.0) {
                    return bad("sphere_dipole flow needs a positive flow.radius".into());
                }
            }
            "nodal" => {
                if self.flow.path.is_none() {
                    return bad("nodal flow needs flow.path".into());
                }
            }
            other => {
                return Err(Error::UnknownStrategy {
                    registry: "flow model",
                    name: other.into(),
                    available: "uniform, sphere_dipole, nodal".into(),
                })
            }
        }
        match self.incident.kind.as_str() {
            "monopole" if self.incident.position.is_none() => {
                return bad("monopole needs incident.position".into())
            }
            "plane_wave" if self.incident.direction.is_none() => {
                return bad("plane_wave needs incident.direction".into())
            }
            "monopole" | "plane_wave" => {}
            other => {
                return Err(Error::UnknownStrategy {
                    registry: "incident field",
                    name: other.into(),
                    available: "monopole, plane_wave".into(),
                })
            }
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iter == 0 {
            return bad("solver.tol must be positive and solver.max_iter at least 1".into());
        }
        if !["none", "block_spai"].contains(&self.solver.preconditioner.as_str()) {
            return Err(Error::UnknownStrategy {
                registry: "preconditioner",
                name: self.solver.preconditioner.clone(),
                available: "none, block_spai".into(),
            });
        }
        crate::quadrature::TetRuleKind::from_degree(self.quadrature.tet_degree)?;
        if let Some(r) = self.output.probe_radius {
            if !(r > 0.0) || self.output.probe_count == 0 {
                return bad("output.probe_radius needs a positive radius and probe_count".into());
            }
        }
        if let Some(s) = &self.sweep {
            let range = match (s.fmin, s.fmax, s.k_hat_min, s.k_hat_max) {
                (Some(a), Some(b), None, None) | (None, None, Some(a), Some(b)) => (a, b),
                _ => return bad("sweep needs either fmin/fmax or k_hat_min/k_hat_max".into()),
            };
            if !(range.0 > 0.0 && range.0 < range.1) || s.steps < 2 {
                return bad("sweep needs 0 < min < max and steps >= 2".into());
            }
        }
        Ok(())
    }
}
