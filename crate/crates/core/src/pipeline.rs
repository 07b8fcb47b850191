//! Configuration-driven pipeline: mesh → flow → assembly → solve →
//! postprocess, plus frequency sweeps.

use std::path::Path;
use std::sync::Arc;

use crate::bem::{assemble_operators, BemOperators, HelmholtzKernel, SurfaceSpaces};
use crate::config::{CaseConfig, FlowConfig, Frame, IncidentConfig, MeshConfig};
use crate::coupling::{
    formulation_registry, solve_case, BlockSystem, CouplingParts, Densities, Formulation,
    FormulationParams, HalfSign, StableFormulation, UnstableFormulation,
};
use crate::error::{Error, Result};
use crate::fem::{assemble_interior_form, P1VolumeSpace};
use crate::flow::{
    check_continuity, AmbientState, ContinuityReport, FlowModel, NodalFlow, SphereDipoleFlow,
    UniformFlow,
};
use crate::geometry::Vec3;
use crate::incident::{incident_traces, IncidentField, IncidentTraces, Monopole, PlaneWave};
use crate::linalg::{norm_inf, SparseMatrix, C64};
use crate::mesh::generate::{ball, ball_shell, Ellipsoid};
use crate::mesh::gmsh::{load_gmsh, GmshOptions};
use crate::mesh::{PgMap, TetMesh};
use crate::output::{
    write_probes_csv, write_residuals_csv, write_summary_json, write_vtk, DofCounts, RunSummary,
};
use crate::postprocess::{fibonacci_sphere, reconstruct_exterior, FieldProbe};
use crate::quadrature::{TetRule, TetRuleKind};
use crate::registry::Registry;
use crate::regularizer::{assemble_delta_form, SurfaceP1Form};
use crate::solver::{system_condition_number, SolveReport, SweepRow};

pub type MeshConstructor = fn(&MeshConfig) -> Result<TetMesh>;

/// Mesh sources selectable by `mesh.kind`. Meshes are returned in the frame
/// given by `mesh.frame`.
pub fn mesh_source_registry() -> Registry<MeshConstructor> {
    fn ellipsoid(c: &MeshConfig, axes: Option<[f64; 3]>, what: &str) -> Result<Ellipsoid> {
        let semi_axes = axes.ok_or_else(|| Error::Config(format!("mesh.{what} is required")))?;
        Ok(Ellipsoid {
            center: Vec3(c.center),
            semi_axes,
        })
    }
    fn count(v: Option<usize>, what: &str) -> Result<usize> {
        v.ok_or_else(|| Error::Config(format!("mesh.{what} is required")))
    }
    Registry::<MeshConstructor>::new("mesh source")
        .register("gmsh", |c| {
            let path = c
                .path
                .as_ref()
                .ok_or_else(|| Error::Config("mesh.path is required".into()))?;
            let mut opts = GmshOptions::default();
            if let Some(n) = &c.object_names {
                opts.object_names = n.clone();
            }
            if let Some(n) = &c.farfield_names {
                opts.farfield_names = n.clone();
            }
            load_gmsh(path, &opts)
        })
        .register("ball", |c| {
            ball(
                ellipsoid(c, c.outer, "outer")?,
                count(c.n_outer, "n_outer")?,
            )
        })
        .register("shell", |c| {
            ball_shell(
                ellipsoid(c, c.outer, "outer")?,
                ellipsoid(c, c.inner, "inner")?,
                count(c.n_outer, "n_outer")?,
                count(c.n_inner, "n_inner")?,
            )
        })
}

/// Inputs to flow-model constructors; `mesh` is in transformed coordinates.
pub struct FlowContext<'a> {
    pub config: &'a FlowConfig,
    pub mesh: &'a TetMesh,
    pub ambient: &'a AmbientState,
    pub map: &'a PgMap,
}

pub type FlowConstructor = fn(&FlowContext<'_>) -> Result<Box<dyn FlowModel>>;

/// Flow models selectable by `flow.kind`.
pub fn flow_registry() -> Registry<FlowConstructor> {
    Registry::<FlowConstructor>::new("flow model")
        .register("uniform", |c| Ok(Box::new(UniformFlow::new(c.ambient))))
        .register("sphere_dipole", |c| {
            let radius = c
                .config
                .radius
                .ok_or_else(|| Error::Config("flow.radius is required".into()))?;
            let mut f = SphereDipoleFlow::new(radius, Vec3(c.config.center), c.ambient, *c.map)?;
            if let Some(t) = c.config.inner_tolerance {
                f.inner_tolerance = t;
            }
            Ok(Box::new(f))
        })
        .register("nodal", |c| {
            let path = c
                .config
                .path
                .as_ref()
                .ok_or_else(|| Error::Config("flow.path is required".into()))?;
            Ok(Box::new(NodalFlow::from_csv(path, c.mesh)?))
        })
}

/// Inputs to incident-field constructors.
pub struct IncidentContext<'a> {
    pub config: &'a IncidentConfig,
    pub k_hat: f64,
    pub map: &'a PgMap,
}

pub type IncidentConstructor = fn(&IncidentContext<'_>) -> Result<Box<dyn IncidentField>>;

/// Incident fields selectable by `incident.kind`. Monopole positions are
/// physical and mapped; plane-wave directions are taken in the transformed frame.
pub fn incident_registry() -> Registry<IncidentConstructor> {
    Registry::<IncidentConstructor>::new("incident field")
        .register("monopole", |c| {
            let p = c
                .config
                .position
                .ok_or_else(|| Error::Config("incident.position is required".into()))?;
            Ok(Box::new(Monopole {
                source: c.map.forward(Vec3(p)),
                amplitude: c.config.amplitude(),
                k: c.k_hat,
            }))
        })
        .register("plane_wave", |c| {
            let d = c
                .config
                .direction
                .ok_or_else(|| Error::Config("incident.direction is required".into()))?;
            Ok(Box::new(PlaneWave::new(
                Vec3(d),
                c.config.amplitude(),
                c.k_hat,
            )?))
        })
}

/// Frequency-independent data of a case.
pub struct Problem {
    pub map: PgMap,
    /// Ambient state at the configured frequency.
    pub ambient: AmbientState,
    /// Mesh in transformed coordinates.
    pub mesh: Arc<TetMesh>,
    pub volume: P1VolumeSpace,
    pub surface: SurfaceSpaces,
    pub flow: Box<dyn FlowModel>,
    pub tet_rule: TetRule,
    pub bem_quadrature: crate::bem::BemQuadrature,
    pub mass01: SparseMatrix,
    pub delta: SurfaceP1Form,
    pub continuity: ContinuityReport,
}

/// Everything that depends on the frequency.
pub struct Assembled {
    pub ambient: AmbientState,
    pub k_hat: f64,
    pub fem: SparseMatrix,
    pub bem: BemOperators,
    pub incident: Box<dyn IncidentField>,
    pub traces: IncidentTraces,
}

impl Problem {
    /// Set up a problem from a mesh already in transformed coordinates.
    pub fn new(
        mesh: TetMesh,
        ambient: AmbientState,
        flow: Box<dyn FlowModel>,
        tet_rule: TetRule,
        bem_quadrature: crate::bem::BemQuadrature,
        continuity_tolerance: f64,
    ) -> Result<Self> {
        let map = PgMap::new(ambient.mach_infinity)?;
        let mesh = Arc::new(mesh);
        let volume = P1VolumeSpace::new(mesh.clone());
        let surface = SurfaceSpaces::from_mesh(&mesh, &volume)?;
        let mass01 = surface.mass_p0_p1();
        let delta = assemble_delta_form(&surface)?;
        let continuity = check_continuity(flow.as_ref(), &mesh, &ambient, continuity_tolerance)?;
        Ok(Problem {
            map,
            ambient,
            mesh,
            volume,
            surface,
            flow,
            tet_rule,
            bem_quadrature,
            mass01,
            delta,
            continuity,
        })
    }

    pub fn from_config(config: &CaseConfig) -> Result<Self> {
        config.validate()?;
        let mach = config.ambient.mach_vector()?;
        let map = PgMap::new(mach)?;
        let base = AmbientState::new(config.ambient.rho, config.ambient.c, mach, 0.0)?;
        let omega = match (config.frequency.hz, config.frequency.k_hat) {
            (Some(f), _) => 2.0 * std::f64::consts::PI * f,
            (None, Some(k)) => base.omega_for_k_hat(k),
            (None, None) => return Err(Error::Config("no frequency given".into())),
        };
        let ambient = base.with_omega(omega);
        let raw = mesh_source_registry().get(&config.mesh.kind)?(&config.mesh)?;
        let mesh = match config.mesh.frame {
            Frame::Physical => map.apply(&raw),
            Frame::Transformed => raw,
        };
        let flow = flow_registry().get(&config.flow.kind)?(&FlowContext {
            config: &config.flow,
            mesh: &mesh,
            ambient: &ambient,
            map: &map,
        })?;
        let tet_rule = TetRuleKind::from_degree(config.quadrature.tet_degree)?.rule();
        Problem::new(
            mesh,
            ambient,
            flow,
            tet_rule,
            config.quadrature.bem,
            config.flow.continuity_tolerance,
        )
    }

    /// Assemble the frequency-dependent parts at angular frequency `omega`.
    pub fn assemble(&self, omega: f64, incident: Box<dyn IncidentField>) -> Result<Assembled> {
        let ambient = self.ambient.with_omega(omega);
        let k_hat = ambient.k_hat_infinity();
        if (incident.wavenumber() - k_hat).abs() > 1e-12 * k_hat.max(1.0) {
            return Err(Error::Config(format!(
                "incident wavenumber {} differs from k̂∞ = {k_hat}",
                incident.wavenumber()
            )));
        }
        incident.check_against(&self.surface)?;
        let fem = assemble_interior_form(
            &self.volume,
            self.flow.as_ref(),
            &ambient,
            &self.map,
            &self.tet_rule,
        )?;
        let bem = assemble_operators(
            &self.surface,
            &HelmholtzKernel::new(k_hat),
            &self.bem_quadrature,
        )?;
        let traces = incident_traces(incident.as_ref(), &self.surface)?;
        Ok(Assembled {
            ambient,
            k_hat,
            fem,
            bem,
            incident,
            traces,
        })
    }

    /// Assemble with the incident field described by `config`.
    pub fn assemble_config(&self, omega: f64, config: &IncidentConfig) -> Result<Assembled> {
        let k_hat = self.ambient.with_omega(omega).k_hat_infinity();
        let incident = incident_registry().get(&config.kind)?(&IncidentContext {
            config,
            k_hat,
            map: &self.map,
        })?;
        self.assemble(omega, incident)
    }

    pub fn parts<'a>(&'a self, a: &'a Assembled) -> CouplingParts<'a> {
        CouplingParts {
            fem: &a.fem,
            n_interior: self.volume.n_interior,
            bem: &a.bem,
            mass01: &self.mass01,
            delta: Some(&self.delta),
            traces: &a.traces,
        }
    }

    pub fn system(&self, a: &Assembled, formulation: &dyn Formulation) -> Result<BlockSystem> {
        formulation.assemble(&self.parts(a))
    }

    pub fn dof_counts(&self, system: &BlockSystem) -> DofCounts {
        DofCounts {
            volume: self.volume.dim(),
            interior: self.volume.n_interior,
            surface_p0: self.surface.q(),
            surface_p1: self.surface.r(),
            total: system.dim(),
        }
    }

    /// Exterior field at `points` (transformed frame) from solved densities.
    pub fn reconstruct(
        &self,
        a: &Assembled,
        densities: &Densities,
        points: &[Vec3],
        quad: &crate::bem::PotentialQuadrature,
        with_pressure: bool,
    ) -> Result<FieldProbe> {
        reconstruct_exterior(
            &self.surface,
            &a.bem.kernel,
            &densities.lambda,
            densities.trace(self.volume.n_interior),
            a.incident.as_ref(),
            points,
            quad,
            with_pressure.then_some(&a.ambient),
        )
    }
}

/// Evenly spaced grid including both ends.
pub fn linspace(min: f64, max: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![min],
        _ => (0..steps)
            .map(|i| min + (max - min) * i as f64 / (steps - 1) as f64)
            .collect(),
    }
}

/// Options of a conditioning sweep.
#[derive(Clone, Debug)]
pub struct SweepOptions {
    pub eta: C64,
    pub half_sign: HalfSign,
    /// Also solve both systems and record GMRES iterations.
    pub solve: bool,
    pub solver: crate::config::SolverConfig,
    pub incident: IncidentConfig,
}

/// Condition numbers (and optionally iteration counts) of both formulations
/// at each angular frequency of `omegas`.
pub fn sweep_conditioning(
    problem: &Problem,
    omegas: &[f64],
    opts: &SweepOptions,
) -> Result<Vec<SweepRow>> {
    if omegas.iter().any(|w| !w.is_finite()) {
        return Err(Error::Config("sweep grid must be finite".into()));
    }
    let stable = StableFormulation::new(opts.eta, opts.half_sign)?;
    let mut rows = Vec::with_capacity(omegas.len());
    for &omega in omegas {
        let a = problem.assemble_config(omega, &opts.incident)?;
        let su = problem.system(&a, &UnstableFormulation)?;
        let ss = problem.system(&a, &stable)?;
        let cond_unstab = system_condition_number(&su, opts.solver.dense_cap)?;
        let cond_stab = system_condition_number(&ss, opts.solver.dense_cap)?;
        let (mut iters_unstab, mut iters_stab) = (None, None);
        if opts.solve {
            iters_unstab = Some(iterations_of(solve_case(
                &su,
                &problem.surface,
                &opts.solver,
            ))?);
            iters_stab = Some(iterations_of(solve_case(
                &ss,
                &problem.surface,
                &opts.solver,
            ))?);
        }
        log::info!(
            "sweep: f = {:.6} Hz, k̂ = {:.6}, cond = {:.3e} / {:.3e}",
            a.ambient.frequency_hz(),
            a.k_hat,
            cond_unstab,
            cond_stab
        );
        rows.push(SweepRow {
            freq_hz: a.ambient.frequency_hz(),
            k_hat: a.k_hat,
            cond_unstab,
            cond_stab,
            iters_unstab,
            iters_stab,
        });
    }
    Ok(rows)
}

fn iterations_of(r: Result<(Densities, SolveReport)>) -> Result<usize> {
    match r {
        Ok((_, rep)) => Ok(rep.iterations),
        Err(Error::NonConvergence(rep)) => Ok(rep.iterations),
        Err(e) => Err(e),
    }
}

/// Result of [`run_case`].
pub struct RunOutcome {
    pub summary: RunSummary,
    pub report: SolveReport,
    pub probe: Option<FieldProbe>,
}

/// Probe points requested by the output section.
pub fn probe_points(config: &CaseConfig) -> Vec<Vec3> {
    let o = &config.output;
    let mut pts = match o.probe_radius {
        Some(r) => fibonacci_sphere(Vec3(o.probe_center), r, o.probe_count),
        None => Vec::new(),
    };
    pts.extend(o.probe_points.iter().map(|&p| Vec3(p)));
    pts
}

/// Run one case and write all outputs into `out_dir`.
///
/// On non-convergence the residual history is still written before the
/// error is returned.
pub fn run_case(config: &CaseConfig, out_dir: &Path) -> Result<RunOutcome> {
    let problem = Problem::from_config(config)?;
    let a = problem.assemble_config(problem.ambient.omega, &config.incident)?;
    let params = FormulationParams {
        eta: config.eta(),
        half_sign: config.stable_half_sign,
    };
    let formulation = formulation_registry().get(&config.formulation)?(&params)?;
    let system = problem.system(&a, formulation.as_ref())?;
    log::info!(
        "{} system: {} unknowns ({} volume, {} P0, {} P1)",
        config.formulation,
        system.dim(),
        problem.volume.dim(),
        problem.surface.q(),
        problem.surface.r()
    );
    let condition_number = if config.solver.condition_number {
        Some(system_condition_number(&system, config.solver.dense_cap)?)
    } else {
        None
    };
    let residual_path = out_dir.join("residuals.csv");
    let (densities, report) = match solve_case(&system, &problem.surface, &config.solver) {
        Ok(r) => r,
        Err(Error::NonConvergence(rep)) => {
            if config.output.residual_history {
                write_residuals_csv(&rep, &residual_path)?;
            }
            return Err(Error::NonConvergence(rep));
        }
        Err(e) => return Err(e),
    };
    if config.output.residual_history {
        write_residuals_csv(&report, &residual_path)?;
    }
    if config.output.vtk {
        let values = problem.volume.dofs_to_vertex_values(&densities.phi);
        write_vtk(&problem.mesh, &values, out_dir.join("solution.vtk"))?;
    }
    let points = probe_points(config);
    let probe = if points.is_empty() {
        None
    } else {
        let mut p =
            problem.reconstruct(&a, &densities, &points, &config.quadrature.potential, true)?;
        p.formulation = config.formulation.clone();
        p.mesh_id = format!(
            "{}:{}v:{}t",
            config.mesh.kind,
            problem.mesh.vertices.len(),
            problem.mesh.tets.len()
        );
        write_probes_csv(&p, out_dir.join("probes.csv"))?;
        Some(p)
    };
    let stable = system.eta.is_some();
    let summary = RunSummary {
        formulation: config.formulation.clone(),
        eta_re: system.eta.map(|e| e.re),
        eta_im: system.eta.map(|e| e.im),
        frequency_hz: a.ambient.frequency_hz(),
        omega: a.ambient.omega,
        k_hat: a.k_hat,
        mach_infinity: a.ambient.mach_infinity.norm(),
        preconditioner: report.preconditioner.clone(),
        iterations: report.iterations,
        converged: report.converged,
        final_residual: report.final_residual(),
        true_residual: report.true_residual,
        condition_number,
        lambda_inf: norm_inf(&densities.lambda),
        p_aux_inf: stable.then(|| norm_inf(&densities.p_aux)),
        dofs: problem.dof_counts(&system),
        mesh: problem.mesh.summary(),
        config: serde_json::to_value(config)?,
    };
    write_summary_json(&summary, out_dir.join("summary.json"))?;
    Ok(RunOutcome {
        summary,
        report,
        probe,
    })
}
