use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AmbientState, FlowModel, FlowSample};
use crate::error::{Error, Result};
use crate::geometry::{Mat3, Vec3};
use crate::mesh::TetMesh;

#[derive(Debug, Deserialize, Serialize)]
struct NodalRow {
    x: f64,
    y: f64,
    z: f64,
    rho: f64,
    c: f64,
    #[serde(rename = "Mx")]
    mx: f64,
    #[serde(rename = "My")]
    my: f64,
    #[serde(rename = "Mz")]
    mz: f64,
}

/// Flow given by per-vertex values, interpolated linearly on each tetrahedron.
#[derive(Clone, Debug)]
pub struct NodalFlow {
    values: Vec<FlowSample>,
    vertices: Vec<Vec3>,
    tets: Vec<[usize; 4]>,
}

/// Largest deviation of the flow from the ambient state over the Γ∞ vertices.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ContinuityReport {
    pub max_density_deviation: f64,
    pub max_wavenumber_deviation: f64,
    pub max_mach_deviation: f64,
    pub tolerance: f64,
    pub within_tolerance: bool,
}

/// Compare a flow against the ambient state at the Γ∞ vertices of `mesh`
/// (transformed frame). Density and wavenumber deviations are relative.
pub fn check_continuity(
    flow: &dyn FlowModel,
    mesh: &TetMesh,
    ambient: &AmbientState,
    tolerance: f64,
) -> Result<ContinuityReport> {
    let mut report = ContinuityReport {
        max_density_deviation: 0.0,
        max_wavenumber_deviation: 0.0,
        max_mach_deviation: 0.0,
        tolerance,
        within_tolerance: true,
    };
    for v in mesh.farfield_vertices() {
        let s = flow.sample(mesh.vertices[v])?;
        report.max_density_deviation = report
            .max_density_deviation
            .max((s.rho - ambient.rho_infinity).abs() / ambient.rho_infinity);
        // k₀/k∞ − 1 = c∞/c₀ − 1.
        report.max_wavenumber_deviation = report
            .max_wavenumber_deviation
            .max((ambient.c_infinity / s.c - 1.0).abs());
        report.max_mach_deviation = report
            .max_mach_deviation
            .max((s.mach - ambient.mach_infinity).norm());
    }
    report.within_tolerance = report.max_density_deviation <= tolerance
        && report.max_wavenumber_deviation <= tolerance
        && report.max_mach_deviation <= tolerance;
    if !report.within_tolerance {
        log::warn!(
            "ContinuityWarning: flow deviates from the ambient state on the coupling surface \
             (density {:.2e}, wavenumber {:.2e}, Mach {:.2e}; tolerance {:.2e})",
            report.max_density_deviation,
            report.max_wavenumber_deviation,
            report.max_mach_deviation,
            tolerance
        );
    }
    Ok(report)
}

impl NodalFlow {
    pub fn new(values: Vec<FlowSample>, mesh: &TetMesh) -> Result<Self> {
        if values.len() != mesh.vertices.len() {
            return Err(Error::SizeMismatch {
                expected: mesh.vertices.len(),
                found: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|s| !(s.rho > 0.0 && s.c > 0.0)) {
            return Err(Error::Config(format!(
                "nodal flow row {i}: density and sound speed must be positive"
            )));
        }
        Ok(NodalFlow {
            values,
            vertices: mesh.vertices.clone(),
            tets: mesh.tets.clone(),
        })
    }

    /// Read a CSV with header `x,y,z,rho,c,Mx,My,Mz`, one row per mesh vertex.
    pub fn from_csv(path: impl AsRef<Path>, mesh: &TetMesh) -> Result<Self> {
        let path = path.as_ref();
        let csv_err = |e: csv::Error| Error::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(csv_err)?;
        let mut values = Vec::new();
        for row in reader.deserialize::<NodalRow>() {
            let row = row.map_err(csv_err)?;
            values.push(FlowSample {
                rho: row.rho,
                c: row.c,
                mach: Vec3::new(row.mx, row.my, row.mz),
            });
        }
        Self::new(values, mesh)
    }

    /// Write per-vertex samples of any flow model in the nodal CSV format.
    pub fn write_csv(flow: &dyn FlowModel, mesh: &TetMesh, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let csv_err = |e: csv::Error| Error::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        for x in &mesh.vertices {
            let s = flow.sample(*x)?;
            w.serialize(NodalRow {
                x: x[0],
                y: x[1],
                z: x[2],
                rho: s.rho,
                c: s.c,
                mx: s.mach[0],
                my: s.mach[1],
                mz: s.mach[2],
            })
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    fn interpolate(&self, tet: usize, bary: [f64; 4]) -> FlowSample {
        let mut rho = 0.0;
        let mut c = 0.0;
        let mut mach = Vec3::ZERO;
        for (l, &v) in bary.iter().zip(&self.tets[tet]) {
            let s = &self.values[v];
            rho += l * s.rho;
            c += l * s.c;
            mach += s.mach * *l;
        }
        FlowSample { rho, c, mach }
    }

    fn barycentric(&self, tet: usize, x: Vec3) -> Option<[f64; 4]> {
        let [a, b, c, d] = self.tets[tet].map(|v| self.vertices[v]);
        let (e1, e2, e3) = (b - a, c - a, d - a);
        let jac = Mat3([
            [e1[0], e2[0], e3[0]],
            [e1[1], e2[1], e3[1]],
            [e1[2], e2[2], e3[2]],
        ]);
        let l = jac.inverse()?.mul_vec(x - a);
        Some([1.0 - l[0] - l[1] - l[2], l[0], l[1], l[2]])
    }
}

impl FlowModel for NodalFlow {
    fn kind(&self) -> &'static str {
        "nodal"
    }

    /// Point location by exhaustive search; assembly uses `sample_in_tet`.
    fn sample(&self, x: Vec3) -> Result<FlowSample> {
        const SLACK: f64 = 1e-10;
        let mut best: Option<(f64, usize, [f64; 4])> = None;
        for t in 0..self.tets.len() {
            if let Some(l) = self.barycentric(t, x) {
                let worst = l.iter().copied().fold(f64::INFINITY, f64::min);
                if worst >= -SLACK {
                    return Ok(self.interpolate(t, l));
                }
                if best.is_none_or(|(w, _, _)| worst > w) {
                    best = Some((worst, t, l));
                }
            }
        }
        match best {
            Some((w, t, l)) if w > -1e-6 => Ok(self.interpolate(t, l)),
            _ => Err(Error::Domain(format!(
                "point ({:.4}, {:.4}, {:.4}) is outside the nodal flow mesh",
                x[0], x[1], x[2]
            ))),
        }
    }

    fn sample_in_tet(&self, tet: usize, bary: [f64; 4], _x: Vec3) -> Result<FlowSample> {
        Ok(self.interpolate(tet, bary))
    }
}
