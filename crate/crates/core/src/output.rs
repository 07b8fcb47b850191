//! Result files: legacy VTK volume solution, probe and residual CSVs, sweep
//! tables and the JSON run summary.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::mesh::{MeshSummary, TetMesh};
use crate::postprocess::FieldProbe;
use crate::solver::{SolveReport, SweepRow};

/// JSON schema of [`RunSummary`].
pub const RUN_SUMMARY_SCHEMA: &str = include_str!("../schemas/run_summary.schema.json");

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    csv::Writer::from_path(path).map_err(|e| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Unstructured-grid VTK (legacy ASCII) with point data `re_phi`, `im_phi`.
/// `values` are per mesh vertex.
pub fn vtk_string(mesh: &TetMesh, values: &[C64]) -> Result<String> {
    if values.len() != mesh.vertices.len() {
        return Err(Error::SizeMismatch {
            expected: mesh.vertices.len(),
            found: values.len(),
        });
    }
    let mut s = String::new();
    let nv = mesh.vertices.len();
    let nt = mesh.tets.len();
    // Writing to a String cannot fail.
    let _ = writeln!(
        s,
        "# vtk DataFile Version 3.0\nglauert volume potential\nASCII\nDATASET UNSTRUCTURED_GRID"
    );
    let _ = writeln!(s, "POINTS {nv} double");
    for v in &mesh.vertices {
        let _ = writeln!(s, "{:.17e} {:.17e} {:.17e}", v[0], v[1], v[2]);
    }
    let _ = writeln!(s, "CELLS {nt} {}", 5 * nt);
    for t in &mesh.tets {
        let _ = writeln!(s, "4 {} {} {} {}", t[0], t[1], t[2], t[3]);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        let _ = writeln!(s, "10");
    }
    let _ = writeln!(s, "POINT_DATA {nv}");
    for (name, part) in [("re_phi", 0), ("im_phi", 1)] {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in values {
            let x = if part == 0 { v.re } else { v.im };
            let _ = writeln!(s, "{x:.17e}");
        }
    }
    Ok(s)
}

pub fn write_vtk(mesh: &TetMesh, values: &[C64], path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &vtk_string(mesh, values)?)
}

/// Probe CSV `x,y,z,re_f,im_f,re_p,im_p`; pressure columns are NaN when absent.
pub fn write_probes_csv(probe: &FieldProbe, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    w.write_record(["x", "y", "z", "re_f", "im_f", "re_p", "im_p"])
        .map_err(csv_err(path))?;
    for (i, x) in probe.points.iter().enumerate() {
        let p = probe
            .pressure
            .as_ref()
            .map_or(C64::new(f64::NAN, f64::NAN), |p| p[i]);
        let f = probe.total[i];
        w.write_record([x[0], x[1], x[2], f.re, f.im, p.re, p.im].map(|v| v.to_string()))
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Residual history CSV `iter,relres`.
pub fn write_residuals_csv(report: &SolveReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    w.write_record(["iter", "relres"]).map_err(csv_err(path))?;
    for (i, r) in report.residuals.iter().enumerate() {
        w.write_record([i.to_string(), format!("{r:e}")])
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Sweep CSV `freq_hz,k_hat,cond_unstab,cond_stab,iters_unstab,iters_stab`;
/// iteration columns are empty when no solve was requested.
pub fn write_sweep_csv(rows: &[SweepRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    w.write_record([
        "freq_hz",
        "k_hat",
        "cond_unstab",
        "cond_stab",
        "iters_unstab",
        "iters_stab",
    ])
    .map_err(csv_err(path))?;
    let opt = |v: Option<usize>| v.map_or(String::new(), |v| v.to_string());
    for r in rows {
        w.write_record([
            format!("{:e}", r.freq_hz),
            format!("{:e}", r.k_hat),
            format!("{:e}", r.cond_unstab),
            format!("{:e}", r.cond_stab),
            opt(r.iters_unstab),
            opt(r.iters_stab),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DofCounts {
    pub volume: usize,
    pub interior: usize,
    pub surface_p0: usize,
    pub surface_p1: usize,
    pub total: usize,
}

/// Self-describing record of one run. Contains no timing information so that
/// reruns produce identical files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub formulation: String,
    pub eta_re: Option<f64>,
    pub eta_im: Option<f64>,
    pub frequency_hz: f64,
    pub omega: f64,
    pub k_hat: f64,
    pub mach_infinity: f64,
    pub preconditioner: String,
    pub iterations: usize,
    pub converged: bool,
    pub final_residual: f64,
    pub true_residual: f64,
    pub condition_number: Option<f64>,
    pub lambda_inf: f64,
    pub p_aux_inf: Option<f64>,
    pub dofs: DofCounts,
    pub mesh: MeshSummary,
    pub config: serde_json::Value,
}

pub fn write_summary_json(summary: &RunSummary, path: impl AsRef<Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    write_file(path.as_ref(), &text)
}
