//! Structured generators for balls and ball-shells bounded by axis-aligned
//! ellipsoids.
//!
//! A cube grid `[-N, N]³` is split into Kuhn tetrahedra (mirrored per octant)
//! and each cube shell `max|pᵢ| = s` is mapped onto a star-shaped surface by the
//! equiangular cube-to-sphere projection followed by radial interpolation
//! between the inner and outer ellipsoid.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{extract_boundary_faces, SurfaceTag, TetMesh};
use crate::error::{Error, Result};
use crate::geometry::{tet_signed_volume, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    pub center: Vec3,
    pub semi_axes: [f64; 3],
}

impl Ellipsoid {
    pub fn sphere(center: Vec3, radius: f64) -> Self {
        Ellipsoid {
            center,
            semi_axes: [radius; 3],
        }
    }

    /// Distance from the center to the surface along unit direction `d`.
    pub fn radius_along(&self, d: Vec3) -> f64 {
        let s: f64 = (0..3).map(|i| (d[i] / self.semi_axes[i]).powi(2)).sum();
        1.0 / s.sqrt()
    }

    fn validate(&self, what: &str) -> Result<()> {
        if self.semi_axes.iter().all(|a| *a > 0.0 && a.is_finite()) {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "{what} semi-axes must be positive, got {:?}",
                self.semi_axes
            )))
        }
    }
}

/// Ball bounded by `outer`, with `n` grid cells from center to surface.
/// The outer surface is tagged as Γ∞.
pub fn ball(outer: Ellipsoid, n: usize) -> Result<TetMesh> {
    outer.validate("outer")?;
    if n == 0 {
        return Err(Error::Config(
            "ball mesh needs at least one radial cell".into(),
        ));
    }
    build(outer, None, n, 0)
}

/// Shell between `inner` (tagged Γ) and `outer` (tagged Γ∞). The inner surface
/// carries `2·n_inner` cells per cube edge, the outer `2·n_outer`, with
/// `n_outer − n_inner` radial layers.
pub fn ball_shell(
    outer: Ellipsoid,
    inner: Ellipsoid,
    n_outer: usize,
    n_inner: usize,
) -> Result<TetMesh> {
    outer.validate("outer")?;
    inner.validate("inner")?;
    if n_inner == 0 || n_outer <= n_inner {
        return Err(Error::Config(format!(
            "shell mesh needs 0 < n_inner < n_outer, got n_inner = {n_inner}, n_outer = {n_outer}"
        )));
    }
    if inner.center.distance(outer.center) > 1e-12 * outer.semi_axes[0] {
        return Err(Error::Config(
            "shell mesh requires concentric inner and outer surfaces".into(),
        ));
    }
    if (0..3).any(|k| inner.semi_axes[k] >= outer.semi_axes[k]) {
        return Err(Error::Config(
            "inner surface must lie strictly inside the outer surface".into(),
        ));
    }
    build(outer, Some(inner), n_outer, n_inner)
}

fn grid_shell(p: [i64; 3]) -> i64 {
    p.iter().map(|v| v.abs()).max().unwrap_or(0)
}

fn grid_direction(p: [i64; 3], s: i64) -> Vec3 {
    let q = std::f64::consts::FRAC_PI_4 / s as f64;
    Vec3([0, 1, 2].map(|i| (q * p[i] as f64).tan())).normalized()
}

fn build(outer: Ellipsoid, inner: Option<Ellipsoid>, n: usize, m: usize) -> Result<TetMesh> {
    let n = n as i64;
    let m = m as i64;
    let place = |p: [i64; 3]| -> Vec3 {
        let s = grid_shell(p);
        if s == 0 {
            return outer.center;
        }
        let d = grid_direction(p, s);
        let r_out = outer.radius_along(d);
        let r = match inner {
            Some(inner) => {
                let r_in = inner.radius_along(d);
                r_in + (r_out - r_in) * (s - m) as f64 / (n - m) as f64
            }
            None => r_out * s as f64 / n as f64,
        };
        outer.center + d * r
    };

    let mut index: HashMap<[i64; 3], usize> = HashMap::new();
    let mut grid_points: Vec<[i64; 3]> = Vec::new();
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut tets: Vec<[usize; 4]> = Vec::new();
    let axes_perms = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];

    for i in -n..n {
        for j in -n..n {
            for k in -n..n {
                let lo = [i, j, k];
                if m > 0 && lo.iter().all(|&c| c >= -m && c < m) {
                    continue;
                }
                // Mirror the Kuhn split per octant so the cell diagonal points outward.
                let sign = lo.map(|c| if c >= 0 { 1 } else { -1 });
                let origin = [0, 1, 2].map(|a| if sign[a] > 0 { lo[a] } else { lo[a] + 1 });
                for perm in axes_perms {
                    let mut path = [origin; 4];
                    for step in 0..3 {
                        path[step + 1] = path[step];
                        path[step + 1][perm[step]] += sign[perm[step]];
                    }
                    let mut tet = path.map(|p| {
                        *index.entry(p).or_insert_with(|| {
                            grid_points.push(p);
                            vertices.push(place(p));
                            vertices.len() - 1
                        })
                    });
                    let [a, b, c, d] = tet.map(|v| vertices[v]);
                    if tet_signed_volume(a, b, c, d) < 0.0 {
                        tet.swap(2, 3);
                    }
                    tets.push(tet);
                }
            }
        }
    }

    let faces = extract_boundary_faces(&vertices, &tets)?;
    let tagged: Vec<([usize; 3], SurfaceTag)> = faces
        .iter()
        .map(|f| {
            let shells = f.vertices.map(|v| grid_shell(grid_points[v]));
            let tag = if shells.iter().all(|&s| s == n) {
                SurfaceTag::Farfield
            } else if m > 0 && shells.iter().all(|&s| s == m) {
                SurfaceTag::Object
            } else {
                return Err(Error::Topology(format!(
                    "generated boundary face {:?} lies on neither surface",
                    f.vertices
                )));
            };
            Ok((f.vertices, tag))
        })
        .collect::<Result<_>>()?;
    TetMesh::new(vertices, tets, &tagged)
}

/// Closed triangulated sphere (no volume mesh) with `2n` cells per cube edge
/// on each of the six cube faces, oriented with outward normals.
pub fn sphere_surface(center: Vec3, radius: f64, n: usize) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    if n == 0 || !(radius > 0.0) {
        return Err(Error::Config(format!(
            "sphere surface needs n > 0 and a positive radius, got n = {n}, radius = {radius}"
        )));
    }
    let n = n as i64;
    let mut index: HashMap<[i64; 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in [-n, n] {
            for i in -n..n {
                for j in -n..n {
                    let mut corner = |di: i64, dj: i64| {
                        let mut p = [0; 3];
                        p[axis] = side;
                        p[u] = i + di;
                        p[v] = j + dj;
                        *index.entry(p).or_insert_with(|| {
                            vertices.push(center + grid_direction(p, n) * radius);
                            vertices.len() - 1
                        })
                    };
                    let quad = [corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1)];
                    for mut tri in [[quad[0], quad[1], quad[2]], [quad[0], quad[2], quad[3]]] {
                        let [a, b, c] = tri.map(|t| vertices[t]);
                        if crate::geometry::triangle_normal(a, b, c).dot(a + b + c - center * 3.0)
                            < 0.0
                        {
                            tri.swap(1, 2);
                        }
                        faces.push(tri);
                    }
                }
            }
        }
    }
    Ok((vertices, faces))
}
