//! Galerkin boundary integral operators of the Helmholtz equation on Γ∞ and
//! the associated layer potentials.
//!
//! Conventions: the normal on Γ∞ points into the exterior region, the double
//! layer uses `∂E(y − x)/∂n_y`, and exterior fields are represented as
//! `u = −𝒮[γ₁u] + 𝒟[γ₀u]` so that `D·1 = −½` for the Laplace kernel.

mod assembly;
mod potentials;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::P1VolumeSpace;
use crate::geometry::{triangle_normal, Vec3};
use crate::linalg::{SparseMatrix, C64};
use crate::mesh::{SurfaceTag, TetMesh};

pub use crate::linalg::DenseMatrix;
pub use assembly::{
    assemble_adjoint_double_layer, assemble_double_layer, assemble_hypersingular,
    assemble_operators, assemble_single_layer, BemOperators,
};
pub use potentials::{
    double_layer_potential, evaluate_potential_gradients, evaluate_potentials, near_surface_points,
    single_layer_potential, PotentialQuadrature,
};

use std::f64::consts::PI;

/// Helmholtz fundamental solution `E(x) = exp(ik|x|)/(4π|x|)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HelmholtzKernel {
    pub k: C64,
}

impl HelmholtzKernel {
    pub fn new(k: f64) -> Self {
        HelmholtzKernel { k: C64::from(k) }
    }

    pub fn complex(k: C64) -> Self {
        HelmholtzKernel { k }
    }

    /// `E` as a function of the distance `r > 0`.
    pub fn radial(&self, r: f64) -> C64 {
        (C64::i() * self.k * r).exp() / (4.0 * PI * r)
    }

    /// `E(d)`.
    pub fn value(&self, d: Vec3) -> C64 {
        self.radial(d.norm())
    }

    /// `∇E(d)`.
    pub fn gradient(&self, d: Vec3) -> [C64; 3] {
        let r = d.norm();
        let g = self.radial(r) * (C64::i() * self.k - 1.0 / r) / r;
        [g * d[0], g * d[1], g * d[2]]
    }
}

/// Quadrature orders for panel-pair and potential integrals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BemQuadrature {
    /// Gauss points per dimension of the Sauter–Schwab rules.
    pub singular_order: usize,
    /// Collapsed Gauss order per triangle for well-separated pairs (n × n points).
    pub regular_order: usize,
    /// Order for nearby, non-touching pairs.
    pub near_order: usize,
    /// Pairs whose centroid distance is below this multiple of the larger
    /// diameter use `near_order`.
    pub near_factor: f64,
}

impl Default for BemQuadrature {
    fn default() -> Self {
        BemQuadrature {
            singular_order: 4,
            regular_order: 3,
            near_order: 5,
            near_factor: 2.0,
        }
    }
}

/// P0 (faces) and P1 (vertices) spaces on the triangulated Γ∞.
#[derive(Clone, Debug)]
pub struct SurfaceSpaces {
    pub vertices: Vec<Vec3>,
    /// Local vertex indices, oriented with the normal pointing to the exterior.
    pub faces: Vec<[usize; 3]>,
    pub normals: Vec<Vec3>,
    pub areas: Vec<f64>,
    /// Mesh vertex of each surface vertex (empty for standalone surfaces).
    pub mesh_vertex: Vec<usize>,
    /// Volume dof of surface vertex 0; surface vertex `s` is volume dof `trace_offset + s`.
    pub trace_offset: usize,
    vertex_faces: Vec<Vec<usize>>,
}

impl SurfaceSpaces {
    /// Spaces on the Γ∞ faces of `mesh`. Surface vertices follow the Γ∞
    /// dof order of `volume`, which makes the trace map the identity on the
    /// trailing block of volume dofs.
    pub fn from_mesh(mesh: &TetMesh, volume: &P1VolumeSpace) -> Result<Self> {
        let farfield = mesh.farfield_vertices();
        let mut local = vec![usize::MAX; mesh.vertices.len()];
        for (s, &v) in farfield.iter().enumerate() {
            local[v] = s;
            if volume.vertex_to_dof[v] != volume.n_interior + s {
                return Err(Error::DimensionMismatch(
                    "volume space dof order does not match the Γ∞ vertex order".into(),
                ));
            }
        }
        let faces: Vec<[usize; 3]> = mesh
            .faces_with_tag(SurfaceTag::Farfield)
            .map(|f| f.vertices.map(|v| local[v]))
            .collect();
        let vertices = farfield.iter().map(|&v| mesh.vertices[v]).collect();
        let mut spaces = Self::from_triangles(vertices, faces)?;
        spaces.mesh_vertex = farfield;
        spaces.trace_offset = volume.n_interior;
        Ok(spaces)
    }

    /// Spaces on a standalone closed triangulation with outward orientation.
    pub fn from_triangles(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::Topology("the coupling surface has no faces".into()));
        }
        let mut normals = Vec::with_capacity(faces.len());
        let mut areas = Vec::with_capacity(faces.len());
        let mut vertex_faces = vec![Vec::new(); vertices.len()];
        for (i, f) in faces.iter().enumerate() {
            let n = triangle_normal(vertices[f[0]], vertices[f[1]], vertices[f[2]]);
            let area = 0.5 * n.norm();
            if !(area > 0.0) {
                return Err(Error::DegenerateFace(i));
            }
            normals.push(n.normalized());
            areas.push(area);
            for &v in f {
                vertex_faces[v].push(i);
            }
        }
        Ok(SurfaceSpaces {
            vertices,
            faces,
            normals,
            areas,
            mesh_vertex: Vec::new(),
            trace_offset: 0,
            vertex_faces,
        })
    }

    /// Number of P0 dofs (faces).
    pub fn q(&self) -> usize {
        self.faces.len()
    }

    /// Number of P1 dofs (vertices).
    pub fn r(&self) -> usize {
        self.vertices.len()
    }

    pub fn area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn faces_of_vertex(&self, v: usize) -> &[usize] {
        &self.vertex_faces[v]
    }

    pub fn face_centroid(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.faces[f].map(|v| self.vertices[v]);
        (a + b + c) * (1.0 / 3.0)
    }

    /// Longest edge of face `f`.
    pub fn face_diameter(&self, f: usize) -> f64 {
        let [a, b, c] = self.faces[f].map(|v| self.vertices[v]);
        a.distance(b).max(b.distance(c)).max(c.distance(a))
    }

    /// Point of face `f` at reference coordinates `(u, v)`.
    pub fn face_point(&self, f: usize, uv: [f64; 2]) -> Vec3 {
        let [a, b, c] = self.faces[f].map(|v| self.vertices[v]);
        a + (b - a) * uv[0] + (c - a) * uv[1]
    }

    /// P0–P1 mass matrix `∫ ψᵢ ξⱼ` (q × r).
    pub fn mass_p0_p1(&self) -> SparseMatrix {
        let trips = self
            .faces
            .iter()
            .enumerate()
            .flat_map(|(i, f)| {
                let w = C64::from(self.areas[i] / 3.0);
                f.iter().map(move |&v| (i, v, w))
            })
            .collect();
        SparseMatrix::from_triplets(self.q(), self.r(), trips).expect("surface indices in range")
    }

    /// P1 interpolation values of `f` at the surface vertices.
    pub fn interpolate_p1(&self, f: impl Fn(Vec3) -> C64) -> Vec<C64> {
        self.vertices.iter().map(|&x| f(x)).collect()
    }

    /// Faces sharing at least one vertex with face `f` (including `f`), grown
    /// `radius` times.
    pub fn face_neighbourhood(&self, f: usize, radius: usize) -> Vec<usize> {
        let mut set = vec![f];
        for _ in 0..radius {
            let mut next: Vec<usize> = set
                .iter()
                .flat_map(|&g| {
                    self.faces[g]
                        .iter()
                        .flat_map(|&v| self.vertex_faces[v].iter().copied())
                })
                .collect();
            next.sort_unstable();
            next.dedup();
            set = next;
        }
        set.sort_unstable();
        set
    }

    /// Vertices sharing a face with vertex `v` (including `v`), grown `radius` times.
    pub fn vertex_neighbourhood(&self, v: usize, radius: usize) -> Vec<usize> {
        let mut set = vec![v];
        for _ in 0..radius {
            let mut next: Vec<usize> = set
                .iter()
                .flat_map(|&w| self.vertex_faces[w].iter().flat_map(|&f| self.faces[f]))
                .collect();
            next.sort_unstable();
            next.dedup();
            set = next;
        }
        set.sort_unstable();
        set
    }

    /// Total signed solid angle of the surface seen from `x`, divided by 4π:
    /// about 1 inside, 0 outside.
    pub fn winding_number(&self, x: Vec3) -> f64 {
        let total: f64 = self
            .faces
            .iter()
            .map(|f| {
                let [a, b, c] = f.map(|v| self.vertices[v]);
                crate::geometry::solid_angle(x, a, b, c)
            })
            .sum();
        total / (4.0 * PI)
    }
}
