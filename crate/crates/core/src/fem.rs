//! P1 finite elements on the transformed interior mesh and assembly of the
//! interior form 𝒱.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::Result;
use crate::flow::{AmbientState, FlowModel, PgCoefficients};
use crate::geometry::{Mat3, Vec3};
use crate::linalg::{C64, I, ZERO};
use crate::mesh::{PgMap, TetMesh};
use crate::quadrature::TetRule;

pub use crate::linalg::SparseMatrix;

/// Continuous piecewise-linear functions on the tetrahedral mesh. Degrees of
/// freedom are ordered with all interior vertices first (ascending vertex
/// index), followed by the Γ∞ vertices (ascending vertex index).
#[derive(Clone, Debug)]
pub struct P1VolumeSpace {
    pub mesh: Arc<TetMesh>,
    pub n_interior: usize,
    pub n_farfield: usize,
    pub vertex_to_dof: Vec<usize>,
    pub dof_to_vertex: Vec<usize>,
}

impl P1VolumeSpace {
    pub fn new(mesh: Arc<TetMesh>) -> Self {
        let farfield = mesh.farfield_vertices();
        let mut on_farfield = vec![false; mesh.vertices.len()];
        for &v in &farfield {
            on_farfield[v] = true;
        }
        let mut dof_to_vertex: Vec<usize> = (0..mesh.vertices.len())
            .filter(|&v| !on_farfield[v])
            .collect();
        let n_interior = dof_to_vertex.len();
        dof_to_vertex.extend(farfield.iter().copied());
        let mut vertex_to_dof = vec![0; mesh.vertices.len()];
        for (d, &v) in dof_to_vertex.iter().enumerate() {
            vertex_to_dof[v] = d;
        }
        P1VolumeSpace {
            mesh,
            n_interior,
            n_farfield: farfield.len(),
            vertex_to_dof,
            dof_to_vertex,
        }
    }

    pub fn dim(&self) -> usize {
        self.n_interior + self.n_farfield
    }

    /// Reorder a per-vertex vector into dof order.
    pub fn vertex_values_to_dofs<T: Copy>(&self, values: &[T]) -> Vec<T> {
        self.dof_to_vertex.iter().map(|&v| values[v]).collect()
    }

    /// Reorder a dof vector into per-vertex order.
    pub fn dofs_to_vertex_values<T: Copy + Default>(&self, dofs: &[T]) -> Vec<T> {
        let mut out = vec![T::default(); dofs.len()];
        for (d, &v) in self.dof_to_vertex.iter().enumerate() {
            out[v] = dofs[d];
        }
        out
    }
}

/// Which integrals of 𝒱 to include; all by default.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FormTerms {
    /// `∫ rΞ∇θⱼ·∇θᵢ`.
    pub diffusion: bool,
    /// `−∫ r k² β θⱼθᵢ`.
    pub reaction: bool,
    /// `i∫ r k V·(θⱼ∇θᵢ − θᵢ∇θⱼ)`.
    pub convection: bool,
}

impl Default for FormTerms {
    fn default() -> Self {
        FormTerms {
            diffusion: true,
            reaction: true,
            convection: true,
        }
    }
}

/// Gradients of the four barycentric functions of tetrahedron `t` and its volume.
pub fn tet_gradients(mesh: &TetMesh, t: usize) -> ([Vec3; 4], f64) {
    let [a, b, c, d] = mesh.tets[t].map(|v| mesh.vertices[v]);
    let (e1, e2, e3) = (b - a, c - a, d - a);
    let jac = Mat3([
        [e1[0], e2[0], e3[0]],
        [e1[1], e2[1], e3[1]],
        [e1[2], e2[2], e3[2]],
    ]);
    let vol = jac.determinant() / 6.0;
    let inv = jac.inverse().expect("mesh tetrahedra have positive volume");
    let g1 = Vec3(inv.0[0]);
    let g2 = Vec3(inv.0[1]);
    let g3 = Vec3(inv.0[2]);
    ([-(g1 + g2 + g3), g1, g2, g3], vol)
}

fn element_matrix(
    mesh: &TetMesh,
    t: usize,
    flow: &dyn FlowModel,
    ambient: &AmbientState,
    map: &PgMap,
    rule: &TetRule,
    terms: FormTerms,
) -> Result<[[C64; 4]; 4]> {
    let (grads, vol) = tet_gradients(mesh, t);
    let corners = mesh.tets[t].map(|v| mesh.vertices[v]);
    let mut a = [[ZERO; 4]; 4];
    for (bary, w) in rule.barycentric.iter().zip(&rule.weights) {
        let x = (0..4).fold(Vec3::ZERO, |acc, l| acc + corners[l] * bary[l]);
        let sample = flow.sample_in_tet(t, *bary, x)?;
        let c = PgCoefficients::from_sample(&sample, ambient, map).map_err(|e| match e {
            crate::error::Error::Supersonic { mach, .. } => {
                crate::error::Error::Supersonic { mach, point: x.0 }
            }
            other => other,
        })?;
        let w = w * vol;
        let xi_grads = grads.map(|g| c.xi.mul_vec(g));
        for i in 0..4 {
            for j in 0..4 {
                let mut v = ZERO;
                if terms.diffusion {
                    v += C64::from(w * c.r * xi_grads[j].dot(grads[i]));
                }
                if terms.reaction {
                    v -= C64::from(w * c.r * c.k * c.k * c.beta * bary[j] * bary[i]);
                }
                if terms.convection {
                    let s = c.v.dot(grads[i] * bary[j] - grads[j] * bary[i]);
                    v += I * (w * c.r * c.k * s);
                }
                a[i][j] += v;
            }
        }
    }
    Ok(a)
}

/// Matrix of the interior form with entries `𝒱(θⱼ, θᵢ)` in dof order.
pub fn assemble_interior_form(
    space: &P1VolumeSpace,
    flow: &dyn FlowModel,
    ambient: &AmbientState,
    map: &PgMap,
    rule: &TetRule,
) -> Result<SparseMatrix> {
    assemble_interior_terms(space, flow, ambient, map, rule, FormTerms::default())
}

/// Like [`assemble_interior_form`] restricted to selected integrals.
pub fn assemble_interior_terms(
    space: &P1VolumeSpace,
    flow: &dyn FlowModel,
    ambient: &AmbientState,
    map: &PgMap,
    rule: &TetRule,
    terms: FormTerms,
) -> Result<SparseMatrix> {
    let mesh = &space.mesh;
    let elements: Vec<[[C64; 4]; 4]> = (0..mesh.tets.len())
        .into_par_iter()
        .map(|t| element_matrix(mesh, t, flow, ambient, map, rule, terms))
        .collect::<Result<_>>()?;
    let mut triplets = Vec::with_capacity(16 * elements.len());
    for (t, a) in elements.iter().enumerate() {
        let dofs = mesh.tets[t].map(|v| space.vertex_to_dof[v]);
        for i in 0..4 {
            for j in 0..4 {
                triplets.push((dofs[i], dofs[j], a[i][j]));
            }
        }
    }
    SparseMatrix::from_triplets(space.dim(), space.dim(), triplets)
}

/// Exact P1 stiffness `∫∇θⱼ·∇θᵢ` and mass `∫θⱼθᵢ` matrices in dof order.
pub fn assemble_stiffness_mass(space: &P1VolumeSpace) -> (SparseMatrix, SparseMatrix) {
    let mesh = &space.mesh;
    let mut ks = Vec::with_capacity(16 * mesh.tets.len());
    let mut ms = Vec::with_capacity(16 * mesh.tets.len());
    for t in 0..mesh.tets.len() {
        let (g, vol) = tet_gradients(mesh, t);
        let dofs = mesh.tets[t].map(|v| space.vertex_to_dof[v]);
        for i in 0..4 {
            for j in 0..4 {
                ks.push((dofs[i], dofs[j], C64::from(vol * g[i].dot(g[j]))));
                let m = if i == j { vol / 10.0 } else { vol / 20.0 };
                ms.push((dofs[i], dofs[j], C64::from(m)));
            }
        }
    }
    let n = space.dim();
    (
        SparseMatrix::from_triplets(n, n, ks).expect("dofs in range"),
        SparseMatrix::from_triplets(n, n, ms).expect("dofs in range"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::UniformFlow;
    use crate::mesh::SurfaceTag;

    fn reference_space() -> P1VolumeSpace {
        let v = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ];
        let t = vec![[0, 1, 2, 3]];
        let faces: Vec<_> = crate::mesh::extract_boundary_faces(&v, &t)
            .unwrap()
            .into_iter()
            .map(|f| (f.vertices, SurfaceTag::Object))
            .collect();
        P1VolumeSpace::new(Arc::new(TetMesh::new(v, t, &faces).unwrap()))
    }

    #[test]
    fn laplace_element_rows_sum_to_zero() {
        let space = reference_space();
        let ambient = AmbientState::new(1.0, 1.0, Vec3::ZERO, 0.0).unwrap();
        let map = PgMap::identity();
        let a = assemble_interior_form(
            &space,
            &UniformFlow::new(&ambient),
            &ambient,
            &map,
            &TetRule::degree2(),
        )
        .unwrap();
        let (k, _) = assemble_stiffness_mass(&space);
        for i in 0..4 {
            let s: C64 = a.row(i).map(|(_, v)| v).sum();
            assert!(s.norm() < 1e-15);
            for j in 0..4 {
                assert!((a.get(i, j) - k.get(i, j)).norm() < 1e-15);
            }
        }
        // Reference P1 stiffness: diagonal 1/2, 1/6, 1/6, 1/6.
        assert!((k.get(0, 0).re - 0.5).abs() < 1e-15);
        assert!((k.get(1, 1).re - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn interior_dofs_come_first() {
        let space = reference_space();
        assert_eq!(space.n_farfield, 0);
        assert_eq!(space.n_interior, 4);
    }
}
