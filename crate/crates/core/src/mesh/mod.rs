//! Tetrahedral meshes of the interior region with tagged boundary surfaces.

pub mod generate;
pub mod gmsh;
pub mod pg;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{tet_signed_volume, triangle_normal, Vec3};

pub use pg::PgMap;

/// Boundary surface tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceTag {
    /// Γ: surface of the scattering object.
    Object,
    /// Γ∞: coupling surface between the FEM and BEM regions.
    Farfield,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryFace {
    /// Vertex indices ordered so the right-hand normal points away from the owning tet.
    pub vertices: [usize; 3],
    pub tag: SurfaceTag,
    pub normal: Vec3,
    pub area: f64,
    /// Index of the tetrahedron owning this face.
    pub tet: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EdgeStats {
    pub h_min: f64,
    pub h_mean: f64,
    pub h_max: f64,
    pub count: usize,
}

#[derive(Clone, Debug)]
pub struct TetMesh {
    pub vertices: Vec<Vec3>,
    pub tets: Vec<[usize; 4]>,
    pub boundary_faces: Vec<BoundaryFace>,
    pub edge_stats: EdgeStats,
}

/// Mesh counts and edge statistics, emitted as JSON by `mesh-info`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshSummary {
    pub vertices: usize,
    pub tetrahedra: usize,
    pub object_faces: usize,
    pub farfield_faces: usize,
    pub farfield_vertices: usize,
    pub volume: f64,
    pub smallest_edge: f64,
    pub mean_edge: f64,
    pub largest_edge: f64,
}

/// Boundary faces split by surface, as indices into `TetMesh::boundary_faces`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BoundaryPartition {
    pub object: Vec<usize>,
    pub farfield: Vec<usize>,
}

/// An unoriented boundary face found by [`extract_boundary_faces`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrientedFace {
    pub vertices: [usize; 3],
    pub tet: usize,
}

const TET_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]];

fn sorted3(mut f: [usize; 3]) -> [usize; 3] {
    f.sort_unstable();
    f
}

/// Rotate a triangle so its smallest index comes first, preserving orientation.
fn canonical_rotation(f: [usize; 3]) -> [usize; 3] {
    let i = (0..3).min_by_key(|&i| f[i]).unwrap_or(0);
    [f[i], f[(i + 1) % 3], f[(i + 2) % 3]]
}

/// Faces incident to exactly one tetrahedron, oriented away from it and
/// listed in ascending order of their sorted vertex triple.
pub fn extract_boundary_faces(vertices: &[Vec3], tets: &[[usize; 4]]) -> Result<Vec<OrientedFace>> {
    let mut faces: HashMap<[usize; 3], (u32, usize, [usize; 3])> =
        HashMap::with_capacity(tets.len() * 2);
    for (t, tet) in tets.iter().enumerate() {
        for local in TET_FACES {
            let f = [tet[local[0]], tet[local[1]], tet[local[2]]];
            let entry = faces.entry(sorted3(f)).or_insert((0, t, f));
            entry.0 += 1;
            if entry.0 > 2 {
                return Err(Error::Topology(format!(
                    "face {:?} shared by more than two tetrahedra",
                    sorted3(f)
                )));
            }
        }
    }
    let mut out: Vec<([usize; 3], OrientedFace)> = faces
        .into_iter()
        .filter(|(_, (count, _, _))| *count == 1)
        .map(|(key, (_, t, f))| {
            let tet = tets[t];
            let opposite = tet
                .iter()
                .copied()
                .find(|v| !f.contains(v))
                .unwrap_or(tet[0]);
            let n = triangle_normal(vertices[f[0]], vertices[f[1]], vertices[f[2]]);
            let oriented = if n.dot(vertices[opposite] - vertices[f[0]]) > 0.0 {
                [f[0], f[2], f[1]]
            } else {
                f
            };
            (
                key,
                OrientedFace {
                    vertices: canonical_rotation(oriented),
                    tet: t,
                },
            )
        })
        .collect();
    out.sort_unstable_by_key(|(key, _)| *key);
    Ok(out.into_iter().map(|(_, f)| f).collect())
}

fn edge_stats(vertices: &[Vec3], tets: &[[usize; 4]]) -> EdgeStats {
    let mut edges: Vec<(usize, usize)> = tets
        .iter()
        .flat_map(|t| {
            [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
                .into_iter()
                .map(move |(a, b)| (t[a].min(t[b]), t[a].max(t[b])))
        })
        .collect();
    edges.sort_unstable();
    edges.dedup();
    if edges.is_empty() {
        return EdgeStats {
            h_min: 0.0,
            h_mean: 0.0,
            h_max: 0.0,
            count: 0,
        };
    }
    let lengths = edges
        .iter()
        .map(|&(a, b)| vertices[a].distance(vertices[b]));
    let (mut lo, mut hi, mut sum) = (f64::INFINITY, 0.0_f64, 0.0);
    for l in lengths {
        lo = lo.min(l);
        hi = hi.max(l);
        sum += l;
    }
    EdgeStats {
        h_min: lo,
        h_mean: sum / edges.len() as f64,
        h_max: hi,
        count: edges.len(),
    }
}

impl TetMesh {
    /// Build a mesh, validating topology and attaching the given surface tags
    /// to the boundary faces.
    pub fn new(
        vertices: Vec<Vec3>,
        tets: Vec<[usize; 4]>,
        tagged_faces: &[([usize; 3], SurfaceTag)],
    ) -> Result<Self> {
        let nv = vertices.len();
        if tets.is_empty() {
            return Err(Error::Topology("mesh contains no tetrahedra".into()));
        }
        for (t, tet) in tets.iter().enumerate() {
            if let Some(&v) = tet.iter().find(|&&v| v >= nv) {
                return Err(Error::Topology(format!(
                    "tetrahedron {t} references nonexistent vertex {v} (mesh has {nv})"
                )));
            }
            let vol = tet_signed_volume(
                vertices[tet[0]],
                vertices[tet[1]],
                vertices[tet[2]],
                vertices[tet[3]],
            );
            if !(vol > 0.0) {
                return Err(Error::Topology(format!(
                    "tetrahedron {t} is inverted or degenerate (signed volume {vol:.3e})"
                )));
            }
        }
        let mut tags: BTreeMap<[usize; 3], SurfaceTag> = BTreeMap::new();
        for (f, tag) in tagged_faces {
            if let Some(&v) = f.iter().find(|&&v| v >= nv) {
                return Err(Error::Topology(format!(
                    "boundary triangle references nonexistent vertex {v}"
                )));
            }
            if let Some(prev) = tags.insert(sorted3(*f), *tag) {
                if prev != *tag {
                    return Err(Error::Tag(format!(
                        "triangle {:?} carries both surface tags",
                        sorted3(*f)
                    )));
                }
            }
        }
        let boundary = extract_boundary_faces(&vertices, &tets)?;
        let mut faces = Vec::with_capacity(boundary.len());
        for bf in &boundary {
            let key = sorted3(bf.vertices);
            let tag = tags.remove(&key).ok_or_else(|| {
                Error::Tag(format!(
                    "boundary face {key:?} has neither the object nor the farfield tag"
                ))
            })?;
            faces.push(BoundaryFace {
                vertices: bf.vertices,
                tag,
                normal: Vec3::ZERO,
                area: 0.0,
                tet: bf.tet,
            });
        }
        if let Some((f, _)) = tags.into_iter().next() {
            return Err(Error::Topology(format!(
                "tagged triangle {f:?} is not a boundary face of the tetrahedral mesh"
            )));
        }
        let mut mesh = TetMesh {
            edge_stats: edge_stats(&vertices, &tets),
            vertices,
            tets,
            boundary_faces: faces,
        };
        mesh.update_face_geometry();
        Ok(mesh)
    }

    fn update_face_geometry(&mut self) {
        for f in &mut self.boundary_faces {
            let [a, b, c] = f.vertices.map(|v| self.vertices[v]);
            let n = triangle_normal(a, b, c);
            f.area = 0.5 * n.norm();
            f.normal = n.normalized();
        }
    }

    /// Same connectivity and tags with new vertex coordinates. The map must
    /// preserve orientation.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> TetMesh {
        assert_eq!(vertices.len(), self.vertices.len());
        let mut mesh = TetMesh {
            edge_stats: edge_stats(&vertices, &self.tets),
            vertices,
            tets: self.tets.clone(),
            boundary_faces: self.boundary_faces.clone(),
        };
        mesh.update_face_geometry();
        mesh
    }

    pub fn tet_volume(&self, t: usize) -> f64 {
        let [a, b, c, d] = self.tets[t].map(|v| self.vertices[v]);
        tet_signed_volume(a, b, c, d)
    }

    pub fn volume(&self) -> f64 {
        (0..self.tets.len()).map(|t| self.tet_volume(t)).sum()
    }

    pub fn centroid(&self) -> Vec3 {
        let mut c = Vec3::ZERO;
        let mut vol = 0.0;
        for (t, tet) in self.tets.iter().enumerate() {
            let v = self.tet_volume(t);
            let m = tet
                .iter()
                .fold(Vec3::ZERO, |acc, &i| acc + self.vertices[i])
                * 0.25;
            c += m * v;
            vol += v;
        }
        c * (1.0 / vol)
    }

    /// Partition of the boundary faces by tag.
    pub fn extract_boundary(&self) -> BoundaryPartition {
        let mut part = BoundaryPartition::default();
        for (i, f) in self.boundary_faces.iter().enumerate() {
            match f.tag {
                SurfaceTag::Object => part.object.push(i),
                SurfaceTag::Farfield => part.farfield.push(i),
            }
        }
        part
    }

    pub fn faces_with_tag(&self, tag: SurfaceTag) -> impl Iterator<Item = &BoundaryFace> {
        self.boundary_faces.iter().filter(move |f| f.tag == tag)
    }

    /// Sorted indices of the vertices lying on Γ∞.
    pub fn farfield_vertices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .faces_with_tag(SurfaceTag::Farfield)
            .flat_map(|f| f.vertices)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn summary(&self) -> MeshSummary {
        let part = self.extract_boundary();
        MeshSummary {
            vertices: self.vertices.len(),
            tetrahedra: self.tets.len(),
            object_faces: part.object.len(),
            farfield_faces: part.farfield.len(),
            farfield_vertices: self.farfield_vertices().len(),
            volume: self.volume(),
            smallest_edge: self.edge_stats.h_min,
            mean_edge: self.edge_stats.h_mean,
            largest_edge: self.edge_stats.h_max,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_tet() -> (Vec<Vec3>, Vec<[usize; 4]>) {
        (
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(0.0, 0.0, 1.0),
            ],
            vec![[0, 1, 2, 3]],
        )
    }

    fn all_farfield(v: &[Vec3], t: &[[usize; 4]]) -> Vec<([usize; 3], SurfaceTag)> {
        extract_boundary_faces(v, t)
            .unwrap()
            .into_iter()
            .map(|f| (f.vertices, SurfaceTag::Farfield))
            .collect()
    }

    #[test]
    fn single_tet_has_outward_normals() {
        let (v, t) = reference_tet();
        let tags = all_farfield(&v, &t);
        let mesh = TetMesh::new(v, t, &tags).unwrap();
        assert_eq!(mesh.boundary_faces.len(), 4);
        let c = mesh.centroid();
        for f in &mesh.boundary_faces {
            let fc = f
                .vertices
                .iter()
                .fold(Vec3::ZERO, |a, &i| a + mesh.vertices[i])
                * (1.0 / 3.0);
            assert!(f.normal.dot(fc - c) > 0.0);
        }
    }

    #[test]
    fn glued_tets_exclude_shared_face() {
        let (mut v, mut t) = reference_tet();
        v.push(Vec3::new(1.0, 1.0, 1.0));
        t.push([1, 2, 3, 4]);
        let tags = all_farfield(&v, &t);
        let mesh = TetMesh::new(v, t, &tags).unwrap();
        assert_eq!(mesh.boundary_faces.len(), 6);
        assert!(mesh
            .boundary_faces
            .iter()
            .all(|f| sorted3(f.vertices) != [1, 2, 3]));
    }

    #[test]
    fn nonexistent_vertex_is_topology_error() {
        let (v, _) = reference_tet();
        let err = TetMesh::new(v, vec![[0, 1, 2, 7]], &[]).unwrap_err();
        assert!(matches!(err, Error::Topology(_)));
    }

    #[test]
    fn inverted_tet_is_topology_error() {
        let (v, _) = reference_tet();
        let err = TetMesh::new(v, vec![[0, 2, 1, 3]], &[]).unwrap_err();
        assert!(matches!(err, Error::Topology(_)));
    }

    #[test]
    fn untagged_face_is_tag_error() {
        let (v, t) = reference_tet();
        let mut tags = all_farfield(&v, &t);
        tags.pop();
        assert!(matches!(TetMesh::new(v, t, &tags), Err(Error::Tag(_))));
    }

    #[test]
    fn face_shared_by_three_tets_rejected() {
        let (mut v, mut t) = reference_tet();
        v.push(Vec3::new(1.0, 1.0, 1.0));
        v.push(Vec3::new(2.0, 2.0, 2.0));
        t.push([1, 2, 3, 4]);
        t.push([1, 2, 3, 5]);
        assert!(matches!(
            extract_boundary_faces(&v, &t),
            Err(Error::Topology(_))
        ));
    }
}
