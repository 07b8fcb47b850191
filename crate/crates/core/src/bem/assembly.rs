//! Panel-pair assembly of the single-layer, double-layer, adjoint
//! double-layer and hypersingular Galerkin matrices.
//!
//! Every unordered pair of faces is integrated once, in canonical order
//! (lower face index first), and all kernel combinations needed by the four
//! operators are accumulated in a single pass. Scattering the same numbers
//! into both triangles makes S and N exactly symmetric and D̃ exactly Dᵀ.

use rayon::prelude::*;

use super::{BemQuadrature, HelmholtzKernel, SurfaceSpaces};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::linalg::{DenseMatrix, C64, ZERO};
use crate::quadrature::{PairRule, PanelRelation, TriangleRule};

/// The four boundary operators at one wavenumber.
#[derive(Clone, Debug)]
pub struct BemOperators {
    /// `⟨Sψⱼ, ψᵢ⟩`, q × q.
    pub single_layer: DenseMatrix,
    /// `⟨Dξⱼ, ψᵢ⟩`, q × r.
    pub double_layer: DenseMatrix,
    /// `⟨D̃ψⱼ, ξᵢ⟩`, r × q.
    pub adjoint_double_layer: DenseMatrix,
    /// `⟨Nξⱼ, ξᵢ⟩`, r × r.
    pub hypersingular: DenseMatrix,
    pub kernel: HelmholtzKernel,
}

/// Integrals over one ordered face pair `(a, b)`, `x ∈ a`, `y ∈ b`, indexed by
/// the original local vertex order of each face.
#[derive(Clone, Copy, Debug, Default)]
struct PairIntegrals {
    /// `∬ E(y − x)`.
    s: C64,
    /// `∬ E(y − x) φ_α(x) φ_β(y)`.
    m: [[C64; 3]; 3],
    /// `∬ ∂E(y − x)/∂n_y φ_β(y)`.
    gy: [C64; 3],
    /// `∬ ∂E(y − x)/∂n_x φ_α(x)`.
    gx: [C64; 3],
}

struct Rules {
    identical: PairRule,
    edge: PairRule,
    vertex: PairRule,
    regular: PairRule,
    near: PairRule,
    near_factor: f64,
}

impl Rules {
    fn new(q: &BemQuadrature) -> Result<Self> {
        if q.singular_order == 0 || q.regular_order == 0 || q.near_order == 0 {
            return Err(Error::Quadrature(
                "quadrature orders must be positive".into(),
            ));
        }
        Ok(Rules {
            identical: PairRule::identical(q.singular_order),
            edge: PairRule::edge_adjacent(q.singular_order),
            vertex: PairRule::vertex_adjacent(q.singular_order),
            regular: PairRule::regular(&TriangleRule::collapsed_gauss(q.regular_order)),
            near: PairRule::regular(&TriangleRule::collapsed_gauss(q.near_order)),
            near_factor: q.near_factor,
        })
    }
}

/// Per-face data reused across all pairs.
struct FaceData {
    verts: [usize; 3],
    corners: [Vec3; 3],
    normal: Vec3,
    area: f64,
    centroid: Vec3,
    diameter: f64,
    /// Surface curls `n × ∇_Γ φ_α` of the three local P1 functions.
    curls: [Vec3; 3],
}

fn face_data(spaces: &SurfaceSpaces) -> Vec<FaceData> {
    (0..spaces.q())
        .map(|f| {
            let verts = spaces.faces[f];
            let corners = verts.map(|v| spaces.vertices[v]);
            let n = spaces.normals[f];
            let area = spaces.areas[f];
            let [a, b, c] = corners;
            let grads = [n.cross(c - b), n.cross(a - c), n.cross(b - a)].map(|g| g * (0.5 / area));
            FaceData {
                verts,
                corners,
                normal: n,
                area,
                centroid: spaces.face_centroid(f),
                diameter: spaces.face_diameter(f),
                curls: grads.map(|g| n.cross(g)),
            }
        })
        .collect()
}

/// Classify a face pair and return local vertex permutations placing the
/// shared vertices first, in matching order.
fn classify(
    a: &FaceData,
    b: &FaceData,
    same: bool,
) -> Result<(PanelRelation, [usize; 3], [usize; 3])> {
    if same {
        return Ok((PanelRelation::Identical, [0, 1, 2], [0, 1, 2]));
    }
    let shared: Vec<(usize, usize)> = (0..3)
        .filter_map(|i| (0..3).find(|&j| b.verts[j] == a.verts[i]).map(|j| (i, j)))
        .collect();
    let third = |i: usize, j: usize| 3 - i - j;
    match shared.len() {
        0 => Ok((PanelRelation::Regular, [0, 1, 2], [0, 1, 2])),
        1 => {
            let (ia, ib) = shared[0];
            let pa = [ia, (ia + 1) % 3, (ia + 2) % 3];
            let pb = [ib, (ib + 1) % 3, (ib + 2) % 3];
            Ok((PanelRelation::Vertex, pa, pb))
        }
        2 => {
            let (ia0, ib0) = shared[0];
            let (ia1, ib1) = shared[1];
            Ok((
                PanelRelation::Edge,
                [ia0, ia1, third(ia0, ia1)],
                [ib0, ib1, third(ib0, ib1)],
            ))
        }
        n => Err(Error::Quadrature(format!(
            "distinct faces {:?} and {:?} share {n} vertices",
            a.verts, b.verts
        ))),
    }
}

fn integrate_pair(
    a: &FaceData,
    b: &FaceData,
    same: bool,
    kernel: &HelmholtzKernel,
    rules: &Rules,
) -> Result<PairIntegrals> {
    let (relation, pa, pb) = classify(a, b, same)?;
    let rule = match relation {
        PanelRelation::Identical => &rules.identical,
        PanelRelation::Edge => &rules.edge,
        PanelRelation::Vertex => &rules.vertex,
        PanelRelation::Regular => {
            if a.centroid.distance(b.centroid) < rules.near_factor * a.diameter.max(b.diameter) {
                &rules.near
            } else {
                &rules.regular
            }
        }
    };
    let (xa0, xa1, xa2) = (a.corners[pa[0]], a.corners[pa[1]], a.corners[pa[2]]);
    let (yb0, yb1, yb2) = (b.corners[pb[0]], b.corners[pb[1]], b.corners[pb[2]]);
    let (ea1, ea2) = (xa1 - xa0, xa2 - xa0);
    let (eb1, eb2) = (yb1 - yb0, yb2 - yb0);
    let jac = 4.0 * a.area * b.area;
    let ik = C64::i() * kernel.k;
    let inv4pi = 1.0 / (4.0 * std::f64::consts::PI);

    let mut s = ZERO;
    let mut m = [[ZERO; 3]; 3];
    let mut gy = [ZERO; 3];
    let mut gx = [ZERO; 3];
    for i in 0..rule.len() {
        let [u, v] = rule.x[i];
        let [s2, t2] = rule.y[i];
        let x = xa0 + ea1 * u + ea2 * v;
        let y = yb0 + eb1 * s2 + eb2 * t2;
        let d = y - x;
        let r = d.norm();
        let e = (ik * r).exp() * (inv4pi / r);
        let g = e * (ik - 1.0 / r) / r;
        let w = rule.weights[i] * jac;
        let phi_x = [1.0 - u - v, u, v];
        let phi_y = [1.0 - s2 - t2, s2, t2];
        let we = e * w;
        let ky = g * (w * d.dot(b.normal));
        let kx = -g * (w * d.dot(a.normal));
        s += we;
        for al in 0..3 {
            let wa = we * phi_x[al];
            for be in 0..3 {
                m[pa[al]][pb[be]] += wa * phi_y[be];
            }
            gx[pa[al]] += kx * phi_x[al];
            gy[pb[al]] += ky * phi_y[al];
        }
    }
    Ok(PairIntegrals { s, m, gy, gx })
}

/// Which matrices to keep.
#[derive(Clone, Copy)]
struct Wanted {
    s: bool,
    d: bool,
    dt: bool,
    n: bool,
}

fn assemble(
    spaces: &SurfaceSpaces,
    kernel: &HelmholtzKernel,
    quad: &BemQuadrature,
    want: Wanted,
) -> Result<BemOperators> {
    let (q, r) = (spaces.q(), spaces.r());
    let rules = Rules::new(quad)?;
    let faces = face_data(spaces);
    let k2 = kernel.k * kernel.k;
    let dim = |on: bool, a: usize, b: usize| if on { (a, b) } else { (0, 0) };
    let (sr, sc) = dim(want.s, q, q);
    let (dr, dc) = dim(want.d, q, r);
    let (tr, tc) = dim(want.dt, r, q);
    let (nr, nc) = dim(want.n, r, r);
    let mut s_mat = DenseMatrix::zeros(sr, sc);
    let mut d_mat = DenseMatrix::zeros(dr, dc);
    let mut dt_mat = DenseMatrix::zeros(tr, tc);
    let mut n_mat = DenseMatrix::zeros(nr, nc);

    for ia in 0..q {
        let fa = &faces[ia];
        let row: Vec<PairIntegrals> = (ia..q)
            .into_par_iter()
            .map(|ib| integrate_pair(fa, &faces[ib], ia == ib, kernel, &rules))
            .collect::<Result<_>>()?;
        for (off, pi) in row.iter().enumerate() {
            let ib = ia + off;
            let fb = &faces[ib];
            let same = ia == ib;
            if want.s {
                s_mat.set(ia, ib, pi.s);
                if !same {
                    s_mat.set(ib, ia, pi.s);
                }
            }
            for l in 0..3 {
                if want.d {
                    d_mat.add_at(ia, fb.verts[l], pi.gy[l]);
                    if !same {
                        d_mat.add_at(ib, fa.verts[l], pi.gx[l]);
                    }
                }
                if want.dt {
                    dt_mat.add_at(fa.verts[l], ib, pi.gx[l]);
                    if !same {
                        dt_mat.add_at(fb.verts[l], ia, pi.gy[l]);
                    }
                }
            }
            if want.n {
                let nn = fa.normal.dot(fb.normal);
                let local = |al: usize, be: usize| {
                    pi.s * fa.curls[al].dot(fb.curls[be]) - k2 * nn * pi.m[al][be]
                };
                for al in 0..3 {
                    for be in 0..3 {
                        let v = if same {
                            0.5 * (local(al, be) + local(be, al))
                        } else {
                            local(al, be)
                        };
                        n_mat.add_at(fa.verts[al], fb.verts[be], v);
                        if !same {
                            n_mat.add_at(fb.verts[be], fa.verts[al], v);
                        }
                    }
                }
            }
        }
    }
    let ops = BemOperators {
        single_layer: s_mat,
        double_layer: d_mat,
        adjoint_double_layer: dt_mat,
        hypersingular: n_mat,
        kernel: *kernel,
    };
    for (name, m) in [
        ("single layer", &ops.single_layer),
        ("double layer", &ops.double_layer),
        ("adjoint double layer", &ops.adjoint_double_layer),
        ("hypersingular", &ops.hypersingular),
    ] {
        if !m.is_finite() {
            return Err(Error::Quadrature(format!(
                "non-finite entries in the {name} matrix"
            )));
        }
    }
    Ok(ops)
}

/// All four operators in one pass over the panel pairs.
pub fn assemble_operators(
    spaces: &SurfaceSpaces,
    kernel: &HelmholtzKernel,
    quad: &BemQuadrature,
) -> Result<BemOperators> {
    assemble(
        spaces,
        kernel,
        quad,
        Wanted {
            s: true,
            d: true,
            dt: true,
            n: true,
        },
    )
}

const NONE: Wanted = Wanted {
    s: false,
    d: false,
    dt: false,
    n: false,
};

/// `⟨Sψⱼ, ψᵢ⟩ = ∬ E(y − x) ψⱼ(y) ψᵢ(x)`.
pub fn assemble_single_layer(
    spaces: &SurfaceSpaces,
    kernel: &HelmholtzKernel,
    quad: &BemQuadrature,
) -> Result<DenseMatrix> {
    Ok(assemble(spaces, kernel, quad, Wanted { s: true, ..NONE })?.single_layer)
}

/// `⟨Dξⱼ, ψᵢ⟩ = ∬ ∂E(y − x)/∂n_y ξⱼ(y) ψᵢ(x)`.
pub fn assemble_double_layer(
    spaces: &SurfaceSpaces,
    kernel: &HelmholtzKernel,
    quad: &BemQuadrature,
) -> Result<DenseMatrix> {
    Ok(assemble(spaces, kernel, quad, Wanted { d: true, ..NONE })?.double_layer)
}

/// `⟨D̃ψⱼ, ξᵢ⟩ = ∬ ∂E(y − x)/∂n_x ψⱼ(y) ξᵢ(x)`.
pub fn assemble_adjoint_double_layer(
    spaces: &SurfaceSpaces,
    kernel: &HelmholtzKernel,
    quad: &BemQuadrature,
) -> Result<DenseMatrix> {
    Ok(assemble(spaces, kernel, quad, Wanted { dt: true, ..NONE })?.adjoint_double_layer)
}

/// `⟨Nξⱼ, ξᵢ⟩` in the Maue form
/// `∬ E curl_Γ ξⱼ · curl_Γ ξᵢ − k² ∬ E ξⱼ ξᵢ n_x·n_y`.
pub fn assemble_hypersingular(
    spaces: &SurfaceSpaces,
    kernel: &HelmholtzKernel,
    quad: &BemQuadrature,
) -> Result<DenseMatrix> {
    Ok(assemble(spaces, kernel, quad, Wanted { n: true, ..NONE })?.hypersingular)
}
