//! Surface Laplace–Beltrami plus mass form on Γ∞, the discrete counterpart
//! of the regularizing operator `(−Δ_Γ + I)⁻¹`.

use crate::bem::SurfaceSpaces;
use crate::error::{Error, Result};
use crate::linalg::{SparseMatrix, C64};

/// `δ(ξⱼ, ξᵢ) = ∫ ∇_Γξⱼ·∇_Γξᵢ + ∫ ξⱼξᵢ` on the P1 surface space, with the two
/// parts kept separately.
#[derive(Clone, Debug)]
pub struct SurfaceP1Form {
    pub stiffness: SparseMatrix,
    pub mass: SparseMatrix,
    pub delta: SparseMatrix,
}

/// Assemble the form with flat-triangle surface gradients.
pub fn assemble_delta_form(spaces: &SurfaceSpaces) -> Result<SurfaceP1Form> {
    let r = spaces.r();
    let mut ks = Vec::with_capacity(9 * spaces.q());
    let mut ms = Vec::with_capacity(9 * spaces.q());
    for (f, tri) in spaces.faces.iter().enumerate() {
        let area = spaces.areas[f];
        if !(area > 0.0) {
            return Err(Error::DegenerateFace(f));
        }
        let n = spaces.normals[f];
        let [a, b, c] = tri.map(|v| spaces.vertices[v]);
        let grads = [n.cross(c - b), n.cross(a - c), n.cross(b - a)].map(|g| g * (0.5 / area));
        for i in 0..3 {
            for j in 0..3 {
                ks.push((tri[i], tri[j], C64::from(area * grads[i].dot(grads[j]))));
                let m = if i == j { area / 6.0 } else { area / 12.0 };
                ms.push((tri[i], tri[j], C64::from(m)));
            }
        }
    }
    let stiffness = SparseMatrix::from_triplets(r, r, ks)?;
    let mass = SparseMatrix::from_triplets(r, r, ms)?;
    let delta = stiffness.add_scaled(C64::from(1.0), &mass)?;
    Ok(SurfaceP1Form {
        stiffness,
        mass,
        delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use crate::mesh::generate::sphere_surface;

    fn sphere(n: usize) -> SurfaceSpaces {
        let (v, f) = sphere_surface(Vec3::ZERO, 1.0, n).unwrap();
        SurfaceSpaces::from_triangles(v, f).unwrap()
    }

    fn quadratic_form(m: &SparseMatrix, x: &[C64]) -> C64 {
        m.matvec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn constants() {
        let s = sphere(3);
        let form = assemble_delta_form(&s).unwrap();
        let ones = vec![C64::from(1.0); s.r()];
        let k1 = form.stiffness.matvec(&ones);
        assert!(k1.iter().all(|v| v.norm() < 1e-12));
        let q = quadratic_form(&form.delta, &ones);
        assert!((q.re - s.area()).abs() < 1e-12 * s.area());
    }

    #[test]
    fn first_spherical_harmonic_eigenvalue() {
        // 2·(2·5)²·6 = 1200 faces.
        let s = sphere(5);
        let form = assemble_delta_form(&s).unwrap();
        let z: Vec<C64> = s.vertices.iter().map(|v| C64::from(v[2])).collect();
        let rq = quadratic_form(&form.stiffness, &z).re / quadratic_form(&form.mass, &z).re;
        assert!((rq - 2.0).abs() < 0.1, "Rayleigh quotient {rq}");
    }

    #[test]
    fn exactly_symmetric() {
        let s = sphere(2);
        let form = assemble_delta_form(&s).unwrap();
        for (i, j, v) in form.delta.triplets() {
            assert_eq!(v, form.delta.get(j, i));
        }
    }
}
