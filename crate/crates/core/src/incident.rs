//! Incident fields of the transformed exterior problem and their traces on Γ∞.

use std::f64::consts::PI;
use std::fmt::Debug;

use serde::Serialize;

use crate::bem::SurfaceSpaces;
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::linalg::{C64, ZERO};
use crate::quadrature::TriangleRule;

/// A solution of `Δf + k̂∞² f = 0` away from its source, in transformed coordinates.
pub trait IncidentField: Send + Sync + Debug {
    fn kind(&self) -> &'static str;

    fn wavenumber(&self) -> f64;

    fn value(&self, x: Vec3) -> Result<C64>;

    fn gradient(&self, x: Vec3) -> Result<[C64; 3]>;

    /// Check the field is admissible for the coupling surface.
    fn check_against(&self, _spaces: &SurfaceSpaces) -> Result<()> {
        Ok(())
    }
}

/// `A exp(ik|x − xₛ|) / (4π|x − xₛ|)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Monopole {
    pub source: Vec3,
    pub amplitude: C64,
    pub k: f64,
}

impl IncidentField for Monopole {
    fn kind(&self) -> &'static str {
        "monopole"
    }

    fn wavenumber(&self) -> f64 {
        self.k
    }

    fn value(&self, x: Vec3) -> Result<C64> {
        let r = x.distance(self.source);
        if r == 0.0 {
            return Err(Error::SingularPoint);
        }
        Ok(self.amplitude * (C64::i() * self.k * r).exp() / (4.0 * PI * r))
    }

    fn gradient(&self, x: Vec3) -> Result<[C64; 3]> {
        let d = x - self.source;
        let r = d.norm();
        if r == 0.0 {
            return Err(Error::SingularPoint);
        }
        let e = self.amplitude * (C64::i() * self.k * r).exp() / (4.0 * PI * r);
        let g = e * (C64::i() * self.k - 1.0 / r) / r;
        Ok([g * d[0], g * d[1], g * d[2]])
    }

    fn check_against(&self, spaces: &SurfaceSpaces) -> Result<()> {
        if spaces.winding_number(self.source) > 0.5 {
            return Err(Error::Domain(format!(
                "monopole source ({:.4}, {:.4}, {:.4}) lies inside the coupling surface",
                self.source[0], self.source[1], self.source[2]
            )));
        }
        Ok(())
    }
}

/// `A exp(ik d·x)` with unit direction `d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PlaneWave {
    pub direction: Vec3,
    pub amplitude: C64,
    pub k: f64,
}

impl PlaneWave {
    pub fn new(direction: Vec3, amplitude: C64, k: f64) -> Result<Self> {
        let n = direction.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Config(
                "plane-wave direction must be a non-zero vector".into(),
            ));
        }
        Ok(PlaneWave {
            direction: direction * (1.0 / n),
            amplitude,
            k,
        })
    }
}

impl IncidentField for PlaneWave {
    fn kind(&self) -> &'static str {
        "plane_wave"
    }

    fn wavenumber(&self) -> f64 {
        self.k
    }

    fn value(&self, x: Vec3) -> Result<C64> {
        Ok(self.amplitude * (C64::i() * self.k * self.direction.dot(x)).exp())
    }

    fn gradient(&self, x: Vec3) -> Result<[C64; 3]> {
        let v = self.value(x)? * C64::i() * self.k;
        Ok([0, 1, 2].map(|c| v * self.direction[c]))
    }
}

/// Traces of an incident field on Γ∞ and the load vectors they induce.
#[derive(Clone, Debug)]
pub struct IncidentTraces {
    /// `γ₀f_inc` at the surface vertices.
    pub vertex_values: Vec<C64>,
    /// `∫ γ₀f_inc ψᵢ` over each face (P0 test functions).
    pub dirichlet_p0: Vec<C64>,
    /// `∫ γ₁f_inc ξᵢ` for each surface vertex (P1 test functions).
    pub neumann_p1: Vec<C64>,
}

/// Quadrature order (points per direction) used for trace integrals.
pub const TRACE_ORDER: usize = 6;

pub fn incident_traces(
    field: &dyn IncidentField,
    spaces: &SurfaceSpaces,
) -> Result<IncidentTraces> {
    let rule = TriangleRule::collapsed_gauss(TRACE_ORDER);
    let vertex_values = spaces
        .vertices
        .iter()
        .map(|&x| field.value(x))
        .collect::<Result<_>>()?;
    let mut dirichlet_p0 = vec![ZERO; spaces.q()];
    let mut neumann_p1 = vec![ZERO; spaces.r()];
    for f in 0..spaces.q() {
        let n = spaces.normals[f];
        let jac = 2.0 * spaces.areas[f];
        let verts = spaces.faces[f];
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let x = spaces.face_point(f, *p);
            let w = w * jac;
            dirichlet_p0[f] += field.value(x)? * w;
            let g = field.gradient(x)?;
            let dn = g[0] * n[0] + g[1] * n[1] + g[2] * n[2];
            let phi = [1.0 - p[0] - p[1], p[0], p[1]];
            for l in 0..3 {
                neumann_p1[verts[l]] += dn * (w * phi[l]);
            }
        }
    }
    Ok(IncidentTraces {
        vertex_values,
        dirichlet_p0,
        neumann_p1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate::sphere_surface;
    use rand::{Rng, SeedableRng};

    fn random_point(rng: &mut impl Rng, scale: f64) -> Vec3 {
        Vec3::new(
            rng.gen_range(-scale..scale),
            rng.gen_range(-scale..scale),
            rng.gen_range(-scale..scale),
        )
    }

    #[test]
    fn plane_wave_at_origin() {
        let f = PlaneWave::new(Vec3::new(0.0, 0.0, 1.0), C64::from(1.0), 2.0).unwrap();
        assert_eq!(f.value(Vec3::ZERO).unwrap(), C64::from(1.0));
        let g = f.gradient(Vec3::ZERO).unwrap();
        assert_eq!(g[2], C64::new(0.0, 2.0));
        assert_eq!(g[0], ZERO);
    }

    #[test]
    fn monopole_normalization_and_singularity() {
        let f = Monopole {
            source: Vec3::new(1.0, 2.0, 3.0),
            amplitude: C64::from(2.0),
            k: 1.3,
        };
        let v = f.value(Vec3::new(1.0, 2.0, 4.0)).unwrap();
        assert!((v.norm() - 2.0 / (4.0 * PI)).abs() < 1e-15);
        assert!(matches!(f.value(f.source), Err(Error::SingularPoint)));
    }

    #[test]
    fn gradients_match_differences() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let k = 2.0;
        let h = 1e-5 * 2.0 * PI / k;
        let fields: [Box<dyn IncidentField>; 2] = [
            Box::new(Monopole {
                source: Vec3::new(0.0, 0.0, -3.0),
                amplitude: C64::new(1.0, 0.5),
                k,
            }),
            Box::new(PlaneWave::new(Vec3::new(1.0, 1.0, 0.5), C64::from(1.0), k).unwrap()),
        ];
        for f in &fields {
            for _ in 0..50 {
                let x = random_point(&mut rng, 1.5);
                let g = f.gradient(x).unwrap();
                for c in 0..3 {
                    let mut e = Vec3::ZERO;
                    e.0[c] = h;
                    let fd = (f.value(x + e).unwrap() - f.value(x - e).unwrap()) / (2.0 * h);
                    let scale = g.iter().map(|v| v.norm()).fold(0.0, f64::max);
                    assert!((fd - g[c]).norm() <= 1e-6 * scale, "{}", f.kind());
                }
            }
        }
    }

    #[test]
    fn helmholtz_residual() {
        let k = 1.7;
        let f = Monopole {
            source: Vec3::new(0.3, -2.0, 0.0),
            amplitude: C64::from(1.0),
            k,
        };
        let h = 1e-3;
        for x in [Vec3::new(0.5, 0.5, 0.5), Vec3::new(-1.0, 0.0, 2.0)] {
            let mut lap = -6.0 * f.value(x).unwrap();
            for c in 0..3 {
                let mut e = Vec3::ZERO;
                e.0[c] = h;
                lap += f.value(x + e).unwrap() + f.value(x - e).unwrap();
            }
            let res = lap / (h * h) + k * k * f.value(x).unwrap();
            assert!(res.norm() <= 1e-4 * f.value(x).unwrap().norm());
        }
    }

    #[test]
    fn zero_amplitude_gives_zero_loads() {
        let (v, fc) = sphere_surface(Vec3::ZERO, 1.0, 2).unwrap();
        let s = SurfaceSpaces::from_triangles(v, fc).unwrap();
        let f = PlaneWave::new(Vec3::new(0.0, 0.0, 1.0), ZERO, 1.0).unwrap();
        let t = incident_traces(&f, &s).unwrap();
        assert!(t
            .dirichlet_p0
            .iter()
            .chain(&t.neumann_p1)
            .all(|v| *v == ZERO));
    }

    #[test]
    fn plane_wave_flux_matches_divergence_theorem() {
        // ∮ ∇f·n = ∫ Δf = −k² ∫ f over the polyhedron, with the volume integral
        // taken over cones from the center with a tetrahedral rule.
        let (v, fc) = sphere_surface(Vec3::ZERO, 1.0, 6).unwrap();
        let s = SurfaceSpaces::from_triangles(v, fc).unwrap();
        let k = 1.5;
        let f = PlaneWave::new(Vec3::new(0.0, 0.6, 0.8), C64::from(1.0), k).unwrap();
        let flux: C64 = incident_traces(&f, &s).unwrap().neumann_p1.iter().sum();
        let rule = crate::quadrature::TetRule::degree5();
        let mut volume_integral = ZERO;
        for tri in &s.faces {
            let [a, b, c] = tri.map(|i| s.vertices[i]);
            let vol = crate::geometry::tet_signed_volume(Vec3::ZERO, a, b, c);
            for (l, w) in rule.barycentric.iter().zip(&rule.weights) {
                let x = a * l[1] + b * l[2] + c * l[3];
                volume_integral += f.value(x).unwrap() * (w * vol);
            }
        }
        let expected = -k * k * volume_integral;
        assert!(
            (flux - expected).norm() <= 1e-3 * expected.norm(),
            "{flux} vs {expected}"
        );
    }

    #[test]
    fn monopole_flux_vanishes_at_zero_wavenumber() {
        let (v, fc) = sphere_surface(Vec3::ZERO, 1.0, 4).unwrap();
        let s = SurfaceSpaces::from_triangles(v, fc).unwrap();
        let f = Monopole {
            source: Vec3::new(0.0, 0.0, 2.5),
            amplitude: C64::from(1.0),
            k: 0.0,
        };
        let t = incident_traces(&f, &s).unwrap();
        let flux: C64 = t.neumann_p1.iter().sum();
        let l1: f64 = t.neumann_p1.iter().map(|v| v.norm()).sum();
        assert!(flux.norm() <= 1e-3 * l1);
        assert!(f.check_against(&s).is_ok());
        let inside = Monopole {
            source: Vec3::ZERO,
            ..f
        };
        assert!(inside.check_against(&s).is_err());
    }
}
