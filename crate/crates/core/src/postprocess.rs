//! Exterior field reconstruction from the coupled densities and acoustic
//! pressure at probe points.

use serde::Serialize;

use crate::bem::{
    evaluate_potential_gradients, evaluate_potentials, HelmholtzKernel, PotentialQuadrature,
    SurfaceSpaces,
};
use crate::error::{Error, Result};
use crate::flow::AmbientState;
use crate::geometry::Vec3;
use crate::incident::IncidentField;
use crate::linalg::{C64, I};

/// Field values at probe points (transformed frame).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldProbe {
    pub points: Vec<Vec3>,
    /// Total potential `f = −𝒮λ + 𝒟(γ₀Φ) + f_inc`.
    pub total: Vec<C64>,
    /// Scattered part `f − f_inc`.
    pub scattered: Vec<C64>,
    pub gradient: Option<Vec<[C64; 3]>>,
    pub pressure: Option<Vec<C64>>,
    pub formulation: String,
    pub frequency_hz: f64,
    pub mesh_id: String,
}

/// Whether each point lies outside the closed surface, by winding number.
pub fn exterior_flags(spaces: &SurfaceSpaces, points: &[Vec3]) -> Vec<bool> {
    points
        .iter()
        .map(|&x| spaces.winding_number(x) < 0.5)
        .collect()
}

/// Evaluate the representation formula at exterior points.
///
/// `lambda` is the P0 density and `trace` the Γ∞ values of Φ in surface
/// vertex order. With `with_gradient` the gradient is computed analytically
/// and, if `ambient` is given, the pressure as well.
#[allow(clippy::too_many_arguments)]
pub fn reconstruct_exterior(
    spaces: &SurfaceSpaces,
    kernel: &HelmholtzKernel,
    lambda: &[C64],
    trace: &[C64],
    incident: &dyn IncidentField,
    points: &[Vec3],
    quad: &PotentialQuadrature,
    ambient: Option<&AmbientState>,
) -> Result<FieldProbe> {
    let interior: Vec<usize> = exterior_flags(spaces, points)
        .iter()
        .enumerate()
        .filter(|(_, &e)| !e)
        .map(|(i, _)| i)
        .collect();
    if !interior.is_empty() {
        return Err(Error::InteriorPoint { points: interior });
    }
    let inc: Vec<C64> = points
        .iter()
        .map(|&x| incident.value(x))
        .collect::<Result<_>>()?;
    let (scattered, gradient) = match ambient {
        Some(_) => {
            let vg = evaluate_potential_gradients(spaces, kernel, lambda, trace, points, quad)?;
            let grads = vg
                .iter()
                .zip(points)
                .map(|((_, g), &x)| {
                    let gi = incident.gradient(x)?;
                    Ok([0, 1, 2].map(|c| g[c] + gi[c]))
                })
                .collect::<Result<Vec<_>>>()?;
            (
                vg.into_iter().map(|(v, _)| v).collect::<Vec<_>>(),
                Some(grads),
            )
        }
        None => (
            evaluate_potentials(spaces, kernel, lambda, trace, points, quad)?,
            None,
        ),
    };
    let total: Vec<C64> = scattered.iter().zip(&inc).map(|(s, i)| s + i).collect();
    let pressure = match (ambient, &gradient) {
        (Some(a), Some(g)) => Some(
            total
                .iter()
                .zip(g)
                .map(|(f, g)| pressure_from_potential(*f, g, a))
                .collect(),
        ),
        _ => None,
    };
    Ok(FieldProbe {
        points: points.to_vec(),
        total,
        scattered,
        gradient,
        pressure,
        formulation: String::new(),
        frequency_hz: ambient.map_or(f64::NAN, AmbientState::frequency_hz),
        mesh_id: String::new(),
    })
}

/// Linearized Bernoulli relation `p = ρ∞(iωf − c∞ M∞·∇f)` in the uniform
/// exterior flow. This is a convention of this crate; the gradient is the
/// one of the transformed-frame potential.
pub fn pressure_from_potential(f: C64, grad: &[C64; 3], ambient: &AmbientState) -> C64 {
    let m = ambient.mach_infinity;
    let convective = m[0] * grad[0] + m[1] * grad[1] + m[2] * grad[2];
    ambient.rho_infinity * (I * ambient.omega * f - ambient.c_infinity * convective)
}

/// `n` points spread evenly over a sphere (Fibonacci lattice).
pub fn fibonacci_sphere(center: Vec3, radius: f64, n: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let rho = (1.0 - z * z).sqrt();
            let t = golden * i as f64;
            center + Vec3::new(rho * t.cos(), rho * t.sin(), z) * radius
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::incident::{Monopole, PlaneWave};
    use crate::linalg::ZERO;
    use crate::mesh::generate::sphere_surface;

    fn sphere() -> SurfaceSpaces {
        let (v, f) = sphere_surface(Vec3::ZERO, 1.0, 4).unwrap();
        SurfaceSpaces::from_triangles(v, f).unwrap()
    }

    #[test]
    fn zero_densities_give_incident_field() {
        let s = sphere();
        let inc = PlaneWave::new(Vec3::new(1.0, 0.0, 0.0), C64::new(0.5, 0.5), 2.0).unwrap();
        let pts = fibonacci_sphere(Vec3::ZERO, 2.5, 10);
        let probe = reconstruct_exterior(
            &s,
            &HelmholtzKernel::new(2.0),
            &vec![ZERO; s.q()],
            &vec![ZERO; s.r()],
            &inc,
            &pts,
            &PotentialQuadrature::default(),
            None,
        )
        .unwrap();
        for (x, f) in pts.iter().zip(&probe.total) {
            assert_eq!(*f, inc.value(*x).unwrap());
        }
    }

    #[test]
    fn interior_points_are_refused() {
        let s = sphere();
        let inc = Monopole {
            source: Vec3::new(0.0, 0.0, 3.0),
            amplitude: C64::from(1.0),
            k: 1.0,
        };
        let pts = [Vec3::new(2.0, 0.0, 0.0), Vec3::new(0.1, 0.0, 0.0)];
        let r = reconstruct_exterior(
            &s,
            &HelmholtzKernel::new(1.0),
            &vec![ZERO; s.q()],
            &vec![ZERO; s.r()],
            &inc,
            &pts,
            &PotentialQuadrature::default(),
            None,
        );
        assert!(matches!(r, Err(Error::InteriorPoint { points }) if points == vec![1]));
    }

    #[test]
    fn pressure_conventions() {
        let rest = AmbientState::new(1.2, 340.0, Vec3::ZERO, 100.0).unwrap();
        let g = [C64::from(1.0); 3];
        assert_eq!(
            pressure_from_potential(C64::from(2.0), &g, &rest),
            I * 100.0 * 1.2 * 2.0
        );
        let moving = AmbientState::new(1.0, 2.0, Vec3::new(0.0, 0.0, 0.5), 3.0).unwrap();
        assert_eq!(pressure_from_potential(ZERO, &g, &moving), C64::from(-1.0));
        // Plane wave at rest: |p| = ωρ∞|A| everywhere.
        let pw = PlaneWave::new(Vec3::new(0.0, 1.0, 0.0), C64::from(0.7), 1.0).unwrap();
        for x in fibonacci_sphere(Vec3::ZERO, 3.0, 5) {
            let p = pressure_from_potential(pw.value(x).unwrap(), &pw.gradient(x).unwrap(), &rest);
            assert!((p.norm() - 100.0 * 1.2 * 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn fibonacci_points_lie_on_sphere() {
        for x in fibonacci_sphere(Vec3::new(1.0, 2.0, 3.0), 2.0, 50) {
            assert!(((x - Vec3::new(1.0, 2.0, 3.0)).norm() - 2.0).abs() < 1e-14);
        }
    }
}
