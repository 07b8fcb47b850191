use super::{AmbientState, FlowModel, FlowSample};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::mesh::PgMap;

/// Incompressible potential flow past a sphere of radius `a` (physical frame),
/// with free-stream Mach vector `M∞`:
/// `M₀(x) = M∞ (1 + a³/(2ρ³)) − (3a³/(2ρ⁵)) (M∞·x) x`, `x` relative to the center.
#[derive(Clone, Debug)]
pub struct SphereDipoleFlow {
    pub radius: f64,
    /// Sphere center in physical coordinates.
    pub center: Vec3,
    pub ambient: FlowSample,
    pub map: PgMap,
    /// Points this fraction of the radius inside the sphere are still accepted,
    /// so quadrature points of an inscribed polyhedral body can be sampled.
    pub inner_tolerance: f64,
}

impl SphereDipoleFlow {
    pub fn new(radius: f64, center: Vec3, ambient: &AmbientState, map: PgMap) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Config(format!(
                "sphere dipole radius must be positive, got {radius}"
            )));
        }
        Ok(SphereDipoleFlow {
            radius,
            center,
            ambient: FlowSample::ambient(ambient),
            map,
            inner_tolerance: 0.25,
        })
    }

    /// Mach vector at a physical-frame point.
    pub fn mach_physical(&self, x: Vec3) -> Result<Vec3> {
        let rel = x - self.center;
        let rho = rel.norm();
        let a = self.radius;
        if rho < a * (1.0 - self.inner_tolerance) {
            return Err(Error::Domain(format!(
                "point at distance {rho:.4e} from the sphere center lies inside the body (radius {a:.4e})"
            )));
        }
        let u = self.ambient.mach;
        let a3 = a * a * a;
        let r3 = rho * rho * rho;
        let radial = 1.5 * a3 / (r3 * rho * rho) * u.dot(rel);
        Ok(u * (1.0 + 0.5 * a3 / r3) - rel * radial)
    }
}

impl FlowModel for SphereDipoleFlow {
    fn kind(&self) -> &'static str {
        "sphere_dipole"
    }

    fn sample(&self, x: Vec3) -> Result<FlowSample> {
        Ok(FlowSample {
            mach: self.mach_physical(self.map.inverse(x))?,
            ..self.ambient
        })
    }
}
