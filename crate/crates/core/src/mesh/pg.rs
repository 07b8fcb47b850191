//! Prandtl–Glauert dilation along the uniform-flow axis.

use serde::Serialize;

use super::TetMesh;
use crate::error::{Error, Result};
use crate::geometry::{Mat3, Vec3};

/// Below this Mach number `C∞` is evaluated from its Taylor expansion.
const TAYLOR_THRESHOLD: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PgMap {
    pub mach_infinity: Vec3,
    pub gamma_infinity: f64,
    /// Unit flow direction; arbitrary (ẑ) when the ambient medium is at rest.
    pub dilation_axis: Vec3,
    #[serde(skip)]
    pub matrix_n: Mat3,
    pub c_infinity_coeff: f64,
}

/// `γ = 1/√(1 − M²)`.
pub fn lorentz_gamma(mach: f64) -> f64 {
    1.0 / (1.0 - mach * mach).sqrt()
}

/// `C = (γ − 1)/M²`, with the removable singularity at `M = 0` handled by series.
pub fn c_coefficient(mach: f64) -> f64 {
    if mach < TAYLOR_THRESHOLD {
        0.5 + 0.375 * mach * mach
    } else {
        // (γ − 1)/M² = γ²/(γ + 1) without cancellation.
        let g = lorentz_gamma(mach);
        g * g / (g + 1.0)
    }
}

impl PgMap {
    pub fn new(mach_infinity: Vec3) -> Result<Self> {
        let m = mach_infinity.norm();
        if !(m < 1.0) {
            return Err(Error::Supersonic {
                mach: m,
                point: [f64::NAN; 3],
            });
        }
        let gamma = lorentz_gamma(m);
        let c = c_coefficient(m);
        let axis = if m > 0.0 {
            mach_infinity * (1.0 / m)
        } else {
            Vec3::new(0.0, 0.0, 1.0)
        };
        Ok(PgMap {
            mach_infinity,
            gamma_infinity: gamma,
            dilation_axis: axis,
            matrix_n: Mat3::identity_plus_outer(c, mach_infinity),
            c_infinity_coeff: c,
        })
    }

    pub fn identity() -> Self {
        PgMap::new(Vec3::ZERO).expect("rest medium is subsonic")
    }

    pub fn mach(&self) -> f64 {
        self.mach_infinity.norm()
    }

    /// Physical point to transformed point.
    pub fn forward(&self, x: Vec3) -> Vec3 {
        let s = self.dilation_axis.dot(x);
        x + self.dilation_axis * ((self.gamma_infinity - 1.0) * s)
    }

    /// Transformed point to physical point.
    pub fn inverse(&self, x: Vec3) -> Vec3 {
        let s = self.dilation_axis.dot(x);
        x + self.dilation_axis * ((1.0 / self.gamma_infinity - 1.0) * s)
    }

    /// Transformed copy of a physical-frame mesh. Connectivity and tags are kept;
    /// normals and edge statistics are recomputed from the new coordinates.
    pub fn apply(&self, mesh: &TetMesh) -> TetMesh {
        let vertices = mesh.vertices.iter().map(|&x| self.forward(x)).collect();
        mesh.with_vertices(vertices)
    }
}
