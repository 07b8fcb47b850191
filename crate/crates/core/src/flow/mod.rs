//! Background flow models and the transformed coefficients of the interior equation.

mod coefficients;
mod dipole;
mod nodal;

use std::fmt::Debug;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::mesh::pg::lorentz_gamma;

pub use coefficients::{coefficients_at, PgCoefficients};
pub use dipole::SphereDipoleFlow;
pub use nodal::{check_continuity, ContinuityReport, NodalFlow};

/// Sampled `|M₀|` at or above `1 − EPS_SUBSONIC` is rejected.
pub const EPS_SUBSONIC: f64 = 1e-3;

/// Ambient (uniform-flow) state of the exterior region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AmbientState {
    pub rho_infinity: f64,
    pub c_infinity: f64,
    pub mach_infinity: Vec3,
    pub omega: f64,
}

impl AmbientState {
    pub fn new(
        rho_infinity: f64,
        c_infinity: f64,
        mach_infinity: Vec3,
        omega: f64,
    ) -> Result<Self> {
        if !(rho_infinity > 0.0) || !(c_infinity > 0.0) {
            return Err(Error::Config(
                "ambient density and sound speed must be positive".into(),
            ));
        }
        if !(omega >= 0.0) || !omega.is_finite() {
            return Err(Error::Config(format!(
                "angular frequency must be finite and non-negative, got {omega}"
            )));
        }
        let m = mach_infinity.norm();
        if !(m < 1.0) {
            return Err(Error::Supersonic {
                mach: m,
                point: [f64::NAN; 3],
            });
        }
        Ok(AmbientState {
            rho_infinity,
            c_infinity,
            mach_infinity,
            omega,
        })
    }

    pub fn gamma_infinity(&self) -> f64 {
        lorentz_gamma(self.mach_infinity.norm())
    }

    /// `k∞ = ω / c∞`.
    pub fn k_infinity(&self) -> f64 {
        self.omega / self.c_infinity
    }

    /// `k̂∞ = γ∞ k∞`, the wavenumber of the transformed exterior problem.
    pub fn k_hat_infinity(&self) -> f64 {
        self.gamma_infinity() * self.k_infinity()
    }

    pub fn frequency_hz(&self) -> f64 {
        self.omega / (2.0 * std::f64::consts::PI)
    }

    /// Same medium at another angular frequency.
    pub fn with_omega(&self, omega: f64) -> Self {
        AmbientState { omega, ..*self }
    }

    /// Angular frequency giving the transformed wavenumber `k_hat`.
    pub fn omega_for_k_hat(&self, k_hat: f64) -> f64 {
        k_hat * self.c_infinity / self.gamma_infinity()
    }
}

/// Local flow state at a point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FlowSample {
    pub rho: f64,
    pub c: f64,
    pub mach: Vec3,
}

impl FlowSample {
    pub fn ambient(ambient: &AmbientState) -> Self {
        FlowSample {
            rho: ambient.rho_infinity,
            c: ambient.c_infinity,
            mach: ambient.mach_infinity,
        }
    }

    /// Local wavenumber `k₀ = ω / c₀`.
    pub fn wavenumber(&self, omega: f64) -> f64 {
        omega / self.c
    }
}

/// A background flow sampled in transformed coordinates.
pub trait FlowModel: Send + Sync + Debug {
    fn kind(&self) -> &'static str;

    /// Flow state at transformed point `x`.
    fn sample(&self, x: Vec3) -> Result<FlowSample>;

    /// Flow state at a point of tetrahedron `tet` with barycentric coordinates
    /// `bary`; models with element data override this.
    fn sample_in_tet(&self, _tet: usize, _bary: [f64; 4], x: Vec3) -> Result<FlowSample> {
        self.sample(x)
    }
}

/// Uniform flow equal to the ambient state everywhere.
#[derive(Clone, Debug)]
pub struct UniformFlow {
    pub ambient: FlowSample,
}

impl UniformFlow {
    pub fn new(ambient: &AmbientState) -> Self {
        UniformFlow {
            ambient: FlowSample::ambient(ambient),
        }
    }
}

impl FlowModel for UniformFlow {
    fn kind(&self) -> &'static str {
        "uniform"
    }

    fn sample(&self, _x: Vec3) -> Result<FlowSample> {
        Ok(self.ambient)
    }
}
