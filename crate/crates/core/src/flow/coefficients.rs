use serde::Serialize;

use super::{AmbientState, FlowModel, FlowSample, EPS_SUBSONIC};
use crate::error::{Error, Result};
use crate::geometry::{Mat3, Vec3};
use crate::mesh::PgMap;

/// Coefficients of the transformed interior operator
/// `div(rΞ∇f) + r k² β f + i r k V·∇f + div(i r k f V)` at one point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PgCoefficients {
    /// `ρ₀ / ρ∞`.
    pub r: f64,
    /// `γ∞² k∞ / k`.
    pub q: f64,
    /// `M·M∞`.
    pub p: f64,
    pub beta: f64,
    pub v: Vec3,
    #[serde(skip)]
    pub xi: Mat3,
    /// Local wavenumber `ω / c₀`.
    pub k: f64,
}

impl PgCoefficients {
    /// Coefficients for a sampled flow state.
    pub fn from_sample(sample: &FlowSample, ambient: &AmbientState, map: &PgMap) -> Result<Self> {
        let m = sample.mach;
        let m_abs = m.norm();
        if !(m_abs < 1.0 - EPS_SUBSONIC) {
            return Err(Error::Supersonic {
                mach: m_abs,
                point: [f64::NAN; 3],
            });
        }
        let gamma = map.gamma_infinity;
        let m_inf = map.mach_infinity;
        let r = sample.rho / ambient.rho_infinity;
        // γ∞² k∞/k with k = ω/c₀, written through sound speeds so ω = 0 is regular.
        let q = gamma * gamma * sample.c / ambient.c_infinity;
        let p = m.dot(m_inf);
        let one_qp = 1.0 + q * p;
        let beta = one_qp * one_qp - q * q * m_inf.norm_squared();
        let n = &map.matrix_n;
        let v = n.mul_vec(m) * one_qp - m_inf * (q * gamma);
        let o = Mat3::identity_plus_outer(-1.0, m);
        let xi = n.mul_mat(&o).mul_mat(n);
        Ok(PgCoefficients {
            r,
            q,
            p,
            beta,
            v,
            xi,
            k: sample.wavenumber(ambient.omega),
        })
    }
}

/// Coefficients at transformed point `x`.
pub fn coefficients_at(
    x: Vec3,
    flow: &dyn FlowModel,
    ambient: &AmbientState,
    map: &PgMap,
) -> Result<PgCoefficients> {
    let sample = flow.sample(x)?;
    PgCoefficients::from_sample(&sample, ambient, map).map_err(|e| match e {
        Error::Supersonic { mach, .. } => Error::Supersonic { mach, point: x.0 },
        other => other,
    })
}
