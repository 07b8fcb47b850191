//! Single- and double-layer potentials evaluated off the surface.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{HelmholtzKernel, SurfaceSpaces};
use crate::error::{Error, Result};
use crate::geometry::{point_triangle_distance, Vec3};
use crate::linalg::{C64, ZERO};
use crate::quadrature::TriangleRule;

/// Quadrature for potential evaluation. Faces closer to the evaluation point
/// than `near_factor` diameters use the finer rule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialQuadrature {
    pub order: usize,
    pub near_order: usize,
    pub near_factor: f64,
}

impl Default for PotentialQuadrature {
    fn default() -> Self {
        PotentialQuadrature {
            order: 4,
            near_order: 10,
            near_factor: 4.0,
        }
    }
}

/// Indices of points closer to some face than that face's diameter.
pub fn near_surface_points(spaces: &SurfaceSpaces, points: &[Vec3]) -> Vec<usize> {
    let diam: Vec<f64> = (0..spaces.q()).map(|f| spaces.face_diameter(f)).collect();
    points
        .par_iter()
        .enumerate()
        .filter(|(_, &x)| {
            spaces.faces.iter().zip(&diam).any(|(f, &h)| {
                let [a, b, c] = f.map(|v| spaces.vertices[v]);
                point_triangle_distance(x, a, b, c) < h
            })
        })
        .map(|(i, _)| i)
        .collect()
}

fn check_inputs(
    spaces: &SurfaceSpaces,
    lambda: Option<&[C64]>,
    mu: Option<&[C64]>,
    points: &[Vec3],
) -> Result<()> {
    if let Some(l) = lambda {
        if l.len() != spaces.q() {
            return Err(Error::SizeMismatch {
                expected: spaces.q(),
                found: l.len(),
            });
        }
    }
    if let Some(m) = mu {
        if m.len() != spaces.r() {
            return Err(Error::SizeMismatch {
                expected: spaces.r(),
                found: m.len(),
            });
        }
    }
    let near = near_surface_points(spaces, points);
    if near.is_empty() {
        Ok(())
    } else {
        Err(Error::NearSurface { points: near })
    }
}

struct Rules {
    far: TriangleRule,
    near: TriangleRule,
    near_factor: f64,
}

impl Rules {
    fn new(q: &PotentialQuadrature) -> Result<Self> {
        if q.order == 0 || q.near_order == 0 {
            return Err(Error::Quadrature(
                "quadrature orders must be positive".into(),
            ));
        }
        Ok(Rules {
            far: TriangleRule::collapsed_gauss(q.order),
            near: TriangleRule::collapsed_gauss(q.near_order),
            near_factor: q.near_factor,
        })
    }

    fn pick(&self, spaces: &SurfaceSpaces, f: usize, x: Vec3) -> &TriangleRule {
        if spaces.face_centroid(f).distance(x) < self.near_factor * spaces.face_diameter(f) {
            &self.near
        } else {
            &self.far
        }
    }
}

/// Value and gradient (with respect to `x`) of `−𝒮λ + 𝒟μ` at one point.
/// Absent densities are treated as zero.
fn evaluate_one(
    spaces: &SurfaceSpaces,
    kernel: &HelmholtzKernel,
    lambda: Option<&[C64]>,
    mu: Option<&[C64]>,
    x: Vec3,
    rules: &Rules,
    with_gradient: bool,
) -> (C64, [C64; 3]) {
    let ik = C64::i() * kernel.k;
    let k2 = kernel.k * kernel.k;
    let inv4pi = 1.0 / (4.0 * std::f64::consts::PI);
    let mut value = ZERO;
    let mut grad = [ZERO; 3];
    for f in 0..spaces.q() {
        let rule = rules.pick(spaces, f, x);
        let n = spaces.normals[f];
        let jac = 2.0 * spaces.areas[f];
        let verts = spaces.faces[f];
        let lam = lambda.map_or(ZERO, |l| l[f]);
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let y = spaces.face_point(f, *p);
            let m = mu.map_or(ZERO, |m| {
                let phi = [1.0 - p[0] - p[1], p[0], p[1]];
                (0..3).map(|l| m[verts[l]] * phi[l]).sum()
            });
            let d = y - x;
            let r = d.norm();
            let e = (ik * r).exp() * (inv4pi / r);
            // e' = dE/dr, e'' = d²E/dr².
            let e1 = e * (ik * r - 1.0) / r;
            let dn = d.dot(n);
            let w = w * jac;
            value += (-lam * e + m * e1 * (dn / r)) * w;
            if with_gradient {
                let e2 = e * (-k2 * r * r - 2.0 * ik * r + 2.0) / (r * r);
                let a = (e2 - e1 / r) * (dn / (r * r));
                let b = e1 / r;
                for c in 0..3 {
                    // ∇ₓE(y − x) = −(e'/r) d and ∇ₓ∂E/∂n_y = −[(e'' − e'/r)(d·n)d/r² + (e'/r)n].
                    grad[c] += (lam * b * d[c] - m * (a * d[c] + b * n[c])) * w;
                }
            }
        }
    }
    (value, grad)
}

/// `(𝒮λ)(x) = ∫ E(y − x) λ(y) dy` for a P0 density.
pub fn single_layer_potential(
    spaces: &SurfaceSpaces,
    kernel: &HelmholtzKernel,
    lambda: &[C64],
    points: &[Vec3],
    quad: &PotentialQuadrature,
) -> Result<Vec<C64>> {
    check_inputs(spaces, Some(lambda), None, points)?;
    let rules = Rules::new(quad)?;
    Ok(points
        .par_iter()
        .map(|&x| -evaluate_one(spaces, kernel, Some(lambda), None, x, &rules, false).0)
        .collect())
}

/// `(𝒟μ)(x) = ∫ ∂E(y − x)/∂n_y μ(y) dy` for a P1 density.
pub fn double_layer_potential(
    spaces: &SurfaceSpaces,
    kernel: &HelmholtzKernel,
    mu: &[C64],
    points: &[Vec3],
    quad: &PotentialQuadrature,
) -> Result<Vec<C64>> {
    check_inputs(spaces, None, Some(mu), points)?;
    let rules = Rules::new(quad)?;
    Ok(points
        .par_iter()
        .map(|&x| evaluate_one(spaces, kernel, None, Some(mu), x, &rules, false).0)
        .collect())
}

/// `−𝒮λ + 𝒟μ` at each point. Points within one face diameter of the
/// surface are refused with [`Error::NearSurface`].
pub fn evaluate_potentials(
    spaces: &SurfaceSpaces,
    kernel: &HelmholtzKernel,
    lambda: &[C64],
    mu: &[C64],
    points: &[Vec3],
    quad: &PotentialQuadrature,
) -> Result<Vec<C64>> {
    check_inputs(spaces, Some(lambda), Some(mu), points)?;
    let rules = Rules::new(quad)?;
    Ok(points
        .par_iter()
        .map(|&x| evaluate_one(spaces, kernel, Some(lambda), Some(mu), x, &rules, false).0)
        .collect())
}

/// Values and gradients of `−𝒮λ + 𝒟μ`.
pub fn evaluate_potential_gradients(
    spaces: &SurfaceSpaces,
    kernel: &HelmholtzKernel,
    lambda: &[C64],
    mu: &[C64],
    points: &[Vec3],
    quad: &PotentialQuadrature,
) -> Result<Vec<(C64, [C64; 3])>> {
    check_inputs(spaces, Some(lambda), Some(mu), points)?;
    let rules = Rules::new(quad)?;
    Ok(points
        .par_iter()
        .map(|&x| evaluate_one(spaces, kernel, Some(lambda), Some(mu), x, &rules, true))
        .collect())
}
