//! Shared helpers for the integration and acceptance tests: an independent
//! Mie-series oracle, problem builders and norms.
#![allow(dead_code)]

use glauert::config::CaseConfig;
use glauert::geometry::Vec3;
use glauert::linalg::C64;
use glauert::pipeline::Problem;

/// Spherical Bessel functions `j_0..=j_nmax` at `x > 0` by Miller's
/// downward recurrence, normalized with `j_0 = sin x / x`.
pub fn spherical_jn(nmax: usize, x: f64) -> Vec<f64> {
    let start = nmax + 30 + x as usize;
    let mut vals = vec![0.0; start + 2];
    vals[start] = 1e-300;
    for n in (1..=start).rev() {
        vals[n - 1] = (2 * n + 1) as f64 / x * vals[n] - vals[n + 1];
        if vals[n - 1].abs() > 1e250 {
            for v in vals.iter_mut().skip(n - 1) {
                *v *= 1e-250;
            }
        }
    }
    let j0 = x.sin() / x;
    let j1 = x.sin() / (x * x) - x.cos() / x;
    let scale = if j0.abs() > j1.abs() {
        j0 / vals[0]
    } else {
        j1 / vals[1]
    };
    vals.truncate(nmax + 1);
    vals.iter().map(|v| v * scale).collect()
}

/// Spherical Neumann functions `y_0..=y_nmax` by upward recurrence.
pub fn spherical_yn(nmax: usize, x: f64) -> Vec<f64> {
    let mut y = vec![-x.cos() / x, -x.cos() / (x * x) - x.sin() / x];
    for n in 1..nmax {
        let next = (2 * n + 1) as f64 / x * y[n] - y[n - 1];
        y.push(next);
    }
    y.truncate(nmax + 1);
    y
}

/// `f'_n = f_{n−1} − (n+1)/x f_n`, with `f'_0 = −f_1`.
fn derivative(f: &[f64], x: f64) -> Vec<f64> {
    (0..f.len() - 1)
        .map(|n| {
            if n == 0 {
                -f[1]
            } else {
                f[n - 1] - (n + 1) as f64 / x * f[n]
            }
        })
        .collect()
}

fn legendre(nmax: usize, t: f64) -> Vec<f64> {
    let mut p = vec![1.0, t];
    for n in 1..nmax {
        p.push(((2 * n + 1) as f64 * t * p[n] - n as f64 * p[n - 1]) / (n + 1) as f64);
    }
    p.truncate(nmax + 1);
    p
}

/// Field scattered by a sound-hard sphere of radius `a` centred at the origin
/// under the plane wave `e^{ikz}`, with outgoing waves `e^{ikr}`.
pub fn mie_sound_hard(k: f64, a: f64, x: Vec3, nmax: usize) -> C64 {
    let r = x.norm();
    let t = x[2] / r;
    let ja = spherical_jn(nmax + 1, k * a);
    let ya = spherical_yn(nmax + 1, k * a);
    let (dja, dya) = (derivative(&ja, k * a), derivative(&ya, k * a));
    let jr = spherical_jn(nmax, k * r);
    let yr = spherical_yn(nmax, k * r);
    let p = legendre(nmax, t);
    let i = C64::new(0.0, 1.0);
    (0..=nmax)
        .map(|n| {
            let coeff = -C64::from(dja[n]) / C64::new(dja[n], dya[n]);
            let h = C64::new(jr[n], yr[n]);
            i.powu(n as u32) * (2 * n + 1) as f64 * coeff * h * p[n]
        })
        .sum()
}

pub fn relative_l2(approx: &[C64], exact: &[C64]) -> f64 {
    let num: f64 = approx
        .iter()
        .zip(exact)
        .map(|(a, e)| (a - e).norm_sqr())
        .sum();
    let den: f64 = exact.iter().map(|e| e.norm_sqr()).sum();
    (num / den).sqrt()
}

/// Sound-hard unit sphere inside a coupling sphere of radius 2 at rest,
/// plane wave along +z.
pub fn mie_config(
    n_inner: usize,
    n_outer: usize,
    k_hat: f64,
    formulation: &str,
    tol: f64,
) -> CaseConfig {
    let text = format!(
        r#"
formulation = "{formulation}"
[mesh]
kind = "shell"
inner = [1.0, 1.0, 1.0]
outer = [2.0, 2.0, 2.0]
n_inner = {n_inner}
n_outer = {n_outer}
[frequency]
k_hat = {k_hat}
[incident]
kind = "plane_wave"
direction = [0.0, 0.0, 1.0]
[solver]
tol = {tol:e}
max_iter = 2000
"#
    );
    CaseConfig::from_toml(&text, None).expect("valid test configuration")
}

/// Unit ball coupling region without obstacle, `n` radial cells.
pub fn ball_config(n: usize, k_hat: f64) -> CaseConfig {
    let text = format!(
        r#"
[mesh]
kind = "ball"
outer = [1.0, 1.0, 1.0]
n_outer = {n}
[frequency]
k_hat = {k_hat}
[incident]
kind = "plane_wave"
direction = [0.0, 0.0, 1.0]
"#
    );
    CaseConfig::from_toml(&text, None).expect("valid test configuration")
}

pub fn problem(config: &CaseConfig) -> Problem {
    Problem::from_config(config).expect("problem setup")
}

/// Evenly spread probe points on a sphere of radius `r` about the origin.
pub fn probe_sphere(r: f64, n: usize) -> Vec<Vec3> {
    glauert::postprocess::fibonacci_sphere(Vec3::ZERO, r, n)
}

/// Weighted residual of the first exterior Calderón identity
/// `(½I − K)γ₀u + Vγ₁u = 0` tested with P0 functions, for the point source
/// `u = E(· − y₀)` with `y₀` inside a sphere of radius 1 meshed with
/// parameter `n`. Returns `(mean face diameter, relative residual)`.
pub fn calderon_residual(n: usize, k: f64) -> (f64, f64) {
    use glauert::bem::{assemble_operators, BemQuadrature, HelmholtzKernel, SurfaceSpaces};
    use glauert::incident::{IncidentField, Monopole};
    use glauert::mesh::generate::sphere_surface;
    use glauert::quadrature::TriangleRule;

    let (v, f) = sphere_surface(Vec3::ZERO, 1.0, n).expect("sphere mesh");
    let s = SurfaceSpaces::from_triangles(v, f).expect("surface spaces");
    let source = Monopole {
        source: Vec3::new(0.2, -0.1, 0.3),
        amplitude: C64::from(1.0),
        k,
    };
    let ops = assemble_operators(&s, &HelmholtzKernel::new(k), &BemQuadrature::default())
        .expect("operators");
    let g0 = s.interpolate_p1(|x| source.value(x).expect("off source"));
    let rule = TriangleRule::collapsed_gauss(6);
    let g1: Vec<C64> = (0..s.q())
        .map(|face| {
            let n = s.normals[face];
            let sum: C64 = rule
                .points
                .iter()
                .zip(&rule.weights)
                .map(|(p, w)| {
                    let g = source.gradient(s.face_point(face, *p)).expect("off source");
                    (g[0] * n[0] + g[1] * n[1] + g[2] * n[2]) * *w
                })
                .sum();
            sum * 2.0
        })
        .collect();
    let mut res = ops.single_layer.matvec(&g1);
    ops.double_layer.mul_add(C64::from(-1.0), &g0, &mut res);
    let mass = s.mass_p0_p1();
    let mass_g0 = mass.matvec(&g0);
    mass.mul_add(C64::from(0.5), &g0, &mut res);
    let weighted = |r: &[C64]| -> f64 {
        r.iter()
            .zip(&s.areas)
            .map(|(v, a)| v.norm_sqr() / a)
            .sum::<f64>()
            .sqrt()
    };
    let h = (0..s.q()).map(|f| s.face_diameter(f)).sum::<f64>() / s.q() as f64;
    (h, weighted(&res) / weighted(&mass_g0))
}

/// Largest entrywise modulus of `a − b`.
pub fn max_abs_diff(a: &glauert::linalg::DenseMatrix, b: &glauert::linalg::DenseMatrix) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut m: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            m = m.max((a.get(i, j) - b.get(i, j)).norm());
        }
    }
    m
}

pub fn max_abs(a: &glauert::linalg::DenseMatrix) -> f64 {
    max_abs_diff(
        a,
        &glauert::linalg::DenseMatrix::zeros(a.nrows(), a.ncols()),
    )
}

/// Transformed coefficients at a point with local Mach `m0` in an ambient
/// stream `m_inf`, both with air density and sound speed.
pub fn pg_state(m_inf: Vec3, m0: Vec3) -> glauert::flow::PgCoefficients {
    use glauert::flow::{AmbientState, FlowSample, PgCoefficients};
    let ambient = AmbientState::new(1.2, 340.0, m_inf, 2000.0).expect("ambient");
    let map = glauert::mesh::PgMap::new(m_inf).expect("subsonic");
    let sample = FlowSample {
        rho: 1.2,
        c: 340.0,
        mach: m0,
    };
    PgCoefficients::from_sample(&sample, &ambient, &map).expect("coefficients")
}

pub fn random_unit(rng: &mut impl rand::Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        if (0.1..1.0).contains(&v.norm()) {
            return v.normalized();
        }
    }
}

pub fn random_complex(rng: &mut impl rand::Rng) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Relative error of GMRES against nalgebra's LU on a random diagonally
/// shifted system of size `n`.
pub fn gmres_vs_lu(n: usize, rng: &mut impl rand::Rng) -> f64 {
    use glauert::linalg::DenseMatrix;
    use glauert::solver::{gmres, GmresOptions, IdentityPreconditioner};
    use nalgebra::{DMatrix, DVector};
    let a = DenseMatrix::from_fn(n, n, |i, j| {
        random_complex(rng)
            + if i == j {
                C64::from(2.0)
            } else {
                C64::from(0.0)
            }
    });
    let b: Vec<C64> = (0..n).map(|_| random_complex(rng)).collect();
    let opts = GmresOptions {
        tol: 1e-13,
        max_iter: 4 * n,
    };
    let (x, report) = gmres(&a, &b, &IdentityPreconditioner, &opts, None).expect("GMRES");
    assert!(report.converged);
    let na = DMatrix::from_fn(n, n, |i, j| a.get(i, j));
    let exact = na
        .lu()
        .solve(&DVector::from_column_slice(&b))
        .expect("nonsingular");
    let err: f64 = x
        .iter()
        .zip(exact.iter())
        .map(|(u, v)| (u - v).norm_sqr())
        .sum::<f64>()
        .sqrt();
    err / exact.norm()
}

/// Optimality of the SPAI columns on a banded pattern of half-width 2.
pub struct SpaiCheck {
    /// Entries outside the pattern that are nonzero.
    pub outside: usize,
    /// Largest normal-equation gradient relative to the residual scale.
    pub gradient: f64,
    /// Random in-pattern perturbations that lowered the residual.
    pub improved: usize,
}

pub fn spai_check(n: usize, rng: &mut impl rand::Rng) -> SpaiCheck {
    use glauert::linalg::DenseMatrix;
    use nalgebra::{DMatrix, DVector};
    let a = DenseMatrix::from_fn(n, n, |i, j| {
        random_complex(rng) * 0.3
            + if i == j {
                C64::from(3.0)
            } else {
                C64::from(0.0)
            }
    });
    let pattern: Vec<Vec<usize>> = (0..n)
        .map(|k| (k.saturating_sub(2)..(k + 3).min(n)).collect())
        .collect();
    let m = glauert::solver::spai(&a, &pattern, true)
        .expect("SPAI")
        .inverse;
    // The sparsified operator: entry (i, j) kept when i is in pattern[j].
    let asp = DMatrix::from_fn(n, n, |i, j| {
        if pattern[j].contains(&i) {
            a.get(i, j)
        } else {
            C64::from(0.0)
        }
    });
    let mut check = SpaiCheck {
        outside: 0,
        gradient: 0.0,
        improved: 0,
    };
    for k in 0..n {
        let col = DVector::from_fn(n, |i, _| m.get(i, k));
        check.outside += (0..n)
            .filter(|i| !pattern[k].contains(i) && col[*i] != C64::from(0.0))
            .count();
        let mut e = DVector::from_element(n, C64::from(0.0));
        e[k] = C64::from(1.0);
        let residual = &asp * &col - &e;
        // Normal equations: the residual is orthogonal to every allowed column.
        for &j in &pattern[k] {
            check.gradient = check.gradient.max(asp.column(j).dotc(&residual).norm());
        }
        for _ in 0..20 {
            let mut trial = col.clone();
            for &j in &pattern[k] {
                trial[j] += random_complex(rng) * 1e-3;
            }
            if (&asp * &trial - &e).norm() < residual.norm() - 1e-14 {
                check.improved += 1;
            }
        }
    }
    check
}
