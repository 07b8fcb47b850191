//! Quadrature rules on the unit interval, the reference triangle
//! `{(u, v) : u, v ≥ 0, u + v ≤ 1}`, the reference tetrahedron, and the
//! Sauter–Schwab relative-coordinate rules for singular panel pairs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on [0, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Rule on the reference triangle; weights sum to 1/2.
#[derive(Clone, Debug)]
pub struct TriangleRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    /// Collapsed (Duffy) tensor Gauss rule with `n²` points, exact for degree `2n − 2`.
    pub fn collapsed_gauss(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (a, wa) in x.iter().zip(&w) {
            for (b, wb) in x.iter().zip(&w) {
                points.push([*a, b * (1.0 - a)]);
                weights.push(wa * wb * (1.0 - a));
            }
        }
        TriangleRule { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Rule on the reference tetrahedron in barycentric coordinates; weights sum to 1
/// (multiply by the element volume).
#[derive(Clone, Debug)]
pub struct TetRule {
    pub barycentric: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
}

/// Selectable tetrahedral rules.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TetRuleKind {
    /// 4 points, exact for degree 2.
    #[default]
    Degree2,
    /// 64-point collapsed Gauss rule, exact for degree 5.
    Degree5,
}

impl TetRuleKind {
    pub fn from_degree(degree: u32) -> Result<Self> {
        match degree {
            2 => Ok(TetRuleKind::Degree2),
            5 => Ok(TetRuleKind::Degree5),
            d => Err(Error::Config(format!(
                "tetrahedral quadrature degree {d} unsupported (use 2 or 5)"
            ))),
        }
    }

    pub fn rule(self) -> TetRule {
        match self {
            TetRuleKind::Degree2 => TetRule::degree2(),
            TetRuleKind::Degree5 => TetRule::degree5(),
        }
    }
}

impl TetRule {
    pub fn degree2() -> Self {
        let a = 0.138_196_601_125_010_5;
        let b = 0.585_410_196_624_968_5;
        let barycentric = (0..4)
            .map(|i| {
                let mut p = [a; 4];
                p[i] = b;
                p
            })
            .collect();
        TetRule {
            barycentric,
            weights: vec![0.25; 4],
        }
    }

    /// Collapsed (Duffy) 4×4×4 Gauss product rule, exact for degree 5.
    pub fn degree5() -> Self {
        let (x, w) = gauss_legendre(4);
        let mut barycentric = Vec::with_capacity(64);
        let mut weights = Vec::with_capacity(64);
        for (u, wu) in x.iter().zip(&w) {
            for (v, wv) in x.iter().zip(&w) {
                for (t, wt) in x.iter().zip(&w) {
                    let l1 = u;
                    let l2 = (1.0 - u) * v;
                    let l3 = (1.0 - u) * (1.0 - v) * t;
                    barycentric.push([1.0 - l1 - l2 - l3, *l1, l2, l3]);
                    // Jacobian (1−u)²(1−v) relative to the reference volume 1/6.
                    weights.push(6.0 * wu * wv * wt * (1.0 - u).powi(2) * (1.0 - v));
                }
            }
        }
        TetRule {
            barycentric,
            weights,
        }
    }
}

/// Tensor Gauss rule on [0,1]^4.
fn gauss_4d(n: usize) -> Vec<([f64; 4], f64)> {
    let (x, w) = gauss_legendre(n);
    let mut out = Vec::with_capacity(n.pow(4));
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    out.push(([x[i], x[j], x[k], x[l]], w[i] * w[j] * w[k] * w[l]));
                }
            }
        }
    }
    out
}

/// Relation between two panels, by shared-vertex count.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PanelRelation {
    Identical,
    /// Common edge: the first two local vertices of both panels are shared, in the same order.
    Edge,
    /// Common vertex: local vertex 0 of both panels.
    Vertex,
    Regular,
}

/// Points on T̂ × T̂ in reference-triangle coordinates with weights; integrating
/// over a pair of physical triangles multiplies by `2|Tₓ| · 2|Tᵧ|`.
#[derive(Clone, Debug)]
pub struct PairRule {
    pub x: Vec<[f64; 2]>,
    pub y: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl PairRule {
    fn with_capacity(n: usize) -> Self {
        PairRule {
            x: Vec::with_capacity(n),
            y: Vec::with_capacity(n),
            weights: Vec::with_capacity(n),
        }
    }

    /// Push a point given in Sauter–Schwab coordinates `{0 ≤ t ≤ s ≤ 1}`.
    fn push_ss(&mut self, (s1, t1): (f64, f64), (s2, t2): (f64, f64), w: f64) {
        self.x.push([s1 - t1, t1]);
        self.y.push([s2 - t2, t2]);
        self.weights.push(w);
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Tensor product of a triangle rule with itself.
    pub fn regular(rule: &TriangleRule) -> Self {
        let mut out = PairRule::with_capacity(rule.len() * rule.len());
        for (px, wx) in rule.points.iter().zip(&rule.weights) {
            for (py, wy) in rule.points.iter().zip(&rule.weights) {
                out.x.push(*px);
                out.y.push(*py);
                out.weights.push(wx * wy);
            }
        }
        out
    }

    /// Sauter–Schwab rule for coincident panels.
    pub fn identical(n: usize) -> Self {
        let g = gauss_4d(n);
        let mut out = PairRule::with_capacity(6 * g.len());
        for ([xi, e1, e2, e3], w) in g {
            let w = w * xi.powi(3) * e1 * e1 * e2;
            let a = (xi, xi * (1.0 - e1 + e1 * e2));
            let b = (xi * (1.0 - e1 * e2 * e3), xi * (1.0 - e1));
            out.push_ss(a, b, w);
            out.push_ss(b, a, w);
            let a = (xi, xi * e1 * (1.0 - e2 + e2 * e3));
            let b = (xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2));
            out.push_ss(a, b, w);
            out.push_ss(b, a, w);
            let a = (xi * (1.0 - e1 * e2 * e3), xi * e1 * (1.0 - e2 * e3));
            let b = (xi, xi * e1 * (1.0 - e2));
            out.push_ss(a, b, w);
            out.push_ss(b, a, w);
        }
        out
    }

    /// Sauter–Schwab rule for panels sharing the edge from local vertex 0 to 1.
    pub fn edge_adjacent(n: usize) -> Self {
        let g = gauss_4d(n);
        let mut out = PairRule::with_capacity(5 * g.len());
        for ([xi, e1, e2, e3], w) in g {
            let w1 = w * xi.powi(3) * e1 * e1;
            let w2 = w1 * e2;
            out.push_ss(
                (xi, xi * e1 * e3),
                (xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2)),
                w1,
            );
            out.push_ss(
                (xi, xi * e1),
                (xi * (1.0 - e1 * e2 * e3), xi * e1 * e2 * (1.0 - e3)),
                w2,
            );
            out.push_ss(
                (xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2)),
                (xi, xi * e1 * e2 * e3),
                w2,
            );
            out.push_ss(
                (xi * (1.0 - e1 * e2 * e3), xi * e1 * e2 * (1.0 - e3)),
                (xi, xi * e1),
                w2,
            );
            out.push_ss(
                (xi * (1.0 - e1 * e2 * e3), xi * e1 * (1.0 - e2 * e3)),
                (xi, xi * e1 * e2),
                w2,
            );
        }
        out
    }

    /// Sauter–Schwab rule for panels sharing local vertex 0.
    pub fn vertex_adjacent(n: usize) -> Self {
        let g = gauss_4d(n);
        let mut out = PairRule::with_capacity(2 * g.len());
        for ([xi, e1, e2, e3], w) in g {
            let w = w * xi.powi(3) * e2;
            let a = (xi, xi * e1);
            let b = (xi * e2, xi * e2 * e3);
            out.push_ss(a, b, w);
            out.push_ss(b, a, w);
        }
        out
    }
}
