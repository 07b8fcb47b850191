//! Block systems of the two coupled FEM-BEM formulations.
//!
//! Unknowns are ordered `[Φ_interior | Φ_Γ∞ | λ | p]`, the last block only
//! present in the stable formulation.

use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use crate::bem::BemOperators;
use crate::error::{Error, Result};
use crate::incident::IncidentTraces;
use crate::linalg::{DenseMatrix, SparseMatrix, C64, I, ZERO};
use crate::registry::Registry;
use crate::regularizer::SurfaceP1Form;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulationKind {
    Unstable,
    Stable,
}

impl FormulationKind {
    pub fn name(self) -> &'static str {
        match self {
            FormulationKind::Unstable => "unstable",
            FormulationKind::Stable => "stable",
        }
    }
}

/// Discrete space of a block row/column.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpaceKind {
    /// P1 volume functions at interior vertices.
    VolumeInterior,
    /// P1 volume functions at Γ∞ vertices (their traces are surface P1 functions).
    VolumeTrace,
    /// P0 functions on Γ∞ faces.
    SurfaceP0,
    /// P1 functions on Γ∞ vertices.
    SurfaceP1,
}

/// One block of the system matrix.
#[derive(Clone, Debug)]
pub enum Block {
    Zero {
        rows: usize,
        cols: usize,
    },
    Sparse(SparseMatrix),
    Dense(DenseMatrix),
    /// Sum of a FEM part and a BEM part.
    SparsePlusDense(SparseMatrix, DenseMatrix),
}

impl Block {
    pub fn nrows(&self) -> usize {
        match self {
            Block::Zero { rows, .. } => *rows,
            Block::Sparse(s) => s.nrows(),
            Block::Dense(d) => d.nrows(),
            Block::SparsePlusDense(s, _) => s.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Block::Zero { cols, .. } => *cols,
            Block::Sparse(s) => s.ncols(),
            Block::Dense(d) => d.ncols(),
            Block::SparsePlusDense(s, _) => s.ncols(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Block::Zero { .. })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Block::Zero { .. } => "zero",
            Block::Sparse(_) => "sparse",
            Block::Dense(_) => "dense",
            Block::SparsePlusDense(..) => "sparse+dense",
        }
    }

    /// `y += alpha·B·x`.
    pub fn mul_add(&self, alpha: C64, x: &[C64], y: &mut [C64]) {
        match self {
            Block::Zero { .. } => {}
            Block::Sparse(s) => s.mul_add(alpha, x, y),
            Block::Dense(d) => d.mul_add(alpha, x, y),
            Block::SparsePlusDense(s, d) => {
                s.mul_add(alpha, x, y);
                d.mul_add(alpha, x, y);
            }
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            Block::Zero { rows, cols } => DenseMatrix::zeros(*rows, *cols),
            Block::Sparse(s) => s.to_dense(),
            Block::Dense(d) => d.clone(),
            Block::SparsePlusDense(s, d) => d
                .plus_sparse(C64::from(1.0), s)
                .expect("block parts share a shape"),
        }
    }
}

/// Assembled block matrix with its right-hand side.
#[derive(Clone, Debug)]
pub struct BlockSystem {
    pub formulation: FormulationKind,
    pub spaces: Vec<SpaceKind>,
    pub sizes: Vec<usize>,
    /// Row-major `nb × nb` grid.
    blocks: Vec<Block>,
    pub rhs: Vec<C64>,
    pub eta: Option<C64>,
}

impl BlockSystem {
    fn new(
        formulation: FormulationKind,
        spaces: Vec<SpaceKind>,
        blocks: Vec<Block>,
        rhs_parts: Vec<Vec<C64>>,
        eta: Option<C64>,
    ) -> Result<Self> {
        let nb = spaces.len();
        let sizes: Vec<usize> = rhs_parts.iter().map(Vec::len).collect();
        if blocks.len() != nb * nb || sizes.len() != nb {
            return Err(Error::DimensionMismatch(format!(
                "{} blocks and {} right-hand side parts for a {nb} × {nb} system",
                blocks.len(),
                sizes.len()
            )));
        }
        for i in 0..nb {
            for j in 0..nb {
                let b = &blocks[i * nb + j];
                if b.nrows() != sizes[i] || b.ncols() != sizes[j] {
                    return Err(Error::DimensionMismatch(format!(
                        "block ({}, {}) is {} × {}, expected {} × {}",
                        i + 1,
                        j + 1,
                        b.nrows(),
                        b.ncols(),
                        sizes[i],
                        sizes[j]
                    )));
                }
            }
        }
        Ok(BlockSystem {
            formulation,
            spaces,
            sizes,
            blocks,
            rhs: rhs_parts.concat(),
            eta,
        })
    }

    pub fn n_blocks(&self) -> usize {
        self.sizes.len()
    }

    pub fn dim(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Start offset of each block, followed by the total dimension.
    pub fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.sizes.len() + 1);
        let mut acc = 0;
        out.push(0);
        for s in &self.sizes {
            acc += s;
            out.push(acc);
        }
        out
    }

    /// Block `(i, j)`, zero-based.
    pub fn block(&self, i: usize, j: usize) -> &Block {
        &self.blocks[i * self.n_blocks() + j]
    }

    /// `A·x`.
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.dim()];
        self.mul_add(C64::from(1.0), x, &mut y);
        y
    }

    /// `y += alpha·A·x`.
    pub fn mul_add(&self, alpha: C64, x: &[C64], y: &mut [C64]) {
        let off = self.offsets();
        let nb = self.n_blocks();
        for i in 0..nb {
            let yi = &mut y[off[i]..off[i + 1]];
            for j in 0..nb {
                self.block(i, j).mul_add(alpha, &x[off[j]..off[j + 1]], yi);
            }
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let off = self.offsets();
        let n = self.dim();
        let mut a = DenseMatrix::zeros(n, n);
        for i in 0..self.n_blocks() {
            for j in 0..self.n_blocks() {
                match self.block(i, j) {
                    Block::Zero { .. } => {}
                    Block::Sparse(s) => {
                        for (r, c, v) in s.triplets() {
                            a.add_at(off[i] + r, off[j] + c, v);
                        }
                    }
                    b => a.add_block(off[i], off[j], &b.to_dense()),
                }
            }
        }
        a
    }

    /// Split a solution vector into named densities.
    pub fn densities(&self, x: &[C64]) -> Result<Densities> {
        if x.len() != self.dim() {
            return Err(Error::SizeMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        let off = self.offsets();
        let phi = x[..off[2]].to_vec();
        let lambda = x[off[2]..off[3]].to_vec();
        let p_aux = if self.n_blocks() > 3 {
            x[off[3]..off[4]].to_vec()
        } else {
            Vec::new()
        };
        Ok(Densities { phi, lambda, p_aux })
    }
}

/// Solution unknowns: volume potential in dof order, surface density λ and
/// the auxiliary surface unknown (empty for the unstable formulation).
#[derive(Clone, Debug, PartialEq)]
pub struct Densities {
    pub phi: Vec<C64>,
    pub lambda: Vec<C64>,
    pub p_aux: Vec<C64>,
}

impl Densities {
    /// Trace of Φ on Γ∞ given the number of interior volume dofs.
    pub fn trace(&self, n_interior: usize) -> &[C64] {
        &self.phi[n_interior..]
    }

    pub fn is_finite(&self) -> bool {
        self.phi
            .iter()
            .chain(&self.lambda)
            .chain(&self.p_aux)
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

/// Everything assembled at one wavenumber that the formulations combine.
#[derive(Clone, Copy)]
pub struct CouplingParts<'a> {
    /// Interior form 𝒱 on all volume dofs, interior dofs first.
    pub fem: &'a SparseMatrix,
    pub n_interior: usize,
    pub bem: &'a BemOperators,
    /// `∫ ψᵢ ξⱼ`, q × r.
    pub mass01: &'a SparseMatrix,
    pub delta: Option<&'a SurfaceP1Form>,
    pub traces: &'a IncidentTraces,
}

impl CouplingParts<'_> {
    fn check(&self) -> Result<(usize, usize, usize)> {
        let q = self.bem.single_layer.nrows();
        let r = self.bem.hypersingular.nrows();
        let p = self.fem.nrows();
        let mismatch = |what: &str| Err(Error::DimensionMismatch(what.to_string()));
        if self.fem.ncols() != p || p != self.n_interior + r {
            return mismatch("FEM matrix does not match the interior plus Γ∞ dof counts");
        }
        if self.bem.double_layer.nrows() != q
            || self.bem.double_layer.ncols() != r
            || self.bem.adjoint_double_layer.nrows() != r
            || self.bem.adjoint_double_layer.ncols() != q
        {
            return mismatch("boundary operator shapes are inconsistent");
        }
        if self.mass01.nrows() != q || self.mass01.ncols() != r {
            return mismatch("P0-P1 mass matrix shape");
        }
        if self.traces.dirichlet_p0.len() != q || self.traces.neumann_p1.len() != r {
            return mismatch("incident load vectors");
        }
        if let Some(d) = self.delta {
            if d.delta.nrows() != r {
                return mismatch("regularizer form shape");
            }
        }
        Ok((self.n_interior, r, q))
    }

    fn fem_blocks(&self) -> (Block, Block, Block, SparseMatrix) {
        let (ni, p) = (self.n_interior, self.fem.nrows());
        (
            Block::Sparse(self.fem.block(0..ni, 0..ni)),
            Block::Sparse(self.fem.block(0..ni, ni..p)),
            Block::Sparse(self.fem.block(ni..p, 0..ni)),
            self.fem.block(ni..p, ni..p),
        )
    }
}

/// Sign of the ½ mass term in the `(4, 3)` block of the stable system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HalfSign {
    Plus,
    Minus,
}

impl HalfSign {
    fn value(self) -> f64 {
        match self {
            HalfSign::Plus => 0.5,
            HalfSign::Minus => -0.5,
        }
    }
}

/// Classical coupling, singular at interior Dirichlet resonances of Γ∞.
pub fn assemble_unstable(parts: &CouplingParts) -> Result<BlockSystem> {
    let (ni, _, q) = parts.check()?;
    let (a11, a12, a21, fem_bb) = parts.fem_blocks();
    let half = C64::from(-0.5);
    let a22 = Block::SparsePlusDense(fem_bb, parts.bem.hypersingular.clone());
    let a23 = Block::Dense(
        parts
            .bem
            .adjoint_double_layer
            .plus_sparse(half, &parts.mass01.transpose())?,
    );
    let a32 = Block::Dense(parts.bem.double_layer.plus_sparse(half, parts.mass01)?);
    let a33 = Block::Dense(parts.bem.single_layer.scaled(C64::from(-1.0)));
    let blocks = vec![
        a11,
        a12,
        Block::Zero { rows: ni, cols: q },
        a21,
        a22,
        a23,
        Block::Zero { rows: q, cols: ni },
        a32,
        a33,
    ];
    let rhs = vec![
        vec![ZERO; ni],
        parts.traces.neumann_p1.clone(),
        parts.traces.dirichlet_p0.iter().map(|v| -v).collect(),
    ];
    BlockSystem::new(
        FormulationKind::Unstable,
        vec![
            SpaceKind::VolumeInterior,
            SpaceKind::VolumeTrace,
            SpaceKind::SurfaceP0,
        ],
        blocks,
        rhs,
        None,
    )
}

/// Stabilized coupling with the auxiliary unknown `p` and parameter `η`.
pub fn assemble_stable(
    parts: &CouplingParts,
    eta: C64,
    half_sign: HalfSign,
) -> Result<BlockSystem> {
    if eta.re == 0.0 {
        return Err(Error::Eta(eta));
    }
    let delta = parts.delta.ok_or_else(|| {
        Error::DimensionMismatch("stable formulation needs the regularizer form".into())
    })?;
    let (ni, r, q) = parts.check()?;
    let (a11, a12, a21, fem_bb) = parts.fem_blocks();
    let minus_half = C64::from(-0.5);
    let m01t = parts.mass01.transpose();
    let blocks = vec![
        a11,
        a12,
        Block::Zero { rows: ni, cols: q },
        Block::Zero { rows: ni, cols: r },
        a21,
        Block::SparsePlusDense(fem_bb, parts.bem.hypersingular.clone()),
        Block::Dense(
            parts
                .bem
                .adjoint_double_layer
                .plus_sparse(minus_half, &m01t)?,
        ),
        Block::Zero { rows: r, cols: r },
        Block::Zero { rows: q, cols: ni },
        Block::Dense(
            parts
                .bem
                .double_layer
                .plus_sparse(minus_half, parts.mass01)?,
        ),
        Block::Dense(parts.bem.single_layer.scaled(C64::from(-1.0))),
        Block::Sparse(parts.mass01.scaled(I * eta.conj())),
        Block::Zero { rows: r, cols: ni },
        Block::Dense(parts.bem.hypersingular.clone()),
        Block::Dense(
            parts
                .bem
                .adjoint_double_layer
                .plus_sparse(C64::from(half_sign.value()), &m01t)?,
        ),
        Block::Sparse(delta.delta.scaled(C64::from(-1.0))),
    ];
    let rhs = vec![
        vec![ZERO; ni],
        parts.traces.neumann_p1.clone(),
        parts.traces.dirichlet_p0.iter().map(|v| -v).collect(),
        parts.traces.neumann_p1.clone(),
    ];
    BlockSystem::new(
        FormulationKind::Stable,
        vec![
            SpaceKind::VolumeInterior,
            SpaceKind::VolumeTrace,
            SpaceKind::SurfaceP0,
            SpaceKind::SurfaceP1,
        ],
        blocks,
        rhs,
        Some(eta),
    )
}

/// Parameters available to formulation constructors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FormulationParams {
    pub eta: C64,
    pub half_sign: HalfSign,
}

impl Default for FormulationParams {
    fn default() -> Self {
        FormulationParams {
            eta: C64::from(1.0),
            half_sign: HalfSign::Plus,
        }
    }
}

/// A coupled formulation: how the assembled parts become a block system.
pub trait Formulation: Send + Sync + Debug {
    fn kind(&self) -> FormulationKind;

    fn assemble(&self, parts: &CouplingParts) -> Result<BlockSystem>;

    /// Whether [`CouplingParts::delta`] must be provided.
    fn needs_regularizer(&self) -> bool {
        false
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct UnstableFormulation;

impl Formulation for UnstableFormulation {
    fn kind(&self) -> FormulationKind {
        FormulationKind::Unstable
    }

    fn assemble(&self, parts: &CouplingParts) -> Result<BlockSystem> {
        assemble_unstable(parts)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct StableFormulation {
    pub eta: C64,
    pub half_sign: HalfSign,
}

impl StableFormulation {
    pub fn new(eta: C64, half_sign: HalfSign) -> Result<Self> {
        if eta.re == 0.0 {
            return Err(Error::Eta(eta));
        }
        Ok(StableFormulation { eta, half_sign })
    }
}

impl Formulation for StableFormulation {
    fn kind(&self) -> FormulationKind {
        FormulationKind::Stable
    }

    fn assemble(&self, parts: &CouplingParts) -> Result<BlockSystem> {
        assemble_stable(parts, self.eta, self.half_sign)
    }

    fn needs_regularizer(&self) -> bool {
        true
    }
}

pub type FormulationConstructor = fn(&FormulationParams) -> Result<Box<dyn Formulation>>;

/// Formulations selectable by name.
pub fn formulation_registry() -> Registry<FormulationConstructor> {
    Registry::<FormulationConstructor>::new("formulation")
        .register("unstable", |_| Ok(Box::new(UnstableFormulation)))
        .register("stable", |p| {
            Ok(Box::new(StableFormulation::new(p.eta, p.half_sign)?))
        })
}

/// Build the configured preconditioner, run GMRES on `system` and split the
/// solution into densities.
pub fn solve_case(
    system: &BlockSystem,
    spaces: &crate::bem::SurfaceSpaces,
    config: &crate::config::SolverConfig,
) -> Result<(Densities, crate::solver::SolveReport)> {
    use crate::solver::{gmres, preconditioner_registry};
    let precond = preconditioner_registry().get(&config.preconditioner)?(
        system,
        spaces,
        &config.preconditioner_options(),
    )?;
    let mut last_logged = 0;
    let mut monitor = |p: &crate::solver::GmresProgress| {
        if p.iteration >= last_logged + 50 {
            last_logged = p.iteration;
            log::debug!(
                "GMRES iteration {}: relative residual {:.3e}",
                p.iteration,
                p.relative_residual
            );
        }
    };
    let (x, report) = gmres(
        system,
        &system.rhs,
        precond.as_ref(),
        &config.gmres(),
        Some(&mut monitor),
    )?;
    log::info!(
        "GMRES ({}) converged in {} iterations, relative residual {:.3e}",
        report.preconditioner,
        report.iterations,
        report.final_residual()
    );
    Ok((system.densities(&x)?, report))
}
