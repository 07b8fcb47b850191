//! Full (unrestarted) right-preconditioned GMRES, block-diagonal SPAI / LU
//! preconditioning and dense conditioning analysis.

use std::time::Instant;

use faer::linalg::solvers::{Solve, SolveLstsq};
use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bem::SurfaceSpaces;
use crate::coupling::{Block, BlockSystem, SpaceKind};
use crate::error::{Error, Result};
use crate::linalg::{norm2, DenseMatrix, SparseMatrix, C64, ZERO};
use crate::registry::Registry;

/// A square linear map.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    fn apply(&self, x: &[C64]) -> Vec<C64>;
}

impl LinearOperator for BlockSystem {
    fn dim(&self) -> usize {
        BlockSystem::dim(self)
    }

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        BlockSystem::apply(self, x)
    }
}

impl LinearOperator for DenseMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.matvec(x)
    }
}

impl LinearOperator for SparseMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.matvec(x)
    }
}

/// Approximate inverse applied on the right: GMRES solves `A M⁻¹ u = b`.
pub trait Preconditioner: Send + Sync {
    fn name(&self) -> &'static str;

    fn apply(&self, x: &[C64]) -> Vec<C64>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn name(&self) -> &'static str {
        "none"
    }

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        x.to_vec()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GmresOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions {
            tol: 1e-6,
            max_iter: 2000,
        }
    }
}

/// Outcome of a GMRES run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// Relative residual `‖b − Axₖ‖/‖b‖` after each iteration, starting with
    /// the initial guess.
    pub residuals: Vec<f64>,
    /// Relative residual recomputed from the returned solution.
    pub true_residual: f64,
    pub converged: bool,
    pub wall_time_s: f64,
    pub preconditioner: String,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(0.0)
    }
}

/// State handed to the GMRES monitor after each iteration.
pub struct GmresProgress<'a> {
    pub iteration: usize,
    pub relative_residual: f64,
    basis: &'a [Vec<C64>],
    r: &'a [Vec<C64>],
    g: &'a [C64],
    precond: &'a dyn Preconditioner,
}

impl GmresProgress<'_> {
    /// The current iterate `xₖ`.
    pub fn solution(&self) -> Vec<C64> {
        assemble_solution(self.basis, self.r, self.g, self.iteration, self.precond)
    }
}

fn assemble_solution(
    basis: &[Vec<C64>],
    r: &[Vec<C64>],
    g: &[C64],
    k: usize,
    precond: &dyn Preconditioner,
) -> Vec<C64> {
    let n = basis.first().map_or(0, Vec::len);
    if k == 0 {
        return vec![ZERO; n];
    }
    // Back substitution with the rotated Hessenberg columns.
    let mut y = g[..k].to_vec();
    for i in (0..k).rev() {
        let mut s = y[i];
        for j in i + 1..k {
            s -= r[j][i] * y[j];
        }
        y[i] = s / r[i][i];
    }
    let mut v = vec![ZERO; n];
    for (yj, bj) in y.iter().zip(basis) {
        for (vi, bi) in v.iter_mut().zip(bj) {
            *vi += yj * bi;
        }
    }
    precond.apply(&v)
}

fn givens(a: C64, b: C64) -> (f64, C64) {
    // Rotation [c s; −s̄ c] with c real mapping (a, b) to (ρ, 0).
    let (na, nb) = (a.norm(), b.norm());
    if nb == 0.0 {
        return (1.0, ZERO);
    }
    if na == 0.0 {
        return (0.0, (b / nb).conj());
    }
    let t = na.hypot(nb);
    let c = na / t;
    let s = (a / na) * b.conj() / t;
    (c, s)
}

/// Right-preconditioned full GMRES from a zero initial guess.
///
/// The monitor, when given, is called after every iteration. On reaching the
/// iteration cap the report is returned inside [`Error::NonConvergence`].
pub fn gmres(
    op: &dyn LinearOperator,
    b: &[C64],
    precond: &dyn Preconditioner,
    opts: &GmresOptions,
    mut monitor: Option<&mut dyn FnMut(&GmresProgress)>,
) -> Result<(Vec<C64>, SolveReport)> {
    let start = Instant::now();
    let n = op.dim();
    if b.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            found: b.len(),
        });
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Config(format!(
            "GMRES tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let beta = norm2(b);
    let mut report = SolveReport {
        iterations: 0,
        residuals: vec![if beta == 0.0 { 0.0 } else { 1.0 }],
        true_residual: 0.0,
        converged: true,
        wall_time_s: 0.0,
        preconditioner: precond.name().to_string(),
    };
    if beta == 0.0 {
        report.wall_time_s = start.elapsed().as_secs_f64();
        return Ok((vec![ZERO; n], report));
    }

    let mut basis: Vec<Vec<C64>> = vec![b.iter().map(|v| v / beta).collect()];
    let mut r: Vec<Vec<C64>> = Vec::new();
    let mut rotations: Vec<(f64, C64)> = Vec::new();
    let mut g = vec![C64::from(beta)];
    let mut k = 0;
    let mut converged = false;

    while k < opts.max_iter {
        let z = precond.apply(&basis[k]);
        let mut w = op.apply(&z);
        let mut h = vec![ZERO; k + 2];
        // Modified Gram–Schmidt with one reorthogonalization pass.
        for _ in 0..2 {
            for (i, v) in basis.iter().enumerate() {
                let c: C64 = v.iter().zip(&w).map(|(vi, wi)| vi.conj() * wi).sum();
                for (wj, vj) in w.iter_mut().zip(v) {
                    *wj -= c * vj;
                }
                h[i] += c;
            }
        }
        let hn = norm2(&w);
        if !hn.is_finite() {
            return Err(Error::Breakdown { iteration: k + 1 });
        }
        h[k + 1] = C64::from(hn);
        for (i, &(c, s)) in rotations.iter().enumerate() {
            let (a, bb) = (h[i], h[i + 1]);
            h[i] = c * a + s * bb;
            h[i + 1] = -s.conj() * a + c * bb;
        }
        let (c, s) = givens(h[k], h[k + 1]);
        let a = h[k];
        h[k] = c * a + s * h[k + 1];
        h[k + 1] = ZERO;
        rotations.push((c, s));
        g.push(-s.conj() * g[k]);
        g[k] *= c;
        h.truncate(k + 1);
        r.push(h);
        k += 1;

        let relres = g[k].norm() / beta;
        report.residuals.push(relres);
        if let Some(m) = monitor.as_mut() {
            m(&GmresProgress {
                iteration: k,
                relative_residual: relres,
                basis: &basis,
                r: &r,
                g: &g,
                precond,
            });
        }
        if relres <= opts.tol {
            converged = true;
            break;
        }
        let happy = hn <= 1e-14 * beta;
        if happy {
            if r[k - 1][k - 1].norm() == 0.0 {
                return Err(Error::Breakdown { iteration: k });
            }
            converged = true;
            break;
        }
        basis.push(w.iter().map(|v| v / hn).collect());
    }

    let x = assemble_solution(&basis, &r, &g, k, precond);
    let ax = op.apply(&x);
    let res: Vec<C64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    report.true_residual = norm2(&res) / beta;
    report.iterations = k;
    report.converged = converged;
    report.wall_time_s = start.elapsed().as_secs_f64();
    log::debug!(
        "GMRES ({}) finished after {} iterations, relative residual {:.3e}",
        report.preconditioner,
        k,
        report.final_residual()
    );
    if converged {
        Ok((x, report))
    } else {
        Err(Error::NonConvergence(Box::new(report)))
    }
}

/// Sparse approximate inverse of a dense block.
#[derive(Clone, Debug)]
pub struct Spai {
    pub inverse: SparseMatrix,
    /// Columns whose least-squares problem was rank deficient and that fell
    /// back to a scaled unit column.
    pub fallback_columns: Vec<usize>,
}

/// Frobenius-optimal sparse approximate inverse of `a` over `pattern`.
///
/// `pattern[k]` lists the rows allowed in column `k` of the inverse; the same
/// neighbourhood relation sparsifies `a` (entry `(i, j)` is kept when `i` is in
/// `pattern[j]`). Each column solves `min ‖A^sp[I, J] m − e_k[I]‖` where `J` is
/// `pattern[k]` and `I` the rows reached from `J`. With `strict` a
/// rank-deficient column is an error rather than a fallback.
pub fn spai(a: &DenseMatrix, pattern: &[Vec<usize>], strict: bool) -> Result<Spai> {
    let n = a.nrows();
    if a.ncols() != n || pattern.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "SPAI needs a square block and one pattern per column, got {} × {} with {} patterns",
            a.nrows(),
            a.ncols(),
            pattern.len()
        )));
    }
    let columns: Vec<std::result::Result<Vec<(usize, C64)>, usize>> = (0..n)
        .into_par_iter()
        .map(|k| spai_column(a, pattern, k))
        .collect();
    let mut triplets = Vec::new();
    let mut fallback = Vec::new();
    for (k, col) in columns.into_iter().enumerate() {
        match col {
            Ok(entries) => triplets.extend(entries.into_iter().map(|(i, v)| (i, k, v))),
            Err(k) => {
                if strict {
                    return Err(Error::Rank(k));
                }
                let d = a.get(k, k);
                let v = if d.norm() > 0.0 {
                    d.inv()
                } else {
                    C64::from(1.0)
                };
                triplets.push((k, k, v));
                fallback.push(k);
            }
        }
    }
    if !fallback.is_empty() {
        log::warn!(
            "SPAI: {} rank-deficient column(s) replaced by scaled unit columns",
            fallback.len()
        );
    }
    Ok(Spai {
        inverse: SparseMatrix::from_triplets(n, n, triplets)?,
        fallback_columns: fallback,
    })
}

fn spai_column(
    a: &DenseMatrix,
    pattern: &[Vec<usize>],
    k: usize,
) -> std::result::Result<Vec<(usize, C64)>, usize> {
    let cols = &pattern[k];
    let mut rows: Vec<usize> = cols
        .iter()
        .flat_map(|&j| pattern[j].iter().copied())
        .collect();
    rows.push(k);
    rows.sort_unstable();
    rows.dedup();
    let sub = Mat::<C64>::from_fn(rows.len(), cols.len(), |ii, jj| {
        let (i, j) = (rows[ii], cols[jj]);
        if pattern[j].binary_search(&i).is_ok() {
            a.get(i, j)
        } else {
            ZERO
        }
    });
    if rows.len() < cols.len() {
        return Err(k);
    }
    let qr = sub.qr();
    let rmat = qr.thin_R();
    let diag: Vec<f64> = (0..cols.len()).map(|i| rmat[(i, i)].norm()).collect();
    let max = diag.iter().copied().fold(0.0, f64::max);
    if !(max > 0.0) || diag.iter().any(|&d| d <= 1e-13 * max) {
        return Err(k);
    }
    let rhs = Mat::<C64>::from_fn(rows.len(), 1, |ii, _| {
        if rows[ii] == k {
            C64::from(1.0)
        } else {
            ZERO
        }
    });
    let m = qr.solve_lstsq(&rhs);
    Ok(cols
        .iter()
        .enumerate()
        .map(|(jj, &j)| (j, m[(jj, 0)]))
        .collect())
}

/// Neighbourhood patterns for a block acting on `kind`.
pub fn surface_pattern(
    spaces: &SurfaceSpaces,
    kind: SpaceKind,
    radius: usize,
) -> Result<Vec<Vec<usize>>> {
    match kind {
        SpaceKind::SurfaceP0 => Ok((0..spaces.q())
            .map(|f| spaces.face_neighbourhood(f, radius))
            .collect()),
        SpaceKind::SurfaceP1 | SpaceKind::VolumeTrace => Ok((0..spaces.r())
            .map(|v| spaces.vertex_neighbourhood(v, radius))
            .collect()),
        SpaceKind::VolumeInterior => Err(Error::Config(
            "no surface pattern for interior volume dofs".into(),
        )),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreconditionerOptions {
    /// Neighbourhood growth steps for SPAI patterns.
    pub pattern_radius: usize,
    /// Treat rank-deficient SPAI columns as errors.
    pub strict_rank: bool,
}

impl Default for PreconditionerOptions {
    fn default() -> Self {
        PreconditionerOptions {
            pattern_radius: 1,
            strict_rank: false,
        }
    }
}

enum DiagonalInverse {
    Identity,
    SparseLu(Box<faer::sparse::linalg::solvers::Lu<usize, C64>>),
    Spai(SparseMatrix),
}

/// Block-diagonal preconditioner: sparse LU on sparse diagonal blocks, SPAI
/// on dense ones (for FEM+BEM blocks only the boundary part is used).
pub struct BlockDiagonalPreconditioner {
    offsets: Vec<usize>,
    blocks: Vec<DiagonalInverse>,
}

impl BlockDiagonalPreconditioner {
    pub fn new(
        system: &BlockSystem,
        spaces: &SurfaceSpaces,
        opts: &PreconditionerOptions,
    ) -> Result<Self> {
        let mut blocks = Vec::with_capacity(system.n_blocks());
        for i in 0..system.n_blocks() {
            let inv = match system.block(i, i) {
                Block::Zero { .. } => DiagonalInverse::Identity,
                Block::Sparse(s) => {
                    if s.nrows() == 0 {
                        DiagonalInverse::Identity
                    } else {
                        let lu = s.to_faer()?.sp_lu().map_err(|e| {
                            Error::SingularPreconditioner(format!(
                                "block ({}, {}): {e:?}",
                                i + 1,
                                i + 1
                            ))
                        })?;
                        DiagonalInverse::SparseLu(Box::new(lu))
                    }
                }
                Block::Dense(d) | Block::SparsePlusDense(_, d) => {
                    let pattern = surface_pattern(spaces, system.spaces[i], opts.pattern_radius)?;
                    DiagonalInverse::Spai(spai(d, &pattern, opts.strict_rank)?.inverse)
                }
            };
            blocks.push(inv);
        }
        Ok(BlockDiagonalPreconditioner {
            offsets: system.offsets(),
            blocks,
        })
    }
}

impl Preconditioner for BlockDiagonalPreconditioner {
    fn name(&self) -> &'static str {
        "block_spai"
    }

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut out = x.to_vec();
        for (i, inv) in self.blocks.iter().enumerate() {
            let (a, b) = (self.offsets[i], self.offsets[i + 1]);
            match inv {
                DiagonalInverse::Identity => {}
                DiagonalInverse::SparseLu(lu) => {
                    lu.solve_in_place(faer::ColMut::from_slice_mut(&mut out[a..b]).as_mat_mut());
                }
                DiagonalInverse::Spai(m) => {
                    let y = m.matvec(&x[a..b]);
                    out[a..b].copy_from_slice(&y);
                }
            }
        }
        out
    }
}

pub type PreconditionerConstructor =
    fn(&BlockSystem, &SurfaceSpaces, &PreconditionerOptions) -> Result<Box<dyn Preconditioner>>;

/// Preconditioners selectable by name.
pub fn preconditioner_registry() -> Registry<PreconditionerConstructor> {
    Registry::<PreconditionerConstructor>::new("preconditioner")
        .register("none", |_, _, _| Ok(Box::new(IdentityPreconditioner)))
        .register("block_spai", |s, sp, o| {
            Ok(Box::new(BlockDiagonalPreconditioner::new(s, sp, o)?))
        })
}

/// Default cap on the dimension for dense condition numbers.
pub const DENSE_CAP: usize = 6000;

/// 2-norm condition number `σ_max/σ_min` by dense SVD.
pub fn condition_number(a: &DenseMatrix, cap: usize) -> Result<f64> {
    let n = a.nrows();
    if n > cap {
        return Err(Error::CapExceeded { n, cap });
    }
    if a.ncols() != n {
        return Err(Error::DimensionMismatch(
            "condition number of a non-square matrix".into(),
        ));
    }
    let s = a.singular_values()?;
    let (max, min) = (s[0], s[s.len() - 1]);
    Ok(if min > 0.0 { max / min } else { f64::INFINITY })
}

/// Condition number of an assembled block system.
pub fn system_condition_number(system: &BlockSystem, cap: usize) -> Result<f64> {
    if system.dim() > cap {
        return Err(Error::CapExceeded {
            n: system.dim(),
            cap,
        });
    }
    condition_number(&system.to_dense(), cap)
}

/// One row of a conditioning sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub freq_hz: f64,
    pub k_hat: f64,
    pub cond_unstab: f64,
    pub cond_stab: f64,
    pub iters_unstab: Option<usize>,
    pub iters_stab: Option<usize>,
}

pub use crate::pipeline::sweep_conditioning;
