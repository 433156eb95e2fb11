//! Sparse matrix assembly, products, matrix-market output and linear solvers.

use std::io::Write;
use std::ops::Range;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type SparseMatrix = SparseColMat<usize, f64>;

/// Relative residual accepted from a linear solve.
pub const SOLVER_TOLERANCE: f64 = 1e-10;

/// Coordinate-format accumulator; duplicate entries are summed on build.
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<Triplet<usize, usize, f64>>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, entries: Vec::new() }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        if v != 0.0 {
            self.entries.push(Triplet::new(i, j, v));
        }
    }

    /// Adds `scale * m[(a, b)]` at `(rows[a], cols[b])`.
    pub fn add_block(&mut self, rows: &[usize], cols: &[usize], m: &DMatrix<f64>, scale: f64) {
        for (b, &j) in cols.iter().enumerate() {
            for (a, &i) in rows.iter().enumerate() {
                self.add(i, j, scale * m[(a, b)]);
            }
        }
    }

    pub fn append(&mut self, other: TripletBuilder) {
        self.entries.extend(other.entries);
    }

    pub fn build(&self) -> Result<SparseMatrix> {
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &self.entries)
            .map_err(|e| Error::Solver(format!("sparse assembly failed: {e:?}")))
    }
}

/// `y = A x`.
pub fn matvec(a: &SparseMatrix, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.nrows()];
    let r = a.as_ref();
    let (cp, ri, val) = (r.symbolic().col_ptr(), r.symbolic().row_idx(), r.val());
    for j in 0..a.ncols() {
        let xj = x[j];
        if xj == 0.0 {
            continue;
        }
        for p in cp[j]..cp[j + 1] {
            y[ri[p]] += val[p] * xj;
        }
    }
    y
}

pub fn to_dense(a: &SparseMatrix) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(a.nrows(), a.ncols());
    let r = a.as_ref();
    let (cp, ri, val) = (r.symbolic().col_ptr(), r.symbolic().row_idx(), r.val());
    for j in 0..a.ncols() {
        for p in cp[j]..cp[j + 1] {
            m[(ri[p], j)] += val[p];
        }
    }
    m
}

/// Largest `|A_ij - A_ji|`.
pub fn asymmetry(a: &SparseMatrix) -> f64 {
    let d = to_dense(a);
    (&d - d.transpose()).amax()
}

pub fn write_matrix_market(a: &SparseMatrix, mut out: impl Write) -> Result<()> {
    let r = a.as_ref();
    let (cp, ri, val) = (r.symbolic().col_ptr(), r.symbolic().row_idx(), r.val());
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", a.nrows(), a.ncols(), val.len())?;
    for j in 0..a.ncols() {
        for p in cp[j]..cp[j + 1] {
            writeln!(out, "{} {} {:.17e}", ri[p] + 1, j + 1, val[p])?;
        }
    }
    Ok(())
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn relative_residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = matvec(a, x);
    let r: Vec<f64> = ax.iter().zip(b).map(|(p, q)| q - p).collect();
    norm(&r) / norm(b).max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SolverKind {
    /// Sparse LU with partial pivoting.
    #[default]
    Direct,
    /// Restarted GMRES with a block-Jacobi preconditioner.
    Gmres { restart: usize, max_iterations: usize },
}

type DenseLu = nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>;

struct BlockJacobi {
    blocks: Vec<(Range<usize>, Option<DenseLu>)>,
}

impl BlockJacobi {
    fn new(a: &SparseMatrix, blocks: &[Range<usize>]) -> Self {
        let dense_block = |r: &Range<usize>| {
            let mut m = DMatrix::zeros(r.len(), r.len());
            let s = a.as_ref();
            let (cp, ri, val) = (s.symbolic().col_ptr(), s.symbolic().row_idx(), s.val());
            for j in r.clone() {
                for p in cp[j]..cp[j + 1] {
                    if r.contains(&ri[p]) {
                        m[(ri[p] - r.start, j - r.start)] += val[p];
                    }
                }
            }
            let lu = m.lu();
            lu.is_invertible().then_some(lu)
        };
        Self { blocks: blocks.iter().map(|r| (r.clone(), dense_block(r))).collect() }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for (r, lu) in &self.blocks {
            if let Some(lu) = lu {
                let v = nalgebra::DVector::from_column_slice(&x[r.clone()]);
                if let Some(s) = lu.solve(&v) {
                    y[r.clone()].copy_from_slice(s.as_slice());
                }
            }
        }
        y
    }
}

enum Backend {
    Direct(Box<faer::sparse::linalg::solvers::Lu<usize, f64>>),
    Gmres { restart: usize, max_iterations: usize, precond: BlockJacobi },
}

/// Factorized (or preconditioned) operator, reusable across right-hand sides.
///
/// The operator is equilibrated as `S A S` with `S = diag(1 / sqrt(max |a_i.|, |a_.i|))`
/// before factorization; residuals are measured on the equilibrated system.
pub struct LinearSolver {
    matrix: SparseMatrix,
    scaled: SparseMatrix,
    scale: Vec<f64>,
    backend: Backend,
}

fn equilibrate(a: &SparseMatrix) -> Result<(SparseMatrix, Vec<f64>)> {
    let n = a.nrows();
    let mut m = vec![0.0f64; n.max(a.ncols())];
    let r = a.as_ref();
    let (cp, ri, val) = (r.symbolic().col_ptr(), r.symbolic().row_idx(), r.val());
    for j in 0..a.ncols() {
        for p in cp[j]..cp[j + 1] {
            let v = val[p].abs();
            m[ri[p]] = m[ri[p]].max(v);
            m[j] = m[j].max(v);
        }
    }
    let scale: Vec<f64> = m.iter().map(|&v| if v > 0.0 { 1.0 / v.sqrt() } else { 1.0 }).collect();
    let mut t = TripletBuilder::new(a.nrows(), a.ncols());
    for j in 0..a.ncols() {
        for p in cp[j]..cp[j + 1] {
            t.add(ri[p], j, scale[ri[p]] * val[p] * scale[j]);
        }
    }
    Ok((t.build()?, scale))
}

impl LinearSolver {
    /// `blocks` partitions the unknowns for the block-Jacobi preconditioner
    /// (ignored by the direct backend).
    pub fn new(matrix: SparseMatrix, kind: SolverKind, blocks: &[Range<usize>]) -> Result<Self> {
        let (scaled, scale) = equilibrate(&matrix)?;
        let backend = match kind {
            SolverKind::Direct => Backend::Direct(
                Box::new(scaled.sp_lu().map_err(|e| Error::Solver(format!("sparse LU failed: {e:?}")))?),
            ),
            SolverKind::Gmres { restart, max_iterations } => {
                Backend::Gmres { restart, max_iterations, precond: BlockJacobi::new(&scaled, blocks) }
            }
        };
        Ok(Self { matrix, scaled, scale, backend })
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    /// Solves `A x = b` and checks the relative residual against [`SOLVER_TOLERANCE`].
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if norm(b) == 0.0 {
            return Ok(vec![0.0; b.len()]);
        }
        let b: Vec<f64> = b.iter().zip(&self.scale).map(|(v, s)| v * s).collect();
        let b = b.as_slice();
        let x = match &self.backend {
            Backend::Direct(lu) => {
                let mut x = self.lu_solve(lu, b);
                // iterative refinement guards against pivot growth
                for _ in 0..3 {
                    if relative_residual(&self.scaled, &x, b) <= 0.1 * SOLVER_TOLERANCE {
                        break;
                    }
                    let ax = matvec(&self.scaled, &x);
                    let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
                    let dx = self.lu_solve(lu, &r);
                    x.iter_mut().zip(&dx).for_each(|(a, d)| *a += d);
                }
                x
            }
            Backend::Gmres { restart, max_iterations, precond } => {
                gmres(&self.scaled, b, precond, *restart, *max_iterations, 0.1 * SOLVER_TOLERANCE)
            }
        };
        let res = relative_residual(&self.scaled, &x, b);
        if !(res <= SOLVER_TOLERANCE) {
            return Err(Error::ResidualTooLarge { residual: res, tolerance: SOLVER_TOLERANCE });
        }
        Ok(x.iter().zip(&self.scale).map(|(v, s)| v * s).collect())
    }

    fn lu_solve(&self, lu: &faer::sparse::linalg::solvers::Lu<usize, f64>, b: &[f64]) -> Vec<f64> {
        let mut rhs = Mat::<f64>::from_fn(b.len(), 1, |i, _| b[i]);
        lu.solve_in_place(rhs.as_mut());
        (0..b.len()).map(|i| rhs[(i, 0)]).collect()
    }
}

/// Right-preconditioned restarted GMRES.
fn gmres(a: &SparseMatrix, b: &[f64], m: &BlockJacobi, restart: usize, max_iter: usize, tol: f64) -> Vec<f64> {
    let n = b.len();
    let restart = restart.max(1);
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    let mut iters = 0;
    while iters < max_iter {
        let ax = matvec(a, &x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let beta = norm(&r);
        if beta <= tol * bnorm {
            break;
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|e| e / beta).collect()];
        let mut h = DMatrix::<f64>::zeros(restart + 1, restart);
        let (mut cs, mut sn) = (vec![0.0; restart], vec![0.0; restart]);
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut used = 0;
        for j in 0..restart {
            iters += 1;
            let z = m.apply(&v[j]);
            let mut w = matvec(a, &z);
            for i in 0..=j {
                let hij: f64 = w.iter().zip(&v[i]).map(|(p, q)| p * q).sum();
                h[(i, j)] = hij;
                w.iter_mut().zip(&v[i]).for_each(|(p, q)| *p -= hij * q);
            }
            let wn = norm(&w);
            h[(j + 1, j)] = wn;
            for i in 0..j {
                let t = cs[i] * h[(i, j)] + sn[i] * h[(i + 1, j)];
                h[(i + 1, j)] = -sn[i] * h[(i, j)] + cs[i] * h[(i + 1, j)];
                h[(i, j)] = t;
            }
            let d = h[(j, j)].hypot(h[(j + 1, j)]);
            cs[j] = h[(j, j)] / d;
            sn[j] = h[(j + 1, j)] / d;
            h[(j, j)] = d;
            h[(j + 1, j)] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            used = j + 1;
            if g[j + 1].abs() <= tol * bnorm || wn == 0.0 || iters >= max_iter {
                break;
            }
            v.push(w.iter().map(|e| e / wn).collect());
        }
        let mut y = vec![0.0; used];
        for i in (0..used).rev() {
            let s: f64 = (i + 1..used).map(|l| h[(i, l)] * y[l]).sum();
            y[i] = (g[i] - s) / h[(i, i)];
        }
        let mut dz = vec![0.0; n];
        for (yi, vi) in y.iter().zip(&v) {
            dz.iter_mut().zip(vi).for_each(|(p, q)| *p += yi * q);
        }
        let dx = m.apply(&dz);
        x.iter_mut().zip(&dx).for_each(|(p, q)| *p += q);
    }
    x
}
