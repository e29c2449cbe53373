//! Sparse linear solves for the per-sweep elliptic problems.
//!
//! Small systems go through a sparse LU factorization. Above
//! [`DIRECT_LIMIT`] unknowns (3-D grids beyond roughly 24^3) fill-in makes the
//! factorization impractical, so BiCGSTAB preconditioned with ILU(0) is used,
//! stopped on the max-norm of the true residual.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};

pub const DIRECT_LIMIT: usize = 12_000;

/// Compressed sparse row matrix with sorted column indices per row.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row entry lists; duplicate columns are summed.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (c, v) in row {
                if cols.len() > *row_ptr.last().unwrap() && *cols.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix { n, row_ptr, cols, vals }
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[p] * x[self.cols[p]];
            }
            y[i] = s;
        }
    }

    fn residual(&self, x: &[f64], b: &[f64], r: &mut [f64]) {
        self.mul_vec(x, r);
        for i in 0..self.n {
            r[i] = b[i] - r[i];
        }
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b`, starting from `x` when the iterative path is taken.
/// Returns the max-norm of the final residual.
pub fn solve(a: &CsrMatrix, b: &[f64], x: &mut [f64], tol: f64) -> Result<f64> {
    if a.n <= DIRECT_LIMIT {
        solve_direct(a, b, x)?;
        let mut r = vec![0.0; a.n];
        a.residual(x, b, &mut r);
        Ok(max_abs(&r))
    } else {
        bicgstab(a, b, x, tol, 20 * a.n.max(500))
    }
}

pub fn solve_direct(a: &CsrMatrix, b: &[f64], x: &mut [f64]) -> Result<()> {
    let mut trip = Vec::with_capacity(a.vals.len());
    for i in 0..a.n {
        for p in a.row_ptr[i]..a.row_ptr[i + 1] {
            trip.push(Triplet::new(i, a.cols[p], a.vals[p]));
        }
    }
    let m = SparseColMat::<usize, f64>::try_new_from_triplets(a.n, a.n, &trip)
        .map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
    let lu = m.sp_lu().map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
    let rhs = Col::<f64>::from_fn(a.n, |i| b[i]);
    let sol = lu.solve(&rhs);
    for i in 0..a.n {
        x[i] = sol[i];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::LinearSolve("singular system".into()));
    }
    Ok(())
}

/// Incomplete LU factors with the sparsity of `A`, stored in place.
struct Ilu0 {
    lu: CsrMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    fn new(a: &CsrMatrix) -> Result<Self> {
        let mut lu = a.clone();
        let n = a.n;
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            for p in lu.row_ptr[i]..lu.row_ptr[i + 1] {
                if lu.cols[p] == i {
                    diag[i] = p;
                }
            }
            if diag[i] == usize::MAX {
                return Err(Error::LinearSolve(format!("row {i} has no diagonal entry")));
            }
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (lo, hi) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for p in lo..hi {
                pos[lu.cols[p]] = p;
            }
            for p in lo..hi {
                let k = lu.cols[p];
                if k >= i {
                    break;
                }
                let pivot = lu.vals[diag[k]];
                if pivot == 0.0 {
                    return Err(Error::LinearSolve("zero pivot in ILU(0)".into()));
                }
                let factor = lu.vals[p] / pivot;
                lu.vals[p] = factor;
                for q in diag[k] + 1..lu.row_ptr[k + 1] {
                    let j = lu.cols[q];
                    if pos[j] != usize::MAX {
                        lu.vals[pos[j]] -= factor * lu.vals[q];
                    }
                }
            }
            for p in lo..hi {
                pos[lu.cols[p]] = usize::MAX;
            }
            if lu.vals[diag[i]] == 0.0 {
                return Err(Error::LinearSolve("zero pivot in ILU(0)".into()));
            }
        }
        Ok(Ilu0 { lu, diag })
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let lu = &self.lu;
        for i in 0..lu.n {
            let mut s = r[i];
            for p in lu.row_ptr[i]..self.diag[i] {
                s -= lu.vals[p] * z[lu.cols[p]];
            }
            z[i] = s;
        }
        for i in (0..lu.n).rev() {
            let mut s = z[i];
            for p in self.diag[i] + 1..lu.row_ptr[i + 1] {
                s -= lu.vals[p] * z[lu.cols[p]];
            }
            z[i] = s / lu.vals[self.diag[i]];
        }
    }
}

/// Right-preconditioned BiCGSTAB; stops when `max|b - A x| <= tol`.
pub fn bicgstab(a: &CsrMatrix, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<f64> {
    let n = a.n;
    let pre = Ilu0::new(a)?;
    let mut r = vec![0.0; n];
    a.residual(x, b, &mut r);
    let mut best = max_abs(&r);
    if best <= tol {
        return Ok(best);
    }
    let mut best_x = x.to_vec();
    let mut r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut p_hat = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut s_hat = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut stalled = 0;
    for it in 0..max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new.abs() < 1e-300 || omega == 0.0 {
            // breakdown: restart from the current residual
            a.residual(x, b, &mut r);
            r_hat.copy_from_slice(&r);
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            v.iter_mut().for_each(|e| *e = 0.0);
            p.iter_mut().for_each(|e| *e = 0.0);
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        pre.apply(&p, &mut p_hat);
        a.mul_vec(&p_hat, &mut v);
        let rv = dot(&r_hat, &v);
        if rv == 0.0 {
            omega = 0.0;
            continue;
        }
        alpha = rho / rv;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        pre.apply(&s, &mut s_hat);
        a.mul_vec(&s_hat, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] = s[i] - omega * t[i];
        }
        if it % 10 == 9 || max_abs(&r) <= tol {
            // guard against drift of the recursive residual
            a.residual(x, b, &mut r);
            let res = max_abs(&r);
            if res < best {
                best = res;
                best_x.copy_from_slice(x);
                stalled = 0;
            } else {
                stalled += 1;
            }
            if res <= tol {
                return Ok(res);
            }
            if stalled >= 30 {
                break;
            }
        }
    }
    x.copy_from_slice(&best_x);
    Ok(best)
}
