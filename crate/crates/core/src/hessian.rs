//! Exact evaluation of the k-Hessian operators on symmetric matrices.
//!
//! `sigma_k` is the k-th elementary symmetric polynomial of the eigenvalues,
//! computed here as the sum of the k x k principal minors. The eigenvalue
//! route ([`eigenvalues`] followed by [`elementary_symmetric`]) is kept as an
//! independent cross-check.

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest supported dimension.
pub const MAX_DIM: usize = 8;
/// Absolute slack used by the closed-cone test.
pub const TOL_CONE: f64 = 1e-12;
/// Below this value of sigma_2 the square-root linearization is degenerate.
pub const TOL_ELL: f64 = 1e-10;

/// Dense symmetric matrix stored as its packed upper triangle (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    n: usize,
    upper: Vec<f64>,
}

#[inline]
fn packed_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

impl SymmetricMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&n), "dimension {n} out of range 1..={MAX_DIM}");
        SymmetricMatrix { n, upper: vec![0.0; n * (n + 1) / 2] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, alpha: f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, alpha);
        }
        m
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Builds a matrix from `f(i, j)` evaluated on the upper triangle only.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Reads the upper triangle of a square row-major array.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if !(1..=MAX_DIM).contains(&n) || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Argument(format!("expected a square matrix of size 1..={MAX_DIM}")));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Argument("matrix entries must be finite".into()));
        }
        Ok(Self::from_fn(n, |i, j| rows[i][j]))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.upper[packed_index(self.n, i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(v.is_finite(), "non-finite matrix entry");
        let k = packed_index(self.n, i, j);
        self.upper[k] = v;
    }

    /// Packed upper triangle, row-major.
    pub fn packed(&self) -> &[f64] {
        &self.upper
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j)).collect()).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// `trace(self * other)`, the Frobenius pairing of two symmetric matrices.
    pub fn dot(&self, other: &SymmetricMatrix) -> f64 {
        assert_eq!(self.n, other.n);
        let mut s = 0.0;
        for i in 0..self.n {
            s += self.get(i, i) * other.get(i, i);
            for j in i + 1..self.n {
                s += 2.0 * self.get(i, j) * other.get(i, j);
            }
        }
        s
    }

    pub fn scale(&self, alpha: f64) -> Self {
        SymmetricMatrix { n: self.n, upper: self.upper.iter().map(|v| v * alpha).collect() }
    }

    pub fn add(&self, other: &SymmetricMatrix) -> Self {
        assert_eq!(self.n, other.n);
        SymmetricMatrix {
            n: self.n,
            upper: self.upper.iter().zip(&other.upper).map(|(a, b)| a + b).collect(),
        }
    }

    /// `self + tau * I`.
    pub fn shifted(&self, tau: f64) -> Self {
        let mut m = self.clone();
        for i in 0..self.n {
            m.set(i, i, self.get(i, i) + tau);
        }
        m
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum()).collect()
    }

    /// `x^T M x`.
    pub fn quadratic(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Product `M * N` of two symmetric matrices, which is symmetric only when they commute;
    /// callers use it for polynomials in a single matrix.
    fn mul_same(&self, other: &SymmetricMatrix) -> Self {
        Self::from_fn(self.n, |i, j| (0..self.n).map(|l| self.get(i, l) * other.get(l, j)).sum())
    }

    /// `R^T M R` for an orthogonal (or arbitrary) square `r` given by rows.
    pub fn congruence(&self, r: &[Vec<f64>]) -> Self {
        let n = self.n;
        Self::from_fn(n, |i, j| {
            let mut s = 0.0;
            for a in 0..n {
                for b in 0..n {
                    s += r[a][i] * self.get(a, b) * r[b][j];
                }
            }
            s
        })
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> f64 {
        let s = eigenvalues(self);
        s.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.upper.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

impl Serialize for SymmetricMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymmetricMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        SymmetricMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Eigenvalues sorted in descending order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub values: Vec<f64>,
}

impl Spectrum {
    pub fn sigma(&self, k: usize) -> f64 {
        elementary_symmetric(&self.values, k)
    }
}

/// Result of a Garding-cone membership test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeReport {
    pub k: usize,
    /// `sigma_1(M), ..., sigma_k(M)`.
    pub sigmas: Vec<f64>,
    pub in_open_cone: bool,
    pub in_closure: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeMode {
    Open,
    Closed,
}

impl ConeReport {
    pub fn holds(&self, mode: ConeMode) -> bool {
        match mode {
            ConeMode::Open => self.in_open_cone,
            ConeMode::Closed => self.in_closure,
        }
    }
}

/// Affine map `N -> trace(A N) + c` on symmetric matrices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearOperator {
    pub coefficient_matrix: SymmetricMatrix,
    pub offset: f64,
}

impl LinearOperator {
    pub fn apply(&self, m: &SymmetricMatrix) -> f64 {
        self.coefficient_matrix.dot(m) + self.offset
    }
}

fn check_order(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::Argument(format!("order k = {k} must lie in 1..={n}")));
    }
    Ok(())
}

/// Determinant of the principal submatrix selected by `mask`, by Gaussian
/// elimination with partial pivoting.
fn principal_minor(m: &SymmetricMatrix, mask: u32) -> f64 {
    let idx: Vec<usize> = (0..m.n).filter(|i| mask & (1 << i) != 0).collect();
    let k = idx.len();
    let mut a = [0.0_f64; MAX_DIM * MAX_DIM];
    for (r, &i) in idx.iter().enumerate() {
        for (c, &j) in idx.iter().enumerate() {
            a[r * k + c] = m.get(i, j);
        }
    }
    let mut det = 1.0;
    for col in 0..k {
        let mut piv = col;
        for r in col + 1..k {
            if a[r * k + col].abs() > a[piv * k + col].abs() {
                piv = r;
            }
        }
        if a[piv * k + col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            for c in 0..k {
                a.swap(piv * k + c, col * k + c);
            }
            det = -det;
        }
        let p = a[col * k + col];
        det *= p;
        for r in col + 1..k {
            let f = a[r * k + col] / p;
            if f != 0.0 {
                for c in col..k {
                    a[r * k + c] -= f * a[col * k + c];
                }
            }
        }
    }
    det
}

fn sigma_unchecked(m: &SymmetricMatrix, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    match k {
        1 => m.trace(),
        _ => (0u32..(1 << m.n))
            .filter(|mask| mask.count_ones() as usize == k)
            .map(|mask| principal_minor(m, mask))
            .sum(),
    }
}

/// `sigma_k(M)`: the sum of all k x k principal minors.
pub fn sigma_k(m: &SymmetricMatrix, k: usize) -> Result<f64> {
    check_order(m.n, k)?;
    Ok(sigma_unchecked(m, k))
}

/// `e_k(values)` by the product expansion of `prod(1 + t * lambda_i)`.
pub fn elementary_symmetric(values: &[f64], k: usize) -> f64 {
    if k > values.len() {
        return 0.0;
    }
    let mut e = vec![0.0; k + 1];
    e[0] = 1.0;
    for &l in values {
        for j in (1..=k).rev() {
            e[j] += l * e[j - 1];
        }
    }
    e[k]
}

/// Gradient `d sigma_k / dM`, so that `d sigma_k = trace(G dM)` for symmetric `dM`.
///
/// Computed as the Newton tensor `T_{k-1}` through `T_0 = I`,
/// `T_m = sigma_m I - M T_{m-1}`.
pub fn sigma_k_gradient(m: &SymmetricMatrix, k: usize) -> Result<SymmetricMatrix> {
    check_order(m.n, k)?;
    let mut t = SymmetricMatrix::identity(m.n);
    for order in 1..k {
        let mt = m.mul_same(&t);
        t = SymmetricMatrix::scaled_identity(m.n, sigma_unchecked(m, order)).add(&mt.scale(-1.0));
    }
    Ok(t)
}

/// Membership of `M` in the Garding cone of order `k` and in its closure.
///
/// The closure is tested through `sigma_l(M) >= -TOL_CONE` for `l = 1..k`.
pub fn cone_membership(m: &SymmetricMatrix, k: usize) -> Result<ConeReport> {
    check_order(m.n, k)?;
    let sigmas: Vec<f64> = (1..=k).map(|l| sigma_unchecked(m, l)).collect();
    Ok(ConeReport {
        k,
        in_open_cone: sigmas.iter().all(|&s| s > 0.0),
        in_closure: sigmas.iter().all(|&s| s >= -TOL_CONE),
        sigmas,
    })
}

/// Shorthand for `cone_membership(m, k)?.holds(mode)`.
pub fn in_cone(m: &SymmetricMatrix, k: usize, mode: ConeMode) -> Result<bool> {
    Ok(cone_membership(m, k)?.holds(mode))
}

pub fn eigenvalues(m: &SymmetricMatrix) -> Spectrum {
    let eig = m.to_dmatrix().symmetric_eigen();
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Spectrum { values }
}

/// Eigen-decomposition with eigenvectors as the columns of the returned rows,
/// sorted by descending eigenvalue.
pub fn eigen_decomposition(m: &SymmetricMatrix) -> (Vec<f64>, Vec<Vec<f64>>) {
    let eig = m.to_dmatrix().symmetric_eigen();
    let n = m.n;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order.iter().map(|&i| eig.eigenvectors.column(i).iter().copied().collect()).collect();
    (values, vectors)
}

/// Tangent affine map of `F(N) = sigma_2(N)^{1/2}` at `M`.
///
/// `F` is concave on the open cone, so the returned map majorizes `F` there.
pub fn support_linearization(m: &SymmetricMatrix) -> Result<LinearOperator> {
    if m.n < 2 {
        return Err(Error::Argument("support_linearization needs n >= 2".into()));
    }
    let report = cone_membership(m, 2)?;
    if !report.in_open_cone || report.sigmas[1] <= TOL_ELL {
        return Err(Error::ConeExit(report));
    }
    let f = report.sigmas[1].sqrt();
    let grad = sigma_k_gradient(m, 2)?.scale(0.5 / f);
    let offset = f - grad.dot(m);
    Ok(LinearOperator { coefficient_matrix: grad, offset })
}
