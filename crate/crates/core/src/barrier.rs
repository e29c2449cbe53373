//! Closed-form barrier functions with exact Hessians.
//!
//! Everything here is either a quadratic polynomial ([`QuadraticForm`]) or the
//! singular gallery candidate of [`pogorelov_gallery`], which is the reason the
//! k >= 3 theory differs from the quadratic case.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hessian::SymmetricMatrix;

/// `x -> x.A x / 2 + b.x + c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticForm {
    #[serde(rename = "A")]
    pub a: SymmetricMatrix,
    pub b: Vec<f64>,
    pub c: f64,
}

impl QuadraticForm {
    pub fn new(a: SymmetricMatrix, b: Vec<f64>, c: f64) -> Self {
        assert_eq!(a.dim(), b.len(), "gradient length must match the Hessian");
        QuadraticForm { a, b, c }
    }

    /// Affine function `p.x + c`, the degenerate case `A = 0`.
    pub fn affine(p: Vec<f64>, c: f64) -> Self {
        let n = p.len();
        Self::new(SymmetricMatrix::zeros(n), p, c)
    }

    /// `alpha |x|^2 / 2`.
    pub fn radial(n: usize, alpha: f64) -> Self {
        Self::new(SymmetricMatrix::scaled_identity(n, alpha), vec![0.0; n], 0.0)
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        0.5 * self.a.quadratic(x) + self.b.iter().zip(x).map(|(b, x)| b * x).sum::<f64>() + self.c
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.a.mul_vec(x).iter().zip(&self.b).map(|(a, b)| a + b).collect()
    }

    pub fn hessian(&self) -> &SymmetricMatrix {
        &self.a
    }

    pub fn plus_constant(&self, shift: f64) -> Self {
        QuadraticForm { c: self.c + shift, ..self.clone() }
    }

    /// Pointwise sum.
    pub fn add(&self, other: &QuadraticForm) -> Self {
        Self::new(
            self.a.add(&other.a),
            self.b.iter().zip(&other.b).map(|(a, b)| a + b).collect(),
            self.c + other.c,
        )
    }

    /// The form `x -> self(R (x - x0))` for a square `r` given by rows.
    pub fn compose_affine(&self, r: &[Vec<f64>], x0: &[f64]) -> Self {
        let n = self.dim();
        // y = R x - R x0 =: R x + s
        let s: Vec<f64> = (0..n).map(|i| -(0..n).map(|j| r[i][j] * x0[j]).sum::<f64>()).collect();
        let a = self.a.congruence(r);
        // gradient at x = 0 is R^T (A s + b)
        let inner: Vec<f64> = self.a.mul_vec(&s).iter().zip(&self.b).map(|(a, b)| a + b).collect();
        let b = (0..n).map(|j| (0..n).map(|i| r[i][j] * inner[i]).sum()).collect();
        QuadraticForm::new(a, b, self.eval(&s))
    }
}

/// `{|x'| < radius} x (0, height)` with axis along the last coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub radius: f64,
    pub height: f64,
}

impl Cylinder {
    pub fn new(radius: f64, height: f64) -> Result<Self> {
        if !(radius > 0.0 && height > 0.0) {
            return Err(Error::Argument(format!("cylinder needs positive radius and height, got {radius}, {height}")));
        }
        Ok(Cylinder { radius, height })
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        let (last, head) = y.split_last().expect("nonempty point");
        head.iter().map(|v| v * v).sum::<f64>() < self.radius * self.radius && *last > 0.0 && *last < self.height
    }

    /// Points on the lateral surface and both caps: `rings` heights, `spokes`
    /// directions in the cross-section and `shells` radii on each cap.
    pub fn boundary_samples(&self, n: usize, rings: usize, spokes: usize, shells: usize) -> Vec<Vec<f64>> {
        let dirs = sphere_directions(n - 1, spokes);
        let mut out = Vec::new();
        for r in 0..=rings {
            let t = self.height * r as f64 / rings as f64;
            for d in &dirs {
                let mut p: Vec<f64> = d.iter().map(|v| v * self.radius).collect();
                p.push(t);
                out.push(p);
            }
        }
        for cap in [0.0, self.height] {
            for s in 0..shells {
                let rho = self.radius * s as f64 / shells as f64;
                for d in &dirs {
                    let mut p: Vec<f64> = d.iter().map(|v| v * rho).collect();
                    p.push(cap);
                    out.push(p);
                }
                if s == 0 {
                    // the centre only once
                    out.truncate(out.len() + 1 - dirs.len());
                }
            }
        }
        out
    }
}

/// Roughly `count` unit vectors in `R^m` (m = 1, 2 or 3; one direction set for m > 3 is the
/// coordinate cross plus diagonals).
pub(crate) fn sphere_directions(m: usize, count: usize) -> Vec<Vec<f64>> {
    match m {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            // Fibonacci lattice
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let t = golden * i as f64;
                    vec![r * t.cos(), r * t.sin(), z]
                })
                .collect()
        }
        _ => {
            let mut out = Vec::new();
            for i in 0..m {
                for s in [1.0, -1.0] {
                    let mut v = vec![0.0; m];
                    v[i] = s;
                    out.push(v);
                }
                for j in i + 1..m {
                    for (a, b) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                        let mut v = vec![0.0; m];
                        v[i] = a / 2f64.sqrt();
                        v[j] = b / 2f64.sqrt();
                        out.push(v);
                    }
                }
            }
            out
        }
    }
}

fn check_heights(h: f64, big_h: f64, n: usize) -> Result<()> {
    if !(h > 0.0 && big_h > 0.0) {
        return Err(Error::Argument(format!("h and H must be positive, got h = {h}, H = {big_h}")));
    }
    if !(2..=crate::hessian::MAX_DIM).contains(&n) {
        return Err(Error::Argument(format!("dimension {n} out of range")));
    }
    Ok(())
}

/// `P(x) = h|x'|^2 + 4 h / H^2 (x_n - H/2)^2` on the unit-radius cylinder.
pub fn make_cylinder_barrier(h: f64, big_h: f64, n: usize) -> Result<QuadraticForm> {
    make_scaled_cylinder_barrier(h, &Cylinder::new(1.0, big_h)?, n)
}

/// Cylinder barrier for a cylinder of arbitrary radius:
/// `h |x'|^2 / radius^2 + 4 h / H^2 (x_n - H/2)^2`.
pub fn make_scaled_cylinder_barrier(h: f64, cyl: &Cylinder, n: usize) -> Result<QuadraticForm> {
    check_heights(h, cyl.height, n)?;
    let lateral = 2.0 * h / (cyl.radius * cyl.radius);
    let axial = 8.0 * h / (cyl.height * cyl.height);
    let mut d = vec![lateral; n];
    d[n - 1] = axial;
    let mut b = vec![0.0; n];
    b[n - 1] = -4.0 * h / cyl.height;
    Ok(QuadraticForm::new(SymmetricMatrix::diagonal(&d), b, h))
}

/// Closed form of `sigma_2` of the cylinder barrier's Hessian:
/// `2(n-1)(n-2) h^2 + 16(n-1) h^2 / H^2`.
pub fn barrier_sigma2_value(h: f64, big_h: f64, n: usize) -> Result<f64> {
    check_heights(h, big_h, n)?;
    let m = (n - 1) as f64;
    Ok(2.0 * m * (m - 1.0) * h * h + 16.0 * m * h * h / (big_h * big_h))
}

/// Radius-aware version of [`barrier_sigma2_value`].
pub fn scaled_barrier_sigma2(h: f64, cyl: &Cylinder, n: usize) -> f64 {
    let m = (n - 1) as f64;
    let r2 = cyl.radius * cyl.radius;
    2.0 * m * (m - 1.0) * h * h / (r2 * r2) + 16.0 * m * h * h / (r2 * cyl.height * cyl.height)
}

/// A sufficient smallness threshold: `sigma_2(D^2 P_h) < 1` whenever `h <= min(1, H) / (8n)`.
pub fn barrier_smallness_threshold(n: usize, big_h: f64) -> f64 {
    big_h.min(1.0) / (8.0 * n as f64)
}

fn wdelta_hessian(delta: f64, n: usize) -> Result<SymmetricMatrix> {
    if !(delta > 0.0) {
        return Err(Error::Argument(format!("delta must be positive, got {delta}")));
    }
    if !(3..=crate::hessian::MAX_DIM).contains(&n) {
        return Err(Error::Argument(format!("the (y, z) split needs 3 <= n <= 8, got {n}")));
    }
    let mut d = vec![-2.0 * delta; n];
    d[0] = 4.0 * delta * (n - 2) as f64;
    d[1] = d[0];
    Ok(SymmetricMatrix::diagonal(&d))
}

/// `w_delta(x) = delta [2(n-2)(x1^2 + x2^2) - (x3^2 + ... + xn^2)]`, 2-convex for every delta > 0.
pub fn make_wdelta(delta: f64, n: usize) -> Result<QuadraticForm> {
    Ok(QuadraticForm::new(wdelta_hessian(delta, n)?, vec![0.0; n], 0.0))
}

/// `w(x) = delta (2(n-2)|y|^2 - |z|^2 + 1/8)` with `x = (y, z)`, `y` in R^2.
pub fn make_wall_barrier(delta: f64, n: usize) -> Result<QuadraticForm> {
    Ok(QuadraticForm::new(wdelta_hessian(delta, n)?, vec![0.0; n], delta / 8.0))
}

/// Closed-form analytic functions with exact derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalyticFunction {
    Quadratic(QuadraticForm),
    /// `|x'|^(2 - 2/k) * (1 + curvature * |x''|^2)` where `x'` holds the first `k - 1`
    /// coordinates and `x''` the remaining `n - k + 1`.
    Pogorelov { k: usize, n: usize, curvature: f64 },
}

impl AnalyticFunction {
    pub fn dim(&self) -> usize {
        match self {
            AnalyticFunction::Quadratic(q) => q.dim(),
            AnalyticFunction::Pogorelov { n, .. } => *n,
        }
    }

    /// Exponent of the singular factor.
    pub fn exponent(&self) -> Option<f64> {
        match self {
            AnalyticFunction::Pogorelov { k, .. } => Some(2.0 - 2.0 / *k as f64),
            _ => None,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            AnalyticFunction::Quadratic(q) => q.eval(x),
            AnalyticFunction::Pogorelov { k, curvature, .. } => {
                let (head, tail) = x.split_at(k - 1);
                let rho = head.iter().map(|v| v * v).sum::<f64>().sqrt();
                let s2: f64 = tail.iter().map(|v| v * v).sum();
                rho.powf(2.0 - 2.0 / *k as f64) * (1.0 + curvature * s2)
            }
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            AnalyticFunction::Quadratic(q) => q.gradient(x),
            AnalyticFunction::Pogorelov { k, curvature, .. } => {
                let beta = 2.0 - 2.0 / *k as f64;
                let (head, tail) = x.split_at(k - 1);
                let rho = head.iter().map(|v| v * v).sum::<f64>().sqrt();
                let g = 1.0 + curvature * tail.iter().map(|v| v * v).sum::<f64>();
                let radial = beta * rho.powf(beta - 2.0) * g;
                head.iter()
                    .map(|xi| radial * xi)
                    .chain(tail.iter().map(|zi| rho.powf(beta) * 2.0 * curvature * zi))
                    .collect()
            }
        }
    }

    /// Exact Hessian; for the gallery candidate it is singular on `{x' = 0}`.
    pub fn hessian(&self, x: &[f64]) -> SymmetricMatrix {
        match self {
            AnalyticFunction::Quadratic(q) => q.a.clone(),
            AnalyticFunction::Pogorelov { k, n, curvature } => {
                let k = *k;
                let beta = 2.0 - 2.0 / k as f64;
                let (head, tail) = x.split_at(k - 1);
                let rho = head.iter().map(|v| v * v).sum::<f64>().sqrt();
                let g = 1.0 + curvature * tail.iter().map(|v| v * v).sum::<f64>();
                let p_b2 = rho.powf(beta - 2.0);
                let p_b4 = rho.powf(beta - 4.0);
                let p_b = rho.powf(beta);
                SymmetricMatrix::from_fn(*n, |i, j| match (i < k - 1, j < k - 1) {
                    (true, true) => {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        g * (beta * p_b2 * delta + beta * (beta - 2.0) * p_b4 * x[i] * x[j])
                    }
                    (true, false) => beta * p_b2 * x[i] * 2.0 * curvature * x[j],
                    (false, true) => beta * p_b2 * x[j] * 2.0 * curvature * x[i],
                    (false, false) => {
                        if i == j {
                            p_b * 2.0 * curvature
                        } else {
                            0.0
                        }
                    }
                })
            }
        }
    }

    /// Dimension of the zero set `{u = 0}` through the origin, when known in closed form.
    pub fn flat_dimension(&self) -> Option<usize> {
        match self {
            AnalyticFunction::Pogorelov { k, n, .. } => Some(n + 1 - k),
            _ => None,
        }
    }
}

/// Pogorelov-type candidate for `k >= 3`: convex near its flat set `{x' = 0}` of dimension
/// `n - k + 1`, with bounded `sigma_k` and unbounded Hessian there.
pub fn pogorelov_gallery(k: usize, n: usize, curvature: f64) -> Result<AnalyticFunction> {
    if k < 3 {
        return Err(Error::Argument(format!(
            "no Pogorelov-type example exists for k = {k}: flat sets of 2-convex solutions have dimension <= n - 2"
        )));
    }
    if n < k + 1 || n > crate::hessian::MAX_DIM {
        return Err(Error::Argument(format!("need k + 1 <= n <= 8, got k = {k}, n = {n}")));
    }
    if !(curvature > 0.0) {
        return Err(Error::Argument("profile curvature must be positive".into()));
    }
    Ok(AnalyticFunction::Pogorelov { k, n, curvature })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hessian::{cone_membership, sigma_k};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn cylinder_barrier_values() {
        let p = make_cylinder_barrier(0.1, 1.0, 3).unwrap();
        assert!(close(p.eval(&[0.0, 0.0, 0.5]), 0.0, 1e-15));
        assert!(close(p.eval(&[1.0, 0.0, 0.5]), 0.1, 1e-15));
        assert!(close(p.eval(&[0.0, 0.0, 0.0]), 0.1, 1e-15));
        assert!(close(p.eval(&[0.0, 0.0, 1.0]), 0.1, 1e-15));
        assert_eq!(p.hessian(), &SymmetricMatrix::diagonal(&[0.2, 0.2, 0.8]));
        assert!(make_cylinder_barrier(0.0, 1.0, 3).is_err());
        assert!(make_cylinder_barrier(0.1, -1.0, 3).is_err());
    }

    #[test]
    fn barrier_sigma2_examples() {
        let v = barrier_sigma2_value(0.1, 1.0, 3).unwrap();
        let oracle = sigma_k(&SymmetricMatrix::diagonal(&[0.2, 0.2, 0.8]), 2).unwrap();
        assert!(close(v, 0.36, 1e-14) && close(oracle, 0.36, 1e-14));
        let (h, big_h) = (0.3, 0.7);
        let v = barrier_sigma2_value(h, big_h, 2).unwrap();
        let oracle = sigma_k(&SymmetricMatrix::diagonal(&[2.0 * h, 8.0 * h / (big_h * big_h)]), 2).unwrap();
        assert!(close(v, 16.0 * h * h / (big_h * big_h), 1e-14) && close(v, oracle, 1e-14));
        assert!(barrier_sigma2_value(1e-6, 1.0, 5).unwrap() < 1e-9);
    }

    #[test]
    fn wdelta_examples() {
        let w = make_wdelta(1.0, 4).unwrap();
        assert!(close(sigma_k(w.hessian(), 1).unwrap(), 12.0, 1e-15));
        assert!(close(sigma_k(w.hessian(), 2).unwrap(), 4.0, 1e-14));
        let w3 = make_wdelta(1.0, 3).unwrap();
        let r = cone_membership(w3.hessian(), 2).unwrap();
        assert_eq!(r.sigmas[1], 0.0);
        assert!(r.in_closure && !r.in_open_cone);
        assert!(make_wdelta(1.0, 2).is_err());
        assert!(make_wdelta(0.0, 3).is_err());
    }

    #[test]
    fn wall_barrier_examples() {
        let w = make_wall_barrier(0.2, 3).unwrap();
        assert!(close(w.eval(&[0.0; 3]), 0.025, 1e-15));
        let v = w.eval(&[1.0 / 6.0, 0.0, 0.0]);
        assert!(close(v, 0.2 * (2.0 / 36.0 + 0.125), 1e-14), "{v}");
        assert_eq!(w.hessian(), make_wdelta(0.2, 3).unwrap().hessian());
    }

    #[test]
    fn compose_affine_matches_pointwise() {
        let q = make_cylinder_barrier(0.2, 0.5, 3).unwrap();
        let s = 0.5f64.sqrt();
        let r = vec![vec![s, s, 0.0], vec![-s, s, 0.0], vec![0.0, 0.0, 1.0]];
        let x0 = [0.1, -0.2, 0.3];
        let composed = q.compose_affine(&r, &x0);
        for x in [[0.0, 0.0, 0.0], [0.3, 0.1, -0.4], [1.0, 2.0, 3.0]] {
            let d: Vec<f64> = (0..3).map(|i| x[i] - x0[i]).collect();
            let y: Vec<f64> = (0..3).map(|i| (0..3).map(|j| r[i][j] * d[j]).sum()).collect();
            assert!(close(composed.eval(&x), q.eval(&y), 1e-13));
        }
    }

    #[test]
    fn gallery_rejects_k2() {
        assert!(pogorelov_gallery(2, 4, 1.0).is_err());
        assert!(pogorelov_gallery(3, 3, 1.0).is_err());
        let g = pogorelov_gallery(3, 4, 1.0).unwrap();
        assert_eq!(g.flat_dimension(), Some(2));
        assert!((g.exponent().unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(g.eval(&[0.0, 0.0, 0.3, 0.2]), 0.0);
    }

    #[test]
    fn boundary_samples_cover_caps_and_side() {
        let cyl = Cylinder::new(0.5, 0.25).unwrap();
        let pts = cyl.boundary_samples(3, 4, 16, 3);
        assert_eq!(pts.len(), 5 * 16 + 2 * (1 + 2 * 16));
        for p in &pts {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            let on_side = (r - 0.5).abs() < 1e-12;
            let on_cap = p[2].abs() < 1e-12 || (p[2] - 0.25).abs() < 1e-12;
            assert!(on_side || on_cap);
        }
    }
}
