//! Supporting planes of grid functions.
//!
//! The slope is the point of the discrete subdifferential
//! `{p : u(x0) + p.(x - x0) <= u(x) + tol for every node x}` closest to the
//! central-difference gradient at `x0`. It is found with the dual active-set
//! method of Goldfarb and Idnani specialised to an identity Hessian; the
//! method also certifies infeasibility, which is how non-convexity is
//! detected.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::barrier::QuadraticForm;
use crate::error::{Error, Result};
use crate::grid::GridFunction;

/// `L(x) = value + slope.(x - base)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportingPlane {
    pub base_node: usize,
    pub base: Vec<f64>,
    pub value: f64,
    pub slope: Vec<f64>,
}

impl SupportingPlane {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.value + self.slope.iter().zip(x.iter().zip(&self.base)).map(|(p, (a, b))| p * (a - b)).sum::<f64>()
    }

    pub fn as_affine(&self) -> QuadraticForm {
        let c = self.value - self.slope.iter().zip(&self.base).map(|(p, b)| p * b).sum::<f64>();
        QuadraticForm::affine(self.slope.clone(), c)
    }
}

/// Support tolerance `1e-9 * osc(u)`.
pub fn tol_support(u: &GridFunction) -> f64 {
    1e-9 * u.osc().max(f64::MIN_POSITIVE)
}

/// Central (one-sided at the domain edge) difference gradient.
fn difference_gradient(u: &GridFunction, node: usize) -> Vec<f64> {
    let g = u.grid();
    let h = g.spacing;
    (0..g.dim)
        .map(|d| {
            let mut e = vec![0i64; g.dim];
            e[d] = 1;
            let plus = g.offset(node, &e).filter(|&i| u.in_domain(i));
            e[d] = -1;
            let minus = g.offset(node, &e).filter(|&i| u.in_domain(i));
            match (plus, minus) {
                (Some(p), Some(m)) => (u.value(p) - u.value(m)) / (2.0 * h),
                (Some(p), None) => (u.value(p) - u.value(node)) / h,
                (None, Some(m)) => (u.value(node) - u.value(m)) / h,
                (None, None) => 0.0,
            }
        })
        .collect()
}

/// Supporting plane of `u` at `node`.
pub fn supporting_plane(u: &GridFunction, node: usize) -> Result<SupportingPlane> {
    if !u.in_domain(node) {
        return Err(Error::Argument(format!("node {node} is outside the domain")));
    }
    let tol = tol_support(u);
    let x0 = u.point(node);
    let u0 = u.value(node);
    let nodes: Vec<usize> = u.domain_nodes().filter(|&i| i != node).collect();
    let offsets: Vec<Vec<f64>> =
        nodes.iter().map(|&i| u.point(i).iter().zip(&x0).map(|(a, b)| a - b).collect()).collect();
    let rises: Vec<f64> = nodes.iter().map(|&i| u.value(i) - u0).collect();
    let start = difference_gradient(u, node);
    let slope = closest_feasible_slope(&offsets, &rises, &start, tol).map_err(|k| Error::NonConvex {
        node: nodes[k.0],
        violation: k.1,
    })?;
    Ok(SupportingPlane { base_node: node, base: x0, value: u0, slope })
}

/// Minimises `|p - start|^2 / 2` subject to `a_k . p <= b_k + tol / 2`, where a constraint is
/// considered violated only beyond `tol`. On infeasibility returns the index of the blocking
/// constraint and its violation.
pub(crate) fn closest_feasible_slope(
    a: &[Vec<f64>],
    b: &[f64],
    start: &[f64],
    tol: f64,
) -> std::result::Result<Vec<f64>, (usize, f64)> {
    let n = start.len();
    let mut x = DVector::from_column_slice(start);
    let mut active: Vec<usize> = Vec::new();
    let mut mult: Vec<f64> = Vec::new();
    let row = |k: usize| DVector::from_column_slice(&a[k]);
    let slack = |x: &DVector<f64>, k: usize| row(k).dot(x) - b[k];

    for _ in 0..10 * a.len().max(10) {
        // most violated constraint
        let mut worst: Option<(usize, f64)> = None;
        for k in 0..a.len() {
            let s = slack(&x, k);
            if s > tol && worst.is_none_or(|w| s > w.1) {
                worst = Some((k, s));
            }
        }
        let Some((p, _)) = worst else {
            return Ok(x.iter().copied().collect());
        };
        let np = row(p);
        let target = b[p] + 0.5 * tol;
        let mut u_new = 0.0;
        loop {
            // z: projection of the new normal orthogonal to the active normals;
            // r: its coefficients along them
            let (z, r) = if active.is_empty() {
                (np.clone(), DVector::zeros(0))
            } else {
                let nm = DMatrix::from_fn(n, active.len(), |i, j| a[active[j]][i]);
                let gram = nm.transpose() * &nm;
                let r = gram.lu().solve(&(nm.transpose() * &np)).ok_or((p, slack(&x, p)))?;
                (&np - &nm * &r, r)
            };
            let mut t1 = f64::INFINITY;
            let mut drop = None;
            for (j, &rj) in r.iter().enumerate() {
                if rj > 0.0 && mult[j] / rj < t1 {
                    t1 = mult[j] / rj;
                    drop = Some(j);
                }
            }
            let zz = z.dot(&np);
            let t2 = if z.norm() > 1e-14 * np.norm() && zz > 0.0 {
                (np.dot(&x) - target) / zz
            } else {
                f64::INFINITY
            };
            let t = t1.min(t2);
            if !t.is_finite() {
                return Err((p, slack(&x, p)));
            }
            if t2.is_finite() {
                x -= &z * t;
            }
            for (j, m) in mult.iter_mut().enumerate() {
                *m -= t * r[j];
            }
            u_new += t;
            if t == t2 {
                active.push(p);
                mult.push(u_new);
                break;
            }
            let j = drop.expect("partial step has a blocking constraint");
            active.remove(j);
            mult.remove(j);
        }
    }
    let worst = (0..a.len()).max_by(|&i, &j| slack(&x, i).total_cmp(&slack(&x, j))).unwrap_or(0);
    Err((worst, slack(&x, worst)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Domain, Grid};

    fn cube(n: usize, cells: usize, f: impl Fn(&[f64]) -> f64) -> GridFunction {
        GridFunction::sample(Grid::new(n, cells, 1.0).unwrap(), Domain::Box { half_width: 1.0 }, f)
    }

    #[test]
    fn plane_of_sharp_example_is_flat() {
        let u = cube(3, 8, |x| x[0] * x[0] + x[1] * x[1]);
        let o = u.grid().nearest(&[0.0; 3]);
        let l = supporting_plane(&u, o).unwrap();
        assert!(l.slope.iter().all(|p| p.abs() < 1e-15));
    }

    #[test]
    fn plane_of_quadratic_is_its_tangent() {
        let q = |x: &[f64]| 0.6 * x[0] * x[0] + 0.2 * x[0] * x[1] + 0.4 * x[1] * x[1] + 0.3 * x[0];
        let u = cube(2, 16, q);
        let node = u.grid().nearest(&[0.25, -0.5]);
        let x = u.point(node);
        let l = supporting_plane(&u, node).unwrap();
        let grad = [1.2 * x[0] + 0.2 * x[1] + 0.3, 0.2 * x[0] + 0.8 * x[1]];
        for d in 0..2 {
            assert!((l.slope[d] - grad[d]).abs() < 1e-8);
        }
    }

    #[test]
    fn kink_gives_bounded_slope_with_zero_gap() {
        let u = cube(3, 8, |x| x[2].abs());
        let node = u.grid().nearest(&[0.25, 0.5, 0.0]);
        let l = supporting_plane(&u, node).unwrap();
        assert!(l.slope.iter().map(|p| p * p).sum::<f64>().sqrt() <= 1.0 + 1e-12);
        assert!((l.eval(&u.point(node)) - u.value(node)).abs() <= tol_support(&u));
    }

    #[test]
    fn projection_moves_an_infeasible_start() {
        // feasible slopes of max(x, 0) at 0 (on the grid -2..2) are [0, 1]; start at -3
        let a: Vec<Vec<f64>> = [-2.0, -1.0, 1.0, 2.0].iter().map(|&t| vec![t]).collect();
        let b = [0.0, 0.0, 1.0, 2.0];
        let p = closest_feasible_slope(&a, &b, &[-3.0], 1e-12).unwrap();
        assert!(p[0].abs() < 1e-12);
        let p = closest_feasible_slope(&a, &b, &[5.0], 1e-12).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn concave_function_is_rejected() {
        let u = cube(2, 8, |x| -(x[0] * x[0]) - x[1] * x[1]);
        let o = u.grid().nearest(&[0.0, 0.0]);
        assert!(matches!(supporting_plane(&u, o), Err(Error::NonConvex { .. })));
    }
}
