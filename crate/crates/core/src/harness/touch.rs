//! Finite versions of the viscosity definition: check whether a `k`-convex
//! quadratic touches a grid function at a node and compare `sigma_k` of its
//! Hessian with `f` there.

use serde::{Deserialize, Serialize};

use crate::barrier::QuadraticForm;
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::hessian::{cone_membership, sigma_k, ConeMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TouchSense {
    Above,
    Below,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TouchOutcome {
    /// The test function is not `k`-convex; the definition says nothing.
    Inapplicable,
    NotTouching,
    Consistent,
    Violated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TouchReport {
    pub outcome: TouchOutcome,
    pub node: usize,
    pub sense: TouchSense,
    pub sigma_k: f64,
    pub f: f64,
    /// `phi - u` at the node.
    pub gap: f64,
    /// Smallest signed separation (`phi - u` above, `u - phi` below) over the neighbourhood.
    pub separation: f64,
    pub neighbours: usize,
}

/// Tolerance `1e-9 * osc(u)`.
pub fn tol_touch(u: &GridFunction) -> f64 {
    1e-9 * u.osc().max(f64::MIN_POSITIVE)
}

/// Tests `phi` against `u` at `node` over the nodes within `radius`.
pub fn viscosity_touch_test(
    u: &GridFunction,
    phi: &QuadraticForm,
    node: usize,
    sense: TouchSense,
    k: usize,
    f: f64,
    radius: f64,
) -> Result<TouchReport> {
    if phi.dim() != u.dim() {
        return Err(Error::Argument("test function and grid dimension differ".into()));
    }
    if !u.in_domain(node) {
        return Err(Error::Argument(format!("node {node} is outside the domain")));
    }
    let s = sigma_k(phi.hessian(), k)?;
    let x0 = u.point(node);
    let gap = phi.eval(&x0) - u.value(node);
    let sign = if sense == TouchSense::Above { 1.0 } else { -1.0 };
    let mut separation = f64::INFINITY;
    let mut neighbours = 0;
    for i in u.domain_nodes() {
        let x = u.point(i);
        let d = x.iter().zip(&x0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if i == node || d > radius * (1.0 + 1e-12) {
            continue;
        }
        neighbours += 1;
        separation = separation.min(sign * (phi.eval(&x) - u.value(i)));
    }
    let tol = tol_touch(u);
    let outcome = if !cone_membership(phi.hessian(), k)?.holds(ConeMode::Closed) {
        TouchOutcome::Inapplicable
    } else if gap.abs() > tol || separation < -tol {
        TouchOutcome::NotTouching
    } else {
        let holds = match sense {
            TouchSense::Above => s >= f,
            TouchSense::Below => s <= f,
        };
        if holds {
            TouchOutcome::Consistent
        } else {
            TouchOutcome::Violated
        }
    };
    Ok(TouchReport { outcome, node, sense, sigma_k: s, f, gap, separation, neighbours })
}

/// Nodes at least `radius` inside the domain at which the translate `x -> shape(x - x0) + c`
/// touches `u` from above for some vertical shift `c`, checked over the nodes within `radius`.
pub fn touching_placements(u: &GridFunction, shape: &QuadraticForm, radius: f64) -> Vec<usize> {
    let tol = tol_touch(u);
    let zero = vec![0.0; u.dim()];
    let s0 = shape.eval(&zero);
    u.domain_nodes()
        .filter(|&node| u.domain().depth(&u.point(node)) >= radius)
        .filter(|&node| {
            let x0 = u.point(node);
            let lift = u.value(node) - s0;
            u.domain_nodes().all(|i| {
                let x = u.point(i);
                let y: Vec<f64> = x.iter().zip(&x0).map(|(a, b)| a - b).collect();
                y.iter().map(|v| v * v).sum::<f64>().sqrt() > radius * (1.0 + 1e-12)
                    || shape.eval(&y) + lift - u.value(i) >= -tol
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barrier::make_cylinder_barrier;
    use crate::grid::{Domain, Grid};
    use crate::hessian::SymmetricMatrix;

    #[test]
    fn psd_perturbation_of_solution_is_consistent() {
        let alpha = 1.0 / 3f64.sqrt();
        let g = Grid::new(3, 8, 1.0).unwrap();
        let u = GridFunction::sample(g, Domain::Box { half_width: 1.0 }, |x| 0.5 * alpha * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]));
        let node = u.grid().nearest(&[0.25, 0.0, -0.25]);
        let x0 = u.point(node);
        // u + eps |x - x0|^2
        let eps = 0.1;
        let a = SymmetricMatrix::scaled_identity(3, alpha + 2.0 * eps);
        let b: Vec<f64> = x0.iter().map(|v| -2.0 * eps * v).collect();
        let c = eps * x0.iter().map(|v| v * v).sum::<f64>();
        let phi = QuadraticForm::new(a, b, c);
        let r = viscosity_touch_test(&u, &phi, node, TouchSense::Above, 2, 1.0, 0.5).unwrap();
        assert_eq!(r.outcome, TouchOutcome::Consistent);
        assert!(r.sigma_k > 1.0);
    }

    #[test]
    fn non_convex_test_function_is_inapplicable() {
        let g = Grid::new(2, 8, 1.0).unwrap();
        let u = GridFunction::sample(g, Domain::Box { half_width: 1.0 }, |x| x[0] * x[0]);
        let phi = QuadraticForm::new(SymmetricMatrix::diagonal(&[-1.0, -1.0]), vec![0.0; 2], 0.0);
        let r = viscosity_touch_test(&u, &phi, 0, TouchSense::Above, 1, 1.0, 0.5).unwrap();
        assert_eq!(r.outcome, TouchOutcome::Inapplicable);
    }

    #[test]
    fn flat_barrier_never_touches_sharp_example() {
        let g = Grid::new(3, 8, 1.0).unwrap();
        let u = GridFunction::sample(g, Domain::Box { half_width: 1.0 }, |x| x[0] * x[0] + x[1] * x[1]);
        let p = make_cylinder_barrier(0.1, 1.0, 3).unwrap();
        assert!(touching_placements(&u, &p, 0.3).is_empty());
    }
}
