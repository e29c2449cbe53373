//! Finite-difference Dirichlet solver for `sigma_k(D^2 u) = f`, `k in {1, 2}`.
//!
//! For `k = 2` the equation is rewritten as `sigma_2(D^2 u)^{1/2} = f^{1/2}`,
//! whose left side is concave on the cone. Each sweep replaces it by its
//! tangent plane at the (cone-projected) discrete Hessian of the current
//! iterate and solves the resulting linear elliptic problem; the update is
//! damped by halving until the residual does not increase.

mod pipeline;
mod stencil;

use std::fmt;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

pub use pipeline::{approximation_pipeline, mollify_on_sphere, PipelineLevel};
pub use stencil::{discrete_hessian, has_full_stencil};
pub(crate) use stencil::Stencil;

use crate::error::{Error, Result};
use crate::grid::{Domain, Field, GridFunction};
use crate::hessian::{cone_membership, sigma_k, support_linearization, SymmetricMatrix, TOL_ELL};
use crate::linsolve::{self, CsrMatrix};

#[derive(Clone)]
pub struct DirichletProblem {
    pub dim: usize,
    pub order: usize,
    pub domain: Domain,
    pub rhs: Field,
    pub boundary: Field,
}

impl fmt::Debug for DirichletProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DirichletProblem")
            .field("dim", &self.dim)
            .field("order", &self.order)
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

impl DirichletProblem {
    pub fn new(dim: usize, order: usize, domain: Domain, rhs: Field, boundary: Field) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::Argument(format!("the solver supports n in {{2, 3}}, got {dim}")));
        }
        if !(1..=2).contains(&order) {
            return Err(Error::Argument(format!("the solver supports k in {{1, 2}}, got {order}")));
        }
        if !(domain.extent() > 0.0) {
            return Err(Error::Argument("domain size must be positive".into()));
        }
        Ok(DirichletProblem { dim, order, domain, rhs, boundary })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveOptions {
    pub max_iterations: usize,
    /// Stop once the sup-norm of the accepted update falls below this.
    pub update_tolerance: f64,
    /// Stop once the sup-norm residual falls below this.
    pub residual_tolerance: f64,
    /// Damping factors `0.5^m` are tried for `m = 0..=max_halvings`.
    pub max_halvings: u32,
    /// Max-norm target for the linear sub-solves.
    pub linear_tolerance: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iterations: 200,
            update_tolerance: 1e-9,
            residual_tolerance: 1e-11,
            max_halvings: 6,
            linear_tolerance: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// `sup |sigma_k(D^2_h u) - f|`, recomputed on the returned iterate.
    pub residual: f64,
    /// Residual before the first sweep and after each accepted sweep.
    pub residual_history: Vec<f64>,
    /// Damping exponent `m` of each accepted sweep.
    pub damping_history: Vec<u32>,
    /// Node visits where the discrete Hessian had to be shifted into the cone.
    pub cone_violations: usize,
    pub unknowns: usize,
    pub converged: bool,
    #[serde(skip)]
    pub elapsed: Duration,
}

/// Shifts `M` by the smallest `tau >= 0` (to 1e-12, by bisection) such that
/// `sigma_1(M + tau I) > 0` and `sigma_2(M + tau I) >= TOL_ELL`.
pub fn project_to_cone(m: &SymmetricMatrix) -> SymmetricMatrix {
    project_with_shift(m).0
}

fn admissible(m: &SymmetricMatrix) -> bool {
    let r = cone_membership(m, 2).expect("n >= 2");
    r.sigmas[0] > 0.0 && r.sigmas[1] >= TOL_ELL
}

pub(crate) fn project_with_shift(m: &SymmetricMatrix) -> (SymmetricMatrix, f64) {
    if admissible(m) {
        return (m.clone(), 0.0);
    }
    let mut hi = 1e-6_f64.max(m.max_abs());
    while !admissible(&m.shifted(hi)) {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if admissible(&m.shifted(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (m.shifted(hi), hi)
}

struct Workspace {
    stencil: Stencil,
    rhs: Vec<f64>,
    order: usize,
}

impl Workspace {
    fn residual(&self, u: &[f64]) -> f64 {
        (0..self.stencil.unknowns())
            .into_par_iter()
            .map(|k| {
                let h = self.stencil.hessian(k, u);
                (sigma_k(&h, self.order).expect("order checked") - self.rhs[k]).abs()
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Solves `trace(A_k D^2 v) = target_k` at every unknown.
    fn linear_solve(&self, coeffs: &[SymmetricMatrix], target: &[f64], v: &mut [f64], tol: f64) -> Result<f64> {
        let rows: Vec<(Vec<(usize, f64)>, f64)> =
            (0..self.stencil.unknowns()).into_par_iter().map(|k| self.stencil.row(k, &coeffs[k])).collect();
        let mut b = Vec::with_capacity(rows.len());
        let mut entries = Vec::with_capacity(rows.len());
        for (k, (row, known)) in rows.into_iter().enumerate() {
            b.push(target[k] - known);
            entries.push(row);
        }
        let a = CsrMatrix::from_rows(entries);
        linsolve::solve(&a, &b, v, tol)
    }
}

/// Solves the Dirichlet problem on a grid with `resolution` cells per axis.
pub fn solve_dirichlet(
    problem: &DirichletProblem,
    resolution: usize,
    options: &SolveOptions,
) -> Result<(GridFunction, SolveReport)> {
    let start = Instant::now();
    if resolution < 8 {
        return Err(Error::Argument(format!("resolution must be at least 8, got {resolution}")));
    }
    let grid = GridFunction::grid_for(problem.dim, resolution, &problem.domain)?;
    let stencil = Stencil::build(grid, problem.domain, &problem.boundary)?;
    let rhs: Vec<f64> = stencil.nodes.iter().map(|s| (problem.rhs)(&grid.point(s.node))).collect();
    if let Some(k) = rhs.iter().position(|f| !f.is_finite()) {
        return Err(Error::Argument(format!("right-hand side is not finite at node {}", stencil.nodes[k].node)));
    }
    if problem.order == 2 {
        if let Some(k) = rhs.iter().position(|&f| f <= 0.0) {
            return Err(Error::Argument(format!(
                "sigma_2 needs f > 0, got f = {} at node {}",
                rhs[k], stencil.nodes[k].node
            )));
        }
    }
    let n = problem.dim;
    let ws = Workspace { stencil, rhs, order: problem.order };
    let unknowns = ws.stencil.unknowns();
    let identity = vec![SymmetricMatrix::identity(n); unknowns];
    let mut u = vec![0.0; unknowns];

    // k = 1 is a single Poisson solve; for k = 2 the Poisson problem whose
    // solution would have Hessian (c/n) I with sigma_2 = f seeds the iteration.
    let pairs = (n * (n - 1) / 2) as f64;
    let seed_rhs: Vec<f64> = match problem.order {
        1 => ws.rhs.clone(),
        _ => ws.rhs.iter().map(|f| n as f64 * (f / pairs).sqrt()).collect(),
    };
    ws.linear_solve(&identity, &seed_rhs, &mut u, options.linear_tolerance)?;

    let mut report = SolveReport {
        iterations: 0,
        residual: ws.residual(&u),
        residual_history: Vec::new(),
        damping_history: Vec::new(),
        cone_violations: 0,
        unknowns,
        converged: problem.order == 1,
        elapsed: Duration::ZERO,
    };
    report.residual_history.push(report.residual);

    if problem.order == 2 {
        let sqrt_f: Vec<f64> = ws.rhs.iter().map(|f| f.sqrt()).collect();
        let mut residual = report.residual;
        while report.iterations < options.max_iterations {
            if residual <= options.residual_tolerance {
                report.converged = true;
                break;
            }
            let projected: Vec<(SymmetricMatrix, f64)> =
                ws.stencil.hessians(&u).par_iter().map(project_with_shift).collect();
            report.cone_violations += projected.iter().filter(|p| p.1 > 0.0).count();
            let mut coeffs = Vec::with_capacity(unknowns);
            let mut target = Vec::with_capacity(unknowns);
            for (k, (m, _)) in projected.iter().enumerate() {
                let op = support_linearization(m)?;
                target.push(sqrt_f[k] - op.offset);
                coeffs.push(op.coefficient_matrix);
            }
            let mut v = u.clone();
            ws.linear_solve(&coeffs, &target, &mut v, options.linear_tolerance)?;

            let mut accepted = None;
            for m in 0..=options.max_halvings {
                let theta = 0.5f64.powi(m as i32);
                let cand: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + theta * (b - a)).collect();
                let r = ws.residual(&cand);
                if r <= residual {
                    accepted = Some((m, theta, cand, r));
                    break;
                }
            }
            let Some((m, theta, cand, r)) = accepted else {
                // No damped step improves on the current iterate: a floating-point
                // floor when the residual is already tiny, a failure otherwise.
                report.converged = residual <= 1e3 * options.residual_tolerance;
                break;
            };
            let update = u.iter().zip(&v).map(|(a, b)| (theta * (b - a)).abs()).fold(0.0, f64::max);
            u = cand;
            residual = r;
            report.iterations += 1;
            report.residual_history.push(r);
            report.damping_history.push(m);
            if update < options.update_tolerance {
                report.converged = true;
                break;
            }
        }
    }

    report.residual = ws.residual(&u);
    report.elapsed = start.elapsed();
    if !report.converged {
        return Err(Error::Convergence(Box::new(report)));
    }
    Ok((ws.stencil.to_grid_function(&u), report))
}

/// `sup |sigma_k(D^2_h u) - f|` of a grid function, using the solver's stencil.
pub fn residual(problem: &DirichletProblem, u: &GridFunction) -> Result<f64> {
    let stencil = Stencil::build(*u.grid(), problem.domain, &problem.boundary)?;
    let vals: Vec<f64> = stencil.nodes.iter().map(|s| u.value(s.node)).collect();
    let ws = Workspace {
        rhs: stencil.nodes.iter().map(|s| (problem.rhs)(&u.point(s.node))).collect(),
        stencil,
        order: problem.order,
    };
    Ok(ws.residual(&vals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{constant_field, field};

    #[test]
    fn projection_examples() {
        let m = SymmetricMatrix::scaled_identity(3, 1.0 / 3f64.sqrt());
        assert_eq!(project_to_cone(&m), m);

        let (p, tau) = project_with_shift(&SymmetricMatrix::zeros(3));
        let expect = (TOL_ELL / 3.0).sqrt();
        assert!((tau - expect).abs() < 2e-12, "{tau} vs {expect}");
        assert!(cone_membership(&p, 2).unwrap().in_open_cone);

        let (_, tau) = project_with_shift(&SymmetricMatrix::diagonal(&[1.0, -1.0]));
        // root of (1 + t)(t - 1) = TOL_ELL by an independent bisection
        let (mut lo, mut hi) = (0.0f64, 2.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (1.0 + mid) * (mid - 1.0) >= TOL_ELL {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!((tau - hi).abs() < 2e-12);
    }

    #[test]
    fn poisson_reproduces_linear_data() {
        let p = DirichletProblem::new(
            2,
            1,
            Domain::Box { half_width: 1.0 },
            constant_field(0.0),
            field(|x| 0.3 + 2.0 * x[0] - x[1]),
        )
        .unwrap();
        let (u, rep) = solve_dirichlet(&p, 16, &SolveOptions::default()).unwrap();
        for i in u.domain_nodes() {
            let x = u.point(i);
            assert!((u.value(i) - (0.3 + 2.0 * x[0] - x[1])).abs() < 1e-12);
        }
        assert!(rep.residual < 1e-10);
    }

    #[test]
    fn rejects_bad_input() {
        let bad_f = DirichletProblem::new(2, 2, Domain::Box { half_width: 1.0 }, constant_field(-1.0), constant_field(0.0)).unwrap();
        assert!(matches!(solve_dirichlet(&bad_f, 8, &SolveOptions::default()), Err(Error::Argument(_))));
        let p = DirichletProblem::new(2, 2, Domain::Box { half_width: 1.0 }, constant_field(1.0), constant_field(0.0)).unwrap();
        assert!(solve_dirichlet(&p, 4, &SolveOptions::default()).is_err());
        assert!(DirichletProblem::new(4, 2, Domain::Box { half_width: 1.0 }, constant_field(1.0), constant_field(0.0)).is_err());
        assert!(DirichletProblem::new(2, 3, Domain::Box { half_width: 1.0 }, constant_field(1.0), constant_field(0.0)).is_err());
    }

    #[test]
    fn non_convergence_carries_report() {
        let p = DirichletProblem::new(
            2,
            2,
            Domain::Box { half_width: 1.0 },
            field(|x| 1.0 + x[0] * x[0]),
            field(|x| x[0].powi(4) + x[1] * x[1]),
        )
        .unwrap();
        let opts = SolveOptions { max_iterations: 1, ..SolveOptions::default() };
        match solve_dirichlet(&p, 16, &opts) {
            Err(Error::Convergence(rep)) => assert_eq!(rep.iterations, 1),
            other => panic!("expected a convergence error, got {other:?}"),
        }
    }
}
