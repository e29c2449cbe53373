//! Second-difference stencils.
//!
//! Every Hessian entry is assembled from second differences along the
//! directions `e_i` and `e_i +- e_j`:
//! `H_ii = D(e_i)` and `H_ij = (D(e_i + e_j) - D(e_i - e_j)) / 4`. On a ball,
//! an arm that leaves the domain is cut at the sphere and the three-point
//! non-uniform formula is used, which stays exact on quadratics.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Domain, Field, Grid, GridFunction, NodeKind};
use crate::hessian::SymmetricMatrix;

/// Integer direction offsets in the fixed order `e_0..e_{n-1}`, then
/// `(e_i + e_j, e_i - e_j)` for each `i < j`.
pub(crate) fn directions(n: usize) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    for i in 0..n {
        let mut v = vec![0; n];
        v[i] = 1;
        out.push(v);
    }
    for i in 0..n {
        for j in i + 1..n {
            let mut p = vec![0; n];
            p[i] = 1;
            p[j] = 1;
            let mut m = p.clone();
            m[j] = -1;
            out.push(p);
            out.push(m);
        }
    }
    out
}

/// Combines directional second differences (ordered as in [`directions`]) into a Hessian.
pub(crate) fn assemble_hessian(n: usize, d: &[f64]) -> SymmetricMatrix {
    let mut h = SymmetricMatrix::zeros(n);
    for i in 0..n {
        h.set(i, i, d[i]);
    }
    let mut k = n;
    for i in 0..n {
        for j in i + 1..n {
            h.set(i, j, 0.25 * (d[k] - d[k + 1]));
            k += 2;
        }
    }
    h
}

/// Weight of each directional difference in `trace(A H)`.
pub(crate) fn direction_weights(a: &SymmetricMatrix) -> Vec<f64> {
    let n = a.dim();
    let mut w: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    for i in 0..n {
        for j in i + 1..n {
            w.push(0.5 * a.get(i, j));
            w.push(-0.5 * a.get(i, j));
        }
    }
    w
}

/// Central-difference Hessian of a grid function at `node`.
///
/// Requires every neighbour `node +- e_i +- e_j` to be an in-domain grid node.
pub fn discrete_hessian(u: &GridFunction, node: usize) -> Result<SymmetricMatrix> {
    let g = u.grid();
    let n = g.dim;
    if !u.in_domain(node) {
        return Err(Error::BoundaryProximity { node });
    }
    let h2 = g.spacing * g.spacing;
    let u0 = u.value(node);
    let mut d = Vec::with_capacity(n * n);
    for v in directions(n) {
        let minus: Vec<i64> = v.iter().map(|x| -x).collect();
        let (p, m) = match (g.offset(node, &v), g.offset(node, &minus)) {
            (Some(p), Some(m)) if u.in_domain(p) && u.in_domain(m) => (p, m),
            _ => return Err(Error::BoundaryProximity { node }),
        };
        d.push((u.value(p) - 2.0 * u0 + u.value(m)) / h2);
    }
    Ok(assemble_hessian(n, &d))
}

/// Whether [`discrete_hessian`] is defined at `node`.
pub fn has_full_stencil(u: &GridFunction, node: usize) -> bool {
    let g = u.grid();
    u.in_domain(node)
        && directions(g.dim).iter().all(|v| {
            let minus: Vec<i64> = v.iter().map(|x| -x).collect();
            matches!((g.offset(node, v), g.offset(node, &minus)),
                (Some(p), Some(m)) if u.in_domain(p) && u.in_domain(m))
        })
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Arm {
    Unknown(usize),
    Known(f64),
}

/// `D = cp (u_plus - u0) + cm (u_minus - u0)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct DirDiff {
    pub plus: Arm,
    pub minus: Arm,
    pub cp: f64,
    pub cm: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct NodeStencil {
    pub node: usize,
    pub dirs: Vec<DirDiff>,
}

/// Cut-cell stencil of a Dirichlet problem: unknowns are the interior nodes.
#[derive(Debug, Clone)]
pub(crate) struct Stencil {
    pub grid: Grid,
    pub domain: Domain,
    pub kinds: Vec<NodeKind>,
    /// Grid index to unknown index (`usize::MAX` for non-unknowns).
    pub unknown_of: Vec<usize>,
    pub nodes: Vec<NodeStencil>,
    /// Boundary values at boundary nodes.
    pub boundary_values: Vec<f64>,
}

/// Distance parameter `s in (0, 1]` at which `x + s h v` meets the sphere of radius `r`.
fn sphere_cut(x: &[f64], v: &[i64], h: f64, r: f64) -> f64 {
    let vv: f64 = v.iter().map(|&c| (c * c) as f64).sum();
    let xv: f64 = x.iter().zip(v).map(|(a, &c)| a * c as f64).sum();
    let xx: f64 = x.iter().map(|a| a * a).sum();
    let a = h * h * vv;
    let b = 2.0 * h * xv;
    let c = xx - r * r;
    let s = (-b + (b * b - 4.0 * a * c).sqrt()) / (2.0 * a);
    s.clamp(1e-6, 1.0)
}

impl Stencil {
    pub fn build(grid: Grid, domain: Domain, boundary: &Field) -> Result<Self> {
        let n = grid.dim;
        let h = grid.spacing;
        let kinds: Vec<NodeKind> = (0..grid.len()).map(|i| grid.classify(&domain, i)).collect();
        let mut unknown_of = vec![usize::MAX; grid.len()];
        let mut interior = Vec::new();
        for (i, k) in kinds.iter().enumerate() {
            if *k == NodeKind::Interior {
                unknown_of[i] = interior.len();
                interior.push(i);
            }
        }
        if interior.is_empty() {
            return Err(Error::Argument("grid has no interior nodes".into()));
        }
        let boundary_values: Vec<f64> = (0..grid.len())
            .map(|i| if kinds[i] == NodeKind::Boundary { boundary(&grid.point(i)) } else { f64::NAN })
            .collect();
        let dirs = directions(n);
        let arm = |idx: usize, x: &[f64], v: &[i64]| -> (Arm, f64) {
            match grid.offset(idx, v) {
                Some(nb) if kinds[nb] == NodeKind::Interior => (Arm::Unknown(unknown_of[nb]), 1.0),
                Some(nb) if kinds[nb] == NodeKind::Boundary => (Arm::Known(boundary_values[nb]), 1.0),
                _ => match domain {
                    Domain::Ball { radius } => {
                        let s = sphere_cut(x, v, h, radius);
                        let p: Vec<f64> = x.iter().zip(v).map(|(a, &c)| a + s * h * c as f64).collect();
                        (Arm::Known(boundary(&p)), s)
                    }
                    Domain::Box { .. } => unreachable!("box interior nodes have on-grid neighbours"),
                },
            }
        };
        let nodes = interior
            .par_iter()
            .map(|&idx| {
                let x = grid.point(idx);
                let dirs = dirs
                    .iter()
                    .map(|v| {
                        let minus: Vec<i64> = v.iter().map(|c| -c).collect();
                        let (plus, sp) = arm(idx, &x, v);
                        let (minus, sm) = arm(idx, &x, &minus);
                        let scale = 2.0 / (h * h * (sp + sm));
                        DirDiff { plus, minus, cp: scale / sp, cm: scale / sm }
                    })
                    .collect();
                NodeStencil { node: idx, dirs }
            })
            .collect();
        Ok(Stencil { grid, domain, kinds, unknown_of, nodes, boundary_values })
    }

    pub fn unknowns(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    fn arm_value(arm: &Arm, u: &[f64]) -> f64 {
        match *arm {
            Arm::Unknown(j) => u[j],
            Arm::Known(v) => v,
        }
    }

    pub fn hessian(&self, k: usize, u: &[f64]) -> SymmetricMatrix {
        let st = &self.nodes[k];
        let u0 = u[k];
        let d: Vec<f64> = st
            .dirs
            .iter()
            .map(|dd| dd.cp * (Self::arm_value(&dd.plus, u) - u0) + dd.cm * (Self::arm_value(&dd.minus, u) - u0))
            .collect();
        assemble_hessian(self.grid.dim, &d)
    }

    pub fn hessians(&self, u: &[f64]) -> Vec<SymmetricMatrix> {
        (0..self.unknowns()).into_par_iter().map(|k| self.hessian(k, u)).collect()
    }

    /// Row `k` of the operator `v -> trace(A D^2 v)`, with the known-value contribution.
    pub fn row(&self, k: usize, a: &SymmetricMatrix) -> (Vec<(usize, f64)>, f64) {
        let w = direction_weights(a);
        let mut diag = 0.0;
        let mut known = 0.0;
        let mut row = Vec::with_capacity(2 * w.len() + 1);
        for (dd, &wd) in self.nodes[k].dirs.iter().zip(&w) {
            if wd == 0.0 {
                continue;
            }
            diag -= wd * (dd.cp + dd.cm);
            for (arm, c) in [(dd.plus, dd.cp), (dd.minus, dd.cm)] {
                match arm {
                    Arm::Unknown(j) => row.push((j, wd * c)),
                    Arm::Known(v) => known += wd * c * v,
                }
            }
        }
        row.push((k, diag));
        (row, known)
    }

    /// Full grid function from the unknown vector.
    pub fn to_grid_function(&self, u: &[f64]) -> GridFunction {
        let values = (0..self.grid.len())
            .map(|i| match self.kinds[i] {
                NodeKind::Interior => u[self.unknown_of[i]],
                NodeKind::Boundary => self.boundary_values[i],
                NodeKind::Exterior => f64::NAN,
            })
            .collect();
        GridFunction::from_values(self.grid, self.domain, values).expect("solver iterate must be finite")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::field;

    #[test]
    fn central_hessian_exact_on_quadratics() {
        let grid = Grid::new(3, 8, 1.0).unwrap();
        let u = GridFunction::sample(grid, Domain::Box { half_width: 1.0 }, |x| x[0] * x[0] + x[1] * x[1]);
        let node = grid.linear_index(&[3, 4, 5]);
        let h = discrete_hessian(&u, node).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j && i < 2 { 2.0 } else { 0.0 };
                assert!((h.get(i, j) - want).abs() < 1e-12);
            }
        }
        assert!(matches!(discrete_hessian(&u, 0), Err(Error::BoundaryProximity { .. })));
    }

    #[test]
    fn central_hessian_quartic_is_second_order() {
        // u = |x|^4 / 4 has Hessian diag(3 r^2, r^2) at (r, 0)
        let grid = Grid::new(2, 200, 1.0).unwrap();
        let u = GridFunction::sample(grid, Domain::Box { half_width: 1.0 }, |x| (x[0] * x[0] + x[1] * x[1]).powi(2) / 4.0);
        let node = grid.nearest(&[0.5, 0.0]);
        let h = discrete_hessian(&u, node).unwrap();
        let dx2 = grid.spacing * grid.spacing;
        assert!((h.get(0, 0) - 0.75).abs() <= 2.0 * dx2);
        assert!((h.get(1, 1) - 0.25).abs() <= 2.0 * dx2);
        assert!(h.get(0, 1).abs() <= 1e-10);
    }

    #[test]
    fn cut_cell_stencil_exact_on_quadratics() {
        let q = |x: &[f64]| 0.7 * x[0] * x[0] + 0.3 * x[0] * x[1] + 0.2 * x[1] * x[1] - x[0] + 0.5;
        let grid = Grid::new(2, 10, 1.0).unwrap();
        let st = Stencil::build(grid, Domain::Ball { radius: 1.0 }, &field(q)).unwrap();
        let u: Vec<f64> = st.nodes.iter().map(|s| q(&grid.point(s.node))).collect();
        for k in 0..st.unknowns() {
            let h = st.hessian(k, &u);
            assert!((h.get(0, 0) - 1.4).abs() < 1e-9, "{}", h.get(0, 0));
            assert!((h.get(0, 1) - 0.3).abs() < 1e-9);
            assert!((h.get(1, 1) - 0.4).abs() < 1e-9);
        }
    }
}
