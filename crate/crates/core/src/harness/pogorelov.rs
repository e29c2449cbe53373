//! The Pogorelov quantity `sup (w - u)^4 |D^2 u|` over a region where `u < w`.

use std::collections::VecDeque;

use serde::Serialize;

use crate::barrier::QuadraticForm;
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::solver::{discrete_hessian, has_full_stencil};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PogorelovValue {
    pub value: f64,
    pub argmax: usize,
    pub nodes: usize,
}

/// `max over region of (w - u)^4 * |D^2 u|` with the spectral norm of the discrete Hessian.
pub fn pogorelov_functional(u: &GridFunction, w: &QuadraticForm, region: &[usize]) -> Result<PogorelovValue> {
    if region.is_empty() {
        return Err(Error::Argument("empty region".into()));
    }
    let mut best = PogorelovValue { value: f64::NEG_INFINITY, argmax: region[0], nodes: region.len() };
    for &i in region {
        if !u.in_domain(i) {
            return Err(Error::Region { node: i });
        }
        let gap = w.eval(&u.point(i)) - u.value(i);
        if !(gap > 0.0) {
            return Err(Error::Region { node: i });
        }
        let value = gap.powi(4) * discrete_hessian(u, i)?.spectral_norm();
        if value > best.value {
            best.value = value;
            best.argmax = i;
        }
    }
    Ok(best)
}

/// Connected component (through axis neighbours with a full stencil) of `{u < w}` containing
/// the node nearest to `seed`.
pub fn component_below(u: &GridFunction, w: &QuadraticForm, seed: &[f64]) -> Result<Vec<usize>> {
    let g = u.grid();
    let start = g.nearest(seed);
    let inside = |i: usize| u.in_domain(i) && has_full_stencil(u, i) && u.value(i) < w.eval(&u.point(i));
    if !inside(start) {
        return Err(Error::Region { node: start });
    }
    let mut seen = vec![false; g.len()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    let mut out = Vec::new();
    while let Some(i) = queue.pop_front() {
        out.push(i);
        for d in 0..g.dim {
            for s in [-1i64, 1] {
                let mut e = vec![0i64; g.dim];
                e[d] = s;
                if let Some(j) = g.offset(i, &e) {
                    if !seen[j] && inside(j) {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
    }
    out.sort_unstable();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Domain, Grid};
    use crate::hessian::SymmetricMatrix;

    #[test]
    fn constant_gap_gives_gap_to_the_fourth_times_norm() {
        let g = Grid::new(2, 16, 1.0).unwrap();
        let a = SymmetricMatrix::from_rows(&[vec![1.0, 0.25], vec![0.25, 0.5]]).unwrap();
        let q = QuadraticForm::new(a.clone(), vec![0.1, 0.0], 0.0);
        let u = GridFunction::sample(g, Domain::Box { half_width: 1.0 }, |x| q.eval(x));
        let w = q.plus_constant(0.3);
        let region = component_below(&u, &w, &[0.0, 0.0]).unwrap();
        let v = pogorelov_functional(&u, &w, &region).unwrap();
        let expected = 0.3f64.powi(4) * a.spectral_norm();
        assert!((v.value - expected).abs() < 1e-10 * expected);
    }

    #[test]
    fn region_outside_sublevel_is_rejected() {
        let g = Grid::new(2, 8, 1.0).unwrap();
        let u = GridFunction::sample(g, Domain::Box { half_width: 1.0 }, |x| x[0] * x[0]);
        let w = QuadraticForm::affine(vec![0.0, 0.0], 0.1);
        let node = u.grid().nearest(&[0.75, 0.0]);
        assert!(matches!(pogorelov_functional(&u, &w, &[node]), Err(Error::Region { .. })));
    }
}
