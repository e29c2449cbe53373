//! Smooth-approximation pipeline: mollify a boundary trace on the sphere at
//! angular width `2^-j` and solve `sigma_2 = 1` with each mollified trace.

use std::f64::consts::PI;
use std::sync::Arc;

use super::{solve_dirichlet, DirichletProblem, SolveOptions, SolveReport};
use crate::error::{Error, Result};
use crate::grid::{constant_field, norm, Domain, Field, GridFunction};

const PSI_NODES: usize = 32;
const PHI_NODES: usize = 32;

fn bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - t * t)).exp()
    }
}

/// Orthonormal pair completing the unit vector `d` in `R^3`.
fn complement(d: &[f64]) -> ([f64; 3], [f64; 3]) {
    let a = if d[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let dot = a[0] * d[0] + a[1] * d[1] + a[2] * d[2];
    let mut e1 = [a[0] - dot * d[0], a[1] - dot * d[1], a[2] - dot * d[2]];
    let l = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    e1.iter_mut().for_each(|v| *v /= l);
    let e2 = [d[1] * e1[2] - d[2] * e1[1], d[2] * e1[0] - d[0] * e1[2], d[0] * e1[1] - d[1] * e1[0]];
    (e1, e2)
}

/// Convolution of `g` restricted to the sphere of radius `radius` with a smooth bump of
/// angular half-width `width`. The result depends only on the direction of its argument.
pub fn mollify_on_sphere(g: Field, dim: usize, radius: f64, width: f64) -> Result<Field> {
    if !(2..=3).contains(&dim) {
        return Err(Error::Argument(format!("sphere mollification supports n in {{2, 3}}, got {dim}")));
    }
    if !(width > 0.0 && width < PI / 2.0) {
        return Err(Error::Argument(format!("angular width must lie in (0, pi/2), got {width}")));
    }
    let psi: Vec<(f64, f64)> = (0..PSI_NODES)
        .map(|i| {
            let t = (i as f64 + 0.5) / PSI_NODES as f64;
            let p = width * t;
            let w = bump(t) * if dim == 3 { p.sin() } else { 1.0 };
            (p, w)
        })
        .collect();
    Ok(Arc::new(move |x: &[f64]| {
        let r = norm(x);
        if r == 0.0 {
            return g(x);
        }
        let d: Vec<f64> = x.iter().map(|v| v / r).collect();
        let mut acc = 0.0;
        let mut mass = 0.0;
        match dim {
            2 => {
                for &(p, w) in &psi {
                    for s in [p, -p] {
                        let (c, sn) = (s.cos(), s.sin());
                        let y = [radius * (c * d[0] - sn * d[1]), radius * (sn * d[0] + c * d[1])];
                        acc += w * g(&y);
                        mass += w;
                    }
                }
            }
            _ => {
                let (e1, e2) = complement(&d);
                for &(p, w) in &psi {
                    let (c, sn) = (p.cos(), p.sin());
                    for j in 0..PHI_NODES {
                        let phi = 2.0 * PI * j as f64 / PHI_NODES as f64;
                        let (cp, sp) = (phi.cos(), phi.sin());
                        let y: Vec<f64> =
                            (0..3).map(|i| radius * (c * d[i] + sn * (cp * e1[i] + sp * e2[i]))).collect();
                        acc += w * g(&y);
                        mass += w;
                    }
                }
            }
        }
        acc / mass
    }))
}

#[derive(Debug, Clone)]
pub struct PipelineLevel {
    pub level: u32,
    pub width: f64,
    pub solution: GridFunction,
    pub report: SolveReport,
}

/// Solves `sigma_2(D^2 v_j) = 1` on the ball of radius `radius` with boundary data the
/// mollified trace of `target` at width `2^-j`, for `j = 1..=levels`.
pub fn approximation_pipeline(
    dim: usize,
    radius: f64,
    target: Field,
    levels: u32,
    resolution: usize,
    options: &SolveOptions,
) -> Result<Vec<PipelineLevel>> {
    (1..=levels)
        .map(|j| {
            let width = 0.5f64.powi(j as i32);
            let g = mollify_on_sphere(target.clone(), dim, radius, width)?;
            let p = DirichletProblem::new(dim, 2, Domain::Ball { radius }, constant_field(1.0), g)?;
            let (solution, report) = solve_dirichlet(&p, resolution, options)?;
            Ok(PipelineLevel { level: j, width, solution, report })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::field;

    #[test]
    fn mollification_preserves_constants_and_is_close_for_smooth_data() {
        let m = mollify_on_sphere(constant_field(2.5), 3, 0.5, 0.25).unwrap();
        assert!((m(&[0.1, 0.2, 0.3]) - 2.5).abs() < 1e-13);
        let g = field(|x: &[f64]| x[0]);
        let m = mollify_on_sphere(g, 2, 1.0, 0.01).unwrap();
        assert!((m(&[1.0, 0.0]) - 1.0).abs() < 1e-4);
        assert!((m(&[0.0, 3.0]) - 0.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_widths() {
        assert!(mollify_on_sphere(constant_field(1.0), 3, 1.0, 0.0).is_err());
        assert!(mollify_on_sphere(constant_field(1.0), 4, 1.0, 0.1).is_err());
    }
}
