//! Empirical tables: the flat-set modulus `delta(n, K, r)`, the Hessian at the
//! origin against the sup-norm, and the blow-up profile of the `k >= 3` gallery.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::flatset::{affine_fit, sublevel_flat_set};
use super::plane::{supporting_plane, tol_support};
use crate::barrier::AnalyticFunction;
use crate::error::{Error, Result};
use crate::grid::{constant_field, field, Domain, Field, GridFunction};
use crate::hessian::{elementary_symmetric, sigma_k, SymmetricMatrix};
use crate::solver::{discrete_hessian, solve_dirichlet, DirichletProblem, SolveOptions};

const BISECTION_STEPS: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemberModulus {
    pub member: usize,
    pub r: f64,
    pub delta: f64,
    /// The whole domain fits: `delta` is the search cap, limited only by the grid.
    pub capped: bool,
    /// The flat set never fits an `(n-2)`-dimensional tube.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulusRow {
    pub n: usize,
    #[serde(rename = "K")]
    pub k_bound: f64,
    pub r: f64,
    /// Minimum over unflagged members.
    pub delta: f64,
    pub argmin: usize,
    pub flagged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulusTable {
    pub rows: Vec<ModulusRow>,
    pub members: Vec<MemberModulus>,
}

impl ModulusTable {
    pub fn flagged_members(&self) -> Vec<usize> {
        let mut m: Vec<usize> = self.members.iter().filter(|m| m.flagged).map(|m| m.member).collect();
        m.dedup();
        m
    }
}

/// Largest `delta` (by bisection) for which `{u < L + delta}` lies within distance `< r` of
/// an `(n-2)`-dimensional affine subspace through the contact point at the origin node.
fn member_modulus(u: &GridFunction, r: f64) -> Result<(f64, bool, bool)> {
    let n = u.dim();
    let origin = u.grid().nearest(&vec![0.0; n]);
    let plane = supporting_plane(u, origin)?;
    let fits = |delta: f64| -> Result<bool> {
        let pts: Vec<Vec<f64>> = sublevel_flat_set(u, &plane, delta).iter().map(|&i| u.point(i)).collect();
        Ok(affine_fit(&pts, Some(&plane.base), r)?.widths[n.saturating_sub(2)] < r)
    };
    let cap = u.domain_nodes().map(|i| u.value(i) - plane.eval(&u.point(i))).fold(0.0, f64::max) * (1.0 + 1e-9) + f64::MIN_POSITIVE;
    if fits(cap)? {
        return Ok((cap, true, false));
    }
    let mut lo = 2.0 * tol_support(u);
    if !fits(lo)? {
        return Ok((0.0, false, true));
    }
    let mut hi = cap;
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if fits(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, false, false))
}

/// One row per width `r`: the family minimum of the measured modulus.
pub fn modulus_experiment(family: &[GridFunction], k_bound: f64, radii: &[f64]) -> Result<ModulusTable> {
    let n = family.first().ok_or_else(|| Error::Argument("empty family".into()))?.dim();
    if let Some((i, _)) = family.iter().enumerate().find(|(_, u)| u.dim() != n || u.sup_norm() > k_bound) {
        return Err(Error::Argument(format!("member {i} has the wrong dimension or sup-norm above K = {k_bound}")));
    }
    if radii.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::Argument("widths must be positive".into()));
    }
    let jobs: Vec<(usize, f64)> = radii.iter().flat_map(|&r| (0..family.len()).map(move |m| (m, r))).collect();
    let members: Vec<MemberModulus> = jobs
        .par_iter()
        .map(|&(m, r)| {
            let (delta, capped, flagged) = member_modulus(&family[m], r)?;
            Ok(MemberModulus { member: m, r, delta, capped, flagged })
        })
        .collect::<Result<_>>()?;
    let rows = radii
        .iter()
        .map(|&r| {
            let of_r: Vec<&MemberModulus> = members.iter().filter(|m| m.r == r).collect();
            let best = of_r.iter().filter(|m| !m.flagged).min_by(|a, b| a.delta.total_cmp(&b.delta));
            ModulusRow {
                n,
                k_bound,
                r,
                delta: best.map_or(0.0, |m| m.delta),
                argmin: best.map_or(0, |m| m.member),
                flagged: of_r.iter().filter(|m| m.flagged).count(),
            }
        })
        .collect();
    Ok(ModulusTable { rows, members })
}

/// Random smooth convex boundary data `x^T B x / 2 + eps (a . x)^4` with `sigma_2(B) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RandomDatum {
    pub b: SymmetricMatrix,
    pub direction: Vec<f64>,
    pub eps: f64,
}

impl RandomDatum {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let t: f64 = self.direction.iter().zip(x).map(|(a, b)| a * b).sum();
        0.5 * self.b.quadratic(x) + self.eps * t.powi(4)
    }

    pub fn field(&self) -> Field {
        let d = self.clone();
        field(move |x| d.eval(x))
    }
}

pub fn random_boundary_family(n: usize, count: usize, seed: u64) -> Vec<RandomDatum> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let raw = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let q = raw.qr().q();
            let lambda: Vec<f64> = (0..n).map(|_| rng.random_range(0.6..1.4)).collect();
            let scale = elementary_symmetric(&lambda, 2).sqrt();
            let b = SymmetricMatrix::from_fn(n, |i, j| (0..n).map(|l| q[(i, l)] * lambda[l] / scale * q[(j, l)]).sum());
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let len = a.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
            RandomDatum { b, direction: a.iter().map(|v| v / len).collect(), eps: rng.random_range(0.0..0.2) }
        })
        .collect()
}

/// Solves `sigma_2 = 1` on the unit ball for each datum.
pub fn solve_family(n: usize, data: &[Field], resolution: usize, options: &SolveOptions) -> Result<Vec<GridFunction>> {
    data.iter()
        .map(|g| {
            let p = DirichletProblem::new(n, 2, Domain::Ball { radius: 1.0 }, constant_field(1.0), g.clone())?;
            Ok(solve_dirichlet(&p, resolution, options)?.0)
        })
        .collect()
}

/// Boundary datum of the C^2 experiment: `scale * shape`.
#[derive(Clone)]
pub struct C2Case {
    pub label: String,
    pub scale: f64,
    pub shape: Field,
}

impl std::fmt::Debug for C2Case {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("C2Case").field("label", &self.label).field("scale", &self.scale).finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct C2Row {
    pub label: String,
    pub scale: f64,
    pub resolution: usize,
    pub sup_norm: f64,
    pub hessian_norm: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct C2Table {
    pub n: usize,
    pub rows: Vec<C2Row>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct C2Bucket {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub max_hessian_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct C2Audit {
    pub buckets: Vec<C2Bucket>,
    /// Largest relative change of `|D^2 u(0)|` between consecutive resolutions of a case.
    pub max_refinement_change: f64,
    pub bounded: bool,
    pub stable: bool,
}

impl C2Table {
    /// Rows of one case, by increasing resolution.
    pub fn case(&self, label: &str, scale: f64) -> Vec<&C2Row> {
        let mut rows: Vec<&C2Row> = self.rows.iter().filter(|r| r.label == label && r.scale == scale).collect();
        rows.sort_by_key(|r| r.resolution);
        rows
    }

    pub fn audit(&self, bucket_width: f64, refinement_tolerance: f64) -> C2Audit {
        let mut buckets: Vec<C2Bucket> = Vec::new();
        for row in &self.rows {
            let lo = (row.sup_norm / bucket_width).floor() * bucket_width;
            match buckets.iter_mut().find(|b| b.lo == lo) {
                Some(b) => {
                    b.count += 1;
                    b.max_hessian_norm = b.max_hessian_norm.max(row.hessian_norm);
                }
                None => buckets.push(C2Bucket { lo, hi: lo + bucket_width, count: 1, max_hessian_norm: row.hessian_norm }),
            }
        }
        buckets.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut change: f64 = 0.0;
        let mut seen: Vec<(&str, f64)> = Vec::new();
        for row in &self.rows {
            if seen.contains(&(row.label.as_str(), row.scale)) {
                continue;
            }
            seen.push((row.label.as_str(), row.scale));
            for pair in self.case(&row.label, row.scale).windows(2) {
                let (a, b) = (pair[0].hessian_norm, pair[1].hessian_norm);
                change = change.max((a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE));
            }
        }
        C2Audit {
            bounded: self.rows.iter().all(|r| r.hessian_norm.is_finite()),
            stable: change <= refinement_tolerance,
            max_refinement_change: change,
            buckets,
        }
    }
}

/// `(|u|_inf, |D^2 u(0)|)` for the solution of `sigma_2 = 1` on the unit ball with data `g`.
pub fn c2_at_origin(n: usize, g: Field, resolution: usize, options: &SolveOptions) -> Result<(f64, f64, usize)> {
    if resolution % 2 != 0 {
        return Err(Error::Argument("use an even resolution so the origin is a grid node".into()));
    }
    let p = DirichletProblem::new(n, 2, Domain::Ball { radius: 1.0 }, constant_field(1.0), g)?;
    let (u, report) = solve_dirichlet(&p, resolution, options)?;
    let origin = u.grid().nearest(&vec![0.0; n]);
    Ok((u.sup_norm(), discrete_hessian(&u, origin)?.spectral_norm(), report.iterations))
}

pub fn c2_at_origin_experiment(
    n: usize,
    cases: &[C2Case],
    resolutions: &[usize],
    options: &SolveOptions,
) -> Result<C2Table> {
    let mut rows = Vec::new();
    for case in cases {
        for &res in resolutions {
            let shape = case.shape.clone();
            let scale = case.scale;
            let g = field(move |x| scale * shape(x));
            let (sup_norm, hessian_norm, iterations) = c2_at_origin(n, g, res, options)?;
            rows.push(C2Row { label: case.label.clone(), scale, resolution: res, sup_norm, hessian_norm, iterations });
        }
    }
    Ok(C2Table { n, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GalleryRow {
    /// `|x'|` of the sample points.
    pub distance: f64,
    pub hessian_norm: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

/// Hessian norm and `sigma_k` of a gallery candidate at points `x' = t e_1`, with `x''` on the
/// grid `{-0.25, 0, 0.25}^(n-k+1)`, for each `t` in `distances`.
pub fn gallery_profile(f: &AnalyticFunction, distances: &[f64]) -> Result<Vec<GalleryRow>> {
    let AnalyticFunction::Pogorelov { k, n, .. } = *f else {
        return Err(Error::Argument("gallery profiles are defined for Pogorelov-type candidates".into()));
    };
    let tail = n + 1 - k;
    let mut tails = vec![Vec::new()];
    for _ in 0..tail {
        tails = tails.into_iter().flat_map(|t: Vec<f64>| [-0.25, 0.0, 0.25].map(|v| [t.clone(), vec![v]].concat())).collect();
    }
    distances
        .iter()
        .map(|&t| {
            let mut row = GalleryRow { distance: t, hessian_norm: 0.0, sigma_min: f64::INFINITY, sigma_max: f64::NEG_INFINITY };
            for z in &tails {
                let mut x = vec![0.0; k - 1];
                x[0] = t;
                x.extend_from_slice(z);
                let hess = f.hessian(&x);
                let s = sigma_k(&hess, k)?;
                row.hessian_norm = row.hessian_norm.max(hess.spectral_norm());
                row.sigma_min = row.sigma_min.min(s);
                row.sigma_max = row.sigma_max.max(s);
            }
            Ok(row)
        })
        .collect()
}
