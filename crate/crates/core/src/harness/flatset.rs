//! Sublevel flat sets `{u < L + delta}`, principal-axis affine fits and the
//! strict 2-convexity audit built on them.

use rayon::prelude::*;
use serde::Serialize;

use super::plane::{supporting_plane, SupportingPlane};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::hessian::{eigen_decomposition, SymmetricMatrix};

/// Nodes where `u < L + delta`.
pub fn sublevel_flat_set(u: &GridFunction, plane: &SupportingPlane, delta: f64) -> Vec<usize> {
    u.domain_nodes().filter(|&i| u.value(i) - plane.eval(&u.point(i)) < delta).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffineFitReport {
    /// Smallest `d` with `widths[d] <= requested_width`.
    pub dimension: usize,
    pub requested_width: f64,
    pub origin: Vec<f64>,
    /// All principal axes, by decreasing second moment. The fitted subspace of
    /// dimension `d` is spanned by the first `d`.
    pub axes: Vec<Vec<f64>>,
    pub moments: Vec<f64>,
    /// `widths[d]`: max distance of the points to the `d`-dimensional fit, `d = 0..=n`.
    pub widths: Vec<f64>,
}

impl AffineFitReport {
    pub fn width(&self) -> f64 {
        self.widths[self.dimension]
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.axes[..self.dimension]
    }

    /// Distance of `x` to the `d`-dimensional fit.
    pub fn distance(&self, x: &[f64], d: usize) -> f64 {
        let y: Vec<f64> = x.iter().zip(&self.origin).map(|(a, b)| a - b).collect();
        let mut r = y.clone();
        for e in &self.axes[..d] {
            let t: f64 = e.iter().zip(&y).map(|(a, b)| a * b).sum();
            for (ri, ei) in r.iter_mut().zip(e) {
                *ri -= t * ei;
            }
        }
        r.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Orthogonal projection of `x` onto the `d`-dimensional fit.
    pub fn project(&self, x: &[f64], d: usize) -> Vec<f64> {
        let y: Vec<f64> = x.iter().zip(&self.origin).map(|(a, b)| a - b).collect();
        let mut p = self.origin.clone();
        for e in &self.axes[..d] {
            let t: f64 = e.iter().zip(&y).map(|(a, b)| a * b).sum();
            for (pi, ei) in p.iter_mut().zip(e) {
                *pi += t * ei;
            }
        }
        p
    }
}

/// Principal-axis fit of `points`. Second moments are taken about `anchor` when given
/// (the supporting-plane contact point), otherwise about the centroid.
pub fn affine_fit(points: &[Vec<f64>], anchor: Option<&[f64]>, width: f64) -> Result<AffineFitReport> {
    let first = points.first().ok_or_else(|| Error::Argument("affine fit of an empty point set".into()))?;
    let n = first.len();
    if points.iter().any(|p| p.len() != n) {
        return Err(Error::Argument("points of mixed dimension".into()));
    }
    let origin: Vec<f64> = match anchor {
        Some(a) => a.to_vec(),
        None => (0..n).map(|d| points.iter().map(|p| p[d]).sum::<f64>() / points.len() as f64).collect(),
    };
    let mut m = SymmetricMatrix::zeros(n);
    for p in points {
        for i in 0..n {
            for j in i..n {
                let v = m.get(i, j) + (p[i] - origin[i]) * (p[j] - origin[j]);
                m.set(i, j, v);
            }
        }
    }
    let (moments, axes) = eigen_decomposition(&m);
    let mut report = AffineFitReport {
        dimension: n,
        requested_width: width,
        origin,
        axes,
        moments,
        widths: Vec::with_capacity(n + 1),
    };
    for d in 0..n {
        let w = points.iter().map(|p| report.distance(p, d)).fold(0.0, f64::max);
        report.widths.push(w);
    }
    report.widths.push(0.0);
    // clamp rounding so the widths are non-increasing
    for d in 1..=n {
        report.widths[d] = report.widths[d].min(report.widths[d - 1]);
    }
    report.dimension = (0..=n).find(|&d| report.widths[d] <= width).unwrap_or(n);
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditOptions {
    /// Flat-set levels as fractions of `osc(u)`.
    pub relative_deltas: [f64; 3],
    /// Width threshold; `None` means half a grid spacing.
    pub width: Option<f64>,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions { relative_deltas: [1e-2, 1e-3, 1e-4], width: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelFit {
    pub delta: f64,
    pub nodes: usize,
    pub fit: AffineFitReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleAudit {
    pub node: usize,
    pub point: Vec<f64>,
    pub plane: SupportingPlane,
    pub levels: Vec<LevelFit>,
    /// Dimension at the smallest level.
    pub dimension: usize,
}

impl SampleAudit {
    /// Fit at the smallest level.
    pub fn finest(&self) -> &AffineFitReport {
        &self.levels.last().expect("at least one level").fit
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub dim: usize,
    pub width: f64,
    pub samples: Vec<SampleAudit>,
    pub max_dimension: usize,
    pub pass: bool,
    pub offenders: Vec<usize>,
}

/// Flat-set dimension audit: passes when every sample has dimension at most `n - 2`.
pub fn strict_2convexity_audit(u: &GridFunction, samples: &[usize], options: &AuditOptions) -> Result<AuditReport> {
    if samples.is_empty() {
        return Err(Error::Argument("no sample nodes".into()));
    }
    let n = u.dim();
    let width = options.width.unwrap_or(0.5 * u.spacing());
    let osc = u.osc();
    let mut deltas: Vec<f64> = options.relative_deltas.iter().map(|r| r * osc).collect();
    deltas.sort_by(|a, b| b.total_cmp(a));
    let samples: Vec<SampleAudit> = samples
        .par_iter()
        .map(|&node| {
            let plane = supporting_plane(u, node)?;
            let levels = deltas
                .iter()
                .map(|&delta| {
                    let set = sublevel_flat_set(u, &plane, delta);
                    let pts: Vec<Vec<f64>> = set.iter().map(|&i| u.point(i)).collect();
                    let fit = affine_fit(&pts, Some(&plane.base), width)?;
                    Ok(LevelFit { delta, nodes: set.len(), fit })
                })
                .collect::<Result<Vec<_>>>()?;
            let dimension = levels.last().map_or(0, |l| l.fit.dimension);
            Ok(SampleAudit { node, point: u.point(node), plane, levels, dimension })
        })
        .collect::<Result<_>>()?;
    let max_dimension = samples.iter().map(|s| s.dimension).max().unwrap_or(0);
    let limit = n.saturating_sub(2);
    let offenders: Vec<usize> = samples.iter().filter(|s| s.dimension > limit).map(|s| s.node).collect();
    Ok(AuditReport { dim: n, width, pass: offenders.is_empty(), max_dimension, samples, offenders })
}
