//! Contradiction certificates: a cylinder barrier that sits above `u - L` on
//! the boundary of a thin cylinder, below it at the centre, and has
//! `sigma_2 < 1`. Lifting it until it touches exhibits a `2`-convex quadratic
//! touching `u` from above with `sigma_2 < 1`, so `u` cannot satisfy
//! `sigma_2(D^2 u) >= 1` in the viscosity sense.

use serde::Serialize;

use super::flatset::AffineFitReport;
use super::plane::SupportingPlane;
use crate::barrier::{make_scaled_cylinder_barrier, Cylinder, QuadraticForm};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::hessian::sigma_k;

pub const MAX_HEIGHT_HALVINGS: u32 = 12;
const RINGS: usize = 8;
const SPOKES: usize = 16;
const SHELLS: usize = 4;
const REGRESSION_SAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Margins {
    /// `min (P - w)` over the sampled cylinder boundary.
    pub boundary: f64,
    /// `w(centre) - P(centre)`.
    pub center: f64,
    /// `1 - sigma_2(D^2 P)`.
    pub sigma: f64,
}

impl Margins {
    pub fn all_positive(&self) -> bool {
        self.boundary > 0.0 && self.center > 0.0 && self.sigma > 0.0
    }
}

/// One `(H, h)` candidate tried by the search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Attempt {
    pub normal_sign: f64,
    #[serde(rename = "H")]
    pub big_h: f64,
    pub radius: f64,
    pub h: f64,
    pub margins: Margins,
}

/// The barrier lifted until it touches `u` from above at a grid node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Touching {
    /// The touching quadratic in the original coordinates.
    pub function: QuadraticForm,
    pub node: usize,
    /// Nodes within this distance of `node` lie in the closed cylinder.
    pub radius: f64,
    pub lift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub base: Vec<f64>,
    /// Rows of the rotation into normal form; the last row is the normal.
    pub frame: Vec<Vec<f64>>,
    /// Slope `a >= 0` of the subtracted `a y_n`.
    pub slope: f64,
    pub h: f64,
    #[serde(rename = "H")]
    pub big_h: f64,
    pub radius: f64,
    /// Vertical shift: the barrier is `P_h - shift`.
    pub shift: f64,
    /// The shifted barrier in normal-form coordinates.
    pub barrier: QuadraticForm,
    pub sigma2: f64,
    pub margins: Margins,
    pub touching: Option<Touching>,
}

impl Certificate {
    /// Normal-form coordinates `y = R (x - base)`.
    pub fn to_normal_form(&self, x: &[f64]) -> Vec<f64> {
        self.frame.iter().map(|r| r.iter().zip(x.iter().zip(&self.base)).map(|(a, (p, q))| a * (p - q)).sum()).collect()
    }

    pub fn from_normal_form(&self, y: &[f64]) -> Vec<f64> {
        let n = y.len();
        (0..n).map(|j| self.base[j] + (0..n).map(|i| self.frame[i][j] * y[i]).sum::<f64>()).collect()
    }

    pub fn cylinder(&self) -> Cylinder {
        Cylinder { radius: self.radius, height: self.big_h }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoCertificate {
    pub reason: String,
    pub attempts: Vec<Attempt>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum CertificateOutcome {
    Certified(Box<Certificate>),
    Inconclusive(NoCertificate),
}

impl CertificateOutcome {
    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            CertificateOutcome::Certified(c) => Some(c),
            CertificateOutcome::Inconclusive(_) => None,
        }
    }
}

struct NormalForm<'a> {
    v: GridFunction,
    base: &'a [f64],
    rows: Vec<Vec<f64>>,
}

impl NormalForm<'_> {
    fn to_x(&self, y: &[f64]) -> Vec<f64> {
        let n = y.len();
        (0..n).map(|j| self.base[j] + (0..n).map(|i| self.rows[i][j] * y[i]).sum::<f64>()).collect()
    }

    fn to_y(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().zip(x.iter().zip(self.base)).map(|(a, (p, q))| a * (p - q)).sum()).collect()
    }

    fn v_at(&self, y: &[f64]) -> Option<f64> {
        self.v.interpolate(&self.to_x(y))
    }

    /// One-dimensional convex regression `v(t nu) ~ alpha t + beta t^2`, `beta >= 0`,
    /// clipped so that `v - a y_n` stays nonnegative at the nodes.
    fn slope(&self) -> f64 {
        let n = self.rows.len();
        let s = self.v.spacing();
        let mut samples = Vec::new();
        for k in 1..=REGRESSION_SAMPLES {
            let mut y = vec![0.0; n];
            y[n - 1] = k as f64 * s;
            match self.v_at(&y) {
                Some(val) => samples.push((y[n - 1], val)),
                None => break,
            }
        }
        let alpha = match samples.len() {
            0 => 0.0,
            1 => samples[0].1 / samples[0].0,
            _ => {
                let (mut s2, mut s3, mut s4, mut sv1, mut sv2) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for &(t, v) in &samples {
                    s2 += t * t;
                    s3 += t * t * t;
                    s4 += t * t * t * t;
                    sv1 += t * v;
                    sv2 += t * t * v;
                }
                let det = s2 * s4 - s3 * s3;
                let beta = (s2 * sv2 - s3 * sv1) / det;
                if beta >= 0.0 {
                    (s4 * sv1 - s3 * sv2) / det
                } else {
                    sv1 / s2
                }
            }
        };
        let cap = self
            .v
            .domain_nodes()
            .filter_map(|i| {
                let yn = *self.to_y(&self.v.point(i)).last().unwrap();
                (yn > 1e-12 * s).then(|| self.v.value(i) / yn)
            })
            .fold(f64::INFINITY, f64::min);
        alpha.min(cap).max(0.0)
    }
}

fn unit(v: &[f64]) -> Vec<f64> {
    let l = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / l).collect()
}

/// Searches for a contradiction certificate at the flat set described by `fit`.
pub fn theorem1_certificate(u: &GridFunction, plane: &SupportingPlane, fit: &AffineFitReport) -> Result<CertificateOutcome> {
    let n = u.dim();
    if n < 2 || fit.axes.len() != n {
        return Err(Error::Argument("flat frame does not match the grid dimension".into()));
    }
    if fit.dimension + 1 < n {
        return Ok(CertificateOutcome::Inconclusive(NoCertificate {
            reason: format!("flat set has dimension {} < n - 1 = {}", fit.dimension, n - 1),
            attempts: Vec::new(),
        }));
    }
    let v = u.minus(|x| plane.eval(x));
    let osc = u.osc();
    let mut attempts = Vec::new();
    for sign in [1.0, -1.0] {
        let mut rows: Vec<Vec<f64>> = fit.axes[..n - 1].iter().map(|e| unit(e)).collect();
        rows.push(unit(&fit.axes[n - 1]).iter().map(|x| sign * x).collect());
        let nf = NormalForm { v: v.clone(), base: &plane.base, rows };
        let a = nf.slope();
        let w_at = |y: &[f64]| nf.v_at(y).map(|val| val - a * y[n - 1]);
        let height = {
            // distance to the domain boundary along the normal
            let mut t = 0.0;
            let step = 0.25 * u.spacing();
            while w_at(&{
                let mut y = vec![0.0; n];
                y[n - 1] = t + step;
                y
            })
            .is_some()
            {
                t += step;
            }
            t
        };
        if height <= 0.0 {
            continue;
        }
        for m in 0..=MAX_HEIGHT_HALVINGS {
            let big_h = height * 0.5f64.powi(m as i32);
            let Some((cyl, boundary)) = fit_cylinder(&w_at, n, big_h, u.spacing()) else { continue };
            let h_base = boundary.iter().map(|(_, w)| *w).fold(0.0, f64::max);
            let shift = (0.05 * h_base).max(1e-6 * osc).max(f64::MIN_POSITIVE);
            let h = h_base + 2.0 * shift;
            let barrier = make_scaled_cylinder_barrier(h, &cyl, n)?.plus_constant(-shift);
            let mut center = vec![0.0; n];
            center[n - 1] = 0.5 * big_h;
            let w_center = w_at(&center).expect("centre lies inside the sampled cylinder");
            let sigma2 = sigma_k(barrier.hessian(), 2)?;
            let margins = Margins {
                boundary: boundary.iter().map(|(y, w)| barrier.eval(y) - w).fold(f64::INFINITY, f64::min),
                center: w_center - barrier.eval(&center),
                sigma: 1.0 - sigma2,
            };
            attempts.push(Attempt { normal_sign: sign, big_h, radius: cyl.radius, h, margins });
            if margins.all_positive() {
                let mut cert = Certificate {
                    base: plane.base.clone(),
                    frame: nf.rows.clone(),
                    slope: a,
                    h,
                    big_h,
                    radius: cyl.radius,
                    shift,
                    barrier,
                    sigma2,
                    margins,
                    touching: None,
                };
                cert.touching = touch(u, plane, &nf, &cert);
                return Ok(CertificateOutcome::Certified(Box::new(cert)));
            }
        }
    }
    Ok(CertificateOutcome::Inconclusive(NoCertificate {
        reason: format!("no height in the {}-step search gave three positive margins", MAX_HEIGHT_HALVINGS + 1),
        attempts,
    }))
}

/// Largest radius `0.9^j` whose cylinder boundary samples can be evaluated, with those samples.
#[allow(clippy::type_complexity)]
fn fit_cylinder(
    w_at: &impl Fn(&[f64]) -> Option<f64>,
    n: usize,
    big_h: f64,
    spacing: f64,
) -> Option<(Cylinder, Vec<(Vec<f64>, f64)>)> {
    let mut radius = 1.0;
    while radius >= spacing {
        let cyl = Cylinder { radius, height: big_h };
        let samples: Option<Vec<(Vec<f64>, f64)>> = cyl
            .boundary_samples(n, RINGS, SPOKES, SHELLS)
            .into_iter()
            .map(|y| w_at(&y).map(|w| (y, w)))
            .collect();
        if let Some(s) = samples {
            return Some((cyl, s));
        }
        radius *= 0.9;
    }
    None
}

fn touch(u: &GridFunction, plane: &SupportingPlane, nf: &NormalForm, cert: &Certificate) -> Option<Touching> {
    let n = u.dim();
    let cyl = cert.cylinder();
    let eps = 1e-12 * cyl.radius.max(cyl.height);
    let mut best: Option<(usize, f64, f64)> = None;
    for i in u.domain_nodes() {
        let y = nf.to_y(&u.point(i));
        let (yn, head) = y.split_last().unwrap();
        let r = head.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r > cyl.radius + eps || *yn < -eps || *yn > cyl.height + eps {
            continue;
        }
        let gap = nf.v.value(i) - cert.slope * yn - cert.barrier.eval(&y);
        if best.is_none_or(|b| gap > b.1) {
            let room = (cyl.radius - r).min(*yn).min(cyl.height - yn).max(0.0);
            best = Some((i, gap, room));
        }
    }
    let (node, lift, radius) = best?;
    if lift <= 0.0 {
        return None;
    }
    let normal = &nf.rows[n - 1];
    let along = QuadraticForm::affine(
        normal.iter().map(|v| cert.slope * v).collect(),
        -cert.slope * normal.iter().zip(&plane.base).map(|(a, b)| a * b).sum::<f64>(),
    );
    let function = plane.as_affine().add(&along).add(&cert.barrier.compose_affine(&nf.rows, &plane.base)).plus_constant(lift);
    Some(Touching { function, node, radius, lift })
}
