//! Uniform grids over boxes and balls, and the grid functions living on them.
//!
//! Binary layout of a grid function (little endian): the magic bytes `HGF1`,
//! `n` as `u32`, the node count of each axis as `u32`, the spacing as `f64`,
//! then all node values as `f64` in row-major order (last axis fastest).
//! Nodes outside a ball domain are written as NaN.

use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"HGF1";

/// A real function on `R^n`, used for right-hand sides and boundary data.
pub type Field = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

pub fn field(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Field {
    Arc::new(f)
}

pub fn constant_field(c: f64) -> Field {
    Arc::new(move |_| c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    /// `[-half_width, half_width]^n`
    Box { half_width: f64 },
    /// Closed ball of the given radius about the origin.
    Ball { radius: f64 },
}

impl Domain {
    pub fn extent(&self) -> f64 {
        match *self {
            Domain::Box { half_width } => half_width,
            Domain::Ball { radius } => radius,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match *self {
            Domain::Box { half_width } => x.iter().all(|v| v.abs() <= half_width * (1.0 + 1e-12)),
            Domain::Ball { radius } => norm(x) <= radius * (1.0 + 1e-12),
        }
    }

    /// Distance from an inside point to the boundary.
    pub fn depth(&self, x: &[f64]) -> f64 {
        match *self {
            Domain::Box { half_width } => x.iter().map(|v| half_width - v.abs()).fold(f64::INFINITY, f64::min),
            Domain::Ball { radius } => radius - norm(x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Interior,
    Boundary,
    Exterior,
}

/// `cells + 1` nodes per axis at `-half_width + i * spacing`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub cells: usize,
    pub half_width: f64,
    pub spacing: f64,
}

impl Grid {
    pub fn new(dim: usize, cells: usize, half_width: f64) -> Result<Self> {
        if !(1..=4).contains(&dim) {
            return Err(Error::Argument(format!("grid dimension {dim} out of range 1..=4")));
        }
        if cells < 2 || !(half_width > 0.0) {
            return Err(Error::Argument(format!("need cells >= 2 and half width > 0 (got {cells}, {half_width})")));
        }
        Ok(Grid { dim, cells, half_width, spacing: 2.0 * half_width / cells as f64 })
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.cells + 1
    }

    pub fn len(&self) -> usize {
        self.nodes_per_axis().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let m = self.nodes_per_axis();
        let mut out = vec![0; self.dim];
        for d in (0..self.dim).rev() {
            out[d] = idx % m;
            idx /= m;
        }
        out
    }

    pub fn linear_index(&self, mi: &[usize]) -> usize {
        let m = self.nodes_per_axis();
        mi.iter().fold(0, |acc, &i| acc * m + i)
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx).into_iter().map(|i| self.coordinate(i)).collect()
    }

    /// Node at `idx + offset`, if it is on the grid.
    pub fn offset(&self, idx: usize, offset: &[i64]) -> Option<usize> {
        let m = self.nodes_per_axis() as i64;
        let mi = self.multi_index(idx);
        let mut out = 0usize;
        for (d, &i) in mi.iter().enumerate() {
            let j = i as i64 + offset[d];
            if j < 0 || j >= m {
                return None;
            }
            out = out * m as usize + j as usize;
        }
        Some(out)
    }

    /// Node closest to `x` (clamped to the grid).
    pub fn nearest(&self, x: &[f64]) -> usize {
        let mi: Vec<usize> = x
            .iter()
            .map(|&v| (((v + self.half_width) / self.spacing).round().max(0.0) as usize).min(self.cells))
            .collect();
        self.linear_index(&mi)
    }

    pub fn classify(&self, domain: &Domain, idx: usize) -> NodeKind {
        match *domain {
            Domain::Box { .. } => {
                if self.multi_index(idx).iter().any(|&i| i == 0 || i == self.cells) {
                    NodeKind::Boundary
                } else {
                    NodeKind::Interior
                }
            }
            Domain::Ball { radius } => {
                let r = norm(&self.point(idx));
                let band = 1e-3 * self.spacing;
                if r < radius - band {
                    NodeKind::Interior
                } else if r <= radius + band {
                    NodeKind::Boundary
                } else {
                    NodeKind::Exterior
                }
            }
        }
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Values of a function on the in-domain nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    domain: Domain,
    kinds: Vec<NodeKind>,
    values: Vec<f64>,
}

impl GridFunction {
    /// Grid of `cells` cells per axis covering `domain`.
    pub fn grid_for(dim: usize, cells: usize, domain: &Domain) -> Result<Grid> {
        Grid::new(dim, cells, domain.extent())
    }

    pub fn from_values(grid: Grid, domain: Domain, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Argument(format!("expected {} values, got {}", grid.len(), values.len())));
        }
        let kinds: Vec<NodeKind> = (0..grid.len()).map(|i| grid.classify(&domain, i)).collect();
        for (i, k) in kinds.iter().enumerate() {
            if *k == NodeKind::Exterior {
                values[i] = f64::NAN;
            } else if !values[i].is_finite() {
                return Err(Error::Argument(format!("non-finite value at in-domain node {i}")));
            }
        }
        Ok(GridFunction { grid, domain, kinds, values })
    }

    pub fn sample(grid: Grid, domain: Domain, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|i| match grid.classify(&domain, i) {
                NodeKind::Exterior => f64::NAN,
                _ => f(&grid.point(i)),
            })
            .collect();
        Self::from_values(grid, domain, values).expect("sampled function must be finite on the domain")
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    pub fn spacing(&self) -> f64 {
        self.grid.spacing
    }

    pub fn kind(&self, idx: usize) -> NodeKind {
        self.kinds[idx]
    }

    pub fn in_domain(&self, idx: usize) -> bool {
        self.kinds[idx] != NodeKind::Exterior
    }

    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        self.grid.point(idx)
    }

    /// Indices of all in-domain nodes.
    pub fn domain_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.values.len()).filter(move |&i| self.in_domain(i))
    }

    pub fn max(&self) -> f64 {
        self.domain_nodes().map(|i| self.values[i]).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.domain_nodes().map(|i| self.values[i]).fold(f64::INFINITY, f64::min)
    }

    pub fn sup_norm(&self) -> f64 {
        self.domain_nodes().map(|i| self.values[i].abs()).fold(0.0, f64::max)
    }

    /// Oscillation `max u - min u` over the domain.
    pub fn osc(&self) -> f64 {
        self.max() - self.min()
    }

    /// `self - f` pointwise.
    pub fn minus(&self, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut out = self.clone();
        for i in 0..out.values.len() {
            if out.in_domain(i) {
                out.values[i] -= f(&self.grid.point(i));
            }
        }
        out
    }

    /// Sup-norm distance to another function on the same grid, over nodes selected by `keep`.
    pub fn distance_where(&self, other: &GridFunction, keep: impl Fn(usize) -> bool) -> f64 {
        assert_eq!(self.grid, other.grid, "grids differ");
        self.domain_nodes()
            .filter(|&i| keep(i))
            .map(|i| (self.values[i] - other.values[i]).abs())
            .fold(0.0, f64::max)
    }

    /// Multilinear interpolation; `None` if any corner of the enclosing cell is outside the domain.
    pub fn interpolate(&self, x: &[f64]) -> Option<f64> {
        let g = &self.grid;
        let n = g.dim;
        let mut base = vec![0usize; n];
        let mut frac = vec![0.0; n];
        for d in 0..n {
            let t = (x[d] + g.half_width) / g.spacing;
            if !(-1e-9..=g.cells as f64 + 1e-9).contains(&t) {
                return None;
            }
            let i = (t.floor().max(0.0) as usize).min(g.cells - 1);
            base[d] = i;
            frac[d] = (t - i as f64).clamp(0.0, 1.0);
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut mi = base.clone();
            for d in 0..n {
                if corner & (1 << d) != 0 {
                    mi[d] += 1;
                    w *= frac[d];
                } else {
                    w *= 1.0 - frac[d];
                }
            }
            if w == 0.0 {
                continue;
            }
            let idx = g.linear_index(&mi);
            if !self.in_domain(idx) {
                return None;
            }
            acc += w * self.values[idx];
        }
        Some(acc)
    }

    pub fn write_binary(&self, mut w: impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.grid.dim as u32).to_le_bytes())?;
        for _ in 0..self.grid.dim {
            w.write_all(&(self.grid.nodes_per_axis() as u32).to_le_bytes())?;
        }
        w.write_all(&self.grid.spacing.to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads the binary layout written by [`GridFunction::write_binary`]. A file with NaN
    /// entries is read back as a ball grid of radius equal to the grid's half width.
    pub fn read_binary(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic bytes".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let dim = u32::from_le_bytes(b4) as usize;
        if !(1..=4).contains(&dim) {
            return Err(Error::Format(format!("dimension {dim} unsupported")));
        }
        let mut axes = Vec::with_capacity(dim);
        for _ in 0..dim {
            r.read_exact(&mut b4)?;
            axes.push(u32::from_le_bytes(b4) as usize);
        }
        if axes.iter().any(|&m| m != axes[0]) || axes[0] < 3 {
            return Err(Error::Format("only cubic grids with at least 3 nodes per axis are supported".into()));
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let spacing = f64::from_le_bytes(b8);
        if !(spacing > 0.0) {
            return Err(Error::Format("spacing must be positive".into()));
        }
        let cells = axes[0] - 1;
        let grid = Grid { dim, cells, half_width: 0.5 * spacing * cells as f64, spacing };
        let mut values = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            r.read_exact(&mut b8)?;
            values.push(f64::from_le_bytes(b8));
        }
        let domain = if values.iter().any(|v| v.is_nan()) {
            Domain::Ball { radius: grid.half_width }
        } else {
            Domain::Box { half_width: grid.half_width }
        };
        Self::from_values(grid, domain, values).map_err(|e| Error::Format(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip_and_coordinates() {
        let g = Grid::new(3, 4, 1.0).unwrap();
        assert_eq!(g.len(), 125);
        for idx in [0, 7, 62, 124] {
            assert_eq!(g.linear_index(&g.multi_index(idx)), idx);
        }
        assert_eq!(g.point(62), vec![0.0, 0.0, 0.0]);
        assert_eq!(g.offset(62, &[0, 0, 1]), Some(63));
        assert_eq!(g.offset(0, &[-1, 0, 0]), None);
        assert_eq!(g.nearest(&[0.01, -0.02, 0.4]), g.linear_index(&[2, 2, 3]));
    }

    #[test]
    fn ball_classification() {
        let d = Domain::Ball { radius: 1.0 };
        let f = GridFunction::sample(Grid::new(2, 8, 1.0).unwrap(), d, |x| x[0]);
        let g = f.grid();
        assert_eq!(f.kind(g.linear_index(&[4, 4])), NodeKind::Interior);
        assert_eq!(f.kind(g.linear_index(&[8, 4])), NodeKind::Boundary);
        assert_eq!(f.kind(g.linear_index(&[0, 0])), NodeKind::Exterior);
        assert!(f.value(0).is_nan());
        assert_eq!(f.max(), 1.0);
    }

    #[test]
    fn interpolation_is_exact_on_multilinear() {
        let d = Domain::Box { half_width: 1.0 };
        let f = GridFunction::sample(Grid::new(2, 10, 1.0).unwrap(), d, |x| 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[1]);
        let v = f.interpolate(&[0.33, -0.71]).unwrap();
        assert!((v - (1.0 + 0.66 + 0.71 - 0.5 * 0.33 * 0.71)).abs() < 1e-13);
        assert!(f.interpolate(&[1.5, 0.0]).is_none());
    }

    #[test]
    fn binary_roundtrip_ball() {
        let d = Domain::Ball { radius: 0.5 };
        let f = GridFunction::sample(Grid::new(3, 6, 0.5).unwrap(), d, |x| x[0] * x[1] + x[2]);
        let mut buf = Vec::new();
        f.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"HGF1");
        assert_eq!(buf.len(), 4 + 4 + 3 * 4 + 8 + 8 * 343);
        let back = GridFunction::read_binary(buf.as_slice()).unwrap();
        assert_eq!(back.domain(), &d);
        assert_eq!(back.grid(), f.grid());
        for i in f.domain_nodes() {
            assert_eq!(back.value(i), f.value(i));
        }
        assert!(GridFunction::read_binary(&b"XXXX"[..]).is_err());
    }
}
