//! Run configuration: a JSON file plus command-line overrides.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::expr;
use crate::error::{Error, Result};
use crate::grid::{constant_field, field, Domain, Field, GridFunction};

/// A scalar function of `x`, used for boundary data, right-hand sides and sampled inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    Constant {
        value: f64,
    },
    /// `alpha |x|^2 / 2`; without `alpha`, the radial solution of `sigma_k = 1`.
    Quadratic {
        #[serde(default)]
        alpha: Option<f64>,
    },
    /// `x1^2 + x2^2`.
    SharpExample,
    /// `slope * |x|`.
    Cone {
        #[serde(default = "one")]
        slope: f64,
    },
    Expression {
        expr: String,
    },
    /// A grid file, evaluated by multilinear interpolation (nearest node outside its domain).
    File {
        path: PathBuf,
    },
}

fn one() -> f64 {
    1.0
}

impl DataSpec {
    pub fn label(&self) -> String {
        match self {
            DataSpec::Constant { value } => format!("constant {value}"),
            DataSpec::Quadratic { alpha: Some(a) } => format!("quadratic {a}"),
            DataSpec::Quadratic { alpha: None } => "quadratic".into(),
            DataSpec::SharpExample => "sharp-example".into(),
            DataSpec::Cone { slope } => format!("cone {slope}"),
            DataSpec::Expression { expr } => expr.clone(),
            DataSpec::File { path } => path.display().to_string(),
        }
    }

    pub fn field(&self, n: usize, k: usize) -> Result<Field> {
        Ok(match self {
            DataSpec::Constant { value } => constant_field(*value),
            DataSpec::Quadratic { alpha } => {
                let a = alpha.unwrap_or_else(|| radial_coefficient(n, k));
                field(move |x| 0.5 * a * x.iter().map(|v| v * v).sum::<f64>())
            }
            DataSpec::SharpExample => field(|x| x[0] * x[0] + x.get(1).map_or(0.0, |v| v * v)),
            DataSpec::Cone { slope } => {
                let s = *slope;
                field(move |x| s * x.iter().map(|v| v * v).sum::<f64>().sqrt())
            }
            DataSpec::Expression { expr } => {
                let e = expr::parse(expr, n)?;
                Arc::new(move |x: &[f64]| e.eval(x))
            }
            DataSpec::File { path } => {
                let g = GridFunction::read_binary(BufReader::new(File::open(path)?))?;
                if g.dim() != n {
                    return Err(Error::Argument(format!("{} holds a {}-dimensional grid, expected {n}", path.display(), g.dim())));
                }
                field(move |x| g.interpolate(x).unwrap_or_else(|| g.value(g.grid().nearest(x))))
            }
        })
    }
}

/// `alpha` with `sigma_k(alpha I) = 1`.
pub fn radial_coefficient(n: usize, k: usize) -> f64 {
    let binom = (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
    binom.powf(-1.0 / k as f64)
}

/// How audits obtain their grid function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputMode {
    /// Sample the `function` spec on the grid.
    Sample,
    /// Solve `sigma_k = rhs` with the `function` spec as boundary data.
    Solve,
}

/// Which nodes the flat-set audit visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleSpec {
    Origin,
    /// Nodes where `u` is within `1e-9 osc(u)` of its minimum.
    Minimizers,
    /// Every domain node.
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    /// Flat-set levels as fractions of `osc(u)`.
    pub deltas: [f64; 3],
    /// Fit width; `null` means half a grid spacing for the dimension audit.
    pub width: Option<f64>,
    pub samples: SampleSpec,
    /// Tube width of the modulus experiment.
    pub r: f64,
    /// Sup-norm bound; `null` means the family maximum.
    #[serde(rename = "K")]
    pub k_bound: Option<f64>,
    pub h: f64,
    #[serde(rename = "H")]
    pub big_h: f64,
    /// Wall-barrier parameter.
    pub delta: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            deltas: [1e-2, 1e-3, 1e-4],
            width: None,
            samples: SampleSpec::Origin,
            r: 0.1,
            k_bound: None,
            h: 0.1,
            big_h: 1.0,
            delta: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilyConfig {
    /// Members of the random family (modulus experiment).
    pub count: usize,
    /// Scale factors of the boundary data (C^2 experiment).
    pub scales: Vec<f64>,
    pub resolutions: Vec<usize>,
    pub bucket_width: f64,
    pub refinement_tolerance: f64,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        FamilyConfig {
            count: 10,
            scales: vec![1.0, 2.0, 4.0],
            resolutions: vec![16, 32],
            bucket_width: 0.5,
            refinement_tolerance: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GalleryConfig {
    pub k: usize,
    pub n: usize,
    pub curvature: f64,
    pub distances: Vec<f64>,
}

impl Default for GalleryConfig {
    fn default() -> Self {
        GalleryConfig { k: 3, n: 4, curvature: 1.0, distances: vec![1e-1, 1e-2, 1e-3] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub k: usize,
    pub domain: Domain,
    pub resolution: usize,
    pub rhs: DataSpec,
    /// Boundary data for solves, or the sampled function for audits.
    pub function: DataSpec,
    pub input: InputMode,
    pub audit: AuditConfig,
    pub family: FamilyConfig,
    pub gallery: GalleryConfig,
    pub out: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 3,
            k: 2,
            domain: Domain::Ball { radius: 1.0 },
            resolution: 32,
            rhs: DataSpec::Constant { value: 1.0 },
            function: DataSpec::Quadratic { alpha: None },
            input: InputMode::Sample,
            audit: AuditConfig::default(),
            family: FamilyConfig::default(),
            gallery: GalleryConfig::default(),
            out: PathBuf::from("hessianlab-out"),
            seed: 2024,
        }
    }
}

impl RunConfig {
    /// Parses a JSON config; errors carry the file name, line and column.
    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::Argument(format!("{}:{}:{}: {}", origin.display(), e.line(), e.column(), e))
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Argument(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text, path)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=crate::hessian::MAX_DIM).contains(&self.n) {
            return Err(Error::Argument(format!("n = {} out of range", self.n)));
        }
        if !(1..=self.n).contains(&self.k) {
            return Err(Error::Argument(format!("k = {} must lie in 1..=n", self.k)));
        }
        if self.resolution < 2 {
            return Err(Error::Argument("resolution must be at least 2".into()));
        }
        for spec in [&self.rhs, &self.function] {
            if let DataSpec::File { path } = spec {
                if !path.is_file() {
                    return Err(Error::Argument(format!("data file {} does not exist", path.display())));
                }
            }
            if let DataSpec::Expression { expr } = spec {
                expr::parse(expr, self.n)?;
            }
        }
        Ok(())
    }
}
