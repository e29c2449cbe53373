//! Batch front-end behind the `hessianlab` binary.
//!
//! Every command reads a [`RunConfig`] (JSON file and/or flag overrides),
//! writes `<out>/<command>.json` plus CSV tables, and maps its outcome to an
//! exit status: 0 pass or complete, 2 audit failure, 1 error.

mod config;
pub mod expr;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub use config::{radial_coefficient, AuditConfig, DataSpec, FamilyConfig, GalleryConfig, InputMode, RunConfig, SampleSpec};

use crate::barrier::{make_cylinder_barrier, make_wall_barrier, make_wdelta, pogorelov_gallery, QuadraticForm};
use crate::error::{Error, Result};
use crate::grid::{Field, GridFunction};
use crate::harness::{
    affine_fit, c2_at_origin_experiment, component_below, gallery_profile, modulus_experiment, pogorelov_functional,
    random_boundary_family, solve_family, strict_2convexity_audit, sublevel_flat_set, supporting_plane,
    theorem1_certificate, viscosity_touch_test, AuditOptions, C2Case, CertificateOutcome, TouchSense,
};
use crate::hessian::{eigenvalues, elementary_symmetric, sigma_k};
use crate::solver::{solve_dirichlet, DirichletProblem, SolveOptions};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "hessianlab", version, about = "Solves and audits the quadratic Hessian equation sigma_2(D^2 u) = f")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Solve the Dirichlet problem and write the solution grid.
    Solve,
    /// Flat-set dimension audit at the configured sample nodes.
    AuditFlatset,
    /// Search for a contradiction certificate at the origin.
    Certify,
    /// Closed-form barrier identities against the sigma_k oracles.
    Barriers,
    /// Pogorelov functional against the wall barrier, plus the k >= 3 gallery profile.
    Pogorelov,
    /// Flat-set modulus over a seeded random family of solutions.
    Modulus,
    /// Hessian at the origin against the sup-norm over scaled boundary data.
    C2,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::AuditFlatset => "audit-flatset",
            Command::Certify => "certify",
            Command::Barriers => "barriers",
            Command::Pogorelov => "pogorelov",
            Command::Modulus => "modulus",
            Command::C2 => "c2",
        }
    }
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Grid cells per axis.
    #[arg(long, global = true)]
    pub res: Option<usize>,
    /// Barrier height h.
    #[arg(long = "h", global = true)]
    pub h: Option<f64>,
    /// Barrier cylinder height H.
    #[arg(long = "H", global = true)]
    pub big_h: Option<f64>,
    /// Wall-barrier parameter.
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Tube width of the modulus experiment.
    #[arg(long, global = true)]
    pub r: Option<f64>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

impl Overrides {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.n {
            c.n = v;
        }
        if let Some(v) = self.k {
            c.k = v;
        }
        if let Some(v) = self.res {
            c.resolution = v;
        }
        if let Some(v) = self.h {
            c.audit.h = v;
        }
        if let Some(v) = self.big_h {
            c.audit.big_h = v;
        }
        if let Some(v) = self.delta {
            c.audit.delta = v;
        }
        if let Some(v) = self.r {
            c.audit.r = v;
        }
        if let Some(v) = &self.out {
            c.out = v.clone();
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Complete,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Fail => 2,
            _ => 0,
        }
    }
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    command: &'a str,
    version: &'a str,
    config_hash: String,
    status: Status,
    config: &'a RunConfig,
    result: T,
}

/// SHA-256 of the canonical JSON form of the config.
pub fn config_hash(config: &RunConfig) -> String {
    let text = serde_json::to_string(config).expect("config serializes");
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

struct Output<'a> {
    command: Command,
    config: &'a RunConfig,
}

impl Output<'_> {
    fn path(&self, suffix: &str) -> PathBuf {
        self.config.out.join(format!("{}{suffix}", self.command.name()))
    }

    fn report<T: Serialize>(&self, status: Status, result: T) -> Result<Status> {
        let report = Report {
            command: self.command.name(),
            version: VERSION,
            config_hash: config_hash(self.config),
            status,
            config: self.config,
            result,
        };
        let mut w = BufWriter::new(File::create(self.path(".json"))?);
        serde_json::to_writer_pretty(&mut w, &report).map_err(|e| Error::Format(e.to_string()))?;
        writeln!(w)?;
        w.flush()?;
        Ok(status)
    }

    fn table<T: Serialize>(&self, name: &str, rows: &[T]) -> Result<()> {
        let mut w = csv::Writer::from_path(self.path(&format!("-{name}.csv"))).map_err(csv_error)?;
        for r in rows {
            w.serialize(r).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(threads) = std::env::var("HESSIANLAB_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        // a pool may already exist when called in-process more than once
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build_global();
    }
    match cli.overrides.resolve().and_then(|c| run(cli.command, &c)) {
        Ok(status) => status.exit_code(),
        Err(e) => {
            eprintln!("hessianlab: {e}");
            1
        }
    }
}

/// Runs one command, writing its artifacts under `config.out`.
pub fn run(command: Command, config: &RunConfig) -> Result<Status> {
    fs::create_dir_all(&config.out)?;
    let out = Output { command, config };
    match command {
        Command::Solve => solve(&out),
        Command::AuditFlatset => audit_flatset(&out),
        Command::Certify => certify(&out),
        Command::Barriers => barriers(&out),
        Command::Pogorelov => pogorelov(&out),
        Command::Modulus => modulus(&out),
        Command::C2 => c2(&out),
    }
}

fn problem(c: &RunConfig) -> Result<DirichletProblem> {
    DirichletProblem::new(c.n, c.k, c.domain, c.rhs.field(c.n, c.k)?, c.function.field(c.n, c.k)?)
}

fn input_function(c: &RunConfig) -> Result<GridFunction> {
    match c.input {
        InputMode::Sample => {
            let grid = GridFunction::grid_for(c.n, c.resolution, &c.domain)?;
            let f = c.function.field(c.n, c.k)?;
            Ok(GridFunction::sample(grid, c.domain, |x| f(x)))
        }
        InputMode::Solve => Ok(solve_dirichlet(&problem(c)?, c.resolution, &SolveOptions::default())?.0),
    }
}

fn write_grid(path: &Path, u: &GridFunction) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    u.write_binary(&mut w)?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct HistoryRow {
    sweep: usize,
    residual: f64,
    damping: Option<u32>,
}

fn solve(out: &Output) -> Result<Status> {
    let c = out.config;
    let (u, report) = solve_dirichlet(&problem(c)?, c.resolution, &SolveOptions::default())?;
    let grid_path = out.path(".hgf");
    write_grid(&grid_path, &u)?;
    let rows: Vec<HistoryRow> = report
        .residual_history
        .iter()
        .enumerate()
        .map(|(i, &r)| HistoryRow { sweep: i, residual: r, damping: i.checked_sub(1).map(|j| report.damping_history[j]) })
        .collect();
    out.table("history", &rows)?;
    #[derive(Serialize)]
    struct R<'a> {
        solve: &'a crate::solver::SolveReport,
        min: f64,
        max: f64,
        sup_norm: f64,
        grid: String,
    }
    out.report(
        Status::Complete,
        R {
            solve: &report,
            min: u.min(),
            max: u.max(),
            sup_norm: u.sup_norm(),
            grid: grid_path.file_name().unwrap().to_string_lossy().into_owned(),
        },
    )
}

fn sample_nodes(u: &GridFunction, spec: SampleSpec) -> Vec<usize> {
    match spec {
        SampleSpec::Origin => vec![u.grid().nearest(&vec![0.0; u.dim()])],
        SampleSpec::Minimizers => {
            let (lo, tol) = (u.min(), 1e-9 * u.osc());
            u.domain_nodes().filter(|&i| u.value(i) <= lo + tol).collect()
        }
        SampleSpec::All => u.domain_nodes().collect(),
    }
}

#[derive(Serialize)]
struct AuditRow {
    node: usize,
    dimension: usize,
    finest_delta: f64,
    finest_nodes: usize,
    finest_width: f64,
}

fn certify_at(u: &GridFunction, node: usize, c: &RunConfig) -> Result<(CertificateOutcome, Option<crate::harness::TouchReport>)> {
    let plane = supporting_plane(u, node)?;
    let delta = c.audit.deltas.iter().fold(f64::INFINITY, |a, &b| a.min(b)) * u.osc();
    let pts: Vec<Vec<f64>> = sublevel_flat_set(u, &plane, delta).iter().map(|&i| u.point(i)).collect();
    let fit = affine_fit(&pts, Some(&plane.base), c.audit.width.unwrap_or(0.5 * u.spacing()))?;
    let outcome = theorem1_certificate(u, &plane, &fit)?;
    let touch = match outcome.certificate().and_then(|cert| cert.touching.as_ref()) {
        Some(t) => {
            let f = c.rhs.field(c.n, c.k)?;
            Some(viscosity_touch_test(u, &t.function, t.node, TouchSense::Above, 2, f(&u.point(t.node)), t.radius)?)
        }
        None => None,
    };
    Ok((outcome, touch))
}

fn audit_flatset(out: &Output) -> Result<Status> {
    let c = out.config;
    let u = input_function(c)?;
    let samples = sample_nodes(&u, c.audit.samples);
    let options = AuditOptions { relative_deltas: c.audit.deltas, width: c.audit.width };
    let report = strict_2convexity_audit(&u, &samples, &options)?;
    let rows: Vec<AuditRow> = report
        .samples
        .iter()
        .map(|s| {
            let last = s.levels.last().expect("levels");
            AuditRow {
                node: s.node,
                dimension: s.dimension,
                finest_delta: last.delta,
                finest_nodes: last.nodes,
                finest_width: last.fit.width(),
            }
        })
        .collect();
    out.table("samples", &rows)?;
    // offenders are handed to the certificate search
    let certificates = report
        .offenders
        .iter()
        .take(4)
        .map(|&node| certify_at(&u, node, c).map(|(o, _)| o))
        .collect::<Result<Vec<_>>>()?;
    #[derive(Serialize)]
    struct R<'a> {
        audit: &'a crate::harness::AuditReport,
        certificates: Vec<CertificateOutcome>,
    }
    let status = if report.pass { Status::Pass } else { Status::Fail };
    out.report(status, R { audit: &report, certificates })
}

#[derive(Serialize)]
struct AttemptRow {
    normal_sign: f64,
    #[serde(rename = "H")]
    big_h: f64,
    radius: f64,
    h: f64,
    boundary_margin: f64,
    center_margin: f64,
    sigma_margin: f64,
}

fn certify(out: &Output) -> Result<Status> {
    let c = out.config;
    let u = input_function(c)?;
    let node = u.grid().nearest(&vec![0.0; c.n]);
    let (outcome, touch) = certify_at(&u, node, c)?;
    let attempts: Vec<AttemptRow> = match &outcome {
        CertificateOutcome::Certified(cert) => vec![AttemptRow {
            normal_sign: 1.0,
            big_h: cert.big_h,
            radius: cert.radius,
            h: cert.h,
            boundary_margin: cert.margins.boundary,
            center_margin: cert.margins.center,
            sigma_margin: cert.margins.sigma,
        }],
        CertificateOutcome::Inconclusive(no) => no
            .attempts
            .iter()
            .map(|a| AttemptRow {
                normal_sign: a.normal_sign,
                big_h: a.big_h,
                radius: a.radius,
                h: a.h,
                boundary_margin: a.margins.boundary,
                center_margin: a.margins.center,
                sigma_margin: a.margins.sigma,
            })
            .collect(),
    };
    out.table("attempts", &attempts)?;
    let status = if outcome.certificate().is_some() { Status::Fail } else { Status::Pass };
    #[derive(Serialize)]
    struct R {
        node: usize,
        certificate: CertificateOutcome,
        touch: Option<crate::harness::TouchReport>,
    }
    out.report(status, R { node, certificate: outcome, touch })
}

#[derive(Serialize)]
struct IdentityRow {
    quantity: String,
    closed_form: f64,
    minors: f64,
    eigenvalues: f64,
    agree: bool,
}

fn identity(quantity: &str, closed_form: f64, q: &QuadraticForm) -> Result<IdentityRow> {
    let minors = sigma_k(q.hessian(), 2)?;
    let eig = elementary_symmetric(&eigenvalues(q.hessian()).values, 2);
    let scale = closed_form.abs().max(q.hessian().max_abs().powi(2)).max(f64::MIN_POSITIVE);
    let agree = (minors - closed_form).abs() <= 1e-12 * scale && (eig - closed_form).abs() <= 1e-12 * scale;
    Ok(IdentityRow { quantity: quantity.into(), closed_form, minors, eigenvalues: eig, agree })
}

fn barriers(out: &Output) -> Result<Status> {
    let c = out.config;
    let (n, h, big_h, delta) = (c.n, c.audit.h, c.audit.big_h, c.audit.delta);
    let m = (n - 1) as f64;
    let p = make_cylinder_barrier(h, big_h, n)?;
    let mut rows = vec![identity("sigma2(P_h)", 2.0 * m * (m - 1.0) * h * h + 16.0 * m * h * h / (big_h * big_h), &p)?];
    let h_star = crate::barrier::barrier_smallness_threshold(n, big_h);
    let p_star = make_cylinder_barrier(h_star, big_h, n)?;
    rows.push(identity(
        "sigma2(P_h*)",
        2.0 * m * (m - 1.0) * h_star * h_star + 16.0 * m * h_star * h_star / (big_h * big_h),
        &p_star,
    )?);
    let mut wall = None;
    if n >= 3 {
        let w = make_wdelta(delta, n)?;
        rows.push(identity("sigma2(w_delta)", 2.0 * delta * delta * (n - 2) as f64 * (n - 3) as f64, &w)?);
        wall = Some(make_wall_barrier(delta, n)?);
    }
    out.table("identities", &rows)?;
    let below_threshold = rows[1].minors < 1.0;
    #[derive(Serialize)]
    struct R<'a> {
        barrier: &'a QuadraticForm,
        sigma2: f64,
        h_star: f64,
        below_threshold: bool,
        wall_barrier: Option<QuadraticForm>,
        identities: &'a [IdentityRow],
    }
    let ok = rows.iter().all(|r| r.agree) && below_threshold;
    let status = if ok { Status::Pass } else { Status::Fail };
    out.report(status, R { barrier: &p, sigma2: rows[0].minors, h_star, below_threshold, wall_barrier: wall, identities: &rows })
}

fn pogorelov(out: &Output) -> Result<Status> {
    let c = out.config;
    let u = input_function(c)?;
    let origin = vec![0.0; c.n];
    let plane = supporting_plane(&u, u.grid().nearest(&origin))?;
    let w = make_wall_barrier(c.audit.delta, c.n)?.add(&plane.as_affine());
    let region = component_below(&u, &w, &origin)?;
    let value = pogorelov_functional(&u, &w, &region)?;
    let g = &c.gallery;
    let gallery = pogorelov_gallery(g.k, g.n, g.curvature)?;
    let profile = gallery_profile(&gallery, &g.distances)?;
    out.table("gallery", &profile)?;
    #[derive(Serialize)]
    struct R<'a> {
        barrier: &'a QuadraticForm,
        functional: crate::harness::PogorelovValue,
        gallery: &'a crate::barrier::AnalyticFunction,
        profile: &'a [crate::harness::GalleryRow],
    }
    out.report(Status::Complete, R { barrier: &w, functional: value, gallery: &gallery, profile: &profile })
}

fn modulus(out: &Output) -> Result<Status> {
    let c = out.config;
    let data = random_boundary_family(c.n, c.family.count, c.seed);
    let fields: Vec<Field> = data.iter().map(|d| d.field()).collect();
    let family = solve_family(c.n, &fields, c.resolution, &SolveOptions::default())?;
    let k_bound = c.audit.k_bound.unwrap_or_else(|| family.iter().map(|u| u.sup_norm()).fold(0.0, f64::max));
    let table = modulus_experiment(&family, k_bound, &[c.audit.r])?;
    out.table("table", &table.rows)?;
    out.table("members", &table.members)?;
    let status = if table.flagged_members().is_empty() { Status::Pass } else { Status::Fail };
    #[derive(Serialize)]
    struct R<'a> {
        data: &'a [crate::harness::RandomDatum],
        table: &'a crate::harness::ModulusTable,
    }
    out.report(status, R { data: &data, table: &table })
}

fn c2(out: &Output) -> Result<Status> {
    let c = out.config;
    let shape = c.function.field(c.n, 2)?;
    let cases: Vec<C2Case> = c
        .family
        .scales
        .iter()
        .map(|&scale| C2Case { label: c.function.label(), scale, shape: shape.clone() })
        .collect();
    let table = c2_at_origin_experiment(c.n, &cases, &c.family.resolutions, &SolveOptions::default())?;
    let audit = table.audit(c.family.bucket_width, c.family.refinement_tolerance);
    out.table("table", &table.rows)?;
    let status = if audit.bounded && audit.stable { Status::Pass } else { Status::Fail };
    #[derive(Serialize)]
    struct R<'a> {
        table: &'a crate::harness::C2Table,
        audit: &'a crate::harness::C2Audit,
    }
    out.report(status, R { table: &table, audit: &audit })
}
