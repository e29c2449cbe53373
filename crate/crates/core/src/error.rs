use thiserror::Error;

use crate::hessian::ConeReport;
use crate::solver::SolveReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The linearization was requested outside the open cone, or too close to its boundary.
    #[error("matrix leaves the Garding cone (sigmas = {:?})", .0.sigmas)]
    ConeExit(ConeReport),

    #[error("stencil at node {node} leaves the domain")]
    BoundaryProximity { node: usize },

    #[error("solver did not converge after {} sweeps (residual {:.3e})", .0.iterations, .0.residual)]
    Convergence(Box<SolveReport>),

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("grid function is not convex at node {node} (support violation {violation:.3e})")]
    NonConvex { node: usize, violation: f64 },

    #[error("node {node} is outside the region {{u < w}}")]
    Region { node: usize },

    #[error("malformed grid file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
