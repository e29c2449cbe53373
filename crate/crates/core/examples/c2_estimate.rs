//! |D^2 u(0)| against sup |u| as the boundary data are scaled, at two resolutions.

use hessianlab::grid::field;
use hessianlab::harness::{c2_at_origin_experiment, C2Case};
use hessianlab::solver::SolveOptions;

fn main() -> hessianlab::Result<()> {
    let shape = field(|x: &[f64]| x[0] * x[0] + x[1] * x[1] + 0.5 * x[2] * x[2]);
    let cases: Vec<C2Case> = [1.0, 2.0]
        .iter()
        .map(|&scale| C2Case { label: "ellipsoid".into(), scale, shape: shape.clone() })
        .collect();
    let table = c2_at_origin_experiment(3, &cases, &[12, 16], &SolveOptions::default())?;
    for row in &table.rows {
        println!(
            "scale {} res {}: sup |u| {:.4}, |D^2 u(0)| {:.4}",
            row.scale, row.resolution, row.sup_norm, row.hessian_norm
        );
    }
    let audit = table.audit(0.5, 0.05);
    println!("bounded {}, stable {}, largest refinement change {:.2}%", audit.bounded, audit.stable, 100.0 * audit.max_refinement_change);
    Ok(())
}
