//! Flat-set dimension audit: x1^2 + x2^2 is flat along x3 only, x3^2 is flat in a plane.

use hessianlab::grid::{Domain, Grid, GridFunction};
use hessianlab::harness::{strict_2convexity_audit, AuditOptions};

fn main() -> hessianlab::Result<()> {
    let grid = Grid::new(3, 16, 1.0)?;
    let domain = Domain::Box { half_width: 1.0 };
    let cases: [(&str, fn(&[f64]) -> f64); 2] = [("x1^2 + x2^2", |x| x[0] * x[0] + x[1] * x[1]), ("x3^2", |x| x[2] * x[2])];
    for (name, f) in cases {
        let u = GridFunction::sample(grid, domain, f);
        let samples = [grid.nearest(&[0.0; 3]), grid.nearest(&[0.25, -0.5, 0.0])];
        let report = strict_2convexity_audit(&u, &samples, &AuditOptions::default())?;
        println!("{name}: max dimension {} (allowed {}), pass {}", report.max_dimension, u.dim() - 2, report.pass);
        for s in &report.samples {
            let fit = s.finest();
            let widths: Vec<String> = fit.widths.iter().map(|w| format!("{w:.2e}")).collect();
            println!("  at {:?}: dimension {}, widths [{}]", s.point, s.dimension, widths.join(", "));
        }
    }
    Ok(())
}
