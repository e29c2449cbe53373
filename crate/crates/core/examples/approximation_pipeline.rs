//! Smooth approximations of a degenerate target: solve with mollified boundary traces
//! at widths 2^-j and watch the successive differences shrink.

use hessianlab::grid::field;
use hessianlab::solver::{approximation_pipeline, SolveOptions};

fn main() -> hessianlab::Result<()> {
    let target = field(|x: &[f64]| (x[0].abs() - 0.1).max(0.0).powi(2) + x[1] * x[1]);
    let levels = approximation_pipeline(2, 1.0, target, 3, 24, &SolveOptions::default())?;
    let mut previous: Option<&hessianlab::grid::GridFunction> = None;
    for level in &levels {
        let diff = previous.map(|p| p.distance_where(&level.solution, |_| true));
        println!(
            "j={} width {:.3}: {} sweeps, residual {:.1e}, sup difference to previous {}",
            level.level,
            level.width,
            level.report.iterations,
            level.report.residual,
            diff.map_or("-".to_string(), |d| format!("{d:.3e}"))
        );
        previous = Some(&level.solution);
    }
    Ok(())
}
