//! Solves sigma_2(D^2 u) = 1 on the unit ball with radial and non-radial boundary data.

use hessianlab::cli::radial_coefficient;
use hessianlab::grid::{constant_field, field, Domain};
use hessianlab::solver::{solve_dirichlet, DirichletProblem, SolveOptions};

fn main() -> hessianlab::Result<()> {
    let n = 3;
    let alpha = radial_coefficient(n, 2);
    let radial = field(move |x: &[f64]| 0.5 * alpha * x.iter().map(|v| v * v).sum::<f64>());
    let tilted = field(|x: &[f64]| 0.3 * (x[0] + 0.5 * x[2]).exp());

    for (name, g) in [("radial", radial.clone()), ("exponential", tilted)] {
        let p = DirichletProblem::new(n, 2, Domain::Ball { radius: 1.0 }, constant_field(1.0), g)?;
        let (u, report) = solve_dirichlet(&p, 16, &SolveOptions::default())?;
        println!(
            "{name}: {} unknowns, {} sweeps, residual {:.2e}, damping {:?}",
            report.unknowns, report.iterations, report.residual, report.damping_history
        );
        let centre = u.grid().nearest(&[0.0; 3]);
        println!("  u(0) = {:.6}", u.value(centre));
        if name == "radial" {
            let err = u.domain_nodes().map(|i| (u.value(i) - radial(&u.point(i))).abs()).fold(0.0, f64::max);
            println!("  max error against alpha|x|^2/2: {err:.2e}");
        }
    }
    Ok(())
}
