//! The Pogorelov functional (w - u)^4 |D^2 u| for a solution against the wall barrier.

use hessianlab::barrier::make_wall_barrier;
use hessianlab::grid::{constant_field, field, Domain};
use hessianlab::harness::{component_below, pogorelov_functional, supporting_plane};
use hessianlab::solver::{solve_dirichlet, DirichletProblem, SolveOptions};

fn main() -> hessianlab::Result<()> {
    let g = field(|x: &[f64]| 0.4 * (x[0] * x[0] + x[1] * x[1]) + 0.2 * x[2] * x[2]);
    let p = DirichletProblem::new(3, 2, Domain::Ball { radius: 1.0 }, constant_field(1.0), g)?;
    for res in [12, 16] {
        let (u, _) = solve_dirichlet(&p, res, &SolveOptions::default())?;
        let plane = supporting_plane(&u, u.grid().nearest(&[0.0; 3]))?;
        let w = make_wall_barrier(1.0, 3)?.add(&plane.as_affine());
        let region = component_below(&u, &w, &[0.0; 3])?;
        let value = pogorelov_functional(&u, &w, &region)?;
        println!("res {res}: {} nodes below w, max {:.4e} at {:?}", value.nodes, value.value, u.point(value.argmax));
    }
    Ok(())
}
