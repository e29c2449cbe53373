//! Flat-set modulus over a seeded family of random quadratic-plus-quartic boundary data.

use hessianlab::harness::{modulus_experiment, random_boundary_family, solve_family};
use hessianlab::solver::SolveOptions;

fn main() -> hessianlab::Result<()> {
    let n = 3;
    let data = random_boundary_family(n, 4, 7);
    let fields: Vec<_> = data.iter().map(|d| d.field()).collect();
    let family = solve_family(n, &fields, 16, &SolveOptions::default())?;
    let k_bound = family.iter().map(|u| u.sup_norm()).fold(0.0, f64::max);
    let table = modulus_experiment(&family, k_bound, &[0.2, 0.1])?;
    for row in &table.rows {
        println!("r = {}: delta = {:.3e} (member {}), {} flagged", row.r, row.delta, row.argmin, row.flagged);
    }
    println!("flagged members: {:?}", table.flagged_members());
    Ok(())
}
