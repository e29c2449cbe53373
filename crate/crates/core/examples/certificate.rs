//! Builds a barrier certificate for a function whose flat set is too large.

use hessianlab::grid::{Domain, Grid, GridFunction};
use hessianlab::harness::{affine_fit, sublevel_flat_set, supporting_plane, theorem1_certificate, CertificateOutcome};

fn main() -> hessianlab::Result<()> {
    let u = GridFunction::sample(Grid::new(3, 32, 1.0)?, Domain::Box { half_width: 1.0 }, |x| x[2].abs());
    let origin = u.grid().nearest(&[0.0; 3]);
    let plane = supporting_plane(&u, origin)?;
    let set = sublevel_flat_set(&u, &plane, 1e-4 * u.osc());
    let points: Vec<Vec<f64>> = set.iter().map(|&i| u.point(i)).collect();
    let fit = affine_fit(&points, Some(&plane.base), 0.5 * u.spacing())?;
    println!("flat set: {} nodes, dimension {}", set.len(), fit.dimension);

    match theorem1_certificate(&u, &plane, &fit)? {
        CertificateOutcome::Certified(c) => {
            println!("certified: H = {}, radius = {:.3}, h = {:.3e}, sigma_2(P) = {:.3e}", c.big_h, c.radius, c.h, c.sigma2);
            println!("margins: boundary {:.2e}, centre {:.2e}, sigma {:.3}", c.margins.boundary, c.margins.center, c.margins.sigma);
            println!("normal: {:?}", c.frame[2]);
            if let Some(t) = &c.touching {
                println!("touches from above at {:?} after lifting by {:.2e}", u.point(t.node), t.lift);
            }
        }
        CertificateOutcome::Inconclusive(why) => println!("inconclusive: {}", why.reason),
    }
    Ok(())
}
