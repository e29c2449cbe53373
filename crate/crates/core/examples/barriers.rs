//! The cylinder barrier P_h, its smallness threshold, and the 2-convex saddle w_delta.

use hessianlab::barrier::{
    barrier_sigma2_value, barrier_smallness_threshold, make_cylinder_barrier, make_wdelta, Cylinder,
};
use hessianlab::hessian::{cone_membership, eigenvalues, sigma_k, ConeMode};

fn main() -> hessianlab::Result<()> {
    let (n, big_h) = (3, 1.0);
    let h_star = barrier_smallness_threshold(n, big_h);
    println!("n={n} H={big_h}: h* = {h_star}");
    for h in [0.5 * h_star, h_star, 4.0 * h_star] {
        let p = make_cylinder_barrier(h, big_h, n)?;
        let closed = barrier_sigma2_value(h, big_h, n)?;
        let minors = sigma_k(p.hessian(), 2)?;
        let boundary = Cylinder::new(1.0, big_h)?.boundary_samples(n, 8, 16, 4);
        let min = boundary.iter().map(|y| p.eval(y)).fold(f64::INFINITY, f64::min);
        println!("  h={h:.5}: sigma_2 closed form {closed:.6}, minors {minors:.6}, min on boundary {min:.5}");
    }

    for delta in [1e-3, 1.0] {
        let w = make_wdelta(delta, 5)?;
        let cone = cone_membership(w.hessian(), 2)?;
        println!(
            "w_delta n=5 delta={delta}: eigenvalues {:?}, sigma_1 {:.3e}, sigma_2 {:.3e}, closed 2-cone {}",
            eigenvalues(w.hessian()).values,
            cone.sigmas[0],
            cone.sigmas[1],
            cone.holds(ConeMode::Closed)
        );
    }
    Ok(())
}
