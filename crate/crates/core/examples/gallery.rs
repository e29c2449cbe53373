//! Pogorelov-type k-convex functions with a flat (n-k+1)-plane: the Hessian blows up
//! at the flat set while sigma_k stays bounded.

use hessianlab::barrier::pogorelov_gallery;
use hessianlab::harness::gallery_profile;

fn main() -> hessianlab::Result<()> {
    for (k, n) in [(3, 4), (3, 5), (4, 5)] {
        let f = pogorelov_gallery(k, n, 1.0)?;
        println!("k={k} n={n}: exponent {:.4}, flat dimension {:?}", f.exponent().unwrap(), f.flat_dimension());
        for row in gallery_profile(&f, &[1e-1, 1e-2, 1e-3])? {
            println!(
                "  |x'| = {:.0e}: |D^2 f| {:10.3}, sigma_k in [{:.4}, {:.4}]",
                row.distance, row.hessian_norm, row.sigma_min, row.sigma_max
            );
        }
    }
    Ok(())
}
