//! sigma_k of a symmetric matrix by principal minors and by eigenvalues, cone tests
//! and the tangent map of sqrt(sigma_2).

use hessianlab::hessian::{
    cone_membership, eigenvalues, elementary_symmetric, sigma_k, support_linearization, ConeMode, SymmetricMatrix,
};

fn main() -> hessianlab::Result<()> {
    let m = SymmetricMatrix::from_rows(&[
        vec![2.0, 0.5, 0.0],
        vec![0.5, 1.0, -0.3],
        vec![0.0, -0.3, -0.4],
    ])?;
    let lambda = eigenvalues(&m).values;
    println!("eigenvalues {lambda:.4?}");
    for k in 1..=3 {
        let minors = sigma_k(&m, k)?;
        let spectral = elementary_symmetric(&lambda, k);
        let cone = cone_membership(&m, k)?;
        println!(
            "k={k}: minors {minors:+.6}  eigenvalues {spectral:+.6}  open cone {}  closed cone {}",
            cone.in_open_cone,
            cone.holds(ConeMode::Closed)
        );
    }

    let op = support_linearization(&m)?;
    let other = SymmetricMatrix::diagonal(&[1.0, 1.0, 1.0]);
    println!(
        "tangent at M: {:.6} = sqrt(sigma_2(M)) {:.6}; at I: {:.6} >= {:.6}",
        op.apply(&m),
        sigma_k(&m, 2)?.sqrt(),
        op.apply(&other),
        sigma_k(&other, 2)?.sqrt()
    );
    Ok(())
}
