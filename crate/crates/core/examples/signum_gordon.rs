//! Signum-Gordon oscillon by leapfrog-shrink: the support stays compact and
//! the scheme converges at second order against a fine reference.

use l1pde::studies::{signum_gordon_study, SignumGordonSetup};

fn main() -> l1pde::Result<()> {
    let setup = SignumGordonSetup { reference_n: 8192, ..Default::default() };
    let s = signum_gordon_study(&setup, &[128, 256, 512, 1024])?;
    for (n, e) in s.ns.iter().zip(&s.errors) {
        println!("n = {n:>5}  L2 error {e:.3e}");
    }
    println!("ratios {:?}", s.ratios);
    println!("reference support {:.4}", s.reference_support);
    Ok(())
}
