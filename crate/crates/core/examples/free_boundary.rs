//! Small-time motion of the free boundary `a(t) = a0 + a1 sqrt(t)` for a
//! Gaussian forcing, fitted from simulations and compared with the
//! quadrature value of `a1`.

use l1pde::analytic::free_boundary_a1;
use l1pde::studies::{free_boundary_study, FreeBoundarySetup};

fn main() -> l1pde::Result<()> {
    let est = free_boundary_a1()?;
    println!("quadrature a1 = {:.6} (error estimate {:.1e})", est.a1, est.report.quadrature_error);

    let rows = free_boundary_study(&FreeBoundarySetup::default(), &[256, 512, 1024, 2048])?;
    println!("{:>6} {:>10} {:>10} {:>10}", "n", "a0", "a1", "beta");
    for r in &rows {
        println!("{:>6} {:>10.5} {:>10.5} {:>10.4}", r.n, r.a0, r.a1, r.beta);
    }
    Ok(())
}
