//! Stationary problem `-u'' + gamma sign(u) = f` with `f = (1 + x^2)^{-3/2}`,
//! solved by Douglas-Rachford and compared with the exact compactly
//! supported solution.

use l1pde::analytic::{elliptic_forcing, elliptic_support_radius, exact_elliptic, support_bound_elliptic};
use l1pde::diagnostics::{error_norm, stationary_inclusion_violation};
use l1pde::schemes::{dr_solve_stationary, SolverConfig};
use l1pde::{support, Field, Grid, Norm};

fn main() -> l1pde::Result<()> {
    let gamma = 0.5;
    let grid = Grid::line(2048, -8.0, 8.0)?;
    let f = Field::from_fn_1d(grid, elliptic_forcing)?;
    let sol = dr_solve_stationary(&f, &SolverConfig::stationary(&grid, gamma), &Field::zeros(grid))?;

    let err = error_norm(&sol.u, |x, _| exact_elliptic(x, gamma).unwrap_or(f64::NAN), Norm::Linf);
    let s = support(&sol.u);
    println!("iterations        {}", sol.iterations);
    println!("max error         {err:.3e}");
    println!("support measure   {:.6} (exact {:.6})", s.measure(), 2.0 * elliptic_support_radius(gamma)?);
    println!("support bound     {:.6}", support_bound_elliptic(&f, gamma, 1.0, 0.0)?);
    println!("inclusion check   {:.3e}", stationary_inclusion_violation(&sol.u, &f, gamma)?);
    Ok(())
}
