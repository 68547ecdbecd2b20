//! Divisible sandpile on two overlapping unit squares: the occupied set from
//! the stationary odometer problem and from direct toppling.

use l1pde::applications::sandpile::DEFAULT_MAX_SWEEPS;
use l1pde::applications::{sandpile_solve, sandpile_topple, SandpileProblem};
use l1pde::schemes::SolverConfig;

fn main() -> l1pde::Result<()> {
    let p = SandpileProblem::two_squares(128)?;
    let grid = *p.grid();
    let cfg = SolverConfig::new(l1pde::schemes::Scheme::Dr, 0.2 * grid.spacing(), 1.0, 1.0);
    let sol = sandpile_solve(&p, &cfg)?;
    let top = sandpile_topple(&p, None, DEFAULT_MAX_SWEEPS)?;

    println!("DR iterations      {}", sol.iterations);
    println!("support measure    {:.5}", sol.mass.support_measure);
    println!("injected mass      {:.5}", sol.mass.injected_mass);
    println!("relative mismatch  {:.2e}", sol.mass.relative_error);
    println!("toppling sweeps    {}", top.sweeps);
    println!("Jaccard (DR, topple) {:.4}", sol.support.jaccard(&top.occupied));
    Ok(())
}
