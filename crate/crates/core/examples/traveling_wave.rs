//! Traveling wave of `u_t = u_xx - gamma sign(u)` against its closed form,
//! over a short refinement ladder.
//!
//! ```text
//! cargo run --release --example traveling_wave
//! ```

use l1pde::studies::{traveling_wave_study, TravelingWaveSetup};

fn main() -> l1pde::Result<()> {
    let setup = TravelingWaveSetup::default();
    let study = traveling_wave_study(&setup, &[100, 200, 400, 800])?;
    println!("{:>6} {:>12} {:>12} {:>12} {:>12}", "n", "h", "L1", "L2", "Linf");
    for r in &study.rows {
        println!(
            "{:>6} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
            r.n, r.h, r.errors[0], r.errors[1], r.errors[2]
        );
    }
    println!("observed orders: {:.3} {:.3} {:.3}", study.slopes[0], study.slopes[1], study.slopes[2]);
    Ok(())
}
