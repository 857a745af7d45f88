//! Builds the slowly converging datum for `φ(t) = t^{-1/4}` and checks the
//! lower bound at each level.

use lattice_fracheat::counterexample::{build_slow_datum, verify_slow_bound};
use lattice_fracheat::FracOrder;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let phi = |t: f64| t.powf(-0.25);
    let sd = build_slow_datum(phi, FracOrder::ONE, 1, 4)?;
    println!("rho* = {}, c* = {:.6}, T* = {}", sd.rho_star, sd.c_star, sd.t_star);
    for k in 1..=sd.levels() {
        let b = verify_slow_bound(&sd, k, phi)?;
        println!(
            "k = {k}: t = 2^{:.0}, x = {}, lhs = {:.4e}, rhs = {:.4e}, pass = {}",
            b.t.log2(),
            sd.sites[k - 1][0],
            b.lhs,
            b.rhs,
            b.pass
        );
    }
    Ok(())
}
