//! A datum without first moment: the `ℓ¹` error still tends to zero, with
//! no rate asserted.

use lattice_fracheat::semigroup::{dyadic_times, heavy_tail_datum, no_moment_convergence_check, Accuracy};
use lattice_fracheat::FracOrder;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (u0, cut) = heavy_tail_datum(1, 2000)?;
    println!("truncated mass fraction {cut:.2e}");
    let chk = no_moment_convergence_check(&u0, FracOrder::ONE, &dyadic_times(4, 12), Accuracy::PeakRelative(1e-6))?;
    for (t, e) in chk.times.iter().zip(&chk.l1_errors) {
        println!("t = {t:>6}: |u(t) - M G_t|_1 = {e:.4e}");
    }
    println!("final / first = {:.3}, monotone = {}", chk.final_ratio, chk.monotone);
    Ok(())
}
