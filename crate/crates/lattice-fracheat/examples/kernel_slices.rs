//! Synthesises heat kernels for several orders and prints their mass,
//! peak, aliasing estimate and the first increment.

use lattice_fracheat::kernel::synthesize_kernel;
use lattice_fracheat::FracOrder;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for s in [0.5, 0.75, 1.0] {
        let s = FracOrder::new(s)?;
        for t in [4.0, 64.0, 1024.0] {
            let k = synthesize_kernel(t, s, 1, 1e-9)?;
            let inc = k.increment(&[1], 1.0)?;
            println!(
                "s = {:.2}, t = {t:>6}: N = {:>8}, mass - 1 = {:+.1e}, G(0) = {:.6e}, aliasing = {:.1e}, |G(.-1) - G|_1 = {:.4e}",
                s.value(),
                k.grid_n,
                k.mass() - 1.0,
                k.value(&[0]),
                k.aliasing_estimate,
                inc.lp
            );
        }
    }
    Ok(())
}
