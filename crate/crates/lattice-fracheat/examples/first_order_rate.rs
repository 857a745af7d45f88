//! Rate sweeps for `u₀ = δ_{e₁}`: the rescaled error falls like
//! `t^{-1/(2s)}` in every `ℓ^p`.

use lattice_fracheat::semigroup::{dyadic_times, rate_sweeps, Accuracy};
use lattice_fracheat::{FracOrder, LatticeField};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let times = dyadic_times(6, 11);
    let ps = [1.0, 2.0, f64::INFINITY];
    for d in [1, 2] {
        for s in [0.5, 1.0] {
            let s = FracOrder::new(s)?;
            let acc = if d == 2 && !s.is_local() { Accuracy::SelfSimilarTorus(1.0) } else { Accuracy::PeakRelative(1e-4) };
            let mut e1 = vec![0i64; d];
            e1[0] = 1;
            let u0 = LatticeField::delta(d, &e1, 0)?;
            for (p, r) in ps.iter().zip(rate_sweeps(&u0, s, &ps, &times, acc)?) {
                println!(
                    "d = {d}, s = {}, p = {p}: slope {:.4} (expected {:.4}), max residual {:.1e}",
                    s.value(),
                    r.slope,
                    -1.0 / (2.0 * s.value()),
                    r.max_residual
                );
            }
        }
    }
    Ok(())
}
