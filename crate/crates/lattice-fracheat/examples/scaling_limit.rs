//! Rescaled kernels approach the stable profile, and the rescaled first
//! increment approaches `‖∂₁Φ_s‖_p`.

use lattice_fracheat::stable_profile::{optimality_constant, ScalingLimitProbe, StableProfileEvaluator};
use lattice_fracheat::FracOrder;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for s in [0.5, 1.0] {
        let s = FracOrder::new(s)?;
        let ev = StableProfileEvaluator::new(s, 1, 1e-10)?;
        let probe = ScalingLimitProbe::new(&ev, 2.0);
        for e in [6, 8, 10, 12] {
            let t = 2f64.powi(e);
            println!("s = {}, t = 2^{e}: sup |t^(1/2s) G_t - Phi| = {:.3e}", s.value(), probe.error_at(t, 1e-4)?);
        }
    }
    let half = FracOrder::new(0.5)?;
    let c = optimality_constant(4096.0, half, 1, 1.0, 1e-4)?;
    println!("s = 0.5, p = 1: constant {c:.6} vs 2/pi = {:.6}", 2.0 / std::f64::consts::PI);
    let g = optimality_constant(4096.0, FracOrder::ONE, 1, f64::INFINITY, 1e-4)?;
    let sup = StableProfileEvaluator::new(FracOrder::ONE, 1, 1e-10)?.derivative_norm(f64::INFINITY, 6.0, 1e-3);
    println!("s = 1, p = inf: constant {g:.6} vs sup |d Phi| = {sup:.6}");
    Ok(())
}
