//! Dirichlet problem on the middle three vertices of a five-vertex path:
//! spectrum, first-mode remainder and renormalised convergence.

use lattice_fracheat::graph_dirichlet::{dirichlet_operator, first_mode_report, spectral_solve, WeightedGraph};
use lattice_fracheat::FracOrder;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = WeightedGraph::path(5);
    let times: Vec<f64> = (0..10).map(|k| 6.0 + 2.0 * k as f64).collect();
    for s in [0.5, 1.0] {
        let op = dirichlet_operator(&g, &[1, 2, 3], FracOrder::new(s)?)?;
        let spec = spectral_solve(&op)?;
        let rep = first_mode_report(&op, &spec, &[1.0, 0.2, -0.5], 2.0, &times)?;
        println!("s = {s}: eigenvalues {:?}", spec.eigenvalues);
        println!("  remainder slope {:.6} vs -mu2 = {:.6}", rep.remainder.slope, -rep.mu2);
        if let Some(r) = &rep.renormalized {
            println!("  renormalised slope {:.6} vs -(mu2 - mu1) = {:.6}", r.slope, -spec.gap());
        }
        println!("  max |R(t)|_2 / (e^(-mu2 t) |u0|_2) = {:.6}", rep.l2_ratio_max);
    }
    Ok(())
}
