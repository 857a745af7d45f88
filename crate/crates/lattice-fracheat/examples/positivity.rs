//! Positivity of the Dirichlet semigroup on a 5x5 grid with the 3x3
//! interior, for local and fractional orders.

use lattice_fracheat::graph_dirichlet::{dirichlet_operator, positivity_improving_check, WeightedGraph};
use lattice_fracheat::FracOrder;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = WeightedGraph::grid_box(5);
    let omega: Vec<usize> = (1..4).flat_map(|i| (1..4).map(move |j| 5 * i + j)).collect();
    for s in [0.3, 0.5, 1.0] {
        let op = dirichlet_operator(&g, &omega, FracOrder::new(s)?)?;
        let rep = positivity_improving_check(&op, &[0.01, 1.0, 10.0]);
        println!(
            "s = {s}: min entries {:?}, complete pattern {}, positive {}",
            rep.min_entries, rep.complete_pattern, rep.positive
        );
    }
    Ok(())
}
