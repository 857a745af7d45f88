//! Gauss–Legendre rules.

use gauss_quad::legendre::GaussLegendre;
use std::num::NonZeroUsize;

/// Nodes and weights of the `n`-point rule on `[a, b]`.
pub(crate) fn gauss_legendre(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let n = NonZeroUsize::new(n).expect("rule needs at least one node");
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    GaussLegendre::new(n).iter().map(|&(x, w)| (mid + half * x, half * w)).collect()
}
