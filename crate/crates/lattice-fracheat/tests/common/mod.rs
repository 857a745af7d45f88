//! Reference values computed without the library's transforms.

#![allow(dead_code)]

use std::f64::consts::PI;

fn ln_factorial(n: u64) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// `e^{-z} I_ν(z)` for integer `ν >= 0` and `z >= 0`: the power series in
/// log space for moderate `z`, the Hankel expansion beyond.
pub fn scaled_bessel_i(nu: u64, z: f64) -> f64 {
    if z == 0.0 {
        return if nu == 0 { 1.0 } else { 0.0 };
    }
    if z > 2000.0 {
        let mu = 4.0 * (nu * nu) as f64;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..30 {
            let odd = (2 * k - 1) as f64;
            term *= -(mu - odd * odd) / (k as f64 * 8.0 * z);
            sum += term;
            if term.abs() < 1e-17 {
                break;
            }
        }
        return sum / (2.0 * PI * z).sqrt();
    }
    let lz = (0.5 * z).ln();
    let mut sum = 0.0;
    let mut m = 0u64;
    let mut lf_m = 0.0;
    let mut lf_mn = ln_factorial(nu);
    loop {
        let lt = (2 * m + nu) as f64 * lz - lf_m - lf_mn - z;
        let t = lt.exp();
        sum += t;
        if m as f64 > 0.5 * z && t < 1e-18 * sum {
            break;
        }
        m += 1;
        lf_m += (m as f64).ln();
        lf_mn += ((m + nu) as f64).ln();
    }
    sum
}

/// `e^{-2t} I_x(2t)`, the `s = 1` kernel on `ℤ`.
pub fn bessel_kernel(t: f64, x: i64) -> f64 {
    scaled_bessel_i(x.unsigned_abs(), 2.0 * t)
}

/// The `s = 1/2` kernel on `ℤ` by subordination,
/// `∫₀^∞ t/(2√π) r^{-3/2} e^{-t²/(4r)} e^{-2r} I_x(2r) dr`,
/// with `r = e^u` and the trapezoid rule in `u`.
pub fn subordinated_half(t: f64, x: i64) -> f64 {
    let h = 0.02;
    let (lo, hi) = ((t * t / 4.0 / 800.0).ln(), 30.0f64);
    let n = ((hi - lo) / h).ceil() as usize;
    let mut sum = 0.0;
    for k in 0..=n {
        let u = lo + k as f64 * h;
        let r = u.exp();
        let eta = t / (2.0 * PI.sqrt()) * r.powf(-1.5) * (-t * t / (4.0 * r)).exp();
        let w = if k == 0 || k == n { 0.5 } else { 1.0 };
        sum += w * eta * bessel_kernel(r, x) * r;
    }
    let tail = t / (4.0 * PI) * hi.exp().recip();
    sum * h + tail
}

/// `(4π)^{-1/2} e^{-η²/4}`.
pub fn gaussian_profile(eta: f64) -> f64 {
    (-eta * eta / 4.0).exp() / (4.0 * PI).sqrt()
}

/// `1/(π (1 + η²))`.
pub fn cauchy_profile(eta: f64) -> f64 {
    1.0 / (PI * (1.0 + eta * eta))
}

/// `sup_η (4π)^{-1/2} (|η|/2) e^{-η²/4}` by a fine scan.
pub fn gaussian_derivative_sup() -> f64 {
    (0..=400_000)
        .map(|k| {
            let eta = k as f64 * 1e-5;
            0.5 * eta * (-eta * eta / 4.0).exp() / (4.0 * PI).sqrt()
        })
        .fold(0.0, f64::max)
}

/// `∫ |∂Φ_{1/2}| = ∫ 2|η|/(π(1+η²)²) dη = 2/π`.
pub fn cauchy_derivative_l1() -> f64 {
    2.0 / PI
}

/// Dirichlet eigenvalues of the path with `n` interior vertices.
pub fn path_dirichlet_eigenvalues(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|k| 4.0 * (k as f64 * PI / (2.0 * (n + 1) as f64)).sin().powi(2))
        .collect()
}
