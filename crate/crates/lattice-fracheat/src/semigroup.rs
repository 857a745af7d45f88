//! Evolution `u(t) = G_t^(s) * u₀`, the error `R(t) = u(t) - M G_t^(s)` and
//! log-log rate fits.
//!
//! Evolution runs on the torus of the kernel slice, whose period is at least
//! `2(L_kernel + L_u₀) + 1`, so the datum never wraps onto itself.

use crate::fft;
use crate::kernel::{kernel_value, synthesize_kernel_with, BoxRule, KernelError, KernelSlice, SynthesisOptions};
use crate::lattice_core::{check_alloc, lp_norm, FracOrder, LatticeError, LatticeField, MAX_DIM};
use num_complex::Complex64;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};
use std::io::{self, Write};
use thiserror::Error;

/// Datum size above which convolution switches from direct sums to transforms.
const DIRECT_SUPPORT_MAX: usize = 256;

/// Residual above which a fit is flagged as preasymptotic.
pub const PREASYMPTOTIC_RESIDUAL: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SemigroupError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("value {value:.3e} at sweep index {index} is not a usable positive number")]
    DegenerateSweep { index: usize, value: f64 },
    #[error("a rate fit needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("sweep abscissae must be strictly increasing")]
    NotIncreasing,
}

impl From<LatticeError> for SemigroupError {
    fn from(e: LatticeError) -> Self {
        SemigroupError::Kernel(e.into())
    }
}

/// Minimum points for a sweep.
pub const MIN_SWEEP_POINTS: usize = 6;

/// `u(t)`, `R(t)` and the constants used to form them.
#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub t: f64,
    pub s: FracOrder,
    pub mass: f64,
    pub u_t: LatticeField,
    pub error_field: LatticeField,
    pub grid_n: usize,
    pub aliasing_estimate: f64,
}

impl EvolutionResult {
    pub fn raw_norm(&self, p: f64) -> f64 {
        self.error_field.norm(p)
    }

    /// `t^{(d/2s)(1-1/p)} ‖R(t)‖_p`.
    pub fn rescaled_norm(&self, p: f64) -> f64 {
        let d = self.u_t.dim();
        self.t.powf(self.s.rescaling_exponent(d, p)) * self.raw_norm(p)
    }
}

pub fn evolve(u0: &LatticeField, t: f64, s: FracOrder, tol: f64) -> Result<EvolutionResult, SemigroupError> {
    evolve_with(u0, t, s, tol, &SynthesisOptions::default())
}

pub fn evolve_with(
    u0: &LatticeField,
    t: f64,
    s: FracOrder,
    tol: f64,
    opts: &SynthesisOptions,
) -> Result<EvolutionResult, SemigroupError> {
    let d = u0.dim();
    let opts = SynthesisOptions {
        extra_radius: opts.extra_radius + u0.radius(),
        ..*opts
    };
    let kernel = synthesize_kernel_with(t, s, d, tol, &opts)?;
    let mass = u0.moments().mass;
    let u_t = convolve(&kernel, u0)?;
    let mut error_field = u_t.clone();
    for (e, g) in error_field.values_mut().iter_mut().zip(kernel.field.values()) {
        *e -= mass * g;
    }
    Ok(EvolutionResult {
        t,
        s,
        mass,
        u_t,
        error_field,
        grid_n: kernel.grid_n,
        aliasing_estimate: kernel.aliasing_estimate,
    })
}

/// Circular convolution of the kernel period with `u0`.
fn convolve(kernel: &KernelSlice, u0: &LatticeField) -> Result<LatticeField, SemigroupError> {
    let d = kernel.dim();
    let side = kernel.field.side();
    let support = u0.support();
    let mut out = LatticeField::zeros(d, kernel.radius())?;
    if support.len() <= DIRECT_SUPPORT_MAX {
        let vals = kernel.field.values();
        for (y, a) in support {
            let shifted = kernel.shift_difference(&y[..d]);
            for ((o, sh), g) in out.values_mut().iter_mut().zip(&shifted).zip(vals) {
                *o += a * (sh + g);
            }
        }
        return Ok(out);
    }
    check_alloc(32 * (side as u64).pow(d as u32))?;
    let r = kernel.radius() as i64;
    let to_torus = |x: &[i64]| x.iter().fold(0usize, |acc, &c| acc * side + (c.rem_euclid(side as i64)) as usize);
    let mut a = vec![Complex64::default(); side.pow(d as u32)];
    let mut b = a.clone();
    for (k, &v) in kernel.field.values().iter().enumerate() {
        let x = kernel.field.point(k);
        a[to_torus(&x[..d])] = Complex64::new(v, 0.0);
    }
    for (y, v) in support {
        let mut yy = [0i64; MAX_DIM];
        yy[..d].copy_from_slice(&y[..d]);
        b[to_torus(&yy[..d])] = Complex64::new(v, 0.0);
    }
    fft::fft_nd(&mut a, side, d, FftDirection::Forward);
    fft::fft_nd(&mut b, side, d, FftDirection::Forward);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    drop(b);
    fft::fft_nd(&mut a, side, d, FftDirection::Inverse);
    let scale = 1.0 / a.len() as f64;
    for k in 0..out.len() {
        let x = out.point(k);
        debug_assert!(x[..d].iter().all(|c| c.abs() <= r));
        out.values_mut()[k] = a[to_torus(&x[..d])].re * scale;
    }
    Ok(out)
}

/// `u(t, x)` on `ℤ^d` at selected points, from point values of the kernel.
pub fn evolve_at(
    u0: &LatticeField,
    t: f64,
    s: FracOrder,
    points: &[Vec<i64>],
    tol: f64,
) -> Result<Vec<f64>, SemigroupError> {
    let d = u0.dim();
    let support = u0.support();
    let mut out = Vec::with_capacity(points.len());
    let mut diff = vec![0i64; d];
    for x in points {
        let mut acc = 0.0;
        for (y, a) in &support {
            for j in 0..d {
                diff[j] = x[j] - y[j];
            }
            acc += a * kernel_value(t, s, &diff, tol)?;
        }
        out.push(acc);
    }
    Ok(out)
}

/// Abscissa used by a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitScale {
    /// `log v` against `log t`.
    LogLog,
    /// `log v` against `t`.
    SemiLog,
}

/// A sweep with its least-squares line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub scale: FitScale,
    pub times: Vec<f64>,
    pub raw: Vec<f64>,
    pub values: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
    pub preasymptotic: bool,
}

/// Fit summary written as JSON.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FitSummary {
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
    pub preasymptotic: bool,
}

impl RateReport {
    /// Ordinary least squares on `(x(t), log v)`.
    pub fn fit(scale: FitScale, times: Vec<f64>, raw: Vec<f64>, values: Vec<f64>) -> Result<Self, SemigroupError> {
        if times.len() < 2 {
            return Err(SemigroupError::TooFewPoints { needed: 2, got: times.len() });
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(SemigroupError::NotIncreasing);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 1e-300)) {
            return Err(SemigroupError::DegenerateSweep { index, value });
        }
        let xs: Vec<f64> = times
            .iter()
            .map(|&t| match scale {
                FitScale::LogLog => t.ln(),
                FitScale::SemiLog => t,
            })
            .collect();
        let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let max_residual = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - intercept - slope * x).abs())
            .fold(0.0, f64::max);
        Ok(Self {
            scale,
            times,
            raw,
            values,
            slope,
            intercept,
            max_residual,
            preasymptotic: max_residual > PREASYMPTOTIC_RESIDUAL,
        })
    }

    pub fn summary(&self) -> FitSummary {
        FitSummary {
            slope: self.slope,
            intercept: self.intercept,
            max_residual: self.max_residual,
            preasymptotic: self.preasymptotic,
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,raw_norm,rescaled_norm")?;
        for ((t, r), v) in self.times.iter().zip(&self.raw).zip(&self.values) {
            writeln!(w, "{t},{r},{v}")?;
        }
        Ok(())
    }
}

/// Dyadic times `2^lo, …, 2^hi`.
pub fn dyadic_times(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|k| 2f64.powi(k)).collect()
}

/// Kernel tolerance at time `t` for a tolerance relative to the peak scale
/// `t^{-d/(2s)}`.
pub fn scaled_tolerance(rel_tol: f64, t: f64, s: FracOrder, d: usize) -> f64 {
    (rel_tol * t.powf(-(d as f64) / (2.0 * s.value()))).clamp(2e-14, 9e-3)
}

/// Kernel tolerance along a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Accuracy {
    /// Relative to the peak scale `t^{-d/(2s)}`, see [`scaled_tolerance`].
    PeakRelative(f64),
    /// One absolute tolerance for every time. With a loose value the period
    /// stays at the box rule's `2L + 1`, so the sweep runs on a torus whose
    /// size grows like `t^{1/(2s)}`.
    Absolute(f64),
    /// The torus of period `2⌈c t^{1/(2s)}⌉ + 1` with no pad, so the torus
    /// scales exactly with the kernel width and the rescaled errors are
    /// those of a fixed periodic profile up to lattice corrections.
    SelfSimilarTorus(f64),
}

impl Accuracy {
    pub fn tolerance(self, t: f64, s: FracOrder, d: usize) -> f64 {
        match self {
            Accuracy::PeakRelative(r) => scaled_tolerance(r, t, s, d),
            Accuracy::Absolute(a) => a,
            Accuracy::SelfSimilarTorus(_) => 9e-3,
        }
    }

    pub fn options(self) -> SynthesisOptions {
        match self {
            Accuracy::SelfSimilarTorus(c_box) => SynthesisOptions {
                rule: Some(BoxRule { c_box, l_min: 0 }),
                fixed_period: true,
                ..Default::default()
            },
            _ => SynthesisOptions::default(),
        }
    }
}

/// Rescaled `ℓ^p` errors over the sweep, fitted in log-log coordinates.
pub fn rate_sweep(u0: &LatticeField, s: FracOrder, p: f64, times: &[f64], acc: Accuracy) -> Result<RateReport, SemigroupError> {
    let mut reports = rate_sweeps(u0, s, &[p], times, acc)?;
    Ok(reports.remove(0))
}

/// [`rate_sweep`] for several exponents sharing one evolution per time.
pub fn rate_sweeps(
    u0: &LatticeField,
    s: FracOrder,
    ps: &[f64],
    times: &[f64],
    acc: Accuracy,
) -> Result<Vec<RateReport>, SemigroupError> {
    if times.len() < MIN_SWEEP_POINTS {
        return Err(SemigroupError::TooFewPoints { needed: MIN_SWEEP_POINTS, got: times.len() });
    }
    let points = times.iter().map(|&t| sweep_point(u0, s, ps, t, acc)).collect::<Result<Vec<_>, _>>()?;
    fit_sweep_points(times, &points)
}

/// Raw and rescaled `ℓ^p` errors at one time, one pair per exponent.
pub fn sweep_point(u0: &LatticeField, s: FracOrder, ps: &[f64], t: f64, acc: Accuracy) -> Result<Vec<(f64, f64)>, SemigroupError> {
    let ev = evolve_with(u0, t, s, acc.tolerance(t, s, u0.dim()), &acc.options())?;
    Ok(ps.iter().map(|&p| (ev.raw_norm(p), ev.rescaled_norm(p))).collect())
}

/// One log-log fit per exponent from the output of [`sweep_point`].
pub fn fit_sweep_points(times: &[f64], points: &[Vec<(f64, f64)>]) -> Result<Vec<RateReport>, SemigroupError> {
    if times.len() < MIN_SWEEP_POINTS {
        return Err(SemigroupError::TooFewPoints { needed: MIN_SWEEP_POINTS, got: times.len() });
    }
    let np = points.first().map_or(0, Vec::len);
    (0..np)
        .map(|i| {
            let raw = points.iter().map(|pt| pt[i].0).collect();
            let values = points.iter().map(|pt| pt[i].1).collect();
            RateReport::fit(FitScale::LogLog, times.to_vec(), raw, values)
        })
        .collect()
}

/// Outcome of the qualitative convergence check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCheck {
    pub times: Vec<f64>,
    /// `‖R(t)‖_1`.
    pub l1_errors: Vec<f64>,
    /// `t^{d/2s} ‖R(t)‖_∞`.
    pub linf_rescaled: Vec<f64>,
    /// No step grows by more than 10%.
    pub monotone: bool,
    /// Last over first `ℓ¹` error.
    pub final_ratio: f64,
    /// Last over first rescaled `ℓ^∞` error.
    pub final_ratio_linf: f64,
    /// Informational fit of the `ℓ¹` errors, when they are all positive.
    pub report: Option<RateReport>,
}

impl ConvergenceCheck {
    /// Monotone within 10% jitter and final value below a quarter of the first.
    pub fn decreasing_to_small(&self) -> bool {
        self.monotone && self.final_ratio < 0.25
    }
}

/// Sweep of `ℓ¹` and rescaled `ℓ^∞` errors with no rate asserted.
pub fn no_moment_convergence_check(
    u0: &LatticeField,
    s: FracOrder,
    times: &[f64],
    acc: Accuracy,
) -> Result<ConvergenceCheck, SemigroupError> {
    let d = u0.dim();
    let mut l1 = Vec::with_capacity(times.len());
    let mut linf = Vec::with_capacity(times.len());
    for &t in times {
        let ev = evolve_with(u0, t, s, acc.tolerance(t, s, d), &acc.options())?;
        l1.push(ev.raw_norm(1.0));
        linf.push(ev.rescaled_norm(f64::INFINITY));
    }
    let monotone = l1.windows(2).all(|w| w[1] <= 1.1 * w[0]);
    let ratio = |v: &[f64]| if v[0] > 0.0 { v[v.len() - 1] / v[0] } else { 0.0 };
    let report = RateReport::fit(FitScale::LogLog, times.to_vec(), l1.clone(), l1.clone()).ok();
    Ok(ConvergenceCheck {
        times: times.to_vec(),
        final_ratio: ratio(&l1),
        final_ratio_linf: ratio(&linf),
        l1_errors: l1,
        linf_rescaled: linf,
        monotone,
        report,
    })
}

/// Truncation of `u₀(k e₁) ∝ max(|k|, 1)^{-(d+1)}` to `|k| <= radius`,
/// normalised to unit mass, with the `ℓ¹` mass the truncation discards.
pub fn heavy_tail_datum(d: usize, radius: usize) -> Result<(LatticeField, f64), LatticeError> {
    let q = d as i32 + 1;
    let w = |k: i64| (k.unsigned_abs().max(1) as f64).powi(-q);
    let kept: f64 = (-(radius as i64)..=radius as i64).map(w).sum();
    let zeta: f64 = 1.0 + 2.0 * riemann_zeta(q as f64);
    let mut u = LatticeField::zeros(d, radius)?;
    let mut x = [0i64; MAX_DIM];
    for k in -(radius as i64)..=radius as i64 {
        x[0] = k;
        u.set(&x[..d], w(k) / kept);
    }
    Ok((u, (zeta - kept) / zeta))
}

fn riemann_zeta(q: f64) -> f64 {
    let n = 100_000u64;
    let head: f64 = (1..=n).map(|k| (k as f64).powf(-q)).sum();
    head + (n as f64).powf(1.0 - q) / (q - 1.0) - 0.5 * (n as f64).powf(-q)
}

/// `‖v‖_p` over a slice; re-exported for reports built outside this module.
pub fn norm(values: &[f64], p: f64) -> f64 {
    lp_norm(values, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_evolves_to_kernel() {
        let u0 = LatticeField::delta(1, &[0], 0).unwrap();
        let ev = evolve(&u0, 4.0, FracOrder::ONE, 1e-10).unwrap();
        assert!(ev.error_field.norm(f64::INFINITY) < 1e-12);
        assert!((ev.u_t.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn direct_and_transform_convolution_agree() {
        let s = FracOrder::new(0.5).unwrap();
        let u0 = LatticeField::from_fn(1, 300, |x| 1.0 / (1.0 + (x[0] * x[0]) as f64)).unwrap();
        let ev = evolve(&u0, 3.0, s, 1e-8).unwrap();
        let kernel = synthesize_kernel_with(3.0, s, 1, 1e-8, &SynthesisOptions { extra_radius: 300, ..Default::default() }).unwrap();
        let mut direct = LatticeField::zeros(1, kernel.radius()).unwrap();
        for (y, a) in u0.support() {
            let sh = kernel.shift_difference(&y[..1]);
            for ((o, s), g) in direct.values_mut().iter_mut().zip(&sh).zip(kernel.field.values()) {
                *o += a * (s + g);
            }
        }
        for (a, b) in ev.u_t.values().iter().zip(direct.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn fit_recovers_power_law() {
        let times = dyadic_times(0, 6);
        let vals: Vec<f64> = times.iter().map(|t| 3.0 * t.powf(-0.75)).collect();
        let r = RateReport::fit(FitScale::LogLog, times.clone(), vals.clone(), vals).unwrap();
        assert!((r.slope + 0.75).abs() < 1e-12);
        assert!((r.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(!r.preasymptotic);
    }

    #[test]
    fn fit_rejects_underflow() {
        let t = dyadic_times(0, 6);
        let mut v = vec![1.0; 7];
        v[3] = 0.0;
        assert!(matches!(
            RateReport::fit(FitScale::LogLog, t, v.clone(), v),
            Err(SemigroupError::DegenerateSweep { index: 3, .. })
        ));
    }

    #[test]
    fn sweep_needs_six_points() {
        let u0 = LatticeField::delta(1, &[1], 0).unwrap();
        assert!(matches!(
            rate_sweep(&u0, FracOrder::ONE, 1.0, &[1.0, 2.0], Accuracy::PeakRelative(1e-6)),
            Err(SemigroupError::TooFewPoints { .. })
        ));
    }

    #[test]
    fn heavy_tail_is_normalised() {
        let (u, cut) = heavy_tail_datum(1, 100).unwrap();
        assert!((u.sum() - 1.0).abs() < 1e-12);
        assert!(cut > 0.0 && cut < 0.01);
    }
}
