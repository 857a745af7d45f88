//! A datum whose rescaled error decays slower than any prescribed profile.
//!
//! For a decreasing `φ`, the datum `(1 - δ) δ₀ + Σ m_k δ_{-x_k}` places mass
//! `m_k` at distance `t_k^{1/(2s)} ρ*`, where the kernel has dropped to a
//! quarter of its peak. At `t_k` the error at the origin is then at least
//! `m_k c* t_k^{-d/(2s)} >= 2 k φ(t_k) t_k^{-d/(2s)}`.

use crate::kernel::{kernel_value, synthesize_kernel, KernelError};
use crate::lattice_core::{FracOrder, LatticeError, LatticeField, MAX_DIM};
use crate::semigroup::{rate_sweep, Accuracy, FitScale, RateReport, SemigroupError};
use crate::stable_profile::{read_kernel, ProfileError, StableProfileEvaluator};
use serde::Serialize;
use thiserror::Error;

/// Largest supported number of levels.
pub const MAX_LEVELS: usize = 8;
/// Largest dyadic exponent tried for `T*`.
pub const T_STAR_MAX_EXP: i32 = 16;
/// Largest dyadic exponent tried for `t_k`.
pub const TIME_MAX_EXP: i32 = 1000;
/// Scan step for `ρ*`.
pub const RHO_STEP: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CounterexampleError {
    #[error("no ρ <= 100 with Φ_s(ρ e₁) <= Φ_s(0)/4")]
    ScanExhausted,
    #[error("no dyadic time up to 2^{max_exp} satisfies the {what} condition")]
    NotReached { what: &'static str, max_exp: i32 },
    #[error("level {level} needs {required_mb} MiB, cap is {cap_mb} MiB; achieved {achieved} levels")]
    BoxOverflow { level: usize, achieved: usize, required_mb: u64, cap_mb: u64 },
    #[error("level count must lie in 1..={MAX_LEVELS}, got {0}")]
    InvalidLevels(usize),
    #[error("profile must be positive, finite and decreasing on [1, ∞)")]
    InvalidProfile,
    #[error("level {0} not built")]
    MissingLevel(usize),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Semigroup(#[from] SemigroupError),
}

impl From<LatticeError> for CounterexampleError {
    fn from(e: LatticeError) -> Self {
        CounterexampleError::Kernel(e.into())
    }
}

/// Profile accuracy used inside the builder.
pub const PROFILE_TOL: f64 = 1e-10;
/// Kernel accuracy relative to the peak scale.
pub const KERNEL_REL_TOL: f64 = 1e-9;

fn kernel_tol(t: f64, s: FracOrder, d: usize) -> f64 {
    (KERNEL_REL_TOL * t.powf(-(d as f64) / (2.0 * s.value()))).clamp(2e-14, 9e-3)
}

/// The constructed datum and its constants.
#[derive(Debug, Clone, Serialize)]
pub struct SlowDatum {
    pub s: FracOrder,
    pub d: usize,
    pub delta: f64,
    pub masses: Vec<f64>,
    pub rho_star: f64,
    pub phi0: f64,
    pub c_star: f64,
    pub t_star: f64,
    pub times: Vec<f64>,
    pub sites: Vec<Vec<i64>>,
    /// Mass of the levels beyond the retained ones.
    pub truncated_mass: f64,
    #[serde(skip)]
    pub datum: LatticeField,
}

impl SlowDatum {
    pub fn levels(&self) -> usize {
        self.times.len()
    }

    /// `Σ_k m_k |x_k|` over the retained levels.
    pub fn partial_first_moment(&self) -> f64 {
        self.masses
            .iter()
            .zip(&self.sites)
            .map(|(m, x)| m * x.iter().map(|c| (c * c) as f64).sum::<f64>().sqrt())
            .sum()
    }

    /// Point masses of the datum, origin first.
    pub fn atoms(&self) -> Vec<(Vec<i64>, f64)> {
        let mut out = vec![(vec![0; self.d], 1.0 - self.delta)];
        for (x, m) in self.sites.iter().zip(&self.masses) {
            out.push((x.iter().map(|c| -c).collect(), *m));
        }
        out
    }

    /// Rescales `m_k` after construction, keeping the stored field in step.
    pub fn scale_mass(&mut self, k: usize, factor: f64) -> Result<(), CounterexampleError> {
        let i = k.checked_sub(1).filter(|&i| i < self.levels()).ok_or(CounterexampleError::MissingLevel(k))?;
        self.masses[i] *= factor;
        let y: Vec<i64> = self.sites[i].iter().map(|c| -c).collect();
        self.datum.set(&y, self.masses[i]);
        Ok(())
    }
}

/// Smallest `ρ` on the scan grid with `Φ_s(ρ e₁) <= Φ_s(0)/4`.
pub fn find_rho_star(ev: &StableProfileEvaluator) -> Result<f64, CounterexampleError> {
    let mut eta = [0.0; MAX_DIM];
    for k in 1..=(100.0 / RHO_STEP).round() as usize {
        eta[0] = k as f64 / (1.0 / RHO_STEP).round();
        if ev.phi(&eta[..ev.d]) <= ev.phi0() / 4.0 {
            return Ok(eta[0]);
        }
    }
    Err(CounterexampleError::ScanExhausted)
}

/// Rescaled kernel at the origin and at `⌊t^{1/(2s)} ρ*⌋ e₁`.
pub fn t_star_conditions(t: f64, s: FracOrder, d: usize, rho_star: f64) -> Result<(f64, f64), CounterexampleError> {
    let tol = kernel_tol(t, s, d);
    let kernel = synthesize_kernel(t, s, d, tol)?;
    let scale = t.powf(d as f64 / (2.0 * s.value()));
    let mut x = [0i64; MAX_DIM];
    let at0 = scale * read_kernel(&kernel, &x[..d], tol)?;
    x[0] = (s.width(t) * rho_star).floor() as i64;
    let at_rho = scale * read_kernel(&kernel, &x[..d], tol)?;
    Ok((at0, at_rho))
}

/// Smallest dyadic `t >= 1` with `t^{d/2s} G_t(0) >= (3/4) Φ_s(0)` and
/// `t^{d/2s} G_t(⌊t^{1/(2s)} ρ*⌋ e₁) <= (1/3) Φ_s(0)`.
pub fn find_t_star(s: FracOrder, d: usize, rho_star: f64, phi0: f64) -> Result<f64, CounterexampleError> {
    for e in 0..=T_STAR_MAX_EXP {
        let t = 2f64.powi(e);
        let (at0, at_rho) = t_star_conditions(t, s, d, rho_star)?;
        if at0 >= 0.75 * phi0 && at_rho <= phi0 / 3.0 {
            return Ok(t);
        }
    }
    Err(CounterexampleError::NotReached { what: "T*", max_exp: T_STAR_MAX_EXP })
}

/// Builds the datum for `φ` with `k_max` levels, `δ = 1/2` and `m_k = 2^{-k-1}`.
pub fn build_slow_datum<F>(phi: F, s: FracOrder, d: usize, k_max: usize) -> Result<SlowDatum, CounterexampleError>
where
    F: Fn(f64) -> f64,
{
    if k_max == 0 || k_max > MAX_LEVELS {
        return Err(CounterexampleError::InvalidLevels(k_max));
    }
    let ev = StableProfileEvaluator::new(s, d, PROFILE_TOL)?;
    let phi0 = ev.phi0();
    let rho_star = find_rho_star(&ev)?;
    let t_star = find_t_star(s, d, rho_star, phi0)?;
    let c_star = 5.0 / 12.0 * phi0;
    let delta = 0.5;
    let masses: Vec<f64> = (1..=k_max).map(|k| 2f64.powi(-(k as i32) - 1)).collect();
    let mut times = Vec::with_capacity(k_max);
    let mut sites = Vec::with_capacity(k_max);
    let mut lower = t_star;
    let mut prev_phi = f64::INFINITY;
    for (i, &m) in masses.iter().enumerate() {
        let k = (i + 1) as f64;
        let start = lower.log2().ceil() as i32;
        let mut found = None;
        for e in start..=TIME_MAX_EXP {
            let t = 2f64.powi(e);
            let v = phi(t);
            if !(v.is_finite() && v > 0.0 && v <= prev_phi) {
                return Err(CounterexampleError::InvalidProfile);
            }
            prev_phi = v;
            if k * v <= 0.5 * c_star * m {
                found = Some(t);
                break;
            }
        }
        let t = found.ok_or(CounterexampleError::NotReached { what: "level time", max_exp: TIME_MAX_EXP })?;
        let reach = s.width(t) * rho_star;
        let bytes = 8.0 * (2.0 * reach + 1.0).powi(d as i32);
        let cap = crate::resources::mem_cap_bytes() as f64;
        if !(bytes <= cap) {
            return Err(CounterexampleError::BoxOverflow {
                level: i + 1,
                achieved: i,
                required_mb: (bytes / (1u64 << 20) as f64).ceil().min(u64::MAX as f64) as u64,
                cap_mb: crate::resources::mem_cap_mb(),
            });
        }
        let mut x = vec![0i64; d];
        x[0] = reach.floor() as i64;
        times.push(t);
        sites.push(x);
        lower = t + 1.0;
    }
    let radius = sites.iter().flat_map(|x| x.iter()).map(|c| c.unsigned_abs()).max().unwrap_or(0) as usize;
    let mut datum = LatticeField::zeros(d, radius).map_err(|e| match e {
        LatticeError::BoxOverflow { required_mb, cap_mb } => CounterexampleError::BoxOverflow {
            level: k_max,
            achieved: k_max - 1,
            required_mb,
            cap_mb,
        },
        other => other.into(),
    })?;
    let truncated_mass = 2f64.powi(-(k_max as i32) - 1);
    let mut sd = SlowDatum {
        s,
        d,
        delta,
        masses,
        rho_star,
        phi0,
        c_star,
        t_star,
        times,
        sites,
        truncated_mass,
        datum: LatticeField::zeros(d, 0)?,
    };
    for (y, m) in sd.atoms() {
        let old = datum.get(&y);
        datum.set(&y, old + m);
    }
    sd.datum = datum;
    Ok(sd)
}

/// `t^{d/2s} |u(t, 0) - G_t(0)|` for a datum given by point masses.
pub fn origin_error(atoms: &[(Vec<i64>, f64)], t: f64, s: FracOrder, d: usize) -> Result<f64, CounterexampleError> {
    let tol = kernel_tol(t, s, d);
    let origin = vec![0i64; d];
    let g0 = kernel_value(t, s, &origin, tol)?;
    let mut u = 0.0;
    for (y, m) in atoms {
        let x: Vec<i64> = y.iter().map(|c| -c).collect();
        u += m * if x == origin { g0 } else { kernel_value(t, s, &x, tol)? };
    }
    Ok(t.powf(d as f64 / (2.0 * s.value())) * (u - g0).abs())
}

/// One checked level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlowBound {
    pub k: usize,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// Checks `t_k^{d/2s} |u(t_k, 0) - G_{t_k}(0)| >= k φ(t_k)`.
pub fn verify_slow_bound<F>(sd: &SlowDatum, k: usize, phi: F) -> Result<SlowBound, CounterexampleError>
where
    F: Fn(f64) -> f64,
{
    let t = *sd.times.get(k.wrapping_sub(1)).ok_or(CounterexampleError::MissingLevel(k))?;
    let lhs = origin_error(&sd.atoms(), t, sd.s, sd.d)?;
    let rhs = k as f64 * phi(t);
    Ok(SlowBound { k, t, lhs, rhs, pass: lhs >= rhs })
}

/// Rate of a datum with finite first moment against a slower profile.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileComparison {
    pub report: RateReport,
    pub profile_slope: f64,
    /// Ratio of the rescaled error to `φ` at the first and last times.
    pub first_ratio: f64,
    pub last_ratio: f64,
    pub beats: bool,
}

/// Sweep for `δ_{e₁}` compared with `φ`: the rescaled `ℓ^∞` error must fall
/// faster than `φ` and end below it.
pub fn moment_datum_beats<F>(phi: F, s: FracOrder, d: usize, times: &[f64], acc: Accuracy) -> Result<ProfileComparison, CounterexampleError>
where
    F: Fn(f64) -> f64,
{
    let mut e1 = [0i64; MAX_DIM];
    e1[0] = 1;
    let u0 = LatticeField::delta(d, &e1[..d], 0)?;
    let report = rate_sweep(&u0, s, f64::INFINITY, times, acc)?;
    let phis: Vec<f64> = times.iter().map(|&t| phi(t)).collect();
    let profile = RateReport::fit(FitScale::LogLog, times.to_vec(), phis.clone(), phis.clone())?;
    let first_ratio = report.values[0] / phis[0];
    let last_ratio = report.values[times.len() - 1] / phis[times.len() - 1];
    Ok(ProfileComparison {
        beats: report.slope < profile.slope && last_ratio < first_ratio,
        profile_slope: profile.slope,
        report,
        first_ratio,
        last_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_star_scan() {
        let ev = StableProfileEvaluator::new(FracOrder::ONE, 1, 1e-10).unwrap();
        assert!((find_rho_star(&ev).unwrap() - 2.40).abs() < 1e-12);
        let ev = StableProfileEvaluator::new(FracOrder::new(0.5).unwrap(), 1, 1e-10).unwrap();
        assert!((find_rho_star(&ev).unwrap() - 1.75).abs() < 1e-12);
    }

    #[test]
    fn rejects_level_counts() {
        let r = build_slow_datum(|t| t.powf(-0.25), FracOrder::ONE, 1, 9);
        assert!(matches!(r, Err(CounterexampleError::InvalidLevels(9))));
    }

    #[test]
    fn point_mass_at_origin_has_no_error() {
        let atoms = vec![(vec![0], 1.0)];
        assert!(origin_error(&atoms, 64.0, FracOrder::ONE, 1).unwrap() < 1e-14);
    }
}
