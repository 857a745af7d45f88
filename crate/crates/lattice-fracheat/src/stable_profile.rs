//! The Euclidean `2s`-stable profile
//! `Φ_s(η) = (2π)^{-d} ∫ e^{-|ζ|^{2s}} e^{iη·ζ} dζ`, its first partial
//! derivative, the lattice scaling limit and the increment constants.
//!
//! The integrand is even in every coordinate, so both integrals reduce to the
//! positive orthant with products of cosines.

use crate::kernel::{kernel_value, synthesize_kernel, KernelError, KernelSlice};
use crate::lattice_core::{check_dim, FracOrder, MAX_DIM};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Largest number of integrand evaluations for one profile value.
pub const NODE_BUDGET: u64 = 60_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("tolerance {0} outside (1e-14, 1e-2)")]
    InvalidTolerance(f64),
    #[error("quadrature needs more than {budget} nodes to reach the tolerance")]
    BudgetExceeded { budget: u64 },
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

impl From<crate::lattice_core::LatticeError> for ProfileError {
    fn from(e: crate::lattice_core::LatticeError) -> Self {
        ProfileError::Kernel(e.into())
    }
}

/// Orthant trapezoid evaluator for `Φ_s` and `∂₁Φ_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableProfileEvaluator {
    pub s: FracOrder,
    pub d: usize,
    pub r_zeta: f64,
    pub h: f64,
    pub cached_phi0: f64,
    pub tol: f64,
}

#[derive(Clone, Copy)]
enum Integrand {
    Value,
    FirstDerivative,
}

impl StableProfileEvaluator {
    /// Fixes the truncation radius and halves the spacing until `Φ_s(0)` and
    /// `Φ_s(4 e₁)` change by less than `tol/4`.
    pub fn new(s: FracOrder, d: usize, tol: f64) -> Result<Self, ProfileError> {
        check_dim(d)?;
        if !(tol > 1e-14 && tol < 1e-2) {
            return Err(ProfileError::InvalidTolerance(tol));
        }
        let sv = s.value();
        let vol = 2f64.powi(d as i32);
        let mut r = (4.0 * vol / tol).ln().powf(1.0 / (2.0 * sv));
        while tail_bound(r, sv, d) > tol / 2.0 {
            r *= 1.05;
        }
        let mut ev = Self {
            s,
            d,
            r_zeta: r,
            h: 0.5f64.min(r / 8.0),
            cached_phi0: 0.0,
            tol,
        };
        let mut probe = [0.0; MAX_DIM];
        probe[0] = 4.0;
        let mut prev = [ev.integrate(&[0.0; MAX_DIM][..d], ev.h, Integrand::Value)?, ev.integrate(&probe[..d], ev.h, Integrand::Value)?];
        loop {
            let h = ev.h / 2.0;
            let next = [ev.integrate(&[0.0; MAX_DIM][..d], h, Integrand::Value)?, ev.integrate(&probe[..d], h, Integrand::Value)?];
            ev.h = h;
            let change = (next[0] - prev[0]).abs().max((next[1] - prev[1]).abs());
            prev = next;
            if change < tol / 4.0 {
                break;
            }
        }
        ev.cached_phi0 = prev[0];
        Ok(ev)
    }

    /// `Φ_s(0)`.
    pub fn phi0(&self) -> f64 {
        self.cached_phi0
    }

    /// `Φ_s(η)`; zero beyond `10 R_zeta`.
    pub fn phi(&self, eta: &[f64]) -> f64 {
        self.phi_flagged(eta).0
    }

    /// `Φ_s(η)` and whether `η` lay beyond the evaluation range.
    pub fn phi_flagged(&self, eta: &[f64]) -> (f64, bool) {
        self.eval(eta, Integrand::Value)
    }

    /// `∂₁Φ_s(η)`.
    pub fn dphi1(&self, eta: &[f64]) -> f64 {
        self.eval(eta, Integrand::FirstDerivative).0
    }

    fn eval(&self, eta: &[f64], what: Integrand) -> (f64, bool) {
        assert_eq!(eta.len(), self.d);
        let far = eta.iter().map(|e| e.abs()).fold(0.0, f64::max);
        if far > 10.0 * self.r_zeta {
            return (0.0, true);
        }
        let h = if far > 0.0 { self.h.min(PI / (4.0 * far)) } else { self.h };
        match self.integrate(eta, h, what) {
            Ok(v) => (v, false),
            Err(_) => (0.0, true),
        }
    }

    fn integrate(&self, eta: &[f64], h: f64, what: Integrand) -> Result<f64, ProfileError> {
        let m = (self.r_zeta / h).ceil() as usize + 1;
        let sv = self.s.value();
        let d = self.d;
        if self.s.is_local() {
            let mut total = 1.0;
            for (j, &e) in eta.iter().enumerate() {
                let deriv = j == 0 && matches!(what, Integrand::FirstDerivative);
                total *= axis_integral(m, h, |z| (-z * z).exp(), e, deriv) / PI;
            }
            return Ok(total);
        }
        let nodes = (m as u64).saturating_pow(d as u32);
        if nodes > NODE_BUDGET {
            return Err(ProfileError::BudgetExceeded { budget: NODE_BUDGET });
        }
        let weight = |k: usize| if k == 0 { 0.5 * h } else { h };
        let tables: Vec<Vec<f64>> = (0..d)
            .map(|j| {
                (0..m)
                    .map(|k| {
                        let z = k as f64 * h;
                        let f = if j == 0 && matches!(what, Integrand::FirstDerivative) {
                            -z * (eta[j] * z).sin()
                        } else {
                            (eta[j] * z).cos()
                        };
                        weight(k) * f
                    })
                    .collect()
            })
            .collect();
        let sq: Vec<f64> = (0..m).map(|k| (k as f64 * h).powi(2)).collect();
        let radial = |r2: f64| (-r2.powf(sv)).exp();
        let total = match d {
            1 => (0..m).map(|a| tables[0][a] * radial(sq[a])).sum::<f64>(),
            2 => (0..m)
                .map(|a| {
                    let ta = tables[0][a];
                    (0..m).map(|b| tables[1][b] * radial(sq[a] + sq[b])).sum::<f64>() * ta
                })
                .sum(),
            _ => (0..m)
                .map(|a| {
                    (0..m)
                        .map(|b| {
                            let tab = tables[0][a] * tables[1][b];
                            (0..m).map(|c| tables[2][c] * radial(sq[a] + sq[b] + sq[c])).sum::<f64>() * tab
                        })
                        .sum::<f64>()
                })
                .sum(),
        };
        Ok(total / PI.powi(d as i32))
    }

    /// `‖∂₁Φ_s‖_p` by a Riemann sum over `[-radius, radius]^d` with the
    /// given spacing; the supremum over the grid for `p = ∞`.
    pub fn derivative_norm(&self, p: f64, radius: f64, spacing: f64) -> f64 {
        let m = (radius / spacing).round() as i64;
        let d = self.d;
        let count = (2 * m + 1).pow(d as u32);
        let mut eta = [0.0; MAX_DIM];
        let mut acc = 0.0f64;
        for idx in 0..count {
            let mut k = idx;
            for e in eta[..d].iter_mut().rev() {
                *e = (k % (2 * m + 1) - m) as f64 * spacing;
                k /= 2 * m + 1;
            }
            let v = self.dphi1(&eta[..d]).abs();
            if p.is_infinite() {
                acc = acc.max(v);
            } else {
                acc += v.powf(p);
            }
        }
        if p.is_infinite() {
            acc
        } else {
            (acc * spacing.powi(d as i32)).powf(1.0 / p)
        }
    }
}

/// Orthant trapezoid of `f(ζ) cos(ηζ)` or `-ζ f(ζ) sin(ηζ)`.
fn axis_integral(m: usize, h: f64, f: impl Fn(f64) -> f64, eta: f64, derivative: bool) -> f64 {
    (0..m)
        .map(|k| {
            let z = k as f64 * h;
            let w = if k == 0 { 0.5 * h } else { h };
            let g = if derivative { -z * (eta * z).sin() } else { (eta * z).cos() };
            w * f(z) * g
        })
        .sum()
}

/// Bound on `π^{-d} ∫_{|ζ|_∞ > R, ζ ≥ 0} e^{-|ζ|^{2s}} dζ`.
fn tail_bound(r: f64, s: f64, d: usize) -> f64 {
    let one = (-r.powf(2.0 * s)).exp() * r.powf(1.0 - 2.0 * s).max(1.0) / (2.0 * s);
    let full = statrs::function::gamma::gamma(1.0 + 1.0 / (2.0 * s));
    d as f64 * one * full.powi(d as i32 - 1) / PI.powi(d as i32)
}

/// Selection `x_t(η) = ⌊t^{1/(2s)} η⌋`.
pub fn lattice_point(t: f64, s: FracOrder, eta: &[f64]) -> Vec<i64> {
    let w = s.width(t);
    eta.iter().map(|e| (w * e).floor() as i64).collect()
}

/// Points of spacing `step` in the ball of radius `radius`.
pub fn eta_grid(d: usize, radius: f64, step: f64) -> Vec<Vec<f64>> {
    let m = (radius / step).floor() as i64;
    let side = 2 * m + 1;
    let mut out = Vec::new();
    for idx in 0..side.pow(d as u32) {
        let mut k = idx;
        let mut eta = vec![0.0; d];
        for e in eta.iter_mut().rev() {
            *e = ((k % side) - m) as f64 * step;
            k /= side;
        }
        if eta.iter().map(|e| e * e).sum::<f64>() <= radius * radius + 1e-12 {
            out.push(eta);
        }
    }
    out
}

/// `Φ_s` cached on an `η`-grid of spacing 0.1 for repeated comparisons
/// against rescaled kernels.
#[derive(Debug, Clone)]
pub struct ScalingLimitProbe {
    pub s: FracOrder,
    pub d: usize,
    pub radius: f64,
    pub etas: Vec<Vec<f64>>,
    pub phi: Vec<f64>,
    pub phi0: f64,
}

/// Kernel accuracy relative to the peak scale used by the probes.
pub const PROBE_REL_TOL: f64 = 1e-4;

impl ScalingLimitProbe {
    pub fn new(ev: &StableProfileEvaluator, radius: f64) -> Self {
        let etas = eta_grid(ev.d, radius, 0.1);
        let phi = etas.iter().map(|e| ev.phi(e)).collect();
        Self {
            s: ev.s,
            d: ev.d,
            radius,
            etas,
            phi,
            phi0: ev.phi0(),
        }
    }

    /// `sup_η |t^{d/2s} G_t(x_t(η)) - Φ_s(η)|` over the cached grid.
    pub fn error_at(&self, t: f64, rel_tol: f64) -> Result<f64, ProfileError> {
        let scale = t.powf(self.d as f64 / (2.0 * self.s.value()));
        let tol = (rel_tol / scale).clamp(2e-14, 9e-3);
        let kernel = synthesize_kernel(t, self.s, self.d, tol)?;
        let mut err = 0.0f64;
        for (eta, phi) in self.etas.iter().zip(&self.phi) {
            let x = lattice_point(t, self.s, eta);
            let g = read_kernel(&kernel, &x, tol)?;
            err = err.max((scale * g - phi).abs());
        }
        Ok(err)
    }
}

pub(crate) fn read_kernel(kernel: &KernelSlice, x: &[i64], tol: f64) -> Result<f64, KernelError> {
    let far = x.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0) as usize;
    if far <= kernel.inner_radius {
        Ok(kernel.value(x))
    } else {
        kernel_value(kernel.t, kernel.s, x, tol)
    }
}

/// Scaling-limit error at `t` over the ball of radius `radius`.
pub fn scaling_limit_error(t: f64, s: FracOrder, d: usize, radius: f64, tol: f64) -> Result<f64, ProfileError> {
    let ev = StableProfileEvaluator::new(s, d, tol)?;
    ScalingLimitProbe::new(&ev, radius).error_at(t, PROBE_REL_TOL)
}

/// `t^{1/(2s)} t^{(d/2s)(1-1/p)} ‖G_t(· - e₁) - G_t‖_p`.
pub fn optimality_constant(t: f64, s: FracOrder, d: usize, p: f64, rel_tol: f64) -> Result<f64, ProfileError> {
    let scale = t.powf(d as f64 / (2.0 * s.value()));
    let tol = (rel_tol / scale).clamp(2e-14, 9e-3);
    let kernel = synthesize_kernel(t, s, d, tol)?;
    let mut e1 = [0i64; MAX_DIM];
    e1[0] = 1;
    let inc = kernel.increment(&e1[..d], p)?;
    Ok(s.width(t) * t.powf(s.rescaling_exponent(d, p)) * inc.lp)
}
