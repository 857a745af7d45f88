//! The lattice fractional heat kernel
//!
//! ```text
//! G_t^(s)(x) = (2π)^{-d} ∫_{𝕋^d} e^{-t ω(ξ)^s} e^{i⟨x,ξ⟩} dξ
//! ```
//!
//! is synthesised on an odd torus of `N` points per axis. The discrete
//! transform reproduces the `N`-periodisation `Σ_m G(x + mN)` exactly, so a
//! [`KernelSlice`] stores one full period on the centred box of radius
//! `(N-1)/2`: its values are positive, sum to one, and differ from the
//! kernel on `ℤ^d` by the folded tail, which is measured and reported as
//! `aliasing_estimate`.
//!
//! `N` is fixed by a doubling rule: the period is accepted once doubling it
//! moves no value on the inner box (radius given by [`BoxRule`]) by more
//! than `tol / 10`. Heavy tails (`s < 1`) decay algebraically, so the first
//! `N` is taken from the tail asymptotics `G_t(y) ≈ t c_{d,s} |y|^{-d-2s}`.
//!
//! For `s = 1` the symbol is entire and separable. Each axis is then
//! computed on contour-shifted grids `ξ + iα`, which keeps every value,
//! including tails far below the peak, to near machine relative precision.

use crate::fft::{self, EvenTransform};
use crate::lattice_core::{check_alloc, check_dim, lp_norm, FracOrder, LatticeError, LatticeField, MAX_DIM};
use crate::resources;
use num_complex::Complex64;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::{self, Write};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error(transparent)]
    Lattice(LatticeError),
    #[error("doubling rule not met: max change {diff:.3e} vs tol/10 = {:.3e} at N = {n}", tol / 10.0)]
    ToleranceUnreachable { diff: f64, tol: f64, n: usize },
    #[error("box needs {required_mb} MiB, cap is {cap_mb} MiB")]
    BoxOverflow { required_mb: u64, cap_mb: u64 },
    #[error("shift {shift} exceeds half the box radius {limit}")]
    ShiftTooLarge { shift: u64, limit: u64 },
    #[error("time must be positive and finite, got {0}")]
    InvalidTime(f64),
    #[error("tolerance {0} outside (1e-14, 1e-2)")]
    InvalidTolerance(f64),
}

impl From<LatticeError> for KernelError {
    fn from(e: LatticeError) -> Self {
        match e {
            LatticeError::BoxOverflow { required_mb, cap_mb } => KernelError::BoxOverflow { required_mb, cap_mb },
            other => KernelError::Lattice(other),
        }
    }
}

/// Inner-box radius `ceil(c_box · t^{1/(2s)}) + l_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxRule {
    pub c_box: f64,
    pub l_min: usize,
}

impl BoxRule {
    /// Eight self-similar widths plus a pad of 16; heavy-tailed kernels in
    /// `d >= 2` use one width so the largest default times fit the cap.
    pub fn default_for(d: usize, s: FracOrder) -> Self {
        let c_box = if d == 1 || s.is_local() { 8.0 } else { 1.0 };
        Self { c_box, l_min: 16 }
    }

    pub fn radius(&self, t: f64, s: FracOrder) -> usize {
        (self.c_box * s.width(t)).ceil() as usize + self.l_min
    }
}

/// Knobs for [`synthesize_kernel_with`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SynthesisOptions {
    /// Overrides [`BoxRule::default_for`].
    pub rule: Option<BoxRule>,
    /// Added to the inner radius, e.g. the support radius of a datum.
    pub extra_radius: usize,
    /// Use the period `2L + 1` of the inner box as is: no tail enlargement,
    /// no rounding to a smooth length and no doubling check. The slice is
    /// then the torus kernel itself, self-similar in `t` when the rule has
    /// no pad; `doubling_change` is `NaN`.
    pub fixed_period: bool,
}

/// One period of the torus kernel with its accuracy record.
#[derive(Debug, Clone)]
pub struct KernelSlice {
    pub t: f64,
    pub s: FracOrder,
    pub field: LatticeField,
    pub grid_n: usize,
    /// Radius on which the doubling rule certified the values.
    pub inner_radius: usize,
    /// Tail mass of the kernel on `ℤ^d` outside the stored box.
    pub aliasing_estimate: f64,
    /// Largest change on the inner box when the period was doubled.
    pub doubling_change: f64,
}

/// JSON header of a serialised slice.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct KernelHeader {
    pub t: f64,
    pub s: f64,
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub aliasing_estimate: f64,
}

/// Norms of `G_t(· - y) - G_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementNorms {
    pub t: f64,
    pub s: f64,
    pub y: Vec<i64>,
    pub linf: f64,
    pub l1: f64,
    pub p: f64,
    pub lp: f64,
}

fn validate(t: f64, tol: f64) -> Result<(), KernelError> {
    if !(t.is_finite() && t > 0.0) {
        return Err(KernelError::InvalidTime(t));
    }
    if !(tol > 1e-14 && tol < 1e-2) {
        return Err(KernelError::InvalidTolerance(tol));
    }
    Ok(())
}

/// Kernel with the default box rule.
pub fn synthesize_kernel(t: f64, s: FracOrder, d: usize, tol: f64) -> Result<KernelSlice, KernelError> {
    synthesize_kernel_with(t, s, d, tol, &SynthesisOptions::default())
}

pub fn synthesize_kernel_with(
    t: f64,
    s: FracOrder,
    d: usize,
    tol: f64,
    opts: &SynthesisOptions,
) -> Result<KernelSlice, KernelError> {
    validate(t, tol)?;
    check_dim(d)?;
    let rule = opts.rule.unwrap_or_else(|| BoxRule::default_for(d, s));
    let inner = rule.radius(t, s) + opts.extra_radius;
    if opts.fixed_period {
        return fixed_period_slice(t, s, d, inner);
    }
    let mut n0 = fft::next_smooth_odd((2 * inner + 1).max(inner + tail_distance(t, s, d, tol)));
    let mut last = f64::NAN;
    for _ in 0..2 {
        let n1 = fft::next_smooth_odd(2 * n0 + 1);
        check_alloc(synthesis_bytes(s, d, n0, n1, inner))?;
        let h0 = (n0 - 1) / 2;
        let coarse = torus_orthant(t, s, d, n0, h0);
        let fine = torus_orthant(t, s, d, n1, inner);
        let diff = inner_difference(&coarse, h0, &fine, inner, d);
        if diff < tol / 10.0 {
            drop(fine);
            let field = unfold(&coarse, h0, d)?;
            drop(coarse);
            let aliasing_estimate = d as f64 * marginal_tail(t, s, h0)?;
            let slice = KernelSlice {
                t,
                s,
                field,
                grid_n: n0,
                inner_radius: inner,
                aliasing_estimate,
                doubling_change: diff,
            };
            let mass_err = (slice.mass() - 1.0).abs();
            if mass_err > tol.max(1e-10) {
                return Err(KernelError::ToleranceUnreachable { diff: mass_err, tol, n: n0 });
            }
            return Ok(slice);
        }
        last = diff;
        n0 = n1;
    }
    Err(KernelError::ToleranceUnreachable { diff: last, tol, n: n0 })
}

fn fixed_period_slice(t: f64, s: FracOrder, d: usize, inner: usize) -> Result<KernelSlice, KernelError> {
    let n = 2 * inner + 1;
    check_alloc(synthesis_bytes(s, d, n, n, inner))?;
    let orthant = torus_orthant(t, s, d, n, inner);
    let field = unfold(&orthant, inner, d)?;
    drop(orthant);
    let aliasing_estimate = d as f64 * marginal_tail(t, s, inner)?;
    Ok(KernelSlice {
        t,
        s,
        field,
        grid_n: n,
        inner_radius: inner,
        aliasing_estimate,
        doubling_change: f64::NAN,
    })
}

/// Distance from the inner box to the nearest periodic image beyond which
/// the folded tail stays below `tol / 40`.
fn tail_distance(t: f64, s: FracOrder, d: usize, tol: f64) -> usize {
    if s.is_local() {
        return 0;
    }
    let q = d as f64 + 2.0 * s.value();
    let amp = t * jump_constant(d, s) * lattice_zeta(d, q);
    (40.0 * amp / tol).powf(1.0 / q).ceil() as usize
}

/// `c_{d,s} = s 4^s Γ(d/2 + s) / (π^{d/2} Γ(1 - s))`, the constant in the
/// tail `|y|^{-d-2s}` of the jump kernel of `(-Δ)^s`.
pub fn jump_constant(d: usize, s: FracOrder) -> f64 {
    use statrs::function::gamma::gamma;
    let sv = s.value();
    if sv == 1.0 {
        return 0.0;
    }
    let half_d = d as f64 / 2.0;
    sv * 4f64.powf(sv) * gamma(half_d + sv) / (PI.powf(half_d) * gamma(1.0 - sv))
}

/// `Σ_{m ∈ ℤ^d \ 0} |m|^{-q}`, summed on a cube with an integral tail.
fn lattice_zeta(d: usize, q: f64) -> f64 {
    let r: i64 = match d {
        1 => 4000,
        2 => 60,
        _ => 16,
    };
    let mut sum = 0.0;
    let mut m = [0i64; MAX_DIM];
    let side = (2 * r + 1) as usize;
    for k in 0..side.pow(d as u32) {
        let mut kk = k;
        for c in m.iter_mut().take(d) {
            *c = (kk % side) as i64 - r;
            kk /= side;
        }
        let n2: i64 = m[..d].iter().map(|c| c * c).sum();
        if n2 > 0 {
            sum += (n2 as f64).powf(-q / 2.0);
        }
    }
    let sphere = match d {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 4.0 * PI,
    };
    sum + sphere * (r as f64).powf(d as f64 - q) / (q - d as f64)
}

fn synthesis_bytes(s: FracOrder, d: usize, n0: usize, n1: usize, inner: usize) -> u64 {
    let (n0, n1, r) = (n0 as u64, n1 as u64, inner as u64);
    let h0 = (n0 - 1) / 2;
    let h1 = (n1 - 1) / 2;
    let dd = d as u32;
    let field = n0.pow(dd);
    let orth = (h0 + 1).pow(dd);
    let partner = if s.is_local() {
        (r + 1).pow(dd)
    } else {
        2 * (h1 + 1).pow(dd - 1) * (r + 1)
    };
    8 * (field + orth + partner) + 64 * n1
}

/// Orthant `[0, keep]^d` of the torus kernel with odd period `n`.
fn torus_orthant(t: f64, s: FracOrder, d: usize, n: usize, keep: usize) -> Vec<f64> {
    if s.is_local() {
        let line = local_torus_line(t, n);
        tensor_power(&line[..=keep], d)
    } else {
        nonlocal_orthant(t, s.value(), d, n, keep)
    }
}

fn tensor_power(line: &[f64], d: usize) -> Vec<f64> {
    let m = line.len();
    let mut out = vec![0.0; m.pow(d as u32)];
    for (k, o) in out.iter_mut().enumerate() {
        let mut kk = k;
        let mut v = 1.0;
        for _ in 0..d {
            v *= line[kk % m];
            kk /= m;
        }
        *o = v;
    }
    out
}

fn nonlocal_orthant(t: f64, s: f64, d: usize, n: usize, keep: usize) -> Vec<f64> {
    let h = (n - 1) / 2;
    let omega: Vec<f64> = (0..=h)
        .map(|j| {
            let v = (PI * j as f64 / n as f64).sin();
            4.0 * v * v
        })
        .collect();
    let mut et = EvenTransform::new(n);
    let mut dims = vec![h + 1; d];
    let last = d - 1;
    let mut data = et.along_axis(&dims, last, keep, |outer, _, line| {
        let mut base = 0.0;
        let mut o = outer;
        for _ in 0..last {
            base += omega[o % (h + 1)];
            o /= h + 1;
        }
        for (j, v) in line.iter_mut().enumerate() {
            *v = (-t * (base + omega[j]).powf(s)).exp();
        }
    });
    dims[last] = keep + 1;
    for axis in (0..last).rev() {
        let src = data;
        let dims_now = dims.clone();
        data = et.along_axis(&dims_now, axis, keep, |outer, inner, line| {
            fft::gather_line(&src, &dims_now, axis, outer, inner, line)
        });
        dims[axis] = keep + 1;
    }
    data
}

/// One axis of the `s = 1` torus kernel: `Σ_m G(x + mn)` for `x = 0..=h`.
fn local_torus_line(t: f64, n: usize) -> Vec<f64> {
    let h = (n - 1) / 2;
    let reach = n + h;
    let g = local_line(t, reach);
    (0..=h)
        .map(|x| {
            let mut v = g[x];
            let mut m = 1;
            loop {
                let a = m * n - x;
                if a > reach {
                    break;
                }
                v += g[a];
                if m * n + x <= reach {
                    v += g[m * n + x];
                }
                m += 1;
            }
            v
        })
        .collect()
}

/// `e^{-2t} I_x(2t)` on `ℤ` for `x = 0..=reach`, from contour-shifted transforms.
///
/// On the line `ξ + iα` the transform returns `G(x) e^{αx}`, which peaks
/// near `x = 2t sinh α`. Each `x` takes the value from the shift for which
/// it sits highest relative to that transform's maximum.
pub(crate) fn local_line(t: f64, reach: usize) -> Vec<f64> {
    let m = fft::next_smooth_odd(4 * reach + 41);
    let inv = fft::plan(m, FftDirection::Inverse);
    let mut scratch = vec![Complex64::default(); inv.get_inplace_scratch_len()];
    let mut buf = vec![Complex64::default(); m];
    let mut best = vec![0.0; reach + 1];
    let mut score = vec![f64::NEG_INFINITY; reach + 1];
    let mut peak = 0.0f64;
    loop {
        let alpha = (peak / (2.0 * t)).asinh();
        for (k, b) in buf.iter_mut().enumerate() {
            let z = Complex64::new(2.0 * PI * k as f64 / m as f64, alpha);
            *b = (-t * (2.0 - 2.0 * z.cos())).exp();
        }
        inv.process_with_scratch(&mut buf, &mut scratch);
        let top = buf[..=reach].iter().fold(0.0f64, |a, z| a.max(z.re.abs()));
        for x in 0..=reach {
            let v = buf[x].re / m as f64;
            let sc = (buf[x].re.abs() / top).ln();
            if sc > score[x] {
                score[x] = sc;
                best[x] = v * (-alpha * x as f64).exp();
            }
        }
        if peak >= reach as f64 {
            break;
        }
        let sigma = (2.0 * t * alpha.cosh()).sqrt();
        peak = (peak + (3.0 * sigma).max(1.0)).min(reach as f64);
    }
    best
}

fn inner_difference(coarse: &[f64], h0: usize, fine: &[f64], r: usize, d: usize) -> f64 {
    let side = r + 1;
    let mut diff = 0.0f64;
    for k in 0..side.pow(d as u32) {
        let mut kk = k;
        let mut idx = 0;
        let mut idx_c = [0usize; MAX_DIM];
        for j in (0..d).rev() {
            idx_c[j] = kk % side;
            kk /= side;
        }
        for &c in &idx_c[..d] {
            idx = idx * (h0 + 1) + c;
        }
        diff = diff.max((coarse[idx] - fine[k]).abs());
    }
    diff
}

fn unfold(orth: &[f64], h: usize, d: usize) -> Result<LatticeField, LatticeError> {
    let mut field = LatticeField::zeros(d, h)?;
    for k in 0..field.len() {
        let x = field.point(k);
        let mut idx = 0;
        for &c in &x[..d] {
            idx = idx * (h + 1) + c.unsigned_abs() as usize;
        }
        field.values_mut()[k] = orth[idx];
    }
    Ok(field)
}

/// Mass of the one-dimensional kernel in `h < |x| <= 2h`, read from a period
/// of radius `2h`. The `d`-dimensional kernel has this kernel as each
/// marginal, so `d` times this value bounds its tail outside the box.
fn marginal_tail(t: f64, s: FracOrder, h: usize) -> Result<f64, LatticeError> {
    let n = fft::next_smooth_odd(4 * h + 1);
    check_alloc(24 * n as u64)?;
    let line = torus_orthant(t, s, 1, n, 2 * h);
    Ok(2.0 * line[h + 1..].iter().sum::<f64>())
}

impl KernelSlice {
    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    /// Radius of the stored period.
    pub fn radius(&self) -> usize {
        self.field.radius()
    }

    /// Value at `x`, read periodically with period `grid_n`.
    pub fn value(&self, x: &[i64]) -> f64 {
        let n = self.grid_n as i64;
        let r = self.radius() as i64;
        let mut y = [0i64; MAX_DIM];
        for (j, &c) in x.iter().enumerate() {
            y[j] = (c + r).rem_euclid(n) - r;
        }
        self.field.get(&y[..x.len()])
    }

    pub fn mass(&self) -> f64 {
        self.field.sum()
    }

    pub fn min_value(&self) -> f64 {
        self.field.values().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest value on the box.
    pub fn sup(&self) -> f64 {
        self.field.norm(f64::INFINITY)
    }

    /// Whether the maximum is attained at the origin.
    pub fn sup_at_origin(&self) -> bool {
        let origin = [0i64; MAX_DIM];
        self.field.get(&origin[..self.dim()]) >= self.sup()
    }

    /// Norms of `G(· - y) - G` over one period.
    pub fn increment(&self, y: &[i64], p: f64) -> Result<IncrementNorms, KernelError> {
        let d = self.dim();
        assert_eq!(y.len(), d);
        let shift = y.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0);
        let limit = (self.radius() / 2) as u64;
        if shift > limit {
            return Err(KernelError::ShiftTooLarge { shift, limit });
        }
        let diff = self.shift_difference(y);
        Ok(IncrementNorms {
            t: self.t,
            s: self.s.value(),
            y: y.to_vec(),
            linf: lp_norm(&diff, f64::INFINITY),
            l1: lp_norm(&diff, 1.0),
            p,
            lp: lp_norm(&diff, p),
        })
    }

    /// `G(x - y) - G(x)` over the stored period, in field order.
    pub fn shift_difference(&self, y: &[i64]) -> Vec<f64> {
        let d = self.dim();
        let side = self.field.side();
        let vals = self.field.values();
        let mut out = vec![0.0; vals.len()];
        let shifts: Vec<usize> = y.iter().map(|&c| c.rem_euclid(side as i64) as usize).collect();
        for (k, o) in out.iter_mut().enumerate() {
            let mut kk = k;
            let mut src = 0;
            let mut mult = 1;
            for j in (0..d).rev() {
                let c = kk % side;
                kk /= side;
                let cs = (c + side - shifts[j]) % side;
                src += cs * mult;
                mult *= side;
            }
            *o = vals[src] - vals[k];
        }
        out
    }

    pub fn header(&self) -> KernelHeader {
        KernelHeader {
            t: self.t,
            s: self.s.value(),
            d: self.dim(),
            n: self.grid_n,
            l: self.radius(),
            aliasing_estimate: self.aliasing_estimate,
        }
    }

    /// CSV block: one column per coordinate, then the value.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let d = self.dim();
        let cols: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
        writeln!(w, "{},value", cols.join(","))?;
        for (k, v) in self.field.values().iter().enumerate() {
            let x = self.field.point(k);
            for c in &x[..d] {
                write!(w, "{c},")?;
            }
            writeln!(w, "{v}")?;
        }
        Ok(())
    }
}

/// Largest kernel value at time `t`.
pub fn kernel_sup(t: f64, s: FracOrder, d: usize, tol: f64) -> Result<f64, KernelError> {
    Ok(synthesize_kernel(t, s, d, tol)?.sup())
}

/// Norms of the increment of the kernel along `y`.
pub fn increment_norms(t: f64, s: FracOrder, d: usize, y: &[i64], p: f64, tol: f64) -> Result<IncrementNorms, KernelError> {
    synthesize_kernel(t, s, d, tol)?.increment(y, p)
}

/// Value of the kernel on `ℤ^d` at one point.
///
/// The trapezoid sum over an `M`-point torus is restricted to the
/// frequencies where `t ω^s` stays below the underflow threshold, so the cost
/// depends on `t` and `tol` but not on `|x|`.
pub fn kernel_value(t: f64, s: FracOrder, x: &[i64], tol: f64) -> Result<f64, KernelError> {
    validate(t, tol)?;
    let d = x.len();
    check_dim(d)?;
    let far = x.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0) as f64;
    let w = s.width(t);
    let reach = if s.is_local() {
        far + 40.0 * w + 64.0
    } else {
        far + tail_distance(t, s, d, tol) as f64 + 8.0 * w + 16.0
    };
    let m = 2.0 * reach + 1.0;
    let sv = s.value();
    let omega_cut = (745.0 / t).powf(1.0 / sv);
    let xi_cut = if omega_cut >= 4.0 * d as f64 { PI } else { 2.0 * (omega_cut.sqrt() / 2.0).min(1.0).asin() };
    let j_max = ((xi_cut * m / (2.0 * PI)).floor() as usize).max(1);
    let cost = (2 * j_max + 1) as f64;
    if cost.powi(d as i32) > 1e10 {
        return Err(KernelError::BoxOverflow {
            required_mb: (cost.powi(d as i32) * 8.0 / (1u64 << 20) as f64) as u64,
            cap_mb: resources::mem_cap_mb(),
        });
    }
    let nodes: Vec<(f64, f64)> = (0..=j_max)
        .map(|j| {
            let xi = 2.0 * PI * j as f64 / m;
            let v = (0.5 * xi).sin();
            (xi, 4.0 * v * v)
        })
        .collect();
    if s.is_local() {
        let mut prod = 1.0;
        for &c in x {
            let mut acc = 0.0;
            for (j, &(xi, om)) in nodes.iter().enumerate() {
                let wgt = if j == 0 { 1.0 } else { 2.0 };
                acc += wgt * (-t * om).exp() * (c as f64 * xi).cos();
            }
            prod *= acc / m;
        }
        return Ok(prod);
    }
    let side = j_max + 1;
    let mut acc = 0.0;
    for k in 0..side.pow(d as u32) {
        let mut kk = k;
        let mut om = 0.0;
        let mut phase = 1.0;
        let mut wgt = 1.0;
        for &c in x {
            let j = kk % side;
            kk /= side;
            let (xi, o) = nodes[j];
            om += o;
            phase *= (c as f64 * xi).cos();
            if j > 0 {
                wgt *= 2.0;
            }
        }
        acc += wgt * (-t * om.powf(sv)).exp() * phase;
    }
    Ok(acc / m.powi(d as i32))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half() -> FracOrder {
        FracOrder::new(0.5).unwrap()
    }

    #[test]
    fn mass_and_positivity() {
        for (s, d) in [(FracOrder::ONE, 1), (half(), 1), (FracOrder::ONE, 2), (half(), 2)] {
            let k = synthesize_kernel(3.0, s, d, 1e-6).unwrap();
            assert!((k.mass() - 1.0).abs() < 1e-12, "{s:?} {d}");
            assert!(k.min_value() > 0.0);
            assert!(k.sup_at_origin());
            assert!((k.mass() - 1.0).abs() <= k.aliasing_estimate + 1e-10);
        }
    }

    #[test]
    fn local_line_small_time() {
        let g = local_line(1.0, 30);
        assert!(g.iter().all(|&v| v > 0.0));
        // e^{-2} I_0(2)
        assert!((g[0] - 0.308_508_322_553_671_2).abs() < 1e-14);
    }

    #[test]
    fn periodic_reading() {
        let k = synthesize_kernel(2.0, FracOrder::ONE, 1, 1e-8).unwrap();
        let n = k.grid_n as i64;
        assert_eq!(k.value(&[3]), k.value(&[3 + n]));
        assert_eq!(k.value(&[-2]), k.value(&[2]));
    }

    #[test]
    fn point_values_match_slices() {
        for s in [FracOrder::ONE, FracOrder::new(0.75).unwrap()] {
            let k = synthesize_kernel(5.0, s, 1, 1e-9).unwrap();
            for x in [0i64, 3, 11] {
                let v = kernel_value(5.0, s, &[x], 1e-9).unwrap();
                assert!((v - k.value(&[x])).abs() < 1e-9, "{s:?} {x}");
            }
        }
    }

    #[test]
    fn shift_limit() {
        let k = synthesize_kernel(1.0, FracOrder::ONE, 1, 1e-8).unwrap();
        let lim = (k.radius() / 2) as i64;
        assert!(k.increment(&[lim], 1.0).is_ok());
        assert!(matches!(k.increment(&[lim + 1], 1.0), Err(KernelError::ShiftTooLarge { .. })));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(synthesize_kernel(-1.0, FracOrder::ONE, 1, 1e-8), Err(KernelError::InvalidTime(_))));
        assert!(matches!(synthesize_kernel(1.0, FracOrder::ONE, 1, 0.5), Err(KernelError::InvalidTolerance(_))));
        assert!(synthesize_kernel(1.0, FracOrder::ONE, 4, 1e-8).is_err());
    }
}
