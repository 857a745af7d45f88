//! Finitely supported lattice fields, torus grids, the symbol `ω`, Fourier
//! multipliers and the fractional Laplacian.
//!
//! A [`LatticeField`] lives on the centred box `[-L, L]^d` and is read as a
//! function on `ℤ^d` vanishing off the box. A [`TorusGrid`] with `N` points per
//! axis carries the frequencies `ξ_k = 2πk/N`, folded into `[-π, π]`, and the
//! transform pair
//!
//! ```text
//! û(ξ) = Σ_x u(x) e^{-i⟨x,ξ⟩},     u(x) = N^{-d} Σ_k û(ξ_k) e^{i⟨x,ξ_k⟩}.
//! ```

use crate::fft;
use crate::resources;
use num_complex::Complex64;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::atomic::{AtomicUsize, Ordering};
use thiserror::Error;

/// Largest supported lattice dimension.
pub const MAX_DIM: usize = 3;

/// Imaginary residue that is dropped without comment.
pub const RESIDUE_SILENT: f64 = 1e-12;
/// Imaginary residue above which a multiplier result is rejected.
pub const RESIDUE_FATAL: f64 = 1e-9;

static RESIDUE_WARNINGS: AtomicUsize = AtomicUsize::new(0);

/// Number of multiplier applications whose imaginary residue fell between
/// [`RESIDUE_SILENT`] and [`RESIDUE_FATAL`].
pub fn residue_warnings() -> usize {
    RESIDUE_WARNINGS.load(Ordering::Relaxed)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("fractional order {0} outside (0, 1]")]
    InvalidOrder(f64),
    #[error("dimension {0} unsupported (expected 1..=3)")]
    InvalidDimension(usize),
    #[error("grid of {n} points per axis cannot hold a box of radius {radius}")]
    GridTooSmall { n: usize, radius: usize },
    #[error("imaginary residue {residue:.3e} after inverse transform")]
    NonRealOutput { residue: f64 },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("box needs {required_mb} MiB, cap is {cap_mb} MiB")]
    BoxOverflow { required_mb: u64, cap_mb: u64 },
    #[error("non-finite entry at offset {0}")]
    NonFinite(usize),
}

/// Fractional order `s ∈ (0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct FracOrder(f64);

impl FracOrder {
    pub fn new(s: f64) -> Result<Self, LatticeError> {
        if s.is_finite() && s > 0.0 && s <= 1.0 {
            Ok(Self(s))
        } else {
            Err(LatticeError::InvalidOrder(s))
        }
    }

    /// The local order `s = 1`.
    pub const ONE: FracOrder = FracOrder(1.0);

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_local(self) -> bool {
        self.0 == 1.0
    }

    /// Self-similar width `t^{1/(2s)}`.
    pub fn width(self, t: f64) -> f64 {
        t.powf(1.0 / (2.0 * self.0))
    }

    /// Exponent in `t^{(d/2s)(1-1/p)}`.
    pub fn rescaling_exponent(self, d: usize, p: f64) -> f64 {
        let conj = if p.is_infinite() { 1.0 } else { 1.0 - 1.0 / p };
        d as f64 / (2.0 * self.0) * conj
    }
}

impl TryFrom<f64> for FracOrder {
    type Error = LatticeError;
    fn try_from(s: f64) -> Result<Self, Self::Error> {
        FracOrder::new(s)
    }
}

impl From<FracOrder> for f64 {
    fn from(s: FracOrder) -> f64 {
        s.0
    }
}

pub(crate) fn check_dim(d: usize) -> Result<(), LatticeError> {
    if (1..=MAX_DIM).contains(&d) {
        Ok(())
    } else {
        Err(LatticeError::InvalidDimension(d))
    }
}

pub(crate) fn check_alloc(bytes: u64) -> Result<(), LatticeError> {
    let cap = resources::mem_cap_bytes();
    if bytes > cap {
        Err(LatticeError::BoxOverflow {
            required_mb: resources::to_mb(bytes),
            cap_mb: resources::mem_cap_mb(),
        })
    } else {
        Ok(())
    }
}

/// Mass and first absolute moment of a field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    /// `Σ_x u(x)`.
    pub mass: f64,
    /// `Σ_x |x| |u(x)|` with the Euclidean norm.
    pub first_moment: f64,
}

/// Real function on `ℤ^d` supported in `[-L, L]^d`, stored row-major with the
/// first coordinate slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    d: usize,
    radius: usize,
    values: Vec<f64>,
}

impl LatticeField {
    pub fn zeros(d: usize, radius: usize) -> Result<Self, LatticeError> {
        check_dim(d)?;
        let side = 2 * radius as u64 + 1;
        check_alloc(side.pow(d as u32) * 8)?;
        Ok(Self {
            d,
            radius,
            values: vec![0.0; (side as usize).pow(d as u32)],
        })
    }

    /// Point mass at `x`, on the smallest box containing it unless a larger
    /// radius is requested.
    pub fn delta(d: usize, x: &[i64], min_radius: usize) -> Result<Self, LatticeError> {
        let r = x.iter().map(|c| c.unsigned_abs() as usize).max().unwrap_or(0).max(min_radius);
        let mut u = Self::zeros(d, r)?;
        u.set(x, 1.0);
        Ok(u)
    }

    pub fn from_values(d: usize, radius: usize, values: Vec<f64>) -> Result<Self, LatticeError> {
        check_dim(d)?;
        let side = 2 * radius + 1;
        assert_eq!(values.len(), side.pow(d as u32), "value count does not match the box");
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(LatticeError::NonFinite(k));
        }
        Ok(Self { d, radius, values })
    }

    pub fn from_fn(d: usize, radius: usize, f: impl Fn(&[i64]) -> f64) -> Result<Self, LatticeError> {
        let mut u = Self::zeros(d, radius)?;
        for k in 0..u.values.len() {
            let x = u.point(k);
            u.values[k] = f(&x[..d]);
        }
        Ok(u)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Flat offset of `x`, or `None` off the box.
    pub fn offset(&self, x: &[i64]) -> Option<usize> {
        debug_assert_eq!(x.len(), self.d);
        let r = self.radius as i64;
        let side = self.side();
        let mut k = 0usize;
        for &c in x {
            if c < -r || c > r {
                return None;
            }
            k = k * side + (c + r) as usize;
        }
        Some(k)
    }

    /// Lattice point at flat offset `k`; unused trailing coordinates are 0.
    pub fn point(&self, mut k: usize) -> [i64; MAX_DIM] {
        let side = self.side();
        let mut x = [0i64; MAX_DIM];
        for j in (0..self.d).rev() {
            x[j] = (k % side) as i64 - self.radius as i64;
            k /= side;
        }
        x
    }

    /// Value at `x`, zero off the box.
    pub fn get(&self, x: &[i64]) -> f64 {
        self.offset(x).map_or(0.0, |k| self.values[k])
    }

    /// Set the value at `x`; panics off the box.
    pub fn set(&mut self, x: &[i64], v: f64) {
        let k = self.offset(x).expect("point outside the box");
        self.values[k] = v;
    }

    /// Nonzero entries as `(point, value)` pairs.
    pub fn support(&self) -> Vec<([i64; MAX_DIM], f64)> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(k, v)| (self.point(k), *v))
            .collect()
    }

    /// Same function on a box of another radius (truncating if smaller).
    pub fn with_radius(&self, radius: usize) -> Result<Self, LatticeError> {
        let mut out = Self::zeros(self.d, radius)?;
        for k in 0..self.values.len() {
            if self.values[k] != 0.0 {
                let x = self.point(k);
                if let Some(j) = out.offset(&x[..self.d]) {
                    out.values[j] = self.values[k];
                }
            }
        }
        Ok(out)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `ℓ^p` norm; `p = f64::INFINITY` gives the sup norm.
    pub fn norm(&self, p: f64) -> f64 {
        lp_norm(&self.values, p)
    }

    pub fn moments(&self) -> Moments {
        let mut mass = 0.0;
        let mut first_moment = 0.0;
        for (k, &v) in self.values.iter().enumerate() {
            if v != 0.0 {
                let x = self.point(k);
                let r = x[..self.d].iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
                mass += v;
                first_moment += r * v.abs();
            }
        }
        Moments { mass, first_moment }
    }

    /// Pointwise `a·self + b·other` on the larger of the two boxes.
    pub fn combine(&self, a: f64, other: &LatticeField, b: f64) -> Result<Self, LatticeError> {
        if self.d != other.d {
            return Err(LatticeError::DimensionMismatch(self.d, other.d));
        }
        let r = self.radius.max(other.radius);
        let mut out = self.with_radius(r)?;
        out.values.iter_mut().for_each(|v| *v *= a);
        for k in 0..other.values.len() {
            let x = other.point(k);
            let j = out.offset(&x[..self.d]).expect("larger box");
            out.values[j] += b * other.values[k];
        }
        Ok(out)
    }
}

/// `ℓ^p` norm of a slice.
pub fn lp_norm(values: &[f64], p: f64) -> f64 {
    assert!(p >= 1.0, "p must be at least 1");
    if p.is_infinite() {
        values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    } else if p == 1.0 {
        values.iter().map(|v| v.abs()).sum()
    } else if p == 2.0 {
        values.iter().map(|v| v * v).sum::<f64>().sqrt()
    } else {
        values.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// Norm and moments of a field in one call.
pub fn norms_and_moments(u: &LatticeField, p: f64) -> (f64, Moments) {
    (u.norm(p), u.moments())
}

/// Uniform frequency grid on `𝕋^d` with `N` points per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusGrid {
    d: usize,
    n: usize,
}

impl TorusGrid {
    pub fn new(d: usize, n: usize) -> Result<Self, LatticeError> {
        check_dim(d)?;
        if n < 3 {
            return Err(LatticeError::GridTooSmall { n, radius: 1 });
        }
        Ok(Self { d, n })
    }

    /// Smallest grid with factors in {3, 5, 7, 11, 13} that holds a box of
    /// the given radius.
    pub fn for_radius(d: usize, radius: usize) -> Result<Self, LatticeError> {
        Self::new(d, fft::next_smooth_odd(2 * radius + 1))
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Largest box radius the grid can hold.
    pub fn max_radius(&self) -> usize {
        (self.n - 1) / 2
    }

    /// Frequency of index `k` along one axis, folded into `[-π, π]`.
    pub fn node(&self, k: usize) -> f64 {
        let n = self.n as i64;
        let mut j = k as i64;
        if 2 * j > n {
            j -= n;
        }
        2.0 * PI * j as f64 / n as f64
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    fn torus_index(&self, x: &[i64]) -> usize {
        let n = self.n as i64;
        x.iter().fold(0usize, |acc, &c| acc * self.n + c.rem_euclid(n) as usize)
    }
}

/// `ω(ξ) = 4 Σ_j sin²(ξ_j / 2)`.
pub fn symbol_omega(xi: &[f64]) -> f64 {
    xi.iter().map(|&x| {
        let s = (0.5 * x).sin();
        4.0 * s * s
    }).sum()
}

/// Discrete transform of `u` on the grid, indexed like a row-major `N^d` array.
pub fn lattice_fourier(u: &LatticeField, grid: &TorusGrid) -> Result<Vec<Complex64>, LatticeError> {
    if u.dim() != grid.dim() {
        return Err(LatticeError::DimensionMismatch(u.dim(), grid.dim()));
    }
    if grid.n < 2 * u.radius() + 1 {
        return Err(LatticeError::GridTooSmall { n: grid.n, radius: u.radius() });
    }
    let total = (grid.n as u64).pow(grid.d as u32);
    check_alloc(total * 16)?;
    let mut data = vec![Complex64::default(); total as usize];
    for (k, &v) in u.values().iter().enumerate() {
        if v != 0.0 {
            let x = u.point(k);
            data[grid.torus_index(&x[..u.dim()])] = Complex64::new(v, 0.0);
        }
    }
    fft::fft_nd(&mut data, grid.n, grid.d, FftDirection::Forward);
    Ok(data)
}

/// Frequency vector of a flat grid index.
fn grid_xi(grid: &TorusGrid, mut k: usize, xi: &mut [f64]) {
    for j in (0..grid.d).rev() {
        xi[j] = grid.node(k % grid.n);
        k /= grid.n;
    }
}

/// Apply the multiplier `m` to `u` and return the result on a box of radius
/// `out_radius` (defaults to the input radius).
pub fn apply_multiplier<M>(
    u: &LatticeField,
    m: M,
    grid: &TorusGrid,
    out_radius: Option<usize>,
) -> Result<LatticeField, LatticeError>
where
    M: Fn(&[f64]) -> Complex64,
{
    let out_r = out_radius.unwrap_or(u.radius());
    if out_r > grid.max_radius() {
        return Err(LatticeError::GridTooSmall { n: grid.n, radius: out_r });
    }
    let mut data = lattice_fourier(u, grid)?;
    let mut xi = [0.0; MAX_DIM];
    for (k, v) in data.iter_mut().enumerate() {
        grid_xi(grid, k, &mut xi);
        *v *= m(&xi[..grid.d]);
    }
    fft::fft_nd(&mut data, grid.n, grid.d, FftDirection::Inverse);
    let scale = 1.0 / data.len() as f64;
    let mut out = LatticeField::zeros(u.dim(), out_r)?;
    let mut max_im = 0.0f64;
    let mut max_re = 0.0f64;
    for k in 0..out.len() {
        let x = out.point(k);
        let z = data[grid.torus_index(&x[..u.dim()])] * scale;
        out.values[k] = z.re;
        max_im = max_im.max(z.im.abs());
        max_re = max_re.max(z.re.abs());
    }
    let reference = max_re.max(u.norm(1.0)).max(f64::MIN_POSITIVE);
    let residue = max_im / reference;
    if residue > RESIDUE_FATAL {
        return Err(LatticeError::NonRealOutput { residue });
    }
    if residue > RESIDUE_SILENT {
        RESIDUE_WARNINGS.fetch_add(1, Ordering::Relaxed);
    }
    Ok(out)
}

/// `(-Δ)^s u` through the multiplier `ω^s`, on the input box.
pub fn frac_laplacian(u: &LatticeField, s: FracOrder, grid: &TorusGrid) -> Result<LatticeField, LatticeError> {
    frac_laplacian_on(u, s, grid, None)
}

/// `(-Δ)^s u` on a box of the requested radius.
pub fn frac_laplacian_on(
    u: &LatticeField,
    s: FracOrder,
    grid: &TorusGrid,
    out_radius: Option<usize>,
) -> Result<LatticeField, LatticeError> {
    let sv = s.value();
    apply_multiplier(
        u,
        |xi| Complex64::new(if sv == 1.0 { symbol_omega(xi) } else { symbol_omega(xi).powf(sv) }, 0.0),
        grid,
        out_radius,
    )
}

/// `-Δu` from the nearest-neighbour stencil, on a box one step larger.
pub fn laplacian_stencil(u: &LatticeField) -> Result<LatticeField, LatticeError> {
    let d = u.dim();
    let mut out = LatticeField::zeros(d, u.radius() + 1)?;
    for k in 0..u.len() {
        let v = u.values[k];
        if v == 0.0 {
            continue;
        }
        let mut x = u.point(k);
        let c = out.offset(&x[..d]).expect("inner point");
        out.values[c] += 2.0 * d as f64 * v;
        for j in 0..d {
            for step in [-1i64, 1] {
                x[j] += step;
                let o = out.offset(&x[..d]).expect("neighbour inside the enlarged box");
                out.values[o] -= v;
                x[j] -= step;
            }
        }
    }
    Ok(out)
}

/// Operator-norm constant for `(-Δ)^s` on `ℓ^p(ℤ^d)`:
/// `2^{1+s} d^s / ((1-s) Γ(1-s))`, which equals `4d` at `s = 1`.
pub fn operator_norm_bound(d: usize, s: FracOrder) -> f64 {
    let sv = s.value();
    2f64.powf(1.0 + sv) * (d as f64).powf(sv) / statrs::function::gamma::gamma(2.0 - sv)
}
