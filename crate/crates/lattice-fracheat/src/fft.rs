//! Transform plumbing over row-major `d`-dimensional arrays.

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::sync::Arc;

/// Smallest odd integer `>= n` whose prime factors all lie in {3, 5, 7, 11, 13}.
pub(crate) fn next_smooth_odd(n: usize) -> usize {
    let mut m = n.max(3) | 1;
    loop {
        let mut r = m;
        for p in [3usize, 5, 7, 11, 13] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 2;
    }
}

pub(crate) fn plan(n: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft(n, direction)
}

/// In-place `d`-dimensional transform of an `n^d` row-major array.
pub(crate) fn fft_nd(data: &mut [Complex64], n: usize, d: usize, direction: FftDirection) {
    debug_assert_eq!(data.len(), n.pow(d as u32));
    let fft = plan(n, direction);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    let mut line = vec![Complex64::default(); n];
    for axis in 0..d {
        let stride = n.pow((d - 1 - axis) as u32);
        if stride == 1 {
            fft.process_with_scratch(data, &mut scratch);
            continue;
        }
        let outer = data.len() / (n * stride);
        for o in 0..outer {
            let base = o * n * stride;
            for i in 0..stride {
                for (k, v) in line.iter_mut().enumerate() {
                    *v = data[base + k * stride + i];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (k, v) in line.iter().enumerate() {
                    data[base + k * stride + i] = *v;
                }
            }
        }
    }
}

/// Even-sequence transform along one axis.
///
/// Each line along `axis` carries samples `F_0..F_h` of a sequence that is
/// even with odd period `n = 2h + 1`. Output lines hold
/// `(1/n) [F_0 + 2 Σ_{j=1}^{h} F_j cos(2π j x / n)]` for `x = 0..=keep`.
/// Lines are generated by `fill` so the input need not be materialised.
pub(crate) struct EvenTransform {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    buf: Vec<Complex64>,
}

impl EvenTransform {
    pub(crate) fn new(n: usize) -> Self {
        assert!(n % 2 == 1, "even transform needs an odd period");
        let fft = plan(n, FftDirection::Inverse);
        let scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        Self {
            n,
            fft,
            scratch,
            buf: vec![Complex64::default(); n],
        }
    }

    fn half(&self) -> usize {
        (self.n - 1) / 2
    }

    /// Transform two lines in one complex pass; both results are real.
    fn pair(&mut self, a: &[f64], b: Option<&[f64]>, out_a: &mut [f64], out_b: Option<&mut [f64]>) {
        let h = self.half();
        let n = self.n;
        self.buf[0] = Complex64::new(a[0], b.map_or(0.0, |b| b[0]));
        for j in 1..=h {
            let v = Complex64::new(a[j], b.map_or(0.0, |b| b[j]));
            self.buf[j] = v;
            self.buf[n - j] = v;
        }
        self.fft.process_with_scratch(&mut self.buf, &mut self.scratch);
        let scale = 1.0 / n as f64;
        for (x, o) in out_a.iter_mut().enumerate() {
            *o = self.buf[x].re * scale;
        }
        if let Some(out_b) = out_b {
            for (x, o) in out_b.iter_mut().enumerate() {
                *o = self.buf[x].im * scale;
            }
        }
    }

    /// Apply along `axis` of an array with shape `dims`; the axis length must
    /// be `h + 1` on input and becomes `keep + 1` on output.
    pub(crate) fn along_axis<F>(&mut self, dims: &[usize], axis: usize, keep: usize, mut fill: F) -> Vec<f64>
    where
        F: FnMut(usize, usize, &mut [f64]),
    {
        let h = self.half();
        assert_eq!(dims[axis], h + 1);
        assert!(keep <= h);
        let stride: usize = dims[axis + 1..].iter().product();
        let outer: usize = dims[..axis].iter().product();
        let mut out = vec![0.0; outer * (keep + 1) * stride];
        let lines = outer * stride;
        let mut la = vec![0.0; h + 1];
        let mut lb = vec![0.0; h + 1];
        let mut oa = vec![0.0; keep + 1];
        let mut ob = vec![0.0; keep + 1];
        let scatter = |line: usize, vals: &[f64], out: &mut [f64]| {
            let (o, i) = (line / stride, line % stride);
            let base = o * (keep + 1) * stride + i;
            for (x, v) in vals.iter().enumerate() {
                out[base + x * stride] = *v;
            }
        };
        let mut line = 0;
        while line < lines {
            fill(line / stride, line % stride, &mut la);
            if line + 1 < lines {
                fill((line + 1) / stride, (line + 1) % stride, &mut lb);
                self.pair(&la, Some(&lb), &mut oa, Some(&mut ob));
                scatter(line, &oa, &mut out);
                scatter(line + 1, &ob, &mut out);
                line += 2;
            } else {
                self.pair(&la, None, &mut oa, None);
                scatter(line, &oa, &mut out);
                line += 1;
            }
        }
        out
    }
}

/// Gather helper for [`EvenTransform::along_axis`] over a stored array.
pub(crate) fn gather_line(data: &[f64], dims: &[usize], axis: usize, outer: usize, inner: usize, line: &mut [f64]) {
    let stride: usize = dims[axis + 1..].iter().product();
    let base = outer * dims[axis] * stride + inner;
    for (k, v) in line.iter_mut().enumerate() {
        *v = data[base + k * stride];
    }
}
