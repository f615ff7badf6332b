//! Thin wrapper around rustfft for the 1-D and 2-D complex transforms used by
//! the spectral code paths.
//!
//! Conventions: `forward` is the unnormalized DFT `X_k = sum_j x_j e^{-2pi i jk/N}`,
//! `inverse` the unnormalized adjoint; callers divide by the point count where a
//! true inverse is needed.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

#[derive(Clone)]
pub(crate) struct Dft {
    len: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Dft {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            len,
            fwd: planner.plan_fft_forward(len),
            inv: planner.plan_fft_inverse(len),
        }
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len);
        self.fwd.process(buf);
    }

    pub fn inverse(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len);
        self.inv.process(buf);
    }
}

/// Spatial transform for one flattened slice: 1-D for `dim == 1`, row-column
/// 2-D for `dim == 2` (row-major, `axis_len` points per axis).
#[derive(Clone)]
pub(crate) struct SpatialDft {
    dim: usize,
    axis_len: usize,
    dft: Dft,
}

impl SpatialDft {
    pub fn new(dim: usize, axis_len: usize) -> Self {
        Self {
            dim,
            axis_len,
            dft: Dft::new(axis_len),
        }
    }

    pub fn total_len(&self) -> usize {
        self.axis_len.pow(self.dim as u32)
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.transform(buf, true);
    }

    /// Unnormalized inverse; divide by `total_len()` for the true inverse.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.transform(buf, false);
    }

    fn transform(&self, buf: &mut [Complex64], forward: bool) {
        debug_assert_eq!(buf.len(), self.total_len());
        let n = self.axis_len;
        let go = |row: &mut [Complex64]| {
            if forward {
                self.dft.forward(row);
            } else {
                self.dft.inverse(row);
            }
        };
        match self.dim {
            1 => go(buf),
            2 => {
                for row in buf.chunks_mut(n) {
                    go(row);
                }
                // columns via transpose, rows again, transpose back
                let mut scratch = vec![Complex64::default(); n * n];
                transpose(buf, &mut scratch, n);
                for row in scratch.chunks_mut(n) {
                    go(row);
                }
                transpose(&scratch, buf, n);
            }
            d => unreachable!("unsupported spatial dimension {d}"),
        }
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in 0..n {
            dst[j * n + i] = src[i * n + j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_1d() {
        let dft = SpatialDft::new(1, 16);
        let orig: Vec<Complex64> = (0..16).map(|i| Complex64::new(i as f64, -(i as f64))).collect();
        let mut buf = orig.clone();
        dft.forward(&mut buf);
        dft.inverse(&mut buf);
        for (a, b) in buf.iter().zip(&orig) {
            assert!((a / 16.0 - b).norm() < 1e-12);
        }
    }

    #[test]
    fn roundtrip_2d() {
        let dft = SpatialDft::new(2, 8);
        let orig: Vec<Complex64> = (0..64).map(|i| Complex64::new((i * 7 % 13) as f64, 0.3 * i as f64)).collect();
        let mut buf = orig.clone();
        dft.forward(&mut buf);
        dft.inverse(&mut buf);
        for (a, b) in buf.iter().zip(&orig) {
            assert!((a / 64.0 - b).norm() < 1e-12);
        }
    }

    #[test]
    fn forward_matches_direct_sum() {
        let dft = SpatialDft::new(1, 8);
        let x: Vec<Complex64> = (0..8).map(|i| Complex64::new((i as f64).sin(), 0.0)).collect();
        let mut buf = x.clone();
        dft.forward(&mut buf);
        for k in 0..8 {
            let mut s = Complex64::default();
            for (j, xj) in x.iter().enumerate() {
                let ph = -2.0 * std::f64::consts::PI * (j * k) as f64 / 8.0;
                s += xj * Complex64::new(ph.cos(), ph.sin());
            }
            assert!((s - buf[k]).norm() < 1e-12);
        }
    }
}
