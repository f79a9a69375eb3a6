//! Circular cross-correlation on the discrete torus via multi-axis FFT.
//!
//! The correlation array `c(tau) = <m, tau . x>` is obtained as
//! `IDFT(conj(DFT(m)) * DFT(x))`, one DFT per torus axis. This is the fast
//! path behind FFT registration; exact tie handling is done by the caller,
//! which re-evaluates near-maximal lags with direct dot products.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::torus::TorusLayout;

pub(crate) struct TorusCorrelator {
    layout: TorusLayout,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl TorusCorrelator {
    pub fn new(shape: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        let forward = shape
            .iter()
            .map(|&n| planner.plan_fft_forward(n))
            .collect();
        let inverse = shape
            .iter()
            .map(|&n| planner.plan_fft_inverse(n))
            .collect();
        Self {
            layout: TorusLayout::new(shape),
            forward,
            inverse,
        }
    }

    pub fn layout(&self) -> &TorusLayout {
        &self.layout
    }

    fn transform_axis(&self, buf: &mut [Complex64], axis: usize, fwd: bool) {
        let n = self.layout.shape()[axis];
        let stride = self.layout.stride(axis);
        let block = n * stride;
        let plan = if fwd {
            &self.forward[axis]
        } else {
            &self.inverse[axis]
        };
        let mut line = vec![Complex64::default(); n];
        for outer in 0..self.layout.size() / block {
            for inner in 0..stride {
                let base = outer * block + inner;
                for (i, slot) in line.iter_mut().enumerate() {
                    *slot = buf[base + i * stride];
                }
                plan.process(&mut line);
                for (i, value) in line.iter().enumerate() {
                    buf[base + i * stride] = *value;
                }
            }
        }
    }

    fn transform(&self, buf: &mut [Complex64], fwd: bool) {
        for axis in 0..self.layout.ndim() {
            self.transform_axis(buf, axis, fwd);
        }
    }

    /// Writes the full correlation array `out[flat(tau)] = <m, tau . x>`.
    pub fn correlation(&self, x: &[f64], m: &[f64], out: &mut Vec<f64>) {
        let size = self.layout.size();
        let mut bx: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut bm: Vec<Complex64> = m.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut bx, true);
        self.transform(&mut bm, true);
        for (a, b) in bx.iter_mut().zip(&bm) {
            *a *= b.conj();
        }
        self.transform(&mut bx, false);
        let scale = 1.0 / size as f64;
        out.clear();
        out.extend(bx.iter().map(|c| c.re * scale));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn correlation_matches_direct_1d() {
        let corr = TorusCorrelator::new(&[8]);
        let x: Vec<f64> = (0..8).map(|i| (i as f64 * 0.7).sin()).collect();
        let m: Vec<f64> = (0..8).map(|i| (i as f64 * 1.3).cos()).collect();
        let mut out = Vec::new();
        corr.correlation(&x, &m, &mut out);
        for tau in 0..8usize {
            let direct = corr.layout().dot_shifted(&m, &x, &[tau]);
            assert!((out[tau] - direct).abs() < 1e-12, "tau={tau}");
        }
    }

    #[test]
    fn correlation_matches_direct_2d() {
        let corr = TorusCorrelator::new(&[4, 6]);
        let x: Vec<f64> = (0..24).map(|i| ((i * 37 % 11) as f64) - 5.0).collect();
        let m: Vec<f64> = (0..24).map(|i| ((i * 17 % 7) as f64) * 0.5).collect();
        let mut out = Vec::new();
        corr.correlation(&x, &m, &mut out);
        for flat in 0..24usize {
            let tau = corr.layout().unflatten(flat);
            let direct = corr.layout().dot_shifted(&m, &x, &tau);
            assert!((out[flat] - direct).abs() < 1e-11, "tau={tau:?}");
        }
    }
}
