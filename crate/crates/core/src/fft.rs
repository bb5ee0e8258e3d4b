//! Square 2-D FFT on row-major `n × n` buffers.
//!
//! Rows are transformed in place, then the buffer is transposed, rows are
//! transformed again and the buffer is transposed back. Both passes are
//! row-parallel.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::par;

pub struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("n", &self.n).finish()
    }
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    /// Shared plan for size `n`; plans are built once per process.
    pub fn cached(n: usize) -> Arc<Fft2> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Fft2>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("fft plan cache poisoned");
        guard
            .entry(n)
            .or_insert_with(|| Arc::new(Fft2::new(n)))
            .clone()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Unnormalized forward transform.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.forward);
    }

    /// Inverse transform, normalized by `1/n²` so that `inverse(forward(x)) = x`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inverse);
        let scale = 1.0 / (self.n * self.n) as f64;
        par::for_each_row_mut(data, self.n, |_, row| {
            for v in row.iter_mut() {
                *v *= scale;
            }
        });
    }

    fn run(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        assert_eq!(data.len(), n * n, "buffer is not n x n");
        let scratch_len = plan.get_inplace_scratch_len();
        let rows = |buf: &mut [Complex64]| {
            par::for_each_row_mut_init(
                buf,
                n,
                || vec![Complex64::default(); scratch_len],
                |scratch, _, row| plan.process_with_scratch(row, scratch),
            );
        };
        rows(data);
        let mut t = transpose(data, n);
        rows(&mut t);
        let back = transpose(&t, n);
        data.copy_from_slice(&back);
    }
}

fn transpose(data: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); n * n];
    par::for_each_row_mut(&mut out, n, |j, row| {
        for (i, v) in row.iter_mut().enumerate() {
            *v = data[i * n + j];
        }
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_identity() {
        let n = 16;
        let data: Vec<Complex64> = (0..n * n)
            .map(|k| Complex64::new((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos()))
            .collect();
        let mut buf = data.clone();
        let plan = Fft2::cached(n);
        plan.forward(&mut buf);
        plan.inverse(&mut buf);
        for (a, b) in data.iter().zip(&buf) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn single_mode_lands_in_one_bin() {
        let n = 16;
        let mut buf: Vec<Complex64> = (0..n * n)
            .map(|k| {
                let (iy, ix) = (k / n, k % n);
                let phase = 2.0 * std::f64::consts::PI * (3 * ix + 5 * iy) as f64 / n as f64;
                Complex64::from_polar(1.0, phase)
            })
            .collect();
        Fft2::cached(n).forward(&mut buf);
        for (k, v) in buf.iter().enumerate() {
            let expected = if k == 5 * n + 3 { (n * n) as f64 } else { 0.0 };
            assert!((v.norm() - expected).abs() < 1e-9, "bin {k}: {v}");
        }
    }
}
