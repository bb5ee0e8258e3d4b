//! Fourier-multiplier Cauchy and Beurling transforms on the periodic cell.
//!
//! The Cauchy transform inverts `∂/∂z̄` on mean-zero fields and the Beurling
//! transform is `S = ∂/∂z ∘ C`. Both annihilate the zero frequency. In Fourier
//! variables the Beurling symbol is `ξ̄/ξ` with `ξ = kx + i ky`, which has unit
//! modulus at every nonzero frequency, so `S` is an isometry of mean-zero `L²`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::Result;
use crate::fft::Fft2;
use crate::grid::{dz_symbol, dzbar_symbol, ComplexField, GridSpec};
use crate::par;

/// Multiplier tables for one grid, laid out in FFT bin order.
#[derive(Debug, Clone)]
pub struct TransformPlan {
    spec: GridSpec,
    fft: Arc<Fft2>,
    dz: Vec<Complex64>,
    dzbar: Vec<Complex64>,
    cauchy: Vec<Complex64>,
    beurling: Vec<Complex64>,
}

impl TransformPlan {
    pub fn new(spec: GridSpec) -> Self {
        let n = spec.n();
        let mut dz = Vec::with_capacity(spec.len());
        let mut dzbar = Vec::with_capacity(spec.len());
        let mut cauchy = Vec::with_capacity(spec.len());
        let mut beurling = Vec::with_capacity(spec.len());
        for iy in 0..n {
            let ky = spec.wavenumber(iy);
            for ix in 0..n {
                let kx = spec.wavenumber(ix);
                let a = dz_symbol(kx, ky);
                let b = dzbar_symbol(kx, ky);
                dz.push(a);
                dzbar.push(b);
                if ix == 0 && iy == 0 {
                    cauchy.push(Complex64::new(0.0, 0.0));
                    beurling.push(Complex64::new(0.0, 0.0));
                } else {
                    cauchy.push(1.0 / b);
                    beurling.push(a / b);
                }
            }
        }
        Self {
            spec,
            fft: Fft2::cached(n),
            dz,
            dzbar,
            cauchy,
            beurling,
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// Beurling symbol at FFT bin `(ix, iy)`.
    pub fn beurling_symbol(&self, ix: usize, iy: usize) -> Complex64 {
        self.beurling[iy * self.spec.n() + ix]
    }

    pub fn cauchy_transform(&self, omega: &ComplexField) -> Result<ComplexField> {
        self.apply(omega, &self.cauchy)
    }

    pub fn beurling_transform(&self, omega: &ComplexField) -> Result<ComplexField> {
        self.apply(omega, &self.beurling)
    }

    pub fn d_z(&self, field: &ComplexField) -> Result<ComplexField> {
        self.apply(field, &self.dz)
    }

    pub fn d_zbar(&self, field: &ComplexField) -> Result<ComplexField> {
        self.apply(field, &self.dzbar)
    }

    /// `S ω` written into `out`, reusing its allocation.
    pub(crate) fn beurling_into(&self, omega: &[Complex64], out: &mut Vec<Complex64>) {
        out.clear();
        out.extend_from_slice(omega);
        self.multiply_in_place(out, &self.beurling);
    }

    /// Zero every mode with `|m| > n/3` along either axis (2/3-rule filter).
    pub(crate) fn dealias_in_place(&self, data: &mut [Complex64]) {
        let n = self.spec.n();
        let cut = n / 3;
        let keep = |m: usize| m.min(n - m) <= cut;
        self.fft.forward(data);
        par::for_each_row_mut(data, n, |iy, row| {
            let ky_ok = keep(iy);
            for (ix, v) in row.iter_mut().enumerate() {
                if !(ky_ok && keep(ix)) {
                    *v = Complex64::new(0.0, 0.0);
                }
            }
        });
        self.fft.inverse(data);
    }

    fn apply(&self, field: &ComplexField, table: &[Complex64]) -> Result<ComplexField> {
        self.spec.check_same(field.spec())?;
        let mut buf = field.values().to_vec();
        self.multiply_in_place(&mut buf, table);
        Ok(ComplexField::from_vec_unchecked(self.spec, buf))
    }

    fn multiply_in_place(&self, buf: &mut [Complex64], table: &[Complex64]) {
        let n = self.spec.n();
        self.fft.forward(buf);
        par::for_each_row_mut(buf, n, |iy, row| {
            let t = &table[iy * n..(iy + 1) * n];
            for (v, m) in row.iter_mut().zip(t) {
                *v *= m;
            }
        });
        self.fft.inverse(buf);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize) -> GridSpec {
        GridSpec::standard(n).unwrap()
    }

    #[test]
    fn symbol_conventions() {
        let plan = TransformPlan::new(spec(32));
        assert_eq!(plan.beurling_symbol(0, 0), Complex64::new(0.0, 0.0));
        for iy in 0..32 {
            for ix in 0..32 {
                if ix + iy > 0 {
                    assert!((plan.beurling_symbol(ix, iy).norm() - 1.0).abs() < 1e-15);
                }
            }
        }
        assert_eq!(plan.cauchy[0], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn zero_in_zero_out() {
        let plan = TransformPlan::new(spec(16));
        let zero = ComplexField::zeros(*plan.spec());
        assert_eq!(plan.cauchy_transform(&zero).unwrap().sup_norm(), 0.0);
        assert_eq!(plan.beurling_transform(&zero).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn cauchy_of_single_mode() {
        // inverting the ∂z̄ symbol i/2 on e^{ix} gives (2/i) e^{ix}
        let plan = TransformPlan::new(spec(32));
        let w = ComplexField::from_fn(*plan.spec(), |z| Complex64::from_polar(1.0, z.re));
        let g = plan.cauchy_transform(&w).unwrap();
        let want = w.scale(Complex64::new(2.0, 0.0) / Complex64::new(0.0, 1.0));
        assert!(g.sub(&want).unwrap().sup_norm() < 1e-13);
        assert!(plan.d_zbar(&g).unwrap().sub(&w).unwrap().sup_norm() < 1e-13);
    }

    #[test]
    fn cauchy_of_constant_is_zero() {
        let plan = TransformPlan::new(spec(16));
        let w = ComplexField::constant(*plan.spec(), Complex64::new(0.7, -2.0));
        assert!(plan.cauchy_transform(&w).unwrap().sup_norm() < 1e-14);
    }

    #[test]
    fn beurling_fixes_pure_x_mode() {
        let plan = TransformPlan::new(spec(32));
        let w = ComplexField::from_fn(*plan.spec(), |z| Complex64::from_polar(1.0, z.re));
        let s = plan.beurling_transform(&w).unwrap();
        assert!(s.sub(&w).unwrap().sup_norm() < 1e-13);
        for (a, b) in s.values().iter().zip(w.values()) {
            assert!((a.norm() - b.norm()).abs() < 1e-13);
        }
    }

    #[test]
    fn dealias_keeps_low_modes() {
        let plan = TransformPlan::new(spec(32));
        let low = ComplexField::from_fn(*plan.spec(), |z| Complex64::from_polar(1.0, 3.0 * z.re - 2.0 * z.im));
        let mut buf = low.values().to_vec();
        plan.dealias_in_place(&mut buf);
        let back = ComplexField::new(*plan.spec(), buf).unwrap();
        assert!(back.sub(&low).unwrap().sup_norm() < 1e-13);

        let high = ComplexField::from_fn(*plan.spec(), |z| Complex64::from_polar(1.0, 14.0 * z.re));
        let mut buf = high.values().to_vec();
        plan.dealias_in_place(&mut buf);
        assert!(buf.iter().all(|v| v.norm() < 1e-13));
    }
}
