//! Uniform periodic grids and complex fields sampled on them.
//!
//! A [`GridSpec`] describes an `n × n` lattice covering a square periodic cell
//! of side `side` centered at `origin`. Samples are stored row-major with the
//! `x` index running fastest: `values[iy * n + ix]`.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fft::Fft2;
use crate::par;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
    side: f64,
    origin: Complex64,
}

impl GridSpec {
    pub fn new(n: usize, side: f64, origin: Complex64) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(LabError::Config(format!(
                "grid size must be a power of two >= 16, got {n}"
            )));
        }
        if !(side > 0.0) || !side.is_finite() {
            return Err(LabError::Config(format!(
                "cell side must be positive, got {side}"
            )));
        }
        if !origin.re.is_finite() || !origin.im.is_finite() {
            return Err(LabError::Config("cell origin must be finite".into()));
        }
        Ok(Self { n, side, origin })
    }

    /// `n × n` grid on the `2π` cell centered at zero.
    pub fn standard(n: usize) -> Result<Self> {
        Self::new(n, 2.0 * PI, Complex64::new(0.0, 0.0))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn origin(&self) -> Complex64 {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Lattice spacing `side / n`.
    pub fn spacing(&self) -> f64 {
        self.side / self.n as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.spacing() * self.spacing()
    }

    /// Lower-left corner of the cell.
    pub fn corner(&self) -> Complex64 {
        self.origin - Complex64::new(self.side / 2.0, self.side / 2.0)
    }

    pub fn point(&self, ix: usize, iy: usize) -> Complex64 {
        let h = self.spacing();
        self.corner() + Complex64::new(ix as f64 * h, iy as f64 * h)
    }

    pub fn point_at(&self, index: usize) -> Complex64 {
        self.point(index % self.n, index / self.n)
    }

    /// Angular wavenumber of FFT bin `m`, with bins `>= n/2` wrapped negative.
    pub fn wavenumber(&self, m: usize) -> f64 {
        let signed = if m < self.n / 2 {
            m as f64
        } else {
            m as f64 - self.n as f64
        };
        2.0 * PI * signed / self.side
    }

    /// Distance from `z` to the nearest cell edge; negative outside the cell.
    pub fn edge_distance(&self, z: Complex64) -> f64 {
        let half = self.side / 2.0;
        let dx = half - (z.re - self.origin.re).abs();
        let dy = half - (z.im - self.origin.im).abs();
        dx.min(dy)
    }

    pub fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(LabError::GridMismatch(format!(
                "n={} side={} origin={} vs n={} side={} origin={}",
                self.n, self.side, self.origin, other.n, other.side, other.origin
            )))
        }
    }
}

/// Complex samples on a [`GridSpec`]. Real-valued quantities are stored with a
/// zero imaginary part.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    spec: GridSpec,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(spec: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(LabError::Config(format!(
                "field has {} samples, grid needs {}",
                values.len(),
                spec.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(LabError::Domain("field contains non-finite samples".into()));
        }
        Ok(Self { spec, values })
    }

    pub(crate) fn from_vec_unchecked(spec: GridSpec, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), spec.len());
        Self { spec, values }
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self::constant(spec, Complex64::new(0.0, 0.0))
    }

    pub fn constant(spec: GridSpec, c: Complex64) -> Self {
        Self {
            spec,
            values: vec![c; spec.len()],
        }
    }

    /// Sample `f(z)` at every lattice point.
    pub fn from_fn<F>(spec: GridSpec, f: F) -> Self
    where
        F: Fn(Complex64) -> Complex64 + Send + Sync,
    {
        let mut values = vec![Complex64::default(); spec.len()];
        par::for_each_row_mut(&mut values, spec.n, |iy, row| {
            for (ix, v) in row.iter_mut().enumerate() {
                *v = f(spec.point(ix, iy));
            }
        });
        Self { spec, values }
    }

    pub fn from_real_fn<F>(spec: GridSpec, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync,
    {
        Self::from_fn(spec, |z| Complex64::new(f(z.re, z.im), 0.0))
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn get(&self, ix: usize, iy: usize) -> Complex64 {
        self.values[iy * self.spec.n + ix]
    }

    pub fn map<F>(&self, f: F) -> Self
    where
        F: Fn(Complex64) -> Complex64 + Send + Sync,
    {
        let n = self.spec.n;
        let mut out = self.values.clone();
        par::for_each_row_mut(&mut out, n, |_, row| {
            for v in row.iter_mut() {
                *v = f(*v);
            }
        });
        Self::from_vec_unchecked(self.spec, out)
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map<F>(&self, other: &ComplexField, f: F) -> Result<Self>
    where
        F: Fn(Complex64, Complex64) -> Complex64 + Send + Sync,
    {
        self.spec.check_same(&other.spec)?;
        let n = self.spec.n;
        let mut out = self.values.clone();
        par::for_each_row_mut(&mut out, n, |iy, row| {
            let rhs = &other.values[iy * n..(iy + 1) * n];
            for (v, w) in row.iter_mut().zip(rhs) {
                *v = f(*v, *w);
            }
        });
        Ok(Self::from_vec_unchecked(self.spec, out))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(move |v| v * c)
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn real_part(&self) -> Self {
        self.map(|v| Complex64::new(v.re, 0.0))
    }

    pub fn imag_part(&self) -> Self {
        self.map(|v| Complex64::new(v.im, 0.0))
    }

    pub fn add(&self, other: &ComplexField) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ComplexField) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &ComplexField) -> Result<Self> {
        self.zip_map(other, |a, b| a * b)
    }

    /// Arithmetic mean of the samples.
    pub fn mean(&self) -> Complex64 {
        let n = self.spec.n;
        let re = par::row_sum(&self.values, n, |v| v.re);
        let im = par::row_sum(&self.values, n, |v| v.im);
        Complex64::new(re, im) / self.spec.len() as f64
    }

    /// Cell-area-weighted L² norm over the periodic cell.
    pub fn l2_norm(&self) -> f64 {
        let s = par::row_sum(&self.values, self.spec.n, |v| v.norm_sqr());
        (s * self.spec.cell_area()).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        par::map_rows(&self.values, self.spec.n, |_, row| {
            row.iter().map(|v| v.norm()).fold(0.0, f64::max)
        })
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// Largest absolute imaginary part; a realness diagnostic.
    pub fn max_abs_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    /// Relative L² distance `‖self − other‖ / ‖other‖` (absolute when `other` is zero).
    pub fn relative_l2_error(&self, other: &ComplexField) -> Result<f64> {
        let diff = self.sub(other)?.l2_norm();
        let scale = other.l2_norm();
        Ok(if scale > 0.0 { diff / scale } else { diff })
    }

    /// Lattice indices of samples in the closed disk `|z − center| ≤ r`.
    ///
    /// Fails unless the doubled disk `𝔻(center, 2r)` lies in the cell.
    pub fn disk_indices(&self, center: Complex64, r: f64) -> Result<Vec<usize>> {
        let spec = &self.spec;
        if !(r > 0.0) {
            return Err(LabError::Domain(format!("disk radius must be positive, got {r}")));
        }
        let slack = 1e-12 * spec.side;
        if spec.edge_distance(center) + slack < 2.0 * r {
            return Err(LabError::Domain(format!(
                "disk D({center}, 2*{r}) escapes the cell"
            )));
        }
        let h = spec.spacing();
        let corner = spec.corner();
        let lo = |c: f64, c0: f64| (((c - r - c0) / h).floor().max(0.0)) as usize;
        let hi = |c: f64, c0: f64| ((((c + r - c0) / h).ceil()) as usize).min(spec.n - 1);
        let mut out = Vec::new();
        for iy in lo(center.im, corner.im)..=hi(center.im, corner.im) {
            for ix in lo(center.re, corner.re)..=hi(center.re, corner.re) {
                if (spec.point(ix, iy) - center).norm() <= r {
                    out.push(iy * spec.n + ix);
                }
            }
        }
        if out.is_empty() {
            return Err(LabError::Domain(format!(
                "disk of radius {r} contains no lattice points"
            )));
        }
        Ok(out)
    }

    /// `(1/r²) ∫_𝔻 w`, with the integral estimated as the sample average over
    /// the disk times the exact disk area `π r²`.
    pub fn disk_mean(&self, center: Complex64, r: f64) -> Result<Complex64> {
        let idx = self.disk_indices(center, r)?;
        let sum: Complex64 = idx.iter().map(|&k| self.values[k]).sum();
        Ok(sum * (PI / idx.len() as f64))
    }

    /// `[(1/r²) ∫_𝔻 |w|²]^{1/2}` with the same quadrature as [`Self::disk_mean`].
    pub fn disk_l2(&self, center: Complex64, r: f64) -> Result<f64> {
        let idx = self.disk_indices(center, r)?;
        let sum: f64 = idx.iter().map(|&k| self.values[k].norm_sqr()).sum();
        Ok((sum * PI / idx.len() as f64).sqrt())
    }

    /// Apply a Fourier multiplier `symbol(kx, ky)`.
    pub fn apply_multiplier<F>(&self, symbol: F) -> Self
    where
        F: Fn(f64, f64) -> Complex64 + Send + Sync,
    {
        let spec = self.spec;
        let n = spec.n;
        let plan = Fft2::cached(n);
        let mut buf = self.values.clone();
        plan.forward(&mut buf);
        par::for_each_row_mut(&mut buf, n, |iy, row| {
            let ky = spec.wavenumber(iy);
            for (ix, v) in row.iter_mut().enumerate() {
                *v *= symbol(spec.wavenumber(ix), ky);
            }
        });
        plan.inverse(&mut buf);
        Self::from_vec_unchecked(spec, buf)
    }

    /// Spectral `∂/∂z = (∂x − i∂y)/2`.
    pub fn d_z(&self) -> Self {
        self.apply_multiplier(dz_symbol)
    }

    /// Spectral `∂/∂z̄ = (∂x + i∂y)/2`.
    pub fn d_zbar(&self) -> Self {
        self.apply_multiplier(dzbar_symbol)
    }

    pub fn d_x(&self) -> Self {
        self.apply_multiplier(|kx, _| I * kx)
    }

    pub fn d_y(&self) -> Self {
        self.apply_multiplier(|_, ky| I * ky)
    }

    /// Write the field in the `ix,iy,x,y,re,im` dump format.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["ix", "iy", "x", "y", "re", "im"])?;
        let n = self.spec.n;
        for iy in 0..n {
            for ix in 0..n {
                let z = self.spec.point(ix, iy);
                let v = self.get(ix, iy);
                w.write_record(&[
                    ix.to_string(),
                    iy.to_string(),
                    format!("{:.16e}", z.re),
                    format!("{:.16e}", z.im),
                    format!("{:.16e}", v.re),
                    format!("{:.16e}", v.im),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Read a field dump onto `spec`; lattice coordinates must agree with the grid.
    pub fn read_csv<R: Read>(reader: R, spec: GridSpec) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(reader);
        let headers = rd.headers()?.clone();
        let expected = ["ix", "iy", "x", "y", "re", "im"];
        if headers.iter().ne(expected.iter().copied()) {
            return Err(LabError::Config(format!(
                "field csv header must be {}, got {}",
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let n = spec.n;
        let mut values = vec![Complex64::default(); spec.len()];
        let mut seen = vec![false; spec.len()];
        let tol = 1e-9 * spec.side;
        for rec in rd.records() {
            let rec = rec?;
            let parse = |k: usize| -> Result<f64> {
                rec[k]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| LabError::Config(format!("bad number {:?}: {e}", &rec[k])))
            };
            let ix = parse(0)? as usize;
            let iy = parse(1)? as usize;
            if ix >= n || iy >= n {
                return Err(LabError::GridMismatch(format!(
                    "sample ({ix},{iy}) outside {n}x{n} grid"
                )));
            }
            let z = Complex64::new(parse(2)?, parse(3)?);
            if (z - spec.point(ix, iy)).norm() > tol {
                return Err(LabError::GridMismatch(format!(
                    "sample ({ix},{iy}) at {z} does not match lattice point {}",
                    spec.point(ix, iy)
                )));
            }
            values[iy * n + ix] = Complex64::new(parse(4)?, parse(5)?);
            seen[iy * n + ix] = true;
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(LabError::GridMismatch(format!(
                "field csv is missing sample ({},{})",
                k % n,
                k / n
            )));
        }
        Self::new(spec, values)
    }

    pub fn load_csv(path: &Path, spec: GridSpec) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file), spec)
    }
}

pub(crate) fn dz_symbol(kx: f64, ky: f64) -> Complex64 {
    Complex64::new(ky, kx) * 0.5
}

pub(crate) fn dzbar_symbol(kx: f64, ky: f64) -> Complex64 {
    Complex64::new(-ky, kx) * 0.5
}

/// The lattice coordinate field `z`.
pub fn coordinate_field(spec: GridSpec) -> ComplexField {
    ComplexField::from_fn(spec, |z| z)
}
