//! Compactly supported test functions with closed-form derivatives.
//!
//! The radial cutoff is `(1 − ρ)^10`, `ρ = |z − c|²/R²`: a `C⁹` profile whose
//! lattice sums converge fast enough that quadrature error stays far below the
//! residuals being measured.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::grid::GridSpec;

/// `φ(z) = (1 + p·(z − c)/R) · (1 − |z − c|²/R²)^10`, where the
/// polynomial factor is `1 + px·dx/R + py·dy/R`.
const CUTOFF_POWER: i32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestBump {
    pub center: Complex64,
    pub radius: f64,
    pub px: f64,
    pub py: f64,
}

/// `φ` and its derivatives up to second order at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BumpJet {
    pub phi: f64,
    pub x: f64,
    pub y: f64,
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl TestBump {
    pub fn new(spec: &GridSpec, center: Complex64, radius: f64, px: f64, py: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(LabError::Domain(format!("bump radius must be positive, got {radius}")));
        }
        if spec.edge_distance(center) <= radius {
            return Err(LabError::Domain(format!(
                "bump support D({center}, {radius}) escapes the cell"
            )));
        }
        Ok(Self { center, radius, px, py })
    }

    pub fn jet(&self, z: Complex64) -> BumpJet {
        let r2 = self.radius * self.radius;
        let dx = z.re - self.center.re;
        let dy = z.im - self.center.im;
        let rho = (dx * dx + dy * dy) / r2;
        if rho >= 1.0 {
            return BumpJet::default();
        }
        let s = 1.0 - rho;
        let m = CUTOFF_POWER;
        let q = s.powi(m);
        let q1 = -(m as f64) * s.powi(m - 1);
        let q2 = (m * (m - 1)) as f64 * s.powi(m - 2);
        let (rx, ry, rxx) = (2.0 * dx / r2, 2.0 * dy / r2, 2.0 / r2);
        let qx = q1 * rx;
        let qy = q1 * ry;
        let qxx = q2 * rx * rx + q1 * rxx;
        let qxy = q2 * rx * ry;
        let qyy = q2 * ry * ry + q1 * rxx;

        let p = 1.0 + (self.px * dx + self.py * dy) / self.radius;
        let p_x = self.px / self.radius;
        let p_y = self.py / self.radius;
        BumpJet {
            phi: p * q,
            x: p_x * q + p * qx,
            y: p_y * q + p * qy,
            xx: 2.0 * p_x * qx + p * qxx,
            xy: p_x * qy + p_y * qx + p * qxy,
            yy: 2.0 * p_y * qy + p * qyy,
        }
    }

    /// Lattice samples inside the support with their jets.
    pub fn samples(&self, spec: &GridSpec) -> Vec<(usize, BumpJet)> {
        let h = spec.spacing();
        let corner = spec.corner();
        let n = spec.n();
        let lo = |c: f64, c0: f64| (((c - self.radius - c0) / h).floor().max(0.0)) as usize;
        let hi = |c: f64, c0: f64| ((((c + self.radius - c0) / h).ceil()) as usize).min(n - 1);
        let mut out = Vec::new();
        for iy in lo(self.center.im, corner.im)..=hi(self.center.im, corner.im) {
            for ix in lo(self.center.re, corner.re)..=hi(self.center.re, corner.re) {
                let z = spec.point(ix, iy);
                if (z - self.center).norm_sqr() < self.radius * self.radius {
                    out.push((iy * n + ix, self.jet(z)));
                }
            }
        }
        out
    }

    /// Five fixed bumps plus `random` seeded ones, all strictly inside the cell.
    pub fn battery(spec: &GridSpec, random: usize, seed: u64) -> Result<Vec<TestBump>> {
        let l = spec.side();
        let o = spec.origin();
        let off = |fx: f64, fy: f64| o + Complex64::new(fx * l, fy * l);
        let mut out = vec![
            TestBump::new(spec, o, 0.3 * l, 0.0, 0.0)?,
            TestBump::new(spec, off(0.22, 0.22), 0.2 * l, 0.5, 0.0)?,
            TestBump::new(spec, off(-0.22, 0.22), 0.2 * l, 0.0, -0.5)?,
            TestBump::new(spec, off(-0.22, -0.22), 0.2 * l, 0.3, 0.3)?,
            TestBump::new(spec, off(0.22, -0.22), 0.2 * l, -0.4, 0.2)?,
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..random {
            let radius = rng.random_range(0.12..0.3) * l;
            let span = 0.5 * l - radius - 0.02 * l;
            let cx = rng.random_range(-span..span);
            let cy = rng.random_range(-span..span);
            let px = rng.random_range(-0.5..0.5);
            let py = rng.random_range(-0.5..0.5);
            out.push(TestBump::new(spec, o + Complex64::new(cx, cy), radius, px, py)?);
        }
        Ok(out)
    }
}
