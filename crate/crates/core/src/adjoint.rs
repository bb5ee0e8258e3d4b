//! The divergence-form equation satisfied by `u = Re f` for reduced solutions,
//! its adjoint non-divergence operator `L = ∂xx + a12 ∂xy + a22 ∂yy`, disk-scale
//! reverse Hölder ratios and zero-set fractions.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bump::TestBump;
use crate::error::{LabError, Result};
use crate::grid::{ComplexField, GridSpec};
use crate::par;
use crate::solver::ReducedCoefficient;

/// `A = [[1, a12], [0, a22]]` and its symmetrization `σ = [[1, a12/2], [a12/2, a22]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticCoefficients {
    pub a12: ComplexField,
    pub a22: ComplexField,
    k_ell: f64,
}

impl EllipticCoefficients {
    pub fn new(a12: ComplexField, a22: ComplexField) -> Result<Self> {
        a12.spec().check_same(a22.spec())?;
        let mut k_ell: f64 = 1.0;
        for (b, d) in a12.values().iter().zip(a22.values()) {
            let (lo, hi) = sigma_eigenvalues(b.re, d.re);
            if !(d.re > 0.0) || !(lo > 0.0) {
                return Err(LabError::Ellipticity { sup: 1.0 / lo.max(0.0), bound: f64::INFINITY });
            }
            k_ell = k_ell.max(hi).max(1.0 / lo);
        }
        Ok(Self { a12, a22, k_ell })
    }

    pub fn spec(&self) -> &GridSpec {
        self.a12.spec()
    }

    /// Smallest `K` with `|ξ|²/K ≤ ⟨σξ,ξ⟩ ≤ K|ξ|²` at every sample.
    pub fn k_ell(&self) -> f64 {
        self.k_ell
    }

    /// `(σ11, σ12, σ22)` at sample `k`.
    pub fn sigma(&self, k: usize) -> (f64, f64, f64) {
        (1.0, 0.5 * self.a12.values()[k].re, self.a22.values()[k].re)
    }
}

fn sigma_eigenvalues(a12: f64, a22: f64) -> (f64, f64) {
    let tr = 1.0 + a22;
    let disc = ((1.0 - a22).powi(2) + a12 * a12).sqrt();
    (0.5 * (tr - disc), 0.5 * (tr + disc))
}

/// `a12 = 2α/(1 − β)`, `a22 = (1 + β)/(1 − β)`.
pub fn coefficients_from_lambda(lambda: &ReducedCoefficient) -> Result<EllipticCoefficients> {
    let spec = *lambda.spec();
    let mut a12 = Vec::with_capacity(spec.len());
    let mut a22 = Vec::with_capacity(spec.len());
    for (al, be) in lambda.alpha.values().iter().zip(lambda.beta.values()) {
        let (alpha, beta) = (al.re, be.re);
        if !(beta < 1.0) {
            return Err(LabError::Ellipticity { sup: beta, bound: 1.0 });
        }
        a12.push(Complex64::new(2.0 * alpha / (1.0 - beta), 0.0));
        a22.push(Complex64::new((1.0 + beta) / (1.0 - beta), 0.0));
    }
    EllipticCoefficients::new(ComplexField::new(spec, a12)?, ComplexField::new(spec, a22)?)
}

fn check_bumps(spec: &GridSpec, bumps: &[TestBump]) -> Result<()> {
    for b in bumps {
        if spec.edge_distance(b.center) <= b.radius {
            return Err(LabError::Domain(format!(
                "bump support D({}, {}) escapes the cell",
                b.center, b.radius
            )));
        }
    }
    Ok(())
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

/// `max_φ |∫ ∇φ·A∇u| / (‖∇φ‖₂‖∇u‖₂)`, norms over the support of `φ`.
///
/// `u_x`, `u_y` are the gradient components of `u` (real fields).
pub fn weak_divergence_residual(
    u_x: &ComplexField,
    u_y: &ComplexField,
    coeffs: &EllipticCoefficients,
    bumps: &[TestBump],
) -> Result<f64> {
    let spec = *coeffs.spec();
    spec.check_same(u_x.spec())?;
    spec.check_same(u_y.spec())?;
    check_bumps(&spec, bumps)?;
    let per_bump = par::map_range(bumps.len(), |i| {
        let (mut integral, mut g_phi, mut g_u) = (0.0, 0.0, 0.0);
        for (k, j) in bumps[i].samples(&spec) {
            let ux = u_x.values()[k].re;
            let uy = u_y.values()[k].re;
            let a12 = coeffs.a12.values()[k].re;
            let a22 = coeffs.a22.values()[k].re;
            integral += j.x * (ux + a12 * uy) + j.y * a22 * uy;
            g_phi += j.x * j.x + j.y * j.y;
            g_u += ux * ux + uy * uy;
        }
        ratio(integral.abs(), (g_phi * g_u).sqrt())
    });
    Ok(per_bump.into_iter().fold(0.0, f64::max))
}

/// `max_φ |∫ w·Lφ| / (‖w‖₂‖Lφ‖₂)`, norms over the support of `φ`.
pub fn adjoint_residual(w: &ComplexField, coeffs: &EllipticCoefficients, bumps: &[TestBump]) -> Result<f64> {
    let spec = *coeffs.spec();
    spec.check_same(w.spec())?;
    check_bumps(&spec, bumps)?;
    let per_bump = par::map_range(bumps.len(), |i| {
        let (mut integral, mut g_l, mut g_w) = (0.0, 0.0, 0.0);
        for (k, j) in bumps[i].samples(&spec) {
            let a12 = coeffs.a12.values()[k].re;
            let a22 = coeffs.a22.values()[k].re;
            let l_phi = j.xx + a12 * j.xy + a22 * j.yy;
            let wk = w.values()[k].re;
            integral += wk * l_phi;
            g_l += l_phi * l_phi;
            g_w += wk * wk;
        }
        ratio(integral.abs(), (g_l * g_w).sqrt())
    });
    Ok(per_bump.into_iter().fold(0.0, f64::max))
}

/// Substituting `φ_y` for `φ` in the weak identity must reproduce `∫ u_y·Lφ`:
/// returns `max_φ |∫ ∇(φ_y)·A∇u − ∫ u_y·Lφ| / (‖∇φ_y‖₂‖∇u‖₂)`.
pub fn bridge_residual(
    u_x: &ComplexField,
    u_y: &ComplexField,
    coeffs: &EllipticCoefficients,
    bumps: &[TestBump],
) -> Result<f64> {
    let spec = *coeffs.spec();
    spec.check_same(u_x.spec())?;
    spec.check_same(u_y.spec())?;
    check_bumps(&spec, bumps)?;
    let per_bump = par::map_range(bumps.len(), |i| {
        let (mut weak, mut adjoint, mut g_phi, mut g_u) = (0.0, 0.0, 0.0, 0.0);
        for (k, j) in bumps[i].samples(&spec) {
            let ux = u_x.values()[k].re;
            let uy = u_y.values()[k].re;
            let a12 = coeffs.a12.values()[k].re;
            let a22 = coeffs.a22.values()[k].re;
            weak += j.xy * (ux + a12 * uy) + j.yy * a22 * uy;
            adjoint += uy * (j.xx + a12 * j.xy + a22 * j.yy);
            g_phi += j.xy * j.xy + j.yy * j.yy;
            g_u += ux * ux + uy * uy;
        }
        ratio((weak - adjoint).abs(), (g_phi * g_u).sqrt())
    });
    Ok(per_bump.into_iter().fold(0.0, f64::max))
}

/// A disk `𝔻(center, radius)` used by the reverse Hölder scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Disk {
    pub center: Complex64,
    pub radius: f64,
}

/// `centers` seeded disks at each radius `m·h` for `m` in `multiples`, each with
/// `𝔻(center, 2r)` inside the cell.
pub fn disk_ladder(spec: &GridSpec, multiples: &[usize], centers: usize, seed: u64) -> Result<Vec<Disk>> {
    let h = spec.spacing();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(multiples.len() * centers);
    for &m in multiples {
        let r = m as f64 * h;
        let span = 0.5 * spec.side() - 2.0 * r;
        if span < 0.0 {
            return Err(LabError::Domain(format!(
                "disk radius {m}h leaves no room for D(z0, 2r) in the cell"
            )));
        }
        for _ in 0..centers {
            let (cx, cy) = if span > 0.0 {
                (rng.random_range(-span..=span), rng.random_range(-span..=span))
            } else {
                (0.0, 0.0)
            };
            out.push(Disk {
                center: spec.origin() + Complex64::new(cx, cy),
                radius: r,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReverseHolderReport {
    pub disks: Vec<Disk>,
    /// `disk_l2(w)/disk_mean(w)` per disk; `None` where the disk mean is below the floor.
    pub ratios: Vec<Option<f64>>,
    pub skipped: usize,
    pub c0_empirical: f64,
    /// Fraction of samples that were negative and clipped to zero.
    pub clipped_negative_fraction: f64,
    /// Fraction of samples below `−1e-10·sup|w|`.
    pub significant_negative_fraction: f64,
}

impl ReverseHolderReport {
    /// Largest ratio among disks of the given radius.
    pub fn c0_for_radius(&self, radius: f64) -> Option<f64> {
        self.disks
            .iter()
            .zip(&self.ratios)
            .filter(|(d, _)| (d.radius - radius).abs() <= 1e-12 * radius)
            .filter_map(|(_, r)| *r)
            .reduce(f64::max)
    }

    /// Counts of ratios in bins with edges `(1/√π)·[1, 1.01, 1.05, 1.1, 1.25, 1.5, 2, 4, ∞)`.
    pub fn histogram(&self) -> Vec<(f64, usize)> {
        let base = 1.0 / PI.sqrt();
        let edges = [1.0, 1.01, 1.05, 1.1, 1.25, 1.5, 2.0, 4.0];
        let mut counts = vec![0usize; edges.len()];
        for r in self.ratios.iter().flatten() {
            let rel = r / base;
            let bin = edges.iter().rposition(|&e| rel >= e).unwrap_or(0);
            counts[bin] += 1;
        }
        edges.iter().map(|e| e * base).zip(counts).collect()
    }
}

/// Reverse Hölder ratios of `max(w, 0)` on each disk.
pub fn reverse_holder_scan(w: &ComplexField, disks: &[Disk]) -> Result<ReverseHolderReport> {
    let spec = *w.spec();
    let sup = w.sup_norm();
    let tau_neg = 1e-10 * sup;
    let total = spec.len() as f64;
    let clipped_negative_fraction = w.values().iter().filter(|v| v.re < 0.0).count() as f64 / total;
    let significant_negative_fraction = w.values().iter().filter(|v| v.re < -tau_neg).count() as f64 / total;
    let clipped = w.map(|v| Complex64::new(v.re.max(0.0), 0.0));

    let floor = 1e-12 * PI * sup;
    let results = par::map_range(disks.len(), |i| -> Result<Option<f64>> {
        let d = disks[i];
        let mean = clipped.disk_mean(d.center, d.radius)?.re;
        if mean < floor || mean <= 0.0 {
            return Ok(None);
        }
        Ok(Some(clipped.disk_l2(d.center, d.radius)? / mean))
    });
    let ratios = results.into_iter().collect::<Result<Vec<_>>>()?;
    let skipped = ratios.iter().filter(|r| r.is_none()).count();
    if skipped == ratios.len() {
        return Err(LabError::DegenerateInput(
            "every disk has vanishing mean; reverse Holder ratios undefined".into(),
        ));
    }
    let c0_empirical = ratios.iter().flatten().copied().fold(0.0, f64::max);
    Ok(ReverseHolderReport {
        disks: disks.to_vec(),
        ratios,
        skipped,
        c0_empirical,
        clipped_negative_fraction,
        significant_negative_fraction,
    })
}

/// For each threshold `τ`, the fraction of samples with `|field| < τ`.
pub fn zero_measure_estimate(field: &ComplexField, thresholds: &[f64]) -> Vec<f64> {
    let total = field.spec().len() as f64;
    thresholds
        .iter()
        .map(|&t| field.values().iter().filter(|v| v.norm() < t).count() as f64 / total)
        .collect()
}
