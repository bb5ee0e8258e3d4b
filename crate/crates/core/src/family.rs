//! Pairs of solutions of one Beltrami equation: the pairing
//! `𝒥(Φ,Ψ) = Im(Φ_z·conj(Ψ_z))`, the sign of the difference quotient
//! `Λ(z,w) = Im((Φ(z) − Φ(w))/(Ψ(z) − Ψ(w)))`, ℝ-linear dependence, and the
//! factorization `Ψ = f∘Φ` evaluated on the `z`-grid.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::grid::ComplexField;
use crate::mapping::Mapping;
use crate::par;
use crate::solver::{residual_general, BeltramiCoefficients};

/// Relative threshold below which `min ‖aΦ + bΨ‖` counts as linear dependence.
pub const DEPENDENCE_TOL: f64 = 1e-9;
/// Jacobian floor, relative to the median Jacobian, for the chain-rule solve.
pub const JACOBIAN_FLOOR: f64 = 1e-12;
/// Largest tolerated fraction of masked (near-singular) samples.
pub const MASKED_FRACTION_LIMIT: f64 = 1e-3;

/// `Im(Φ_z·conj(Ψ_z))` as a real field.
pub fn jacobian_pairing(phi: &Mapping, psi: &Mapping) -> Result<ComplexField> {
    phi.fz
        .zip_map(&psi.fz, |a, b| Complex64::new((a * b.conj()).im, 0.0))
}

/// Two maps solving the same equation, with their pairing.
#[derive(Debug, Clone)]
pub struct LinearFamilyPair {
    pub phi: Mapping,
    pub psi: Mapping,
    pub coeffs: BeltramiCoefficients,
    pub pairing: ComplexField,
    pub phi_residual: f64,
    pub psi_residual: f64,
}

impl LinearFamilyPair {
    /// Fails with [`LabError::NonConvergence`] if either map misses the equation by more than `tol`.
    pub fn new(phi: Mapping, psi: Mapping, coeffs: BeltramiCoefficients, tol: f64) -> Result<Self> {
        phi.spec().check_same(psi.spec())?;
        let phi_residual = residual_general(&phi, &coeffs)?;
        let psi_residual = residual_general(&psi, &coeffs)?;
        let worst = phi_residual.max(psi_residual);
        if worst > tol {
            return Err(LabError::NonConvergence {
                iterations: 0,
                residual: worst,
            });
        }
        let pairing = jacobian_pairing(&phi, &psi)?;
        Ok(Self {
            phi,
            psi,
            coeffs,
            pairing,
            phi_residual,
            psi_residual,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignVerdict {
    AllNegative,
    AllPositive,
    Mixed,
    Degenerate,
}

impl SignVerdict {
    pub fn is_uniform(self) -> bool {
        matches!(self, SignVerdict::AllNegative | SignVerdict::AllPositive)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignReport {
    pub samples: usize,
    pub resampled: usize,
    pub min: f64,
    pub max: f64,
    pub negative: usize,
    pub positive: usize,
    pub verdict: SignVerdict,
}

/// Evaluate `Λ` on `samples` seeded random off-diagonal lattice pairs.
pub fn lambda_sign_field(phi: &Mapping, psi: &Mapping, samples: usize, seed: u64) -> Result<SignReport> {
    phi.spec().check_same(psi.spec())?;
    if samples == 0 {
        return Err(LabError::Config("need at least one sample pair".into()));
    }
    let len = phi.spec().len();
    let pv = phi.values.values();
    let qv = psi.values.values();
    let scale = psi.values.sup_norm().max(f64::MIN_POSITIVE);
    let coincide = 1e-12 * scale;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(samples);
    let mut resampled = 0usize;
    for _ in 0..samples {
        let mut attempts = 0;
        loop {
            let i = rng.random_range(0..len);
            let j = rng.random_range(0..len);
            if i != j && (qv[i] - qv[j]).norm() > coincide {
                pairs.push((i, j));
                break;
            }
            resampled += 1;
            attempts += 1;
            if attempts > 1000 {
                return Err(LabError::Sampling(
                    "Ψ takes coincident values on nearly all sampled pairs".into(),
                ));
            }
        }
    }

    let vals = par::map_range(pairs.len(), |k| {
        let (i, j) = pairs[k];
        ((pv[i] - pv[j]) / (qv[i] - qv[j])).im
    });
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let peak = min.abs().max(max.abs());
    let zero = 1e-12 * peak;
    let negative = vals.iter().filter(|&&v| v < -zero).count();
    let positive = vals.iter().filter(|&&v| v > zero).count();
    let verdict = if peak <= 1e-12 {
        SignVerdict::Degenerate
    } else if positive == 0 {
        SignVerdict::AllNegative
    } else if negative == 0 {
        SignVerdict::AllPositive
    } else {
        SignVerdict::Mixed
    };
    Ok(SignReport {
        samples,
        resampled,
        min,
        max,
        negative,
        positive,
        verdict,
    })
}

/// Real `(a, b)` with `a² + b² = 1` minimizing `‖aΦ + bΨ‖₂`, returned when the
/// minimum is below `eps·(‖Φ‖₂ + ‖Ψ‖₂)`.
pub fn degenerate_pair_detect(phi: &Mapping, psi: &Mapping, eps: f64) -> Result<Option<(f64, f64)>> {
    phi.spec().check_same(psi.spec())?;
    let p = &phi.values;
    let q = &psi.values;
    let n = p.spec().n();
    let g11 = par::row_sum(p.values(), n, |v| v.norm_sqr());
    let g22 = par::row_sum(q.values(), n, |v| v.norm_sqr());
    let g12: f64 = par::map_rows(p.values(), n, |iy, row| {
        row.iter()
            .zip(&q.values()[iy * n..(iy + 1) * n])
            .map(|(a, b)| (a * b.conj()).re)
            .sum::<f64>()
    })
    .into_iter()
    .sum();

    let half_tr = 0.5 * (g11 + g22);
    let disc = (0.25 * (g11 - g22).powi(2) + g12 * g12).sqrt();
    let low = half_tr - disc;
    let v1 = (g12, low - g11);
    let v2 = (low - g22, g12);
    let (mut a, mut b) = if v1.0.hypot(v1.1) >= v2.0.hypot(v2.1) { v1 } else { v2 };
    let norm = a.hypot(b);
    if norm == 0.0 {
        // G is a multiple of the identity: Φ ⟂ Ψ with equal norms
        if g11 == 0.0 {
            return Ok(Some((1.0, 0.0)));
        }
        (a, b) = (1.0, 0.0);
    } else {
        a /= norm;
        b /= norm;
    }
    if a < 0.0 || (a == 0.0 && b < 0.0) {
        a = -a;
        b = -b;
    }
    let combo = p.zip_map(q, move |x, y| x * a + y * b)?;
    let scale = p.l2_norm() + q.l2_norm();
    Ok((combo.l2_norm() < eps * scale).then_some((a, b)))
}

/// Chain-rule derivatives of `f = Ψ∘Φ⁻¹` pulled back to the `z`-grid.
#[derive(Debug, Clone)]
pub struct Factorization {
    /// `f_w ∘ Φ`
    pub f_w: ComplexField,
    /// `f_w̄ ∘ Φ`
    pub f_wbar: ComplexField,
    /// `λ ∘ Φ = −2iν/(1 + |ν|² − |μ|²)`
    pub lambda: ComplexField,
    pub jacobian: ComplexField,
    /// Samples excluded because `J(z,Φ)` fell below the floor.
    pub masked: Vec<bool>,
    pub masked_fraction: f64,
    pub lambda_sup: f64,
    /// `2k/(1 + k²)`
    pub k_prime_bound: f64,
    /// `‖f_w̄ − λ·Im(f_w)‖ / ‖f_w‖` over unmasked samples.
    pub reduced_residual: f64,
}

/// Solve `Ψ_z = F·Φ_z + G·conj(Φ_z̄)`, `Ψ_z̄ = F·Φ_z̄ + G·conj(Φ_z)` for
/// `F = f_w∘Φ`, `G = f_w̄∘Φ` at every sample.
pub fn factorize(pair: &LinearFamilyPair) -> Result<Factorization> {
    let phi = &pair.phi;
    let psi = &pair.psi;
    let spec = *phi.spec();
    let len = spec.len();
    let jac = phi.jacobian();

    let mut sorted: Vec<f64> = jac.values().iter().map(|v| v.re).collect();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[len / 2];
    let floor = JACOBIAN_FLOOR * median;
    let masked: Vec<bool> = jac.values().iter().map(|v| !(median > 0.0 && v.re >= floor)).collect();
    let masked_count = masked.iter().filter(|&&m| m).count();
    let masked_fraction = masked_count as f64 / len as f64;
    if masked_fraction > MASKED_FRACTION_LIMIT {
        return Err(LabError::Degeneracy {
            fraction: masked_fraction,
            allowed: MASKED_FRACTION_LIMIT,
        });
    }

    let (pz, pzb) = (phi.fz.values(), phi.fzbar.values());
    let (qz, qzb) = (psi.fz.values(), psi.fzbar.values());
    let solved = par::map_range(len, |k| {
        if masked[k] {
            return (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        }
        let j = jac.values()[k].re;
        let f = (qz[k] * pz[k].conj() - pzb[k].conj() * qzb[k]) / j;
        let g = (pz[k] * qzb[k] - pzb[k] * qz[k]) / j;
        (f, g)
    });
    let (fw, fwb): (Vec<_>, Vec<_>) = solved.into_iter().unzip();
    let f_w = ComplexField::new(spec, fw)?;
    let f_wbar = ComplexField::new(spec, fwb)?;

    let lambda = pair.coeffs.mu.zip_map(&pair.coeffs.nu, |m, n| {
        Complex64::new(0.0, -2.0) * n / (1.0 + n.norm_sqr() - m.norm_sqr())
    })?;
    let lambda_sup = lambda.sup_norm();
    let k = pair.coeffs.k();
    let k_prime_bound = 2.0 * k / (1.0 + k * k);

    let (mut num, mut den) = (0.0, 0.0);
    for (k, _) in masked.iter().enumerate().filter(|(_, &m)| !m) {
        let f = f_w.values()[k];
        num += (f_wbar.values()[k] - lambda.values()[k] * f.im).norm_sqr();
        den += f.norm_sqr();
    }
    let reduced_residual = if den > 0.0 { (num / den).sqrt() } else { num.sqrt() };

    Ok(Factorization {
        f_w,
        f_wbar,
        lambda,
        jacobian: jac,
        masked,
        masked_fraction,
        lambda_sup,
        k_prime_bound,
        reduced_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainRuleReport {
    /// Relative `L²` residual of `J·Im(f_w∘Φ) = (−1 + |μ|² − |ν|²)·𝒥(Φ,Ψ)`.
    pub residual: f64,
    pub im_fw_min: f64,
    pub im_fw_max: f64,
    /// Fraction of unmasked samples with `Im(f_w∘Φ) < −τ`, `τ = 1e-8·sup|Im(f_w)|`.
    pub im_fw_negative_fraction: f64,
}

pub fn chain_rule_identity_residual(pair: &LinearFamilyPair, fac: &Factorization) -> Result<ChainRuleReport> {
    let mu = pair.coeffs.mu.values();
    let nu = pair.coeffs.nu.values();
    let pairing = pair.pairing.values();
    let (mut num, mut lhs_sq, mut rhs_sq) = (0.0, 0.0, 0.0);
    let mut im_min = f64::INFINITY;
    let mut im_max = f64::NEG_INFINITY;
    let mut kept = 0usize;
    for k in 0..pairing.len() {
        if fac.masked[k] {
            continue;
        }
        kept += 1;
        let im_f = fac.f_w.values()[k].im;
        let lhs = fac.jacobian.values()[k].re * im_f;
        let rhs = (-1.0 + mu[k].norm_sqr() - nu[k].norm_sqr()) * pairing[k].re;
        num += (lhs - rhs).powi(2);
        lhs_sq += lhs * lhs;
        rhs_sq += rhs * rhs;
        im_min = im_min.min(im_f);
        im_max = im_max.max(im_f);
    }
    let den = lhs_sq.max(rhs_sq).sqrt();
    let residual = if den > 0.0 { num.sqrt() / den } else { num.sqrt() };
    let tau = 1e-8 * im_min.abs().max(im_max.abs());
    let negative = (0..pairing.len())
        .filter(|&k| !fac.masked[k] && fac.f_w.values()[k].im < -tau)
        .count();
    Ok(ChainRuleReport {
        residual,
        im_fw_min: im_min,
        im_fw_max: im_max,
        im_fw_negative_fraction: if kept > 0 { negative as f64 / kept as f64 } else { 0.0 },
    })
}

/// Fraction of samples whose pairing has the sign opposite to a uniform `Λ` verdict,
/// counting only values beyond `tau`.
pub fn sign_violation_fraction(pairing: &ComplexField, verdict: SignVerdict, tau: f64) -> f64 {
    let total = pairing.spec().len() as f64;
    let count = match verdict {
        SignVerdict::AllNegative => pairing.values().iter().filter(|v| v.re > tau).count(),
        SignVerdict::AllPositive => pairing.values().iter().filter(|v| v.re < -tau).count(),
        _ => 0,
    };
    count as f64 / total
}
