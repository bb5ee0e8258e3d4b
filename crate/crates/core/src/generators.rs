//! Built-in coefficient fields and their closed-form companions.

use num_complex::Complex64;

use crate::grid::{ComplexField, GridSpec};

/// `C∞` radial profile `exp(1 − 1/(1 − ρ))` for `ρ < 1`, zero otherwise; equals 1 at `ρ = 0`.
pub fn smooth_cutoff(rho: f64) -> f64 {
    if rho < 1.0 {
        (1.0 - 1.0 / (1.0 - rho)).exp()
    } else {
        0.0
    }
}

/// `amplitude · cutoff(|z − center|²/radius²) · e^{i·twist·(x − cx)}`.
///
/// The supremum of the modulus is `|amplitude|`, attained at `center`.
pub fn smooth_bump(
    spec: GridSpec,
    amplitude: Complex64,
    center: Complex64,
    radius: f64,
    twist: f64,
) -> ComplexField {
    ComplexField::from_fn(spec, move |z| {
        let d = z - center;
        let cut = smooth_cutoff(d.norm_sqr() / (radius * radius));
        if cut == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            amplitude * cut * Complex64::from_polar(1.0, twist * d.re)
        }
    })
}

/// `μ(z) = k·(z/z̄)` inside `|z − center| ≤ radius`, zero outside; `z/z̄ := 1` at the center.
pub fn radial_stretch_mu(spec: GridSpec, k: f64, center: Complex64, radius: f64) -> ComplexField {
    ComplexField::from_fn(spec, move |z| {
        let d = z - center;
        let r = d.norm();
        if r > radius {
            Complex64::new(0.0, 0.0)
        } else if r == 0.0 {
            Complex64::new(k, 0.0)
        } else {
            k * d / d.conj()
        }
    })
}

/// Exponent `a = 2k/(1 − k)` of the radial stretch `z|z|^a` solving the equation with
/// `μ = k·z/z̄`.
pub fn radial_stretch_exponent(k: f64) -> f64 {
    2.0 * k / (1.0 - k)
}

/// Closed-form displacement `f(z) − z` of the radial stretch: `d·(|d/R|^a − 1)` inside the
/// disk, zero outside, with `d = z − center`.
pub fn radial_stretch_displacement(
    spec: GridSpec,
    k: f64,
    center: Complex64,
    radius: f64,
) -> ComplexField {
    let a = radial_stretch_exponent(k);
    ComplexField::from_fn(spec, move |z| {
        let d = z - center;
        let r = d.norm();
        if r >= radius {
            Complex64::new(0.0, 0.0)
        } else {
            d * ((r / radius).powf(a) - 1.0)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_peak_and_support() {
        let spec = GridSpec::standard(64).unwrap();
        let c = Complex64::new(0.0, 0.0);
        let b = smooth_bump(spec, Complex64::new(0.3, 0.4), c, 1.5, 2.0);
        assert!((b.sup_norm() - 0.5).abs() < 1e-12);
        assert_eq!(b.get(0, 0), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn radial_stretch_exponent_at_one_third() {
        assert!((radial_stretch_exponent(1.0 / 3.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn radial_stretch_closed_form_satisfies_equation() {
        // finite differences of f = z|z|^a against μ = k z/z̄ at a few interior points
        let k = 1.0 / 3.0;
        let a = radial_stretch_exponent(k);
        let f = |z: Complex64| z * z.norm().powf(a);
        let h = 1e-6;
        for z in [Complex64::new(0.3, 0.2), Complex64::new(-0.5, 0.61), Complex64::new(0.1, -0.7)] {
            let fx = (f(z + Complex64::new(h, 0.0)) - f(z - Complex64::new(h, 0.0))) / (2.0 * h);
            let fy = (f(z + Complex64::new(0.0, h)) - f(z - Complex64::new(0.0, h))) / (2.0 * h);
            let fz = (fx - Complex64::new(0.0, 1.0) * fy) * 0.5;
            let fzbar = (fx + Complex64::new(0.0, 1.0) * fy) * 0.5;
            let mu = k * z / z.conj();
            assert!((fzbar - mu * fz).norm() < 1e-8);
        }
    }
}
