//! Acceptance suite: one pass/fail line per criterion, nonzero exit on any failure.
//!
//! Run with `cargo test -p beltrami-cli --test acceptance`.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use beltrami_cli::{run_batch, scenario_files};
use beltrami_core::adjoint::{
    adjoint_residual, bridge_residual, coefficients_from_lambda, disk_ladder, reverse_holder_scan,
    weak_divergence_residual,
};
use beltrami_core::bump::TestBump;
use beltrami_core::family::{
    chain_rule_identity_residual, degenerate_pair_detect, factorize, lambda_sign_field,
    sign_violation_fraction, LinearFamilyPair, SignVerdict, DEPENDENCE_TOL,
};
use beltrami_core::generators::{radial_stretch_displacement, radial_stretch_mu, smooth_bump};
use beltrami_core::solver::{reduced_to_general, solve_principal, solve_reduced};
use beltrami_core::{
    BeltramiCoefficients, Complex64, ComplexField, GridSpec, Mapping, QcSolution, ReducedCoefficient,
    SolverOptions, TransformPlan,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn noise(spec: GridSpec, rng: &mut ChaCha8Rng) -> ComplexField {
    let values = (0..spec.len())
        .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    ComplexField::new(spec, values).unwrap()
}

fn demeaned(f: &ComplexField) -> ComplexField {
    let m = f.mean();
    f.map(|v| v - m)
}

/// Smooth `λ` with `sup|λ| = 0.5` used by the weak-form, dichotomy and reverse Hölder criteria.
fn reference_lambda(spec: GridSpec) -> ReducedCoefficient {
    ReducedCoefficient::new(smooth_bump(spec, Complex64::from_polar(0.5, 0.7), c(0.2, -0.1), 2.0, 1.5)).unwrap()
}

fn reference_family(n: usize) -> (ReducedCoefficient, QcSolution, LinearFamilyPair) {
    let spec = GridSpec::standard(n).unwrap();
    let plan = TransformPlan::new(spec);
    let lam = reference_lambda(spec);
    let sol = solve_reduced(&lam, &plan, &SolverOptions::new(1e-8, 500).normalized(c(0.0, 1.0))).unwrap();
    let pair = LinearFamilyPair::new(
        Mapping::identity(spec),
        sol.mapping.clone(),
        reduced_to_general(&lam).unwrap(),
        1e-8,
    )
    .unwrap();
    (lam, sol, pair)
}

fn general_coeffs(spec: GridSpec) -> BeltramiCoefficients {
    let mu = smooth_bump(spec, c(0.3, 0.1), c(0.2, -0.1), 2.0, 1.0);
    let nu = smooth_bump(spec, c(0.0, 0.25), c(-0.3, 0.2), 1.5, 0.0);
    BeltramiCoefficients::new(mu, nu).unwrap()
}

fn two_solved(n: usize) -> LinearFamilyPair {
    let spec = GridSpec::standard(n).unwrap();
    let plan = TransformPlan::new(spec);
    let coeffs = general_coeffs(spec);
    let phi = solve_principal(&coeffs, &plan, &SolverOptions::new(1e-10, 500)).unwrap();
    let psi = solve_principal(&coeffs, &plan, &SolverOptions::new(1e-10, 500).normalized(c(0.0, 1.0))).unwrap();
    LinearFamilyPair::new(phi.mapping, psi.mapping, coeffs, 1e-10).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let spec = GridSpec::standard(128).unwrap();
    let plan = TransformPlan::new(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut inverse, mut isometry) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let w = noise(spec, &mut rng);
        let w0 = demeaned(&w);
        let back = plan.d_zbar(&plan.cauchy_transform(&w).unwrap()).unwrap();
        inverse = inverse.max(back.relative_l2_error(&w0).unwrap());
        let s = plan.beurling_transform(&w).unwrap();
        isometry = isometry.max((s.l2_norm() - w0.l2_norm()).abs() / w0.l2_norm());
    }
    let t = start.elapsed();
    check(
        inverse <= 1e-10 && isometry <= 1e-10 && t < Duration::from_secs(10),
        format!("d_zbar∘C error {inverse:.2e}, |‖Sω‖−‖ω‖| {isometry:.2e} over 100 fields, {t:.2?}"),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let spec = GridSpec::standard(64).unwrap();
    let plan = TransformPlan::new(spec);
    let mut affine = 0.0f64;
    for lam in [c(0.5, 0.0), c(0.0, 0.3), Complex64::from_polar(0.6, 1.0)] {
        let l = ReducedCoefficient::new(ComplexField::constant(spec, lam)).unwrap();
        let g = reduced_to_general(&l).unwrap();
        let (mu, nu) = (g.mu.values()[0], g.nu.values()[0]);
        for a in [c(1.0, 1.0), c(0.0, 1.0), c(2.0, -1.0)] {
            let sol = solve_reduced(&l, &plan, &SolverOptions::new(1e-12, 500).normalized(a)).unwrap();
            let exact = Mapping::affine(spec, a, mu * a + nu * a.conj());
            affine = affine.max(sol.mapping.values.relative_l2_error(&exact.values).unwrap());
        }
    }
    let k = 1.0 / 3.0;
    let radial = |n: usize| {
        let spec = GridSpec::standard(n).unwrap();
        let plan = TransformPlan::new(spec);
        let mu = radial_stretch_mu(spec, k, c(0.0, 0.0), 1.0);
        let coeffs = BeltramiCoefficients::new(mu, ComplexField::zeros(spec)).unwrap();
        let sol = solve_principal(&coeffs, &plan, &SolverOptions::new(1e-10, 500)).unwrap();
        let exact = radial_stretch_displacement(spec, k, c(0.0, 0.0), 1.0);
        sol.displacement.relative_l2_error(&exact).unwrap()
    };
    let (e256, e512) = (radial(256), radial(512));
    let t = start.elapsed();
    check(
        affine <= 1e-10 && e256 <= 5e-2 && e512 < e256 && t < Duration::from_secs(120),
        format!("affine {affine:.2e}; radial stretch {e256:.3e} (n=256) -> {e512:.3e} (n=512), {t:.2?}"),
    )
}

fn criterion_3() -> Outcome {
    let spec = GridSpec::standard(64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        // a few random smooth bumps, rescaled to a random sup ≤ 0.8
        let mut field = ComplexField::zeros(spec);
        for _ in 0..3 {
            let amp = Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI));
            let center = c(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
            let b = smooth_bump(spec, amp, center, rng.random_range(0.8..1.5), rng.random_range(-2.0..2.0));
            field = field.add(&b).unwrap();
        }
        let target = rng.random_range(0.1..0.8);
        let lam = field.scale(c(target / field.sup_norm(), 0.0));
        let red = ReducedCoefficient::new(lam).unwrap();
        let e = coefficients_from_lambda(&red).unwrap();
        for k in 0..spec.len() {
            let (alpha, beta) = (red.alpha.values()[k].re, red.beta.values()[k].re);
            let (a12, a22) = (e.a12.values()[k].re, e.a22.values()[k].re);
            worst = worst
                .max((a12 * (1.0 - beta) - 2.0 * alpha).abs())
                .max((a22 * (1.0 - beta) - (1.0 + beta)).abs());
        }
    }
    check(worst <= 1e-14, format!("max pointwise deviation {worst:.2e} over 10 fields"))
}

fn criterion_4() -> Outcome {
    let (lam, sol, _) = reference_family(256);
    let spec = *lam.spec();
    let e = coefficients_from_lambda(&lam).unwrap();
    let bumps = TestBump::battery(&spec, 20, 7).unwrap();
    let weak = weak_divergence_residual(&sol.u_x, &sol.u_y, &e, &bumps).unwrap();
    let adj = adjoint_residual(&sol.u_y, &e, &bumps).unwrap();
    let bridge = bridge_residual(&sol.u_x, &sol.u_y, &e, &bumps).unwrap();
    check(
        weak <= 1e-5 && adj <= 1e-4 && bridge <= 1e-8,
        format!("weak {weak:.2e}, adjoint {adj:.2e}, bridge {bridge:.2e} over {} bumps", bumps.len()),
    )
}

fn criterion_5() -> Outcome {
    let (_, _, reduced_pair) = reference_family(256);
    let fac = factorize(&reduced_pair).unwrap();
    let r1 = chain_rule_identity_residual(&reduced_pair, &fac).unwrap().residual;
    let general_pair = two_solved(256);
    let fac = factorize(&general_pair).unwrap();
    let r2 = chain_rule_identity_residual(&general_pair, &fac).unwrap().residual;

    let spec = GridSpec::standard(32).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut affine = 0.0f64;
    for _ in 0..10 {
        let mu = Complex64::from_polar(rng.random_range(0.0..0.4), rng.random_range(0.0..2.0 * PI));
        let nu = Complex64::from_polar(rng.random_range(0.0..0.4), rng.random_range(0.0..2.0 * PI));
        let coeffs = BeltramiCoefficients::new(ComplexField::constant(spec, mu), ComplexField::constant(spec, nu)).unwrap();
        let member = |a: Complex64| Mapping::affine(spec, a, mu * a + nu * a.conj());
        let a1 = c(rng.random_range(0.5..2.0), rng.random_range(-0.5..0.5));
        let a2 = c(rng.random_range(-0.5..0.5), rng.random_range(0.5..2.0));
        let pair = LinearFamilyPair::new(member(a1), member(a2), coeffs, 1e-12).unwrap();
        let fac = factorize(&pair).unwrap();
        affine = affine.max(chain_rule_identity_residual(&pair, &fac).unwrap().residual);
    }
    check(
        r1 <= 1e-4 && r2 <= 1e-4 && affine <= 1e-10,
        format!("solver families {r1:.2e} (reduced), {r2:.2e} (general); affine {affine:.2e}"),
    )
}

fn zero_fraction(pair: &LinearFamilyPair) -> f64 {
    let tau = 1e-6 * pair.pairing.sup_norm();
    let total = pair.pairing.spec().len() as f64;
    pair.pairing.values().iter().filter(|v| v.norm() < tau).count() as f64 / total
}

fn criterion_6() -> Outcome {
    // degenerate branch: Ψ = tΦ for solved Φ
    let spec = GridSpec::standard(128).unwrap();
    let plan = TransformPlan::new(spec);
    let coeffs = general_coeffs(spec);
    let phi = solve_principal(&coeffs, &plan, &SolverOptions::new(1e-10, 500)).unwrap();
    let mut degenerate_sup = 0.0f64;
    let mut detected = true;
    for t in [2.0, -0.5, 3.25] {
        let pair = LinearFamilyPair::new(phi.mapping.clone(), phi.mapping.scaled(t), coeffs.clone(), 1e-9).unwrap();
        degenerate_sup = degenerate_sup.max(pair.pairing.sup_norm());
        detected &= degenerate_pair_detect(&pair.phi, &pair.psi, DEPENDENCE_TOL).unwrap().is_some();
    }

    // nondegenerate branch at n = 256 and n = 512
    let mut lines = Vec::new();
    let mut ok = detected && degenerate_sup <= 1e-12;
    for (label, pairs) in [
        ("reduced", [reference_family(256).2, reference_family(512).2]),
        ("general", [two_solved(256), two_solved(512)]),
    ] {
        let z: Vec<f64> = pairs.iter().map(zero_fraction).collect();
        let sign = lambda_sign_field(&pairs[0].phi, &pairs[0].psi, 20_000, 1).unwrap();
        let violation = if sign.verdict.is_uniform() {
            sign_violation_fraction(&pairs[0].pairing, sign.verdict, 1e-6 * pairs[0].pairing.sup_norm())
        } else {
            1.0
        };
        let independent = degenerate_pair_detect(&pairs[0].phi, &pairs[0].psi, DEPENDENCE_TOL)
            .unwrap()
            .is_none();
        ok &= independent && z[0] <= 1e-2 && z[1] <= z[0] && violation <= 1e-3;
        lines.push(format!("{label}: zero fraction {:.2e} -> {:.2e}, violations {violation:.1e}", z[0], z[1]));
    }
    check(
        ok,
        format!("degenerate sup|𝒥| {degenerate_sup:.1e} (detected {detected}); {}", lines.join("; ")),
    )
}

fn criterion_7() -> Outcome {
    let floor = 1.0 / PI.sqrt() - 1e-3;
    let mut c0s = Vec::new();
    let mut min_ratio = f64::INFINITY;
    for n in [128, 256, 512] {
        let (_, sol, _) = reference_family(n);
        let spec = *sol.spec();
        // u_y ≈ −1 away from the support of λ for the partner normalized at iz
        let w = sol.u_y.scale(c(-1.0, 0.0));
        for m in [8, 16, 32] {
            let disks = disk_ladder(&spec, &[m], 50, 9).unwrap();
            let rep = reverse_holder_scan(&w, &disks).unwrap();
            min_ratio = rep.ratios.iter().flatten().copied().fold(min_ratio, f64::min);
            c0s.push(rep.c0_empirical);
        }
    }
    let mean = c0s.iter().sum::<f64>() / c0s.len() as f64;
    let spread = c0s.iter().map(|v| (v / mean - 1.0).abs()).fold(0.0, f64::max);

    let spec = GridSpec::standard(128).unwrap();
    let disks = disk_ladder(&spec, &[8, 16, 32], 20, 3).unwrap();
    let constant = reverse_holder_scan(&ComplexField::constant(spec, c(1.0, 0.0)), &disks).unwrap();
    let const_dev = constant
        .ratios
        .iter()
        .flatten()
        .map(|r| (r - 1.0 / PI.sqrt()).abs())
        .fold(0.0, f64::max);
    check(
        spread <= 0.2 && min_ratio >= floor && const_dev <= 1e-3,
        format!(
            "c0 in [{:.4}, {:.4}] (spread {:.1}%), min ratio {min_ratio:.6} ≥ {floor:.6}, constant field off by {const_dev:.1e}",
            c0s.iter().copied().fold(f64::INFINITY, f64::min),
            c0s.iter().copied().fold(0.0, f64::max),
            100.0 * spread
        ),
    )
}

fn criterion_8() -> Outcome {
    let spec = GridSpec::standard(64).unwrap();
    let straddles = spec.corner().re < 0.0 && spec.corner().re + spec.side() > 0.0;
    let phi = Mapping::identity(spec);
    let psi = Mapping::power(spec, c(1.0, 0.0), 2).unwrap();
    let rep = lambda_sign_field(&phi, &psi, 20_000, 1).unwrap();
    check(
        straddles && rep.verdict == SignVerdict::Mixed,
        format!("verdict {:?} ({} negative, {} positive)", rep.verdict, rep.negative, rep.positive),
    )
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let count = scenario_files(&dir).map_err(|e| e.to_string())?.len();
    let out_a = tempfile::tempdir().unwrap();
    let out_b = tempfile::tempdir().unwrap();
    let a = run_batch(&dir, None, Some(out_a.path())).map_err(|e| e.to_string())?;
    // second run on a single worker thread: results must not depend on the pool size
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool
        .install(|| run_batch(&dir, None, Some(out_b.path())))
        .map_err(|e| e.to_string())?;
    let identical = a.len() == b.len()
        && a.iter()
            .zip(&b)
            .all(|(x, y)| x.to_json_without_timings() == y.to_json_without_timings());
    let passing = a.iter().filter(|r| r.exit_code == 0).count();
    let t = start.elapsed();
    check(
        identical && count > 0 && passing == count && t < Duration::from_secs(600),
        format!("{count} scenarios, {passing} passing, reports identical: {identical}, {t:.2?} for two runs"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("operator contracts", criterion_1),
        ("exact-solution oracles", criterion_2),
        ("elliptic coefficient identities", criterion_3),
        ("weak-form chain", criterion_4),
        ("chain-rule identity", criterion_5),
        ("pairing dichotomy", criterion_6),
        ("reverse Hölder", criterion_7),
        ("counterexample sensitivity", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("[{tag}] criterion {} ({name}): {detail}", i + 1);
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
