//! The verification pipeline: solve → pair → factorize → coefficients →
//! weak/adjoint residuals → reverse Hölder → zero-measure.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use beltrami_core::adjoint::{
    adjoint_residual, bridge_residual, coefficients_from_lambda, disk_ladder, reverse_holder_scan,
    weak_divergence_residual, zero_measure_estimate,
};
use beltrami_core::bump::TestBump;
use beltrami_core::family::{
    chain_rule_identity_residual, degenerate_pair_detect, factorize, lambda_sign_field,
    sign_violation_fraction, Factorization, LinearFamilyPair, SignVerdict, DEPENDENCE_TOL,
};
use beltrami_core::generators::{radial_stretch_displacement, radial_stretch_mu, smooth_bump};
use beltrami_core::solver::{
    component_relations, reduced_to_general, residual_general, residual_reduced, solve_principal,
    solve_reduced,
};
use beltrami_core::{
    BeltramiCoefficients, Complex64, ComplexField, ComponentGradients, GridSpec, LabError, Mapping,
    QcSolution, ReducedCoefficient, SolverOptions, TransformPlan,
};

use crate::config::{c, BumpConfig, EquationConfig, FamilyConfig, MapConfig, OracleConfig, ScenarioConfig};
use crate::report::*;

/// Fields produced by a run, keyed by dump name.
#[derive(Debug, Default, Clone)]
pub struct Artifacts {
    pub grid: Option<GridSpec>,
    pub fields: BTreeMap<&'static str, ComplexField>,
}

struct Member {
    role: &'static str,
    source: &'static str,
    linear: Complex64,
    mapping: Mapping,
    solution: Option<QcSolution>,
}

impl Member {
    fn gradients(&self) -> ComponentGradients {
        match &self.solution {
            Some(s) => s.component_gradients(),
            None => self.mapping.component_gradients(),
        }
    }

    fn is_identity(&self) -> bool {
        let id = Mapping::identity(*self.mapping.spec());
        let close = |a: &ComplexField, b: &ComplexField| {
            a.values().iter().zip(b.values()).all(|(x, y)| (x - y).norm() <= 1e-14 * (1.0 + y.norm()))
        };
        close(&self.mapping.fz, &id.fz) && close(&self.mapping.fzbar, &id.fzbar)
    }
}

/// A stage failure: which stage, and the status it maps to.
struct StageError {
    stage: &'static str,
    status: Status,
    message: String,
}

fn classify(stage: &'static str, e: LabError) -> StageError {
    let status = match &e {
        LabError::NonConvergence { .. } => Status::ConvergenceFailure,
        LabError::Config(_) | LabError::Ellipticity { .. } | LabError::Io(_) | LabError::Csv(_) => {
            Status::ConfigError
        }
        LabError::GridMismatch(_) => Status::ConfigError,
        _ => Status::VerificationFailure,
    };
    StageError {
        stage,
        status,
        message: e.to_string(),
    }
}

struct Run<'a> {
    cfg: &'a ScenarioConfig,
    report: VerificationReport,
    artifacts: Artifacts,
    clock: Instant,
}

impl<'a> Run<'a> {
    fn lap(&mut self, stage: &str) {
        let ms = self.clock.elapsed().as_secs_f64() * 1e3;
        self.report.timings_ms.insert(stage.to_string(), ms);
        self.clock = Instant::now();
    }

    fn rule(&mut self, name: &str, passed: bool, value: Option<f64>, threshold: Option<f64>) {
        self.report.rules.push(Rule {
            name: name.to_string(),
            passed,
            value,
            threshold,
        });
    }

    /// `value ≤ threshold`, failing on NaN.
    fn at_most(&mut self, name: &str, value: f64, threshold: f64) {
        self.rule(name, value <= threshold, Some(value), Some(threshold));
    }

    fn keep(&mut self, name: &'static str, field: &ComplexField) {
        self.artifacts.fields.insert(name, field.clone());
    }
}

/// Run a scenario without touching the filesystem beyond CSV inputs.
pub fn run_scenario(cfg: &ScenarioConfig) -> VerificationReport {
    run_with_artifacts(cfg).0
}

/// Run a scenario and also return every field that can be dumped.
pub fn run_with_artifacts(cfg: &ScenarioConfig) -> (VerificationReport, Artifacts) {
    let not_reached = || "earlier stage failed".to_string();
    let mut run = Run {
        cfg,
        report: VerificationReport {
            scenario: cfg.clone(),
            status: Status::Pass,
            exit_code: 0,
            failed_stage: None,
            error: None,
            solver: Fragment::skipped(not_reached()),
            theorem_1_2: Fragment::skipped(not_reached()),
            chain_rule: Fragment::skipped(not_reached()),
            components: Fragment::skipped(not_reached()),
            adjoint: Fragment::skipped(not_reached()),
            reverse_holder: Fragment::skipped(not_reached()),
            zero_measure: Fragment::skipped(not_reached()),
            rules: Vec::new(),
            timings_ms: BTreeMap::new(),
        },
        artifacts: Artifacts::default(),
        clock: Instant::now(),
    };
    match pipeline(&mut run) {
        Ok(()) => {
            if run.report.rules.iter().any(|r| !r.passed) {
                run.report.status = Status::VerificationFailure;
            }
        }
        Err(e) => {
            run.report.status = e.status;
            run.report.failed_stage = Some(e.stage.to_string());
            run.report.error = Some(e.message);
        }
    }
    run.report.exit_code = run.report.status.exit_code();
    (run.report, run.artifacts)
}

fn pipeline(run: &mut Run) -> Result<(), StageError> {
    let cfg = run.cfg;
    if let Err(e) = cfg.validate() {
        return Err(StageError {
            stage: "config",
            status: Status::ConfigError,
            message: e.to_string(),
        });
    }
    let spec = cfg.grid.spec().map_err(|e| StageError {
        stage: "config",
        status: Status::ConfigError,
        message: e.to_string(),
    })?;
    run.artifacts.grid = Some(spec);

    // coefficients: every failure here is a configuration problem
    let (coeffs, reduced) = build_coefficients(cfg, spec).map_err(|e| StageError {
        stage: "coefficients",
        status: Status::ConfigError,
        message: e.to_string(),
    })?;
    run.keep("mu", &coeffs.mu);
    run.keep("nu", &coeffs.nu);
    if let Some(lam) = &reduced {
        run.keep("lambda", &lam.lambda);
    }
    run.lap("coefficients");

    // solve
    let plan = TransformPlan::new(spec);
    let (phi, psi) = build_family(cfg, &coeffs, reduced.as_ref(), &plan).map_err(|e| classify("solve", e))?;
    run.keep("phi", &phi.mapping.values);
    run.keep("psi", &psi.mapping.values);
    run.keep("phi_z", &phi.mapping.fz);
    run.keep("psi_z", &psi.mapping.fz);
    let g = psi.gradients();
    run.keep("u_y", &g.u_y);
    run.keep("v_x", &g.v_x);
    let solver_fragment =
        solver_fragment(cfg, &coeffs, reduced.as_ref(), &phi, &psi).map_err(|e| classify("solve", e))?;
    let worst = solver_fragment
        .members
        .iter()
        .map(|m| m.equation_residual)
        .fold(0.0, f64::max);
    run.at_most("solver.equation_residual", worst, cfg.solver.tol);
    if let Some(o) = solver_fragment.oracle.done() {
        let (e, t) = (o.error, o.tol);
        run.at_most("solver.oracle", e, t);
    }
    run.report.solver = Fragment::Done(solver_fragment);
    run.lap("solve");

    // pair and dichotomy
    let pair = LinearFamilyPair::new(phi.mapping.clone(), psi.mapping.clone(), coeffs.clone(), f64::INFINITY)
        .map_err(|e| classify("pair", e))?;
    run.keep("pairing", &pair.pairing);
    let dich = dichotomy(cfg, &pair).map_err(|e| classify("pair", e))?;
    dichotomy_rules(run, &dich);
    let degenerate = dich.degenerate.is_some();
    let uniform = dich.lambda_sign.verdict.is_uniform();
    run.report.theorem_1_2 = Fragment::Done(dich);
    run.lap("pair");

    // factorize
    let fac = factorize(&pair).map_err(|e| classify("factorize", e))?;
    let chain = chain_rule_identity_residual(&pair, &fac).map_err(|e| classify("factorize", e))?;
    run.keep("f_w", &fac.f_w);
    run.keep("f_wbar", &fac.f_wbar);
    run.keep("lambda_factored", &fac.lambda);
    if reduced.is_none() {
        run.keep("lambda", &fac.lambda);
    }
    run.at_most("chain_rule.residual", chain.residual, cfg.verification.expect.max_chain_rule);
    run.at_most("chain_rule.lambda_bound", fac.lambda_sup, fac.k_prime_bound + 1e-12);
    if let Some(l) = cfg.verification.expect.lambda {
        let target = c(l);
        let dev = fac.lambda.values().iter().map(|v| (v - target).norm()).fold(0.0, f64::max);
        let tol = cfg.verification.expect.lambda_tol;
        run.at_most("chain_rule.lambda_value", dev, tol);
    }
    run.report.chain_rule = Fragment::Done(ChainRuleFragment {
        residual: chain.residual,
        masked_fraction: fac.masked_fraction,
        lambda_sup: fac.lambda_sup,
        k_prime_bound: fac.k_prime_bound,
        factorized_reduced_residual: fac.reduced_residual,
        im_fw_min: chain.im_fw_min,
        im_fw_max: chain.im_fw_max,
        im_fw_negative_fraction: chain.im_fw_negative_fraction,
    });
    run.lap("factorize");

    // component relations of the solved members of a reduced equation
    run.report.components = match &reduced {
        None => Fragment::skipped("equation is not in reduced form"),
        Some(lam) => {
            let mut out = Vec::new();
            for m in [&phi, &psi] {
                if let Some(sol) = &m.solution {
                    let rep = component_relations(sol, lam).map_err(|e| classify("components", e))?;
                    out.push(ComponentFragment {
                        member: m.role,
                        report: rep,
                    });
                }
            }
            if out.is_empty() {
                Fragment::skipped("no solved member")
            } else {
                let bound = cfg.verification.expect.component_factor * cfg.solver.tol;
                for f in &out {
                    let v = f.report.vx_residual.max(f.report.uy_residual);
                    run.at_most(&format!("components.{}", f.member), v, bound);
                }
                Fragment::Done(out)
            }
        }
    };
    run.lap("components");

    // reverse Hölder only makes sense for a nondegenerate family
    let family_reason = if degenerate {
        Some("degenerate family")
    } else if !uniform {
        Some("not a linear family")
    } else {
        None
    };
    // the weak/adjoint chain needs Φ = z, so that the factored map lives on the
    // computational grid
    if !phi.is_identity() {
        let reason = "partner map is not the identity";
        run.report.adjoint = Fragment::skipped(reason);
        run.report.reverse_holder = Fragment::skipped(family_reason.unwrap_or(reason));
        run.report.zero_measure = Fragment::skipped(family_reason.unwrap_or(reason));
        return Ok(());
    }
    let (adjoint, u_y) = adjoint_stage(run, &fac, &psi).map_err(|e| classify("adjoint", e))?;
    let expect = &cfg.verification.expect;
    run.at_most("adjoint.weak", adjoint.weak_residual, expect.max_weak);
    run.at_most("adjoint.adjoint", adjoint.adjoint_residual, expect.max_adjoint);
    run.at_most("adjoint.bridge", adjoint.bridge_residual, expect.max_bridge);
    run.report.adjoint = Fragment::Done(adjoint);
    run.lap("adjoint");

    if let Some(reason) = family_reason {
        run.report.reverse_holder = Fragment::skipped(reason);
        run.report.zero_measure = Fragment::skipped(reason);
        return Ok(());
    }
    let rh = reverse_holder_stage(cfg, &u_y).map_err(|e| classify("reverse_holder", e))?;
    run.rule(
        "reverse_holder.lower_bound",
        rh.min_ratio >= rh.lower_bound - 1e-3,
        Some(rh.min_ratio),
        Some(rh.lower_bound - 1e-3),
    );
    run.report.reverse_holder = Fragment::Done(rh);
    run.lap("reverse_holder");

    let sup = u_y.sup_norm();
    let taus = &cfg.verification.taus;
    let thresholds: Vec<f64> = taus.iter().map(|t| t * sup).collect();
    let fractions = zero_measure_estimate(&u_y, &thresholds);
    run.report.zero_measure = Fragment::Done(ZeroMeasureFragment {
        field: "u_y",
        zero_fractions: zero_fractions(taus, &thresholds, &fractions),
    });
    run.lap("zero_measure");
    Ok(())
}

fn bump_field(spec: GridSpec, b: &Option<BumpConfig>) -> ComplexField {
    match b {
        Some(b) => smooth_bump(spec, c(b.amplitude), c(b.center), b.radius, b.twist),
        None => ComplexField::zeros(spec),
    }
}

fn build_coefficients(
    cfg: &ScenarioConfig,
    spec: GridSpec,
) -> Result<(BeltramiCoefficients, Option<ReducedCoefficient>), LabError> {
    let reduced = |lambda: ComplexField| -> Result<_, LabError> {
        let lam = ReducedCoefficient::new(lambda)?;
        Ok((reduced_to_general(&lam)?, Some(lam)))
    };
    let general = |mu, nu| Ok((BeltramiCoefficients::new(mu, nu)?, None));
    match &cfg.equation {
        EquationConfig::Zero => reduced(ComplexField::zeros(spec)),
        EquationConfig::Constant { mu, nu } => general(
            ComplexField::constant(spec, c(*mu)),
            ComplexField::constant(spec, c(*nu)),
        ),
        EquationConfig::ConstantReduced { lambda } => reduced(ComplexField::constant(spec, c(*lambda))),
        EquationConfig::RadialStretch { k, radius, center } => general(
            radial_stretch_mu(spec, *k, c(*center), *radius),
            ComplexField::zeros(spec),
        ),
        EquationConfig::SmoothBump { mu, nu } => general(bump_field(spec, mu), bump_field(spec, nu)),
        EquationConfig::SmoothBumpReduced { lambda } => reduced(bump_field(spec, &Some(lambda.clone()))),
        EquationConfig::Csv { mu, nu } => {
            let load = |p: &Option<std::path::PathBuf>| match p {
                Some(p) => ComplexField::load_csv(p, spec),
                None => Ok(ComplexField::zeros(spec)),
            };
            general(load(mu)?, load(nu)?)
        }
        EquationConfig::CsvReduced { lambda } => reduced(ComplexField::load_csv(lambda, spec)?),
    }
}

fn solve_member(
    role: &'static str,
    a: Complex64,
    cfg: &ScenarioConfig,
    coeffs: &BeltramiCoefficients,
    reduced: Option<&ReducedCoefficient>,
    plan: &TransformPlan,
) -> Result<Member, LabError> {
    let mut opts = SolverOptions::new(cfg.solver.tol, cfg.solver.max_iter).normalized(a);
    opts.dealias = cfg.solver.dealias;
    let sol = match reduced {
        Some(lam) => solve_reduced(lam, plan, &opts)?,
        None => solve_principal(coeffs, plan, &opts)?,
    };
    Ok(Member {
        role,
        source: "solved",
        linear: a,
        mapping: sol.mapping.clone(),
        solution: Some(sol),
    })
}

fn explicit_member(role: &'static str, spec: GridSpec, m: &MapConfig) -> Result<Member, LabError> {
    let (linear, mapping) = match m {
        MapConfig::Affine { a, b } => (c(*a), Mapping::affine(spec, c(*a), c(*b))),
        MapConfig::Power { c: coef, power } => (c(*coef), Mapping::power(spec, c(*coef), *power)?),
    };
    Ok(Member {
        role,
        source: "explicit",
        linear,
        mapping,
        solution: None,
    })
}

fn build_family(
    cfg: &ScenarioConfig,
    coeffs: &BeltramiCoefficients,
    reduced: Option<&ReducedCoefficient>,
    plan: &TransformPlan,
) -> Result<(Member, Member), LabError> {
    let spec = *plan.spec();
    match &cfg.family {
        FamilyConfig::IdentityPartner { partner } => Ok((
            Member {
                role: "phi",
                source: "identity",
                linear: Complex64::new(1.0, 0.0),
                mapping: Mapping::identity(spec),
                solution: None,
            },
            solve_member("psi", c(*partner), cfg, coeffs, reduced, plan)?,
        )),
        FamilyConfig::TwoSolved { phi, psi } => Ok((
            solve_member("phi", c(*phi), cfg, coeffs, reduced, plan)?,
            solve_member("psi", c(*psi), cfg, coeffs, reduced, plan)?,
        )),
        FamilyConfig::Explicit { phi, psi } => {
            Ok((explicit_member("phi", spec, phi)?, explicit_member("psi", spec, psi)?))
        }
        FamilyConfig::Scaled { phi, factor } => {
            let phi = solve_member("phi", c(*phi), cfg, coeffs, reduced, plan)?;
            let psi = Member {
                role: "psi",
                source: "scaled",
                linear: phi.linear * *factor,
                mapping: phi.mapping.scaled(*factor),
                solution: None,
            };
            Ok((phi, psi))
        }
    }
}

fn solver_fragment(
    cfg: &ScenarioConfig,
    coeffs: &BeltramiCoefficients,
    reduced: Option<&ReducedCoefficient>,
    phi: &Member,
    psi: &Member,
) -> Result<SolverFragment, LabError> {
    let mut members = Vec::new();
    for m in [phi, psi] {
        let jac = m.mapping.jacobian();
        let nonpositive = jac.values().iter().filter(|v| v.re <= 0.0).count() as f64 / jac.spec().len() as f64;
        members.push(MemberReport {
            role: m.role,
            source: m.source,
            linear: [m.linear.re, m.linear.im],
            conj_linear: m.solution.as_ref().map(|s| [s.conj_linear.re, s.conj_linear.im]),
            iterations: m.solution.as_ref().map(|s| s.iterations),
            solver_residual: m.solution.as_ref().map(|s| s.residual),
            equation_residual: residual_general(&m.mapping, coeffs)?,
            reduced_residual: reduced.map(|l| residual_reduced(&m.mapping, l)).transpose()?,
            nonpositive_jacobian_fraction: nonpositive,
        });
    }
    let oracle = match &cfg.verification.oracle {
        None => Fragment::skipped("no oracle configured"),
        Some(OracleConfig::Affine { tol }) => Fragment::Done(OracleReport {
            kind: "affine",
            error: affine_oracle_error(coeffs, &[phi, psi])?,
            tol: *tol,
        }),
        Some(OracleConfig::RadialStretch { tol }) => {
            let EquationConfig::RadialStretch { k, radius, center } = &cfg.equation else {
                return Err(LabError::Config("radial_stretch oracle needs a radial_stretch equation".into()));
            };
            let Some(sol) = phi.solution.as_ref().filter(|_| phi.linear == Complex64::new(1.0, 0.0)) else {
                return Err(LabError::Config("radial_stretch oracle needs a solved Φ with linear part 1".into()));
            };
            let exact = radial_stretch_displacement(*coeffs.spec(), *k, c(*center), *radius);
            Fragment::Done(OracleReport {
                kind: "radial_stretch",
                error: sol.displacement.relative_l2_error(&exact)?,
                tol: *tol,
            })
        }
    };
    Ok(SolverFragment {
        k: coeffs.k(),
        quasiconformality: coeffs.quasiconformality(),
        members,
        oracle,
    })
}

/// Largest relative `L²` deviation of a solved member from `a z + (μa + ν·conj a) z̄`.
fn affine_oracle_error(coeffs: &BeltramiCoefficients, members: &[&Member]) -> Result<f64, LabError> {
    let mu = coeffs.mu.values()[0];
    let nu = coeffs.nu.values()[0];
    let constant = coeffs.mu.values().iter().all(|v| *v == mu) && coeffs.nu.values().iter().all(|v| *v == nu);
    if !constant {
        return Err(LabError::Config("affine oracle needs constant coefficients".into()));
    }
    let mut worst = 0.0f64;
    for m in members.iter().filter(|m| m.solution.is_some()) {
        let a = m.linear;
        let exact = Mapping::affine(*coeffs.spec(), a, mu * a + nu * a.conj());
        worst = worst.max(m.mapping.values.relative_l2_error(&exact.values)?);
    }
    Ok(worst)
}

fn zero_fractions(taus: &[f64], thresholds: &[f64], fractions: &[f64]) -> Vec<ZeroFraction> {
    taus.iter()
        .zip(thresholds)
        .zip(fractions)
        .map(|((&tau, &threshold), &fraction)| ZeroFraction {
            tau,
            threshold,
            fraction,
        })
        .collect()
}

fn dichotomy(cfg: &ScenarioConfig, pair: &LinearFamilyPair) -> Result<DichotomyFragment, LabError> {
    let v = &cfg.verification;
    let re = pair.pairing.values().iter().map(|z| z.re);
    let pairing_min = re.clone().fold(f64::INFINITY, f64::min);
    let pairing_max = re.fold(f64::NEG_INFINITY, f64::max);
    let pairing_sup = pair.pairing.sup_norm();
    // a vanishing pairing has no scale of its own; fall back to |Φ_z|·|Ψ_z|
    let natural = pair.phi.fz.sup_norm() * pair.psi.fz.sup_norm();
    let tau_scale = if pairing_sup > 1e-12 * natural { pairing_sup } else { natural };
    let thresholds: Vec<f64> = v.taus.iter().map(|t| t * tau_scale).collect();
    let fractions = zero_measure_estimate(&pair.pairing, &thresholds);
    let degenerate = degenerate_pair_detect(&pair.phi, &pair.psi, DEPENDENCE_TOL)?;
    let lambda_sign = lambda_sign_field(&pair.phi, &pair.psi, v.lambda_samples, v.lambda_seed)?;
    let branch = if degenerate.is_some() {
        "degenerate"
    } else if lambda_sign.verdict.is_uniform() {
        "nondegenerate"
    } else {
        "not-a-family"
    };
    let smallest = *thresholds.iter().min_by(|a, b| a.total_cmp(b)).expect("taus nonempty");
    Ok(DichotomyFragment {
        pairing_min,
        pairing_max,
        pairing_sup,
        tau_scale,
        zero_fractions: zero_fractions(&v.taus, &thresholds, &fractions),
        degenerate: degenerate.map(|(a, b)| [a, b]),
        lambda_sign,
        branch,
        sign_violation_fraction: sign_violation_fraction(&pair.pairing, lambda_sign.verdict, smallest),
    })
}

fn dichotomy_rules(run: &mut Run, d: &DichotomyFragment) {
    let expect = run.cfg.verification.expect.clone();
    if let Some(want) = expect.degenerate {
        let got = d.degenerate.is_some();
        run.rule("dichotomy.expected_degenerate", got == want, Some(got as u8 as f64), Some(want as u8 as f64));
    }
    if let Some(want) = &expect.verdict {
        let got = verdict_name(&d.lambda_sign);
        run.rule(&format!("lambda_sign.expected_{want}"), &got == want, None, None);
    }
    if let Some(p) = expect.pairing {
        let dev = (d.pairing_max - p).abs().max((d.pairing_min - p).abs());
        run.at_most("pairing.constant", dev, expect.pairing_tol);
    }
    match d.branch {
        "degenerate" => run.at_most("dichotomy.pairing_vanishes", d.pairing_sup, expect.degenerate_zero_tol),
        "nondegenerate" => {
            let smallest = d
                .zero_fractions
                .iter()
                .min_by(|a, b| a.tau.total_cmp(&b.tau))
                .map(|z| z.fraction)
                .unwrap_or(0.0);
            run.at_most("dichotomy.zero_fraction", smallest, expect.max_zero_fraction);
            run.at_most("dichotomy.sign_violation", d.sign_violation_fraction, expect.max_sign_violation);
        }
        _ => {}
    }
    if d.lambda_sign.verdict == SignVerdict::Degenerate && d.branch != "degenerate" {
        // Λ vanishes on samples while the maps are independent: cannot certify
        run.rule("lambda_sign.consistent", false, None, None);
    }
}

fn adjoint_stage(
    run: &Run,
    fac: &Factorization,
    psi: &Member,
) -> Result<(AdjointFragment, ComplexField), LabError> {
    let v = &run.cfg.verification;
    let lam = ReducedCoefficient::new(fac.lambda.clone())?;
    let coeffs = coefficients_from_lambda(&lam)?;
    let spec = *lam.spec();
    let bumps = TestBump::battery(&spec, v.bump_count, v.bump_seed)?;
    let g = psi.gradients();
    Ok((
        AdjointFragment {
            k_ell: coeffs.k_ell(),
            bumps: bumps.len(),
            weak_residual: weak_divergence_residual(&g.u_x, &g.u_y, &coeffs, &bumps)?,
            adjoint_residual: adjoint_residual(&g.u_y, &coeffs, &bumps)?,
            bridge_residual: bridge_residual(&g.u_x, &g.u_y, &coeffs, &bumps)?,
        },
        g.u_y,
    ))
}

fn reverse_holder_stage(cfg: &ScenarioConfig, u_y: &ComplexField) -> Result<ReverseHolderFragment, LabError> {
    let v = &cfg.verification;
    let spec = *u_y.spec();
    // orient so that the adjoint solution is predominantly nonnegative
    let negative = u_y.values().iter().filter(|z| z.re < 0.0).count();
    let orientation = if 2 * negative > spec.len() { -1.0 } else { 1.0 };
    let w = u_y.scale(Complex64::new(orientation, 0.0));
    let disks = disk_ladder(&spec, &v.disk_multiples, v.disk_centers, v.disk_seed)?;
    let scan = reverse_holder_scan(&w, &disks)?;
    let h = spec.spacing();
    let c0_by_radius = v
        .disk_multiples
        .iter()
        .map(|&m| RadiusC0 {
            multiple: m,
            radius: m as f64 * h,
            c0: scan.c0_for_radius(m as f64 * h),
        })
        .collect();
    let min_ratio = scan.ratios.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    Ok(ReverseHolderFragment {
        orientation,
        disks: disks.len(),
        skipped_disks: scan.skipped,
        c0_empirical: scan.c0_empirical,
        c0_by_radius,
        min_ratio,
        lower_bound: 1.0 / PI.sqrt(),
        ratios_histogram: scan
            .histogram()
            .into_iter()
            .map(|(lower_edge, count)| HistogramBin { lower_edge, count })
            .collect(),
        clipped_negative_fraction: scan.clipped_negative_fraction,
        significant_negative_fraction: scan.significant_negative_fraction,
    })
}
