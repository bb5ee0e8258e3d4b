//! TOML scenario configuration.

use std::path::{Path, PathBuf};

use beltrami_core::{Complex64, GridSpec};
use serde::{Deserialize, Serialize};

use crate::RunError;

/// A complex number written as `[re, im]`.
pub type Pair = [f64; 2];

pub(crate) fn c(p: Pair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub grid: GridConfig,
    pub equation: EquationConfig,
    pub family: FamilyConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub verification: VerificationConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    #[serde(default = "default_side")]
    pub side: f64,
    #[serde(default)]
    pub origin: Pair,
}

fn default_side() -> f64 {
    2.0 * std::f64::consts::PI
}

impl GridConfig {
    pub fn spec(&self) -> Result<GridSpec, RunError> {
        GridSpec::new(self.n, self.side, c(self.origin)).map_err(RunError::config)
    }
}

/// A smooth compactly supported bump `amplitude·cutoff(|z−center|²/radius²)·e^{i·twist·(x−cx)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpConfig {
    pub amplitude: Pair,
    #[serde(default)]
    pub center: Pair,
    pub radius: f64,
    #[serde(default)]
    pub twist: f64,
}

/// Coefficient generator. `*_reduced` kinds define `λ`; the others define `μ, ν`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EquationConfig {
    /// `μ = ν = λ = 0`.
    Zero,
    Constant {
        #[serde(default)]
        mu: Pair,
        #[serde(default)]
        nu: Pair,
    },
    ConstantReduced {
        lambda: Pair,
    },
    /// `μ = k·(z/z̄)` on a disk, `ν = 0`.
    RadialStretch {
        k: f64,
        #[serde(default = "one")]
        radius: f64,
        #[serde(default)]
        center: Pair,
    },
    SmoothBump {
        #[serde(default)]
        mu: Option<BumpConfig>,
        #[serde(default)]
        nu: Option<BumpConfig>,
    },
    SmoothBumpReduced {
        lambda: BumpConfig,
    },
    /// Field dumps in the `ix,iy,x,y,re,im` format, relative to the scenario file.
    Csv {
        #[serde(default)]
        mu: Option<PathBuf>,
        #[serde(default)]
        nu: Option<PathBuf>,
    },
    CsvReduced {
        lambda: PathBuf,
    },
}

fn one() -> f64 {
    1.0
}

impl EquationConfig {
    pub fn is_reduced(&self) -> bool {
        matches!(
            self,
            Self::Zero | Self::ConstantReduced { .. } | Self::SmoothBumpReduced { .. } | Self::CsvReduced { .. }
        )
    }
}

/// An explicitly given map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapConfig {
    /// `a z + b z̄`
    Affine {
        a: Pair,
        #[serde(default)]
        b: Pair,
    },
    /// `c·z^power`
    Power { c: Pair, power: u32 },
}

/// How `Φ` and `Ψ` are produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyConfig {
    /// `Φ = z`; `Ψ` solved with linear part `partner`.
    IdentityPartner {
        #[serde(default = "unit_i")]
        partner: Pair,
    },
    /// Both solved, with linear parts `phi` and `psi`.
    TwoSolved {
        #[serde(default = "unit_one")]
        phi: Pair,
        #[serde(default = "unit_i")]
        psi: Pair,
    },
    Explicit { phi: MapConfig, psi: MapConfig },
    /// `Φ` solved with linear part `phi`; `Ψ = factor·Φ`.
    Scaled {
        #[serde(default = "unit_one")]
        phi: Pair,
        #[serde(default = "two")]
        factor: f64,
    },
}

fn unit_one() -> Pair {
    [1.0, 0.0]
}

fn unit_i() -> Pair {
    [0.0, 1.0]
}

fn two() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub dealias: bool,
}

fn default_tol() -> f64 {
    1e-10
}

fn default_max_iter() -> usize {
    500
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_iter: default_max_iter(),
            dealias: false,
        }
    }
}

/// Closed-form comparison for the solved members of the family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OracleConfig {
    /// `a z + b z̄` with `b = μa + ν·conj(a)` for constant coefficients.
    Affine {
        #[serde(default = "affine_tol")]
        tol: f64,
    },
    /// Radial stretch displacement of the `radial_stretch` equation, checked on `Φ`.
    RadialStretch {
        #[serde(default = "radial_tol")]
        tol: f64,
    },
}

fn affine_tol() -> f64 {
    1e-10
}

fn radial_tol() -> f64 {
    5e-2
}

/// Expected outcomes and rule thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectConfig {
    /// `"all-negative"`, `"all-positive"`, `"mixed"` or `"degenerate"`.
    #[serde(default)]
    pub verdict: Option<String>,
    #[serde(default)]
    pub degenerate: Option<bool>,
    /// Constant value of the pairing, checked in sup norm to `pairing_tol`.
    #[serde(default)]
    pub pairing: Option<f64>,
    #[serde(default = "tight")]
    pub pairing_tol: f64,
    /// Constant value of `λ∘Φ`, checked in sup norm to `lambda_tol`.
    #[serde(default)]
    pub lambda: Option<Pair>,
    #[serde(default = "lambda_tol")]
    pub lambda_tol: f64,
    #[serde(default = "zero_fraction")]
    pub max_zero_fraction: f64,
    #[serde(default = "sign_violation")]
    pub max_sign_violation: f64,
    #[serde(default = "chain_rule")]
    pub max_chain_rule: f64,
    #[serde(default = "weak")]
    pub max_weak: f64,
    #[serde(default = "adjoint")]
    pub max_adjoint: f64,
    #[serde(default = "bridge")]
    pub max_bridge: f64,
    /// Bound on the component relations, as a multiple of the solver tolerance.
    #[serde(default = "component_factor")]
    pub component_factor: f64,
    #[serde(default = "degenerate_zero")]
    pub degenerate_zero_tol: f64,
}

fn tight() -> f64 {
    1e-10
}
fn lambda_tol() -> f64 {
    1e-8
}
fn zero_fraction() -> f64 {
    1e-2
}
fn sign_violation() -> f64 {
    1e-3
}
fn chain_rule() -> f64 {
    1e-4
}
fn weak() -> f64 {
    1e-5
}
fn adjoint() -> f64 {
    1e-4
}
fn bridge() -> f64 {
    1e-6
}
fn component_factor() -> f64 {
    10.0
}
fn degenerate_zero() -> f64 {
    1e-12
}

impl Default for ExpectConfig {
    fn default() -> Self {
        Self {
            verdict: None,
            degenerate: None,
            pairing: None,
            pairing_tol: tight(),
            lambda: None,
            lambda_tol: lambda_tol(),
            max_zero_fraction: zero_fraction(),
            max_sign_violation: sign_violation(),
            max_chain_rule: chain_rule(),
            max_weak: weak(),
            max_adjoint: adjoint(),
            max_bridge: bridge(),
            component_factor: component_factor(),
            degenerate_zero_tol: degenerate_zero(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerificationConfig {
    /// Zero-set thresholds, relative to `sup|𝒥|` (or to `sup|u_y|` for the adjoint solution).
    #[serde(default = "default_taus")]
    pub taus: Vec<f64>,
    #[serde(default = "default_lambda_samples")]
    pub lambda_samples: usize,
    #[serde(default = "default_seed")]
    pub lambda_seed: u64,
    #[serde(default = "default_bump_count")]
    pub bump_count: usize,
    #[serde(default = "default_seed")]
    pub bump_seed: u64,
    /// Disk radii as multiples of the grid spacing.
    #[serde(default = "default_disk_multiples")]
    pub disk_multiples: Vec<usize>,
    #[serde(default = "default_disk_centers")]
    pub disk_centers: usize,
    #[serde(default = "default_seed")]
    pub disk_seed: u64,
    #[serde(default)]
    pub oracle: Option<OracleConfig>,
    #[serde(default)]
    pub expect: ExpectConfig,
}

fn default_taus() -> Vec<f64> {
    vec![1e-2, 1e-4, 1e-6]
}
fn default_lambda_samples() -> usize {
    20_000
}
fn default_seed() -> u64 {
    1
}
fn default_bump_count() -> usize {
    20
}
fn default_disk_multiples() -> Vec<usize> {
    vec![8, 16, 32]
}
fn default_disk_centers() -> usize {
    32
}

impl Default for VerificationConfig {
    fn default() -> Self {
        Self {
            taus: default_taus(),
            lambda_samples: default_lambda_samples(),
            lambda_seed: default_seed(),
            bump_count: default_bump_count(),
            bump_seed: default_seed(),
            disk_multiples: default_disk_multiples(),
            disk_centers: default_disk_centers(),
            disk_seed: default_seed(),
            oracle: None,
            expect: ExpectConfig::default(),
        }
    }
}

/// Field names accepted in `output.dump`. `lambda` is the input coefficient for
/// reduced equations and `λ∘Φ` otherwise; `lambda_factored` is always `λ∘Φ`.
pub const DUMPABLE: &[&str] = &[
    "mu", "nu", "lambda", "lambda_factored", "phi", "psi", "phi_z", "psi_z", "pairing", "f_w", "f_wbar", "u_y", "v_x",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Overrides the output root for this scenario.
    #[serde(default)]
    pub directory: Option<PathBuf>,
    #[serde(default)]
    pub dump: Vec<String>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        let cfg: Self = toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load a scenario; relative CSV paths are resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut cfg.equation {
            EquationConfig::Csv { mu, nu } => {
                mu.iter_mut().chain(nu.iter_mut()).for_each(resolve);
            }
            EquationConfig::CsvReduced { lambda } => resolve(lambda),
            _ => {}
        }
        Ok(cfg)
    }

    /// Replace every seed with `seed`.
    pub fn override_seed(&mut self, seed: u64) {
        let v = &mut self.verification;
        v.lambda_seed = seed;
        v.bump_seed = seed;
        v.disk_seed = seed;
    }

    /// Range checks that do not need the grid to be built.
    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |msg: String| Err(RunError::Config(msg));
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|ch| ch.is_ascii_alphanumeric() || ch == '_' || ch == '-')
        {
            return bad(format!("scenario name {:?} must be nonempty [A-Za-z0-9_-]", self.name));
        }
        self.grid.spec()?;
        let s = &self.solver;
        if !(s.tol > 0.0 && s.tol.is_finite()) || s.max_iter == 0 {
            return bad("solver.tol must be positive and solver.max_iter nonzero".into());
        }
        let v = &self.verification;
        if v.taus.is_empty() || v.taus.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return bad("verification.taus must be a nonempty list of positive numbers".into());
        }
        if v.lambda_samples == 0 {
            return bad("verification.lambda_samples must be positive".into());
        }
        if v.disk_multiples.is_empty() || v.disk_multiples.contains(&0) || v.disk_centers == 0 {
            return bad("verification disk ladder must be nonempty with positive multiples".into());
        }
        if let Some(verdict) = &v.expect.verdict {
            if !["all-negative", "all-positive", "mixed", "degenerate"].contains(&verdict.as_str()) {
                return bad(format!("unknown expected verdict {verdict:?}"));
            }
        }
        for name in &self.output.dump {
            if !DUMPABLE.contains(&name.as_str()) {
                return bad(format!("unknown dump field {name:?}; expected one of {DUMPABLE:?}"));
            }
        }
        match &self.equation {
            EquationConfig::RadialStretch { k, radius, .. } => {
                if !(0.0..1.0).contains(k) || *radius <= 0.0 {
                    return bad("radial_stretch needs 0 <= k < 1 and radius > 0".into());
                }
            }
            EquationConfig::SmoothBump { mu, nu } => {
                for b in mu.iter().chain(nu) {
                    check_bump(b)?;
                }
            }
            EquationConfig::SmoothBumpReduced { lambda } => check_bump(lambda)?,
            _ => {}
        }
        if let FamilyConfig::Scaled { factor, .. } = &self.family {
            if !factor.is_finite() {
                return bad("family.factor must be finite".into());
            }
        }
        if matches!(v.oracle, Some(OracleConfig::RadialStretch { .. }))
            && !matches!(self.equation, EquationConfig::RadialStretch { .. })
        {
            return bad("radial_stretch oracle requires a radial_stretch equation".into());
        }
        Ok(())
    }
}

fn check_bump(b: &BumpConfig) -> Result<(), RunError> {
    if !(b.radius > 0.0) || !b.twist.is_finite() {
        return Err(RunError::Config("bump radius must be positive".into()));
    }
    Ok(())
}
