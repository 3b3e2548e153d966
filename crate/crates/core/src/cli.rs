//! Config-driven command layer: `verify`, `solve`, `valley`, `sweep`, `norm`.
//!
//! A run is described by one JSON document (unknown keys rejected). Exponents
//! are given as constants, affine expressions in the coordinates ("2+0.4*x"),
//! or field-file references; anything richer goes through field files. All
//! file outputs are written atomically (temp + rename) and contain no
//! wall-clock data, so identical configs and seeds produce byte-identical
//! outputs.
//!
//! Exit-code contract: 0 success, 1 mathematical failure (hypothesis chain or
//! solve), 2 usage/config error.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{energy, valley_constants};
use crate::error::Error;
use crate::exponent::{check_theorem_hypotheses, ExponentTriple, HypothesisReport};
use crate::field::{Grid, ScalarField};
use crate::lebesgue::{
    holder_check, luxemburg_norm, modular, modular_norm_relations_check, DEFAULT_NORM_TOL,
};
use crate::minimize::{
    lambda_sweep, log_spaced_grid, solve, EpsSchedule, ProblemSpec, SolveResult, SolverTolerances,
    SweepStatus,
};
use crate::phi::{ModelCheck, PhiModel};
use crate::profiles::{bump_profile, random_smooth_field};
use crate::Result;

pub const EXIT_OK: i32 = 0;
pub const EXIT_MATH: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Maps an error to the CLI exit code: config/IO problems are usage errors,
/// everything else is a mathematical failure.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Io(_) | Error::Json(_) | Error::InvalidGrid(_) => EXIT_USAGE,
        _ => EXIT_MATH,
    }
}

/// A constant, an affine coordinate expression, or a field-file reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Number(f64),
    Expr(String),
    File { file: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub dim: usize,
    pub counts: Vec<usize>,
    pub extents: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentConfig {
    pub p: FieldSpec,
    pub q: FieldSpec,
    pub r: FieldSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiConfig {
    pub tag: String,
    /// Exponent of a base model; defaults to the problem exponent p.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<FieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p1: Option<FieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p2: Option<FieldSpec>,
    #[serde(default, rename = "V", skip_serializing_if = "Option::is_none")]
    pub weight: Option<FieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_weight: Option<bool>,
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<FieldSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsConfig {
    pub initial: f64,
    pub decay: f64,
    pub floor: f64,
}

impl Default for EpsConfig {
    fn default() -> Self {
        let d = EpsSchedule::default();
        EpsConfig {
            initial: d.initial,
            decay: d.decay,
            floor: d.floor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<EpsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValleyConfig {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
}

impl Default for ValleyConfig {
    fn default() -> Self {
        ValleyConfig {
            t_min: 1e-6,
            t_max: 1.0,
            points: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// (node, ξ) samples for the growth-hypothesis check.
    pub samples: usize,
    /// Random field pairs for the Hölder / modular-norm battery.
    pub pairs: usize,
    /// Random (node, u, v) samples for the Simon battery.
    pub simon_samples: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            samples: 2000,
            pairs: 1000,
            simon_samples: 10_000,
        }
    }
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub exponents: ExponentConfig,
    pub phi: PhiConfig,
    #[serde(default)]
    pub solve: SolveConfig,
    #[serde(default)]
    pub valley: ValleyConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("malformed config: {e}")))?;
        Ok(cfg)
    }
}

/// Parses an affine coordinate expression: signed terms that are constants,
/// `k*x`, `k*y`, or bare `x`/`y`. Sign splits skip exponent notation.
fn parse_affine(expr: &str) -> Result<(f64, f64, f64)> {
    let s: String = expr.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(Error::Config("empty exponent expression".into()));
    }
    let bytes = s.as_bytes();
    let mut terms = Vec::new();
    let mut start = 0;
    for i in 1..bytes.len() {
        let c = bytes[i] as char;
        if (c == '+' || c == '-') && !matches!(bytes[i - 1] as char, 'e' | 'E') {
            terms.push(&s[start..i]);
            start = i;
        }
    }
    terms.push(&s[start..]);

    let (mut c0, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for term in terms {
        let (sign, body) = match term.strip_prefix('-') {
            Some(rest) => (-1.0, rest),
            None => (1.0, term.strip_prefix('+').unwrap_or(term)),
        };
        let apply = |target: &mut f64, coef_text: &str| -> Result<()> {
            let coef = if coef_text.is_empty() {
                1.0
            } else {
                coef_text.parse::<f64>().map_err(|_| {
                    Error::Config(format!("bad coefficient '{coef_text}' in '{expr}'"))
                })?
            };
            *target += sign * coef;
            Ok(())
        };
        if let Some(prefix) = body.strip_suffix("*x") {
            apply(&mut cx, prefix)?;
        } else if let Some(prefix) = body.strip_suffix("*y") {
            apply(&mut cy, prefix)?;
        } else if body == "x" {
            apply(&mut cx, "")?;
        } else if body == "y" {
            apply(&mut cy, "")?;
        } else {
            apply(&mut c0, body)?;
        }
    }
    Ok((c0, cx, cy))
}

/// Materializes a field spec on the grid.
pub fn resolve_field(spec: &FieldSpec, grid: &Arc<Grid>) -> Result<ScalarField> {
    match spec {
        FieldSpec::Number(v) => ScalarField::constant(grid.clone(), *v),
        FieldSpec::Expr(text) => {
            let (c0, cx, cy) = parse_affine(text)?;
            if cy != 0.0 && grid.dim() < 2 {
                return Err(Error::Config(format!(
                    "expression '{text}' uses y on a 1D grid"
                )));
            }
            ScalarField::from_fn(grid.clone(), move |[x, y]| c0 + cx * x + cy * y)
        }
        FieldSpec::File { file } => {
            let f = ScalarField::read_json(file)?;
            if !f.grid().same_as(grid) {
                return Err(Error::Config(format!(
                    "field file {} has a different grid than the config domain",
                    file.display()
                )));
            }
            Ok(f)
        }
    }
}

pub fn build_grid(cfg: &RunConfig) -> Result<Arc<Grid>> {
    if cfg.domain.counts.len() != cfg.domain.dim || cfg.domain.extents.len() != cfg.domain.dim {
        return Err(Error::Config(
            "domain dim does not match counts/extents lengths".into(),
        ));
    }
    Ok(Arc::new(Grid::new(
        &cfg.domain.counts,
        &cfg.domain.extents,
    )?))
}

pub fn build_exponents(cfg: &RunConfig, grid: &Arc<Grid>) -> Result<ExponentTriple> {
    ExponentTriple::new(
        resolve_field(&cfg.exponents.p, grid)?,
        resolve_field(&cfg.exponents.q, grid)?,
        resolve_field(&cfg.exponents.r, grid)?,
    )
}

pub fn build_phi(cfg: &RunConfig, grid: &Arc<Grid>, exps: &ExponentTriple) -> Result<PhiModel> {
    let base_p = match &cfg.phi.p {
        Some(spec) => resolve_field(spec, grid)?,
        None => exps.p().clone(),
    };
    let model = match cfg.phi.tag.as_str() {
        "power" => PhiModel::power(base_p, cfg.phi.c)?,
        "mean_curvature" => PhiModel::mean_curvature(base_p, cfg.phi.c)?,
        "capillarity" => PhiModel::capillarity(base_p, cfg.phi.c)?,
        "double_phase" | "double_phase_log" => {
            let p1 = match &cfg.phi.p1 {
                Some(s) => resolve_field(s, grid)?,
                None => exps.p().clone(),
            };
            let p2 = resolve_field(
                cfg.phi
                    .p2
                    .as_ref()
                    .ok_or_else(|| Error::Config("double_phase requires p2".into()))?,
                grid,
            )?;
            let weight = resolve_field(
                cfg.phi
                    .weight
                    .as_ref()
                    .ok_or_else(|| Error::Config("double_phase requires V".into()))?,
                grid,
            )?;
            let log_weight =
                cfg.phi.tag == "double_phase_log" || cfg.phi.log_weight.unwrap_or(false);
            PhiModel::double_phase(p1, p2, weight, log_weight, cfg.phi.c)?
        }
        other => return Err(Error::Config(format!("unknown phi tag '{other}'"))),
    };
    match (&cfg.phi.a, cfg.phi.b) {
        (Some(a_spec), b) => {
            let a = resolve_field(a_spec, grid)?;
            let b = b.unwrap_or(model.b());
            model.with_growth_data(a, b)
        }
        (None, Some(b)) => {
            let a = model.a().clone();
            model.with_growth_data(a, b)
        }
        (None, None) => Ok(model),
    }
}

pub fn build_problem_spec(cfg: &RunConfig) -> Result<ProblemSpec> {
    let grid = build_grid(cfg)?;
    let exps = build_exponents(cfg, &grid)?;
    let phi = build_phi(cfg, &grid, &exps)?;
    let lambda = cfg
        .solve
        .lambda
        .or_else(|| cfg.solve.lambdas.as_ref().and_then(|l| l.first().copied()))
        .ok_or_else(|| Error::Config("solve.lambda (or lambdas) is required".into()))?;
    let mut spec = ProblemSpec::new(exps, phi, lambda)?;
    if let Some(e) = &cfg.solve.eps {
        spec = spec.with_eps_schedule(EpsSchedule {
            initial: e.initial,
            decay: e.decay,
            floor: e.floor,
        })?;
    }
    let mut tol = SolverTolerances::default();
    if let Some(m) = cfg.solve.max_iters {
        tol.max_iters = m;
    }
    if let Some(g) = cfg.solve.grad_tol {
        tol.grad_tol = g;
    }
    if let Some(r) = cfg.solve.residual_tol {
        tol.residual_tol = r;
    }
    Ok(spec.with_tolerances(tol))
}

/// Writes bytes atomically: temp file in the same directory, then rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension(match path.extension() {
        Some(ext) => format!("{}.tmp", ext.to_string_lossy()),
        None => "tmp".to_string(),
    });
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v}")
    }
}

#[derive(Debug, Clone)]
pub struct CmdOutcome {
    pub exit: i32,
    pub message: String,
}

#[derive(Debug, Serialize)]
struct SimonBattery {
    samples: usize,
    violations: usize,
    worst_gap: f64,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct PairBattery {
    samples: usize,
    violations: usize,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    hypothesis_chain: HypothesisReport,
    model: ModelCheck,
    simon: SimonBattery,
    holder: PairBattery,
    modular_norm: PairBattery,
    norm_modular_equivalence: PairBattery,
    warnings: Vec<String>,
    pass: bool,
}

/// Runs the full verification battery and writes `verify.json`.
///
/// Exit 0 iff the structural checks pass (hypothesis chain plus the Hölder,
/// modular-norm, and convergence-equivalence batteries, which are guaranteed
/// inequalities). Empirical growth-hypothesis findings for a model are
/// warnings, not errors.
pub fn cmd_verify(cfg: &RunConfig, out_dir: &Path) -> Result<CmdOutcome> {
    let grid = build_grid(cfg)?;
    let exps = build_exponents(cfg, &grid)?;
    let model = build_phi(cfg, &grid, &exps)?;
    let mut warnings = Vec::new();

    let chain = check_theorem_hypotheses(&exps, grid.dim() as u32)?;
    let model_check = model.verify_hypotheses(cfg.verify.samples)?;
    if !model_check.ellipticity_pass() {
        warnings.push(format!(
            "the ellipticity bound fails empirically for this model with c = {} (max admissible \
             estimate {:.6e}); coercivity constants derived from c are not certified",
            model_check.c_claimed, model_check.c_max_estimate
        ));
    }
    if !model_check.growth_pass {
        warnings.push("the growth bound fails with the claimed (a, b)".to_string());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // Simon battery with the model's claimed c; only meaningful when the
    // ellipticity bound holds.
    let mut simon_violations = 0;
    let mut worst_gap = f64::INFINITY;
    let p_min = model.p_minus();
    for _ in 0..cfg.verify.simon_samples {
        let node = rng.random_range(0..grid.node_count());
        let u = [rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)];
        let v = [rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)];
        if p_min < 2.0 && u == [0.0, 0.0] && v == [0.0, 0.0] {
            continue;
        }
        let (lhs, rhs) = model.simon_gap(node, &u, &v)?;
        let gap = lhs - rhs;
        worst_gap = worst_gap.min(gap);
        if gap < -1e-12 * (1.0 + rhs.abs()) {
            simon_violations += 1;
        }
    }
    let simon_pass = simon_violations == 0;
    if !simon_pass && !model_check.ellipticity_pass() {
        warnings.push(
            "Simon battery violations are expected: the ellipticity bound already fails for the claimed c"
                .to_string(),
        );
    }

    // Hölder and modular-norm batteries on random smooth fields.
    let p = exps.p();
    let mut holder_violations = 0;
    let mut relation_violations = 0;
    for _ in 0..cfg.verify.pairs {
        let u = random_smooth_field(&grid, &mut rng, 6)?.scale(rng.random_range(0.1..5.0))?;
        let v = random_smooth_field(&grid, &mut rng, 6)?.scale(rng.random_range(0.1..5.0))?;
        if !holder_check(&u, &v, p, 1e-9)?.pass {
            holder_violations += 1;
        }
        if !modular_norm_relations_check(&u, p)?.pass {
            relation_violations += 1;
        }
    }

    // Norm/modular convergence equivalence on geometric sequences: both
    // gauges decay together, sandwiched by the small-norm modular chain.
    let (p_minus, p_plus) = crate::exponent::exponent_bounds(p)?;
    let mut equivalence_violations = 0;
    let sequences = 5;
    for _ in 0..sequences {
        let w = random_smooth_field(&grid, &mut rng, 6)?.scale(rng.random_range(0.5..4.0))?;
        let mut prev_norm = f64::INFINITY;
        let mut prev_rho = f64::INFINITY;
        for n in 0..20 {
            let d = w.scale(2.0_f64.powi(-n))?;
            let norm = luxemburg_norm(&d, p, DEFAULT_NORM_TOL)?.value;
            let rho = modular(&d, p)?;
            if norm >= prev_norm || rho >= prev_rho {
                equivalence_violations += 1;
            }
            if norm < 1.0 && norm > 0.0 {
                let hi = norm.powf(p_minus) * (1.0 + 1e-9);
                let lo = norm.powf(p_plus) * (1.0 - 1e-9);
                if rho > hi || rho < lo {
                    equivalence_violations += 1;
                }
            }
            prev_norm = norm;
            prev_rho = rho;
        }
        if prev_norm > 1e-4 || prev_rho > prev_norm.powf(p_minus) * (1.0 + 1e-9) {
            equivalence_violations += 1;
        }
    }

    let structural_pass = chain.pass
        && holder_violations == 0
        && relation_violations == 0
        && equivalence_violations == 0
        && (simon_pass || !model_check.ellipticity_pass());
    let report = VerifyReport {
        hypothesis_chain: chain,
        model: model_check,
        simon: SimonBattery {
            samples: cfg.verify.simon_samples,
            violations: simon_violations,
            worst_gap,
            pass: simon_pass,
        },
        holder: PairBattery {
            samples: cfg.verify.pairs,
            violations: holder_violations,
            pass: holder_violations == 0,
        },
        modular_norm: PairBattery {
            samples: cfg.verify.pairs,
            violations: relation_violations,
            pass: relation_violations == 0,
        },
        norm_modular_equivalence: PairBattery {
            samples: sequences,
            violations: equivalence_violations,
            pass: equivalence_violations == 0,
        },
        warnings: warnings.clone(),
        pass: structural_pass,
    };
    write_json_pretty(&out_dir.join("verify.json"), &report)?;

    let exit = if structural_pass { EXIT_OK } else { EXIT_MATH };
    let message = if structural_pass {
        if warnings.is_empty() {
            "verify: all checks passed".to_string()
        } else {
            format!(
                "verify: structural checks passed with {} warning(s)",
                warnings.len()
            )
        }
    } else if !report.hypothesis_chain.pass {
        let (node, which) = report.hypothesis_chain.violations[0];
        format!(
            "verify: hypothesis chain fails ({:?} at node {node}, {} violations)",
            which,
            report.hypothesis_chain.violations.len()
        )
    } else {
        "verify: inequality battery reported violations".to_string()
    };
    Ok(CmdOutcome { exit, message })
}

#[derive(Debug, Serialize)]
struct StageSummary {
    eps: f64,
    status: crate::minimize::StageStatus,
    iterations: usize,
}

#[derive(Debug, Serialize)]
struct ResultFile {
    m_hat: f64,
    norm_u0: f64,
    residual: f64,
    failed: bool,
    energy_smoothed: crate::energy::EnergyBreakdown,
    energy_exact: crate::energy::EnergyBreakdown,
    stages: Vec<StageSummary>,
}

fn write_solve_outputs(out_dir: &Path, result: &SolveResult, stem: &str) -> Result<()> {
    atomic_write(
        &out_dir.join(format!("{stem}u0.json")),
        result.u0.to_json_string()?.as_bytes(),
    )?;
    let wire = ResultFile {
        m_hat: result.m_hat,
        norm_u0: result.norm_u0,
        residual: result.residual,
        failed: result.failed,
        energy_smoothed: result.energy_smoothed,
        energy_exact: result.energy_exact,
        stages: result
            .stages
            .iter()
            .map(|s| StageSummary {
                eps: s.eps,
                status: s.status,
                iterations: s.iterations,
            })
            .collect(),
    };
    write_json_pretty(&out_dir.join(format!("{stem}result.json")), &wire)?;
    let mut csv = String::from("iter,eps,energy,grad_norm,step\n");
    for stage in &result.stages {
        for rec in &stage.records {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                rec.iter,
                fmt_f64(rec.eps),
                fmt_f64(rec.energy),
                fmt_f64(rec.grad_norm),
                fmt_f64(rec.step)
            ));
        }
    }
    atomic_write(&out_dir.join(format!("{stem}trace.csv")), csv.as_bytes())?;
    Ok(())
}

/// Runs the model verification battery attached to a solve-style command and
/// formats any findings as a warning suffix.
fn model_findings(spec: &ProblemSpec, samples: usize) -> Result<String> {
    let check = spec.phi().verify_hypotheses(samples)?;
    if check.all_pass() {
        Ok(String::new())
    } else {
        Ok(format!(
            " [warning: model hypothesis findings; claimed c = {}, max admissible estimate {:.3e}]",
            check.c_claimed, check.c_max_estimate
        ))
    }
}

/// Solves the problem (valley-seeded descent) and writes `u0.json`,
/// `result.json`, and `trace.csv`. Exit 0 iff m̂ < 0 and the stationarity
/// residual is below tolerance.
pub fn cmd_solve(cfg: &RunConfig, out_dir: &Path) -> Result<CmdOutcome> {
    let spec = build_problem_spec(cfg)?;
    let findings = model_findings(&spec, cfg.verify.samples)?;
    let result = solve(&spec)?;
    write_solve_outputs(out_dir, &result, "")?;
    let ok = !result.failed && result.residual <= spec.tolerances().residual_tol;
    Ok(CmdOutcome {
        exit: if ok { EXIT_OK } else { EXIT_MATH },
        message: format!(
            "solve: m_hat = {:.6e}, residual = {:.3e}, ||u0|| = {:.6e}{}{}",
            result.m_hat,
            result.residual,
            result.norm_u0,
            if ok { "" } else { " (FAILED)" },
            findings
        ),
    })
}

/// Scans E(tv) against the small-t bound and writes `valley.csv`
/// (t, energy, bound). Exit 0 iff a negative energy exists and the bound
/// dominates at every scanned t.
pub fn cmd_valley(cfg: &RunConfig, out_dir: &Path) -> Result<CmdOutcome> {
    let spec = build_problem_spec(cfg)?;
    let model_check = spec.phi().verify_hypotheses(cfg.verify.samples)?;
    if !model_check.growth_pass {
        return Err(Error::InvalidModel(
            "valley constants need verified growth data; the claimed (a, b) fail".into(),
        ));
    }
    let v = bump_profile(spec.grid());
    let consts = valley_constants(&v, &spec)?;
    let t_grid = log_spaced_grid(cfg.valley.t_min, cfg.valley.t_max, cfg.valley.points);
    let mut csv = String::from("t,energy,bound\n");
    let mut found_negative = false;
    let mut bound_ok = true;
    for &t in &t_grid {
        let e = energy(&v.scale(t)?, &spec, 0.0)?.total;
        let bound = consts.bound(t);
        found_negative |= e < 0.0;
        if e > bound + 1e-12 * (1.0 + bound.abs()) {
            bound_ok = false;
        }
        csv.push_str(&format!(
            "{},{},{}\n",
            fmt_f64(t),
            fmt_f64(e),
            fmt_f64(bound)
        ));
    }
    atomic_write(&out_dir.join("valley.csv"), csv.as_bytes())?;
    let ok = found_negative && bound_ok;
    Ok(CmdOutcome {
        exit: if ok { EXIT_OK } else { EXIT_MATH },
        message: format!(
            "valley: C1 = {:.3e}, C2 = {:.3e}, C3 = {:.3e}, negative energy found: {}, bound holds: {}",
            consts.c1, consts.c2, consts.c3, found_negative, bound_ok
        ),
    })
}

/// Runs one solve per λ and writes `sweep.csv` plus per-λ minimizer fields.
/// Exit 0 iff every solve succeeded and m̂ is nonincreasing in λ.
pub fn cmd_sweep(cfg: &RunConfig, out_dir: &Path) -> Result<CmdOutcome> {
    let spec = build_problem_spec(cfg)?;
    let findings = model_findings(&spec, cfg.verify.samples)?;
    let lambdas = cfg
        .solve
        .lambdas
        .clone()
        .or_else(|| cfg.solve.lambda.map(|l| vec![l]))
        .ok_or_else(|| Error::Config("sweep needs solve.lambdas (or lambda)".into()))?;
    let table = lambda_sweep(&spec, &lambdas)?;
    let mut csv = String::from("lambda,m_hat,norm_u0,residual,status\n");
    for row in &table.rows {
        let status = match row.status {
            SweepStatus::Ok => "ok",
            SweepStatus::Failed => "failed",
            SweepStatus::Error => "error",
        };
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_f64(row.lambda),
            fmt_f64(row.m_hat),
            fmt_f64(row.norm_u0),
            fmt_f64(row.residual),
            status
        ));
    }
    atomic_write(&out_dir.join("sweep.csv"), csv.as_bytes())?;
    for (row, result) in table.rows.iter().zip(&table.results) {
        if let Some(res) = result {
            atomic_write(
                &out_dir.join(format!("u0_lambda_{}.json", row.lambda)),
                res.u0.to_json_string()?.as_bytes(),
            )?;
        }
    }
    let all_ok = table.rows.iter().all(|r| r.status == SweepStatus::Ok);
    let ok = all_ok && table.m_monotone;
    Ok(CmdOutcome {
        exit: if ok { EXIT_OK } else { EXIT_MATH },
        message: format!(
            "sweep: {} solves, all ok: {all_ok}, m_hat nonincreasing: {}{}",
            table.rows.len(),
            table.m_monotone,
            findings
        ),
    })
}

/// Prints the Luxemburg norm and modular of a field file, 12 significant
/// digits each, using the config's exponent p evaluated on the field's grid.
pub fn cmd_norm(cfg: &RunConfig, field_path: &Path) -> Result<CmdOutcome> {
    let u = ScalarField::read_json(field_path)?;
    let grid = u.grid().clone();
    let p = resolve_field(&cfg.exponents.p, &grid)?;
    let norm = luxemburg_norm(&u, &p, DEFAULT_NORM_TOL)?;
    let rho = modular(&u, &p)?;
    Ok(CmdOutcome {
        exit: EXIT_OK,
        message: format!("norm {:.11e}\nmodular {:.11e}", norm.value, rho),
    })
}

/// Dispatches a command by name; `field` is required by `norm` only.
pub fn run_command(
    command: &str,
    cfg: &RunConfig,
    out_dir: &Path,
    field: Option<&Path>,
) -> Result<CmdOutcome> {
    match command {
        "verify" => cmd_verify(cfg, out_dir),
        "solve" => cmd_solve(cfg, out_dir),
        "valley" => cmd_valley(cfg, out_dir),
        "sweep" => cmd_sweep(cfg, out_dir),
        "norm" => {
            let field =
                field.ok_or_else(|| Error::Config("norm requires a field file argument".into()))?;
            cmd_norm(cfg, field)
        }
        other => Err(Error::Config(format!("unknown command '{other}'"))),
    }
}
