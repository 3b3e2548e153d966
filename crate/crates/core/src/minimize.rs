//! Direct minimization of the regularized energy: valley scan for the
//! negative-energy seed, descent with Barzilai–Borwein steps and Armijo
//! backtracking per ε stage, warm-started ε-continuation, and the λ-sweep
//! driver.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::energy::{
    energy, energy_gradient, reaction_kernel_field, singular_kernel_field, solution_norm,
    EnergyBreakdown,
};
use crate::error::Error;
use crate::exponent::{check_theorem_hypotheses, ExponentTriple};
use crate::field::{Grid, ScalarField};
use crate::lebesgue::{luxemburg_norm, DEFAULT_NORM_TOL};
use crate::operator::{inner_product, weak_pairing, NavierOperator};
use crate::phi::PhiModel;
use crate::profiles::{bump_profile, residual_basis};
use crate::Result;

/// ε-continuation schedule: stages initial, initial·decay, …, floor.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EpsSchedule {
    pub initial: f64,
    pub decay: f64,
    pub floor: f64,
}

impl Default for EpsSchedule {
    fn default() -> Self {
        EpsSchedule {
            initial: 1e-2,
            decay: 0.1,
            floor: 1e-6,
        }
    }
}

impl EpsSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial > self.floor && self.floor > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "eps schedule requires initial > floor > 0, got {} / {}",
                self.initial, self.floor
            )));
        }
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "eps decay must lie in (0,1), got {}",
                self.decay
            )));
        }
        Ok(())
    }

    pub fn stages(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut eps = self.initial;
        while eps > self.floor * (1.0 + 1e-9) {
            out.push(eps);
            eps *= self.decay;
        }
        out.push(self.floor);
        out
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SolverTolerances {
    /// Max-norm gradient target, scaled by (1+|E|).
    pub grad_tol: f64,
    /// Energy-decrease stall threshold over the stall window.
    pub energy_stall_tol: f64,
    pub stall_window: usize,
    pub max_iters: usize,
    /// Weak-residual level that counts as solved.
    pub residual_tol: f64,
}

impl Default for SolverTolerances {
    fn default() -> Self {
        SolverTolerances {
            grad_tol: 1e-8,
            energy_stall_tol: 1e-12,
            stall_window: 5,
            max_iters: 50_000,
            residual_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LineSearchParams {
    pub sufficient_decrease: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
}

impl Default for LineSearchParams {
    fn default() -> Self {
        LineSearchParams {
            sufficient_decrease: 1e-4,
            backtrack: 0.5,
            max_backtracks: 60,
        }
    }
}

/// Full problem description: grid, exponents, integrand model, λ, and solver
/// knobs. Validated at construction; λ ≤ 0 is rejected outright.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    exponents: ExponentTriple,
    phi: PhiModel,
    lambda: f64,
    eps: EpsSchedule,
    tol: SolverTolerances,
    line_search: LineSearchParams,
}

impl ProblemSpec {
    pub fn new(exponents: ExponentTriple, phi: PhiModel, lambda: f64) -> Result<Self> {
        let spec = ProblemSpec {
            exponents,
            phi,
            lambda,
            eps: EpsSchedule::default(),
            tol: SolverTolerances::default(),
            line_search: LineSearchParams::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "lambda must be nonnegative (a negative reaction term voids the valley argument), got {}",
                self.lambda
            )));
        }
        if !self.phi.grid().same_as(self.exponents.p().grid()) {
            return Err(Error::GridMismatch("phi model vs exponent grid".into()));
        }
        self.eps.validate()?;
        let report = check_theorem_hypotheses(&self.exponents, self.grid().dim() as u32)?;
        if !report.pass {
            let (node, which) = report.violations[0];
            return Err(Error::InvalidSpec(format!(
                "hypothesis chain 0<q<1<r<p<p* fails at {} node(s); first violation: {:?} at node {}",
                report.violations.len(),
                which,
                node
            )));
        }
        Ok(())
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        let mut spec = self.clone();
        spec.lambda = lambda;
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_eps_schedule(&self, eps: EpsSchedule) -> Result<Self> {
        let mut spec = self.clone();
        spec.eps = eps;
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_tolerances(&self, tol: SolverTolerances) -> Self {
        let mut spec = self.clone();
        spec.tol = tol;
        spec
    }

    pub fn with_line_search(&self, ls: LineSearchParams) -> Self {
        let mut spec = self.clone();
        spec.line_search = ls;
        spec
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.exponents.p().grid()
    }

    pub fn exponents(&self) -> &ExponentTriple {
        &self.exponents
    }

    pub fn phi(&self) -> &PhiModel {
        &self.phi
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn eps_schedule(&self) -> &EpsSchedule {
        &self.eps
    }

    pub fn tolerances(&self) -> &SolverTolerances {
        &self.tol
    }

    pub fn line_search(&self) -> &LineSearchParams {
        &self.line_search
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IterRecord {
    pub iter: usize,
    pub eps: f64,
    pub energy: f64,
    pub grad_norm: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StageStatus {
    /// Gradient below tolerance and energy decrease stalled.
    Converged,
    /// Iteration budget exhausted.
    MaxIters,
    /// Line search could not decrease the energy further (round-off floor).
    Stalled,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTrace {
    pub eps: f64,
    pub status: StageStatus,
    pub iterations: usize,
    pub records: Vec<IterRecord>,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub u0: ScalarField,
    /// Breakdown at the final smoothing level ε_min.
    pub energy_smoothed: EnergyBreakdown,
    /// Breakdown of the exact (ε = 0) functional at u₀.
    pub energy_exact: EnergyBreakdown,
    /// Achieved minimum of the exact functional, an upper bound on its infimum.
    pub m_hat: f64,
    /// ‖u₀‖ = |Δu₀|_{p(x)}.
    pub norm_u0: f64,
    /// Max normalized weak-form defect over the probe basis at ε_min.
    pub residual: f64,
    pub stages: Vec<StageTrace>,
    /// Wall-clock duration; withheld from file outputs to keep them
    /// byte-deterministic.
    pub duration: std::time::Duration,
    /// Set when the solve ended with m̂ ≥ 0 (no nontrivial minimizer found).
    pub failed: bool,
}

#[derive(Debug, Clone)]
pub struct ValleyScanResult {
    /// Largest scanned t with E(tv) < 0.
    pub t_star: f64,
    pub profile: Vec<(f64, f64)>,
}

/// Log-spaced grid, inclusive of both endpoints.
pub fn log_spaced_grid(min: f64, max: f64, points: usize) -> Vec<f64> {
    crate::phi::log_spaced(min, max, points)
}

/// Evaluates E(tv) at ε = 0 over the t grid and locates the valley.
pub fn valley_scan(
    spec: &ProblemSpec,
    v: &ScalarField,
    t_grid: &[f64],
) -> Result<ValleyScanResult> {
    crate::energy::check_valley_profile(v)?;
    let mut profile = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        if !(t > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "valley scan needs t > 0, got {t}"
            )));
        }
        let e = energy(&v.scale(t)?, spec, 0.0)?.total;
        profile.push((t, e));
    }
    let t_star = profile
        .iter()
        .rev()
        .find(|&&(_, e)| e < 0.0)
        .map(|&(t, _)| t)
        .ok_or(Error::ValleyNotFound)?;
    Ok(ValleyScanResult { t_star, profile })
}

/// Max-norm of the Riesz gradient representer. The quadrature weighting sits
/// inside the representer, so this is stable under grid refinement.
fn grad_norm(g: &ScalarField) -> f64 {
    g.max_abs()
}

/// Inverse of the squared interior Laplacian, used as a constant SPD
/// preconditioner for the descent direction. The raw gradient of the
/// fourth-order term has stiffness ~ h⁻⁴, which strangles unpreconditioned
/// step sizes; composing two exact Poisson solves removes it while keeping
/// every iterate inside the same monotone Armijo loop.
enum BilaplacianInverse {
    Line {
        n: usize,
        h2: f64,
    },
    Rect {
        nx: usize,
        ny: usize,
        /// symmetric orthonormal sine basis per axis (interior points)
        sx: Vec<f64>,
        sy: Vec<f64>,
        /// Laplacian eigenvalues per axis
        mu_x: Vec<f64>,
        mu_y: Vec<f64>,
    },
}

impl BilaplacianInverse {
    fn new(grid: &Grid) -> Self {
        match grid.dim() {
            1 => BilaplacianInverse::Line {
                n: grid.counts()[0],
                h2: grid.spacing()[0] * grid.spacing()[0],
            },
            _ => {
                let (nx, ny) = (grid.counts()[0], grid.counts()[1]);
                let build = |n: usize, h: f64| {
                    let m = n - 2;
                    let norm = (2.0 / (n - 1) as f64).sqrt();
                    let mut s = vec![0.0; m * m];
                    for k in 0..m {
                        for i in 0..m {
                            s[k * m + i] = norm
                                * ((k + 1) as f64 * (i + 1) as f64 * std::f64::consts::PI
                                    / (n - 1) as f64)
                                    .sin();
                        }
                    }
                    let mu: Vec<f64> = (0..m)
                        .map(|k| {
                            let t = ((k + 1) as f64 * std::f64::consts::PI
                                / (2.0 * (n - 1) as f64))
                                .sin();
                            -4.0 / (h * h) * t * t
                        })
                        .collect();
                    (s, mu)
                };
                let (sx, mu_x) = build(nx, grid.spacing()[0]);
                let (sy, mu_y) = build(ny, grid.spacing()[1]);
                BilaplacianInverse::Rect {
                    nx,
                    ny,
                    sx,
                    sy,
                    mu_x,
                    mu_y,
                }
            }
        }
    }

    /// Solves T z = rhs for the interior tridiagonal Laplacian (1D).
    fn solve_poisson_line(n: usize, h2: f64, rhs: &[f64]) -> Vec<f64> {
        let m = n - 2;
        let diag = -2.0 / h2;
        let off = 1.0 / h2;
        let mut c = vec![0.0; m];
        let mut d = vec![0.0; m];
        let mut denom = diag;
        c[0] = off / denom;
        d[0] = rhs[0] / denom;
        for i in 1..m {
            denom = diag - off * c[i - 1];
            if i < m - 1 {
                c[i] = off / denom;
            }
            d[i] = (rhs[i] - off * d[i - 1]) / denom;
        }
        let mut z = vec![0.0; m];
        z[m - 1] = d[m - 1];
        for i in (0..m - 1).rev() {
            z[i] = d[i] - c[i] * z[i + 1];
        }
        z
    }

    /// z = (T²)⁻¹ g on interior nodes; boundary entries stay zero.
    fn apply(&self, _grid: &Grid, g: &ScalarField) -> Result<ScalarField> {
        match self {
            BilaplacianInverse::Line { n, h2 } => {
                let rhs: Vec<f64> = (1..n - 1).map(|i| g.values()[i]).collect();
                let once = Self::solve_poisson_line(*n, *h2, &rhs);
                let twice = Self::solve_poisson_line(*n, *h2, &once);
                let mut out = vec![0.0; *n];
                out[1..*n - 1].copy_from_slice(&twice);
                ScalarField::new(g.grid().clone(), out)
            }
            BilaplacianInverse::Rect {
                nx,
                ny,
                sx,
                sy,
                mu_x,
                mu_y,
            } => {
                let (mx, my) = (nx - 2, ny - 2);
                // interior block, row-major (ix fast)
                let mut r = vec![0.0; mx * my];
                for iy in 0..my {
                    for ix in 0..mx {
                        r[iy * mx + ix] = g.values()[(iy + 1) * nx + ix + 1];
                    }
                }
                // hat = Sx^T applied along x, Sy^T along y (S symmetric)
                let mut hat = vec![0.0; mx * my];
                // tmp = apply Sx along x
                let mut tmp = vec![0.0; mx * my];
                for iy in 0..my {
                    for k in 0..mx {
                        let mut acc = 0.0;
                        for ix in 0..mx {
                            acc += sx[k * mx + ix] * r[iy * mx + ix];
                        }
                        tmp[iy * mx + k] = acc;
                    }
                }
                for k in 0..mx {
                    for l in 0..my {
                        let mut acc = 0.0;
                        for iy in 0..my {
                            acc += sy[l * my + iy] * tmp[iy * mx + k];
                        }
                        hat[l * mx + k] = acc;
                    }
                }
                // divide by (mu_x + mu_y)^2 and transform back
                for l in 0..my {
                    for k in 0..mx {
                        let lam = mu_x[k] + mu_y[l];
                        hat[l * mx + k] /= lam * lam;
                    }
                }
                for l in 0..my {
                    for k in 0..mx {
                        tmp[l * mx + k] = hat[l * mx + k];
                    }
                }
                let mut back = vec![0.0; mx * my];
                for l in 0..my {
                    for ix in 0..mx {
                        let mut acc = 0.0;
                        for k in 0..mx {
                            acc += sx[ix * mx + k] * tmp[l * mx + k];
                        }
                        back[l * mx + ix] = acc;
                    }
                }
                let mut out = vec![0.0; nx * ny];
                for iy in 0..my {
                    for ix in 0..mx {
                        let mut acc = 0.0;
                        for l in 0..my {
                            acc += sy[iy * my + l] * back[l * mx + ix];
                        }
                        out[(iy + 1) * nx + ix + 1] = acc;
                    }
                }
                ScalarField::new(g.grid().clone(), out)
            }
        }
    }
}

struct StageOutcome {
    u: ScalarField,
    trace: StageTrace,
}

fn run_stage(
    spec: &ProblemSpec,
    u0: ScalarField,
    eps: f64,
    pinv: &BilaplacianInverse,
) -> Result<StageOutcome> {
    let tol = spec.tolerances();
    let ls = spec.line_search();
    let grid = spec.grid().clone();
    let mut u = u0;
    let mut records = Vec::new();
    let mut status = StageStatus::MaxIters;
    let mut energy_window: Vec<f64> = Vec::new();

    let mut e_curr = energy(&u, spec, eps)?.total;
    let mut g = energy_gradient(&u, spec, eps)?;
    let mut pg = pinv.apply(&grid, &g)?;
    let mut prev: Option<(ScalarField, ScalarField)> = None; // (u, pg) one iterate back
    let mut step = 1.0;
    let mut iterations = 0;

    for iter in 0..tol.max_iters {
        let gnorm = grad_norm(&g);
        records.push(IterRecord {
            iter,
            eps,
            energy: e_curr,
            grad_norm: gnorm,
            step,
        });
        iterations = iter;

        let stalled = energy_window.len() >= tol.stall_window
            && energy_window[0] - e_curr <= tol.energy_stall_tol;
        if gnorm <= tol.grad_tol * (1.0 + e_curr.abs()) && (stalled || gnorm == 0.0) {
            status = StageStatus::Converged;
            break;
        }

        // Barzilai-Borwein trial step on the preconditioned system.
        if let Some((ref u_prev, ref pg_prev)) = prev {
            let s = u.sub(u_prev)?;
            let y = pg.sub(pg_prev)?;
            let ss = inner_product(&s, &s)?;
            let sy = inner_product(&s, &y)?;
            step = if sy > 0.0 && ss.is_finite() && sy.is_finite() {
                (ss / sy).clamp(1e-14, 1e12)
            } else {
                (step * 2.0).clamp(1e-14, 1e12)
            };
        }

        // Armijo backtracking along the preconditioned descent direction -pg;
        // the directional derivative is -<g, pg>_h < 0 since the
        // preconditioner is symmetric positive definite.
        let slope = inner_product(&g, &pg)?;
        let mut alpha = step;
        let mut accepted = None;
        for _ in 0..ls.max_backtracks {
            let trial = u.sub(&pg.scale(alpha)?)?;
            let e_trial = energy(&trial, spec, eps)?.total;
            // Strict decrease on top of sufficient decrease: at the float
            // floor the Armijo right-hand side rounds to e_curr and "<="
            // would accept zero-progress steps forever.
            if e_trial < e_curr && e_trial <= e_curr - ls.sufficient_decrease * alpha * slope {
                accepted = Some((trial, e_trial, alpha));
                break;
            }
            alpha *= ls.backtrack;
        }

        match accepted {
            Some((u_next, e_next, alpha_used)) => {
                let g_next = energy_gradient(&u_next, spec, eps)?;
                let pg_next = pinv.apply(&grid, &g_next)?;
                prev = Some((u.clone(), pg.clone()));
                u = u_next;
                e_curr = e_next;
                g = g_next;
                pg = pg_next;
                step = alpha_used;
                energy_window.push(e_curr);
                if energy_window.len() > tol.stall_window {
                    energy_window.remove(0);
                }
            }
            None => {
                // No step gives sufficient decrease: the stage sits at its
                // round-off floor.
                status = StageStatus::Stalled;
                break;
            }
        }
    }

    Ok(StageOutcome {
        u,
        trace: StageTrace {
            eps,
            status,
            iterations,
            records,
        },
    })
}

/// Max normalized weak-form defect
/// |∫φ(x,|Δu|)ΔuΔv − ∫s_ε(u)v − λ∫|u|^{r−2}u v| / (1+‖v‖) over the basis.
pub fn weak_residual(
    u: &ScalarField,
    spec: &ProblemSpec,
    eps: f64,
    basis: &[ScalarField],
) -> Result<f64> {
    let op = NavierOperator::new(u.grid().clone());
    let s_eps = singular_kernel_field(u, spec, eps)?;
    let reaction = reaction_kernel_field(u, spec)?;
    let mut worst = 0.0_f64;
    for v in basis {
        let pairing = weak_pairing(&op, spec.phi(), u, v)?;
        let singular = inner_product(&s_eps, v)?;
        let react = inner_product(&reaction, v)?;
        let defect = (pairing - singular - spec.lambda() * react).abs();
        let lv = op.laplacian(v)?;
        let vnorm = luxemburg_norm(&lv, spec.exponents().p(), DEFAULT_NORM_TOL)?.value;
        worst = worst.max(defect / (1.0 + vnorm));
    }
    Ok(worst)
}

/// Number of smooth bumps in the stationarity probe basis.
pub const RESIDUAL_BASIS_SIZE: usize = 20;

/// Descent with ε-continuation from the given start. Each ε stage runs to its
/// own convergence and warm-starts the next.
pub fn minimize(spec: &ProblemSpec, u_init: &ScalarField) -> Result<SolveResult> {
    spec.validate()?;
    if !(spec.lambda() > 0.0) {
        return Err(Error::InvalidSpec(
            "solving requires lambda > 0; lambda = 0 problem specs are for energy evaluation only"
                .into(),
        ));
    }
    u_init.require_same_grid(spec.exponents().p(), "initial guess")?;
    let started = Instant::now();
    let pinv = BilaplacianInverse::new(spec.grid());
    let mut u = u_init.clamped_to_boundary_zero();
    let mut stages = Vec::new();
    for eps in spec.eps_schedule().stages() {
        let outcome = run_stage(spec, u, eps, &pinv)?;
        u = outcome.u;
        stages.push(outcome.trace);
    }
    let eps_min = spec.eps_schedule().floor;
    let energy_smoothed = energy(&u, spec, eps_min)?;
    let energy_exact = energy(&u, spec, 0.0)?;
    let basis = residual_basis(spec.grid(), RESIDUAL_BASIS_SIZE);
    let residual = weak_residual(&u, spec, eps_min, &basis)?;
    let norm_u0 = solution_norm(&u, spec)?;
    let m_hat = energy_exact.total;
    Ok(SolveResult {
        u0: u,
        energy_smoothed,
        energy_exact,
        m_hat,
        norm_u0,
        residual,
        stages,
        duration: started.elapsed(),
        failed: !(m_hat < 0.0),
    })
}

/// Valley-seeded solve: scan E(tv) on the default bump profile and descend
/// from t*·v, mirroring the existence argument (the seed certifies m̂ < 0).
pub fn solve(spec: &ProblemSpec) -> Result<SolveResult> {
    let v = bump_profile(spec.grid());
    let scan = valley_scan(spec, &v, &log_spaced_grid(1e-6, 1.0, 25))?;
    minimize(spec, &v.scale(scan.t_star)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub m_hat: f64,
    pub norm_u0: f64,
    pub residual: f64,
    pub status: SweepStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepStatus {
    Ok,
    Failed,
    Error,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub results: Vec<Option<SolveResult>>,
    /// m̂(λ) nonincreasing along the sweep.
    pub m_monotone: bool,
}

/// Independent solves for each λ (ascending, all positive), shared valley
/// profile. Individual failures are recorded and the sweep continues. Solves
/// run in parallel; rows are reported in λ order.
pub fn lambda_sweep(spec_base: &ProblemSpec, lambdas: &[f64]) -> Result<SweepTable> {
    if lambdas.is_empty() {
        return Err(Error::InvalidSpec("empty lambda list".into()));
    }
    if lambdas.windows(2).any(|w| w[0] >= w[1]) || !(lambdas[0] > 0.0) {
        return Err(Error::InvalidSpec(
            "lambdas must be strictly ascending and positive".into(),
        ));
    }
    let solves: Vec<(f64, Result<SolveResult>)> = lambdas
        .par_iter()
        .map(|&lambda| {
            let result = spec_base.with_lambda(lambda).and_then(|spec| solve(&spec));
            (lambda, result)
        })
        .collect();

    let mut rows = Vec::with_capacity(solves.len());
    let mut results = Vec::with_capacity(solves.len());
    for (lambda, outcome) in solves {
        match outcome {
            Ok(res) => {
                rows.push(SweepRow {
                    lambda,
                    m_hat: res.m_hat,
                    norm_u0: res.norm_u0,
                    residual: res.residual,
                    status: if res.failed {
                        SweepStatus::Failed
                    } else {
                        SweepStatus::Ok
                    },
                });
                results.push(Some(res));
            }
            Err(_) => {
                rows.push(SweepRow {
                    lambda,
                    m_hat: f64::NAN,
                    norm_u0: f64::NAN,
                    residual: f64::NAN,
                    status: SweepStatus::Error,
                });
                results.push(None);
            }
        }
    }
    let m_monotone = rows
        .windows(2)
        .all(|w| match (w[0].m_hat.is_nan(), w[1].m_hat.is_nan()) {
            (false, false) => w[1].m_hat <= w[0].m_hat + 1e-12,
            _ => false,
        });
    Ok(SweepTable {
        rows,
        results,
        m_monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;

    fn power_spec(n: usize, p0: f64, q0: f64, r0: f64, lambda: f64) -> ProblemSpec {
        let g = Arc::new(Grid::line(n, 1.0).unwrap());
        let exps = ExponentTriple::new(
            ScalarField::constant(g.clone(), p0).unwrap(),
            ScalarField::constant(g.clone(), q0).unwrap(),
            ScalarField::constant(g, r0).unwrap(),
        )
        .unwrap();
        let phi = PhiModel::power(exps.p().clone(), 1.0).unwrap();
        ProblemSpec::new(exps, phi, lambda).unwrap()
    }

    #[test]
    fn solver_rejects_nonpositive_lambda() {
        let g = Arc::new(Grid::line(11, 1.0).unwrap());
        let exps = ExponentTriple::new(
            ScalarField::constant(g.clone(), 2.5).unwrap(),
            ScalarField::constant(g.clone(), 0.5).unwrap(),
            ScalarField::constant(g, 1.5).unwrap(),
        )
        .unwrap();
        let phi = PhiModel::power(exps.p().clone(), 1.0).unwrap();
        // negative lambda is rejected at spec validation
        assert!(ProblemSpec::new(exps.clone(), phi.clone(), -1.0).is_err());
        // lambda = 0 is allowed for energy evaluation but not for solving
        let zero = ProblemSpec::new(exps, phi, 0.0).unwrap();
        let seed = crate::profiles::bump_profile(zero.grid());
        assert!(matches!(minimize(&zero, &seed), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn spec_rejects_broken_hypothesis_chain() {
        let g = Arc::new(Grid::line(11, 1.0).unwrap());
        let exps = ExponentTriple::new(
            ScalarField::constant(g.clone(), 2.5).unwrap(),
            ScalarField::constant(g.clone(), 1.2).unwrap(),
            ScalarField::constant(g, 1.5).unwrap(),
        )
        .unwrap();
        let phi = PhiModel::power(exps.p().clone(), 1.0).unwrap();
        assert!(matches!(
            ProblemSpec::new(exps, phi, 1.0),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn eps_schedule_default_stages() {
        let stages = EpsSchedule::default().stages();
        assert_eq!(stages.len(), 5);
        assert!((stages[0] - 1e-2).abs() < 1e-15);
        assert_eq!(*stages.last().unwrap(), 1e-6);
        for w in stages.windows(2) {
            assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn valley_scan_finds_negative_energy() {
        let spec = power_spec(101, 2.0, 0.5, 1.5, 1.0);
        let v = bump_profile(spec.grid());
        let scan = valley_scan(&spec, &v, &log_spaced_grid(1e-6, 1.0, 25)).unwrap();
        assert!(scan.t_star > 0.0);
        assert!(scan.profile.iter().any(|&(_, e)| e < 0.0));
        // E(tv) -> 0 as t -> 0: the smallest grid value has tiny |E|.
        let (t0, e0) = scan.profile[0];
        assert!(t0 <= 1e-6 * 1.0001);
        assert!(e0.abs() < 5e-3);
    }

    #[test]
    fn valley_scan_lambda_monotonicity() {
        let spec1 = power_spec(101, 2.0, 0.5, 1.5, 1.0);
        let spec10 = spec1.with_lambda(10.0).unwrap();
        let v = bump_profile(spec1.grid());
        let grid = log_spaced_grid(1e-6, 1.0, 25);
        let a = valley_scan(&spec1, &v, &grid).unwrap();
        let b = valley_scan(&spec10, &v, &grid).unwrap();
        for (&(_, e1), &(_, e10)) in a.profile.iter().zip(&b.profile) {
            assert!(e10 <= e1 + 1e-15);
        }
    }

    #[test]
    fn minimize_descends_from_valley_seed() {
        let spec = power_spec(101, 2.5, 0.5, 1.5, 1.0);
        let v = bump_profile(spec.grid());
        let scan = valley_scan(&spec, &v, &log_spaced_grid(1e-6, 1.0, 25)).unwrap();
        let seed = v.scale(scan.t_star).unwrap();
        let seed_energy = energy(&seed, &spec, 0.0).unwrap().total;
        assert!(seed_energy < 0.0);
        let result = minimize(&spec, &seed).unwrap();
        assert!(!result.failed);
        assert!(result.m_hat <= seed_energy);
        assert!(result.m_hat < 0.0);
        assert!(result.norm_u0 > 0.0);
        for i in 0..spec.grid().node_count() {
            if spec.grid().is_boundary(i) {
                assert_eq!(result.u0.values()[i], 0.0);
            }
        }
    }

    #[test]
    fn energy_trace_monotone_within_each_stage() {
        let spec = power_spec(101, 2.5, 0.5, 1.5, 1.0);
        let result = solve(&spec).unwrap();
        for stage in &result.stages {
            for w in stage.records.windows(2) {
                assert!(
                    w[1].energy <= w[0].energy + 1e-15,
                    "energy rose within stage eps={}",
                    stage.eps
                );
            }
        }
    }

    #[test]
    fn stationarity_residual_below_tolerance() {
        let spec = power_spec(201, 2.5, 0.5, 1.5, 1.0);
        let result = solve(&spec).unwrap();
        assert!(
            result.residual <= spec.tolerances().residual_tol,
            "residual {}",
            result.residual
        );
    }

    #[test]
    fn sweep_rejects_bad_lambda_lists() {
        let spec = power_spec(51, 2.5, 0.5, 1.5, 1.0);
        assert!(lambda_sweep(&spec, &[]).is_err());
        assert!(lambda_sweep(&spec, &[1.0, 0.5]).is_err());
        assert!(lambda_sweep(&spec, &[-1.0, 0.5]).is_err());
    }

    #[test]
    fn sweep_monotone_and_negative() {
        let spec = power_spec(101, 2.5, 0.5, 1.5, 1.0);
        let table = lambda_sweep(&spec, &[0.5, 1.0, 2.0]).unwrap();
        assert!(table.m_monotone);
        for row in &table.rows {
            assert_eq!(row.status, SweepStatus::Ok);
            assert!(row.m_hat < 0.0);
            assert!(row.norm_u0.is_finite());
        }
    }
}
