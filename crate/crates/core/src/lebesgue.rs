//! Modulars and Luxemburg norms of fields, and the inequality battery that
//! links them.
//!
//! The modular is ρ_p(u) = ∫_Ω |u|^{p(x)} dx (trapezoidal quadrature). The
//! Luxemburg norm is the infimal μ > 0 with ρ_p(u/μ) ≤ 1; since μ ↦ ρ(u/μ) is
//! continuous and strictly decreasing for u ≠ 0, it is the unique root of
//! ρ(u/μ) = 1, found by bracketing and bisection on the modular residual.

use serde::Serialize;

use crate::error::Error;
use crate::field::ScalarField;
use crate::operator::{inner_product, integrate_nodewise};
use crate::Result;

/// Default bisection tolerance on the modular residual |ρ(u/μ) − 1|.
pub const DEFAULT_NORM_TOL: f64 = 1e-10;

/// Relative slack absorbing quadrature and bisection round-off in the
/// modular-norm and Hölder checks.
pub const RELATION_SLACK: f64 = 1e-9;

const MAX_BISECTIONS: u32 = 200;

/// Outcome of a Luxemburg norm computation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NormResult {
    pub value: f64,
    pub iterations: u32,
    /// Achieved |ρ(u/μ) − 1|; meaningful only when `value > 0`.
    pub residual: f64,
}

fn check_exponent_above_one(p: &ScalarField) -> Result<()> {
    if let Some(bad) = p.values().iter().find(|&&v| !(v > 1.0)) {
        return Err(Error::InvalidExponent(format!(
            "exponent must exceed 1 at every node, found {bad}"
        )));
    }
    Ok(())
}

fn check_exponent_positive(p: &ScalarField) -> Result<()> {
    if let Some(bad) = p.values().iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::InvalidExponent(format!(
            "exponent must be positive at every node, found {bad}"
        )));
    }
    Ok(())
}

/// ρ_p(u) = ∫_Ω |u|^{p(x)} dx.
pub fn modular(u: &ScalarField, p: &ScalarField) -> Result<f64> {
    u.require_same_grid(p, "modular operands")?;
    check_exponent_above_one(p)?;
    Ok(modular_unchecked(u, p, 1.0))
}

/// ρ_p(u/mu) without validity checks; exponents may be any positive field.
fn modular_unchecked(u: &ScalarField, p: &ScalarField, mu: f64) -> f64 {
    let g = u.grid();
    integrate_nodewise(g, |i| (u.values()[i].abs() / mu).powf(p.values()[i]))
}

/// Luxemburg norm of `u` in L^{p(x)}, with p > 1 everywhere.
pub fn luxemburg_norm(u: &ScalarField, p: &ScalarField, tol: f64) -> Result<NormResult> {
    check_exponent_above_one(p)?;
    luxemburg_norm_any(u, p, tol)
}

/// Same solver for any positive exponent field. The modular stays strictly
/// decreasing in μ, so the bracketing argument is unchanged; used internally
/// for auxiliary exponents like (1−q(x))p(x) that may dip below 1.
pub(crate) fn luxemburg_norm_any(u: &ScalarField, p: &ScalarField, tol: f64) -> Result<NormResult> {
    u.require_same_grid(p, "luxemburg_norm operands")?;
    check_exponent_positive(p)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidExponent(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if u.is_zero() {
        return Ok(NormResult {
            value: 0.0,
            iterations: 0,
            residual: 0.0,
        });
    }

    let mut lo = f64::EPSILON;
    let mut hi = (u.max_abs() * u.grid().measure()).max(1.0);
    // rho(u/mu) -> 0 as mu -> inf, so doubling is guaranteed to bracket.
    let mut iterations = 0;
    while modular_unchecked(u, p, hi) > 1.0 {
        hi *= 2.0;
        iterations += 1;
        if !hi.is_finite() {
            return Err(Error::InvalidField("luxemburg bracket overflow".into()));
        }
    }

    let mut mid = 0.5 * (lo + hi);
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_BISECTIONS {
        mid = 0.5 * (lo + hi);
        let rho = modular_unchecked(u, p, mid);
        residual = (rho - 1.0).abs();
        iterations += 1;
        if residual <= tol {
            break;
        }
        if rho > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * mid {
            break;
        }
    }
    Ok(NormResult {
        value: mid,
        iterations,
        residual,
    })
}

/// Nodewise conjugate exponent p/(p−1).
pub fn conjugate_exponent(p: &ScalarField) -> Result<ScalarField> {
    check_exponent_above_one(p)?;
    p.map(|v| v / (v - 1.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct HolderReport {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// Checks the Hölder-type inequality
/// |∫ u v| ≤ (1/p⁻ + 1/p'⁻) |u|_{p(x)} |v|_{p'(x)} to the given slack.
pub fn holder_check(
    u: &ScalarField,
    v: &ScalarField,
    p: &ScalarField,
    tol: f64,
) -> Result<HolderReport> {
    u.require_same_grid(v, "holder_check fields")?;
    u.require_same_grid(p, "holder_check exponent")?;
    check_exponent_above_one(p)?;
    let pc = conjugate_exponent(p)?;
    let lhs = inner_product(u, v)?.abs();
    let (p_minus, _) = crate::exponent::exponent_bounds(p)?;
    let (pc_minus, _) = crate::exponent::exponent_bounds(&pc)?;
    let nu = luxemburg_norm(u, p, DEFAULT_NORM_TOL)?.value;
    let nv = luxemburg_norm(v, &pc, DEFAULT_NORM_TOL)?.value;
    let rhs = (1.0 / p_minus + 1.0 / pc_minus) * nu * nv;
    Ok(HolderReport {
        lhs,
        rhs,
        pass: lhs <= rhs + tol.max(RELATION_SLACK * (1.0 + rhs)),
    })
}

/// Which modular-norm branch applied in [`modular_norm_relations_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NormBranch {
    /// |u| > 1: |u|^{p⁻} ≤ ρ(u) ≤ |u|^{p⁺}
    AboveOne,
    /// |u| < 1: |u|^{p⁺} ≤ ρ(u) ≤ |u|^{p⁻}
    BelowOne,
    /// |u| = 1 exactly (to round-off): both chains degenerate
    Unit,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModularNormReport {
    pub norm: f64,
    pub modular: f64,
    pub p_minus: f64,
    pub p_plus: f64,
    pub branch: NormBranch,
    pub pass: bool,
}

/// Evaluates |u|_{p(x)} and ρ_p(u) and asserts the branch chain: for norm > 1
/// the modular lies in [norm^{p⁻}, norm^{p⁺}], for norm < 1 in
/// [norm^{p⁺}, norm^{p⁻}]. Within round-off of norm = 1 the check is vacuous.
pub fn modular_norm_relations_check(u: &ScalarField, p: &ScalarField) -> Result<ModularNormReport> {
    let rho = modular(u, p)?;
    let norm = luxemburg_norm(u, p, DEFAULT_NORM_TOL)?.value;
    let (p_minus, p_plus) = crate::exponent::exponent_bounds(p)?;
    let lo_hi = |a: f64, b: f64| (norm.powf(a), norm.powf(b));
    let (branch, pass) = if (norm - 1.0).abs() <= 1e-9 {
        (NormBranch::Unit, true)
    } else if norm > 1.0 {
        let (lo, hi) = lo_hi(p_minus, p_plus);
        (
            NormBranch::AboveOne,
            rho >= lo * (1.0 - RELATION_SLACK) && rho <= hi * (1.0 + RELATION_SLACK),
        )
    } else {
        let (lo, hi) = lo_hi(p_plus, p_minus);
        (
            NormBranch::BelowOne,
            rho >= lo * (1.0 - RELATION_SLACK) && rho <= hi * (1.0 + RELATION_SLACK),
        )
    };
    Ok(ModularNormReport {
        norm,
        modular: rho,
        p_minus,
        p_plus,
        branch,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;
    use std::sync::Arc;

    fn unit_line(n: usize) -> Arc<Grid> {
        Arc::new(Grid::line(n, 1.0).unwrap())
    }

    #[test]
    fn modular_of_zero_field() {
        let g = unit_line(101);
        let u = ScalarField::zeros(g.clone());
        let p = ScalarField::from_fn(g, |[x, _]| 2.0 + x).unwrap();
        assert_eq!(modular(&u, &p).unwrap(), 0.0);
    }

    #[test]
    fn modular_of_unit_field_is_domain_measure() {
        let g = unit_line(101);
        let u = ScalarField::constant(g.clone(), 1.0).unwrap();
        let p = ScalarField::from_fn(g, |[x, _]| 2.0 + x).unwrap();
        assert!((modular(&u, &p).unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn modular_two_to_variable_exponent() {
        // int_0^1 2^{2+x} dx = 4/ln 2 (closed-form antiderivative 2^{2+x}/ln 2).
        let g = unit_line(1001);
        let u = ScalarField::constant(g.clone(), 2.0).unwrap();
        let p = ScalarField::from_fn(g, |[x, _]| 2.0 + x).unwrap();
        let expected = 4.0 / 2.0_f64.ln();
        assert!((modular(&u, &p).unwrap() - expected).abs() < 1e-4);
    }

    #[test]
    fn luxemburg_norm_zero_field() {
        let g = unit_line(51);
        let u = ScalarField::zeros(g.clone());
        let p = ScalarField::constant(g, 2.0).unwrap();
        let r = luxemburg_norm(&u, &p, 1e-10).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn luxemburg_norm_constant_exponent_is_lp_norm() {
        let g = unit_line(51);
        let u = ScalarField::constant(g.clone(), 2.0).unwrap();
        let p = ScalarField::constant(g, 2.0).unwrap();
        let r = luxemburg_norm(&u, &p, 1e-12).unwrap();
        assert!((r.value - 2.0).abs() < 1e-10, "got {}", r.value);
        assert!(r.residual <= 1e-12);
    }

    #[test]
    fn luxemburg_norm_variable_exponent_vs_scalar_oracle() {
        // Oracle: mu solving int_0^1 (2/mu)^{2+x} dx = 1 with the closed form
        // c^2 (c-1)/ln c for c = 2/mu, root-found by bisection in mu.
        let oracle = {
            let f = |mu: f64| {
                let c: f64 = 2.0 / mu;
                c * c * (c - 1.0) / c.ln() - 1.0
            };
            let (mut lo, mut hi) = (2.0, 4.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let g = unit_line(2001);
        let u = ScalarField::constant(g.clone(), 2.0).unwrap();
        let p = ScalarField::from_fn(g, |[x, _]| 2.0 + x).unwrap();
        let r = luxemburg_norm(&u, &p, 1e-12).unwrap();
        assert!(
            (r.value - oracle).abs() < 1e-5,
            "norm {} vs oracle {oracle}",
            r.value
        );
    }

    #[test]
    fn conjugate_exponent_values() {
        let g = unit_line(11);
        let p2 = ScalarField::constant(g.clone(), 2.0).unwrap();
        assert!(conjugate_exponent(&p2)
            .unwrap()
            .values()
            .iter()
            .all(|&v| (v - 2.0).abs() < 1e-15));
        let p3 = ScalarField::constant(g.clone(), 3.0).unwrap();
        assert!(conjugate_exponent(&p3)
            .unwrap()
            .values()
            .iter()
            .all(|&v| (v - 1.5).abs() < 1e-15));
        // p(x) = 2 + x at x = 1 gives p' = 1.5.
        let p = ScalarField::from_fn(g, |[x, _]| 2.0 + x).unwrap();
        let pc = conjugate_exponent(&p).unwrap();
        assert!((pc.values()[10] - 1.5).abs() < 1e-15);
        // p <= 1 rejected
        let bad = ScalarField::constant(unit_line(11), 1.0).unwrap();
        assert!(conjugate_exponent(&bad).is_err());
    }

    #[test]
    fn holder_zero_field_passes() {
        let g = unit_line(51);
        let u = ScalarField::zeros(g.clone());
        let v = ScalarField::from_fn(g.clone(), |[x, _]| x).unwrap();
        let p = ScalarField::constant(g, 2.5).unwrap();
        let rep = holder_check(&u, &v, &p, 1e-12).unwrap();
        assert_eq!(rep.lhs, 0.0);
        assert!(rep.pass);
    }

    #[test]
    fn holder_constants_saturate_at_p2() {
        let g = unit_line(101);
        let u = ScalarField::constant(g.clone(), 1.0).unwrap();
        let p = ScalarField::constant(g, 2.0).unwrap();
        let rep = holder_check(&u, &u, &p, 1e-9).unwrap();
        assert!((rep.lhs - 1.0).abs() < 1e-10);
        assert!((rep.rhs - 1.0).abs() < 1e-8);
        assert!(rep.pass);
    }

    #[test]
    fn modular_norm_relations_unit_norm_vacuous() {
        let g = unit_line(101);
        let u = ScalarField::constant(g.clone(), 1.0).unwrap();
        let p = ScalarField::constant(g, 2.0).unwrap();
        let rep = modular_norm_relations_check(&u, &p).unwrap();
        assert_eq!(rep.branch, NormBranch::Unit);
        assert!(rep.pass);
    }

    #[test]
    fn modular_norm_relations_above_one() {
        let g = unit_line(201);
        let u = ScalarField::constant(g.clone(), 3.0).unwrap();
        let p = ScalarField::from_fn(g, |[x, _]| 2.0 + x).unwrap();
        let rep = modular_norm_relations_check(&u, &p).unwrap();
        assert_eq!(rep.branch, NormBranch::AboveOne);
        assert!(rep.norm > 1.0);
        assert!(rep.pass, "chain failed: {rep:?}");
    }

    #[test]
    fn modular_norm_relations_below_one() {
        let g = unit_line(201);
        let u = ScalarField::constant(g.clone(), 0.1).unwrap();
        let p = ScalarField::from_fn(g, |[x, _]| 2.0 + x).unwrap();
        let rep = modular_norm_relations_check(&u, &p).unwrap();
        assert_eq!(rep.branch, NormBranch::BelowOne);
        assert!(rep.norm < 1.0);
        assert!(rep.pass, "chain failed: {rep:?}");
    }

    #[test]
    fn norm_modular_convergence_equivalence_on_geometric_sequence() {
        // u_n = u + 2^{-n} w: both norm(u_n - u) and rho(u_n - u) must decay
        // to zero, sandwiched by the modular-norm chains at every step.
        let g = unit_line(101);
        let p = ScalarField::from_fn(g.clone(), |[x, _]| 2.0 + 0.5 * x).unwrap();
        let w = ScalarField::from_fn(g, |[x, _]| 3.0 * (7.0 * x).sin() + 1.0).unwrap();
        let mut prev_norm = f64::INFINITY;
        let mut prev_rho = f64::INFINITY;
        for n in 0..30 {
            let diff = w.scale(2.0_f64.powi(-n)).unwrap();
            let norm = luxemburg_norm(&diff, &p, 1e-12).unwrap().value;
            let rho = modular(&diff, &p).unwrap();
            assert!(norm < prev_norm);
            assert!(rho < prev_rho);
            if norm < 1.0 && norm > 0.0 {
                let (pm, pp) = crate::exponent::exponent_bounds(&p).unwrap();
                assert!(rho <= norm.powf(pm) * (1.0 + 1e-9));
                assert!(rho >= norm.powf(pp) * (1.0 - 1e-9));
            }
            prev_norm = norm;
            prev_rho = rho;
        }
        assert!(prev_norm < 1e-7);
        assert!(prev_rho < 1e-14);
    }

    mod proptests {
        use super::*;
        use proptest::prelude::*;

        fn field_from(vals: Vec<f64>) -> (ScalarField, ScalarField) {
            let g = unit_line(vals.len());
            let u = ScalarField::new(g.clone(), vals).unwrap();
            let p =
                ScalarField::from_fn(g, |[x, _]| 2.0 + (std::f64::consts::PI * x).sin()).unwrap();
            (u, p)
        }

        proptest! {
            #[test]
            fn holder_inequality_random_pairs(
                au in proptest::collection::vec(-3.0..3.0f64, 33),
                av in proptest::collection::vec(-3.0..3.0f64, 33),
            ) {
                let (u, p) = field_from(au);
                let v = ScalarField::new(u.grid().clone(), av).unwrap();
                let rep = holder_check(&u, &v, &p, 1e-9).unwrap();
                prop_assert!(rep.pass, "lhs {} rhs {}", rep.lhs, rep.rhs);
            }

            #[test]
            fn luxemburg_homogeneity(
                au in proptest::collection::vec(-2.0..2.0f64, 33),
                c in -10.0..10.0f64,
            ) {
                let (u, p) = field_from(au);
                prop_assume!(c.abs() > 1e-6);
                prop_assume!(!u.is_zero());
                let base = luxemburg_norm(&u, &p, 1e-12).unwrap().value;
                let scaled = luxemburg_norm(&u.scale(c).unwrap(), &p, 1e-12).unwrap().value;
                prop_assert!(
                    (scaled - c.abs() * base).abs() <= 1e-8 * (1.0 + c.abs() * base),
                    "|c u| = {scaled} vs |c||u| = {}",
                    c.abs() * base
                );
            }

            #[test]
            fn luxemburg_triangle_inequality(
                au in proptest::collection::vec(-2.0..2.0f64, 33),
                av in proptest::collection::vec(-2.0..2.0f64, 33),
            ) {
                let (u, p) = field_from(au);
                let v = ScalarField::new(u.grid().clone(), av).unwrap();
                let nu = luxemburg_norm(&u, &p, 1e-12).unwrap().value;
                let nv = luxemburg_norm(&v, &p, 1e-12).unwrap().value;
                let nsum = luxemburg_norm(&u.add(&v).unwrap(), &p, 1e-12).unwrap().value;
                prop_assert!(nsum <= nu + nv + 1e-8 * (1.0 + nu + nv));
            }

            #[test]
            fn modular_norm_chains_random_fields(
                au in proptest::collection::vec(-4.0..4.0f64, 33),
            ) {
                let (u, p) = field_from(au);
                let rep = modular_norm_relations_check(&u, &p).unwrap();
                prop_assert!(rep.pass, "{rep:?}");
            }
        }
    }
}
