//! Variable exponents on the grid and the structural hypothesis chain.
//!
//! Exponents are sampled at grid nodes; sup/inf over the closed domain are
//! realized as max/min over nodes, consistent with the quadrature used
//! everywhere downstream.

use serde::Serialize;

use crate::error::Error;
use crate::field::ScalarField;
use crate::Result;

/// A real value or a distinguished +∞ sentinel. The sentinel never enters
/// floating-point arithmetic; comparisons against it are resolved by tag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended {
    Finite(f64),
    Infinite,
}

impl Extended {
    pub fn is_finite(&self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Extended::Finite(v) => Some(*v),
            Extended::Infinite => None,
        }
    }

    /// Is a strict upper bound for the given finite value?
    pub fn exceeds(&self, value: f64) -> bool {
        match self {
            Extended::Finite(v) => value < *v,
            Extended::Infinite => true,
        }
    }
}

/// Exact min and max of a field over grid nodes.
pub fn exponent_bounds(f: &ScalarField) -> Result<(f64, f64)> {
    if f.is_empty() {
        return Err(Error::InvalidField("empty field".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in f.values() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}

/// Derivative order for the critical Sobolev exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SobolevOrder {
    First,
    Second,
}

/// Nodewise critical exponent: `N p / (N - p)` at first order when `p < N`,
/// `N p / (N - 2p)` at second order when `p < N/2`, and +∞ otherwise.
///
/// `space_dim` defaults to the grid dimension but may be overridden so a 1D
/// grid can stand in for a radial slice of a higher-dimensional domain.
pub fn sobolev_critical_exponent(
    p: &ScalarField,
    order: SobolevOrder,
    space_dim: Option<u32>,
) -> Result<Vec<Extended>> {
    let n = space_dim.unwrap_or(p.grid().dim() as u32) as f64;
    let factor = match order {
        SobolevOrder::First => 1.0,
        SobolevOrder::Second => 2.0,
    };
    p.values()
        .iter()
        .map(|&pv| {
            if !(pv > 1.0) {
                return Err(Error::InvalidExponent(format!("p must exceed 1, got {pv}")));
            }
            if factor * pv < n {
                Ok(Extended::Finite(n * pv / (n - factor * pv)))
            } else {
                Ok(Extended::Infinite)
            }
        })
        .collect()
}

/// The exponent triple (p, q, r) on a shared grid with cached bounds.
#[derive(Debug, Clone)]
pub struct ExponentTriple {
    p: ScalarField,
    q: ScalarField,
    r: ScalarField,
    p_bounds: (f64, f64),
    q_bounds: (f64, f64),
    r_bounds: (f64, f64),
}

impl ExponentTriple {
    pub fn new(p: ScalarField, q: ScalarField, r: ScalarField) -> Result<Self> {
        p.require_same_grid(&q, "exponent fields p and q")?;
        p.require_same_grid(&r, "exponent fields p and r")?;
        if let Some(bad) = p.values().iter().find(|&&v| !(v > 1.0)) {
            return Err(Error::InvalidExponent(format!(
                "p must exceed 1 at every node, found {bad}"
            )));
        }
        let p_bounds = exponent_bounds(&p)?;
        let q_bounds = exponent_bounds(&q)?;
        let r_bounds = exponent_bounds(&r)?;
        Ok(ExponentTriple {
            p,
            q,
            r,
            p_bounds,
            q_bounds,
            r_bounds,
        })
    }

    pub fn p(&self) -> &ScalarField {
        &self.p
    }

    pub fn q(&self) -> &ScalarField {
        &self.q
    }

    pub fn r(&self) -> &ScalarField {
        &self.r
    }

    pub fn p_minus(&self) -> f64 {
        self.p_bounds.0
    }

    pub fn p_plus(&self) -> f64 {
        self.p_bounds.1
    }

    pub fn q_minus(&self) -> f64 {
        self.q_bounds.0
    }

    pub fn q_plus(&self) -> f64 {
        self.q_bounds.1
    }

    pub fn r_minus(&self) -> f64 {
        self.r_bounds.0
    }

    pub fn r_plus(&self) -> f64 {
        self.r_bounds.1
    }
}

/// Which inequality of the chain `0 < q < 1 < r < p < p*` a node violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ChainViolation {
    #[serde(rename = "0<q")]
    QPositive,
    #[serde(rename = "q<1")]
    QBelowOne,
    #[serde(rename = "1<r")]
    RAboveOne,
    #[serde(rename = "r<p")]
    RBelowP,
    #[serde(rename = "p<p*")]
    PSubcritical,
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub pass: bool,
    /// (node index, first violated inequality at that node)
    pub violations: Vec<(usize, ChainViolation)>,
    pub nodes_checked: usize,
}

/// Verifies `0 < q(x) < 1 < r(x) < p(x) < p*(x)` at every node, with `p*` the
/// second-order critical exponent for space dimension `space_dim`.
#[allow(clippy::needless_range_loop)] // three aligned fields share the index
pub fn check_theorem_hypotheses(e: &ExponentTriple, space_dim: u32) -> Result<HypothesisReport> {
    let critical = sobolev_critical_exponent(e.p(), SobolevOrder::Second, Some(space_dim))?;
    let mut violations = Vec::new();
    let n = e.p().len();
    for i in 0..n {
        let (pv, qv, rv) = (e.p().values()[i], e.q().values()[i], e.r().values()[i]);
        let fail = if !(qv > 0.0) {
            Some(ChainViolation::QPositive)
        } else if !(qv < 1.0) {
            Some(ChainViolation::QBelowOne)
        } else if !(rv > 1.0) {
            Some(ChainViolation::RAboveOne)
        } else if !(rv < pv) {
            Some(ChainViolation::RBelowP)
        } else if !critical[i].exceeds(pv) {
            Some(ChainViolation::PSubcritical)
        } else {
            None
        };
        if let Some(which) = fail {
            violations.push((i, which));
        }
    }
    Ok(HypothesisReport {
        pass: violations.is_empty(),
        violations,
        nodes_checked: n,
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
    fn bounds_of_constant_field() {
        let g = unit_line(11);
        let f = ScalarField::constant(g, 2.5).unwrap();
        assert_eq!(exponent_bounds(&f).unwrap(), (2.5, 2.5));
    }

    #[test]
    fn bounds_of_affine_field_hit_endpoints() {
        let g = unit_line(101);
        let f = ScalarField::from_fn(g, |[x, _]| 2.0 + x).unwrap();
        let (lo, hi) = exponent_bounds(&f).unwrap();
        assert!((lo - 2.0).abs() < 1e-15);
        assert!((hi - 3.0).abs() < 1e-15);
    }

    #[test]
    fn bounds_of_sine_field_match_direct_scan() {
        let g = unit_line(101);
        let f = ScalarField::from_fn(g.clone(), |[x, _]| 2.0 + (std::f64::consts::PI * x).sin())
            .unwrap();
        // Independent oracle: direct scan over node values.
        let mut scan_min = f64::INFINITY;
        let mut scan_max = f64::NEG_INFINITY;
        for i in 0..g.node_count() {
            let v = 2.0 + (std::f64::consts::PI * g.coord(i)[0]).sin();
            scan_min = scan_min.min(v);
            scan_max = scan_max.max(v);
        }
        let (lo, hi) = exponent_bounds(&f).unwrap();
        assert_eq!(lo, scan_min);
        assert_eq!(hi, scan_max);
        // Bounds are attained at some node.
        assert!(f.values().contains(&lo));
        assert!(f.values().contains(&hi));
    }

    #[test]
    fn critical_exponent_one_dimensional_second_order_is_infinite() {
        let g = unit_line(11);
        let p = ScalarField::from_fn(g, |[x, _]| 1.5 + x).unwrap();
        let crit = sobolev_critical_exponent(&p, SobolevOrder::Second, None).unwrap();
        assert!(crit.iter().all(|c| !c.is_finite()));
    }

    #[test]
    fn critical_exponent_boundary_case_n2_p2() {
        let g = Arc::new(Grid::rect(5, 5, 1.0, 1.0).unwrap());
        let p = ScalarField::constant(g, 2.0).unwrap();
        // p = N/2 falls in the infinite branch.
        let crit = sobolev_critical_exponent(&p, SobolevOrder::Second, None).unwrap();
        assert!(crit.iter().all(|c| !c.is_finite()));
    }

    #[test]
    fn critical_exponent_first_order() {
        // order 1: Np/(N-p) on the finite branch, infinite once p >= N
        let g = unit_line(5);
        let p = ScalarField::constant(g.clone(), 1.5).unwrap();
        let crit = sobolev_critical_exponent(&p, SobolevOrder::First, Some(3)).unwrap();
        for c in crit {
            assert!((c.finite().unwrap() - 3.0).abs() < 1e-12);
        }
        let crit_1d = sobolev_critical_exponent(&p, SobolevOrder::First, None).unwrap();
        assert!(crit_1d.iter().all(|c| !c.is_finite()));
    }

    #[test]
    fn critical_exponent_finite_branch_n3() {
        let g = unit_line(5);
        let p = ScalarField::constant(g, 1.2).unwrap();
        let crit = sobolev_critical_exponent(&p, SobolevOrder::Second, Some(3)).unwrap();
        for c in crit {
            assert!((c.finite().unwrap() - 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn critical_exponent_monotone_in_p_on_finite_branch() {
        let g = unit_line(21);
        let p_lo = ScalarField::from_fn(g.clone(), |[x, _]| 1.1 + 0.1 * x).unwrap();
        let p_hi = ScalarField::from_fn(g, |[x, _]| 1.2 + 0.1 * x).unwrap();
        let c_lo = sobolev_critical_exponent(&p_lo, SobolevOrder::Second, Some(3)).unwrap();
        let c_hi = sobolev_critical_exponent(&p_hi, SobolevOrder::Second, Some(3)).unwrap();
        for (a, b) in c_lo.iter().zip(&c_hi) {
            assert!(a.finite().unwrap() < b.finite().unwrap());
        }
    }

    #[test]
    fn chain_passes_for_constant_admissible_triple() {
        let g = unit_line(11);
        let e = ExponentTriple::new(
            ScalarField::constant(g.clone(), 2.5).unwrap(),
            ScalarField::constant(g.clone(), 0.5).unwrap(),
            ScalarField::constant(g, 1.5).unwrap(),
        )
        .unwrap();
        let report = check_theorem_hypotheses(&e, 1).unwrap();
        assert!(report.pass);
        assert!(report.violations.is_empty());
    }

    #[test]
    fn chain_fails_everywhere_when_q_exceeds_one() {
        let g = unit_line(11);
        let e = ExponentTriple::new(
            ScalarField::constant(g.clone(), 2.5).unwrap(),
            ScalarField::constant(g.clone(), 1.2).unwrap(),
            ScalarField::constant(g, 1.5).unwrap(),
        )
        .unwrap();
        let report = check_theorem_hypotheses(&e, 1).unwrap();
        assert!(!report.pass);
        assert_eq!(report.violations.len(), 11);
        assert!(report
            .violations
            .iter()
            .all(|&(_, v)| v == ChainViolation::QBelowOne));
    }

    #[test]
    fn chain_fails_exactly_where_r_meets_p() {
        // r(x) = 1.5 + x crosses p(x) = 2 + 0.4 x at x = 5/6; with 101 nodes the
        // violating nodes are exactly those with x_i >= 5/6, i.e. i in 84..=100.
        let g = unit_line(101);
        let e = ExponentTriple::new(
            ScalarField::from_fn(g.clone(), |[x, _]| 2.0 + 0.4 * x).unwrap(),
            ScalarField::constant(g.clone(), 0.5).unwrap(),
            ScalarField::from_fn(g.clone(), |[x, _]| 1.5 + x).unwrap(),
        )
        .unwrap();
        let report = check_theorem_hypotheses(&e, 1).unwrap();
        assert!(!report.pass);
        // Oracle: direct scan of the inequality.
        let expected: Vec<usize> = (0..101)
            .filter(|&i| {
                let x = g.coord(i)[0];
                1.5 + x >= 2.0 + 0.4 * x
            })
            .collect();
        assert_eq!(expected.first(), Some(&84));
        let reported: Vec<usize> = report.violations.iter().map(|&(i, _)| i).collect();
        assert_eq!(reported, expected);
        assert!(report
            .violations
            .iter()
            .all(|&(_, v)| v == ChainViolation::RBelowP));
    }

    #[test]
    fn triple_rejects_p_at_most_one() {
        let g = unit_line(5);
        let err = ExponentTriple::new(
            ScalarField::constant(g.clone(), 1.0).unwrap(),
            ScalarField::constant(g.clone(), 0.5).unwrap(),
            ScalarField::constant(g, 1.5).unwrap(),
        );
        assert!(err.is_err());
    }

    #[test]
    fn triple_rejects_mismatched_grids() {
        let g1 = unit_line(5);
        let g2 = unit_line(7);
        let err = ExponentTriple::new(
            ScalarField::constant(g1.clone(), 2.0).unwrap(),
            ScalarField::constant(g2, 0.5).unwrap(),
            ScalarField::constant(g1, 1.5).unwrap(),
        );
        assert!(matches!(err, Err(Error::GridMismatch(_))));
    }
}
