//! Integrand families φ(x,ξ) and their antiderivatives Φ(x,t) = ∫₀ᵗ s φ(x,s) ds.
//!
//! Families:
//!
//! - power:           φ(x,ξ) = ξ^{p(x)−2}
//! - mean curvature:  φ(x,ξ) = (1+ξ²)^{(p(x)−2)/2}
//! - capillarity:     φ(x,ξ) = (1 + ξ^{p(x)}/√(1+ξ^{2p(x)})) ξ^{p(x)−2}
//! - double phase:    φ(x,ξ) = ξ^{p₁(x)−2} + V(x) ξ^{p₂(x)−2}, optionally with
//!   the second term weighted by log(e+|x|)
//!
//! φ itself can blow up at ξ = 0 (power-type with p(x) < 2); callers that need
//! ξ = 0 use the products ξ·φ and φ(x,|s|)·s, which extend continuously by 0
//! whenever p > 1. The hypotheses verified here:
//!
//! - growth:      |φ(x,|v|) v| ≤ a(x) + b |v|^{p(x)−1}
//! - ellipticity: φ(x,ξ) ≥ c ξ^{p(x)−2}  and  φ(x,ξ) + ξ ∂φ/∂ξ ≥ c ξ^{p(x)−2}

use serde::Serialize;

use crate::error::Error;
use crate::exponent::{exponent_bounds, Extended};
use crate::field::{Grid, ScalarField};
use crate::Result;
use std::sync::Arc;

/// Relative slack absorbing round-off in the hypothesis inequalities.
const CHECK_SLACK: f64 = 1e-9;

/// ξ sampling range for hypothesis verification and growth-offset estimation.
const XI_LO: f64 = 1e-6;
const XI_HI: f64 = 1e6;

#[derive(Debug, Clone)]
pub enum PhiKind {
    Power {
        p: ScalarField,
    },
    MeanCurvature {
        p: ScalarField,
    },
    Capillarity {
        p: ScalarField,
    },
    DoublePhase {
        p1: ScalarField,
        p2: ScalarField,
        weight: ScalarField,
        log_weight: bool,
    },
}

impl PhiKind {
    pub fn tag(&self) -> &'static str {
        match self {
            PhiKind::Power { .. } => "power",
            PhiKind::MeanCurvature { .. } => "mean_curvature",
            PhiKind::Capillarity { .. } => "capillarity",
            PhiKind::DoublePhase {
                log_weight: false, ..
            } => "double_phase",
            PhiKind::DoublePhase {
                log_weight: true, ..
            } => "double_phase_log",
        }
    }
}

/// An integrand family together with its claimed hypothesis data: the
/// ellipticity constant `c` and the growth pair (a(x), b). Claims are checked
/// by [`PhiModel::verify_hypotheses`], not trusted.
#[derive(Debug, Clone)]
pub struct PhiModel {
    kind: PhiKind,
    c: f64,
    b: f64,
    a: ScalarField,
    p_plus: f64,
    p_minus: f64,
}

impl PhiModel {
    fn build(kind: PhiKind, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidModel(format!(
                "ellipticity constant c must be positive, got {c}"
            )));
        }
        let validate_p = |p: &ScalarField| -> Result<()> {
            if let Some(bad) = p.values().iter().find(|&&v| !(v > 1.0)) {
                return Err(Error::InvalidModel(format!(
                    "exponent must exceed 1 at every node, found {bad}"
                )));
            }
            Ok(())
        };
        match &kind {
            PhiKind::Power { p } | PhiKind::MeanCurvature { p } | PhiKind::Capillarity { p } => {
                validate_p(p)?
            }
            PhiKind::DoublePhase { p1, p2, weight, .. } => {
                validate_p(p1)?;
                validate_p(p2)?;
                p1.require_same_grid(p2, "double-phase exponents")?;
                p1.require_same_grid(weight, "double-phase weight")?;
                if let Some((i, _)) = p1
                    .values()
                    .iter()
                    .zip(p2.values())
                    .enumerate()
                    .find(|(_, (a, b))| a > b)
                    .map(|(i, _)| (i, ()))
                {
                    return Err(Error::InvalidModel(format!(
                        "double phase requires p1 <= p2 at every node, violated at node {i}"
                    )));
                }
                if let Some(bad) = weight.values().iter().find(|&&v| v < 0.0) {
                    return Err(Error::InvalidModel(format!(
                        "double-phase weight must be nonnegative, found {bad}"
                    )));
                }
            }
        }
        let (p_minus, p_plus) = {
            let p = match &kind {
                PhiKind::Power { p }
                | PhiKind::MeanCurvature { p }
                | PhiKind::Capillarity { p } => p,
                // Growth is governed by the lower exponent: the second term is
                // weighted by V >= 0 which may vanish.
                PhiKind::DoublePhase { p1, .. } => p1,
            };
            exponent_bounds(p)?
        };
        let b = default_growth_slope(&kind, p_plus);
        let mut model = PhiModel {
            kind,
            c,
            b,
            a: ScalarField::zeros(Arc::new(Grid::line(3, 1.0)?)),
            p_plus,
            p_minus,
        };
        model.a = model.estimate_growth_offset(model.b)?;
        Ok(model)
    }

    pub fn power(p: ScalarField, c: f64) -> Result<Self> {
        Self::build(PhiKind::Power { p }, c)
    }

    pub fn mean_curvature(p: ScalarField, c: f64) -> Result<Self> {
        Self::build(PhiKind::MeanCurvature { p }, c)
    }

    pub fn capillarity(p: ScalarField, c: f64) -> Result<Self> {
        Self::build(PhiKind::Capillarity { p }, c)
    }

    pub fn double_phase(
        p1: ScalarField,
        p2: ScalarField,
        weight: ScalarField,
        log_weight: bool,
        c: f64,
    ) -> Result<Self> {
        Self::build(
            PhiKind::DoublePhase {
                p1,
                p2,
                weight,
                log_weight,
            },
            c,
        )
    }

    /// Overrides the claimed growth data (a(x), b).
    pub fn with_growth_data(mut self, a: ScalarField, b: f64) -> Result<Self> {
        a.require_same_grid(self.growth_exponent(), "growth offset field")?;
        if let Some(bad) = a.values().iter().find(|&&v| v < 0.0) {
            return Err(Error::InvalidModel(format!(
                "growth offset must be nonnegative, found {bad}"
            )));
        }
        if !(b > 0.0) {
            return Err(Error::InvalidModel(format!(
                "growth slope b must be positive, got {b}"
            )));
        }
        self.a = a;
        self.b = b;
        Ok(self)
    }

    /// Overrides the claimed ellipticity constant.
    pub fn with_c(mut self, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidModel(format!(
                "ellipticity constant c must be positive, got {c}"
            )));
        }
        self.c = c;
        Ok(self)
    }

    pub fn kind(&self) -> &PhiKind {
        &self.kind
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn a(&self) -> &ScalarField {
        &self.a
    }

    /// The exponent field governing growth bounds (p, or p₁ for double phase).
    pub fn growth_exponent(&self) -> &ScalarField {
        match &self.kind {
            PhiKind::Power { p } | PhiKind::MeanCurvature { p } | PhiKind::Capillarity { p } => p,
            PhiKind::DoublePhase { p1, .. } => p1,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.growth_exponent().grid()
    }

    pub fn p_plus(&self) -> f64 {
        self.p_plus
    }

    pub fn p_minus(&self) -> f64 {
        self.p_minus
    }

    /// Multiplier of the second double-phase term at a node (V, or V·log(e+|x|)).
    fn second_weight(&self, node: usize) -> f64 {
        match &self.kind {
            PhiKind::DoublePhase {
                weight, log_weight, ..
            } => {
                let v = weight.values()[node];
                if *log_weight {
                    let [x, y] = self.grid().coord(node);
                    v * (std::f64::consts::E + (x * x + y * y).sqrt()).ln()
                } else {
                    v
                }
            }
            _ => 0.0,
        }
    }

    /// φ(x,ξ) for ξ ≥ 0. Returns the +∞ sentinel where the formula diverges
    /// (ξ = 0 with an exponent below 2).
    pub fn phi(&self, node: usize, xi: f64) -> Result<Extended> {
        if xi < 0.0 || !xi.is_finite() {
            return Err(Error::InvalidModel(format!(
                "phi argument must be >= 0, got {xi}"
            )));
        }
        Ok(self.phi_unchecked(node, xi))
    }

    fn phi_unchecked(&self, node: usize, xi: f64) -> Extended {
        match &self.kind {
            PhiKind::Power { p } => power_phi(p.values()[node], xi),
            PhiKind::MeanCurvature { p } => {
                Extended::Finite((1.0 + xi * xi).powf((p.values()[node] - 2.0) / 2.0))
            }
            PhiKind::Capillarity { p } => {
                let pv = p.values()[node];
                match power_phi(pv, xi) {
                    Extended::Infinite => Extended::Infinite,
                    Extended::Finite(base) => {
                        Extended::Finite((1.0 + capillarity_bracket_excess(pv, xi)) * base)
                    }
                }
            }
            PhiKind::DoublePhase { p1, p2, .. } => {
                let w = self.second_weight(node);
                match (
                    power_phi(p1.values()[node], xi),
                    power_phi(p2.values()[node], xi),
                ) {
                    (Extended::Finite(a), Extended::Finite(b)) => Extended::Finite(a + w * b),
                    _ => Extended::Infinite,
                }
            }
        }
    }

    /// ξ·φ(x,ξ), extended by its limit 0 at ξ = 0 (valid since p > 1).
    pub fn xi_phi(&self, node: usize, xi: f64) -> f64 {
        if xi == 0.0 {
            return 0.0;
        }
        match &self.kind {
            PhiKind::Power { p } => xi.powf(p.values()[node] - 1.0),
            PhiKind::MeanCurvature { p } => {
                xi * (1.0 + xi * xi).powf((p.values()[node] - 2.0) / 2.0)
            }
            PhiKind::Capillarity { p } => {
                let pv = p.values()[node];
                (1.0 + capillarity_bracket_excess(pv, xi)) * xi.powf(pv - 1.0)
            }
            PhiKind::DoublePhase { p1, p2, .. } => {
                let w = self.second_weight(node);
                xi.powf(p1.values()[node] - 1.0) + w * xi.powf(p2.values()[node] - 1.0)
            }
        }
    }

    /// φ(x,|s|)·s for signed s, extended by 0 at s = 0.
    pub fn flux(&self, node: usize, s: f64) -> f64 {
        s.signum() * self.xi_phi(node, s.abs())
    }

    /// The flux map u ↦ φ(x,|u|)u on vectors, extended by 0 at u = 0.
    pub fn flux_vec(&self, node: usize, u: &[f64]) -> Vec<f64> {
        let norm = u.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm == 0.0 {
            return vec![0.0; u.len()];
        }
        // phi(|u|) = xi_phi(|u|)/|u| is finite for |u| > 0.
        let scale = self.xi_phi(node, norm) / norm;
        u.iter().map(|&c| scale * c).collect()
    }

    /// Φ(x,t) = ∫₀ᵗ s φ(x,s) ds in closed form.
    pub fn big_phi(&self, node: usize, t: f64) -> Result<f64> {
        if t < 0.0 || !t.is_finite() {
            return Err(Error::InvalidModel(format!(
                "big_phi argument must be >= 0, got {t}"
            )));
        }
        Ok(self.big_phi_unchecked(node, t))
    }

    pub(crate) fn big_phi_unchecked(&self, node: usize, t: f64) -> f64 {
        match &self.kind {
            PhiKind::Power { p } => {
                let pv = p.values()[node];
                t.powf(pv) / pv
            }
            PhiKind::MeanCurvature { p } => {
                let pv = p.values()[node];
                ((1.0 + t * t).powf(pv / 2.0) - 1.0) / pv
            }
            PhiKind::Capillarity { p } => {
                let pv = p.values()[node];
                t.powf(pv) / pv + ((1.0 + t.powf(2.0 * pv)).sqrt() - 1.0) / pv
            }
            PhiKind::DoublePhase { p1, p2, .. } => {
                let w = self.second_weight(node);
                let (a, b) = (p1.values()[node], p2.values()[node]);
                t.powf(a) / a + w * t.powf(b) / b
            }
        }
    }

    /// ∂φ/∂ξ by central differences with relative step 1e−6·ξ. An absolute
    /// step floor would dominate ξ at the bottom of the sampling range and
    /// ruin the difference quotient there.
    fn dphi_dxi(&self, node: usize, xi: f64) -> Option<f64> {
        let step = 1e-6 * xi;
        if step <= 0.0 {
            return None;
        }
        let hi = self.phi_unchecked(node, xi + step).finite()?;
        let lo = self.phi_unchecked(node, xi - step).finite()?;
        Some((hi - lo) / (2.0 * step))
    }

    /// Samples (node, ξ) pairs on the log-spaced ξ grid crossed with grid
    /// nodes (capped near `samples` total) and checks the growth bound and
    /// both ellipticity inequalities. Measurability/absolute continuity is
    /// structural for these closed-form families.
    pub fn verify_hypotheses(&self, samples: usize) -> Result<ModelCheck> {
        if samples == 0 {
            return Err(Error::InvalidModel("need at least one sample".into()));
        }
        let n_nodes = self.grid().node_count();
        let n_xi = (samples.div_ceil(n_nodes)).max(9);
        let node_stride = ((n_xi * n_nodes).div_ceil(samples)).max(1);
        let xis = log_spaced(XI_LO, XI_HI, n_xi);

        let p = self.growth_exponent();
        let mut check = ModelCheck::new(self.kind.tag(), self.c, self.b);
        for (j, &xi) in xis.iter().enumerate() {
            let mut node = j % node_stride;
            while node < n_nodes {
                let pv = p.values()[node];
                let growth = xi.powf(pv - 2.0);
                if let Extended::Finite(phi) = self.phi_unchecked(node, xi) {
                    let ratio_lower = phi / growth;
                    check.record_ellipticity_lower(node, xi, ratio_lower, self.c);
                    if let Some(dphi) = self.dphi_dxi(node, xi) {
                        let ratio_monotone = (phi + xi * dphi) / growth;
                        check.record_ellipticity_monotone(node, xi, ratio_monotone, self.c);
                    }
                }
                let lhs = self.xi_phi(node, xi);
                let rhs = self.a.values()[node] + self.b * xi.powf(pv - 1.0);
                check.record_growth(node, xi, lhs, rhs);
                node += node_stride;
            }
        }
        check.finish();
        Ok(check)
    }

    /// Default growth offset for a given slope b: per node, the largest
    /// sampled defect max(0, ξφ(x,ξ) − b ξ^{p(x)−1}).
    fn estimate_growth_offset(&self, b: f64) -> Result<ScalarField> {
        let p = self.growth_exponent();
        let grid = p.grid().clone();
        let xis = log_spaced(XI_LO, XI_HI, 121);
        let values: Vec<f64> = (0..grid.node_count())
            .map(|node| {
                let pv = p.values()[node];
                xis.iter()
                    .map(|&xi| (self.xi_phi(node, xi) - b * xi.powf(pv - 1.0)).max(0.0))
                    .fold(0.0_f64, f64::max)
            })
            .collect();
        ScalarField::new(grid, values)
    }

    /// Both sides of the Simon-type estimate at a node:
    /// lhs = ⟨φ(x,|u|)u − φ(x,|v|)v, u−v⟩, and the branch-dependent rhs
    /// c(|u|+|v|)^{p−2}|u−v|² (p < 2) or 4^{1−p⁺} c |u−v|^{p} (p ≥ 2).
    /// Callers assert lhs ≥ rhs.
    pub fn simon_gap(&self, node: usize, u: &[f64], v: &[f64]) -> Result<(f64, f64)> {
        if u.len() != v.len() || u.is_empty() {
            return Err(Error::InvalidModel(
                "simon_gap needs vectors of equal nonzero length".into(),
            ));
        }
        if u.iter().chain(v).any(|c| !c.is_finite()) {
            return Err(Error::InvalidModel(
                "simon_gap requires finite vectors".into(),
            ));
        }
        let pv = self.growth_exponent().values()[node];
        let norm = |w: &[f64]| w.iter().map(|c| c * c).sum::<f64>().sqrt();
        let (nu, nv) = (norm(u), norm(v));
        let diff: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
        let ndiff = norm(&diff);
        let fu = self.flux_vec(node, u);
        let fv = self.flux_vec(node, v);
        let lhs: f64 = fu
            .iter()
            .zip(&fv)
            .zip(&diff)
            .map(|((a, b), d)| (a - b) * d)
            .sum();
        let rhs = if pv < 2.0 {
            if nu == 0.0 && nv == 0.0 {
                return Err(Error::UndefinedBranch(
                    "simon_gap with p(x) < 2 requires (u,v) != (0,0)".into(),
                ));
            }
            self.c * (nu + nv).powf(pv - 2.0) * ndiff * ndiff
        } else {
            4.0_f64.powf(1.0 - self.p_plus) * self.c * ndiff.powf(pv)
        };
        Ok((lhs, rhs))
    }
}

fn power_phi(p: f64, xi: f64) -> Extended {
    if xi == 0.0 {
        if p < 2.0 {
            Extended::Infinite
        } else if p == 2.0 {
            Extended::Finite(1.0)
        } else {
            Extended::Finite(0.0)
        }
    } else {
        Extended::Finite(xi.powf(p - 2.0))
    }
}

/// ξ^p / √(1+ξ^{2p}), the amount by which the capillarity bracket exceeds 1.
fn capillarity_bracket_excess(p: f64, xi: f64) -> f64 {
    let t = xi.powf(p);
    t / (1.0 + t * t).sqrt()
}

fn default_growth_slope(kind: &PhiKind, p_plus: f64) -> f64 {
    match kind {
        PhiKind::Power { .. } => 1.0,
        PhiKind::Capillarity { .. } => 2.0,
        PhiKind::MeanCurvature { .. } => 2.0_f64.powf((p_plus - 2.0) / 2.0) + 1.0,
        PhiKind::DoublePhase {
            weight, log_weight, ..
        } => {
            let grid = weight.grid();
            let max_w = (0..grid.node_count())
                .map(|i| {
                    let v = weight.values()[i];
                    if *log_weight {
                        let [x, y] = grid.coord(i);
                        v * (std::f64::consts::E + (x * x + y * y).sqrt()).ln()
                    } else {
                        v
                    }
                })
                .fold(0.0_f64, f64::max);
            1.0 + max_w
        }
    }
}

pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Verification report for one model. Violations are findings, not errors.
#[derive(Debug, Clone, Serialize)]
pub struct ModelCheck {
    pub model: &'static str,
    pub measurability_structural: bool,
    pub c_claimed: f64,
    pub b_claimed: f64,
    /// Numerical estimate of the largest admissible ellipticity constant: the
    /// infimum over samples of φ ξ^{2−p} and (φ + ξ ∂φ/∂ξ) ξ^{2−p}.
    pub c_max_estimate: f64,
    pub ellipticity_lower_pass: bool,
    /// Worst sampled margin φ ξ^{2−p} − c (negative means violated).
    pub ellipticity_lower_worst_margin: f64,
    pub ellipticity_lower_violations: Vec<SampleViolation>,
    pub ellipticity_monotone_pass: bool,
    pub ellipticity_monotone_worst_margin: f64,
    pub ellipticity_monotone_violations: Vec<SampleViolation>,
    pub growth_pass: bool,
    /// Worst sampled defect ξφ − (a + b ξ^{p−1}) (positive means violated).
    pub growth_worst_defect: f64,
    pub growth_violations: Vec<SampleViolation>,
    pub samples_used: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleViolation {
    pub node: usize,
    pub xi: f64,
    pub margin: f64,
}

const MAX_RECORDED_VIOLATIONS: usize = 32;

impl ModelCheck {
    fn new(model: &'static str, c: f64, b: f64) -> Self {
        ModelCheck {
            model,
            measurability_structural: true,
            c_claimed: c,
            b_claimed: b,
            c_max_estimate: f64::INFINITY,
            ellipticity_lower_pass: true,
            ellipticity_lower_worst_margin: f64::INFINITY,
            ellipticity_lower_violations: Vec::new(),
            ellipticity_monotone_pass: true,
            ellipticity_monotone_worst_margin: f64::INFINITY,
            ellipticity_monotone_violations: Vec::new(),
            growth_pass: true,
            growth_worst_defect: f64::NEG_INFINITY,
            growth_violations: Vec::new(),
            samples_used: 0,
        }
    }

    fn record_ellipticity_lower(&mut self, node: usize, xi: f64, ratio: f64, c: f64) {
        self.samples_used += 1;
        self.c_max_estimate = self.c_max_estimate.min(ratio);
        let margin = ratio - c;
        self.ellipticity_lower_worst_margin = self.ellipticity_lower_worst_margin.min(margin);
        if margin < -CHECK_SLACK * c {
            self.ellipticity_lower_pass = false;
            if self.ellipticity_lower_violations.len() < MAX_RECORDED_VIOLATIONS {
                self.ellipticity_lower_violations
                    .push(SampleViolation { node, xi, margin });
            }
        }
    }

    fn record_ellipticity_monotone(&mut self, node: usize, xi: f64, ratio: f64, c: f64) {
        self.c_max_estimate = self.c_max_estimate.min(ratio);
        let margin = ratio - c;
        self.ellipticity_monotone_worst_margin = self.ellipticity_monotone_worst_margin.min(margin);
        if margin < -CHECK_SLACK * c {
            self.ellipticity_monotone_pass = false;
            if self.ellipticity_monotone_violations.len() < MAX_RECORDED_VIOLATIONS {
                self.ellipticity_monotone_violations
                    .push(SampleViolation { node, xi, margin });
            }
        }
    }

    fn record_growth(&mut self, node: usize, xi: f64, lhs: f64, rhs: f64) {
        let defect = lhs - rhs;
        self.growth_worst_defect = self.growth_worst_defect.max(defect);
        if defect > CHECK_SLACK * (1.0 + rhs.abs()) {
            self.growth_pass = false;
            if self.growth_violations.len() < MAX_RECORDED_VIOLATIONS {
                self.growth_violations.push(SampleViolation {
                    node,
                    xi,
                    margin: defect,
                });
            }
        }
    }

    fn finish(&mut self) {}

    pub fn ellipticity_pass(&self) -> bool {
        self.ellipticity_lower_pass && self.ellipticity_monotone_pass
    }

    pub fn all_pass(&self) -> bool {
        self.measurability_structural && self.growth_pass && self.ellipticity_pass()
    }
}
