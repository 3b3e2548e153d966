//! Finite-difference Laplacian with Navier boundary conditions and the
//! discrete weak-form pairing.
//!
//! The Navier conditions u = 0 and Δu = 0 on ∂Ω are imposed strongly: input
//! boundary values are overwritten to zero before the stencil is applied, and
//! the operator output is zero at boundary nodes by definition. Interior nodes
//! use the second-order 3-point (1D) or 5-point (2D) stencil.
//!
//! All integrals use the composite trapezoidal rule with a fixed pairwise
//! summation order, so results are bitwise deterministic.

use std::sync::Arc;

use crate::error::Error;
use crate::field::{pairwise_sum, Grid, ScalarField};
use crate::phi::PhiModel;
use crate::Result;

/// The discrete Laplacian of the Navier problem on a fixed grid.
#[derive(Debug, Clone)]
pub struct NavierOperator {
    grid: Arc<Grid>,
}

impl NavierOperator {
    pub fn new(grid: Arc<Grid>) -> Self {
        NavierOperator { grid }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Second-order centered Laplacian at interior nodes; zero at boundary
    /// nodes. Boundary values of `u` are treated as zero regardless of input.
    #[allow(clippy::needless_range_loop)] // stencil indexing reads clearer
    pub fn laplacian(&self, u: &ScalarField) -> Result<ScalarField> {
        if !u.grid().same_as(&self.grid) {
            return Err(Error::GridMismatch("laplacian input".into()));
        }
        let g = &self.grid;
        let vals = u.values();
        let at = |i: usize| if g.is_boundary(i) { 0.0 } else { vals[i] };
        let n = g.node_count();
        let mut out = vec![0.0; n];
        match g.dim() {
            1 => {
                let h2 = g.spacing()[0] * g.spacing()[0];
                for i in 0..n {
                    if g.is_interior(i) {
                        out[i] = (at(i - 1) - 2.0 * at(i) + at(i + 1)) / h2;
                    }
                }
            }
            _ => {
                let nx = g.counts()[0];
                let hx2 = g.spacing()[0] * g.spacing()[0];
                let hy2 = g.spacing()[1] * g.spacing()[1];
                for i in 0..n {
                    if g.is_interior(i) {
                        let c = at(i);
                        out[i] = (at(i - 1) - 2.0 * c + at(i + 1)) / hx2
                            + (at(i - nx) - 2.0 * c + at(i + nx)) / hy2;
                    }
                }
            }
        }
        ScalarField::new(self.grid.clone(), out)
    }
}

/// Composite trapezoidal approximation of ∫_Ω f dx (tensorized in 2D).
pub fn integrate(f: &ScalarField) -> f64 {
    let g = f.grid();
    let weighted: Vec<f64> = f
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| g.weight(i) * v)
        .collect();
    pairwise_sum(&weighted)
}

/// Quadrature of g(i) over the grid, g given nodewise.
pub(crate) fn integrate_nodewise(grid: &Grid, g: impl Fn(usize) -> f64) -> f64 {
    let weighted: Vec<f64> = (0..grid.node_count())
        .map(|i| grid.weight(i) * g(i))
        .collect();
    pairwise_sum(&weighted)
}

/// Quadrature-weighted nodal inner product Σ w_i a_i b_i.
pub fn inner_product(a: &ScalarField, b: &ScalarField) -> Result<f64> {
    a.require_same_grid(b, "inner product operands")?;
    let g = a.grid();
    let weighted: Vec<f64> = a
        .values()
        .iter()
        .zip(b.values())
        .enumerate()
        .map(|(i, (&x, &y))| g.weight(i) * x * y)
        .collect();
    Ok(pairwise_sum(&weighted))
}

/// The discrete weak pairing ∫_Ω φ(x,|Δu|) Δu Δv dx.
pub fn weak_pairing(
    op: &NavierOperator,
    model: &PhiModel,
    u: &ScalarField,
    v: &ScalarField,
) -> Result<f64> {
    if !model.grid().same_as(op.grid()) {
        return Err(Error::GridMismatch("weak_pairing model grid".into()));
    }
    u.require_same_grid(v, "weak_pairing fields")?;
    let lu = op.laplacian(u)?;
    let lv = op.laplacian(v)?;
    let g = op.grid();
    Ok(integrate_nodewise(g, |i| {
        model.flux(i, lu.values()[i]) * lv.values()[i]
    }))
}
