//! Smooth test profiles: the valley bump, the stationarity test basis, and
//! seeded random smooth fields. All vanish on the boundary.

use std::sync::Arc;

use rand::Rng;

use crate::field::{Grid, ScalarField};
use crate::Result;

/// The valley direction: per axis [4 x̂ (1−x̂)]² with x̂ the normalized
/// coordinate, tensorized in 2D and clipped to [0,1]. Vanishes to second
/// order at the boundary.
#[allow(clippy::needless_range_loop)] // coordinates are indexed by axis
pub fn bump_profile(grid: &Arc<Grid>) -> ScalarField {
    let g = grid.clone();
    ScalarField::from_fn(grid.clone(), move |coord| {
        let mut v = 1.0;
        for axis in 0..g.dim() {
            let xh = coord[axis] / g.extents()[axis];
            let b = 4.0 * xh * (1.0 - xh);
            v *= b * b;
        }
        v.clamp(0.0, 1.0)
    })
    .expect("bump profile values are finite by construction")
}

/// A fixed basis of `n` smooth bumps for weak-residual probing: Gaussians of
/// varying center and width, windowed by the boundary bump so they vanish on
/// the boundary, normalized to unit max.
#[allow(clippy::needless_range_loop)]
pub fn residual_basis(grid: &Arc<Grid>, n: usize) -> Vec<ScalarField> {
    let window = bump_profile(grid);
    (0..n)
        .map(|k| {
            let g = grid.clone();
            let frac = (k + 1) as f64 / (n + 1) as f64;
            let sigma = [0.05, 0.1, 0.2][k % 3];
            let raw = ScalarField::from_fn(grid.clone(), move |coord| {
                let mut v = 1.0;
                for axis in 0..g.dim() {
                    let xh = coord[axis] / g.extents()[axis];
                    // rotate centers axis-wise so 2D bumps are off-diagonal
                    let c = if axis == 0 { frac } else { 1.0 - frac };
                    let z = (xh - c) / sigma;
                    v *= (-0.5 * z * z).exp();
                }
                v
            })
            .expect("gaussian bump is finite");
            let windowed = raw
                .zip_with(&window, |a, b| a * b)
                .expect("same grid by construction");
            let peak = windowed.max_abs();
            windowed
                .scale(1.0 / peak.max(1e-300))
                .expect("finite after normalization")
        })
        .collect()
}

/// A random smooth field: a sine series with 1/k² coefficient decay and
/// seeded random amplitudes. Vanishes on the boundary.
#[allow(clippy::needless_range_loop)]
pub fn random_smooth_field(
    grid: &Arc<Grid>,
    rng: &mut impl Rng,
    modes: usize,
) -> Result<ScalarField> {
    let dim = grid.dim();
    let mut terms: Vec<(f64, [usize; 2])> = Vec::new();
    if dim == 1 {
        for k in 1..=modes {
            terms.push((rng.random_range(-1.0..1.0) / (k * k) as f64, [k, 0]));
        }
    } else {
        for k in 1..=modes {
            for l in 1..=modes {
                terms.push((rng.random_range(-1.0..1.0) / (k * k + l * l) as f64, [k, l]));
            }
        }
    }
    let g = grid.clone();
    ScalarField::from_fn(grid.clone(), move |coord| {
        let mut v = 0.0;
        for &(a, ks) in &terms {
            let mut basis = 1.0;
            for axis in 0..g.dim() {
                let xh = coord[axis] / g.extents()[axis];
                basis *= (ks[axis] as f64 * std::f64::consts::PI * xh).sin();
            }
            v += a * basis;
        }
        v
    })
}
