//! Shared test support: oracles and deterministic generators.
#![allow(dead_code)] // each integration test target compiles its own copy

use std::sync::Arc;

use pxbiharm::exponent::ExponentTriple;
use pxbiharm::field::{Grid, ScalarField};
use pxbiharm::minimize::ProblemSpec;
use pxbiharm::phi::PhiModel;

/// Adaptive Simpson quadrature, the independent oracle for closed-form
/// antiderivatives. Splits until the local Richardson estimate meets the
/// tolerance.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 60)
}

pub fn unit_line(n: usize) -> Arc<Grid> {
    Arc::new(Grid::line(n, 1.0).unwrap())
}

pub fn constant_triple(grid: &Arc<Grid>, p: f64, q: f64, r: f64) -> ExponentTriple {
    ExponentTriple::new(
        ScalarField::constant(grid.clone(), p).unwrap(),
        ScalarField::constant(grid.clone(), q).unwrap(),
        ScalarField::constant(grid.clone(), r).unwrap(),
    )
    .unwrap()
}

/// The reference problem of the valley and sweep criteria:
/// power model, p = 2.5, q = 0.5, r = 1.5 on (0, 1).
pub fn reference_spec(n: usize, lambda: f64) -> ProblemSpec {
    let grid = unit_line(n);
    let exps = constant_triple(&grid, 2.5, 0.5, 1.5);
    let phi = PhiModel::power(exps.p().clone(), 1.0).unwrap();
    ProblemSpec::new(exps, phi, lambda).unwrap()
}

/// Fresh scratch directory under the system temp dir.
pub fn scratch_dir(label: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "pxbiharm-test-{label}-{}-{}",
        std::process::id(),
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .unwrap()
            .as_nanos()
    ));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
