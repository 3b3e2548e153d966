//! Variable-exponent Lebesgue space primitives and a direct-minimization solver
//! for the singular p(x)-biharmonic problem with Navier boundary conditions
//!
//! The library is organized bottom-up:
//!
//! - [`field`]: structured grids on an interval or rectangle and nodal scalar fields,
//!   with the shared JSON representation used by every command.
//! - [`exponent`]: variable exponents p(x), q(x), r(x), their sup/inf bounds,
//!   critical Sobolev exponents, and the structural hypothesis chain
//!   `0 < q < 1 < r < p < p*`.
//! - [`lebesgue`]: modulars, Luxemburg norms, conjugate exponents, and the
//!   Hölder / modular-norm inequality checks.
//! - [`phi`]: the integrand families φ(x,ξ) (power, mean curvature, capillarity,
//!   double phase), their antiderivatives Φ(x,t), growth-hypothesis verification,
//!   and the Simon-type monotonicity gap.
//! - [`operator`]: the finite-difference Laplacian with Navier conditions
//!   (u = Δu = 0 on the boundary), trapezoidal quadrature, and the weak pairing
//!   ∫ φ(x,|Δu|) Δu Δv.
//! - [`energy`]: the energy functional, its ε-smoothed variant and discrete
//!   gradient, the coercivity lower bound, and the small-t valley constants.
//! - [`minimize`]: valley scan, descent with Armijo backtracking and
//!   ε-continuation, and the λ-sweep driver.
//! - [`profiles`]: shared smooth test profiles (valley bump, residual basis,
//!   seeded random fields).
//! - [`cli`]: config-driven commands (`verify`, `solve`, `valley`, `sweep`,
//!   `norm`) producing JSON/CSV reports.

// `!(x > 0)` deliberately rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod energy;
pub mod error;
pub mod exponent;
pub mod field;
pub mod lebesgue;
pub mod minimize;
pub mod operator;
pub mod phi;
pub mod profiles;

pub use error::Error;
pub use field::{Grid, ScalarField};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
