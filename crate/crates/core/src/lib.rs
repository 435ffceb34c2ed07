//! Numerics for the Szegő polynomials on the unit circle and the four-parameter
//! biorthogonal rational functions `r_n`, `s_n`, together with their ladder
//! operators.
//!
//! Arithmetic is double-precision complex, except that terminating basic
//! hypergeometric series are accumulated in double-double precision, because
//! their terms can exceed their sum by many orders of magnitude. Identities are certified
//! numerically: each `*_check` function evaluates both sides of an identity on a
//! [`CircleGrid`] (or sums both sides of a series identity) and returns an
//! [`IdentityReport`] carrying the residual and the tolerance it was judged
//! against.
//!
//! Module map:
//!
//! - [`qcore`]: q-shifted factorials, basic hypergeometric series, theta sums
//! - [`circle`]: unit-circle quadrature, Laurent polynomials, `D_q` and its adjoint `T_q`
//! - [`szego`]: `H_n(z|q)`, the weight `w_c(z|q)`, ladder/Rodrigues/Sturm–Liouville checks
//! - [`biortho`]: `r_n`, `s_n`, their weight and total mass, ladder operators, the
//!   Sears transformation and the `I_{m,n}` recursion
//! - [`qsl`]: a generic q-Sturm–Liouville operator with pluggable coefficient and weight
//! - [`suite`]: configurable verification suites producing JSON/CSV/text reports

pub mod biortho;
pub mod circle;
mod error;
pub mod qcore;
pub mod qsl;
mod report;
pub mod suite;
pub mod szego;

pub use circle::{CircleGrid, LaurentPoly};
pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use qcore::QParam;
pub use report::{GramTable, IdentityReport};

/// Default tolerance for purely algebraic identities.
pub const ALGEBRAIC_TOL: f64 = 1e-12;
/// Default tolerance for quadrature-backed identities.
pub const QUADRATURE_TOL: f64 = 1e-10;
/// Default number of quadrature nodes.
pub const DEFAULT_GRID: usize = 256;
