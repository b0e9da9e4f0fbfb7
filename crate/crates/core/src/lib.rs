//! Exact partition functions of the Ω=1/3 gauge matrix model on R³_λ,
//! level by level over its fuzzy-sphere decomposition, with independent
//! brute-force oracles for every analytic step.
//!
//! R³_λ is the direct sum of all matrix algebras M_{2j+1}(ℂ) (fuzzy spheres,
//! j ∈ ℕ/2). The gauge-fixed action decouples into one quartic complex matrix
//! model per level j, whose partition function has the closed determinant form
//!
//! ```text
//! Z_j = N^j(g²) · (2j+1)! · det[ f(ω_m + ω_n) ] / Δ(ω)²
//! f(ω) = ∫₀^∞ exp(−A t² − B ω t) dt,   A = 64 w/3g²,  B = 2 w/g²,
//! w = 8πλ³(2j+1),   N^j = (∏_{k=1}^{2j} k!)² (2w/g²)^{−2j(2j+1)},
//! ```
//!
//! where ω are the eigenvalues of the level-j kinetic matrix and Δ is the
//! Vandermonde product. Everything is evaluated in log-domain
//! ([`LogNumber`]), degenerate spectra are handled by confluent limits, and
//! each formula is cross-checked by quadrature and Monte Carlo oracles.
//!
//! Module map:
//! - [`fuzzy_algebra`]: coordinates, trace, derivations and curvature of one
//!   fuzzy-sphere level, plus the identities the rest of the crate relies on.
//! - [`kinetic`]: the 4-index quadratic kernel at general Ω and the radial
//!   (2j+1)-eigenvalue spectrum fed to the exact engine at Ω=1/3.
//! - [`exact_partition`]: the determinant-ratio engine (log-domain Cholesky /
//!   LU, scaled complementary error function, confluent limits).
//! - [`oracle`]: independent validators (adaptive and tensor quadrature,
//!   Haar-unitary Monte Carlo for the unitary-group integral, permutation
//!   expansion of the determinant identity, full matrix-integral Monte Carlo).
//! - [`toda`]: source-coupled partition function, lattice time variables and
//!   the condensate ⟨tr Φ†Φ⟩.
//! - [`resummation`]: partial sums of ln Z_j over levels with tail
//!   diagnostics (no convergence claim is made).

// Deliberate idioms: reference constants keep every digit of their source
// computation, `!(x > t)` guards treat NaN as out of range, index loops
// mirror the matrix formulas, and the double-double scalar names its
// inherent arithmetic after the operations it implements.
#![allow(clippy::excessive_precision)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]
#![allow(clippy::should_implement_trait)]
#![allow(clippy::suspicious_arithmetic_impl)]

pub mod error;
pub mod exact_partition;
pub mod fuzzy_algebra;
pub mod kinetic;
pub mod oracle;
pub mod resummation;
pub mod toda;

pub use error::{Error, Result};
pub use exact_partition::{
    DegeneracyPolicy, KernelParams, LogNumber, PartitionResult,
};
pub use fuzzy_algebra::{CoordinateSet, HalfInt, LevelMatrix, ModelParams};
pub use kinetic::{QuadraticKernel, Spectrum};
pub use oracle::{MCEstimate, QuadratureSpec};
