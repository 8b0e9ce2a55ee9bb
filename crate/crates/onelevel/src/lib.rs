//! Numerical laboratory for the one-level density of low-lying zeros in
//! families of quadratic twists.
//!
//! The crate computes the prime-sum side of the explicit formula for twisted
//! automorphic L-functions, averages it over fundamental-discriminant-like
//! families `8d` with `d` odd and square-free, and compares the result against
//! the symplectic random-matrix prediction. A separate subsystem validates the
//! smoothed character-sum machinery (Mellin transforms, Gauss sums, Poisson
//! duality) that underlies the error analysis.
//!
//! Module map:
//! - [`arith`]: sieves, Mobius/square-free tables, Kronecker symbols, and the
//!   square-divisor split `mz_rz`.
//! - [`coeffs`]: Hecke eigenvalue providers (trivial, degree 2, symmetric
//!   square) backed by an exact Ramanujan tau table.
//! - [`testfn`]: even test-function pairs with compactly supported Fourier
//!   transforms, plus smooth compactly supported weights.
//! - [`explicit`]: the explicit-formula prime sums for a single twist.
//! - [`poisson`]: contour-integral kernels, Gauss sums, and Poisson-dualized
//!   character sums.
//! - [`density`]: family averages, random-matrix comparison, and the
//!   square-free split verification paths.
//!
//! Analytic routines are generic over the scalar type through [`Real`];
//! [`Scalar`] fixes the default precision used by the command-line driver.

pub mod arith;
pub mod coeffs;
pub mod density;
pub mod explicit;
mod gamma;
pub mod poisson;
pub mod quad;
pub mod sum;
pub mod testfn;

mod error;
mod real;

pub use error::{Error, Result};
pub use real::Real;

/// Default scalar type used by the CLI and the acceptance checks.
pub type Scalar = f64;

/// Complex counterpart of [`Scalar`].
pub type ComplexScalar = num_complex::Complex<Scalar>;
