//! Executable numerics for effective Omega-results and weak universality of
//! the Riemann zeta-function in short intervals.
//!
//! The crate is organised bottom-up:
//!
//! * [`primes`]: segmented sieve, short-interval counts, dyadic prime blocks
//! * [`phases`]: phase assignments, truncated Euler products and their log-derivatives
//! * [`omega`]: construction of a phase point whose log-Euler-product derivatives hit targets
//! * [`mollifier`]: the smooth bump, its Fourier data and curve averages on the prime torus
//! * [`curve`]: the Kronecker curve t -> (t log p / 2 pi)_p and Weyl integrals
//! * [`zeta`]: zeta evaluation, branch-tracked log zeta, zero location, Selberg's formula
//! * [`scan`]: searching [T, T+H] for shifts meeting derivative inequality systems
//! * [`universality`]: the Taylor-matching weak universality pipeline

pub mod curve;
pub mod dd;
pub mod error;
pub mod mollifier;
pub mod omega;
pub mod phases;
pub mod primes;
pub mod quad;
pub mod scan;
pub mod universality;
pub mod zeta;

pub use error::{Error, Result};
pub use num_complex::Complex64;
