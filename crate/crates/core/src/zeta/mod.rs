//! Riemann zeta-function engine: Euler-Maclaurin evaluation, gamma factors,
//! branch-tracked logarithms, Cauchy-quadrature derivatives, zero location
//! and Selberg's explicit formula.

mod branch;
mod gamma;
mod selberg;
mod zeros;

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub use branch::{
    default_radius, log_zeta_deriv, log_zeta_derivs, log_zeta_tracked, zeta_derivs, LogZetaDerivs,
};
pub use gamma::{hardy_theta, hardy_z, ln_chi, ln_gamma, ln_sin};
pub use selberg::{
    lambda_x, selberg_f, selberg_log_zeta, selberg_zeta_prime_over_zeta, trivial_series_envelope, SelbergSpec,
    SelbergValue,
};
pub use zeros::{
    balasubramanian_envelope, count_zeros, read_zeros_csv, riemann_von_mangoldt, write_zeros_csv, zero_ordinates,
    BalasubramanianEnvelope, ZeroCount,
};

/// Largest |Im s| the Euler-Maclaurin evaluator accepts.
pub const MAX_IM: f64 = 1e8;
/// Default absolute tolerance for [`zeta`].
pub const DEFAULT_TOL: f64 = 1e-13;

const BERNOULLI_TERMS: usize = 60;

/// B_{2k} / (2k)! for k = 1..=60, computed exactly once.
fn bernoulli_over_factorial() -> &'static [f64] {
    static CACHE: OnceLock<Vec<f64>> = OnceLock::new();
    CACHE.get_or_init(|| {
        let b = bernoulli_numbers(2 * BERNOULLI_TERMS);
        let mut fact = BigInt::from(1);
        let mut out = Vec::with_capacity(BERNOULLI_TERMS);
        for n in 1..=2 * BERNOULLI_TERMS {
            fact *= BigInt::from(n);
            if n % 2 == 0 {
                let q = &b[n] / BigRational::from_integer(fact.clone());
                out.push(q.to_f64().unwrap_or(0.0));
            }
        }
        out
    })
}

/// Exact Bernoulli numbers B_0..=B_n (Akiyama-Tanigawa).
pub fn bernoulli_numbers(n: usize) -> Vec<BigRational> {
    let mut a: Vec<BigRational> = Vec::with_capacity(n + 1);
    let mut out = Vec::with_capacity(n + 1);
    for m in 0..=n {
        a.push(BigRational::new(BigInt::from(1), BigInt::from(m + 1)));
        for j in (1..=m).rev() {
            let diff = &a[j - 1] - &a[j];
            a[j - 1] = diff * BigRational::from_integer(BigInt::from(j));
        }
        out.push(a[0].clone());
    }
    // Akiyama-Tanigawa yields B_1 = +1/2.
    if n >= 1 {
        out[1] = -out[1].clone();
    }
    debug_assert!(out.iter().skip(3).step_by(2).all(|b| b.is_zero()));
    out
}

/// B_{2k}/(2k)! for k >= 1.
pub(crate) fn b2k_over_fact(k: usize) -> f64 {
    bernoulli_over_factorial()[k - 1]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZetaEval {
    pub value: Complex64,
    pub est_error: f64,
    pub terms_used: usize,
}

/// Euler-Maclaurin pieces: zeta(s) = regular + head / (s - 1), where
/// head = N^(1-s).
struct EmParts {
    regular: Complex64,
    head: Complex64,
    bound: f64,
    terms: usize,
}

fn em_parts(s: Complex64, tol: f64) -> Result<EmParts> {
    if !s.re.is_finite() || !s.im.is_finite() {
        return invalid("zeta argument must be finite");
    }
    if s.im.abs() > MAX_IM {
        return invalid(format!("|Im s| = {} exceeds the supported range 1e8", s.im.abs()));
    }
    let mut n = (s.norm() / PI).ceil().max(10.0) as usize + 5;
    loop {
        if let Some(parts) = em_try(s, n, tol) {
            return Ok(parts);
        }
        if n > 400_000_000 {
            return Err(Error::ToleranceUnreachable(tol));
        }
        n *= 2;
    }
}

fn em_try(s: Complex64, n: usize, tol: f64) -> Option<EmParts> {
    let nf = n as f64;
    let mut regular = Complex64::new(0.0, 0.0);
    for m in 1..n {
        regular += (-s * (m as f64).ln()).exp();
    }
    let ln_n = nf.ln();
    let n_pow = (-s * ln_n).exp(); // N^-s
    regular += n_pow * 0.5;
    let head = n_pow * nf;

    // T_k = B_2k/(2k)! * s(s+1)...(s+2k-2) * N^(-s-2k+1)
    let mut rising = s; // s (s+1) ... (s+2k-2)
    let mut npow = n_pow / nf; // N^(-s-2k+1) at k = 1
    let inv_n2 = 1.0 / (nf * nf);
    let mut prev_bound = f64::INFINITY;
    for k in 1..=BERNOULLI_TERMS {
        let term = rising * npow * b2k_over_fact(k);
        regular += term;
        // remainder after k terms: |T_{k+1}| |s+2k+1| / (sigma+2k+1)
        let next_rising = rising * (s + (2 * k - 1) as f64) * (s + (2 * k) as f64);
        let next_bound = if k < BERNOULLI_TERMS {
            let sig = s.re + (2 * k + 1) as f64;
            let t_next = next_rising.norm() * npow.norm() * inv_n2 * b2k_over_fact(k + 1).abs();
            if sig > 0.0 {
                t_next * (s + (2 * k + 1) as f64).norm() / sig
            } else {
                f64::INFINITY
            }
        } else {
            f64::INFINITY
        };
        if next_bound <= tol || rising.norm() == 0.0 {
            return Some(EmParts {
                regular,
                head,
                bound: if rising.norm() == 0.0 { 0.0 } else { next_bound },
                terms: n + k,
            });
        }
        if next_bound > prev_bound {
            return None;
        }
        prev_bound = next_bound;
        rising = next_rising;
        npow *= inv_n2;
    }
    None
}

/// zeta(s) by Euler-Maclaurin summation with error bound below `tol`.
pub fn zeta(s: Complex64, tol: f64) -> Result<ZetaEval> {
    if s == Complex64::new(1.0, 0.0) {
        return Err(Error::PoleAt1);
    }
    let parts = em_parts(s, tol)?;
    Ok(ZetaEval {
        value: parts.regular + parts.head / (s - 1.0),
        est_error: parts.bound,
        terms_used: parts.terms,
    })
}

/// zeta(s) at the default tolerance, value only.
pub fn zeta_value(s: Complex64) -> Result<Complex64> {
    zeta(s, DEFAULT_TOL).map(|e| e.value)
}

/// The entire function (s - 1) zeta(s); equals 1 at s = 1.
pub fn zeta_entire(s: Complex64) -> Result<Complex64> {
    let parts = em_parts(s, DEFAULT_TOL)?;
    Ok(parts.regular * (s - 1.0) + parts.head)
}
