use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::branch::{default_radius, log_zeta_tracked, zeta_derivs};
use crate::error::{invalid, Error, Result};
use crate::primes::{von_mangoldt, von_mangoldt_table};
use crate::quad::adaptive_complex;

/// Ordinates must extend this far above |Im s|.
pub const ZERO_WINDOW: f64 = 50.0;
/// Length of the integration segment [s, s + 10].
const SHIFT: f64 = 10.0;

/// Selberg's damped von Mangoldt weight.
pub fn lambda_x(n: u64, x: f64) -> f64 {
    lambda_x_with(n, x, von_mangoldt(n))
}

fn lambda_x_with(n: u64, x: f64, big_lambda: f64) -> f64 {
    let nf = n as f64;
    if nf < x {
        big_lambda
    } else if nf <= x * x {
        big_lambda * (x * x / nf).ln() / x.ln()
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelbergSpec {
    pub x: f64,
    /// positive ordinates gamma of zeros 1/2 + i gamma, ascending
    pub zeros: Vec<f64>,
    /// trivial-zero cutoff; derived from x and Re s when None
    pub q_max: Option<usize>,
}

impl SelbergSpec {
    pub fn new(x: f64, zeros: Vec<f64>) -> Result<Self> {
        if !(x > 2.0) || !x.is_finite() {
            return invalid(format!("Selberg parameter x must exceed 2, got {x}"));
        }
        if zeros.windows(2).any(|w| w[1] < w[0]) || zeros.iter().any(|&g| !(g > 0.0)) {
            return invalid("zero ordinates must be positive and ascending");
        }
        Ok(Self { x, zeros, q_max: None })
    }

    fn covered(&self) -> f64 {
        self.zeros.last().copied().unwrap_or(0.0)
    }

    fn check_coverage(&self, s: Complex64) -> Result<()> {
        let needed = s.im.abs() + ZERO_WINDOW;
        if self.covered() < needed {
            return Err(Error::InsufficientZeros {
                covered: self.covered(),
                needed,
            });
        }
        Ok(())
    }

    /// smallest q with x^(-2q - Re s) < 1e-16
    fn q_cutoff(&self, sigma: f64) -> usize {
        self.q_max.unwrap_or_else(|| {
            let lx = self.x.ln();
            let q = ((16.0 * std::f64::consts::LN_10 / lx - sigma) / 2.0).ceil();
            q.max(1.0) as usize
        })
    }

    /// Nontrivial zeros 1/2 + i gamma together with their conjugates.
    fn rhos(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.zeros
            .iter()
            .flat_map(|&g| [Complex64::new(0.5, g), Complex64::new(0.5, -g)])
    }
}

/// Explicit-formula value split by term, with the residual against direct evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelbergValue {
    pub value: Complex64,
    pub direct: Complex64,
    pub residual: f64,
    pub dirichlet: Complex64,
    pub pole: Complex64,
    pub trivial: Complex64,
    pub zeros: Complex64,
}

/// Bound for the trivial-zero series at abscissa sigma:
/// x^{-2-sigma}/(1-x^{-2}) + x^{-4-2sigma}/(1-x^{-4}).
pub fn trivial_series_envelope(sigma: f64, x: f64) -> f64 {
    x.powf(-2.0 - sigma) / (1.0 - x.powi(-2)) + x.powf(-4.0 - 2.0 * sigma) / (1.0 - x.powi(-4))
}

fn xpow(x_ln: f64, e: Complex64) -> Complex64 {
    (e * x_ln).exp()
}

/// zeta'/zeta(s) from Selberg's explicit formula, using all supplied zeros.
pub fn selberg_zeta_prime_over_zeta(s: Complex64, spec: &SelbergSpec) -> Result<SelbergValue> {
    spec.check_coverage(s)?;
    if (s - 1.0).norm() < 1e-12 {
        return Err(Error::PoleAt1);
    }
    let x = spec.x;
    let lx = x.ln();
    let n_max = (x * x).floor() as usize;
    let lam = von_mangoldt_table(n_max);

    let mut dirichlet = Complex64::new(0.0, 0.0);
    for (n, &l) in lam.iter().enumerate().skip(2) {
        if l != 0.0 {
            let w = lambda_x_with(n as u64, x, l);
            dirichlet -= (-s * (n as f64).ln()).exp() * w;
        }
    }
    let one_minus = 1.0 - s;
    let pole = (xpow(lx, 2.0 * one_minus) - xpow(lx, one_minus)) / (one_minus * one_minus * lx);

    let mut trivial = Complex64::new(0.0, 0.0);
    for q in 1..=spec.q_cutoff(s.re) {
        let a = 2.0 * q as f64 + s;
        trivial += (xpow(lx, -a) - xpow(lx, -2.0 * a)) / (a * a);
    }
    trivial /= lx;

    let mut zeros = Complex64::new(0.0, 0.0);
    for rho in spec.rhos() {
        let d = rho - s;
        zeros += (xpow(lx, d) - xpow(lx, 2.0 * d)) / (d * d);
    }
    zeros /= lx;

    let value = dirichlet + pole + trivial + zeros;
    let radius = if s.re > 0.5 { default_radius(s.re).max(0.05).min(0.25) } else { 0.05 };
    let d = zeta_derivs(2, s, radius)?;
    let direct = d[1] / d[0];
    Ok(SelbergValue {
        value,
        direct,
        residual: (value - direct).norm(),
        dirichlet,
        pole,
        trivial,
        zeros,
    })
}

/// F(s, z) = integral from s + 10 to s of (x^{z-w} - x^{2(z-w)}) / (w - z)^2 dw
/// along the horizontal segment.
pub fn selberg_f(s: Complex64, z: Complex64, x: f64) -> Result<Complex64> {
    let lx = x.ln();
    // the segment must stay clear of z
    let nearest = if z.re >= s.re && z.re <= s.re + SHIFT {
        (z.im - s.im).abs()
    } else {
        (z - s).norm().min((z - s - SHIFT).norm())
    };
    if nearest < 1e-6 {
        return Err(Error::PathThroughZero { re: z.re, im: z.im });
    }
    let integrand = |u: f64| {
        let w = s + u;
        let d = z - w;
        (xpow(lx, d) - xpow(lx, 2.0 * d)) / ((w - z) * (w - z))
    };
    let r = adaptive_complex(0.0, SHIFT, 1e-15, integrand);
    // the segment runs from s + 10 down to s
    Ok(-r.value)
}

/// log zeta(s) from the integrated explicit formula.
pub fn selberg_log_zeta(s: Complex64, spec: &SelbergSpec) -> Result<SelbergValue> {
    spec.check_coverage(s)?;
    let x = spec.x;
    let lx = x.ln();
    let sigma = s.re;
    // terms beyond n_max contribute < 1e-12 since they decay like n^{-sigma-10}
    let tail_n = (1e12 / (sigma + 9.0)).powf(1.0 / (sigma + 9.0));
    let n_max = (x * x).max(tail_n).ceil() as usize;
    let lam = von_mangoldt_table(n_max);

    let mut dirichlet = Complex64::new(0.0, 0.0);
    for (n, &l) in lam.iter().enumerate().skip(2) {
        if l == 0.0 {
            continue;
        }
        let nf = n as f64;
        let ln_n = nf.ln();
        let w = lambda_x_with(n as u64, x, l);
        if w != 0.0 {
            dirichlet += (-s * ln_n).exp() * (w / ln_n);
        }
        if nf >= x {
            dirichlet += (-(s + SHIFT) * ln_n).exp() * ((l - w) / ln_n);
        }
    }

    let pole = -selberg_f(s, Complex64::new(1.0, 0.0), x)? / lx;
    let mut trivial = Complex64::new(0.0, 0.0);
    for q in 1..=spec.q_cutoff(sigma) {
        trivial += selberg_f(s, Complex64::new(-2.0 * q as f64, 0.0), x)?;
    }
    trivial /= lx;
    let mut zeros = Complex64::new(0.0, 0.0);
    for rho in spec.rhos() {
        zeros += selberg_f(s, rho, x)?;
    }
    zeros /= lx;

    let value = dirichlet + pole + trivial + zeros;
    let direct = log_zeta_tracked(s.re, s.im)?;
    Ok(SelbergValue {
        value,
        direct,
        residual: (value - direct).norm(),
        dirichlet,
        pole,
        trivial,
        zeros,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_x_examples() {
        assert!((lambda_x(8, 4.0) - 2f64.ln() / 2.0).abs() < 1e-15);
        assert_eq!(lambda_x(16, 4.0), 0.0);
        assert_eq!(lambda_x(6, 10.0), 0.0);
        assert!((lambda_x(3, 10.0) - 3f64.ln()).abs() < 1e-15);
        assert_eq!(lambda_x(17, 4.0), 0.0);
    }

    #[test]
    fn coverage_is_enforced() {
        let spec = SelbergSpec::new(10.0, vec![14.134_725]).unwrap();
        let err = selberg_zeta_prime_over_zeta(Complex64::new(2.0, 50.0), &spec).unwrap_err();
        assert!(matches!(err, Error::InsufficientZeros { .. }));
        assert!(SelbergSpec::new(2.0, vec![]).is_err());
    }

    #[test]
    fn f_far_left_is_below_envelope() {
        let s = Complex64::new(3.0, 0.0);
        let x: f64 = 20.0;
        for q in [5usize, 10, 20] {
            let z = Complex64::new(-2.0 * q as f64, 0.0);
            let f = selberg_f(s, z, x).unwrap();
            let a = 2.0 * q as f64 + s.re;
            let bound = SHIFT * (x.powf(-a) + x.powf(-2.0 * a)) / (a * a);
            assert!(f.norm() <= bound, "q = {q}: {} > {bound}", f.norm());
        }
    }
}
