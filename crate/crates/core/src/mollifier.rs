//! The smooth bump, its periodized delta-scaling, the product mollifier
//! L_Q(theta) = prod_{p <= Q} lambda_delta(theta_p), its Fourier data and its
//! average along the Kronecker curve.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{coordinate, frequency};
use crate::error::{invalid, Error, Result};
use crate::omega::LogScaled;
use crate::phases::PhaseAssignment;
use crate::primes::{primes_up_to, PrimeTable};
use crate::quad::{adaptive, pairwise_sum};
use crate::scan::ScanWindow;

fn raw_bump(x: f64) -> f64 {
    if x.abs() < 1.0 {
        (-1.0 / (1.0 - x * x)).exp()
    } else {
        0.0
    }
}

/// 1 / integral of exp(-1/(1-x^2)) over (-1, 1).
pub fn bump_normalizer() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| {
        let c = 1.0 / adaptive(-1.0, 1.0, 1e-15, raw_bump).value;
        // the bump must also stay below 1
        assert!(c * (-1f64).exp() <= 1.0);
        c
    })
}

/// Normalized bump: unit mass, support [-1, 1], maximum c/e < 1.
pub fn bump(x: f64) -> f64 {
    bump_normalizer() * raw_bump(x)
}

/// Shape used inside the mollifier. `Constant` replaces every factor by 1
/// and exists to check the averaging machinery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    #[default]
    Bump,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MollifierSpec {
    pub delta: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub normalization: f64,
    #[serde(default)]
    pub profile: Profile,
}

impl MollifierSpec {
    /// delta defaults to 1/Q.
    pub fn new(q: f64, m: usize, delta: Option<f64>) -> Result<Self> {
        let spec = Self {
            delta: delta.unwrap_or(1.0 / q),
            q,
            m,
            normalization: bump_normalizer(),
            profile: Profile::Bump,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return invalid(format!("delta must lie in (0,1/2), got {}", self.delta));
        }
        if !(self.q >= 2.0 && self.q.is_finite()) {
            return invalid(format!("Q must be at least 2, got {}", self.q));
        }
        if self.m == 0 {
            return invalid("Fourier cutoff M must be positive");
        }
        Ok(())
    }

    /// lambda_delta(theta) = lambda(theta/delta)/delta, periodized with period 1.
    pub fn scaled(&self, theta: f64) -> f64 {
        match self.profile {
            Profile::Constant => 1.0,
            Profile::Bump => {
                let u = theta - theta.round();
                bump(u / self.delta) / self.delta
            }
        }
    }

    pub fn primes(&self) -> PrimeTable {
        primes_up_to(self.q.floor() as u64)
    }
}

pub fn l_q(theta: &PhaseAssignment, spec: &MollifierSpec, table: &PrimeTable) -> f64 {
    table
        .primes()
        .iter()
        .take_while(|&&p| p as f64 <= spec.q)
        .map(|&p| spec.scaled(theta.get(p)))
        .product()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierData {
    pub delta: f64,
    /// alpha_n for n = -M..=M, stored at index n + M
    pub alpha: Vec<Complex64>,
    /// max over 1 <= n <= M of |alpha_n| n^2 delta^3
    pub decay_constant: f64,
    /// max over 1 <= n <= M of |alpha_n| n^2 delta^2
    pub decay_constant_delta2: f64,
    /// sum_{|n| > M} |alpha_n| <= 2 C delta^{-3} / M with C the decay constant
    pub tail_envelope: f64,
    /// (sum_{|n| <= M} |alpha_n|)^{pi(Q)}
    pub beta_norm: f64,
    pub quadrature_error: f64,
}

impl FourierData {
    pub fn m(&self) -> usize {
        (self.alpha.len() - 1) / 2
    }

    pub fn alpha(&self, n: i64) -> Complex64 {
        self.alpha[(n + self.m() as i64) as usize]
    }

    /// sum_{|n| <= M} alpha_n e^{2 pi i n theta}
    pub fn reconstruct(&self, theta: f64) -> f64 {
        let m = self.m() as i64;
        (-m..=m)
            .map(|n| (self.alpha(n) * Complex64::from_polar(1.0, 2.0 * PI * n as f64 * theta)).re)
            .sum()
    }
}

const FOURIER_TOL: f64 = 1e-10;

/// alpha_n = integral over [-1/2, 1/2] of lambda_delta(theta) e^{-2 pi i n theta},
/// which after theta = delta x is the integral of lambda(x) e^{-2 pi i n delta x} over [-1, 1].
pub fn fourier_coeffs(spec: &MollifierSpec) -> Result<FourierData> {
    spec.validate()?;
    let m = spec.m as i64;
    let d = spec.delta;
    let computed: Vec<(Complex64, f64)> = (0..=m)
        .into_par_iter()
        .map(|n| {
            let w = 2.0 * PI * n as f64 * d;
            let re = adaptive(-1.0, 1.0, 1e-14, |x| bump(x) * (w * x).cos());
            let im = adaptive(-1.0, 1.0, 1e-14, |x| -bump(x) * (w * x).sin());
            (Complex64::new(re.value, im.value), re.error + im.error)
        })
        .collect();
    let quadrature_error = computed.iter().map(|c| c.1).fold(0.0, f64::max);
    if quadrature_error > FOURIER_TOL {
        return Err(Error::QuadratureFailure(quadrature_error));
    }
    if (computed[0].0.re - 1.0).abs() > FOURIER_TOL {
        return Err(Error::QuadratureFailure((computed[0].0.re - 1.0).abs()));
    }
    let mut alpha = Vec::with_capacity(2 * spec.m + 1);
    for n in (1..=m as usize).rev() {
        alpha.push(computed[n].0.conj());
    }
    alpha.extend(computed.iter().map(|c| c.0));
    let scaled = |pow: i32| {
        (1..=m as usize)
            .map(|n| computed[n].0.norm() * (n * n) as f64 * d.powi(pow))
            .fold(0.0, f64::max)
    };
    let decay_constant = scaled(3);
    let l1: f64 = alpha.iter().map(|a| a.norm()).sum();
    let pi_q = spec.primes().count_up_to(spec.q.floor() as u64) as i32;
    Ok(FourierData {
        delta: d,
        alpha,
        decay_constant,
        decay_constant_delta2: scaled(2),
        tail_envelope: 2.0 * decay_constant / (d.powi(3) * m as f64),
        beta_norm: l1.powi(pi_q),
        quadrature_error,
    })
}

/// CSV rows `n,re,im` for n = -M..=M.
pub fn write_fourier_csv<W: Write>(mut w: W, data: &FourierData) -> std::io::Result<()> {
    writeln!(w, "n,re,im")?;
    let m = data.m() as i64;
    for n in -m..=m {
        let a = data.alpha(n);
        writeln!(w, "{n},{},{}", a.re, a.im)?;
    }
    Ok(())
}

/// Remainder envelope Q exp(3 pi(Q) log(1/delta)) / (M log Q) of the
/// truncated expansion of L_Q, in log scale.
pub fn truncation_remainder(spec: &MollifierSpec, table: &PrimeTable) -> Result<LogScaled> {
    spec.validate()?;
    if (table.limit() as f64) < spec.q.floor() {
        return invalid(format!("prime table stops at {}, need Q = {}", table.limit(), spec.q));
    }
    let pi_q = table.count_up_to(spec.q.floor() as u64) as f64;
    let ln = spec.q.ln() + 3.0 * pi_q * (1.0 / spec.delta).ln() - (spec.m as f64).ln() - spec.q.ln().ln();
    Ok(LogScaled { ln })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveMean {
    pub mean: f64,
    pub deviation: f64,
    pub quadrature_error: f64,
}

/// Most coordinates the curve average accepts.
pub const MAX_CURVE_PRIMES: usize = 6;
const CURVE_TOL: f64 = 1e-6;

/// (1/H) times the integral of L_Q(gamma(t) - theta) over [T, T+H].
///
/// The window is cut into panels no longer than a quarter of the shortest
/// bump crossing time, each integrated adaptively; panels are summed pairwise.
pub fn mean_over_curve(spec: &MollifierSpec, window: &ScanWindow, theta: &PhaseAssignment) -> Result<CurveMean> {
    spec.validate()?;
    let table = spec.primes();
    if table.len() > MAX_CURVE_PRIMES {
        return invalid(format!(
            "curve averages take at most {MAX_CURVE_PRIMES} primes, Q = {} has {}",
            spec.q,
            table.len()
        ));
    }
    let coords: Vec<_> = table
        .primes()
        .iter()
        .map(|&p| (frequency(p), theta.get(p)))
        .collect();
    let integrand = |t: f64| -> f64 {
        coords
            .iter()
            .map(|&(f, th)| spec.scaled(coordinate(t, f) - th))
            .product()
    };
    let p_max = table.primes().last().copied().unwrap_or(2) as f64;
    let crossing = 2.0 * spec.delta * 2.0 * PI / p_max.ln();
    let panels = ((window.h / (0.25 * crossing)).ceil() as usize).max(1);
    let width = window.h / panels as f64;
    let tol = CURVE_TOL * 0.1 * width;
    let parts: Vec<(f64, f64)> = (0..panels)
        .into_par_iter()
        .map(|i| {
            let a = window.t + i as f64 * width;
            let r = adaptive(a, a + width, tol, integrand);
            (r.value, r.error)
        })
        .collect();
    let values: Vec<f64> = parts.iter().map(|p| p.0).collect();
    let errors: Vec<f64> = parts.iter().map(|p| p.1).collect();
    let mean = pairwise_sum(&values) / window.h;
    let quadrature_error = pairwise_sum(&errors) / window.h;
    if quadrature_error > CURVE_TOL {
        return Err(Error::QuadratureFailure(quadrature_error));
    }
    Ok(CurveMean {
        mean,
        deviation: (mean - 1.0).abs(),
        quadrature_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scan::DEFAULT_NU;

    #[test]
    fn bump_basics() {
        assert_eq!(bump(1.0), 0.0);
        assert_eq!(bump(-1.0), 0.0);
        let mass = adaptive(-1.0, 1.0, 1e-14, bump).value;
        assert!((mass - 1.0).abs() < 1e-10);
        // independent normalizer: midpoint rule, which converges faster than
        // any power for a function whose derivatives all vanish at the ends
        let n = 200_000;
        let h = 2.0 / n as f64;
        let mid: f64 = (0..n).map(|i| raw_bump(-1.0 + (i as f64 + 0.5) * h)).sum::<f64>() * h;
        assert!((bump_normalizer() - 1.0 / mid).abs() < 1e-12);
        assert!((mid - 0.443_994).abs() < 1e-6);
        let peak = bump(0.0);
        assert!((peak - bump_normalizer() / std::f64::consts::E).abs() < 1e-15);
        assert!(peak <= 1.0 && (peak - 0.8286).abs() < 1e-4);
    }

    #[test]
    fn fourier_basics() {
        let spec = MollifierSpec::new(4.0, 40, Some(0.25)).unwrap();
        let f = fourier_coeffs(&spec).unwrap();
        assert!((f.alpha(0).re - 1.0).abs() < 1e-10);
        for n in 1..=40 {
            assert_eq!(f.alpha(n), f.alpha(-n).conj());
            assert!(f.alpha(n).im.abs() < 1e-12);
        }
        // oracle: midpoint rule with doubled node count on the periodic form
        let oracle = |nodes: usize| -> f64 {
            let h = 1.0 / nodes as f64;
            (0..nodes)
                .map(|i| {
                    let th = -0.5 + (i as f64 + 0.5) * h;
                    spec.scaled(th) * (2.0 * PI * th).cos()
                })
                .sum::<f64>()
                * h
        };
        let (a, b) = (oracle(100_000), oracle(200_000));
        assert!((a - b).abs() < 1e-13);
        assert!((f.alpha(1).re - b).abs() < 1e-11, "{} vs {b}", f.alpha(1).re);
    }

    #[test]
    fn reconstruction_within_tail() {
        let spec = MollifierSpec::new(8.0, 200, Some(0.125)).unwrap();
        let f = fourier_coeffs(&spec).unwrap();
        for i in 0..50 {
            let th = -0.5 + i as f64 / 50.0;
            let err = (f.reconstruct(th) - spec.scaled(th)).abs();
            assert!(err <= f.tail_envelope, "theta {th}: {err} > {}", f.tail_envelope);
        }
    }

    #[test]
    fn mollifier_product() {
        let spec = MollifierSpec::new(7.0, 10, Some(0.2)).unwrap();
        let table = primes_up_to(7);
        let zero = PhaseAssignment::new();
        let want = (bump(0.0) / 0.2).powi(4);
        assert!((l_q(&zero, &spec, &table) - want).abs() < 1e-12 * want);
        let mut th = PhaseAssignment::new();
        th.set(5, 0.5);
        assert_eq!(l_q(&th, &spec, &table), 0.0);
        let mut a = PhaseAssignment::new();
        a.set(3, 0.1);
        // periodic in each coordinate: the stored phase is reduced
        let mut b = PhaseAssignment::new();
        b.set(3, 1.1);
        assert!((l_q(&a, &spec, &table) - l_q(&b, &spec, &table)).abs() < 1e-12);
        // support: positive only if every coordinate is within delta of an integer
        let mut c = PhaseAssignment::new();
        c.set(2, 0.19);
        assert!(l_q(&c, &spec, &table) > 0.0);
        c.set(2, 0.21);
        assert_eq!(l_q(&c, &spec, &table), 0.0);
    }

    #[test]
    fn remainder_envelope() {
        let table = primes_up_to(100);
        let spec = MollifierSpec::new(3.0, 100, Some(1.0 / 3.0)).unwrap();
        let r = truncation_remainder(&spec, &table).unwrap().value().unwrap();
        assert!((r - 3.0 * 729.0 / (100.0 * 3f64.ln())).abs() < 1e-9);
        assert!((r - 19.91).abs() < 0.01);
        let big = MollifierSpec::new(3.0, 1_000_000_000, Some(1.0 / 3.0)).unwrap();
        assert!(truncation_remainder(&big, &table).unwrap().value().unwrap() < r * 1e-6);
        let spec = MollifierSpec::new(29.0, 1_000_000, None).unwrap();
        let ln = truncation_remainder(&spec, &table).unwrap().ln;
        let want = 29f64.ln() + 30.0 * 29f64.ln() - 1e6f64.ln() - 29f64.ln().ln();
        assert!((ln - want).abs() < 1e-12);
    }

    #[test]
    fn constant_profile_mean_is_one() {
        let mut spec = MollifierSpec::new(3.0, 10, Some(1.0 / 3.0)).unwrap();
        spec.profile = Profile::Constant;
        let w = ScanWindow::new(1e4, 500.0, 0.1).unwrap();
        let m = mean_over_curve(&spec, &w, &PhaseAssignment::new()).unwrap();
        assert!(m.deviation < 1e-12, "{}", m.deviation);
    }

    #[test]
    fn too_many_primes_rejected() {
        let spec = MollifierSpec::new(17.0, 10, None).unwrap();
        let w = ScanWindow::relaxed(1e4, 50.0, DEFAULT_NU, None, 0.1).unwrap();
        assert!(mean_over_curve(&spec, &w, &PhaseAssignment::new()).is_err());
    }
}
