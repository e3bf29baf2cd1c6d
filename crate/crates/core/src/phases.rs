//! Phase assignments on primes, the linear proxy phi_P(s, theta) and
//! derivatives of log zeta_P(s, theta), where
//! zeta_P(s, theta) = prod_{p in P} (1 - e^{-2 pi i theta_p} p^{-s})^{-1}.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::primes::PrimeTable;

/// Phases theta_p in turns, reduced to [0, 1). Unassigned primes have phase 0.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<PhaseRecord>", into = "Vec<PhaseRecord>")]
pub struct PhaseAssignment {
    entries: BTreeMap<u64, f64>,
}

/// Serialized form of one assignment entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub prime: u64,
    pub theta: f64,
}

impl From<Vec<PhaseRecord>> for PhaseAssignment {
    fn from(v: Vec<PhaseRecord>) -> Self {
        let mut out = Self::new();
        for r in v {
            out.set(r.prime, r.theta);
        }
        out
    }
}

impl From<PhaseAssignment> for Vec<PhaseRecord> {
    fn from(a: PhaseAssignment) -> Self {
        a.entries
            .into_iter()
            .map(|(prime, theta)| PhaseRecord { prime, theta })
            .collect()
    }
}

/// Reduce a phase to [0, 1).
pub fn reduce_turn(theta: f64) -> f64 {
    let r = theta.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

impl PhaseAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, p: u64, theta: f64) {
        self.entries.insert(p, reduce_turn(theta));
    }

    pub fn get(&self, p: u64) -> f64 {
        self.entries.get(&p).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.entries.iter().map(|(&p, &t)| (p, t))
    }

    /// Same assignment with every phase negated.
    pub fn negated(&self) -> Self {
        let mut out = Self::new();
        for (p, t) in self.iter() {
            out.set(p, -t);
        }
        out
    }

    /// e^{-2 pi i theta_p}
    pub fn twist(&self, p: u64) -> Complex64 {
        Complex64::from_polar(1.0, -2.0 * PI * self.get(p))
    }
}

/// The alternating point (0, 1/2, 0, 1/2, ...) on the primes of `table`.
pub fn theta_alternating(table: &PrimeTable) -> PhaseAssignment {
    let mut out = PhaseAssignment::new();
    for (i, &p) in table.primes().iter().enumerate() {
        out.set(p, if i % 2 == 0 { 0.0 } else { 0.5 });
    }
    out
}

/// phi_P(s, theta) = sum_{p in P} e^{-2 pi i theta_p} p^{-s}
pub fn phi(primes: &[u64], s: Complex64, theta: &PhaseAssignment) -> Complex64 {
    primes
        .iter()
        .map(|&p| theta.twist(p) * (-s * (p as f64).ln()).exp())
        .sum()
}

/// d^k/ds^k phi_P(s, theta) at s = sigma0.
pub fn phi_deriv(primes: &[u64], k: usize, sigma0: f64, theta: &PhaseAssignment) -> Complex64 {
    primes
        .iter()
        .map(|&p| {
            let lp = (p as f64).ln();
            theta.twist(p) * ((-lp).powi(k as i32) * (p as f64).powf(-sigma0))
        })
        .sum()
}

/// Order k and abscissa of a log-Euler-product derivative, with the depth of
/// the prime-power expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogDerivSpec {
    pub k: usize,
    pub sigma0: f64,
    pub ell_max: usize,
}

const ELL_TOL: f64 = 1e-14;
const ELL_CAP: usize = 2000;

impl LogDerivSpec {
    /// Smallest ell with 2^{-ell sigma0} |P| (ell log max P)^k / (1 - 2^{-sigma0}) < 1e-14.
    pub fn with_default_depth(k: usize, sigma0: f64, primes: &[u64]) -> Self {
        let ell_max = default_ell_max(k, sigma0, primes);
        Self { k, sigma0, ell_max }
    }
}

pub fn default_ell_max(k: usize, sigma0: f64, primes: &[u64]) -> usize {
    let count = primes.len().max(1) as f64;
    let log_max = primes.iter().copied().max().map_or(2f64.ln(), |p| (p as f64).ln());
    let denom = 1.0 - 2f64.powf(-sigma0);
    (1..ELL_CAP)
        .find(|&l| {
            let lf = l as f64;
            2f64.powf(-lf * sigma0) * count * (lf * log_max).powi(k as i32) / denom < ELL_TOL
        })
        .unwrap_or(ELL_CAP)
}

/// Truncated value of d^k/ds^k log zeta_P(s, theta) at sigma0 with a rigorous
/// bound on the omitted prime powers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogDeriv {
    pub value: Complex64,
    pub tail_bound: f64,
}

/// d^k/ds^k log (1 - w p^{-s})^{-1} at s = sigma, w = e^{-2 pi i theta},
/// summed over prime powers ell <= ell_max, plus a bound for ell > ell_max.
pub fn euler_factor_log_deriv(p: u64, k: usize, sigma: f64, theta: f64, ell_max: usize) -> LogDeriv {
    let lp = (p as f64).ln();
    let x = (p as f64).powf(-sigma);
    let mut value = Complex64::new(0.0, 0.0);
    let mut xl = 1.0;
    for l in 1..=ell_max {
        xl *= x;
        let lf = l as f64;
        let mag = (-lf * lp).powi(k as i32) * xl / lf;
        value += Complex64::from_polar(mag, -2.0 * PI * lf * theta);
        if xl == 0.0 {
            break;
        }
    }
    // ratio of consecutive terms beyond ell_max is at most ((L+2)/(L+1))^{k-1} p^{-sigma}
    let l1 = (ell_max + 1) as f64;
    let ratio = if k >= 1 { ((l1 + 1.0) / l1).powi(k as i32 - 1) * x } else { x };
    let first = (l1 * lp).powi(k as i32) * x.powf(l1) / l1;
    let tail_bound = if ratio < 1.0 { first / (1.0 - ratio) } else { f64::INFINITY };
    LogDeriv { value, tail_bound }
}

pub fn log_zeta_p_deriv(primes: &[u64], spec: &LogDerivSpec, theta: &PhaseAssignment) -> LogDeriv {
    let mut value = Complex64::new(0.0, 0.0);
    let mut tail_bound = 0.0;
    for &p in primes {
        let d = euler_factor_log_deriv(p, spec.k, spec.sigma0, theta.get(p), spec.ell_max);
        value += d.value;
        tail_bound += d.tail_bound;
    }
    LogDeriv { value, tail_bound }
}

/// All derivatives k < count of log zeta_P at sigma0, each with the default depth.
pub fn log_zeta_p_derivs(primes: &[u64], count: usize, sigma0: f64, theta: &PhaseAssignment) -> Vec<Complex64> {
    (0..count)
        .map(|k| log_zeta_p_deriv(primes, &LogDerivSpec::with_default_depth(k, sigma0, primes), theta).value)
        .collect()
}

/// C_k(sigma0) = sum_{ell >= 2} ell^{k-1} 2^{-(ell-2) sigma0}, so that per prime
/// |d^k log-factor - d^k linear term| <= C_k (log p)^k p^{-2 sigma0}.
pub fn second_order_constant(k: usize, sigma0: f64) -> f64 {
    let mut acc = 0.0;
    for l in 2..10_000 {
        let lf = l as f64;
        let term = lf.powi(k as i32 - 1) * 2f64.powf(-(lf - 2.0) * sigma0);
        acc += term;
        if term < 1e-18 * acc {
            break;
        }
    }
    acc
}

/// C_k(sigma0) sum_{p in P} (log p)^k p^{-2 sigma0}
pub fn linearization_bound(primes: &[u64], k: usize, sigma0: f64) -> f64 {
    second_order_constant(k, sigma0)
        * primes
            .iter()
            .map(|&p| (p as f64).ln().powi(k as i32) * (p as f64).powf(-2.0 * sigma0))
            .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primes::primes_up_to;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn alternating_pattern() {
        let th = theta_alternating(&primes_up_to(10));
        let v: Vec<(u64, f64)> = th.iter().collect();
        assert_eq!(v, vec![(2, 0.0), (3, 0.5), (5, 0.0), (7, 0.5)]);
        assert!(theta_alternating(&primes_up_to(1)).is_empty());
        assert_eq!(theta_alternating(&primes_up_to(2)).iter().collect::<Vec<_>>(), vec![(2, 0.0)]);
    }

    #[test]
    fn phi_examples() {
        let zero = PhaseAssignment::new();
        assert!((phi(&[2, 3], c(1.0, 0.0), &zero) - 5.0 / 6.0).norm() < 1e-15);
        let mut half = PhaseAssignment::new();
        half.set(2, 0.5);
        assert!((phi(&[2], c(1.0, 0.0), &half) + 0.5).norm() < 1e-15);
        // term-by-term oracle
        let s = c(0.75, 10.0);
        let oracle: Complex64 = [2.0f64, 3.0, 5.0]
            .iter()
            .map(|&p| Complex64::new(p, 0.0).powc(-s))
            .sum();
        assert!((phi(&[2, 3, 5], s, &zero) - oracle).norm() < 1e-14);
    }

    #[test]
    fn phi_deriv_examples() {
        let zero = PhaseAssignment::new();
        let d = phi_deriv(&[2, 3], 1, 1.0, &zero);
        assert!((d.re + 2f64.ln() / 2.0 + 3f64.ln() / 3.0).abs() < 1e-15);
        assert!((d.re + 0.712_777_7).abs() < 1e-7);
        assert!((phi_deriv(&[2, 3, 7], 0, 0.8, &zero) - phi(&[2, 3, 7], c(0.8, 0.0), &zero)).norm() < 1e-15);
        let th1 = theta_alternating(&primes_up_to(7));
        let oracle: Complex64 = [(2.0f64, 1.0), (3.0, -1.0), (5.0, 1.0), (7.0, -1.0)]
            .iter()
            .map(|&(p, sign)| Complex64::new(sign * p.ln().powi(2) * p.powf(-0.75), 0.0))
            .sum();
        assert!((phi_deriv(&[2, 3, 5, 7], 2, 0.75, &th1) - oracle).norm() < 1e-12);
    }

    #[test]
    fn log_zeta_p_examples() {
        let zero = PhaseAssignment::new();
        let spec = LogDerivSpec { k: 0, sigma0: 1.0, ell_max: 60 };
        let d = log_zeta_p_deriv(&[2], &spec, &zero);
        assert!((d.value.re - 2f64.ln()).abs() < 1e-15);
        assert!(d.tail_bound < 1e-17);
        let d1 = log_zeta_p_deriv(&[2], &LogDerivSpec { k: 1, ..spec }, &zero);
        assert!((d1.value.re + 2f64.ln()).abs() < 1e-14);
        let mut half = PhaseAssignment::new();
        half.set(2, 0.5);
        let dh = log_zeta_p_deriv(&[2], &spec, &half);
        assert!((dh.value.re + 1.5f64.ln()).abs() < 1e-15);
        assert!(dh.value.im.abs() < 1e-15);
    }

    #[test]
    fn tail_bound_covers_truncation() {
        let zero = PhaseAssignment::new();
        for k in 0..4 {
            let short = log_zeta_p_deriv(&[2, 3, 5], &LogDerivSpec { k, sigma0: 0.6, ell_max: 8 }, &zero);
            let long = log_zeta_p_deriv(&[2, 3, 5], &LogDerivSpec { k, sigma0: 0.6, ell_max: 400 }, &zero);
            assert!((short.value - long.value).norm() <= short.tail_bound, "k = {k}");
        }
    }

    #[test]
    fn default_depth_meets_tolerance() {
        let primes = primes_up_to(1000);
        let spec = LogDerivSpec::with_default_depth(2, 0.6, primes.primes());
        let d = log_zeta_p_deriv(primes.primes(), &spec, &PhaseAssignment::new());
        assert!(d.tail_bound < 1e-12, "{}", d.tail_bound);
    }

    #[test]
    fn records_round_trip() {
        let th = theta_alternating(&primes_up_to(13));
        let json = serde_json::to_string(&th).unwrap();
        assert!(json.starts_with("[{\"prime\":2,\"theta\":0.0}"));
        let back: PhaseAssignment = serde_json::from_str(&json).unwrap();
        assert_eq!(back, th);
    }

    fn primes_and_phases() -> impl Strategy<Value = (Vec<u64>, Vec<f64>)> {
        let table = primes_up_to(200).primes().to_vec();
        proptest::sample::subsequence(table, 1..12).prop_flat_map(|ps| {
            let n = ps.len();
            (Just(ps), proptest::collection::vec(0.0..1.0f64, n))
        })
    }

    fn assign(ps: &[u64], th: &[f64]) -> PhaseAssignment {
        let mut a = PhaseAssignment::new();
        for (&p, &t) in ps.iter().zip(th) {
            a.set(p, t);
        }
        a
    }

    proptest! {
        #[test]
        fn phi_is_periodic((ps, th) in primes_and_phases(), shift in -3i32..3, re in 0.2..2.0f64, im in -50.0..50.0f64) {
            let a = assign(&ps, &th);
            let shifted: Vec<f64> = th.iter().map(|t| t + shift as f64).collect();
            let b = assign(&ps, &shifted);
            let s = c(re, im);
            prop_assert!((phi(&ps, s, &a) - phi(&ps, s, &b)).norm() < 1e-12);
        }

        #[test]
        fn phi_conjugation((ps, th) in primes_and_phases(), re in 0.2..2.0f64, im in -50.0..50.0f64) {
            let a = assign(&ps, &th);
            let s = c(re, im);
            let lhs = phi(&ps, s.conj(), &a.negated());
            prop_assert!((lhs - phi(&ps, s, &a).conj()).norm() < 1e-12);
        }

        #[test]
        fn linear_proxy_within_second_order_bound((ps, th) in primes_and_phases(), k in 0usize..4, sigma in 0.55..1.0f64) {
            let a = assign(&ps, &th);
            let spec = LogDerivSpec::with_default_depth(k, sigma, &ps);
            let full = log_zeta_p_deriv(&ps, &spec, &a).value;
            let lin = phi_deriv(&ps, k, sigma, &a);
            let bound = linearization_bound(&ps, k, sigma);
            prop_assert!((full - lin).norm() <= bound * (1.0 + 1e-12) + 1e-13);
        }
    }
}
