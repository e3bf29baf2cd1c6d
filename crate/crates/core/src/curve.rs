//! The Kronecker curve t -> (t log p / 2 pi mod 1)_p on the prime torus,
//! exact nonvanishing of integer combinations of prime logarithms, and the
//! closed-form Weyl integral of e^{i t omega}.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dd::{Dd, TAU};
use crate::error::{invalid, Result};
use crate::phases::PhaseAssignment;
use crate::primes::PrimeTable;

/// A point on the prime torus; coordinates are in turns, reduced to [0, 1).
pub type TorusPoint = PhaseAssignment;

/// log p / 2 pi in double-double.
pub fn frequency(p: u64) -> Dd {
    Dd::ln_u64(p) / TAU
}

/// (t log p / 2 pi) mod 1 with the product formed in double-double, so the
/// fractional part keeps ~1e-16 relative accuracy in t up to 1e12 and beyond.
pub fn coordinate(t: f64, freq: Dd) -> f64 {
    (Dd::new(t) * freq).fract()
}

pub fn gamma(t: f64, table: &PrimeTable) -> TorusPoint {
    let mut out = TorusPoint::new();
    for &p in table.primes() {
        out.set(p, coordinate(t, frequency(p)));
    }
    out
}

fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

/// Integer exponents n_p on finitely many primes, with omega = sum n_p log p.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<u64, i64>", into = "BTreeMap<u64, i64>")]
pub struct FrequencyVector {
    n: BTreeMap<u64, i64>,
    omega: f64,
}

impl TryFrom<BTreeMap<u64, i64>> for FrequencyVector {
    type Error = crate::Error;
    fn try_from(m: BTreeMap<u64, i64>) -> Result<Self> {
        Self::new(m)
    }
}

impl From<FrequencyVector> for BTreeMap<u64, i64> {
    fn from(v: FrequencyVector) -> Self {
        v.n
    }
}

impl FrequencyVector {
    pub fn new(entries: impl IntoIterator<Item = (u64, i64)>) -> Result<Self> {
        let mut n = BTreeMap::new();
        for (p, e) in entries {
            if !is_prime(p) {
                return invalid(format!("{p} is not a prime"));
            }
            if e != 0 {
                *n.entry(p).or_insert(0) += e;
            }
        }
        n.retain(|_, e| *e != 0);
        let omega = n
            .iter()
            .fold(Dd::ZERO, |acc, (&p, &e)| acc + Dd::ln_u64(p) * Dd::new(e as f64))
            .to_f64();
        Ok(Self { n, omega })
    }

    pub fn zero() -> Self {
        Self { n: BTreeMap::new(), omega: 0.0 }
    }

    pub fn entries(&self) -> &BTreeMap<u64, i64> {
        &self.n
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn is_zero(&self) -> bool {
        self.n.is_empty()
    }

    /// <n, x> = sum n_p x_p
    pub fn pair(&self, x: &TorusPoint) -> f64 {
        self.n.iter().map(|(&p, &e)| e as f64 * x.get(p)).sum()
    }
}

/// Whether prod p^{n_p} differs from 1, decided on exact integers.
pub fn frequency_nonzero(n: &FrequencyVector) -> bool {
    let mut num = BigUint::from(1u32);
    let mut den = BigUint::from(1u32);
    for (&p, &e) in n.entries() {
        let f = BigUint::from(p).pow(e.unsigned_abs() as u32);
        if e > 0 {
            num *= f;
        } else {
            den *= f;
        }
    }
    num != den
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeylIntegral {
    pub value: Complex64,
    pub bound: f64,
}

/// e^{i x} for x = t * omega reduced mod 2 pi in double-double.
fn phase(t: f64, omega: Dd) -> Complex64 {
    let turns = (Dd::new(t) * omega / TAU).fract();
    Complex64::from_polar(1.0, TAU.hi * turns)
}

/// Integral of e^{i t omega} over [t, t + h]: closed form for omega != 0.
pub fn weyl_integral(n: &FrequencyVector, t: f64, h: f64) -> WeylIntegral {
    if n.is_zero() {
        return WeylIntegral { value: Complex64::new(h, 0.0), bound: h };
    }
    let omega = n
        .entries()
        .iter()
        .fold(Dd::ZERO, |acc, (&p, &e)| acc + Dd::ln_u64(p) * Dd::new(e as f64));
    let w = omega.to_f64();
    let diff = phase(t + h, omega) - phase(t, omega);
    WeylIntegral {
        value: diff / Complex64::new(0.0, w),
        bound: 2.0 / w.abs(),
    }
}
