//! Minimal double-double arithmetic (an unevaluated sum hi + lo of two f64).

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

pub const LN_2: Dd = Dd { hi: std::f64::consts::LN_2, lo: 2.319_046_813_846_299_6e-17 };
pub const TAU: Dd = Dd { hi: std::f64::consts::TAU, lo: 2.449_293_598_294_706_4e-16 };

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn powi(self, n: u32) -> Self {
        let mut acc = Dd::new(1.0);
        for _ in 0..n {
            acc = acc * self;
        }
        acc
    }

    pub fn floor(self) -> Self {
        let h = self.hi.floor();
        if h == self.hi {
            let (s, e) = quick_two_sum(h, self.lo.floor());
            Dd { hi: s, lo: e }
        } else {
            Dd::new(h)
        }
    }

    /// Fractional part in [0, 1).
    pub fn fract(self) -> f64 {
        let r = (self - self.floor()).to_f64();
        if r >= 1.0 {
            0.0
        } else if r < 0.0 {
            r + 1.0
        } else {
            r
        }
    }

    /// Natural logarithm of a positive integer, accurate to double-double.
    pub fn ln_u64(n: u64) -> Self {
        assert!(n > 0, "logarithm of zero");
        let k = 63 - n.leading_zeros();
        // n = 2^k m with m in [1, 2); ln m = 2 atanh((m - 1)/(m + 1))
        let m = exact_ratio(n, k);
        let u = (m - Dd::new(1.0)) / (m + Dd::new(1.0));
        let u2 = u * u;
        let mut term = u;
        let mut sum = Dd::ZERO;
        for j in 0..80 {
            let add = term / Dd::new((2 * j + 1) as f64);
            sum = sum + add;
            if add.hi.abs() < 1e-34 {
                break;
            }
            term = term * u2;
        }
        LN_2 * Dd::new(k as f64) + sum * Dd::new(2.0)
    }
}

/// n / 2^k for n that does not fit exactly in an f64.
fn exact_ratio(n: u64, k: u32) -> Dd {
    let hi = (n >> 11) << 11;
    let lo = n - hi;
    let scale = 2f64.powi(k as i32);
    Dd::new(hi as f64 / scale) + Dd::new(lo as f64 / scale)
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd::new(x)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b * Dd::new(q1);
        let q2 = r.hi / b.hi;
        let r = r - b * Dd::new(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::new(q3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn division_keeps_low_word() {
        let third = Dd::new(1.0) / Dd::new(3.0);
        assert!(third.lo != 0.0);
        let back = third * Dd::new(3.0) - Dd::new(1.0);
        assert!(back.to_f64().abs() < 1e-31);
    }

    #[test]
    fn logarithms() {
        // ln 2 and ln 3 against 32-digit references
        assert_eq!(Dd::ln_u64(2), LN_2);
        let ln3 = Dd::ln_u64(3);
        let want = Dd { hi: 1.098_612_288_668_109_8, lo: -9.071_297_235_001_53e-17 };
        assert!((ln3 - want).to_f64().abs() < 1e-31);
        let ln_big = Dd::ln_u64(1_000_000_007);
        assert!((ln_big.to_f64() - (1_000_000_007f64).ln()).abs() < 1e-14);
        assert_eq!(Dd::ln_u64(1), Dd::ZERO);
    }

    #[test]
    fn fract_of_large_product() {
        let x = Dd::new(1e12) * (Dd::ln_u64(2) / TAU);
        let f = x.fract();
        assert!((0.0..1.0).contains(&f));
        assert_eq!(Dd::new(-0.25).fract(), 0.75);
    }
}
