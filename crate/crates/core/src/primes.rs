//! Prime generation, short-interval counts and the dyadic prime blocks used by
//! the Omega-point construction.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const SEGMENT: u64 = 1 << 16;

/// The primes up to `limit`, ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u64>,
}

impl PrimeTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    /// pi(x) for x <= limit.
    pub fn count_up_to(&self, x: u64) -> usize {
        self.primes.partition_point(|&p| p <= x)
    }

    pub fn contains(&self, n: u64) -> bool {
        self.primes.binary_search(&n).is_ok()
    }
}

/// Plain sieve of Eratosthenes, used for the base primes of the segmented sieve.
fn simple_sieve(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Primes in the closed interval `[lo, hi]` by a segmented sieve. Only the
/// base primes up to sqrt(hi) are materialized.
pub fn primes_in_range(lo: u64, hi: u64) -> Vec<u64> {
    let lo = lo.max(2);
    if hi < lo {
        return Vec::new();
    }
    let base = simple_sieve(isqrt(hi));
    let mut out = Vec::new();
    let mut seg_lo = lo;
    let mut marks = vec![false; SEGMENT as usize];
    loop {
        let seg_hi = hi.min(seg_lo.saturating_add(SEGMENT - 1));
        let len = (seg_hi - seg_lo + 1) as usize;
        marks[..len].iter_mut().for_each(|m| *m = false);
        for &p in &base {
            if p * p > seg_hi {
                break;
            }
            let mut start = (seg_lo.div_ceil(p) * p).max(p * p);
            while start <= seg_hi {
                marks[(start - seg_lo) as usize] = true;
                start += p;
            }
        }
        out.extend(
            marks[..len]
                .iter()
                .enumerate()
                .filter(|(_, &m)| !m)
                .map(|(i, _)| seg_lo + i as u64),
        );
        if seg_hi == hi {
            break;
        }
        seg_lo = seg_hi + 1;
    }
    out
}

pub fn primes_up_to(limit: u64) -> PrimeTable {
    PrimeTable {
        limit,
        primes: primes_in_range(2, limit),
    }
}

/// Table of the von Mangoldt function Lambda(n) for 0 <= n <= limit
/// (index 0 and 1 hold 0).
pub fn von_mangoldt_table(limit: usize) -> Vec<f64> {
    let mut table = vec![0.0; limit + 1];
    for p in primes_in_range(2, limit as u64) {
        let lp = (p as f64).ln();
        let mut q = p;
        while q as usize <= limit {
            table[q as usize] = lp;
            match q.checked_mul(p) {
                Some(next) => q = next,
                None => break,
            }
        }
    }
    table
}

/// Lambda(n) for a single n, by trial factorisation.
pub fn von_mangoldt(n: u64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let mut m = n;
    let mut d = 2u64;
    while d * d <= m {
        if m % d == 0 {
            while m % d == 0 {
                m /= d;
            }
            return if m == 1 { (d as f64).ln() } else { 0.0 };
        }
        d += 1;
    }
    (m as f64).ln()
}

/// Prime count in the short interval (x, x+h] together with the
/// prime-number-theorem prediction h / log x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShortIntervalCount {
    pub count: usize,
    pub prediction: f64,
}

impl ShortIntervalCount {
    /// |count * log x / h - 1|
    pub fn relative_error(&self) -> f64 {
        (self.count as f64 / self.prediction - 1.0).abs()
    }
}

pub fn short_interval_count(x: f64, h: f64) -> Result<ShortIntervalCount> {
    if !(x > 1.0) || !(h >= 0.0) || !(x + h).is_finite() {
        return invalid(format!("short interval needs x > 1 and h >= 0, got x = {x}, h = {h}"));
    }
    let lo = x.floor() as u64 + 1;
    let hi = (x + h).floor() as u64;
    let count = if hi >= lo { primes_in_range(lo, hi).len() } else { 0 };
    Ok(ShortIntervalCount {
        count,
        prediction: h / x.ln(),
    })
}

/// The dyadic block scaffold: U_j = U0 * 2^j, V = U0^((1+3 sigma0)/4) and
/// M_j = { p : U_j <= p < U_j + V }.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSystem {
    pub u0: f64,
    pub n: usize,
    pub v: f64,
    pub sigma0: f64,
    pub blocks: Vec<Vec<u64>>,
    /// -log U_j
    pub nodes: Vec<f64>,
}

/// Minimum block size for which the values of phi over all phase choices fill a disk.
pub const FULL_DISK_BLOCK: usize = 3;

impl BlockSystem {
    pub fn u(&self, j: usize) -> f64 {
        self.u0 * 2f64.powi(j as i32)
    }

    /// Sum of p^(-sigma0) over M_j, the radius of the disk of values of phi_{M_j}.
    pub fn radius(&self, j: usize) -> f64 {
        self.blocks[j]
            .iter()
            .map(|&p| (p as f64).powf(-self.sigma0))
            .sum()
    }

    /// Indices of blocks with fewer than three primes.
    pub fn thin_blocks(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .enumerate()
            .filter(|(_, b)| b.len() < FULL_DISK_BLOCK)
            .map(|(j, _)| j)
            .collect()
    }

    /// The block union, ascending.
    pub fn union(&self) -> Vec<u64> {
        let mut all: Vec<u64> = self.blocks.iter().flatten().copied().collect();
        all.sort_unstable();
        all
    }

    pub fn max_prime(&self) -> Option<u64> {
        self.blocks.iter().filter_map(|b| b.last().copied()).max()
    }
}

pub fn build_blocks(u0: f64, n: usize, sigma0: f64) -> Result<BlockSystem> {
    if !(u0 > 1.0) || !u0.is_finite() {
        return invalid(format!("U0 must be a finite real > 1, got {u0}"));
    }
    if n == 0 {
        return invalid("block count N must be at least 1");
    }
    if !(sigma0 > 0.5 && sigma0 < 1.0) {
        return invalid(format!("sigma0 must lie in (1/2,1), got {sigma0}"));
    }
    let v = u0.powf((1.0 + 3.0 * sigma0) / 4.0);
    let mut blocks = Vec::with_capacity(n);
    let mut nodes = Vec::with_capacity(n);
    for j in 0..n {
        let uj = u0 * 2f64.powi(j as i32);
        // p >= U_j  <=>  p >= ceil(U_j);  p < U_j + V  <=>  p <= ceil(U_j + V) - 1
        let lo = uj.ceil() as u64;
        let hi = (uj + v).ceil() as u64 - 1;
        let block = primes_in_range(lo, hi);
        if block.is_empty() {
            return Err(Error::EmptyBlock(j));
        }
        blocks.push(block);
        nodes.push(-uj.ln());
    }
    Ok(BlockSystem {
        u0,
        n,
        v,
        sigma0,
        blocks,
        nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_division(n: u64) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
    }

    #[test]
    fn first_primes() {
        assert_eq!(primes_up_to(10).primes(), &[2, 3, 5, 7]);
        assert!(primes_up_to(1).is_empty());
        assert!(primes_up_to(0).is_empty());
        assert_eq!(primes_up_to(100).len(), 25);
    }

    #[test]
    fn agrees_with_trial_division() {
        let table = primes_up_to(10_000);
        let oracle: Vec<u64> = (0..=10_000).filter(|&n| trial_division(n)).collect();
        assert_eq!(table.primes(), oracle.as_slice());
    }

    #[test]
    fn segments_join_cleanly() {
        let lo = SEGMENT - 50;
        let hi = 3 * SEGMENT + 77;
        let oracle: Vec<u64> = (lo..=hi).filter(|&n| trial_division(n)).collect();
        assert_eq!(primes_in_range(lo, hi), oracle);
    }

    #[test]
    fn short_interval_examples() {
        let c = short_interval_count(100.0, 30.0).unwrap();
        // (100, 130]: 101 103 107 109 113 127
        let oracle = (101..=130).filter(|&n| trial_division(n)).count();
        assert_eq!(oracle, 6);
        assert_eq!(c.count, oracle);
        assert!((c.prediction - 6.514417228548778).abs() < 1e-12);
        assert_eq!(short_interval_count(10.0, 0.0).unwrap().count, 0);
        assert!(short_interval_count(1.0, 3.0).is_err());
    }

    #[test]
    fn short_interval_relative_error_shrinks() {
        let errs: Vec<f64> = [1e3, 1e4, 1e5]
            .iter()
            .map(|&x: &f64| short_interval_count(x, x.powf(0.7)).unwrap().relative_error())
            .collect();
        assert!(errs[2] < errs[0], "{errs:?}");
    }

    #[test]
    fn blocks_example() {
        let b = build_blocks(100.0, 2, 0.75).unwrap();
        assert!((b.v - 100f64.powf(0.8125)).abs() < 1e-12);
        assert!((b.v - 42.17).abs() < 0.01);
        let oracle: Vec<u64> = (100..143).filter(|&n| trial_division(n) && (n as f64) < 100.0 + b.v).collect();
        assert_eq!(b.blocks[0], oracle);
        assert_eq!(b.blocks[0].len(), 9);
        assert_eq!(b.u(1), 200.0);
        assert!((b.nodes[1] + 200f64.ln()).abs() < 1e-15);
        assert!(b.thin_blocks().is_empty());
    }

    #[test]
    fn tiny_u0_reports_empty_block() {
        // U0 = 4, sigma0 = 0.9: V = 4^0.925 ~ 3.6, windows [4,7.6), [8,11.6), [16,19.6)
        let v = 4f64.powf(0.925);
        let oracle_empty = (0..3).find(|&j| {
            let u = 4.0 * 2f64.powi(j);
            !(u.ceil() as u64..(u + v).ceil() as u64).any(trial_division)
        });
        match build_blocks(4.0, 3, 0.9) {
            Err(Error::EmptyBlock(j)) => assert_eq!(Some(j as i32), oracle_empty),
            Ok(b) => {
                assert!(oracle_empty.is_none());
                assert!(b.blocks.iter().all(|m| !m.is_empty()));
            }
            Err(e) => panic!("{e}"),
        }
        // U_3 = 32: [32, 35.6) has no prime.
        assert_eq!(build_blocks(4.0, 4, 0.9).unwrap_err(), Error::EmptyBlock(3));
    }

    #[test]
    fn blocks_are_disjoint_and_bounded() {
        let b = build_blocks(1000.0, 4, 0.6).unwrap();
        let union = b.union();
        let mut dedup = union.clone();
        dedup.dedup();
        assert_eq!(union.len(), dedup.len());
        for j in 0..b.n {
            let max = *b.blocks[j].last().unwrap() as f64;
            assert!(max < b.u(j) + b.v);
            if j + 1 < b.n {
                assert!(b.u(j) + b.v <= b.u(j + 1));
            }
        }
    }

    #[test]
    fn von_mangoldt_values() {
        let t = von_mangoldt_table(64);
        assert_eq!(t[6], 0.0);
        assert!((t[8] - 2f64.ln()).abs() < 1e-15);
        assert!((t[49] - 7f64.ln()).abs() < 1e-15);
        for n in 0..=64u64 {
            assert_eq!(t[n as usize], von_mangoldt(n), "n = {n}");
        }
    }
}
