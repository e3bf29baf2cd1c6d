//! Constructive target matching for derivatives of a twisted Euler product.
//!
//! Given derivative targets a_0..a_{N-1} at a real abscissa sigma0, build
//! phases on the primes up to Q so that d^k/ds^k log zeta_Q(s, theta) at
//! sigma0 lies within eps of each a_k. The construction splits the targets
//! across N short prime blocks through a Vandermonde system, realizes each
//! block value with a two-arm phase linkage, and leaves all other primes on
//! the alternating point. When the blocks cannot reach their targets at a
//! desk-scale U0, a damped least-squares refinement over every phase up to Q
//! takes over; the report says which route produced the answer.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dd::Dd;
use crate::error::{invalid, Error, Result};
use crate::phases::{log_zeta_p_deriv, phi_deriv, LogDerivSpec, PhaseAssignment};
use crate::primes::{build_blocks, primes_up_to, BlockSystem, FULL_DISK_BLOCK};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub n: usize,
    pub sigma0: f64,
    pub a: Vec<Complex64>,
    pub eps: f64,
}

impl TargetSpec {
    pub fn new(sigma0: f64, a: Vec<Complex64>, eps: f64) -> Result<Self> {
        let spec = Self { n: a.len(), sigma0, a, eps };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.a.len() != self.n {
            return invalid(format!("need N >= 1 targets, got N = {} with {} values", self.n, self.a.len()));
        }
        if !(self.sigma0 > 0.5 && self.sigma0 < 1.0) {
            return invalid(format!("sigma0 must lie in (1/2,1), got {}", self.sigma0));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return invalid(format!("eps must lie in (0,1), got {}", self.eps));
        }
        if self.a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return invalid("targets must be finite");
        }
        Ok(())
    }

    /// sum_k |a_k|
    pub fn norm(&self) -> f64 {
        self.a.iter().map(|z| z.norm()).sum()
    }

    /// 8/(1 - sigma0) + 8/(sigma0 - 1/2)
    pub fn bound_exponent(&self) -> f64 {
        8.0 / (1.0 - self.sigma0) + 8.0 / (self.sigma0 - 0.5)
    }
}

/// Existence-only constants of the effective bounds, exposed as configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    #[serde(rename = "C1")]
    pub big_c1: f64,
    #[serde(rename = "C2")]
    pub big_c2: f64,
    #[serde(rename = "C3")]
    pub big_c3: f64,
}

impl Default for BoundConstants {
    fn default() -> Self {
        Self { c1: 1.0, c2: 1.0, c3: 1.0, big_c1: 1.0, big_c2: 1.0, big_c3: 1.0 }
    }
}

impl BoundConstants {
    pub fn validate(&self) -> Result<()> {
        let all = [self.c1, self.c2, self.c3, self.big_c1, self.big_c2, self.big_c3];
        if all.iter().any(|&c| !(c > 0.0) || !c.is_finite()) {
            return invalid("bound constants must be positive and finite");
        }
        Ok(())
    }
}

/// A positive quantity stored by its natural logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogScaled {
    pub ln: f64,
}

impl LogScaled {
    pub fn value(&self) -> Result<f64> {
        if self.ln > f64::MAX.ln() {
            Err(Error::Overflow(self.ln))
        } else {
            Ok(self.ln.exp())
        }
    }
}

/// c1 (||a|| + 1/eps)^{8/(1-sigma0) + 8/(sigma0-1/2)}
pub fn q_lower_bound(spec: &TargetSpec, constants: &BoundConstants) -> Result<LogScaled> {
    spec.validate()?;
    constants.validate()?;
    Ok(LogScaled {
        ln: constants.c1.ln() + spec.bound_exponent() * (spec.norm() + 1.0 / spec.eps).ln(),
    })
}

/// log log T for the threshold T >= exp2(C1 (||a|| + 1/eps)^{...}).
pub fn t_lower_bound_theorem1(spec: &TargetSpec, constants: &BoundConstants) -> Result<f64> {
    spec.validate()?;
    constants.validate()?;
    Ok(constants.big_c1.ln() + spec.bound_exponent() * (spec.norm() + 1.0 / spec.eps).ln())
}

/// U0 demanded by the proof: the largest of 200^N, c2 (||a|| + 1/eps)^{8/(1-sigma0)}
/// and c3 (1/eps)^{1/(sigma0-1/2)}, in log scale.
pub fn u0_formula(spec: &TargetSpec, constants: &BoundConstants) -> Result<LogScaled> {
    spec.validate()?;
    constants.validate()?;
    let a = constants.c2.ln() + 8.0 / (1.0 - spec.sigma0) * (spec.norm() + 1.0 / spec.eps).ln();
    let b = constants.c3.ln() + (1.0 / spec.eps).ln() / (spec.sigma0 - 0.5);
    let floor = spec.n as f64 * 200f64.ln();
    Ok(LogScaled { ln: a.max(b).max(floor) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailConstants {
    pub gamma: Vec<Complex64>,
    pub q: f64,
    pub excluded: Vec<u64>,
}

/// All derivatives k < n at sigma of log(1 - w p^{-s})^{-1}, w = e^{-2 pi i theta},
/// together with their theta-derivatives. The prime-power series is cut once
/// the terms fall below 1e-18 relative to the leading one.
fn factor_derivs(p: u64, theta: f64, sigma: f64, n: usize, out: &mut [Complex64], dtheta: Option<&mut [Complex64]>) {
    let lp = (p as f64).ln();
    let x = (p as f64).powf(-sigma);
    let top = n.saturating_sub(1) as i32;
    out.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
    let mut dt = dtheta;
    if let Some(d) = dt.as_deref_mut() {
        d.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
    }
    let lead = x * lp.max(1.0).powi(top);
    let mut xl = 1.0;
    for l in 1..=4000 {
        let lf = l as f64;
        xl *= x;
        let size = xl * (lf * lp).max(1.0).powi(top) / lf;
        if size < 1e-18 * lead {
            break;
        }
        let base = Complex64::from_polar(xl / lf, -2.0 * PI * lf * theta);
        let mut pow = 1.0;
        for k in 0..n {
            let term = base * pow;
            out[k] += term;
            if let Some(d) = dt.as_deref_mut() {
                d[k] += term * Complex64::new(0.0, -2.0 * PI * lf);
            }
            pow *= -lf * lp;
        }
    }
}

/// Sum over primes p <= Q outside `excluded` of the k-th log-factor derivative
/// at the alternating point.
pub fn tail_constants(spec: &TargetSpec, excluded: &[u64], q: f64) -> Result<TailConstants> {
    spec.validate()?;
    if let Some(&m) = excluded.iter().max() {
        if !(q > m as f64) {
            return invalid(format!("Q = {q} must exceed every block prime (max {m})"));
        }
    }
    let table = primes_up_to(q.max(0.0).floor() as u64);
    let mut skip: Vec<u64> = excluded.to_vec();
    skip.sort_unstable();
    let mut gamma = vec![Complex64::new(0.0, 0.0); spec.n];
    let mut buf = vec![Complex64::new(0.0, 0.0); spec.n];
    for (i, &p) in table.primes().iter().enumerate() {
        if skip.binary_search(&p).is_ok() {
            continue;
        }
        factor_derivs(p, alternating_phase(i), spec.sigma0, spec.n, &mut buf, None);
        for k in 0..spec.n {
            gamma[k] += buf[k];
        }
    }
    Ok(TailConstants { gamma, q, excluded: skip })
}

fn alternating_phase(index: usize) -> f64 {
    if index % 2 == 0 {
        0.0
    } else {
        0.5
    }
}

/// Solution of a Vandermonde system carried in double-double precision.
/// The matrix is badly conditioned for clustered logarithmic nodes (about
/// 1e8 at N = 6), so the rounded `z` alone leaves residuals near 1e-8; the
/// low-order parts restore the full solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VandermondeSolution {
    pub z: Vec<Complex64>,
    pub z_lo: Vec<Complex64>,
}

impl VandermondeSolution {
    /// max_k |sum_j nodes_j^k z_j - rhs_k| evaluated in double-double.
    pub fn residual(&self, nodes: &[f64], rhs: &[Complex64]) -> f64 {
        let n = nodes.len();
        let mut worst = 0.0f64;
        for k in 0..n {
            let (mut re, mut im) = (Dd::new(-rhs[k].re), Dd::new(-rhs[k].im));
            for j in 0..n {
                let xk = Dd::new(nodes[j]).powi(k as u32);
                re = re + xk * Dd { hi: self.z[j].re, lo: self.z_lo[j].re };
                im = im + xk * Dd { hi: self.z[j].im, lo: self.z_lo[j].im };
            }
            worst = worst.max(re.to_f64().hypot(im.to_f64()));
        }
        worst
    }
}

/// Solve sum_j nodes_j^k z_j = rhs_k for k < N (Bjorck-Pereyra).
pub fn solve_vandermonde(nodes: &[f64], rhs: &[Complex64]) -> Result<VandermondeSolution> {
    let n = nodes.len();
    if rhs.len() != n {
        return invalid(format!("{} nodes but {} right-hand sides", n, rhs.len()));
    }
    for i in 0..n {
        for j in i + 1..n {
            let scale = nodes[i].abs().max(nodes[j].abs()).max(1.0);
            if (nodes[i] - nodes[j]).abs() <= 1e-14 * scale {
                return Err(Error::DegenerateNodes(i, j));
            }
        }
    }
    let re = bjorck_pereyra(nodes, rhs.iter().map(|w| w.re).collect());
    let im = bjorck_pereyra(nodes, rhs.iter().map(|w| w.im).collect());
    let z = re.iter().zip(&im).map(|(r, i)| Complex64::new(r.hi, i.hi)).collect();
    let z_lo = re.iter().zip(&im).map(|(r, i)| Complex64::new(r.lo, i.lo)).collect();
    Ok(VandermondeSolution { z, z_lo })
}

fn bjorck_pereyra(nodes: &[f64], rhs: Vec<f64>) -> Vec<Dd> {
    let n = nodes.len();
    let x: Vec<Dd> = nodes.iter().map(|&v| Dd::new(v)).collect();
    let mut b: Vec<Dd> = rhs.into_iter().map(Dd::new).collect();
    for k in 0..n.saturating_sub(1) {
        for i in (k + 1..n).rev() {
            b[i] = b[i] - b[i - 1] * x[k];
        }
    }
    for k in (0..n.saturating_sub(1)).rev() {
        for i in k + 1..n {
            b[i] = b[i] / (x[i] - x[i - k - 1]);
        }
        for i in k..n - 1 {
            b[i] = b[i] - b[i + 1];
        }
    }
    b
}

/// Phase in turns that points e^{-2 pi i theta} along `dir`.
fn phase_of(dir: Complex64) -> f64 {
    crate::phases::reduce_turn(-dir.arg() / (2.0 * PI))
}

/// Phases theta_j with sum_j r_j e^{-2 pi i theta_j} = z. Radii are split
/// greedily into two groups that act as the arms of a triangle with base z;
/// if no such split exists but the links can still close on z, they are
/// folded one at a time.
pub fn solve_phases_for_target(radii: &[f64], z: Complex64) -> Result<Vec<f64>> {
    if radii.is_empty() {
        return invalid("phase linkage needs at least one radius");
    }
    if radii.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
        return invalid("phase linkage radii must be positive");
    }
    let total: f64 = radii.iter().sum();
    let d = z.norm();
    let tol = 1e-13 * total;
    if d > total + tol {
        return Err(Error::Unreachable { modulus: d, reach: total });
    }
    let r_max = radii.iter().cloned().fold(0.0, f64::max);
    let min_reach = (2.0 * r_max - total).max(0.0);
    if d < min_reach - tol {
        return Err(Error::InfeasiblePartition { modulus: d, min_reach });
    }
    let phases = two_arm(radii, z).unwrap_or_else(|| fold_links(radii, z));
    let got: Complex64 = radii
        .iter()
        .zip(&phases)
        .map(|(&r, &t)| Complex64::from_polar(r, -2.0 * PI * t))
        .sum();
    let residual = (got - z).norm();
    if residual >= 1e-12 {
        return Err(Error::ResidualExceeded { residual, eps: 1e-12 });
    }
    Ok(phases)
}

fn two_arm(radii: &[f64], z: Complex64) -> Option<Vec<f64>> {
    let d = z.norm();
    let mut order: Vec<usize> = (0..radii.len()).collect();
    order.sort_by(|&i, &j| radii[j].total_cmp(&radii[i]));
    let mut group = vec![0u8; radii.len()];
    let (mut s1, mut s2) = (0.0, 0.0);
    for &i in &order {
        if s1 <= s2 {
            s1 += radii[i];
        } else {
            s2 += radii[i];
            group[i] = 1;
        }
    }
    if d == 0.0 || (s1 - s2).abs() > d || d > s1 + s2 {
        return None;
    }
    let phi = z.arg();
    let cos_a = ((s1 * s1 + d * d - s2 * s2) / (2.0 * s1 * d)).clamp(-1.0, 1.0);
    let arm1 = Complex64::from_polar(1.0, phi + cos_a.acos());
    let arm2 = if s2 > 0.0 {
        let cos_b = ((s2 * s2 + d * d - s1 * s1) / (2.0 * s2 * d)).clamp(-1.0, 1.0);
        Complex64::from_polar(1.0, phi - cos_b.acos())
    } else {
        arm1
    };
    let (t1, t2) = (phase_of(arm1), phase_of(arm2));
    Some(group.iter().map(|&g| if g == 0 { t1 } else { t2 }).collect())
}

/// Lay links down one by one, keeping the remainder inside the annulus that
/// the remaining links can still reach.
fn fold_links(radii: &[f64], z: Complex64) -> Vec<f64> {
    let m = radii.len();
    let mut suffix_sum = vec![0.0; m + 1];
    let mut suffix_max = vec![0.0f64; m + 1];
    for i in (0..m).rev() {
        suffix_sum[i] = suffix_sum[i + 1] + radii[i];
        suffix_max[i] = suffix_max[i + 1].max(radii[i]);
    }
    let mut phases = Vec::with_capacity(m);
    let mut w = z;
    for i in 0..m {
        let r = radii[i];
        let wn = w.norm();
        let dir_w = if wn > 0.0 { w / wn } else { Complex64::new(1.0, 0.0) };
        if i == m - 1 {
            phases.push(phase_of(dir_w));
            break;
        }
        let hi_rest = suffix_sum[i + 1];
        let lo_rest = (2.0 * suffix_max[i + 1] - hi_rest).max(0.0);
        let lo = lo_rest.max((wn - r).abs());
        let hi = hi_rest.min(wn + r);
        let target = if lo <= hi { 0.5 * (lo + hi) } else { lo };
        let u = if wn > 0.0 {
            let cos_a = ((r * r + wn * wn - target * target) / (2.0 * r * wn)).clamp(-1.0, 1.0);
            dir_w * Complex64::from_polar(1.0, cos_a.acos())
        } else {
            dir_w
        };
        phases.push(phase_of(u));
        w -= u * r;
    }
    phases
}

/// How the returned phases were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// blocks solved by phase linkage, everything else on the alternating point
    Constructive,
    /// constructive start refined by damped least squares over all phases
    Polished,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum U0Strategy {
    /// the proof's U0 shape; fails with Overflow beyond desk scale
    Formula,
    /// smallest U0 on a geometric grid at which every block is reachable
    Calibrate,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaOptions {
    pub u0: U0Strategy,
    pub polish: bool,
    /// largest U0 considered by calibration or accepted from the formula
    pub max_u0: f64,
}

impl Default for OmegaOptions {
    fn default() -> Self {
        Self { u0: U0Strategy::Calibrate, polish: true, max_u0: 1e6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockReport {
    pub j: usize,
    pub size: usize,
    pub radius: f64,
    pub z_abs: f64,
    /// linkage residual; None when the block target was out of reach
    pub residual: Option<f64>,
    pub thin: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaReport {
    pub n: usize,
    pub sigma0: f64,
    pub eps: f64,
    pub q_lower_bound_ln: f64,
    pub u0_formula_ln: f64,
    pub u0: f64,
    pub v: f64,
    pub q: f64,
    pub prime_count: usize,
    pub method: Method,
    pub blocks: Vec<BlockReport>,
    pub thin_blocks: Vec<usize>,
    pub gamma: Vec<Complex64>,
    pub z: Vec<Complex64>,
    /// |phi_deriv(M_j, k) - (-log U_j)^k z_j| for each block j and order k
    pub linearization: Vec<Vec<f64>>,
    /// why the constructive phases were not used, if they were not
    pub constructive_failure: Option<String>,
    pub polish_iterations: usize,
    /// |d^k log zeta_Q(sigma0, theta0) - a_k| from an independent evaluation
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub u0: f64,
    /// false when no U0 up to the cap made every block reachable
    pub reachable: bool,
    /// max_j |z_j| / radius_j at the returned U0
    pub worst_ratio: f64,
}

const CALIBRATION_START: f64 = 8.0;
const CALIBRATION_FACTOR: f64 = std::f64::consts::SQRT_2;
/// U0 used for polishing when calibration finds no reachable block system
const FALLBACK_U0: f64 = 128.0;

fn q_for(u0: f64, n: usize) -> f64 {
    (u0 * 2f64.powi(n as i32)).floor() + 1.0
}

/// Prefix sums of the alternating-point log-factor derivatives over one sieve.
struct TailTable {
    primes: Vec<u64>,
    prefix: Vec<Vec<Complex64>>,
}

impl TailTable {
    fn new(limit: u64, sigma0: f64, n: usize) -> Self {
        let table = primes_up_to(limit);
        let primes = table.primes().to_vec();
        let mut prefix = vec![Vec::with_capacity(primes.len() + 1); n];
        let mut acc = vec![Complex64::new(0.0, 0.0); n];
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for p in prefix.iter_mut() {
            p.push(Complex64::new(0.0, 0.0));
        }
        for (i, &p) in primes.iter().enumerate() {
            factor_derivs(p, alternating_phase(i), sigma0, n, &mut buf, None);
            for k in 0..n {
                acc[k] += buf[k];
                prefix[k].push(acc[k]);
            }
        }
        Self { primes, prefix }
    }

    fn index_of(&self, p: u64) -> usize {
        self.primes.partition_point(|&x| x < p)
    }

    fn gamma(&self, q: f64, blocks: &BlockSystem) -> Vec<Complex64> {
        let upto = self.primes.partition_point(|&x| (x as f64) <= q);
        let n = self.prefix.len();
        let mut g: Vec<Complex64> = (0..n).map(|k| self.prefix[k][upto]).collect();
        for block in &blocks.blocks {
            let lo = self.index_of(block[0]);
            let hi = lo + block.len();
            for k in 0..n {
                g[k] -= self.prefix[k][hi] - self.prefix[k][lo];
            }
        }
        g
    }
}

fn block_ratios(spec: &TargetSpec, blocks: &BlockSystem, gamma: &[Complex64]) -> Result<(Vec<Complex64>, f64)> {
    let rhs: Vec<Complex64> = spec.a.iter().zip(gamma).map(|(a, g)| a - g).collect();
    let z = solve_vandermonde(&blocks.nodes, &rhs)?.z;
    let mut worst = 0.0f64;
    for (j, zj) in z.iter().enumerate() {
        let radius = blocks.radius(j);
        let r_max = (blocks.blocks[j][0] as f64).powf(-spec.sigma0);
        let min_reach = (2.0 * r_max - radius).max(0.0);
        let ratio = if zj.norm() < min_reach { f64::INFINITY } else { zj.norm() / radius };
        worst = worst.max(ratio);
    }
    Ok((z, worst))
}

/// Smallest U0 on the grid 8 * sqrt(2)^i (up to `max_u0`) at which every block
/// target z_j lies in the set of values its phases can reach.
pub fn calibrate_u0(spec: &TargetSpec, max_u0: f64) -> Result<Calibration> {
    spec.validate()?;
    if !(max_u0 >= CALIBRATION_START) || !max_u0.is_finite() {
        return invalid(format!("calibration cap must be at least {CALIBRATION_START}, got {max_u0}"));
    }
    let tails = TailTable::new(q_for(max_u0, spec.n) as u64, spec.sigma0, spec.n);
    let mut u0 = CALIBRATION_START;
    let mut first_valid: Option<(f64, f64)> = None;
    while u0 <= max_u0 {
        match build_blocks(u0, spec.n, spec.sigma0) {
            Ok(blocks) => {
                let gamma = tails.gamma(q_for(u0, spec.n), &blocks);
                let (_, worst) = block_ratios(spec, &blocks, &gamma)?;
                if worst <= 1.0 {
                    return Ok(Calibration { u0, reachable: true, worst_ratio: worst });
                }
                if u0 >= FALLBACK_U0 && first_valid.is_none() {
                    first_valid = Some((u0, worst));
                }
            }
            Err(Error::EmptyBlock(_)) => {}
            Err(e) => return Err(e),
        }
        u0 *= CALIBRATION_FACTOR;
    }
    match first_valid {
        Some((u0, worst_ratio)) => Ok(Calibration { u0, reachable: false, worst_ratio }),
        None => Err(Error::EmptyBlock(spec.n - 1)),
    }
}

/// Re-evaluate d^k log zeta_Q at sigma0 through the phases module, with ten
/// more prime powers than its default depth.
pub fn verify_residuals(primes: &[u64], spec: &TargetSpec, theta: &PhaseAssignment) -> Vec<f64> {
    (0..spec.n)
        .map(|k| {
            let mut ls = LogDerivSpec::with_default_depth(k, spec.sigma0, primes);
            ls.ell_max += 10;
            (log_zeta_p_deriv(primes, &ls, theta).value - spec.a[k]).norm()
        })
        .collect()
}

pub fn construct_theta0(spec: &TargetSpec, constants: &BoundConstants) -> Result<(PhaseAssignment, OmegaReport)> {
    construct_theta0_with(spec, constants, &OmegaOptions::default())
}

pub fn construct_theta0_with(
    spec: &TargetSpec,
    constants: &BoundConstants,
    options: &OmegaOptions,
) -> Result<(PhaseAssignment, OmegaReport)> {
    spec.validate()?;
    let q_bound = q_lower_bound(spec, constants)?;
    let u0_shape = u0_formula(spec, constants)?;
    let u0 = match options.u0 {
        U0Strategy::Formula => {
            if u0_shape.ln > options.max_u0.ln() {
                return Err(Error::Overflow(u0_shape.ln));
            }
            u0_shape.ln.exp()
        }
        U0Strategy::Fixed(u) => u,
        U0Strategy::Calibrate => calibrate_u0(spec, options.max_u0)?.u0,
    };
    let blocks = build_blocks(u0, spec.n, spec.sigma0)?;
    let mut q = q_for(u0, spec.n);
    let table = primes_up_to(q as u64);
    let primes = table.primes();
    let tail = tail_constants(spec, &blocks.union(), q)?;
    let rhs: Vec<Complex64> = spec.a.iter().zip(&tail.gamma).map(|(a, g)| a - g).collect();
    let z = solve_vandermonde(&blocks.nodes, &rhs)?.z;

    let mut theta = PhaseAssignment::new();
    for (i, &p) in primes.iter().enumerate() {
        theta.set(p, alternating_phase(i));
    }
    let mut block_reports = Vec::with_capacity(spec.n);
    let mut failure: Option<Error> = None;
    for (j, block) in blocks.blocks.iter().enumerate() {
        let radii: Vec<f64> = block.iter().map(|&p| (p as f64).powf(-spec.sigma0)).collect();
        let radius: f64 = radii.iter().sum();
        let solved = solve_phases_for_target(&radii, z[j]);
        let residual = match solved {
            Ok(ph) => {
                for (&p, &t) in block.iter().zip(&ph) {
                    theta.set(p, t);
                }
                let got: Complex64 = radii
                    .iter()
                    .zip(&ph)
                    .map(|(&r, &t)| Complex64::from_polar(r, -2.0 * PI * t))
                    .sum();
                Some((got - z[j]).norm())
            }
            Err(e) => {
                // saturate toward the target so polishing starts nearby
                let t = phase_of(if z[j].norm() > 0.0 { z[j] } else { Complex64::new(1.0, 0.0) });
                for &p in block {
                    theta.set(p, t);
                }
                failure.get_or_insert(e);
                None
            }
        };
        block_reports.push(BlockReport {
            j,
            size: block.len(),
            radius,
            z_abs: z[j].norm(),
            residual,
            thin: block.len() < FULL_DISK_BLOCK,
        });
    }

    let linearization = blocks
        .blocks
        .iter()
        .enumerate()
        .map(|(j, block)| {
            (0..spec.n)
                .map(|k| {
                    let lin = phi_deriv(block, k, spec.sigma0, &theta);
                    (lin - z[j] * blocks.nodes[j].powi(k as i32)).norm()
                })
                .collect()
        })
        .collect();

    let mut residuals = verify_residuals(primes, spec, &theta);
    let mut max_residual = residuals.iter().cloned().fold(0.0, f64::max);
    if failure.is_none() && max_residual >= spec.eps {
        failure = Some(Error::ResidualExceeded { residual: max_residual, eps: spec.eps });
    }
    let mut method = Method::Constructive;
    let mut polish_iterations = 0;
    let mut prime_count = primes.len();
    let constructive_failure = failure.as_ref().map(|e| e.to_string());
    if let Some(err) = failure {
        if !options.polish {
            return Err(err);
        }
        method = Method::Polished;
        // real targets leave the all-real start on a stationary point of the
        // least-squares objective; a small deterministic jitter moves it off
        for (i, &p) in primes.iter().enumerate() {
            theta.set(p, theta.get(p) + JITTER * (((i + 1) as f64 * GOLDEN).fract() - 0.5));
        }
        let mut current = primes.to_vec();
        let mut attempt = 0;
        loop {
            let (polished, iters) = polish(&current, spec, &theta);
            polish_iterations += iters;
            theta = polished;
            residuals = verify_residuals(&current, spec, &theta);
            max_residual = residuals.iter().cloned().fold(0.0, f64::max);
            prime_count = current.len();
            if max_residual < spec.eps || attempt == POLISH_WIDENINGS {
                break;
            }
            // widen the prime range and continue from the current phases
            attempt += 1;
            q = 2.0 * q;
            let wider = primes_up_to(q as u64);
            for (i, &p) in wider.primes().iter().enumerate().skip(current.len()) {
                theta.set(p, alternating_phase(i));
            }
            current = wider.primes().to_vec();
        }
        if max_residual >= spec.eps {
            return Err(Error::ResidualExceeded { residual: max_residual, eps: spec.eps });
        }
    }

    let report = OmegaReport {
        n: spec.n,
        sigma0: spec.sigma0,
        eps: spec.eps,
        q_lower_bound_ln: q_bound.ln,
        u0_formula_ln: u0_shape.ln,
        u0,
        v: blocks.v,
        q,
        prime_count,
        method,
        thin_blocks: blocks.thin_blocks(),
        blocks: block_reports,
        gamma: tail.gamma,
        z,
        linearization,
        constructive_failure,
        polish_iterations,
        residuals,
        max_residual,
    };
    Ok((theta, report))
}

const POLISH_WIDENINGS: usize = 8;
const JITTER: f64 = 0.02;
const GOLDEN: f64 = 0.618_033_988_749_894_8;
const POLISH_MAX_ITER: usize = 200;

/// Damped least squares (Levenberg-Marquardt, minimum-norm form) on the real
/// and imaginary parts of d^k log zeta_P(sigma0, theta) - a_k over every phase
/// in P. Stops once the largest residual is below eps / 1000.
fn polish(primes: &[u64], spec: &TargetSpec, start: &PhaseAssignment) -> (PhaseAssignment, usize) {
    let n = spec.n;
    let m = 2 * n;
    let mut th: Vec<f64> = primes.iter().map(|&p| start.get(p)).collect();
    let eval = |th: &[f64], jac: Option<&mut Vec<Vec<f64>>>| -> Vec<f64> {
        let mut val = vec![Complex64::new(0.0, 0.0); n];
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        let mut dbuf = vec![Complex64::new(0.0, 0.0); n];
        let mut jac = jac;
        for (i, &p) in primes.iter().enumerate() {
            let want_d = jac.is_some();
            factor_derivs(p, th[i], spec.sigma0, n, &mut buf, if want_d { Some(&mut dbuf) } else { None });
            for k in 0..n {
                val[k] += buf[k];
            }
            if let Some(j) = jac.as_deref_mut() {
                for k in 0..n {
                    j[k][i] = dbuf[k].re;
                    j[n + k][i] = dbuf[k].im;
                }
            }
        }
        let mut r = Vec::with_capacity(m);
        r.extend((0..n).map(|k| val[k].re - spec.a[k].re));
        r.extend((0..n).map(|k| val[k].im - spec.a[k].im));
        r
    };
    let worst = |r: &[f64]| (0..n).map(|k| r[k].hypot(r[n + k])).fold(0.0, f64::max);
    let sq = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>();

    let mut jac = vec![vec![0.0; primes.len()]; m];
    let mut r = eval(&th, Some(&mut jac));
    let mut f = sq(&r);
    let mut mu = 1.0;
    let mut iters = 0;
    while iters < POLISH_MAX_ITER && worst(&r) >= spec.eps * 1e-3 {
        iters += 1;
        let mut gram = vec![vec![0.0; m]; m];
        for a in 0..m {
            for b in a..m {
                let v: f64 = jac[a].iter().zip(&jac[b]).map(|(x, y)| x * y).sum();
                gram[a][b] = v;
                gram[b][a] = v;
            }
        }
        let mut accepted = false;
        while mu < 1e12 {
            let mut sys = gram.clone();
            for (a, row) in sys.iter_mut().enumerate() {
                row[a] += mu;
            }
            let Some(y) = solve_dense(sys, r.clone()) else {
                mu *= 4.0;
                continue;
            };
            let trial: Vec<f64> = th
                .iter()
                .enumerate()
                .map(|(i, &t)| t - (0..m).map(|a| jac[a][i] * y[a]).sum::<f64>())
                .collect();
            let r2 = eval(&trial, None);
            let f2 = sq(&r2);
            if f2 < f {
                th = trial;
                r = eval(&th, Some(&mut jac));
                f = sq(&r);
                mu = (mu / 3.0).max(1e-12);
                accepted = true;
                break;
            }
            mu *= 4.0;
        }
        if !accepted {
            break;
        }
    }
    let mut out = PhaseAssignment::new();
    for (&p, &t) in primes.iter().zip(&th) {
        out.set(p, t);
    }
    (out, iters)
}

/// Gaussian elimination with partial pivoting; None if singular.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[row][c] -= f * a[col][c];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn turn_dist(a: f64, b: f64) -> f64 {
        let d = (a - b).rem_euclid(1.0);
        d.min(1.0 - d)
    }

    #[test]
    fn q_bound_examples() {
        let k = BoundConstants::default();
        let s = TargetSpec::new(0.75, vec![c(0.0, 0.0)], 0.5).unwrap();
        let q = q_lower_bound(&s, &k).unwrap();
        assert!((q.ln - 64.0 * 2f64.ln()).abs() < 1e-12);
        assert!((q.value().unwrap() - 2f64.powi(64)).abs() < 1e6);
        let s = TargetSpec::new(0.9, vec![c(3.0, 0.0)], 0.1).unwrap();
        let q = q_lower_bound(&s, &k).unwrap();
        assert!((s.bound_exponent() - 100.0).abs() < 1e-12);
        assert!((q.ln - 100.0 * 13f64.ln()).abs() < 1e-10);
        // near eps -> 1 with a = 0 the bound tends to c1
        let s = TargetSpec::new(0.75, vec![c(0.0, 0.0)], 1.0 - 1e-12).unwrap();
        let k2 = BoundConstants { c1: 3.5, ..k };
        assert!((q_lower_bound(&s, &k2).unwrap().value().unwrap() - 3.5).abs() < 1e-8);
        assert!(matches!(LogScaled { ln: 1000.0 }.value(), Err(Error::Overflow(_))));
    }

    #[test]
    fn t_bound_examples() {
        let k = BoundConstants::default();
        let e = std::f64::consts::E;
        let s = TargetSpec::new(0.75, vec![c(e - 2.0, 0.0)], 0.5).unwrap();
        assert!((t_lower_bound_theorem1(&s, &k).unwrap() - 64.0).abs() < 1e-12);
        let s = TargetSpec::new(0.6, vec![c(1.0, 0.0)], 0.5).unwrap();
        let k2 = BoundConstants { big_c1: 2.0, ..k };
        let want = 2f64.ln() + 100.0 * 3f64.ln();
        assert!((t_lower_bound_theorem1(&s, &k2).unwrap() - want).abs() < 1e-10);
    }

    #[test]
    fn spec_validation() {
        assert!(TargetSpec::new(0.4, vec![c(1.0, 0.0)], 0.1).is_err());
        assert!(TargetSpec::new(0.75, vec![c(1.0, 0.0)], 1.5).is_err());
        assert!(TargetSpec::new(0.75, vec![], 0.1).is_err());
    }

    #[test]
    fn tail_examples() {
        let s = TargetSpec::new(0.75, vec![c(0.0, 0.0)], 0.1).unwrap();
        let t = tail_constants(&s, &[], 3.0).unwrap();
        let oracle = -(1.0 - 2f64.powf(-0.75)).ln() - (1.0 + 3f64.powf(-0.75)).ln();
        assert!((t.gamma[0].re - oracle).abs() < 1e-14);
        assert!(t.gamma[0].im.abs() < 1e-14);
        assert!((oracle - 0.5392).abs() < 1e-3);
        assert_eq!(tail_constants(&s, &[], 1.0).unwrap().gamma[0], c(0.0, 0.0));
        assert!(tail_constants(&s, &[5], 3.0).is_err());
    }

    #[test]
    fn tail_matches_double_sum_oracle() {
        let s = TargetSpec::new(0.6, vec![c(0.0, 0.0); 2], 0.1).unwrap();
        let t = tail_constants(&s, &[], 100.0).unwrap();
        let primes = crate::primes::primes_up_to(100);
        for k in 0..2usize {
            let mut oracle = c(0.0, 0.0);
            for (i, &p) in primes.primes().iter().enumerate() {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                for l in 1..400 {
                    let lf = l as f64;
                    let w = if l % 2 == 0 { 1.0 } else { sign };
                    oracle += w * (-lf * (p as f64).ln()).powi(k as i32) * (p as f64).powf(-lf * 0.6) / lf;
                }
            }
            assert!((t.gamma[k] - oracle).norm() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn vandermonde_small_cases() {
        let z = solve_vandermonde(&[0.7], &[c(2.0, -1.0)]).unwrap().z;
        assert_eq!(z, vec![c(2.0, -1.0)]);
        let (x0, x1) = (-2.0, -3.5);
        let (w0, w1) = (c(1.0, 2.0), c(-0.5, 0.25));
        let z = solve_vandermonde(&[x0, x1], &[w0, w1]).unwrap().z;
        let z1 = (w1 - w0 * x0) / (x1 - x0);
        assert!((z[1] - z1).norm() < 1e-14);
        assert!((z[0] - (w0 - z1)).norm() < 1e-14);
        assert!(matches!(solve_vandermonde(&[1.0, 2.0, 1.0], &[c(0.0, 0.0); 3]), Err(Error::DegenerateNodes(0, 2))));
    }

    #[test]
    fn linkage_examples() {
        let ph = solve_phases_for_target(&[1.0, 1.0], c(1.0, 0.0)).unwrap();
        let mut sorted = ph.clone();
        sorted.sort_by(f64::total_cmp);
        assert!(turn_dist(sorted[0], 1.0 / 6.0) < 1e-12 || turn_dist(sorted[0], -1.0 / 6.0) < 1e-12);
        assert!(turn_dist(ph[0], -ph[1]) < 1e-12);
        let ph = solve_phases_for_target(&[0.3, 0.3, 0.3], c(0.9, 0.0)).unwrap();
        assert!(ph.iter().all(|&t| turn_dist(t, 0.0) < 1e-7));
        assert!(matches!(
            solve_phases_for_target(&[1.0], c(0.5, 0.0)),
            Err(Error::InfeasiblePartition { .. })
        ));
        assert!(matches!(solve_phases_for_target(&[1.0, 1.0], c(2.5, 0.0)), Err(Error::Unreachable { .. })));
        // folding handles closures the greedy split cannot
        let ph = solve_phases_for_target(&[1.0, 0.6, 0.5], c(0.0, 0.0)).unwrap();
        let got: Complex64 = [1.0, 0.6, 0.5]
            .iter()
            .zip(&ph)
            .map(|(&r, &t)| Complex64::from_polar(r, -2.0 * PI * t))
            .sum();
        assert!(got.norm() < 1e-12);
        assert!(matches!(
            solve_phases_for_target(&[3.0, 1.0, 1.0], c(0.5, 0.0)),
            Err(Error::InfeasiblePartition { .. })
        ));
    }

    #[test]
    fn constructive_single_target() {
        let s = TargetSpec::new(0.75, vec![c(1.0, 0.0)], 0.1).unwrap();
        let (theta, report) = construct_theta0(&s, &BoundConstants::default()).unwrap();
        assert_eq!(report.method, Method::Constructive, "{report:?}");
        assert!(report.max_residual < 0.1);
        let primes = crate::primes::primes_up_to(report.q as u64);
        let r = verify_residuals(primes.primes(), &s, &theta);
        assert!(r[0] < 0.1);
    }

    #[test]
    fn targets_equal_to_tail_need_zero_block_values() {
        let u0 = 200.0;
        let n = 2;
        let sigma0 = 0.75;
        let blocks = build_blocks(u0, n, sigma0).unwrap();
        let probe = TargetSpec::new(sigma0, vec![c(0.0, 0.0); n], 0.25).unwrap();
        let tail = tail_constants(&probe, &blocks.union(), q_for(u0, n)).unwrap();
        let s = TargetSpec::new(sigma0, tail.gamma.clone(), 0.25).unwrap();
        let opts = OmegaOptions { u0: U0Strategy::Fixed(u0), polish: false, ..Default::default() };
        let (_, report) = construct_theta0_with(&s, &BoundConstants::default(), &opts).unwrap();
        assert!(report.z.iter().all(|z| z.norm() < 1e-12));
        assert!(report.max_residual < 0.25, "{}", report.max_residual);
    }

    #[test]
    fn three_targets_reach_tolerance() {
        let s = TargetSpec::new(0.6, vec![c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)], 0.25).unwrap();
        let (theta, report) = construct_theta0(&s, &BoundConstants::default()).unwrap();
        let primes = crate::primes::primes_up_to(report.q as u64);
        let r = verify_residuals(primes.primes(), &s, &theta);
        assert!(r.iter().all(|&x| x < 0.25), "{r:?}");
    }

    #[test]
    fn formula_u0_overflows_desk_scale() {
        let s = TargetSpec::new(0.75, vec![c(1.0, 0.0)], 0.1).unwrap();
        let opts = OmegaOptions { u0: U0Strategy::Formula, ..Default::default() };
        assert!(matches!(
            construct_theta0_with(&s, &BoundConstants::default(), &opts),
            Err(Error::Overflow(_))
        ));
    }

    proptest! {
        #[test]
        fn linkage_closes_on_feasible_targets(
            radii in proptest::collection::vec(0.01..1.0f64, 2..50),
            frac in 0.0..1.0f64,
            angle in 0.0..std::f64::consts::TAU,
        ) {
            let total: f64 = radii.iter().sum();
            let r_max = radii.iter().cloned().fold(0.0, f64::max);
            let lo = (2.0 * r_max - total).max(0.0);
            let z = Complex64::from_polar(lo + frac * (total - lo), angle);
            let ph = solve_phases_for_target(&radii, z).unwrap();
            let got: Complex64 = radii.iter().zip(&ph).map(|(&r, &t)| Complex64::from_polar(r, -2.0 * PI * t)).sum();
            prop_assert!((got - z).norm() < 1e-12);
        }

        #[test]
        fn vandermonde_round_trip(n in 1usize..=6, u0 in 10.0..1000.0f64, re in proptest::collection::vec(-3.0..3.0f64, 6), im in proptest::collection::vec(-3.0..3.0f64, 6)) {
            let nodes: Vec<f64> = (0..n).map(|j| -(u0 * 2f64.powi(j as i32)).ln()).collect();
            let rhs: Vec<Complex64> = (0..n).map(|k| c(re[k], im[k])).collect();
            let sol = solve_vandermonde(&nodes, &rhs).unwrap();
            let scale: f64 = 1.0 + rhs.iter().map(|w| w.norm()).sum::<f64>();
            prop_assert!(sol.residual(&nodes, &rhs) <= 1e-10 * scale);
        }

        #[test]
        fn block_radius_lower_bound(u0 in 20.0..5000.0f64, n in 1usize..4, sigma0 in 0.55..0.95f64) {
            if let Ok(b) = build_blocks(u0, n, sigma0) {
                for j in 0..n {
                    let floor = b.blocks[j].len() as f64 * (b.u(j) + b.v).powf(-sigma0);
                    prop_assert!(b.radius(j) >= floor);
                }
            }
        }
    }
}
