//! Weak universality on a small disk: truncate the Taylor series of a target
//! g at s0, find a shift tau whose zeta derivatives match the truncated data,
//! and certify sup |zeta(s + i tau) - g(s)| over |s - s0| <= delta r.
//!
//! The error splits into three budgets, each kept below eps/3:
//! `e91` Taylor tail of g, `e92` coefficient mismatch, `e93` Taylor tail of the zeta shift.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::omega::LogScaled;
use crate::quad::{cauchy_derivatives, factorial};
use crate::scan::{scan_theorem3, ScanWindow, MAX_ORDER};
use crate::zeta::zeta_value;

pub type Evaluator = Arc<dyn Fn(Complex64) -> Result<Complex64> + Send + Sync>;

/// Built-in targets: `const:c`, `exp`, `poly:c0,c1,...` (ascending powers of s)
/// and `zeta-shift:tau` (s -> zeta(s + i tau)). Complex numbers are written a+bi.
pub fn builtin_target(name: &str) -> Result<Evaluator> {
    let (kind, arg) = name.split_once(':').unwrap_or((name, ""));
    match kind {
        "exp" => Ok(Arc::new(|s: Complex64| Ok(s.exp()))),
        "const" => {
            let c = parse_complex(arg)?;
            Ok(Arc::new(move |_| Ok(c)))
        }
        "poly" => {
            let coeffs = arg.split(',').map(parse_complex).collect::<Result<Vec<_>>>()?;
            Ok(Arc::new(move |s: Complex64| {
                Ok(coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c))
            }))
        }
        "zeta-shift" => {
            let tau: f64 = arg
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad shift '{arg}'")))?;
            Ok(Arc::new(move |s: Complex64| zeta_value(s + Complex64::new(0.0, tau))))
        }
        _ => invalid(format!("unknown target '{name}'")),
    }
}

/// Parse a complex number written a+bi, a-bi, bi or a (no spaces).
pub fn parse_complex(text: &str) -> Result<Complex64> {
    let bad = || Error::InvalidInput(format!("cannot parse complex number '{text}'"));
    let t = text.trim();
    if t.is_empty() || t.contains(char::is_whitespace) {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i') else {
        return t.parse::<f64>().map(|x| Complex64::new(x, 0.0)).map_err(|_| bad());
    };
    // split at the last sign that is not the leading one or part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        x => x,
    };
    let re: f64 = re.parse().map_err(|_| bad())?;
    let im: f64 = im.parse().map_err(|_| bad())?;
    Ok(Complex64::new(re, im))
}

#[derive(Clone)]
pub struct UniversalityTarget {
    pub g: Evaluator,
    pub label: String,
    pub s0: Complex64,
    pub r: f64,
    pub delta0: f64,
    pub eps: f64,
}

impl fmt::Debug for UniversalityTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UniversalityTarget")
            .field("g", &self.label)
            .field("s0", &self.s0)
            .field("r", &self.r)
            .field("delta0", &self.delta0)
            .field("eps", &self.eps)
            .finish()
    }
}

const NONVANISHING_RINGS: usize = 16;
const NONVANISHING_ANGLES: usize = 256;

impl UniversalityTarget {
    /// Validates the parameters, and checks g for zeros on a polar grid of the
    /// closed disk and by its winding number around the boundary. Both are
    /// sample-based; a black-box g cannot be certified zero-free.
    pub fn new(g: Evaluator, label: impl Into<String>, s0: Complex64, r: f64, delta0: f64, eps: f64) -> Result<Self> {
        if !(s0.re > 0.5 && s0.re < 1.0) {
            return invalid(format!("Re s0 must lie in (1/2,1), got {}", s0.re));
        }
        if !(r > 0.0 && r.is_finite()) {
            return invalid(format!("r must be positive, got {r}"));
        }
        if !(delta0 > 0.0 && delta0 < 1.0) {
            return invalid(format!("delta0 must lie in (0,1), got {delta0}"));
        }
        let g0 = g(s0)?;
        if !(eps > 0.0 && eps < 1.0_f64.min(g0.norm())) {
            return invalid(format!("eps must lie in (0, min(1, |g(s0)|) = {}), got {eps}", 1.0_f64.min(g0.norm())));
        }
        let boundary = sample_circle(&g, s0, r, NONVANISHING_ANGLES)?;
        let winding = winding_number(&boundary);
        if winding != 0 {
            return invalid(format!("g has {winding} zero(s) inside the disk"));
        }
        let mut smallest = boundary.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
        for j in 0..NONVANISHING_RINGS {
            let rho = r * j as f64 / NONVANISHING_RINGS as f64;
            let ring = sample_circle(&g, s0, rho, if j == 0 { 1 } else { 64 })?;
            smallest = ring.iter().map(|v| v.norm()).fold(smallest, f64::min);
        }
        if !(smallest > 1e-12) {
            return invalid("g vanishes on the disk");
        }
        Ok(Self { g, label: label.into(), s0, r, delta0, eps })
    }

    pub fn builtin(name: &str, s0: Complex64, r: f64, delta0: f64, eps: f64) -> Result<Self> {
        Self::new(builtin_target(name)?, name, s0, r, delta0, eps)
    }
}

fn sample_circle(g: &Evaluator, center: Complex64, radius: f64, n: usize) -> Result<Vec<Complex64>> {
    (0..n)
        .map(|j| g(center + Complex64::from_polar(radius, 2.0 * PI * j as f64 / n as f64)))
        .collect()
}

fn winding_number(values: &[Complex64]) -> i64 {
    let n = values.len();
    let total: f64 = (0..n).map(|j| (values[(j + 1) % n] / values[j]).arg()).sum();
    (total / (2.0 * PI)).round() as i64
}

/// Max of |g| on |s - s0| = r: equispaced samples, then a golden-section
/// search in angle around the best sample. Only as good as the sampling when
/// |g| has several sharp peaks between neighbouring samples.
pub fn boundary_max(g: &Evaluator, s0: Complex64, r: f64, samples: usize) -> Result<f64> {
    if samples < 64 {
        return invalid(format!("need at least 64 boundary samples, got {samples}"));
    }
    let at = |phi: f64| g(s0 + Complex64::from_polar(r, phi)).map(|v| v.norm());
    let step = 2.0 * PI / samples as f64;
    let values = (0..samples).map(|j| at(j as f64 * step)).collect::<Result<Vec<_>>>()?;
    let (best, mut max) = values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (j, v)| if v > acc.1 { (j, v) } else { acc });
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = ((best as f64 - 1.0) * step, (best as f64 + 1.0) * step);
    let mut c = b - gr * (b - a);
    let mut d = a + gr * (b - a);
    let (mut fc, mut fd) = (at(c)?, at(d)?);
    for _ in 0..60 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = at(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = at(d)?;
        }
    }
    max = max.max(fc).max(fd);
    Ok(max)
}

/// Smallest N >= 1 with m_g delta0^N / (1 - delta0) < eps/3.
pub fn choose_n(m_g: f64, delta0: f64, eps: f64) -> Result<usize> {
    if !(delta0 > 0.0 && delta0 < 1.0) || !(eps > 0.0) || !(m_g >= 0.0) {
        return invalid("choose_N needs delta0 in (0,1), eps > 0 and M_g >= 0");
    }
    let budget = eps / 3.0;
    let mut tail = m_g * delta0 / (1.0 - delta0);
    for n in 1..=100_000 {
        if tail < budget {
            return Ok(n);
        }
        tail *= delta0;
    }
    invalid(format!("no N up to 100000 brings M_g = {m_g} below eps/3"))
}

/// g^(k)(s0) for k < n by circle quadrature of radius r_c, doubling the node
/// count until successive scaled coefficients agree to 1e-10 (see
/// [`cauchy_derivatives`] for the scale).
pub fn taylor_coeffs(g: &Evaluator, s0: Complex64, r_c: f64, n: usize) -> Result<Vec<Complex64>> {
    if n == 0 || !(r_c > 0.0) {
        return invalid("taylor_coeffs needs n >= 1 and a positive radius");
    }
    cauchy_derivatives(|z| g(z), s0, r_c, n, 1e-10).map(|(d, _)| d)
}

fn zeta_tail(m: f64, delta: f64, n: usize) -> f64 {
    m * delta.powi(n as i32) / (1.0 - delta)
}

/// Largest delta in (0, delta0] with m_zeta delta^N / (1 - delta) < eps/3,
/// by bisection on the increasing left side. Returns 0 if no delta qualifies.
pub fn choose_delta(m_zeta: f64, n: usize, eps: f64, delta0: f64) -> f64 {
    let budget = eps / 3.0;
    if zeta_tail(m_zeta, delta0, n) < budget {
        return delta0;
    }
    let (mut lo, mut hi) = (0.0, delta0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if zeta_tail(m_zeta, mid, n) < budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskCheck {
    /// max of |zeta(s + i tau) - g(s)| over the sampling grid
    pub sup_diff: f64,
    /// Lipschitz allowance for points between grid nodes
    pub margin: f64,
    pub verdict: bool,
}

pub const DEFAULT_RINGS: usize = 32;
pub const DEFAULT_ANGLES: usize = 128;

/// Sample |zeta(s + i tau) - g(s)| on the closed disk |s - s0| <= delta r
/// (`rings` concentric circles of `angles` points plus the centre). The
/// verdict requires sup_diff + margin < eps, where the margin is the mesh
/// size times a Cauchy bound on the derivative of the difference.
pub fn check_universality(
    tau: f64,
    target: &UniversalityTarget,
    delta: f64,
    rings: usize,
    angles: usize,
) -> Result<DiskCheck> {
    if !(tau > target.r) {
        return invalid(format!("need tau > r so the shifted disk avoids the pole, got tau = {tau}"));
    }
    if !(0.0..=1.0).contains(&delta) || rings == 0 || angles == 0 {
        return invalid("delta must lie in [0,1] and the grid must be nonempty");
    }
    let shift = Complex64::new(0.0, tau);
    let g = target.g.clone();
    let diff: Evaluator = Arc::new(move |s: Complex64| Ok(zeta_value(s + shift)? - g(s)?));
    let s0 = target.s0;
    let rho = delta * target.r;
    let center = diff(s0)?.norm();
    if rho == 0.0 {
        return Ok(DiskCheck { sup_diff: center, margin: 0.0, verdict: center < target.eps });
    }
    let ring_max = (1..=rings)
        .into_par_iter()
        .map(|j| {
            let radius = rho * j as f64 / rings as f64;
            sample_circle(&diff, s0, radius, angles).map(|v| v.iter().map(|z| z.norm()).fold(0.0, f64::max))
        })
        .collect::<Result<Vec<_>>>()?;
    let sup_diff = ring_max.into_iter().fold(center, f64::max);
    // every disk point is within `mesh` of a grid node
    let mesh = ((rho / (2.0 * rings as f64)).powi(2) + (PI * rho / angles as f64).powi(2)).sqrt();
    let outer = 0.5 * (rho + target.r);
    let lipschitz = boundary_max(&diff, s0, outer, 256)? / (outer - rho);
    let margin = lipschitz * mesh;
    Ok(DiskCheck { sup_diff, margin, verdict: sup_diff + margin < target.eps })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budgets {
    /// Taylor truncation of the target on the small disk
    pub e91: f64,
    /// mismatch between the zeta-shift and target Taylor coefficients
    pub e92: f64,
    /// Taylor truncation of the zeta shift
    pub e93: f64,
}

impl Budgets {
    pub fn all_below(&self, bound: f64) -> bool {
        self.e91 < bound && self.e92 < bound && self.e93 < bound
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniversalityHit {
    pub tau: f64,
    #[serde(rename = "M_zeta")]
    pub m_zeta: f64,
    pub delta: f64,
    pub sup_diff: f64,
    pub margin: f64,
    pub verdict: bool,
    pub budgets: Budgets,
    /// |zeta^(k)(s0 + i tau) - g^(k)(s0)| for k < N
    pub coefficient_residuals: Vec<f64>,
    /// delta1 sum_{k<N} (delta0 r)^k / k! < eps/3
    pub chain_holds: bool,
    /// all budgets certified, and the sampled sup_diff is then below eps
    pub sound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniversalityReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub delta1: f64,
    #[serde(rename = "M_g")]
    pub m_g: f64,
    #[serde(rename = "G_norm")]
    pub g_norm: f64,
    pub coeffs: Vec<Complex64>,
    pub hits: Vec<UniversalityHit>,
}

impl UniversalityReport {
    pub fn any_verdict(&self) -> bool {
        self.hits.iter().any(|h| h.verdict)
    }
}

/// Fraction of r used as the Taylor circle for g, keeping clear of the boundary.
const TAYLOR_RADIUS: f64 = 0.9;

/// choose_N, Taylor data, coefficient scan, per-hit delta choice and disk check.
/// The window is in terms of t1 = t0 + tau with t0 = Im s0; reported shifts are tau.
pub fn universality_pipeline(target: &UniversalityTarget, window: &ScanWindow) -> Result<UniversalityReport> {
    let UniversalityTarget { s0, r, delta0, eps, .. } = *target;
    let m_g = boundary_max(&target.g, s0, r, 256)?;
    let n = choose_n(m_g, delta0, eps)?;
    if n > MAX_ORDER {
        return invalid(format!(
            "the target needs N = {n} Taylor terms, more than the {MAX_ORDER} a scan supports; shrink delta0"
        ));
    }
    let coeffs = taylor_coeffs(&target.g, s0, TAYLOR_RADIUS * r, n)?;
    let g_norm = coeffs.iter().map(|c| c.norm()).sum();
    let delta1 = eps / 3.0 * (-delta0 * r).exp();
    let scan_window = ScanWindow::relaxed(window.t, window.h, window.nu, Some(window.step), delta1)?;
    let outcome = scan_theorem3(&coeffs, s0.re, &scan_window)?;
    if outcome.hits.is_empty() {
        return Err(Error::NoHits);
    }
    let e91 = zeta_tail(m_g, delta0, n);
    let budget = eps / 3.0;
    let mut hits = Vec::with_capacity(outcome.hits.len());
    for hit in &outcome.hits {
        let tau = hit.tau - s0.im;
        let shift = Complex64::new(0.0, tau);
        let shifted: Evaluator = Arc::new(move |s: Complex64| zeta_value(s + shift));
        let m_zeta = boundary_max(&shifted, s0, r, 256)?;
        let delta = choose_delta(m_zeta, n, eps, delta0);
        let check = check_universality(tau, target, delta, DEFAULT_RINGS, DEFAULT_ANGLES)?;
        let e92 = hit
            .residuals
            .iter()
            .enumerate()
            .map(|(k, res)| res * (delta0 * r).powi(k as i32) / factorial(k))
            .sum();
        let chain: f64 = (0..n).map(|k| delta1 * (delta0 * r).powi(k as i32) / factorial(k)).sum();
        let budgets = Budgets { e91, e92, e93: zeta_tail(m_zeta, delta, n) };
        let certified = delta > 0.0 && budgets.all_below(budget);
        hits.push(UniversalityHit {
            tau,
            m_zeta,
            delta,
            sup_diff: check.sup_diff,
            margin: check.margin,
            verdict: check.verdict,
            budgets,
            coefficient_residuals: hit.residuals.clone(),
            chain_holds: chain < budget,
            sound: !certified || check.sup_diff < eps,
        });
    }
    Ok(UniversalityReport { n, delta1, m_g, g_norm, coeffs, hits })
}

/// |log g(s0)| + ((1 + |g(s0)|) e^{delta0 r} / eps) (||G|| / |g(s0)|)^{(N-1)^2}, in log scale.
pub fn b_expression(g_s0: Complex64, g_norm: f64, n: usize, delta0: f64, r: f64, eps: f64) -> Result<LogScaled> {
    if g_s0.norm() == 0.0 || !(eps > 0.0) || n == 0 {
        return invalid("B needs g(s0) != 0, eps > 0 and N >= 1");
    }
    let a = g_s0.ln().norm();
    let m = g_s0.norm();
    let ln_b = (1.0 + m).ln() + delta0 * r - eps.ln() + ((n - 1) * (n - 1)) as f64 * (g_norm / m).ln();
    // log(a + e^ln_b) without overflow
    let ln = if a == 0.0 { ln_b } else { ln_b.max(a.ln()) + (-(ln_b - a.ln()).abs()).exp().ln_1p() };
    Ok(LogScaled { ln })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn complex_parsing() {
        assert_eq!(parse_complex("1.5").unwrap(), c(1.5, 0.0));
        assert_eq!(parse_complex("1+2i").unwrap(), c(1.0, 2.0));
        assert_eq!(parse_complex("-0.5-3i").unwrap(), c(-0.5, -3.0));
        assert_eq!(parse_complex("2i").unwrap(), c(0.0, 2.0));
        assert_eq!(parse_complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex("1e-3+2e+2i").unwrap(), c(1e-3, 200.0));
        assert!(parse_complex("1 + 2i").is_err());
        assert!(parse_complex("abc").is_err());
    }

    #[test]
    fn boundary_max_examples() {
        let k = builtin_target("const:2-1i").unwrap();
        assert_eq!(boundary_max(&k, c(0.0, 0.0), 1.0, 64).unwrap(), 5f64.sqrt());
        let id = builtin_target("poly:0,1").unwrap();
        assert!((boundary_max(&id, c(0.0, 0.0), 2.0, 64).unwrap() - 2.0).abs() < 1e-12);
        let e = builtin_target("exp").unwrap();
        assert!((boundary_max(&e, c(0.0, 0.0), 1.0, 64).unwrap() - std::f64::consts::E).abs() < 1e-12);
        assert!(boundary_max(&e, c(0.0, 0.0), 1.0, 10).is_err());
    }

    #[test]
    fn choose_n_examples() {
        assert_eq!(choose_n(2.0, 0.5, 0.3).unwrap(), 6);
        assert_eq!(choose_n(1.0, 0.01, 0.3).unwrap(), 1);
        assert_eq!(choose_n(0.0, 0.5, 0.3).unwrap(), 1);
        let mut last = 0;
        for eps in [0.5, 0.2, 0.1, 0.01, 1e-4] {
            let n = choose_n(3.0, 0.4, eps).unwrap();
            assert!(n >= last);
            last = n;
        }
    }

    #[test]
    fn taylor_examples() {
        let e = builtin_target("exp").unwrap();
        for d in taylor_coeffs(&e, c(0.0, 0.0), 1.0, 6).unwrap() {
            assert!((d - 1.0).norm() < 1e-10);
        }
        // 1/(s - 2) = -sum s^k / 2^{k+1}
        let g: Evaluator = Arc::new(|s: Complex64| Ok(1.0 / (s - 2.0)));
        let d = taylor_coeffs(&g, c(0.0, 0.0), 1.0, 8).unwrap();
        for (k, v) in d.iter().enumerate() {
            let want = -factorial(k) / 2f64.powi(k as i32 + 1);
            assert!((v - want).norm() < 1e-9 * (1.0 + want.abs()), "k = {k}");
        }
        let p = builtin_target("poly:1,-2,0,3").unwrap();
        let d = taylor_coeffs(&p, c(0.0, 0.0), 1.0, 6).unwrap();
        let want = [1.0, -2.0, 0.0, 18.0, 0.0, 0.0];
        for (v, w) in d.iter().zip(want) {
            assert!((v - w).norm() < 1e-10);
        }
    }

    #[test]
    fn choose_delta_examples() {
        assert_eq!(choose_delta(1.0, 6, 0.3, 0.5), 0.5);
        let d = choose_delta(50.0, 3, 0.1, 0.5);
        assert!(zeta_tail(50.0, d, 3) < 0.1 / 3.0);
        let bumped = d * 1.01;
        assert!(bumped > 0.5 || zeta_tail(50.0, bumped, 3) >= 0.1 / 3.0 - 1e-9);
        let mut last = f64::INFINITY;
        for m in [1.0, 5.0, 20.0, 100.0, 1e4] {
            let d = choose_delta(m, 4, 0.1, 0.5);
            assert!(d <= last);
            last = d;
        }
    }

    #[test]
    fn b_expression_example() {
        let s0 = c(0.75, 0.0);
        let g0 = s0.exp();
        let b = b_expression(g0, 3.0 * 0.75f64.exp(), 3, 0.5, 0.125, 0.1).unwrap();
        let want = 0.75 + (1.0 + 0.75f64.exp()) * (1.0f64 / 16.0).exp() * 10.0 * 81.0;
        assert!((b.value().unwrap() - want).abs() < 1e-9 * want, "{} vs {want}", b.value().unwrap());
    }

    #[test]
    fn targets_with_zeros_rejected() {
        assert!(UniversalityTarget::builtin("poly:-0.75,1", c(0.75, 0.0), 0.125, 0.5, 0.05).is_err());
        assert!(UniversalityTarget::builtin("poly:-0.8,1", c(0.75, 0.0), 0.125, 0.5, 0.05).is_err());
        assert!(UniversalityTarget::builtin("exp", c(0.75, 0.0), 0.125, 0.5, 0.05).is_ok());
        // eps must stay below |g(s0)|
        assert!(UniversalityTarget::builtin("const:0.01", c(0.75, 0.0), 0.125, 0.5, 0.05).is_err());
        assert!(UniversalityTarget::builtin("exp", c(0.4, 0.0), 0.125, 0.5, 0.05).is_err());
    }

    #[test]
    fn disk_check_identity_and_far_target() {
        let tau = 300.0;
        let t = UniversalityTarget::builtin("zeta-shift:300", c(0.75, 0.0), 0.125, 0.5, 0.05).unwrap();
        let d = check_universality(tau, &t, 0.5, 8, 32).unwrap();
        assert_eq!(d.sup_diff, 0.0);
        assert!(d.verdict);
        let big = UniversalityTarget::builtin("const:1e6", c(0.75, 0.0), 0.125, 0.5, 0.1).unwrap();
        let d = check_universality(tau, &big, 0.5, 8, 32).unwrap();
        assert!(!d.verdict);
        let p = check_universality(tau, &big, 0.0, 8, 32).unwrap();
        let direct = (zeta_value(c(0.75, tau)).unwrap() - 1e6).norm();
        assert_eq!(p.sup_diff, direct);
    }
}
