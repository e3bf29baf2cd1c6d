//! Quadrature: Gauss-Legendre panels with adaptive bisection, and the
//! trapezoidal rule on circles used for Cauchy derivative formulas.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Nodes and weights of an n-point Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    pub fn integrate_complex<F: FnMut(f64) -> Complex64>(&self, a: f64, b: f64, mut f: F) -> Complex64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = Complex64::new(0.0, 0.0);
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += f(mid + half * x) * w;
        }
        acc * half
    }
}

/// (P_n(x), P_n'(x)) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

/// Shared 10-point rule used by the adaptive integrators.
pub fn gl10() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(10))
}

/// Result of an adaptive integration: value and absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral<T> {
    pub value: T,
    pub error: f64,
}

const MAX_DEPTH: usize = 48;

/// Adaptive Gauss-Legendre: a panel is accepted when the 10-point value on it
/// agrees with the sum over its two halves.
pub fn adaptive<F: FnMut(f64) -> f64>(a: f64, b: f64, tol: f64, mut f: F) -> Integral<f64> {
    let rule = gl10();
    let whole = rule.integrate(a, b, &mut f);
    let mut error = 0.0;
    let value = adaptive_rec(rule, a, b, whole, tol, MAX_DEPTH, &mut f, &mut error);
    Integral { value, error }
}

#[allow(clippy::too_many_arguments)]
fn adaptive_rec<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: usize,
    f: &mut F,
    error: &mut f64,
) -> f64 {
    let m = 0.5 * (a + b);
    let left = rule.integrate(a, m, &mut *f);
    let right = rule.integrate(m, b, &mut *f);
    let diff = (left + right - whole).abs();
    if diff <= tol || depth == 0 || (b - a).abs() < 1e-14 * (1.0 + a.abs()) {
        *error += diff;
        return left + right;
    }
    adaptive_rec(rule, a, m, left, 0.5 * tol, depth - 1, f, error)
        + adaptive_rec(rule, m, b, right, 0.5 * tol, depth - 1, f, error)
}

/// Complex-valued variant of [`adaptive`] for integrands along a real parameter.
pub fn adaptive_complex<F: FnMut(f64) -> Complex64>(a: f64, b: f64, tol: f64, mut f: F) -> Integral<Complex64> {
    let rule = gl10();
    let whole = rule.integrate_complex(a, b, &mut f);
    let mut error = 0.0;
    let value = adaptive_complex_rec(rule, a, b, whole, tol, MAX_DEPTH, &mut f, &mut error);
    Integral { value, error }
}

#[allow(clippy::too_many_arguments)]
fn adaptive_complex_rec<F: FnMut(f64) -> Complex64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    whole: Complex64,
    tol: f64,
    depth: usize,
    f: &mut F,
    error: &mut f64,
) -> Complex64 {
    let m = 0.5 * (a + b);
    let left = rule.integrate_complex(a, m, &mut *f);
    let right = rule.integrate_complex(m, b, &mut *f);
    let diff = (left + right - whole).norm();
    if diff <= tol || depth == 0 || (b - a).abs() < 1e-14 * (1.0 + a.abs()) {
        *error += diff;
        return left + right;
    }
    adaptive_complex_rec(rule, a, m, left, 0.5 * tol, depth - 1, f, error)
        + adaptive_complex_rec(rule, m, b, right, 0.5 * tol, depth - 1, f, error)
}

/// Pairwise (tree) summation, so parallel partial results combine in a fixed order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => pairwise_sum(&values[..n / 2]) + pairwise_sum(&values[n / 2..]),
    }
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Taylor coefficients f^(k)(center) for k < count by the trapezoidal rule on
/// the circle |z - center| = radius, with `nodes` sample points.
///
/// `samples` are f evaluated at center + radius * exp(2 pi i j / nodes).
pub fn cauchy_derivatives_from_samples(samples: &[Complex64], radius: f64, count: usize) -> Vec<Complex64> {
    let n = samples.len();
    (0..count)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &v) in samples.iter().enumerate() {
                let angle = -2.0 * PI * ((k * j) % n) as f64 / n as f64;
                acc += v * Complex64::from_polar(1.0, angle);
            }
            acc * factorial(k) / (n as f64 * radius.powi(k as i32))
        })
        .collect()
}

pub fn circle_points(center: Complex64, radius: f64, nodes: usize) -> Vec<Complex64> {
    (0..nodes)
        .map(|j| center + Complex64::from_polar(radius, 2.0 * PI * j as f64 / nodes as f64))
        .collect()
}

/// Derivatives f^(k)(center), k < count, by Cauchy circle quadrature with node
/// doubling until successive estimates agree to `tol`. Agreement is measured on
/// the scaled coefficients f^(k) radius^k / k!, relative to 1 + max |f| on the
/// circle: that is the scale on which evaluation noise enters, whereas raw
/// derivatives amplify it by k!/radius^k.
pub fn cauchy_derivatives<F>(
    mut f: F,
    center: Complex64,
    radius: f64,
    count: usize,
    tol: f64,
) -> Result<(Vec<Complex64>, f64)>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let mut nodes = (2 * count).next_power_of_two().max(16);
    let mut prev: Option<Vec<Complex64>> = None;
    let mut last_change = f64::INFINITY;
    while nodes <= 4096 {
        let samples = circle_points(center, radius, nodes)
            .into_iter()
            .map(&mut f)
            .collect::<Result<Vec<_>>>()?;
        let size = 1.0 + samples.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let est = cauchy_derivatives_from_samples(&samples, radius, count);
        if let Some(p) = prev {
            last_change = est
                .iter()
                .zip(&p)
                .enumerate()
                .map(|(k, (a, b))| (a - b).norm() * radius.powi(k as i32) / (factorial(k) * size))
                .fold(0.0, f64::max);
            if last_change < tol {
                return Ok((est, last_change));
            }
        }
        prev = Some(est);
        nodes *= 2;
    }
    Err(Error::NoConvergence(last_change))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let rule = GaussLegendre::new(10);
        let v = rule.integrate(-1.0, 2.0, |x| x.powi(19) - 3.0 * x.powi(4));
        let exact = (2f64.powi(20) - 1.0) / 20.0 - 3.0 * (32.0 + 1.0) / 5.0;
        assert!((v - exact).abs() < 1e-9 * exact.abs());
        let w: f64 = rule.weights.iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_bump() {
        let r = adaptive(-1.0, 1.0, 1e-14, |x| if x.abs() < 1.0 { (-1.0 / (1.0 - x * x)).exp() } else { 0.0 });
        assert!((r.value - 0.443_993_816_168_078_65).abs() < 1e-13, "{}", r.value);
    }

    #[test]
    fn cauchy_of_exp() {
        let (d, _) = cauchy_derivatives(|z| Ok(z.exp()), Complex64::new(0.0, 0.0), 1.0, 6, 1e-13).unwrap();
        for v in d {
            assert!((v - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn pairwise_matches_plain_sum() {
        let v: Vec<f64> = (1..1000).map(|i| 1.0 / i as f64).collect();
        assert!((pairwise_sum(&v) - v.iter().sum::<f64>()).abs() < 1e-12);
    }
}
