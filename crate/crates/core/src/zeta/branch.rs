use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{zeta_value, DEFAULT_TOL};
use crate::error::{invalid, Error, Result};
use crate::quad::{cauchy_derivatives, cauchy_derivatives_from_samples, circle_points};

/// Abscissa where log zeta is taken on the principal branch.
pub const TRACK_START: f64 = 10.0;
const MAX_SEGMENT: f64 = 0.25;
const MIN_SEGMENT: f64 = 1e-9;
const MAX_TURN: f64 = PI / 4.0;

/// Principal arg of b/a, in (-pi, pi].
fn turn(a: Complex64, b: Complex64) -> f64 {
    (b / a).arg()
}

/// Continuous change of arg f along the straight segment from `a` to `b`.
/// Fails with the location of the stall when subdivision cannot resolve the
/// argument (a zero or pole on or next to the segment).
pub(crate) fn track_arg<F>(f: &F, a: Complex64, b: Complex64) -> std::result::Result<f64, Complex64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let len = (b - a).norm();
    if len == 0.0 {
        return Ok(0.0);
    }
    let pieces = (len / MAX_SEGMENT).ceil().max(1.0) as usize;
    let eval = |z: Complex64| -> std::result::Result<Complex64, Complex64> {
        match f(z) {
            Ok(v) if v.norm() > 0.0 && v.is_finite() => Ok(v),
            _ => Err(z),
        }
    };
    let mut total = 0.0;
    let mut za = a;
    let mut fa = eval(za)?;
    for i in 1..=pieces {
        let zb = a + (b - a) * (i as f64 / pieces as f64);
        let fb = eval(zb)?;
        total += track_rec(&eval, za, fa, zb, fb, 0)?;
        za = zb;
        fa = fb;
    }
    Ok(total)
}

fn track_rec<E>(
    eval: &E,
    za: Complex64,
    fa: Complex64,
    zb: Complex64,
    fb: Complex64,
    depth: usize,
) -> std::result::Result<f64, Complex64>
where
    E: Fn(Complex64) -> std::result::Result<Complex64, Complex64>,
{
    let zm = 0.5 * (za + zb);
    if (zb - za).norm() < MIN_SEGMENT || depth > 60 {
        return Err(zm);
    }
    let fm = eval(zm)?;
    let d1 = turn(fa, fm);
    let d2 = turn(fm, fb);
    let d = turn(fa, fb);
    if d1.abs() < MAX_TURN && d2.abs() < MAX_TURN && (d1 + d2 - d).abs() < 1e-9 {
        return Ok(d1 + d2);
    }
    Ok(track_rec(eval, za, fa, zm, fm, depth + 1)? + track_rec(eval, zm, fm, zb, fb, depth + 1)?)
}

fn path_error(z: Complex64) -> Error {
    Error::PathThroughZero { re: z.re, im: z.im }
}

/// log zeta(sigma0 + it) continued along the horizontal segment from
/// 10 + it, where the principal branch is used.
pub fn log_zeta_tracked(sigma0: f64, t: f64) -> Result<Complex64> {
    if !sigma0.is_finite() || !t.is_finite() {
        return invalid("log_zeta_tracked needs finite sigma0 and t");
    }
    if t == 0.0 && sigma0 <= 1.0 {
        return Err(path_error(Complex64::new(1.0, 0.0)));
    }
    let start = Complex64::new(TRACK_START.max(sigma0), t);
    let end = Complex64::new(sigma0, t);
    let z_start = zeta_value(start)?;
    let z_end = zeta_value(end)?;
    if z_end.norm() == 0.0 {
        return Err(path_error(end));
    }
    let arg = z_start.arg() + track_arg(&zeta_value, start, end).map_err(path_error)?;
    Ok(Complex64::new(z_end.norm().ln(), arg))
}

/// Default Cauchy radius for log-derivatives at abscissa sigma0: half the
/// distance to the critical line, at most 0.1.
pub fn default_radius(sigma0: f64) -> f64 {
    (0.5 * (sigma0 - 0.5)).min(0.1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogZetaDerivs {
    /// d^k/ds^k log zeta(s) at s = sigma0 + it for k = 0..count
    pub values: Vec<Complex64>,
    pub est_error: f64,
    pub nodes: usize,
}

/// Unwrapped log of circle samples; None if consecutive samples turn by more
/// than pi/2. Err if the samples wind around the origin.
fn unwrapped_log(samples: &[Complex64], center: Complex64) -> Result<Option<Vec<Complex64>>> {
    let mut out = Vec::with_capacity(samples.len());
    let mut arg = samples[0].arg();
    out.push(Complex64::new(samples[0].norm().ln(), arg));
    for w in samples.windows(2) {
        let d = turn(w[0], w[1]);
        if d.abs() > PI / 2.0 {
            return Ok(None);
        }
        arg += d;
        out.push(Complex64::new(w[1].norm().ln(), arg));
    }
    let closing = turn(samples[samples.len() - 1], samples[0]);
    if closing.abs() > PI / 2.0 {
        return Ok(None);
    }
    let winding = (arg + closing - samples[0].arg()) / (2.0 * PI);
    if winding.abs() > 0.5 {
        return Err(path_error(center));
    }
    Ok(Some(out))
}

/// d^k/ds^k log zeta(s) at s = sigma0 + it for k < count, by trapezoidal
/// Cauchy quadrature of log zeta on |z - s| = radius. The k = 0 entry is
/// aligned to the branch of [`log_zeta_tracked`].
pub fn log_zeta_derivs(count: usize, sigma0: f64, t: f64, radius: f64) -> Result<LogZetaDerivs> {
    if count == 0 {
        return invalid("derivative count must be positive");
    }
    if !(radius > 0.0) {
        return invalid(format!("Cauchy radius must be positive, got {radius}"));
    }
    let center = Complex64::new(sigma0, t);
    let mut nodes = (4 * count).next_power_of_two().max(32);
    let mut prev: Option<Vec<Complex64>> = None;
    let mut change = f64::INFINITY;
    while nodes <= 2048 {
        let samples = circle_points(center, radius, nodes)
            .into_iter()
            .map(zeta_value)
            .collect::<Result<Vec<_>>>()?;
        if samples.iter().any(|v| v.norm() == 0.0) {
            return Err(path_error(center));
        }
        let Some(logs) = unwrapped_log(&samples, center)? else {
            nodes *= 2;
            continue;
        };
        let est = cauchy_derivatives_from_samples(&logs, radius, count);
        if let Some(p) = &prev {
            // the k = 0 entries may differ by 2 pi i between resolutions
            change = est
                .iter()
                .zip(p)
                .enumerate()
                .map(|(k, (a, b))| {
                    let mut d = a - b;
                    if k == 0 {
                        d.im -= 2.0 * PI * (d.im / (2.0 * PI)).round();
                    }
                    d.norm() / (1.0 + a.norm())
                })
                .fold(0.0, f64::max);
            if change < 1e-11 {
                let mut values = est;
                let tracked = log_zeta_tracked(sigma0, t)?;
                let shift = ((tracked.im - values[0].im) / (2.0 * PI)).round();
                values[0].im += 2.0 * PI * shift;
                return Ok(LogZetaDerivs {
                    values,
                    est_error: change,
                    nodes,
                });
            }
        }
        prev = Some(est);
        nodes *= 2;
    }
    Err(Error::NoConvergence(change))
}

pub fn log_zeta_deriv(k: usize, sigma0: f64, t: f64, radius: f64) -> Result<Complex64> {
    Ok(log_zeta_derivs(k + 1, sigma0, t, radius)?.values[k])
}

/// zeta^(k)(s) for k < count by Cauchy quadrature on zeta itself.
pub fn zeta_derivs(count: usize, s: Complex64, radius: f64) -> Result<Vec<Complex64>> {
    if (s - 1.0).norm() <= radius * 1.01 {
        return Err(Error::PoleAt1);
    }
    let f = |z: Complex64| super::zeta(z, DEFAULT_TOL).map(|e| e.value);
    cauchy_derivatives(f, s, radius, count, 1e-12).map(|(d, _)| d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tracked_real_axis() {
        let l = log_zeta_tracked(2.0, 0.0).unwrap();
        assert!((l.re - (PI * PI / 6.0).ln()).abs() < 1e-12);
        assert!(l.im.abs() < 1e-12);
        assert!(log_zeta_tracked(0.75, 0.0).is_err());
    }

    #[test]
    fn tracked_matches_reference() {
        // log zeta(0.75 + 5000i), continuous-variation branch
        let l = log_zeta_tracked(0.75, 5000.0).unwrap();
        let reference = Complex64::new(-0.515_595_166_590_097_1, -0.343_542_795_416_691_06);
        assert!((l - reference).norm() < 1e-9, "{l}");
    }

    #[test]
    fn derivative_at_two() {
        // zeta'/zeta(2)
        let d = log_zeta_deriv(1, 2.0, 0.0, 0.1).unwrap();
        assert!((d.re + 0.569_960_993_094_532_8).abs() < 1e-10, "{d}");
    }

    #[test]
    fn zero_inside_circle_is_detected() {
        let err = log_zeta_derivs(2, 0.55, 14.134_725, 0.1).unwrap_err();
        assert!(matches!(err, Error::PathThroughZero { .. }));
    }

    #[test]
    fn zeta_derivatives_of_zeta() {
        let d = zeta_derivs(3, Complex64::new(2.0, 0.0), 0.25).unwrap();
        assert!((d[0].re - PI * PI / 6.0).abs() < 1e-11);
        // zeta'(2) = -0.93754825431584375...
        assert!((d[1].re + 0.937_548_254_315_843_8).abs() < 1e-10, "{}", d[1]);
    }
}
