use std::f64::consts::PI;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::branch::{log_zeta_tracked, track_arg};
use super::{hardy_theta, hardy_z, zeta_entire};
use crate::error::{invalid, Error, Result};

/// Zeros of zeta in the rectangle alpha < Re s < 2, T <= Im s <= T + H, by
/// the argument principle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroCount {
    pub alpha: f64,
    pub t: f64,
    pub h: f64,
    pub count: i64,
    /// distance of the measured winding number from the nearest integer
    pub winding_residual: f64,
}

/// Winding number of (s - 1) zeta(s) around [alpha, 2] x [T, T + H]. The
/// factor s - 1 removes the pole so rectangles touching the real axis are
/// handled uniformly.
pub fn count_zeros(alpha: f64, t: f64, h: f64) -> Result<ZeroCount> {
    if !(alpha < 2.0) || !(h >= 0.0) || !alpha.is_finite() || !t.is_finite() || !h.is_finite() {
        return invalid(format!("count_zeros needs alpha < 2 and H >= 0, got alpha = {alpha}, H = {h}"));
    }
    if h == 0.0 {
        return Ok(ZeroCount {
            alpha,
            t,
            h,
            count: 0,
            winding_residual: 0.0,
        });
    }
    let corners = [
        Complex64::new(alpha, t),
        Complex64::new(2.0, t),
        Complex64::new(2.0, t + h),
        Complex64::new(alpha, t + h),
    ];
    let edges: Vec<(Complex64, Complex64)> = (0..4).map(|i| (corners[i], corners[(i + 1) % 4])).collect();
    let turns = edges
        .par_iter()
        .map(|&(a, b)| track_arg(&zeta_entire, a, b))
        .collect::<Vec<_>>();
    let mut total = 0.0;
    for r in turns {
        total += r.map_err(|z| Error::BoundaryZero { re: z.re, im: z.im })?;
    }
    let winding = total / (2.0 * PI);
    let count = winding.round();
    Ok(ZeroCount {
        alpha,
        t,
        h,
        count: count as i64,
        winding_residual: (winding - count).abs(),
    })
}

/// N(T) = theta(T)/pi + 1 + arg zeta(1/2 + iT)/pi, with arg by continuous
/// variation from 10 + iT. Rounded to the nearest integer.
pub fn riemann_von_mangoldt(t: f64) -> Result<i64> {
    let arg = log_zeta_tracked(0.5, t)?.im;
    Ok((hardy_theta(t) / PI + 1.0 + arg / PI).round() as i64)
}

fn refine_root(mut a: f64, mut fa: f64, mut b: f64, mut fb: f64) -> Result<f64> {
    // Illinois variant of regula falsi
    let mut side = 0;
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        if (b - a).abs() < 1e-12 * b.abs().max(1.0) {
            return Ok(c);
        }
        let fc = hardy_z(c)?;
        if fc == 0.0 {
            return Ok(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Ok(0.5 * (a + b))
}

fn scan_chunk(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    let n = ((hi - lo) / step).ceil().max(1.0) as usize;
    let mut out = Vec::new();
    let mut ta = lo;
    let mut za = hardy_z(ta)?;
    for i in 1..=n {
        let tb = if i == n { hi } else { lo + (hi - lo) * i as f64 / n as f64 };
        let zb = hardy_z(tb)?;
        if za == 0.0 {
            out.push(ta);
        } else if za.signum() != zb.signum() && zb != 0.0 {
            out.push(refine_root(ta, za, tb, zb)?);
        }
        ta = tb;
        za = zb;
    }
    Ok(out)
}

/// Ordinates of the nontrivial zeros with 0 < gamma <= t_max, located by sign
/// changes of Hardy's Z function. The scan step is halved until the number of
/// sign changes matches the Riemann-von Mangoldt count.
pub fn zero_ordinates(t_max: f64) -> Result<Vec<f64>> {
    if !(t_max > 0.0) || !t_max.is_finite() {
        return invalid(format!("zero scan needs t_max > 0, got {t_max}"));
    }
    if t_max < 14.0 {
        return Ok(Vec::new());
    }
    let mut step = 0.1;
    let chunk = 25.0;
    loop {
        let starts: Vec<f64> = (0..).map(|i| 1.0 + chunk * i as f64).take_while(|&a| a < t_max).collect();
        let parts = starts
            .par_iter()
            .map(|&a| scan_chunk(a, (a + chunk).min(t_max), step))
            .collect::<Result<Vec<_>>>()?;
        let mut zeros: Vec<f64> = parts.into_iter().flatten().collect();
        zeros.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        // checkpoint away from the last zero found
        let mut check = t_max;
        if let Some(&last) = zeros.last() {
            if (t_max - last).abs() < 0.05 {
                check = t_max + 0.1;
            }
        }
        let expected = riemann_von_mangoldt(check)?;
        let found = zeros.iter().filter(|&&g| g <= check).count() as i64;
        if found == expected || step < 1e-3 {
            if found != expected {
                return Err(Error::NoConvergence((found - expected) as f64));
            }
            zeros.retain(|&g| g <= t_max);
            return Ok(zeros);
        }
        step *= 0.5;
    }
}

pub fn write_zeros_csv<W: Write>(mut w: W, zeros: &[f64]) -> std::io::Result<()> {
    writeln!(w, "index,ordinate")?;
    for (i, g) in zeros.iter().enumerate() {
        writeln!(w, "{},{:.15}", i + 1, g)?;
    }
    Ok(())
}

pub fn read_zeros_csv<R: BufRead>(r: R) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (ln, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::InvalidInput(e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || (ln == 0 && line.starts_with("index")) {
            continue;
        }
        let ord = line
            .split(',')
            .nth(1)
            .and_then(|f| f.trim().parse::<f64>().ok())
            .ok_or_else(|| Error::InvalidInput(format!("zero CSV line {}: expected index,ordinate", ln + 1)))?;
        out.push(ord);
    }
    if out.windows(2).any(|w| w[1] < w[0]) {
        return invalid("zero ordinates must be ascending");
    }
    Ok(out)
}

/// H^{4(1-alpha)/(3-2alpha)} (log H)^100, reported in log scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalasubramanianEnvelope {
    pub exponent: f64,
    pub log_value: f64,
}

pub fn balasubramanian_envelope(alpha: f64, h: f64) -> Result<BalasubramanianEnvelope> {
    if !(alpha > 0.5 && alpha < 1.0) {
        return invalid(format!("alpha must lie in (1/2,1), got {alpha}"));
    }
    if !(h > 1.0) {
        return invalid(format!("H must exceed 1, got {h}"));
    }
    let exponent = 4.0 * (1.0 - alpha) / (3.0 - 2.0 * alpha);
    Ok(BalasubramanianEnvelope {
        exponent,
        log_value: exponent * h.ln() + 100.0 * h.ln().ln(),
    })
}
