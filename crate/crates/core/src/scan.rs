//! Grid search over [T, T+H] for shifts tau at which the derivatives of
//! log zeta (or of zeta itself) at sigma0 + i tau come within eps of targets.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::omega::TargetSpec;
use crate::zeta::{default_radius, log_zeta_derivs, zeta_derivs, zeta_value};

/// Default short-interval exponent: windows need T^nu <= H.
pub const DEFAULT_NU: f64 = 27.0 / 82.0;
/// Largest derivative count a scan accepts.
pub const MAX_ORDER: usize = 8;
/// Cauchy radius for plain zeta derivatives.
const ZETA_RADIUS: f64 = 0.25;
/// The fresh re-evaluation of a hit uses a circle this much smaller.
const VERIFY_SHRINK: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanWindow {
    pub t: f64,
    pub h: f64,
    pub nu: f64,
    pub step: f64,
    pub eps: f64,
}

/// Smallest admissible H for a given T: T^nu.
pub fn min_window_length(t: f64, nu: f64) -> f64 {
    t.powf(nu)
}

/// Default grid step 2 pi / (20 log T).
pub fn default_step(t: f64) -> Result<f64> {
    if !(t > 1.0) {
        return invalid(format!("default step needs T > 1, got {t}"));
    }
    Ok(2.0 * PI / (20.0 * t.ln()))
}

impl ScanWindow {
    /// Window with the default exponent and grid step.
    pub fn new(t: f64, h: f64, eps: f64) -> Result<Self> {
        Self::with_params(t, h, DEFAULT_NU, None, eps)
    }

    pub fn with_params(t: f64, h: f64, nu: f64, step: Option<f64>, eps: f64) -> Result<Self> {
        let w = Self::relaxed(t, h, nu, step, eps)?;
        let min_h = min_window_length(t, nu);
        if h < min_h || h > t {
            return Err(Error::WindowConstraint { min_h, max_h: t, h });
        }
        Ok(w)
    }

    /// Same field checks as [`ScanWindow::with_params`] but without the
    /// T^nu <= H <= T constraint, for experiments outside the theorem's range.
    pub fn relaxed(t: f64, h: f64, nu: f64, step: Option<f64>, eps: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return invalid(format!("T must be positive, got {t}"));
        }
        if !(h > 0.0 && h.is_finite()) {
            return invalid(format!("H must be positive, got {h}"));
        }
        if !(nu > 0.0 && nu <= 1.0) {
            return invalid(format!("nu must lie in (0,1], got {nu}"));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return invalid(format!("eps must lie in (0,1), got {eps}"));
        }
        let step = match step {
            Some(s) if s > 0.0 && s.is_finite() => s,
            Some(s) => return invalid(format!("step must be positive, got {s}")),
            None => default_step(t)?,
        };
        Ok(Self { t, h, nu, step, eps })
    }

    pub fn grid_len(&self) -> usize {
        (self.h / self.step * (1.0 + 1e-12)).floor() as usize + 1
    }

    pub fn grid_point(&self, i: usize) -> f64 {
        self.t + i as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.t + self.h
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub tau: f64,
    /// |derivative_k - target_k| for k < N, from the verifying evaluation
    pub residuals: Vec<f64>,
    pub refined: bool,
}

impl Hit {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Everything a scan produces besides the hits themselves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanOutcome {
    pub hits: Vec<Hit>,
    pub grid_points: usize,
    /// grid points whose own residual was already below eps
    pub grid_below: usize,
    /// grid points skipped because the evaluation failed (zero near the path)
    pub gaps: Vec<f64>,
}

/// Line-delimited hit record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitRecord {
    pub tau: f64,
    pub sigma0: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub eps: f64,
    pub residuals: Vec<f64>,
    pub refined: bool,
    /// seconds since the scan started
    pub wall_time: f64,
}

impl HitRecord {
    pub fn new(hit: &Hit, sigma0: f64, eps: f64, wall_time: f64) -> Self {
        Self {
            tau: hit.tau,
            sigma0,
            n: hit.residuals.len(),
            eps,
            residuals: hit.residuals.clone(),
            refined: hit.refined,
            wall_time,
        }
    }
}

/// CSV summary: one `tau,max_residual` row per hit.
pub fn write_hits_csv<W: Write>(mut w: W, hits: &[Hit]) -> std::io::Result<()> {
    writeln!(w, "tau,max_residual")?;
    for h in hits {
        writeln!(w, "{},{}", h.tau, h.max_residual())?;
    }
    Ok(())
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

fn residuals(values: &[Complex64], targets: &[Complex64]) -> Vec<f64> {
    values.iter().zip(targets).map(|(v, a)| (v - a).norm()).collect()
}

const LEVELS: usize = 3;
const LEVEL_POINTS: usize = 10;

/// Local minimisation of max_k objective_k around tau0: three nested grids,
/// each ten times finer than the last, then a golden-section polish. The
/// search never leaves [tau0 - radius, tau0 + radius]; errors count as +inf.
pub fn refine_hit<F>(tau0: f64, mut objective: F, radius: f64) -> Hit
where
    F: FnMut(f64) -> Result<Vec<f64>>,
{
    let lo = tau0 - radius;
    let hi = tau0 + radius;
    let mut eval = |t: f64| -> (f64, Option<Vec<f64>>) {
        match objective(t) {
            Ok(r) => (max_of(&r), Some(r)),
            Err(_) => (f64::INFINITY, None),
        }
    };
    let (mut best_val, mut best_res) = eval(tau0);
    let mut best = tau0;
    let mut spacing = radius / LEVEL_POINTS as f64;
    let mut center = tau0;
    for _ in 0..LEVELS {
        for i in 0..=2 * LEVEL_POINTS {
            let t = (center + (i as f64 - LEVEL_POINTS as f64) * spacing).clamp(lo, hi);
            if t == best {
                continue;
            }
            let (v, r) = eval(t);
            if v < best_val {
                best_val = v;
                best_res = r;
                best = t;
            }
        }
        center = best;
        spacing /= 10.0;
    }
    // golden section on [best - 10 spacing, best + 10 spacing]
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = (best - 10.0 * spacing).max(lo);
    let mut b = (best + 10.0 * spacing).min(hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut rc) = eval(c);
    let (mut fd, mut rd) = eval(d);
    for _ in 0..60 {
        if (b - a) < 1e-12 * (1.0 + best.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            rd = rc;
            c = b - g * (b - a);
            (fc, rc) = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            rc = rd;
            d = a + g * (b - a);
            (fd, rd) = eval(d);
        }
    }
    for (t, v, r) in [(c, fc, rc), (d, fd, rd)] {
        if v < best_val {
            best_val = v;
            best_res = r;
            best = t;
        }
    }
    Hit {
        tau: best,
        residuals: best_res.unwrap_or_default(),
        refined: best != tau0,
    }
}

/// Shared grid protocol: evaluate on the grid in parallel, refine every
/// grid-local minimum that could dip below eps, re-verify with `verify`.
fn run_scan<F, V>(window: &ScanWindow, objective: F, verify: V) -> ScanOutcome
where
    F: Fn(f64) -> Result<Vec<f64>> + Sync,
    V: Fn(f64) -> Result<Vec<f64>> + Sync,
{
    let n = window.grid_len();
    let values: Vec<Option<f64>> = (0..n)
        .into_par_iter()
        .map(|i| objective(window.grid_point(i)).ok().map(|r| max_of(&r)))
        .collect();
    let gaps = (0..n).filter(|&i| values[i].is_none()).map(|i| window.grid_point(i)).collect();
    let grid_below = values.iter().flatten().filter(|&&v| v < window.eps).count();

    // A grid minimum f_i can only hide a sub-eps value within one step if the
    // drop to it is bounded by the larger neighbouring difference.
    let candidates: Vec<usize> = (0..n)
        .filter(|&i| {
            let Some(v) = values[i] else { return false };
            let left = if i > 0 { values[i - 1] } else { None };
            let right = values.get(i + 1).copied().flatten();
            if left.is_some_and(|l| l < v) || right.is_some_and(|r| r <= v) {
                return false;
            }
            let slope = [left, right].iter().flatten().map(|&u| u - v).fold(0.0, f64::max);
            v - slope < window.eps
        })
        .collect();

    let hits: Vec<Hit> = candidates
        .par_iter()
        .filter_map(|&i| {
            let t0 = window.grid_point(i);
            let hit = refine_hit(t0, &objective, window.step);
            let residuals = verify(hit.tau).ok()?;
            (max_of(&residuals) < window.eps).then_some(Hit { residuals, ..hit })
        })
        .collect();
    ScanOutcome {
        hits,
        grid_points: n,
        grid_below,
        gaps,
    }
}

fn check_order(n: usize) -> Result<()> {
    if n == 0 || n > MAX_ORDER {
        return invalid(format!("derivative count must lie in 1..={MAX_ORDER}, got {n}"));
    }
    Ok(())
}

/// Shifts tau with |d^k/ds^k log zeta(sigma0 + i tau) - a_k| < window.eps for all k < N.
pub fn scan_theorem1(spec: &TargetSpec, window: &ScanWindow) -> Result<ScanOutcome> {
    spec.validate()?;
    check_order(spec.n)?;
    let sigma0 = spec.sigma0;
    let r = default_radius(sigma0);
    let n = spec.n;
    let targets = &spec.a;
    let objective = |tau: f64| log_zeta_derivs(n, sigma0, tau, r).map(|d| residuals(&d.values, targets));
    let verify =
        |tau: f64| log_zeta_derivs(n, sigma0, tau, r * VERIFY_SHRINK).map(|d| residuals(&d.values, targets));
    Ok(run_scan(window, objective, verify))
}

/// zeta^(k)(s) for k < n, using a plain evaluation when only the value is needed.
pub fn zeta_derivatives(n: usize, s: Complex64, radius: f64) -> Result<Vec<Complex64>> {
    if n == 1 {
        Ok(vec![zeta_value(s)?])
    } else {
        zeta_derivs(n, s, radius)
    }
}

/// Shifts tau with |zeta^(k)(sigma0 + i tau) - b_k| < window.eps for all k < N.
pub fn scan_theorem3(b: &[Complex64], sigma0: f64, window: &ScanWindow) -> Result<ScanOutcome> {
    check_order(b.len())?;
    if b[0] == Complex64::new(0.0, 0.0) {
        return Err(Error::RejectZeroB0);
    }
    if !(sigma0 > 0.5 && sigma0 < 1.0) {
        return invalid(format!("sigma0 must lie in (1/2,1), got {sigma0}"));
    }
    let n = b.len();
    let at = |tau: f64, radius: f64| {
        zeta_derivatives(n, Complex64::new(sigma0, tau), radius).map(|d| residuals(&d, b))
    };
    Ok(run_scan(window, |tau| at(tau, ZETA_RADIUS), |tau| at(tau, ZETA_RADIUS * VERIFY_SHRINK)))
}

/// Fraction of the window covered by grid points already below eps.
pub fn density_estimate(outcome: &ScanOutcome, window: &ScanWindow) -> f64 {
    (outcome.grid_below as f64 * window.step / window.h).clamp(0.0, 1.0)
}
