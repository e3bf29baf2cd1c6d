//! Browser bindings. Each exported function takes plain numbers or strings and
//! returns a JSON document, so the page needs no glue beyond `JSON.parse`.

use num_complex::Complex64;
use serde::Serialize;
use wasm_bindgen::prelude::*;
use zetascope::omega::{construct_theta0, BoundConstants, Method, TargetSpec};
use zetascope::scan::{density_estimate, min_window_length, scan_theorem3, ScanWindow, DEFAULT_NU};
use zetascope::universality::parse_complex;
use zetascope::zeta::{default_radius, log_zeta_derivs, zeta};

/// Largest scan the page will run; keeps the tab responsive.
pub const MAX_GRID: usize = 20_000;

#[derive(Debug, Serialize)]
pub struct ZetaSummary {
    pub value: Complex64,
    pub est_error: f64,
    /// derivatives of log zeta, empty off the strip
    pub log_derivs: Vec<Complex64>,
}

pub fn zeta_summary(re: f64, im: f64, derivs: usize) -> Result<ZetaSummary, String> {
    let s = Complex64::new(re, im);
    let z = zeta(s, 1e-13).map_err(|e| e.to_string())?;
    let log_derivs = if derivs > 0 && re > 0.5 && re < 1.0 {
        log_zeta_derivs(derivs, re, im, default_radius(re)).map_err(|e| e.to_string())?.values
    } else {
        Vec::new()
    };
    Ok(ZetaSummary { value: z.value, est_error: z.est_error, log_derivs })
}

#[derive(Debug, Serialize)]
pub struct OmegaSummary {
    pub u0: f64,
    pub q: f64,
    pub prime_count: usize,
    pub constructive: bool,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// the first few phases, (prime, theta)
    pub phases: Vec<(u64, f64)>,
}

/// `targets` is a comma-separated list of complex numbers written a+bi.
pub fn omega_summary(sigma0: f64, targets: &str, eps: f64) -> Result<OmegaSummary, String> {
    let a = targets
        .split(',')
        .map(|t| parse_complex(t.trim()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    if a.len() > 3 {
        return Err("the demo solves at most three derivative orders".into());
    }
    let spec = TargetSpec::new(sigma0, a, eps).map_err(|e| e.to_string())?;
    let (theta, report) = construct_theta0(&spec, &BoundConstants::default()).map_err(|e| e.to_string())?;
    Ok(OmegaSummary {
        u0: report.u0,
        q: report.q,
        prime_count: report.prime_count,
        constructive: report.method == Method::Constructive,
        residuals: report.residuals,
        max_residual: report.max_residual,
        phases: theta.iter().take(12).collect(),
    })
}

#[derive(Debug, Serialize)]
pub struct ScanSummary {
    pub h: f64,
    pub grid_points: usize,
    pub density: f64,
    /// (tau, max residual)
    pub hits: Vec<(f64, f64)>,
}

/// Shifts tau in [T, T+H] with |zeta(sigma0 + i tau) - target| < eps. A
/// non-positive `h` means the shortest admissible window.
pub fn scan_summary(target: &str, sigma0: f64, t: f64, h: f64, eps: f64) -> Result<ScanSummary, String> {
    let b = parse_complex(target).map_err(|e| e.to_string())?;
    let h = if h > 0.0 { h } else { min_window_length(t, DEFAULT_NU) };
    let window = ScanWindow::new(t, h, eps).map_err(|e| e.to_string())?;
    if window.grid_len() > MAX_GRID {
        return Err(format!("window needs {} grid points; the demo allows {MAX_GRID}", window.grid_len()));
    }
    let out = scan_theorem3(&[b], sigma0, &window).map_err(|e| e.to_string())?;
    Ok(ScanSummary {
        h,
        grid_points: out.grid_points,
        density: density_estimate(&out, &window),
        hits: out.hits.iter().map(|hit| (hit.tau, hit.max_residual())).collect(),
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string())).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn zeta_at(re: f64, im: f64, derivs: usize) -> Result<String, JsValue> {
    to_js(zeta_summary(re, im, derivs))
}

#[wasm_bindgen]
pub fn solve_omega(sigma0: f64, targets: &str, eps: f64) -> Result<String, JsValue> {
    to_js(omega_summary(sigma0, targets, eps))
}

#[wasm_bindgen]
pub fn scan_zeta(target: &str, sigma0: f64, t: f64, h: f64, eps: f64) -> Result<String, JsValue> {
    to_js(scan_summary(target, sigma0, t, h, eps))
}
