use std::fmt;
use std::fs::File;
use std::io::BufWriter;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use zetascope::mollifier::{fourier_coeffs, mean_over_curve, write_fourier_csv, MollifierSpec};
use zetascope::omega::{
    calibrate_u0, construct_theta0_with, q_lower_bound, t_lower_bound_theorem1, u0_formula, OmegaOptions,
    TargetSpec, U0Strategy,
};
use zetascope::phases::{PhaseAssignment, PhaseRecord};
use zetascope::scan::{
    density_estimate, min_window_length, scan_theorem1, scan_theorem3, write_hits_csv, HitRecord, ScanWindow,
    DEFAULT_NU,
};
use zetascope::universality::{universality_pipeline, UniversalityTarget};
use zetascope::zeta::{
    balasubramanian_envelope, count_zeros, default_radius, log_zeta_derivs, write_zeros_csv, zero_ordinates, zeta,
};
use zetascope::Error;

use crate::args::{
    CalibrateArgs, Format, MollifierArgs, MollifierCommand, ScanArgs, ScanMode, SolveOmegaArgs, UniversalityArgs,
    WindowArgs, ZerosCommand, ZetaEvalArgs,
};
use crate::output::Sink;
use crate::Status;

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Invalid(String),
    Io(String),
}

impl CliError {
    /// 2 invalid input, 3 ran without a result, 4 numerical failure, 1 I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Io(_) => 1,
            CliError::Core(e) => match e {
                Error::InvalidInput(_)
                | Error::RejectZeroB0
                | Error::WindowConstraint { .. }
                | Error::PoleAt1
                | Error::EmptyBlock(_) => 2,
                Error::NoHits
                | Error::ResidualExceeded { .. }
                | Error::Unreachable { .. }
                | Error::InfeasiblePartition { .. } => 3,
                _ => 4,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => e.fmt(f),
            CliError::Invalid(s) | CliError::Io(s) => f.write_str(s),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

type CmdResult = Result<Status, CliError>;

fn status(ok: bool) -> Status {
    if ok {
        Status::Success
    } else {
        Status::NoResult
    }
}

fn parse_u0(text: &str) -> Result<U0Strategy, CliError> {
    match text {
        "auto" => Ok(U0Strategy::Calibrate),
        "formula" => Ok(U0Strategy::Formula),
        x => x
            .parse::<f64>()
            .ok()
            .filter(|u| *u > 1.0 && u.is_finite())
            .map(U0Strategy::Fixed)
            .ok_or_else(|| CliError::Invalid(format!("--u0 must be auto, formula or a number > 1, got '{x}'"))),
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct OmegaRow {
    pub k: usize,
    pub target_re: f64,
    pub target_im: f64,
    pub residual: f64,
}

pub fn solve_omega(a: &SolveOmegaArgs, mut out: Sink) -> CmdResult {
    let targets = &a.target.targets;
    if let Some(n) = a.n {
        if n != targets.len() {
            return Err(CliError::Invalid(format!("--n {n} does not match the {} targets given", targets.len())));
        }
    }
    let spec = TargetSpec::new(a.target.sigma0, targets.clone(), a.target.eps)?;
    let options = OmegaOptions { u0: parse_u0(&a.u0)?, polish: !a.no_polish, max_u0: a.max_u0 };
    let (theta, report) = construct_theta0_with(&spec, &a.constants.constants(), &options)?;
    if let Some(path) = &a.phases_out {
        let mut w = csv::Writer::from_path(path)?;
        for r in Vec::<PhaseRecord>::from(theta) {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    let rows: Vec<OmegaRow> = targets
        .iter()
        .zip(&report.residuals)
        .enumerate()
        .map(|(k, (t, &residual))| OmegaRow { k, target_re: t.re, target_im: t.im, residual })
        .collect();
    out.emit(&[&report], &rows)?;
    Ok(status(report.max_residual < spec.eps))
}

fn window(w: &WindowArgs, eps: f64) -> Result<ScanWindow, CliError> {
    let h = w.h.unwrap_or_else(|| min_window_length(w.t, w.nu));
    Ok(ScanWindow::with_params(w.t, h, w.nu, w.step, eps)?)
}

pub fn scan(a: &ScanArgs, mut out: Sink) -> CmdResult {
    let eps = a.target.eps;
    let sigma0 = a.target.sigma0;
    let window = window(&a.window, eps)?;
    let start = Instant::now();
    let outcome = match a.mode {
        ScanMode::Log => scan_theorem1(&TargetSpec::new(sigma0, a.target.targets.clone(), eps)?, &window)?,
        ScanMode::Zeta => scan_theorem3(&a.target.targets, sigma0, &window)?,
    };
    let wall_time = start.elapsed().as_secs_f64();
    match out.format() {
        Format::Jsonl => {
            for h in &outcome.hits {
                out.json(&HitRecord::new(h, sigma0, eps, wall_time))?;
            }
        }
        Format::Csv => write_hits_csv(out.raw(), &outcome.hits)?,
    }
    if let Some(path) = &a.summary {
        write_hits_csv(BufWriter::new(File::create(path)?), &outcome.hits)?;
    }
    eprintln!(
        "{} hits; {} grid points, {} below eps, {} gaps; density estimate {:.4}",
        outcome.hits.len(),
        outcome.grid_points,
        outcome.grid_below,
        outcome.gaps.len(),
        density_estimate(&outcome, &window)
    );
    Ok(status(!outcome.hits.is_empty()))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct UniversalityRow {
    pub tau: f64,
    #[serde(rename = "M_zeta")]
    pub m_zeta: f64,
    pub delta: f64,
    pub sup_diff: f64,
    pub margin: f64,
    pub verdict: bool,
    pub e91: f64,
    pub e92: f64,
    pub e93: f64,
    pub chain_holds: bool,
    pub sound: bool,
}

pub fn universality(a: &UniversalityArgs, mut out: Sink) -> CmdResult {
    let target = UniversalityTarget::builtin(&a.target, a.s0, a.r, a.delta0, a.eps)?;
    let window = window(&a.window, a.eps)?;
    let report = universality_pipeline(&target, &window)?;
    let rows: Vec<UniversalityRow> = report
        .hits
        .iter()
        .map(|h| UniversalityRow {
            tau: h.tau,
            m_zeta: h.m_zeta,
            delta: h.delta,
            sup_diff: h.sup_diff,
            margin: h.margin,
            verdict: h.verdict,
            e91: h.budgets.e91,
            e92: h.budgets.e92,
            e93: h.budgets.e93,
            chain_holds: h.chain_holds,
            sound: h.sound,
        })
        .collect();
    out.emit(&[&report], &rows)?;
    Ok(status(report.any_verdict()))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ZeroRecord {
    pub index: usize,
    pub ordinate: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CountRecord {
    pub alpha: f64,
    pub t: f64,
    pub h: f64,
    pub count: i64,
    pub winding_residual: f64,
    /// exponent of the zero-density envelope, when alpha lies in (1/2, 1)
    pub envelope_exponent: Option<f64>,
    pub envelope_log: Option<f64>,
}

pub fn zeros(cmd: &ZerosCommand, mut out: Sink) -> CmdResult {
    match *cmd {
        ZerosCommand::List { t_max } => {
            let zeros = zero_ordinates(t_max)?;
            match out.format() {
                Format::Jsonl => {
                    for (i, &ordinate) in zeros.iter().enumerate() {
                        out.json(&ZeroRecord { index: i + 1, ordinate })?;
                    }
                }
                Format::Csv => write_zeros_csv(out.raw(), &zeros)?,
            }
        }
        ZerosCommand::Count { alpha, t, h } => {
            let c = count_zeros(alpha, t, h)?;
            let env = balasubramanian_envelope(alpha, h).ok();
            let rec = CountRecord {
                alpha,
                t,
                h,
                count: c.count,
                winding_residual: c.winding_residual,
                envelope_exponent: env.map(|e| e.exponent),
                envelope_log: env.map(|e| e.log_value),
            };
            out.emit(&[&rec], &[&rec])?;
        }
    }
    Ok(Status::Success)
}

fn mollifier_spec(a: &MollifierArgs) -> Result<MollifierSpec, CliError> {
    let mut spec = MollifierSpec::new(a.q, a.m, a.delta)?;
    spec.profile = a.profile.into();
    Ok(spec)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MeanRecord {
    pub t: f64,
    pub h: f64,
    pub theta: Vec<PhaseRecord>,
    pub mean: f64,
    pub deviation: f64,
    pub quadrature_error: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MeanRow {
    pub t: f64,
    pub h: f64,
    /// `p:theta` pairs joined by `;`
    pub theta: String,
    pub mean: f64,
    pub deviation: f64,
    pub quadrature_error: f64,
}

pub fn mollifier(cmd: &MollifierCommand, seed: u64, mut out: Sink) -> CmdResult {
    match cmd {
        MollifierCommand::Fourier { spec } => {
            let data = fourier_coeffs(&mollifier_spec(spec)?)?;
            match out.format() {
                Format::Jsonl => out.json(&data)?,
                Format::Csv => write_fourier_csv(out.raw(), &data)?,
            }
        }
        MollifierCommand::Mean { spec, t, h, theta, samples } => {
            let spec = mollifier_spec(spec)?;
            // the curve mean is an experiment, so the short-interval constraint is not enforced
            let window = ScanWindow::relaxed(*t, *h, DEFAULT_NU, None, 0.5)?;
            let points: Vec<PhaseAssignment> = match samples {
                Some(k) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let primes = spec.primes();
                    (0..*k)
                        .map(|_| {
                            let mut p = PhaseAssignment::new();
                            for &q in primes.primes() {
                                p.set(q, rng.gen_range(0.0..1.0));
                            }
                            p
                        })
                        .collect()
                }
                None => {
                    let mut p = PhaseAssignment::new();
                    for &(q, th) in theta {
                        p.set(q, th);
                    }
                    vec![p]
                }
            };
            let mut records = Vec::with_capacity(points.len());
            for p in points {
                let m = mean_over_curve(&spec, &window, &p)?;
                records.push(MeanRecord {
                    t: *t,
                    h: *h,
                    theta: p.into(),
                    mean: m.mean,
                    deviation: m.deviation,
                    quadrature_error: m.quadrature_error,
                });
            }
            let rows: Vec<MeanRow> = records
                .iter()
                .map(|r| MeanRow {
                    t: r.t,
                    h: r.h,
                    theta: r.theta.iter().map(|p| format!("{}:{}", p.prime, p.theta)).collect::<Vec<_>>().join(";"),
                    mean: r.mean,
                    deviation: r.deviation,
                    quadrature_error: r.quadrature_error,
                })
                .collect();
            out.emit(&records, &rows)?;
        }
    }
    Ok(Status::Success)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ZetaRecord {
    pub s: Complex64,
    pub value: Complex64,
    pub est_error: f64,
    pub terms_used: usize,
    /// d^k/ds^k log zeta(s) for k = 0..K
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub log_derivs: Option<Vec<Complex64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub log_derivs_error: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ZetaRow {
    pub s_re: f64,
    pub s_im: f64,
    /// `zeta`, or `logd<k>` for the k-th derivative of log zeta
    pub quantity: String,
    pub re: f64,
    pub im: f64,
}

pub fn zeta_eval(a: &ZetaEvalArgs, mut out: Sink) -> CmdResult {
    let mut records = Vec::with_capacity(a.s.len());
    for &s in &a.s {
        let z = zeta(s, a.tol)?;
        let derivs = match a.log_derivs {
            Some(k) => Some(log_zeta_derivs(k, s.re, s.im, a.radius.unwrap_or_else(|| default_radius(s.re)))?),
            None => None,
        };
        records.push(ZetaRecord {
            s,
            value: z.value,
            est_error: z.est_error,
            terms_used: z.terms_used,
            log_derivs_error: derivs.as_ref().map(|d| d.est_error),
            log_derivs: derivs.map(|d| d.values),
        });
    }
    let mut rows = Vec::new();
    for r in &records {
        let row = |quantity: String, v: Complex64| ZetaRow { s_re: r.s.re, s_im: r.s.im, quantity, re: v.re, im: v.im };
        rows.push(row("zeta".into(), r.value));
        for (k, &v) in r.log_derivs.iter().flatten().enumerate() {
            rows.push(row(format!("logd{k}"), v));
        }
    }
    out.emit(&records, &rows)?;
    Ok(Status::Success)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CalibrateRecord {
    pub u0: f64,
    pub reachable: bool,
    pub worst_ratio: f64,
    /// log of the U0 the proof demands
    pub u0_formula_ln: f64,
    pub q_lower_bound_ln: f64,
    /// log log of the smallest T the existence bound allows
    pub t_lower_bound_loglog: f64,
}

pub fn calibrate(a: &CalibrateArgs, mut out: Sink) -> CmdResult {
    let spec = TargetSpec::new(a.target.sigma0, a.target.targets.clone(), a.target.eps)?;
    let constants = a.constants.constants();
    let cal = calibrate_u0(&spec, a.max_u0)?;
    let rec = CalibrateRecord {
        u0: cal.u0,
        reachable: cal.reachable,
        worst_ratio: cal.worst_ratio,
        u0_formula_ln: u0_formula(&spec, &constants)?.ln,
        q_lower_bound_ln: q_lower_bound(&spec, &constants)?.ln,
        t_lower_bound_loglog: t_lower_bound_theorem1(&spec, &constants)?,
    };
    out.emit(&[&rec], &[&rec])?;
    Ok(status(cal.reachable))
}
