use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use zetascope::mollifier::Profile;
use zetascope::omega::BoundConstants;
use zetascope::scan::DEFAULT_NU;
use zetascope::universality::parse_complex;

#[derive(Parser, Debug)]
#[command(
    name = "zetascope",
    version,
    about = "Zeta-function shifts that match prescribed derivative data in short intervals",
    arg_required_else_help = true
)]
pub struct Cli {
    /// Worker threads for parallel sections (defaults to all cores).
    #[arg(long, global = true, env = "ZETASCOPE_THREADS")]
    pub threads: Option<usize>,

    /// Record format on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Jsonl)]
    pub format: Format,

    /// Seed for randomized sampling.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// one JSON record per line
    Jsonl,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Find phases theta0 whose truncated Euler product has the target log-derivatives.
    SolveOmega(SolveOmegaArgs),
    /// Search a window [T, T+H] for shifts matching derivative targets.
    Scan(ScanArgs),
    /// Approximate a target function on a disk by a zeta shift.
    Universality(UniversalityArgs),
    /// Zero ordinates on the critical line, or zero counts in rectangles.
    #[command(subcommand)]
    Zeros(ZerosCommand),
    /// Mollifier Fourier data and curve-mean experiments.
    #[command(subcommand)]
    Mollifier(MollifierCommand),
    /// Evaluate zeta and log-zeta derivatives.
    ZetaEval(ZetaEvalArgs),
    /// Smallest desk-scale U0 plus the effective bounds for a target.
    Calibrate(CalibrateArgs),
}

pub fn complex_arg(s: &str) -> Result<Complex64, String> {
    parse_complex(s).map_err(|e| e.to_string())
}

#[derive(Args, Debug, Clone)]
pub struct TargetArgs {
    /// Abscissa sigma0 in (1/2, 1).
    #[arg(long)]
    pub sigma0: f64,

    /// Comma-separated complex targets written a+bi, lowest order first.
    #[arg(long, value_delimiter = ',', value_parser = complex_arg, allow_hyphen_values = true, required = true)]
    pub targets: Vec<Complex64>,

    /// Accuracy eps in (0, 1).
    #[arg(long)]
    pub eps: f64,
}

#[derive(Args, Debug, Clone)]
pub struct ConstantArgs {
    #[arg(long, default_value_t = 1.0)]
    pub c1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c2: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c3: f64,
    /// Constant in the log-log T bound.
    #[arg(long = "big-c1", default_value_t = 1.0)]
    pub big_c1: f64,
    #[arg(long = "big-c2", default_value_t = 1.0)]
    pub big_c2: f64,
    #[arg(long = "big-c3", default_value_t = 1.0)]
    pub big_c3: f64,
}

impl ConstantArgs {
    pub fn constants(&self) -> BoundConstants {
        BoundConstants {
            c1: self.c1,
            c2: self.c2,
            c3: self.c3,
            big_c1: self.big_c1,
            big_c2: self.big_c2,
            big_c3: self.big_c3,
        }
    }
}

#[derive(Args, Debug)]
pub struct SolveOmegaArgs {
    /// Number of derivative orders; must match the number of targets.
    #[arg(long)]
    pub n: Option<usize>,

    #[command(flatten)]
    pub target: TargetArgs,

    #[command(flatten)]
    pub constants: ConstantArgs,

    /// U0 choice: `auto` (calibrate), `formula`, or a number.
    #[arg(long, default_value = "auto")]
    pub u0: String,

    /// Largest U0 tried by calibration or accepted from the formula.
    #[arg(long, default_value_t = 1e6)]
    pub max_u0: f64,

    /// Keep the constructive phases even when their residual is too large.
    #[arg(long)]
    pub no_polish: bool,

    /// Write the phases as CSV `prime,theta`.
    #[arg(long)]
    pub phases_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScanMode {
    /// derivatives of log zeta
    Log,
    /// derivatives of zeta itself
    Zeta,
}

#[derive(Args, Debug, Clone)]
pub struct WindowArgs {
    /// Window start T.
    #[arg(long)]
    pub t: f64,

    /// Window length H; defaults to the minimum T^nu.
    #[arg(long)]
    pub h: Option<f64>,

    /// Short-interval exponent.
    #[arg(long, default_value_t = DEFAULT_NU)]
    pub nu: f64,

    /// Grid step; defaults to 2 pi / (20 log T).
    #[arg(long)]
    pub step: Option<f64>,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    #[arg(long, value_enum, default_value_t = ScanMode::Log)]
    pub mode: ScanMode,

    #[command(flatten)]
    pub window: WindowArgs,

    #[command(flatten)]
    pub target: TargetArgs,

    /// Also write the `tau,max_residual` summary CSV here.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct UniversalityArgs {
    /// Built-in target: exp, const:c, poly:c0,c1,... or zeta-shift:tau.
    #[arg(long)]
    pub target: String,

    /// Disk centre.
    #[arg(long, value_parser = complex_arg, default_value = "0.75", allow_hyphen_values = true)]
    pub s0: Complex64,

    /// Disk radius.
    #[arg(long, default_value_t = 0.125)]
    pub r: f64,

    /// Fraction of the disk on which the approximation is checked.
    #[arg(long, default_value_t = 0.5)]
    pub delta0: f64,

    #[arg(long)]
    pub eps: f64,

    #[command(flatten)]
    pub window: WindowArgs,
}

#[derive(Subcommand, Debug)]
pub enum ZerosCommand {
    /// Ordinates of zeros on the critical line up to a height.
    List {
        #[arg(long)]
        t_max: f64,
    },
    /// Zeros with real part above alpha and ordinate in [T, T+H].
    Count {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        h: f64,
    },
}

#[derive(Args, Debug, Clone)]
pub struct MollifierArgs {
    /// Primes up to Q enter the product.
    #[arg(long)]
    pub q: f64,

    /// Fourier truncation order.
    #[arg(long, default_value_t = 200)]
    pub m: usize,

    /// Bump width; defaults to 1/Q.
    #[arg(long)]
    pub delta: Option<f64>,

    #[arg(long, value_enum, default_value_t = ProfileArg::Bump)]
    pub profile: ProfileArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProfileArg {
    Bump,
    Constant,
}

impl From<ProfileArg> for Profile {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::Bump => Profile::Bump,
            ProfileArg::Constant => Profile::Constant,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum MollifierCommand {
    /// Fourier coefficients of one periodized bump.
    Fourier {
        #[command(flatten)]
        spec: MollifierArgs,
    },
    /// Average of the mollifier along the curve over [T, T+H].
    Mean {
        #[command(flatten)]
        spec: MollifierArgs,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        h: f64,
        /// Target phases as `p:theta` pairs; unlisted primes get 0.
        #[arg(long, value_delimiter = ',', value_parser = phase_arg)]
        theta: Vec<(u64, f64)>,
        /// Draw this many uniformly random phase points instead (uses --seed).
        #[arg(long, conflicts_with = "theta")]
        samples: Option<usize>,
    },
}

fn phase_arg(s: &str) -> Result<(u64, f64), String> {
    let (p, t) = s.split_once(':').ok_or_else(|| format!("expected p:theta, got '{s}'"))?;
    let p = p.parse().map_err(|_| format!("bad prime '{p}'"))?;
    let t = t.parse().map_err(|_| format!("bad phase '{t}'"))?;
    Ok((p, t))
}

#[derive(Args, Debug)]
pub struct ZetaEvalArgs {
    /// Points s, comma-separated, written a+bi.
    #[arg(long, value_delimiter = ',', value_parser = complex_arg, allow_hyphen_values = true, required = true)]
    pub s: Vec<Complex64>,

    /// Target accuracy of the Euler-Maclaurin sum.
    #[arg(long, default_value_t = 1e-13)]
    pub tol: f64,

    /// Also report this many derivatives of log zeta (orders 0..K-1).
    #[arg(long)]
    pub log_derivs: Option<usize>,

    /// Cauchy circle radius for the derivatives.
    #[arg(long)]
    pub radius: Option<f64>,
}

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub target: TargetArgs,

    #[command(flatten)]
    pub constants: ConstantArgs,

    #[arg(long, default_value_t = 1e6)]
    pub max_u0: f64,
}
