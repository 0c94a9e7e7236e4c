mod commands;
mod config;
mod error;
mod input;
mod output;

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tvmod::design::ModelSpec;
use tvmod::selection::TuningGrid;
use tvmod::simulate::BlazhkoParams;
use tvmod::spectral::{Ar2Params, DEFAULT_FLAT_RATIO};

use config::{
    parse_list, parse_sigma0, parse_tau_groups, parse_taus, parse_usize_list, FitConfig, InputConfig, RunConfig,
    SimulateConfig, Simulation, SpectrumConfig, TuneConfig,
};
use error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "tvmod", version, about = "Time-varying harmonic models for unevenly sampled light curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Penalized fit with pointwise bands.
    Fit(FitArgs),
    /// AIC search over smoothing parameters and basis structure.
    Tune(TuneArgs),
    /// Deconvolved spectral density and whiteness check.
    Spectrum(SpectrumArgs),
    /// Seeded synthetic data with ground truth.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    output_dir: PathBuf,
    /// Run configuration (or a report embedding one); replaces the other flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    /// 1-based column holding the values; time is column 1.
    #[arg(long, default_value_t = 2)]
    column: usize,
}

impl InputArgs {
    fn resolve(&self) -> CliResult<InputConfig> {
        let path = self.input.as_ref().ok_or_else(|| CliError::Usage("--input is required".into()))?;
        Ok(InputConfig {
            path: path.to_string_lossy().into_owned(),
            column: self.column,
        })
    }
}

#[derive(Args)]
struct FreqArgs {
    /// Comma-separated frequencies (cycles per time unit).
    #[arg(long)]
    freqs: Option<String>,
    #[arg(long)]
    extra_freqs: Option<String>,
}

impl FreqArgs {
    fn resolve(&self) -> CliResult<(Vec<f64>, Vec<f64>)> {
        let freqs = match &self.freqs {
            Some(s) => parse_list(s, "--freqs")?,
            None => return Err(CliError::Usage("--freqs is required".into())),
        };
        let extra = match &self.extra_freqs {
            Some(s) => parse_list(s, "--extra-freqs")?,
            None => Vec::new(),
        };
        Ok((freqs, extra))
    }
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    freqs: FreqArgs,
    /// Number of knot intervals n; the basis has n + degree functions.
    #[arg(long, conflicts_with = "basis_size")]
    knots: Option<usize>,
    /// Number of B-splines J.
    #[arg(long)]
    basis_size: Option<usize>,
    #[arg(long, default_value_t = 3)]
    degree: usize,
    #[arg(long, default_value_t = 2)]
    penalty_order: usize,
    /// One value, 2K+1 values, or groups such as `1:5;2-*:0.1`.
    #[arg(long, default_value = "0")]
    tau: String,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Denominator of the unpenalized variance in the AIC: residual-dof or observations.
    #[arg(long, default_value = "residual-dof")]
    sigma0: String,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    freqs: FreqArgs,
    /// Candidate numbers of B-splines J.
    #[arg(long)]
    basis_sizes: Option<String>,
    #[arg(long, default_value = "3")]
    degrees: String,
    #[arg(long, default_value = "2")]
    penalty_orders: String,
    /// Candidate numbers of leading frequencies; defaults to all of them.
    #[arg(long)]
    harmonics: Option<String>,
    /// Candidate values shared by every tau, or groups such as `1:0,10;2-*:0,0.1,10`.
    #[arg(long, default_value = "0")]
    tau: String,
    #[arg(long, default_value = "residual-dof")]
    sigma0: String,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    input: InputArgs,
    /// Grid origin; observation times must be t0 + k delta with k >= 1.
    #[arg(long, allow_hyphen_values = true)]
    t0: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    grid_tol: Option<f64>,
    #[arg(long, default_value_t = 0.3)]
    bandwidth: f64,
    /// Whiteness band `lo,hi` in angular frequency; defaults to the central half of (0, pi/delta).
    #[arg(long)]
    band: Option<String>,
    #[arg(long, default_value_t = DEFAULT_FLAT_RATIO)]
    flat_ratio: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Sinusoidal,
    Polynomial,
    Demo,
    Blazhko,
    Ar2,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    kind: Option<Kind>,
    /// Number of observations (for ar2, of the complete series).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Noise (or innovation) variance.
    #[arg(long)]
    sigma2: Option<f64>,
    #[arg(long, default_value_t = 1.318, allow_hyphen_values = true)]
    phi1: f64,
    #[arg(long, default_value_t = -0.634, allow_hyphen_values = true)]
    phi2: f64,
    #[arg(long, default_value_t = 0.67, allow_hyphen_values = true)]
    t0: f64,
    #[arg(long, default_value_t = 0.33)]
    delta: f64,
    #[arg(long, default_value_t = 50)]
    blocks: usize,
    #[arg(long, default_value_t = 30)]
    keep: usize,
    #[arg(long)]
    block_seed: Option<u64>,
}

fn parse_uint_axis(s: &str, what: &str) -> CliResult<Vec<usize>> {
    let v = parse_usize_list(s, what)?;
    if v.is_empty() {
        return Err(CliError::Usage(format!("{what} needs at least one value")));
    }
    Ok(v)
}

fn fit_config(a: &FitArgs) -> CliResult<RunConfig> {
    let input = a.input.resolve()?;
    let (freqs, extra) = a.freqs.resolve()?;
    let intervals = match (a.knots, a.basis_size) {
        (Some(n), _) => n,
        (None, Some(j)) if j > a.degree => j - a.degree,
        (None, Some(j)) => {
            return Err(CliError::Usage(format!("--basis-size {j} must exceed --degree {}", a.degree)));
        }
        (None, None) => return Err(CliError::Usage("--knots or --basis-size is required".into())),
    };
    let m = 2 * (freqs.len() + extra.len()) + 1;
    let taus = parse_taus(&a.tau, m)?;
    let model = ModelSpec::new(freqs, extra, intervals, a.degree, a.penalty_order, taus)?;
    Ok(RunConfig::Fit(FitConfig {
        input,
        model,
        level: a.level,
        sigma0: parse_sigma0(&a.sigma0)?,
    }))
}

fn tune_config(a: &TuneArgs) -> CliResult<RunConfig> {
    let input = a.input.resolve()?;
    let (freqs, extra) = a.freqs.resolve()?;
    let basis_sizes = match &a.basis_sizes {
        Some(s) => parse_uint_axis(s, "--basis-sizes")?,
        None => return Err(CliError::Usage("--basis-sizes is required".into())),
    };
    let harmonics = match &a.harmonics {
        Some(s) => parse_uint_axis(s, "--harmonics")?,
        None => vec![freqs.len()],
    };
    let degrees = parse_uint_axis(&a.degrees, "--degrees")?;
    let orders = parse_uint_axis(&a.penalty_orders, "--penalty-orders")?;
    let m = 2 * (freqs.len() + extra.len()) + 1;
    // every structure must be valid on its own
    for &j in &basis_sizes {
        for &d in &degrees {
            for &r in &orders {
                let spec = ModelSpec::with_basis_size(freqs.clone(), j, d, r, vec![0.0; 2 * freqs.len() + 1])?;
                spec.penalty_spec()?.validate()?;
            }
        }
    }
    let template = ModelSpec::new(freqs, extra, basis_sizes[0] - degrees[0], degrees[0], orders[0], vec![0.0; m])?;
    let grid = TuningGrid {
        tau_groups: parse_tau_groups(&a.tau)?,
        basis_sizes,
        degrees,
        penalty_orders: orders,
        harmonics,
        sigma0: parse_sigma0(&a.sigma0)?,
    };
    Ok(RunConfig::Tune(TuneConfig { input, template, grid }))
}

fn spectrum_config(a: &SpectrumArgs) -> CliResult<RunConfig> {
    let input = a.input.resolve()?;
    let (t0, delta) = match (a.t0, a.delta) {
        (Some(t0), Some(d)) => (t0, d),
        _ => return Err(CliError::Usage("--t0 and --delta are required".into())),
    };
    if !(delta > 0.0) {
        return Err(CliError::Usage(format!("--delta must be positive, got {delta}")));
    }
    let band = match &a.band {
        Some(s) => match parse_list(s, "--band")?[..] {
            [lo, hi] => (lo, hi),
            _ => return Err(CliError::Usage("--band takes two values lo,hi".into())),
        },
        None => (PI / (4.0 * delta), 3.0 * PI / (4.0 * delta)),
    };
    Ok(RunConfig::Spectrum(SpectrumConfig {
        input,
        t0,
        delta,
        grid_tol: a.grid_tol,
        bandwidth: a.bandwidth,
        band,
        flat_ratio: a.flat_ratio,
    }))
}

fn simulate_config(a: &SimulateArgs) -> CliResult<RunConfig> {
    let kind = a.kind.ok_or_else(|| CliError::Usage("--kind is required".into()))?;
    let simulation = match kind {
        Kind::Sinusoidal => Simulation::Sinusoidal {
            n: a.n.unwrap_or(500),
            sigma2: a.sigma2.unwrap_or(2.0),
        },
        Kind::Polynomial => Simulation::Polynomial {
            n: a.n.unwrap_or(500),
            sigma2: a.sigma2.unwrap_or(2.0),
        },
        Kind::Demo => Simulation::Demo {
            n: a.n.unwrap_or(500),
            sigma2: a.sigma2.unwrap_or(1.0),
        },
        Kind::Blazhko => {
            let mut params = BlazhkoParams::default();
            if let Some(s2) = a.sigma2 {
                params.sigma2 = s2;
            }
            Simulation::Blazhko {
                n: a.n.unwrap_or(1000),
                params,
            }
        }
        Kind::Ar2 => Simulation::Ar2 {
            params: Ar2Params::new(a.phi1, a.phi2, a.sigma2.unwrap_or(289.2), a.delta)?,
            t0: a.t0,
            n: a.n.unwrap_or(500),
            n_blocks: a.blocks,
            keep: a.keep,
            block_seed: a.block_seed.unwrap_or(a.seed),
        },
    };
    Ok(RunConfig::Simulate(SimulateConfig { seed: a.seed, simulation }))
}

fn resolve(common: &Common, expected: &str, build: impl FnOnce() -> CliResult<RunConfig>) -> CliResult<RunConfig> {
    match &common.config {
        Some(path) => {
            let cfg = config::load(path)?;
            let name = match &cfg {
                RunConfig::Fit(_) => "fit",
                RunConfig::Tune(_) => "tune",
                RunConfig::Spectrum(_) => "spectrum",
                RunConfig::Simulate(_) => "simulate",
            };
            if name != expected {
                return Err(CliError::Usage(format!("{} holds a {name} configuration, not {expected}", path.display())));
            }
            Ok(cfg)
        }
        None => build(),
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let (common, cfg, threads) = match &cli.command {
        Command::Fit(a) => (&a.common, resolve(&a.common, "fit", || fit_config(a))?, None),
        Command::Tune(a) => (&a.common, resolve(&a.common, "tune", || tune_config(a))?, a.threads),
        Command::Spectrum(a) => (&a.common, resolve(&a.common, "spectrum", || spectrum_config(a))?, None),
        Command::Simulate(a) => (&a.common, resolve(&a.common, "simulate", || simulate_config(a))?, None),
    };
    commands::run(&cfg, threads, &common.output_dir)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
