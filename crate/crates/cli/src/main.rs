//! `msmooth`: evolutions, M-smoothers and the verification sweeps from the
//! command line.
//!
//! Exit status: 0 on success, 2 for configuration errors, 3 for numerical
//! failures (instability, unconverged quadrature), 4 for I/O and parse
//! errors. `MSMOOTH_THREADS` caps the worker pool; results do not depend on
//! it.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use msmooth::mestimate::{msmooth, Aggregate, WindowShape, WindowSpec};
use msmooth::pde1d::{linear_evolve_1d, shock_evolve_1d, Shock1DParams};
use msmooth::pde2d::{evolve_snapshots, EvolutionParams, Flow, DEFAULT_NU};
use msmooth::pgm::{read_pgm, write_pgm};
use msmooth::signal::{read_signal, write_signal};
use msmooth::verify::{
    consistency_report, sample_step_tuples, step_sweep, write_consistency_csv, write_step_csv, QuadraticJet,
    Target, DEFAULT_RADII,
};
use msmooth::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser, Debug)]
#[command(name = "msmooth", version, about = "PDE limits of order-p M-smoothers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evolve a PGM image with the explicit splitting scheme.
    Evolve(EvolveArgs),
    /// Linear order-p evolution of a 1D text signal.
    Evolve1d(Evolve1dArgs),
    /// Shock filter (1D mode limit) on a text signal.
    Shock1d(Shock1dArgs),
    /// Iterate the windowed order-p mean or mode filter on a PGM image.
    Msmooth(MsmoothArgs),
    /// Quadrature consistency sweep, written as CSV.
    Verify(VerifyArgs),
    /// Curved-step threshold experiment, written as CSV.
    StepExp(StepExpArgs),
}

#[derive(Args, Debug)]
struct EvolveArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Order of the filter whose limit is evolved.
    #[arg(long, allow_negative_numbers = true, required_unless_present = "midrange")]
    p: Option<f64>,
    /// Evolve u_t = u_etaeta (the rescaled p -> infinity limit) instead.
    #[arg(long, conflicts_with = "p")]
    midrange: bool,
    #[arg(long, default_value_t = DEFAULT_NU)]
    nu: f64,
    /// Time step; defaults to 0.9 times the stability limit.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long = "T")]
    t_stop: f64,
    /// Extra output times, comma separated; written next to `--out`.
    #[arg(long, value_delimiter = ',')]
    snapshots: Vec<f64>,
}

#[derive(Args, Debug)]
struct Evolve1dArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    p: f64,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long = "T")]
    t_stop: f64,
    /// Grid spacing of the signal.
    #[arg(long, default_value_t = 1.0)]
    h: f64,
}

#[derive(Args, Debug)]
struct Shock1dArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Time step, at most the grid spacing.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long = "T")]
    t_stop: f64,
    #[arg(long, default_value_t = 1.0)]
    h: f64,
    /// Inflection threshold on second differences.
    #[arg(long)]
    theta2: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum FilterKind {
    Pmean,
    Mode,
}

#[derive(Args, Debug)]
struct MsmoothArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    radius: f64,
    #[arg(long, value_enum)]
    filter: FilterKind,
    /// Order for `--filter pmean`.
    #[arg(long, allow_negative_numbers = true, required_if_eq("filter", "pmean"))]
    p: Option<f64>,
    /// Histogram bins per window; defaults to a rule based on window size.
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long, default_value_t = 1)]
    iters: usize,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=3))]
    dim: u8,
    /// Orders to check, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "-0.5,1,2,3")]
    p: Vec<f64>,
    /// Also check the mode.
    #[arg(long)]
    mode: bool,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_RADII)]
    radii: Vec<f64>,
    /// Draw cubic jet coefficients uniformly from [-s, s].
    #[arg(long, default_value_t = 0.0)]
    random_eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct StepExpArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of random (p, alpha, delta) tuples.
    #[arg(long, default_value_t = 20)]
    count: usize,
    /// Grid spacings, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.01,1")]
    h: Vec<f64>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Usage(_) | Error::InvalidParameter(_) => 2,
        Error::Unstable { .. } | Error::Accuracy(_) | Error::Experiment(_) | Error::OutOfBounds { .. } => 3,
        Error::Parse { .. } | Error::Io(_) => 4,
    }
}

fn snapshot_path(out: &Path, t: f64) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = out.extension().and_then(|s| s.to_str()).unwrap_or("pgm");
    out.with_file_name(format!("{stem}_t{t}.{ext}"))
}

fn run_evolve(a: &EvolveArgs) -> msmooth::Result<()> {
    let img = read_pgm(&a.input)?;
    let flow = match (a.midrange, a.p) {
        (true, _) => Flow::midrange(),
        (false, Some(p)) => Flow::OrderP(p),
        (false, None) => return Err(Error::Usage("either --p or --midrange is required".into())),
    };
    let mut params = EvolutionParams::new(flow, a.t_stop).with_nu(a.nu);
    params.tau = a.tau;
    let shots = evolve_snapshots(&img.field, &params, &a.snapshots)?;
    let (lo, hi) = (img.field.min(), img.field.max());
    for (t, u) in &shots {
        log::info!("t = {t}: range [{}, {}] (input [{lo}, {hi}])", u.min(), u.max());
        let path = if *t == a.t_stop { a.out.clone() } else { snapshot_path(&a.out, *t) };
        write_pgm(u, img.maxval, &path)?;
    }
    Ok(())
}

fn run_evolve1d(a: &Evolve1dArgs) -> msmooth::Result<()> {
    let u = read_signal(&a.input, a.h)?;
    write_signal(&linear_evolve_1d(&u, a.p, a.tau, a.t_stop)?, &a.out)
}

fn run_shock1d(a: &Shock1dArgs) -> msmooth::Result<()> {
    let u = read_signal(&a.input, a.h)?;
    let mut s = Shock1DParams::new(a.tau.unwrap_or(0.5 * a.h), a.t_stop);
    s.theta2 = a.theta2;
    write_signal(&shock_evolve_1d(&u, &s)?, &a.out)
}

fn run_msmooth(a: &MsmoothArgs) -> msmooth::Result<()> {
    let img = read_pgm(&a.input)?;
    let w = WindowSpec::new(WindowShape::Disc, a.radius)?;
    let filter = match (a.filter, a.p) {
        (FilterKind::Mode, _) => Aggregate::Mode,
        (FilterKind::Pmean, Some(p)) => Aggregate::OrderP(p),
        (FilterKind::Pmean, None) => return Err(Error::Usage("--filter pmean needs --p".into())),
    };
    let u = msmooth(&img.field, &w, filter, a.bins, a.iters)?;
    write_pgm(&u, img.maxval, &a.out)
}

/// Test jets of the default sweep, one list per dimension.
fn default_jets(dim: u8) -> Vec<QuadraticJet> {
    match dim {
        1 => vec![QuadraticJet::new_1d(1.0, 0.1), QuadraticJet::new_1d(1.0, -0.2)],
        2 => vec![QuadraticJet::new_2d(1.0, 0.1, 0.2), QuadraticJet::new_2d(1.0, 0.2, -0.1)],
        _ => vec![
            QuadraticJet::new_3d(1.0, 0.1, 0.2, 0.2),
            QuadraticJet::new_3d(1.0, 0.05, 0.3, -0.1),
        ],
    }
}

fn create(path: &Path) -> msmooth::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn run_verify(a: &VerifyArgs) -> msmooth::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let jets: Vec<QuadraticJet> = default_jets(a.dim)
        .into_iter()
        .map(|j| if a.random_eps > 0.0 { j.with_random_eps(&mut rng, a.random_eps) } else { j })
        .collect();
    let mut targets: Vec<Target> = a.p.iter().map(|&p| Target::PMean(p)).collect();
    if a.mode && a.dim > 1 {
        targets.push(Target::Mode);
    }
    let rows = consistency_report(&targets, &a.radii, &jets, a.dim as usize)?;
    let mut out = create(&a.out)?;
    write_consistency_csv(&rows, &mut out)?;
    out.flush()?;
    Ok(())
}

fn run_step_exp(a: &StepExpArgs) -> msmooth::Result<()> {
    let tuples = sample_step_tuples(a.seed, a.count);
    let mut rows = Vec::new();
    for &h in &a.h {
        rows.extend(step_sweep(&tuples, h)?);
    }
    let mut out = create(&a.out)?;
    write_step_csv(&rows, &mut out)?;
    out.flush()?;
    Ok(())
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("MSMOOTH_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("MSMOOTH_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("msmooth: {msg}");
        return ExitCode::from(2);
    }
    let result = match &cli.command {
        Command::Evolve(a) => run_evolve(a),
        Command::Evolve1d(a) => run_evolve1d(a),
        Command::Shock1d(a) => run_shock1d(a),
        Command::Msmooth(a) => run_msmooth(a),
        Command::Verify(a) => run_verify(a),
        Command::StepExp(a) => run_step_exp(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("msmooth: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
