//! Command-line front end: `synth`, `run` and `bench`.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bench::{write_bench, BenchSpec};
use crate::error::{Error, Result};
use crate::io::{load_matrix_csv, save_matrix_csv, TruthFile};
use crate::metrics::rms_angle_error;
use crate::mvie::{FpgmConfig, HIGH_ACCURACY_MAX_RHO};
use crate::pipeline::{recover, stage_error, PipelineConfig, PipelineError, Stage};
use crate::recovery::{RecoveryReport, StageTimings, DEFAULT_TAU};
use crate::synth::{generate, InstanceParams, SignatureLibrary};

#[derive(Debug, Parser)]
#[command(name = "mvie", version, about = "Blind SSMF recovery by maximum-volume inscribed ellipsoid")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic instance: X.csv and truth.json
    Synth(SynthArgs),
    /// Recover endmembers from a data matrix
    Run(RunArgs),
    /// Run the synthetic benchmark over a parameter grid
    Bench(BenchArgs),
}

fn parse_snr(s: &str) -> std::result::Result<f64, String> {
    match s.trim() {
        "inf" | "Inf" | "INF" | "infinity" => Ok(f64::INFINITY),
        t => t.parse::<f64>().map_err(|e| e.to_string()),
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Number of endmembers
    #[arg(long = "N")]
    pub n: usize,
    /// Number of bands
    #[arg(long = "M")]
    pub m: usize,
    /// Number of pixels
    #[arg(long = "L")]
    pub l: usize,
    /// Maximum abundance norm r, must exceed 1/sqrt(N)
    #[arg(long)]
    pub purity: f64,
    /// Signal-to-noise ratio in dB ("inf" for noiseless)
    #[arg(long, default_value = "inf", value_parser = parse_snr)]
    pub snr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Draw endmembers from a `band,name1,...` signature table instead
    #[arg(long)]
    pub library: Option<PathBuf>,
    /// Output directory for X.csv and truth.json
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverMode {
    /// Penalty continuation up to --max-rho, then extrapolation in 1/rho
    HighAccuracy,
    /// Single solve at the configured rho
    FixedRho,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Solver settings JSON (rho, eps, alpha, beta, t_max, max_iter, tol_rel)
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SolverMode::HighAccuracy)]
    pub mode: SolverMode,
    /// Final penalty weight in high-accuracy mode
    #[arg(long, default_value_t = HIGH_ACCURACY_MAX_RHO)]
    pub max_rho: f64,
    /// Relative facet slack below which a facet touches the ellipsoid
    #[arg(long, default_value_t = DEFAULT_TAU)]
    pub tau: f64,
}

impl SolverArgs {
    fn pipeline(&self, seed: u64, emit_shat: bool) -> Result<PipelineConfig> {
        let solver = match &self.config {
            Some(p) => serde_json::from_reader(File::open(p)?)?,
            None => FpgmConfig::default(),
        };
        solver.validate()?;
        if !(self.max_rho.is_finite() && self.max_rho > 0.0) {
            return Err(Error::InvalidParameter(format!("max-rho must be positive, got {}", self.max_rho)));
        }
        if !(self.tau > 0.0) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {}", self.tau)));
        }
        Ok(PipelineConfig {
            solver,
            tau: self.tau,
            high_accuracy: self.mode == SolverMode::HighAccuracy,
            max_rho: self.max_rho,
            seed,
            emit_shat,
        })
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Data matrix CSV, one row per band and one column per pixel
    #[arg(long)]
    pub input: PathBuf,
    /// Number of endmembers
    #[arg(long = "N")]
    pub n: usize,
    /// Ground-truth JSON; adds the RMS angle error to the report
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Include the abundance estimate S_hat
    #[arg(long)]
    pub emit_shat: bool,
    /// Seed for contact consolidation
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write zeros instead of wall-clock timings
    #[arg(long)]
    pub no_timings: bool,
    /// Report path (stdout if omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated model orders
    #[arg(long = "N", value_delimiter = ',', default_value = "3")]
    pub n: Vec<usize>,
    /// Comma-separated purity levels
    #[arg(long = "r", value_delimiter = ',', default_value = "0.72,0.85,1.0")]
    pub r: Vec<f64>,
    /// Comma-separated SNRs in dB ("inf" for noiseless)
    #[arg(long, value_delimiter = ',', default_value = "inf", value_parser = parse_snr)]
    pub snr: Vec<f64>,
    #[arg(long = "M", default_value_t = 50)]
    pub m: usize,
    #[arg(long = "L", default_value_t = 1000)]
    pub l: usize,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    /// Trial t of each cell uses seed base + t
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Write zeros in the timing columns (byte-identical reruns)
    #[arg(long)]
    pub no_timings: bool,
    /// Output directory for results.csv and aggregate.csv
    #[arg(long)]
    pub out: PathBuf,
}

/// Report written by `run`.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub permutation: Option<Vec<usize>>,
    #[serde(flatten)]
    pub report: RecoveryReport,
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            let mut w = BufWriter::new(File::create(p)?);
            serde_json::to_writer_pretty(&mut w, value)?;
            writeln!(w)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            serde_json::to_writer_pretty(&mut w, value)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

fn io_stage(e: Error) -> PipelineError {
    stage_error(Stage::Io, e)
}

fn param_stage(e: Error) -> PipelineError {
    match e {
        Error::Io(_) | Error::Json(_) | Error::Parse(_) => io_stage(e),
        other => stage_error(Stage::Config, other),
    }
}

pub fn cmd_synth(args: &SynthArgs) -> std::result::Result<(), PipelineError> {
    let library = match &args.library {
        Some(p) => Some(
            SignatureLibrary::from_csv(File::open(p).map_err(|e| io_stage(e.into()))?)
                .map_err(io_stage)?
                .signatures,
        ),
        None => None,
    };
    let params = InstanceParams {
        n: args.n,
        m: args.m,
        l: args.l,
        r: args.purity,
        snr_db: args.snr,
        seed: args.seed,
    };
    let truth = generate(&params, library.as_ref()).map_err(|e| stage_error(Stage::Synth, e))?;
    std::fs::create_dir_all(&args.out).map_err(|e| io_stage(e.into()))?;
    save_matrix_csv(&truth.x, &args.out.join("X.csv")).map_err(io_stage)?;
    TruthFile::new(&truth, params)
        .save(&args.out.join("truth.json"))
        .map_err(io_stage)?;
    println!(
        "wrote {} ({}x{}) and truth.json: N={} r={} snr_db={} noise_variance={:e} seed={}",
        args.out.join("X.csv").display(),
        args.m,
        args.l,
        args.n,
        args.purity,
        args.snr,
        truth.noise_variance,
        args.seed
    );
    Ok(())
}

pub fn cmd_run(args: &RunArgs) -> std::result::Result<(), PipelineError> {
    let x = load_matrix_csv(&args.input).map_err(io_stage)?;
    let truth = match &args.truth {
        Some(p) => Some(TruthFile::load(p).map_err(io_stage)?),
        None => None,
    };
    let cfg = args.solver.pipeline(args.seed, args.emit_shat).map_err(param_stage)?;
    let mut report = recover(&x, args.n, &cfg)?;
    if args.no_timings {
        report.timings = StageTimings::default();
    }
    let (phi_deg, permutation) = match truth {
        Some(t) => {
            let a = t.endmembers().map_err(io_stage)?;
            let (phi, perm) =
                rms_angle_error(&a, &report.a_hat).map_err(|e| stage_error(Stage::Recover, e))?;
            (Some(phi), Some(perm))
        }
        None => (None, None),
    };
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let out = RunReport {
        n: args.n,
        m: x.rows(),
        l: x.cols(),
        phi_deg,
        permutation,
        report,
    };
    write_json(&out, args.out.as_deref()).map_err(io_stage)?;
    if let (Some(phi), Some(_)) = (phi_deg, &args.out) {
        println!("phi_deg = {phi:.6}");
    }
    Ok(())
}

pub fn cmd_bench(args: &BenchArgs) -> std::result::Result<(), PipelineError> {
    let spec = BenchSpec {
        cells: BenchSpec::grid(&args.n, &args.r, &args.snr),
        trials: args.trials,
        base_seed: args.seed,
        m: args.m,
        l: args.l,
        pipeline: args.solver.pipeline(args.seed, false).map_err(param_stage)?,
        no_timings: args.no_timings,
    };
    let summaries = write_bench(&spec, &args.out).map_err(param_stage)?;
    for s in &summaries {
        println!(
            "N={} r={} snr_db={}: phi = {:.4} ± {:.4} deg over {}/{} trials, K ≈ {:.0}",
            s.cell.n, s.cell.r, s.cell.snr_db, s.phi_mean, s.phi_std, s.ok, s.trials, s.k_mean
        );
    }
    Ok(())
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Run(a) => cmd_run(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error [stage {}]: {}", e.stage, e.source);
            e.exit_code()
        }
    }
}
