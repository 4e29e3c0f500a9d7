//! Command-line front end.
//!
//! Exit status: 0 when every requested check passes, 1 when a numeric check
//! fails its band, 2 on bad arguments or configuration.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::circuit::{AnsatzLabel, Observable};
use crate::error::{Error, Result};
use crate::experiment::{self, ExperimentConfig, MeanMode, VarianceRecord};
use crate::gradient::{gradcheck_suite, DEFAULT_FD_STEP};
use crate::haar::verify_lemma_suite;
use crate::theory;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_BAD_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "quditbp",
    version,
    about = "Gradient-variance experiments for layered qudit circuits"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Variance against qudit dimension for every (n, d', L) cell.
    SweepDim(SweepArgs),
    /// Variance against qudit count, with exponential-decay fits.
    SweepQudits(SweepArgs),
    /// Monte-Carlo checks of the Haar moment identities.
    VerifyLemmas(LemmaArgs),
    /// Analytic gradient against central finite differences.
    Gradcheck(GradcheckArgs),
    /// Closed-form variance predictions.
    Theory(TheoryArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObservableArg {
    /// `|0…0⟩⟨0…0|`
    Zero,
    Identity,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_parser = parse_label)]
    pub ansatz: Option<AnsatzLabel>,
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    #[arg(long, alias = "dim", value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub layers: Option<Vec<usize>>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    #[arg(long)]
    pub threads: Option<usize>,
    /// JSON file with `ExperimentConfig` fields; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = parse_mean_mode)]
    pub mean_mode: Option<MeanMode>,
}

#[derive(Debug, Args)]
pub struct LemmaArgs {
    #[arg(long, alias = "dim", value_delimiter = ',', default_value = "2,3,4")]
    pub dims: Vec<usize>,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 10)]
    pub tuples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 500)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_FD_STEP)]
    pub step: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long, alias = "dims", value_delimiter = ',', required = true)]
    pub dim: Vec<usize>,
    #[arg(long, value_enum, default_value_t = ObservableArg::Zero)]
    pub observable: ObservableArg,
}

fn parse_label(s: &str) -> std::result::Result<AnsatzLabel, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_mean_mode(s: &str) -> std::result::Result<MeanMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_BAD_CONFIG
            } else {
                EXIT_OK
            };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{text}")
            } else {
                write!(stdout, "{text}")
            };
            return code;
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_BAD_CONFIG
        }
    }
}

fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> Result<T> + Send,
) -> Result<T> {
    match threads {
        None => f(),
        Some(0) => Err(Error::Config("--threads must be at least 1".into())),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(f),
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    match command {
        Command::SweepDim(args) => {
            let config = resolve_config(&args, ExperimentConfig::default_grid(AnsatzLabel::D))?;
            let report = with_threads(args.threads, || experiment::sweep_dimension(&config))?;
            for w in &report.warnings {
                writeln!(stderr, "warning: {w}")?;
            }
            emit(&args, &config, &report.records, stdout)?;
            Ok(EXIT_OK)
        }
        Command::SweepQudits(args) => {
            let base =
                ExperimentConfig::new(AnsatzLabel::A, (2..=6).collect(), vec![2, 3], vec![10]);
            let config = resolve_config(&args, base)?;
            let sweep = with_threads(args.threads, || experiment::sweep_qudits(&config))?;
            for w in &sweep.warnings {
                writeln!(stderr, "warning: {w}")?;
            }
            for f in &sweep.fits {
                writeln!(
                    stderr,
                    "fit d'={} L={}: slope={:.6} intercept={:.6} r2={:.6}",
                    f.d_prime, f.layers, f.fit.slope, f.fit.intercept, f.fit.r_squared
                )?;
            }
            emit(&args, &config, &sweep.records, stdout)?;
            Ok(EXIT_OK)
        }
        Command::VerifyLemmas(args) => {
            if args.samples < 2 || args.tuples == 0 || args.dims.iter().any(|&d| d < 2) {
                return Err(Error::Config(
                    "need samples >= 2, tuples >= 1 and every d >= 2".into(),
                ));
            }
            let checks = with_threads(args.threads, || {
                verify_lemma_suite(&args.dims, args.samples, args.tuples, args.seed)
            })?;
            writeln!(
                stdout,
                "check,d,case,estimate_re,estimate_im,closed_re,closed_im,std_err,z,band,result"
            )?;
            let mut failed = 0;
            for c in &checks {
                let m = &c.moment;
                let ok = c.passed();
                failed += usize::from(!ok);
                writeln!(
                    stdout,
                    "{},{},{},{:.6e},{:.6e},{:.6e},{:.6e},{:.3e},{:.3},{},{}",
                    c.kind,
                    c.d,
                    c.case,
                    m.estimate.re,
                    m.estimate.im,
                    m.closed_form.re,
                    m.closed_form.im,
                    m.standard_error,
                    m.z_score(),
                    c.sigmas,
                    if ok { "PASS" } else { "FAIL" }
                )?;
            }
            writeln!(stderr, "{} checks, {} failed", checks.len(), failed)?;
            Ok(if failed == 0 {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            })
        }
        Command::Gradcheck(args) => {
            if args.trials == 0
                || args.step.is_nan()
                || args.step <= 0.0
                || args.tol.is_nan()
                || args.tol <= 0.0
            {
                return Err(Error::Config(
                    "need trials >= 1, step > 0 and tol > 0".into(),
                ));
            }
            let report = with_threads(args.threads, || {
                gradcheck_suite(args.trials, args.seed, args.step)
            })?;
            let ok = report.max_abs_diff <= args.tol;
            writeln!(
                stdout,
                "trials={} max_abs_diff={:.3e} max_abs_grad={:.6} tol={:.1e} {}",
                report.trials,
                report.max_abs_diff,
                report.max_abs_gradient,
                args.tol,
                if ok { "PASS" } else { "FAIL" }
            )?;
            Ok(if ok { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
        Command::Theory(args) => {
            writeln!(
                stdout,
                "n,d_prime,d,trace_o,trace_o2,theorem1_var,corollary1_var"
            )?;
            for &n in &args.n {
                for &dp in &args.dim {
                    let observable = match args.observable {
                        ObservableArg::Zero => Observable::global_zero_projector(n, dp)?,
                        ObservableArg::Identity => Observable::identity(n, dp)?,
                    };
                    let p = theory::theorem1_variance(&observable, n, dp)?;
                    let c = theory::corollary1_variance(n, dp)?;
                    writeln!(
                        stdout,
                        "{n},{dp},{},{},{},{},{}",
                        p.register_dim,
                        p.observable_trace,
                        p.observable_trace_sq,
                        experiment::sci(p.variance),
                        experiment::sci(c)
                    )?;
                }
            }
            Ok(EXIT_OK)
        }
    }
}

fn resolve_config(args: &SweepArgs, base: ExperimentConfig) -> Result<ExperimentConfig> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => base,
    };
    if let Some(a) = args.ansatz {
        config.template = a;
    }
    if let Some(n) = &args.n {
        config.n = n.clone();
    }
    if let Some(d) = &args.dims {
        config.d_prime = d.clone();
    }
    if let Some(l) = &args.layers {
        config.layers = l.clone();
    }
    if let Some(s) = args.samples {
        config.samples = s;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(m) = args.mean_mode {
        config.mean_mode = m;
    }
    config.validate()?;
    Ok(config)
}

fn emit(
    args: &SweepArgs,
    config: &ExperimentConfig,
    records: &[VarianceRecord],
    stdout: &mut dyn Write,
) -> Result<()> {
    match &args.out {
        Some(path) => {
            let mut file = BufWriter::new(File::create(path)?);
            write_records(args.format, config, records, &mut file)?;
            file.flush()?;
        }
        None => write_records(args.format, config, records, stdout)?,
    }
    Ok(())
}

fn write_records(
    format: OutputFormat,
    config: &ExperimentConfig,
    records: &[VarianceRecord],
    out: &mut dyn Write,
) -> Result<()> {
    match format {
        OutputFormat::Csv => experiment::write_csv(records, out),
        OutputFormat::Json => experiment::write_json(config, records, out),
    }
}
