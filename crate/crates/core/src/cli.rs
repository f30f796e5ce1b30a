//! Command-line front end.
//!
//! Every subcommand validates its options, delegates to the library, writes
//! its output file atomically and prints a one-line summary on stdout. The
//! full invocation is echoed on stderr so a run can be repeated verbatim.
//!
//! Exit status: 0 on success, 2 for invalid input, 3 for computational or
//! resource failures (size budgets, I/O, integrity checks).

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bec::{bound_curve, evolve_spectrum, exhaustive_split_oracle, one_step_profile, evaluate_erasure, polarisation_distance, MAX_ORACLE_LEN};
use crate::codec::PolarCode;
use crate::error::{Error, Result};
use crate::gf2::{enumerate_kernels, partial_distances, Kernel, KernelFamily};
use crate::io::fmt_sig;
use crate::sim::{run_sweep, write_reports_csv, StopRule};
use crate::survey::{export_survey, group_survey};

/// Environment variable naming the directory for relative output paths.
pub const OUT_DIR_ENV: &str = "GENPOLAR_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_FAILURE: i32 = 3;

/// Erasure probabilities used by `oracle-check`.
pub const ORACLE_CHECK_EPS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
const ORACLE_CHECK_TOL: f64 = 1e-12;

#[derive(Debug, Parser)]
#[command(name = "genpolar", version, about = "Generalised polar codes over the binary erasure channel")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Erasure-probability spectrum of a kernel after n levels.
    Analyze(AnalyzeArgs),
    /// Group a kernel family by polarisation distance curve.
    Survey(SurveyArgs),
    /// Partial distances and rate exponent of a kernel.
    Exponent(ExponentArgs),
    /// Union bound on block error probability at several rates.
    Bound(BoundArgs),
    /// Build a code and save its descriptor as JSON.
    Construct(ConstructArgs),
    /// Monte-Carlo simulation of SC decoding over the erasure channel.
    Simulate(SimulateArgs),
    /// Check one-step erasure maps against exhaustive enumeration.
    OracleCheck(OracleCheckArgs),
}

fn parse_kernel(s: &str) -> std::result::Result<Kernel, String> {
    s.parse::<Kernel>().map_err(|e| e.to_string())
}

fn parse_family(s: &str) -> std::result::Result<KernelFamily, String> {
    s.parse::<KernelFamily>().map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Kernel rows, comma separated (e.g. 100,110,011).
    #[arg(long, value_parser = parse_kernel)]
    pub kernel: Kernel,
    /// Erasure probability of the underlying channel.
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    /// Number of recursion levels n (N = l^n).
    #[arg(long)]
    pub depth: u32,
    /// Spectrum CSV destination.
    #[arg(long, default_value = "spectrum.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SurveyArgs {
    /// Kernel size l.
    #[arg(long)]
    pub size: usize,
    /// Kernel family: `all` or `lower-triangular`.
    #[arg(long, value_parser = parse_family, default_value = "all")]
    pub family: KernelFamily,
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    #[arg(long)]
    pub depth: u32,
    #[arg(long, default_value = "survey.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExponentArgs {
    #[arg(long, value_parser = parse_kernel)]
    pub kernel: Kernel,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long, value_parser = parse_kernel)]
    pub kernel: Kernel,
    /// Design erasure probability.
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    #[arg(long)]
    pub depth: u32,
    /// Code rates, comma separated; K = round(R·N).
    #[arg(long, value_delimiter = ',', required = true)]
    pub rates: Vec<f64>,
    #[arg(long, default_value = "bound.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    #[arg(long, value_parser = parse_kernel)]
    pub kernel: Kernel,
    #[arg(long)]
    pub depth: u32,
    /// Code rate; K = round(R·N).
    #[arg(long, conflicts_with = "k", required_unless_present = "k")]
    pub rate: Option<f64>,
    /// Number of information bits.
    #[arg(long)]
    pub k: Option<usize>,
    /// Design erasure probability.
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    #[arg(long, default_value = "code.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Code descriptor written by `construct`.
    #[arg(long, conflicts_with_all = ["kernel", "depth", "rate", "design_eps"])]
    pub code: Option<PathBuf>,
    /// Build the code on the fly from a kernel (with --depth and --rate).
    #[arg(long, value_parser = parse_kernel, requires_all = ["depth", "rate"], required_unless_present = "code")]
    pub kernel: Option<Kernel>,
    #[arg(long)]
    pub depth: Option<u32>,
    #[arg(long)]
    pub rate: Option<f64>,
    /// Design erasure probability for an on-the-fly code.
    #[arg(long, default_value_t = 0.5)]
    pub design_eps: f64,
    /// Channel erasure probabilities, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub eps: Vec<f64>,
    /// Stop a point after this many frame errors (0: run all trials).
    #[arg(long, default_value_t = 100)]
    pub min_frame_errors: u64,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_trials: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "sim.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OracleCheckArgs {
    #[arg(long, value_parser = parse_kernel)]
    pub kernel: Kernel,
    /// Recursion depth for the brute-force check; defaults to the largest
    /// depth whose block length the oracle accepts.
    #[arg(long)]
    pub depth: Option<u32>,
}

/// Resolves a relative output path against the output-directory variable.
pub fn resolve_output(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() && !dir.is_empty() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::TooLarge { .. } | Error::Io { .. } | Error::Integrity(_) => EXIT_FAILURE,
        _ => EXIT_INVALID,
    }
}

/// Runs a command and returns its summary line.
pub fn execute(cmd: Command) -> Result<String> {
    match cmd {
        Command::Analyze(a) => {
            let s = evolve_spectrum(&a.kernel, a.eps, a.depth)?;
            let out = resolve_output(&a.out);
            s.write_csv(&out)?;
            let dp = if a.eps > 0.0 {
                fmt_sig(polarisation_distance(&s)?)
            } else {
                "nan".into()
            };
            Ok(format!(
                "analyze kernel={} N={} eps={} depth={} d_p={} out={}",
                a.kernel,
                s.len(),
                fmt_sig(a.eps),
                a.depth,
                dp,
                out.display()
            ))
        }
        Command::Survey(a) => {
            let family = enumerate_kernels(a.size, a.family)?;
            let survey = group_survey(family, a.eps, a.depth)?;
            let out = resolve_output(&a.out);
            export_survey(&survey, &out)?;
            Ok(format!(
                "survey size={} kernels={} groups={} group1={} polarising={} singular={} out={}",
                a.size,
                survey.entries.len(),
                survey.groups.len(),
                survey.groups[0].member_count,
                survey.polarising_count(),
                survey.singular_count(),
                out.display()
            ))
        }
        Command::Exponent(a) => {
            let pd = partial_distances(&a.kernel)?;
            let d: Vec<String> = pd.distances.iter().map(|d| d.to_string()).collect();
            Ok(format!(
                "exponent kernel={} partial_distances={} E={}",
                a.kernel,
                d.join(","),
                fmt_sig(pd.exponent)
            ))
        }
        Command::Bound(a) => {
            let s = evolve_spectrum(&a.kernel, a.eps, a.depth)?;
            let curve = bound_curve(&s, &a.rates)?;
            let out = resolve_output(&a.out);
            curve.write_csv(&out)?;
            Ok(format!(
                "bound kernel={} N={} rows={} out={}",
                a.kernel,
                s.len(),
                curve.rows.len(),
                out.display()
            ))
        }
        Command::Construct(a) => {
            let code = match (a.rate, a.k) {
                (Some(rate), None) => PolarCode::with_rate(a.kernel, a.depth, a.eps, rate)?,
                (None, Some(k)) => PolarCode::design(a.kernel, a.depth, a.eps, k)?,
                _ => unreachable!("clap enforces exactly one of --rate and --k"),
            };
            let out = resolve_output(&a.out);
            code.write_json(&out)?;
            Ok(format!("construct {} out={}", code, out.display()))
        }
        Command::Simulate(a) => {
            let code = match (&a.code, a.kernel) {
                (Some(path), _) => PolarCode::read_json(path)?,
                (None, Some(kernel)) => PolarCode::with_rate(
                    kernel,
                    a.depth.expect("required by clap"),
                    a.design_eps,
                    a.rate.expect("required by clap"),
                )?,
                (None, None) => unreachable!("clap requires --code or --kernel"),
            };
            let stop = StopRule {
                min_frame_errors: a.min_frame_errors,
                max_trials: a.max_trials,
            };
            let reports = run_sweep(&code, &a.eps, stop, a.seed)?;
            let out = resolve_output(&a.out);
            write_reports_csv(&reports, &out)?;
            let fers: Vec<String> = reports.iter().map(|r| fmt_sig(r.fer)).collect();
            Ok(format!(
                "simulate {} points={} fer={} seed={} out={}",
                code,
                reports.len(),
                fers.join(","),
                a.seed,
                out.display()
            ))
        }
        Command::OracleCheck(a) => {
            let l = a.kernel.size();
            let depth = match a.depth {
                Some(d) => d,
                None => {
                    let mut d = 1u32;
                    while l.checked_pow(d + 1).is_some_and(|n| n <= MAX_ORACLE_LEN) {
                        d += 1;
                    }
                    d
                }
            };
            let s = |eps| evolve_spectrum(&a.kernel, eps, depth);
            let profile = one_step_profile(&a.kernel)?;
            let mut worst = 0.0f64;
            let mut checks = 0usize;
            for eps in ORACLE_CHECK_EPS {
                let spectrum = s(eps)?;
                for i in 1..=spectrum.len() {
                    let brute = exhaustive_split_oracle(&a.kernel, depth, eps, i)?;
                    worst = worst.max((brute - spectrum.z[i - 1]).abs());
                    checks += 1;
                }
                if depth == 1 {
                    for i in 1..=l {
                        let brute = exhaustive_split_oracle(&a.kernel, 1, eps, i)?;
                        worst = worst.max((brute - evaluate_erasure(&profile, i, eps)?).abs());
                    }
                }
            }
            if worst > ORACLE_CHECK_TOL {
                return Err(Error::Integrity(format!(
                    "erasure maps of {} disagree with exhaustive enumeration by {}",
                    a.kernel, worst
                )));
            }
            Ok(format!(
                "oracle-check kernel={} depth={} checks={} max_abs_diff={} ok",
                a.kernel,
                depth,
                checks,
                fmt_sig(worst)
            ))
        }
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let invocation: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    eprintln!("# {}", invocation.join(" "));
    match execute(cli.command) {
        Ok(summary) => {
            println!("{summary}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
