//! `anaconda` command line: run experiment sweeps, run property suites,
//! and export trace files.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage, configuration
//! or I/O error.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anaconda_core::harness::{run_sweep, ExperimentConfig, SweepResult};
use anaconda_core::trace_io::{
    read_aggregate, read_trace, round_sig9, write_aggregate, write_trace, AGGREGATE_COLUMNS, TRACE_COLUMNS,
};
use anaconda_core::verify::{run_suite, SUITES};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "anaconda",
    version,
    about = "Distributed coverage coordination simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment sweep and write traces, aggregates and a manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `master_seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for trials (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run a property suite and report measured margins.
    Verify {
        #[arg(long, value_parser = suite_names())]
        suite: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print a trace or aggregate file in another tabular format.
    Export {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

fn suite_names() -> Vec<&'static str> {
    let mut names = SUITES.to_vec();
    names.push("all");
    names
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Tsv,
    Json,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(PathBuf, io::Error),
    Core(anaconda_core::Error),
    VerificationFailed,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Io(path, e) => write!(f, "{}: {e}", path.display()),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::VerificationFailed => write!(f, "verification failed"),
        }
    }
}

impl From<anaconda_core::Error> for CliError {
    fn from(e: anaconda_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::VerificationFailed => EXIT_VERIFY_FAILED,
            _ => EXIT_USAGE,
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    let result = match cli.command {
        Command::Run {
            config,
            out: dir,
            seed,
            threads,
        } => cmd_run(&config, &dir, seed, threads, out),
        Command::Verify { suite, seed } => cmd_verify(&suite, seed, out),
        Command::Export { trace, format } => cmd_export(&trace, format, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            if !matches!(e, CliError::VerificationFailed) {
                let _ = writeln!(err, "error: {e}");
            }
            e.exit_code()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// SHA-256 of the effective config serialized as compact JSON.
    pub config_hash: String,
    pub master_seed: u64,
    pub version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub trials: usize,
    pub disconnected_trials: usize,
    /// Paths relative to the output directory, sorted.
    pub files: Vec<String>,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

pub fn config_hash(config: &ExperimentConfig) -> String {
    let bytes = serde_json::to_vec(config).expect("config serializes");
    Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Writes through a temporary sibling and renames it into place.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| CliError::Io(tmp.clone(), e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    ExperimentConfig::from_json(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn sweep(config: &ExperimentConfig, threads: Option<usize>) -> Result<SweepResult, CliError> {
    match threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?;
            Ok(pool.install(|| run_sweep(config))?)
        }
        None => Ok(run_sweep(config)?),
    }
}

fn cmd_run(
    config_path: &Path,
    dir: &Path,
    seed: Option<u64>,
    threads: Option<usize>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let started = unix_now();
    let mut config = load_config(config_path)?;
    if let Some(seed) = seed {
        config.master_seed = seed;
    }
    let result = sweep(&config, threads)?;

    for sub in ["traces", "aggregate"] {
        let p = dir.join(sub);
        fs::create_dir_all(&p).map_err(|e| CliError::Io(p, e))?;
    }
    let mut files = Vec::new();
    for v in &result.variants {
        let label = v.key.label();
        for t in &v.trials {
            let rel = format!("traces/{label}_trial{:03}.csv", t.trial);
            let mut buf = Vec::new();
            write_trace(&mut buf, &t.rows, b',')?;
            write_atomic(&dir.join(&rel), &buf)?;
            files.push(rel);
        }
        let rel = format!("aggregate/{label}.csv");
        let mut buf = Vec::new();
        write_aggregate(&mut buf, &v.curve, b',')?;
        write_atomic(&dir.join(&rel), &buf)?;
        files.push(rel);
        let _ = writeln!(
            out,
            "{label}: first {:.3} final {:.3}",
            v.first_coverage, v.final_coverage
        );
    }
    files.sort();
    let _ = writeln!(
        out,
        "{} trials, {} with a disconnected communication graph",
        config.trials, result.disconnected_trials
    );
    let manifest = RunManifest {
        config_hash: config_hash(&config),
        master_seed: config.master_seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix: started,
        finished_unix: unix_now(),
        trials: config.trials,
        disconnected_trials: result.disconnected_trials,
        files,
    };
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    write_atomic(&dir.join("manifest.json"), &json)
}

fn cmd_verify(suite: &str, seed: u64, out: &mut dyn Write) -> Result<(), CliError> {
    let names: Vec<&str> = if suite == "all" {
        SUITES.to_vec()
    } else {
        vec![suite]
    };
    let mut all_passed = true;
    for name in names {
        let report = run_suite(name, seed)?;
        for line in &report.lines {
            let _ = writeln!(out, "  {line}");
        }
        let _ = writeln!(
            out,
            "suite {}: {}",
            report.suite,
            if report.passed { "PASS" } else { "FAIL" }
        );
        all_passed &= report.passed;
    }
    if all_passed {
        Ok(())
    } else {
        Err(CliError::VerificationFailed)
    }
}

#[derive(Serialize)]
struct AggregatePoint {
    time_s: f64,
    mean_coverage: f64,
    std_coverage: f64,
}

fn cmd_export(path: &Path, format: Format, out: &mut dyn Write) -> Result<(), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    let header = text.lines().next().unwrap_or_default();
    let delimiter = if header.contains('\t') { b'\t' } else { b',' };
    let columns: Vec<&str> = header.split(delimiter as char).collect();
    let out_delim = match format {
        Format::Tsv => b'\t',
        _ => b',',
    };
    let io_err = |e| CliError::Io(PathBuf::from("<stdout>"), e);
    if columns == TRACE_COLUMNS {
        let mut rows = read_trace(text.as_bytes(), delimiter)?;
        match format {
            Format::Json => {
                for r in &mut rows {
                    r.sim_seconds = round_sig9(r.sim_seconds);
                    r.f_value = round_sig9(r.f_value);
                    r.coverage_fraction = round_sig9(r.coverage_fraction);
                }
                serde_json::to_writer_pretty(&mut *out, &rows).map_err(|e| io_err(e.into()))?;
                writeln!(out).map_err(io_err)?;
            }
            _ => write_trace(&mut *out, &rows, out_delim)?,
        }
    } else if columns == AGGREGATE_COLUMNS {
        let curve = read_aggregate(text.as_bytes(), delimiter)?;
        match format {
            Format::Json => {
                let points: Vec<AggregatePoint> = (0..curve.len())
                    .map(|k| AggregatePoint {
                        time_s: round_sig9(curve.time_grid[k]),
                        mean_coverage: round_sig9(curve.mean_coverage[k]),
                        std_coverage: round_sig9(curve.std_coverage[k]),
                    })
                    .collect();
                serde_json::to_writer_pretty(&mut *out, &points).map_err(|e| io_err(e.into()))?;
                writeln!(out).map_err(io_err)?;
            }
            _ => write_aggregate(&mut *out, &curve, out_delim)?,
        }
    } else {
        return Err(CliError::Usage(format!(
            "{}: unrecognized header {header:?}",
            path.display()
        )));
    }
    Ok(())
}
