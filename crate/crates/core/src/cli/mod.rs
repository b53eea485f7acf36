//! Batch runner: `run`, `compare` and `gen` subcommands.

mod compare;
mod config;
mod run;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use compare::{compare, read_curve, read_summary, write_compare_csv, CompareRow, Comparison, CurvePoint};
pub use config::{RunConfig, RunPipeline, ORACLE_CAP};
pub use run::{
    bounds_header, convergence_header, run, BoxInfo, ErrorInfo, OracleInfo, ProblemInfo, RunError, RunOutcome, Seeds,
    Summary, BOUNDS_FILE, CONVERGENCE_FILE, CSV_SCHEMA_VERSION, ERROR_FILE, SUMMARY_FILE,
};

use crate::error::Error;
use crate::problems::{write_manifest, GeneratorSpec};

#[derive(Debug, Parser)]
#[command(
    name = "subscm",
    version,
    about = "Certified bounds on the smallest eigenvalue of parametric Hermitian matrices"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a greedy bound computation and write its artifacts.
    Run(RunArgs),
    /// Compare the convergence curves of two run directories.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Where to write the per-iteration CSV.
        #[arg(long, default_value = "compare.csv")]
        csv: PathBuf,
    },
    /// Write a generated problem as a manifest plus Matrix Market files.
    Gen {
        /// e.g. `random:Q=4,N=200,delta=0.2,seed=1`, `circle`, `analytic:N=100,gap=1`.
        spec: String,
        #[arg(long, default_value = "problem")]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Generator spec instead of a manifest.
    #[arg(long)]
    pub generator: Option<String>,
    #[arg(long, value_enum, default_value_t = RunPipeline::Subspace)]
    pub pipeline: RunPipeline,
    #[arg(long, default_value_t = RunConfig::default().eps)]
    pub eps: f64,
    #[arg(long, default_value_t = RunConfig::default().j_max)]
    pub j_max: usize,
    #[arg(long, default_value_t = RunConfig::default().xi_size)]
    pub xi_size: usize,
    #[arg(long, default_value_t = RunConfig::default().xi_seed)]
    pub xi_seed: u64,
    #[arg(long, default_value_t = 1)]
    pub ell: usize,
    #[arg(long)]
    pub r_max: Option<usize>,
    #[arg(long, default_value_t = RunConfig::default().eig_tol)]
    pub eig_tol: f64,
    #[arg(long, default_value_t = RunConfig::default().eig_seed)]
    pub eig_seed: u64,
    #[arg(long, default_value_t = RunConfig::default().lp_tol)]
    pub lp_tol: f64,
    /// Re-solve every LP instead of reusing still-feasible solutions.
    #[arg(long)]
    pub no_warm_start: bool,
    /// Cross-check against dense eigenvalues (N <= 800).
    #[arg(long)]
    pub oracle: bool,
    /// Recompute subspace lower bounds only where the LP changed.
    #[arg(long)]
    pub lazy: bool,
    #[arg(long, env = "SUBSCM_THREADS")]
    pub threads: Option<usize>,
    /// JSON file whose fields override the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "run")]
    pub out: PathBuf,
}

impl RunArgs {
    pub fn to_config(&self) -> crate::Result<RunConfig> {
        let cfg = RunConfig {
            pipeline: self.pipeline,
            manifest: self.manifest.clone(),
            generator: self.generator.clone(),
            eps: self.eps,
            j_max: self.j_max,
            xi_size: self.xi_size,
            xi_seed: self.xi_seed,
            ell: self.ell,
            r_max: self.r_max,
            eig_tol: self.eig_tol,
            eig_seed: self.eig_seed,
            lp_tol: self.lp_tol,
            warm_start: !self.no_warm_start,
            oracle: self.oracle,
            lazy: self.lazy,
            threads: self.threads,
        };
        match &self.config {
            Some(path) => cfg.with_file(path),
            None => Ok(cfg),
        }
    }
}

/// Exit status for invalid input.
pub const EXIT_INVALID: i32 = 2;
/// Exit status for a failed computation.
pub const EXIT_FAILED: i32 = 1;

fn error_json(e: &Error) -> String {
    serde_json::json!({ "error": ErrorInfo::from(e) }).to_string()
}

fn report_error(e: &Error, out_dir: Option<&std::path::Path>) {
    let json = error_json(e);
    eprintln!("{json}");
    if let Some(dir) = out_dir.filter(|d| d.is_dir()) {
        let _ = std::fs::write(dir.join(ERROR_FILE), json + "\n");
    }
}

/// Parses `args` and executes the command; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { 0 };
        }
    };
    match cli.command {
        Command::Run(args) => {
            let cfg = match args.to_config() {
                Ok(c) => c,
                Err(e) => {
                    report_error(&e, None);
                    return EXIT_INVALID;
                }
            };
            match run(&cfg, &args.out) {
                Ok(outcome) => {
                    let s = &outcome.summary;
                    println!(
                        "{}: {} after {} samples, max ratio {}; artifacts in {}",
                        s.config.pipeline.as_str(),
                        s.termination,
                        s.samples,
                        s.final_max_ratio.map_or("inf".to_string(), |v| format!("{v:.3e}")),
                        outcome.out_dir.display()
                    );
                    match &outcome.error {
                        Some(e) => {
                            report_error(e, Some(&outcome.out_dir));
                            EXIT_FAILED
                        }
                        None => 0,
                    }
                }
                Err(RunError::Setup(e)) => {
                    report_error(&e, Some(&args.out));
                    EXIT_INVALID
                }
                Err(RunError::Compute(e)) => {
                    report_error(&e, Some(&args.out));
                    EXIT_FAILED
                }
            }
        }
        Command::Compare { a, b, csv } => match compare(&a, &b).and_then(|c| write_compare_csv(&c, &csv).map(|_| c)) {
            Ok(c) => {
                print!("{}", c.text);
                0
            }
            Err(e) => {
                report_error(&e, None);
                EXIT_INVALID
            }
        },
        Command::Gen { spec, out } => {
            let result = GeneratorSpec::parse(&spec).and_then(|s| {
                let family = s.build()?;
                write_manifest(&out, &family, Some(&s.to_string()))
            });
            match result {
                Ok(path) => {
                    println!("{}", path.display());
                    0
                }
                Err(e) => {
                    report_error(&e, None);
                    EXIT_INVALID
                }
            }
        }
    }
}
