use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::RunArgs;
use crate::error::CliError;
use crate::report::emit_report;
use crate::suites::Session;
use crate::{json_bytes, write_file};

/// Sigma-transforms and hyperbolic unfoldings of singular hypersurfaces.
#[derive(Parser, Debug)]
#[command(name = "unfold", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build the graph; writes vertices.csv, edges.csv and manifest.json.
    Gen(RunArgs),
    /// Compute b and check the axioms and interpolation limits.
    Sigma(RunArgs),
    /// Check the comparison inequalities between d, k and d_b.
    Metric(RunArgs),
    /// Estimate the uniformity constant and build pipelines.
    Uniform(RunArgs),
    /// Estimate Gromov hyperbolicity of the sigma metric.
    Hyper(RunArgs),
    /// Build the Whitney cover and smooth delta.
    Cover(RunArgs),
    /// Trace rays and classify boundary points.
    Boundary(RunArgs),
    /// Run suites and write report.json.
    Verify(VerifyArgs),
    /// Merge the suite JSON files in a directory into report.json.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Run every suite, not just the axioms.
    #[arg(long)]
    pub all: bool,
    /// Also fail when tolerances are assumed rather than certified by refinement.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    #[arg(long, default_value = "unfold-out")]
    pub out: PathBuf,
}

fn finish(mut s: Session, strict: bool) -> Result<(), CliError> {
    s.write_tolerances(strict)?;
    for line in &s.summary {
        println!("{line}");
    }
    if s.violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::Violations(s.violations))
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    let (args, strict) = match &cli.command {
        Command::Report(r) => {
            let report = emit_report(&r.out)?;
            let path = r.out.join("report.json");
            write_file(&path, &json_bytes(&report))?;
            println!("wrote {}", path.display());
            return Ok(());
        }
        Command::Verify(v) => (&v.run, v.strict),
        Command::Gen(a) | Command::Sigma(a) | Command::Metric(a) | Command::Uniform(a) | Command::Hyper(a) | Command::Cover(a) | Command::Boundary(a) => (a, false),
    };
    let cfg = args.resolve()?;
    let mut s = Session::open(cfg, args.sigma.as_deref())?;
    s.write_run_config()?;
    match &cli.command {
        Command::Gen(_) => return s.write_graph(),
        Command::Sigma(_) => {
            s.sigma_suite()?;
            s.interpolation_suite()?;
        }
        Command::Metric(_) => s.inequality_suite()?,
        Command::Uniform(_) => s.uniformity_suite()?,
        Command::Hyper(_) => s.hyperbolicity_suite()?,
        Command::Cover(_) => s.whitney_suite()?,
        Command::Boundary(_) => s.boundary_suite()?,
        Command::Verify(v) => {
            s.sigma_suite()?;
            if v.all {
                s.interpolation_suite()?;
                s.uniformity_suite()?;
                s.inequality_suite()?;
                s.hyperbolicity_suite()?;
                s.whitney_suite()?;
                s.boundary_suite()?;
            }
            s.write_tolerances(strict)?;
            let report = emit_report(&s.cfg.out)?;
            write_file(&s.cfg.out.join("report.json"), &json_bytes(&report))?;
        }
        Command::Report(_) => unreachable!("handled above"),
    }
    finish(s, strict)
}

/// Parses `argv` (including the program name), runs it and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
