//! Command-line entry points.

use std::ffi::OsString;
use std::io::{self, BufWriter};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use gpcr_core::benchmarks::true_feasible_min;

use crate::asktell::run_session;
use crate::config::{parse_override, RunConfig};
use crate::error::{CliError, CliResult};
use crate::report::{write_json, write_run_csv, RunSummary};
use crate::stats::{bench_run, stats_runner, REFERENCE_GRID};

#[derive(Debug, Parser)]
#[command(name = "gpcr", version, about = "Constrained Bayesian optimization with classified-regression GPs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One seeded run on a benchmark; writes run.csv and summary.json.
    Bench(Common),
    /// Repeated runs; writes regret_mean.csv, regret_median.csv, thresholds.csv and summary.json.
    Stats {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        repeats: Option<usize>,
        /// mesco or random
        #[arg(long)]
        method: Option<String>,
    },
    /// Ask-tell session on stdin/stdout.
    Asktell(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Configuration file of `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long)]
    pub case: Option<u8>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Extra `key=value` settings, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl Common {
    fn load(&self, extra: &[(&str, Option<String>)]) -> CliResult<RunConfig> {
        let mut pairs = Vec::new();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                pairs.push((k.to_string(), v));
            }
        };
        push("problem", self.problem.clone());
        push("case", self.case.map(|c| c.to_string()));
        push("iters", self.iters.map(|c| c.to_string()));
        push("seed", self.seed.map(|c| c.to_string()));
        push("output", self.out.as_ref().map(|p| p.display().to_string()));
        for (k, v) in extra {
            push(k, v.clone());
        }
        for s in &self.set {
            pairs.push(parse_override(s)?);
        }
        RunConfig::load(self.config.as_deref(), &pairs)
    }
}

fn benchmark(cfg: &RunConfig) -> CliResult<gpcr_core::benchmarks::SyntheticProblem> {
    cfg.problem()?
        .ok_or_else(|| CliError::config("bench and stats need a benchmark problem, not 'external'"))
}

pub fn cmd_bench(cfg: &RunConfig) -> CliResult<()> {
    let problem = benchmark(cfg)?;
    let case = cfg.case_config()?;
    let (true_min, _) = true_feasible_min(&problem, REFERENCE_GRID)?;
    let state = bench_run(&problem, &case, cfg.acquisition, cfg.iters, cfg.seed)?;
    std::fs::create_dir_all(&cfg.output)?;
    let f = std::fs::File::create(cfg.output.join("run.csv"))?;
    write_run_csv(BufWriter::new(f), &case, &state, Some(true_min))?;
    let summary = RunSummary::new(problem.name, &case, cfg.seed, &state, Some(true_min));
    write_json(&cfg.output.join("summary.json"), &summary)?;
    match &state.error {
        Some(e) => Err(CliError::runtime(e)),
        None => Ok(()),
    }
}

pub fn cmd_stats(cfg: &RunConfig) -> CliResult<()> {
    let problem = benchmark(cfg)?;
    let case = cfg.case_config()?;
    let report = stats_runner(&problem, &case, cfg.acquisition, cfg.method, cfg.iters, cfg.repeats, cfg.seed)?;
    crate::report::write_stats(&cfg.output, &report)?;
    if report.runs.is_empty() {
        return Err(CliError::runtime("every run failed"));
    }
    Ok(())
}

pub fn cmd_asktell(cfg: &RunConfig) -> CliResult<()> {
    let stdin = io::stdin();
    run_session(cfg, stdin.lock(), io::stdout().lock()).map(|_| ())
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
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
        Command::Bench(c) => c.load(&[]).and_then(|cfg| cmd_bench(&cfg)),
        Command::Stats { common, repeats, method } => common
            .load(&[
                ("repeats", repeats.map(|r| r.to_string())),
                ("method", method.clone()),
            ])
            .and_then(|cfg| cmd_stats(&cfg)),
        Command::Asktell(c) => c.load(&[]).and_then(|cfg| cmd_asktell(&cfg)),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("gpcr: {e}");
            e.exit_code()
        }
    }
}
