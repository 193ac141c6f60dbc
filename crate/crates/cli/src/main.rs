use std::process::ExitCode;

use clap::{Parser, Subcommand};
use might_cli::commands::{
    run_benchmark, run_classify, run_estimate, run_infer, run_normality, run_simulate, BenchmarkArgs,
    ClassifyArgs, EstimateArgs, InferArgs, NormalityArgs, SimulateArgs,
};

/// Joint estimation of sparse precision matrices across related datasets.
#[derive(Debug, Parser)]
#[command(name = "might", version, about)]
struct Cli {
    /// Worker threads; 0 uses every available core. Outputs do not depend on it.
    #[arg(long, global = true, env = "MIGHT_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the joint precision matrices of several datasets.
    Estimate(EstimateArgs),
    /// Write a synthetic truth and sampled datasets.
    Simulate(SimulateArgs),
    /// Score the estimator over replicated synthetic experiments.
    Benchmark(BenchmarkArgs),
    /// Standard errors, z-scores and confidence intervals of an estimate.
    Infer(InferArgs),
    /// Quadratic discriminant analysis with estimated class precisions.
    Classify(ClassifyArgs),
    /// Monte-Carlo distribution of studentized entries.
    Normality(NormalityArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let threads = cli.threads;
    let result = match &cli.command {
        Command::Estimate(a) => run_estimate(a, threads),
        Command::Simulate(a) => run_simulate(a),
        Command::Benchmark(a) => run_benchmark(a, threads),
        Command::Infer(a) => run_infer(a, threads),
        Command::Classify(a) => run_classify(a, threads),
        Command::Normality(a) => run_normality(a, threads),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
