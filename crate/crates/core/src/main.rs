use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use qftlab::cli::{run, Command, RunOptions};

#[derive(Parser, Debug)]
#[command(name = "qftlab", version, about = "Sphere-regularized scalar field experiments")]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides `experiment.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; falls back to QFTLAB_THREADS.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let options = RunOptions {
        config: args.config,
        out_dir: args.out,
        seed: args.seed,
        threads: args.threads,
    };
    let code = match run(args.command, &options) {
        Ok(report) => {
            for v in &report.outcome.verdicts {
                println!("{:<24} {} {:.3e}", v.suite, if v.pass { "PASS" } else { "FAIL" }, v.worst_margin);
            }
            report.exit_code()
        }
        Err(e) => {
            eprintln!("qftlab {}: {e}", args.command.name());
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
