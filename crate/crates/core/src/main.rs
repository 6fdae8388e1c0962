use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use evolim::cli::{self, RunOptions};
use evolim::Error;

/// Small-mutation limit of chemostat competition models.
///
/// Every flag can also be set through the environment variable in brackets.
#[derive(Debug, Parser)]
#[command(name = "evolim", version, about)]
struct Args {
    /// Output directory (overrides the scenario's output.dir).
    #[arg(long, global = true, env = "EVOLIM_OUT")]
    out: Option<PathBuf>,
    /// Worker threads for concurrent eps runs.
    #[arg(long, global = true, env = "EVOLIM_THREADS")]
    threads: Option<usize>,
    /// error, warn, info, debug or trace.
    #[arg(long, global = true, env = "EVOLIM_LOG_LEVEL", default_value = "warn")]
    log_level: log::LevelFilter,
    /// Seed of the sampled model checks (overrides the scenario's seed).
    #[arg(long, global = true, env = "EVOLIM_SEED")]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the solver selected in the scenario.
    Run { scenario: PathBuf },
    /// Check the scenario and the model without running a solver.
    Validate { scenario: PathBuf },
    /// Run every eps of the scenario plus the limit, and compare them.
    Sweep { scenario: PathBuf },
    /// Summarize a sweep directory.
    Report { dir: PathBuf },
}

fn error_report(e: &Error) -> String {
    let mut v = serde_json::json!({
        "status": "error",
        "kind": e.kind(),
        "exit_code": e.exit_code(),
        "message": e.to_string(),
    });
    if let Error::NonConvergence {
        at_time: Some(t), ..
    }
    | Error::BlowUp { t, .. } = e
    {
        v["t"] = serde_json::json!(t);
    }
    v.to_string()
}

fn main() -> ExitCode {
    let args = Args::parse();
    env_logger::Builder::new()
        .filter_level(args.log_level)
        .parse_default_env()
        .init();
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            log::warn!("thread pool: {e}");
        }
    }
    let opts = RunOptions {
        out: args.out,
        seed: args.seed,
    };

    let result = match &args.command {
        Command::Run { scenario } => cli::run_scenario(scenario, &opts).map(|s| {
            println!("{}", serde_json::to_string(&s).expect("summary serializes"));
            0
        }),
        Command::Sweep { scenario } => cli::sweep(scenario, &opts).map(|s| {
            println!("{}", serde_json::to_string(&s).expect("summary serializes"));
            0
        }),
        Command::Validate { scenario } => cli::validate_scenario(scenario, &opts).map(|r| {
            println!("{}", r.to_json());
            if r.passed {
                0
            } else {
                2
            }
        }),
        Command::Report { dir } => cli::report(dir).map(|s| {
            print!("{}", s.render());
            0
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{}", error_report(&e));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
