use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sql2circuits_cli::{execute, CliError, Command, Metric, Overrides, RunConfig, Status, Task};
use sql2circuits_core::workload::toy_execute;

#[derive(Parser)]
#[command(
    name = "sql2circuits",
    version,
    about = "Encode SQL queries as parametrized quantum circuits and train them to classify query cost"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// JSON run configuration; flags below take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    task: Option<Task>,
    /// Number of output qubits (2^qs classes).
    #[arg(long, global = true)]
    qs: Option<usize>,
    #[arg(long, global = true)]
    workdir: Option<PathBuf>,
    /// Proceed although the workdir was set up under a different config.
    #[arg(long = "override", global = true)]
    allow_override: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate synthetic queries from the seed specification.
    Generate,
    /// Label queries, bin them into classes and split the dataset.
    Labels,
    /// Compile every query to diagrams and a circuit.
    Encode,
    /// Train incrementally and write the trace and checkpoints.
    Train,
    /// Compute expressibility or entangling capability of the circuits.
    Analyze {
        #[arg(long, value_enum)]
        metric: Metric,
    },
    /// Read one query on stdin and print `execution_ms,cardinality` from the
    /// built-in synthetic cost model.
    #[command(hide = true)]
    ToyExecutor,
}

fn toy_executor() -> ExitCode {
    let mut sql = String::new();
    if std::io::stdin().read_to_string(&mut sql).is_err() {
        return ExitCode::FAILURE;
    }
    match toy_execute(sql.trim()) {
        Some((ms, card)) => {
            println!("{ms},{card}");
            ExitCode::SUCCESS
        }
        None => ExitCode::FAILURE,
    }
}

fn threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("SQL2CIRCUITS_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("SQL2CIRCUITS_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let command = match cli.command {
        Cmd::Generate => Command::Generate,
        Cmd::Labels => Command::Labels,
        Cmd::Encode => Command::Encode,
        Cmd::Train => Command::Train,
        Cmd::Analyze { metric } => Command::Analyze(metric),
        Cmd::ToyExecutor => unreachable!("handled before configuration"),
    };
    threads()?;
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(&Overrides {
        seed: cli.seed,
        task: cli.task,
        qs: cli.qs,
        workdir: cli.workdir,
    });
    let report = execute(command, &cfg, cli.allow_override)?;
    match report.status {
        Status::NoOp => println!("{}: up to date, nothing rewritten", report.stage),
        Status::Ran { written } => println!("{}: {} ({written} files written)", report.stage, report.summary),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if matches!(cli.command, Cmd::ToyExecutor) {
        return toy_executor();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
