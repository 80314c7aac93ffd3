mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

/// Tea gateway DSL toolchain: check, dump, generate, invoke and analyze.
#[derive(Debug, Parser)]
#[command(name = "teaforge", version)]
struct Cli {
    /// Output format on stdout.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    /// Tables only (`analyze logs`, `analyze quadrant`).
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and analyze a module; report diagnostics.
    Check { file: PathBuf },
    /// Print the canonical syntax tree dump.
    Ast { file: PathBuf },
    /// Generate an SDK for one target.
    Gen {
        file: PathBuf,
        #[arg(long)]
        target: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a code sample calling one api.
    Sample {
        file: PathBuf,
        #[arg(long)]
        api: String,
        /// JSON object of arguments, or `@path` to read it from a file.
        #[arg(long, default_value = "{}")]
        args: String,
        #[arg(long)]
        target: String,
    },
    /// Run one api through the interpreter against a mock fixture.
    Invoke {
        file: PathBuf,
        #[arg(long)]
        api: String,
        /// JSON object of arguments, or `@path` to read it from a file.
        #[arg(long, default_value = "{}")]
        args: String,
        #[arg(long)]
        mock: PathBuf,
        #[arg(long, default_value_t = 0)]
        retries: u32,
        /// Pause between attempts.
        #[arg(long, default_value_t = 100)]
        backoff_ms: u64,
    },
    /// Call-log and documentation analytics.
    #[command(subcommand)]
    Analyze(Analyze),
}

#[derive(Debug, Subcommand)]
enum Analyze {
    /// Flatten two request bodies and list their differences.
    Diff {
        #[arg(long)]
        correct: PathBuf,
        #[arg(long)]
        wrong: PathBuf,
    },
    /// Per-parameter error rates from a JSONL (optionally gzipped) call log.
    Logs {
        log: PathBuf,
        #[arg(long)]
        api: Option<String>,
    },
    /// Rank apis by documentation coverage and call success rate.
    Quadrant {
        /// Directory of api documentation JSON files.
        #[arg(long)]
        docs: PathBuf,
        #[arg(long)]
        logs: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        x0: f64,
        #[arg(long, default_value_t = 0.5)]
        y0: f64,
    },
}

/// Exit statuses: 0 ok, 1 diagnostics or validation failure, 2 usage, 3 I/O.
#[derive(Debug)]
pub enum CliError {
    /// Already reported on stderr.
    Failed,
    Failure(String),
    Usage(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Failed | CliError::Failure(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> CliError {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Failed => {}
                CliError::Failure(m) | CliError::Usage(m) | CliError::Io(m) => report::error(m),
            }
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let table_command = matches!(
        cli.command,
        Command::Analyze(Analyze::Logs { .. } | Analyze::Quadrant { .. })
    );
    if cli.format == Format::Csv && !table_command {
        return Err(CliError::Usage("--format csv applies only to 'analyze logs' and 'analyze quadrant'".into()));
    }
    let f = cli.format;
    match cli.command {
        Command::Check { file } => commands::check(&file, f),
        Command::Ast { file } => commands::ast(&file, f),
        Command::Gen { file, target, out } => commands::gen(&file, &target, &out, f),
        Command::Sample { file, api, args, target } => commands::sample(&file, &api, &args, &target, f),
        Command::Invoke { file, api, args, mock, retries, backoff_ms } => {
            commands::invoke(&file, &api, &args, &mock, retries, backoff_ms, f)
        }
        Command::Analyze(Analyze::Diff { correct, wrong }) => commands::analyze_diff(&correct, &wrong, f),
        Command::Analyze(Analyze::Logs { log, api }) => commands::analyze_logs(&log, api.as_deref(), f),
        Command::Analyze(Analyze::Quadrant { docs, logs, x0, y0 }) => {
            commands::analyze_quadrant(&docs, &logs, (x0, y0), f)
        }
    }
}
