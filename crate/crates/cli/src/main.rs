mod commands;
mod config;
mod eval;
mod input;
mod serve;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Settings;

#[derive(Parser)]
#[command(name = "builderkit", version, about = "Collaborative building games: data, scoring, serving and evaluation")]
struct Cli {
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[arg(long, global = true, env = "BUILDERKIT_SEED")]
    seed: Option<u64>,
    /// TOML settings file; server keys at top level, plus [clean], [taxonomy] and [score] tables.
    #[arg(long, global = true, env = "BUILDERKIT_CONFIG")]
    config: Option<PathBuf>,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load and clean records, writing kept and rejected sets.
    Ingest {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Corpus overview tables.
    Stats {
        paths: Vec<PathBuf>,
    },
    /// Score a final grid against a target.
    Score {
        g0: PathBuf,
        g: PathBuf,
        target: PathBuf,
        /// Disable the horizontal shift search.
        #[arg(long)]
        no_shift: bool,
        /// Shift search radius in blocks.
        #[arg(long)]
        radius: Option<i32>,
    },
    /// Run an agent over a task set and print its leaderboard row.
    Evaluate(EvaluateArgs),
    /// Replay builder records and check their ending states.
    Replay {
        record: PathBuf,
        /// Grid the first record of each game starts from (empty by default).
        #[arg(long)]
        start: Option<PathBuf>,
    },
    /// Aggregate comparison verdicts.
    Tally {
        log_dir: PathBuf,
    },
    /// Run the game server until interrupted.
    Serve {
        config_path: Option<PathBuf>,
    },
    /// Label structures with the taxonomy.
    Classify {
        structures: PathBuf,
    },
}

#[derive(Args)]
pub struct EvaluateArgs {
    /// JSON task set: [{"id", "initial", "target"}].
    pub task_set: Option<PathBuf>,
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    pub run_config: Option<PathBuf>,
    /// builtin:grammar, builtin:noop, or the host:port stream address of a live server.
    #[arg(long, env = "BUILDERKIT_AGENT_ENDPOINT")]
    pub agent: Option<String>,
    /// Agent id on the live server.
    #[arg(long, env = "BUILDERKIT_AGENT_ID")]
    pub agent_id: Option<String>,
    /// Admin HTTP address of the live server.
    #[arg(long, env = "BUILDERKIT_ADMIN_ADDR")]
    pub admin: Option<String>,
    #[arg(long, env = "BUILDERKIT_EPISODES_PER_TASK")]
    pub episodes: Option<u32>,
    #[arg(long, env = "BUILDERKIT_TIME_BUDGET_MINUTES")]
    pub budget_minutes: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
    /// Approach name in the leaderboard row.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub no_shift: bool,
}

/// Global flags every command sees.
pub struct Ctx {
    pub json: bool,
    pub seed: Option<u64>,
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub settings: Settings,
}

/// A command that could not complete; `code` is the process exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    pub fn domain(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }
}

pub type CmdResult = Result<u8, Failure>;

fn run(cli: Cli) -> CmdResult {
    let settings = Settings::load(cli.config.as_deref()).map_err(Failure::usage)?;
    let ctx = Ctx {
        json: cli.json,
        seed: cli.seed,
        config: cli.config,
        out: cli.out,
        settings,
    };
    match cli.command {
        Command::Ingest { paths } => commands::ingest(&ctx, &paths),
        Command::Stats { paths } => commands::stats(&ctx, &paths),
        Command::Score { g0, g, target, no_shift, radius } => {
            commands::score(&ctx, &g0, &g, &target, no_shift, radius)
        }
        Command::Evaluate(args) => eval::evaluate(&ctx, args),
        Command::Replay { record, start } => commands::replay(&ctx, &record, start.as_deref()),
        Command::Tally { log_dir } => commands::tally(&ctx, &log_dir),
        Command::Serve { config_path } => serve::serve(&ctx, config_path.or(ctx.config.clone())),
        Command::Classify { structures } => commands::classify(&ctx, &structures),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("builderkit: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
