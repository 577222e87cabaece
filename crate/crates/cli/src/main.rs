use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use deaddrop_cli::audit::cmd_audit;
use deaddrop_cli::bench::cmd_bench;
use deaddrop_cli::config::{parse_profile, parse_seed, read, ScenarioConfig};
use deaddrop_cli::run::{cmd_run, NOTICEBOARD_FILE, TRACE_FILE};
use deaddrop_cli::vectors::cmd_vectors;
use deaddrop_cli::{CliError, Status};
use deaddrop_core::math::Profile;
use deaddrop_sim::bench::TokenMode;

const DEFAULT_SEED: &str = "646561646472";

#[derive(Parser)]
#[command(name = "deaddrop", version, about = "Dead-drop transfer simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Reuse,
    Recompute,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Test,
    Production,
}

impl ProfileArg {
    fn as_str(self) -> &'static str {
        match self {
            ProfileArg::Test => "test",
            ProfileArg::Production => "production",
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one transfer end to end.
    Run {
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Hex seed; overrides the scenario file.
        #[arg(long, env = "DEADDROP_SEED")]
        seed: Option<String>,
        /// Directory for trace.txt and noticeboard.txt.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        profile: Option<ProfileArg>,
    },
    /// Check a trace and noticeboard export.
    Audit {
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        noticeboard: Option<PathBuf>,
        /// Directory written by `run --out`; used for files not given explicitly.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count RDMPF calls and wire sizes per transfer.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "2,4,8")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Both modes when omitted.
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        /// Prime size; defaults to 64 (test) or 192 (production).
        #[arg(long)]
        bits: Option<u64>,
        #[arg(long, value_enum, default_value = "test")]
        profile: ProfileArg,
        #[arg(long, env = "DEADDROP_SEED")]
        seed: Option<String>,
    },
    /// Write capsule, HINT, envelope and reclaim vectors.
    Vectors {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = "DEADDROP_SEED")]
        seed: Option<String>,
        #[arg(long, default_value_t = 4)]
        count: usize,
    },
}

fn pick(explicit: Option<PathBuf>, dir: Option<&Path>, name: &str) -> Result<PathBuf, CliError> {
    explicit
        .or_else(|| dir.map(|d| d.join(name)))
        .ok_or_else(|| CliError::Config(format!("need --out or the path to {name}")))
}

fn dispatch(cmd: Cmd) -> Result<Status, CliError> {
    match cmd {
        Cmd::Run { scenario, seed, out, profile } => {
            let (cfg, base) = match &scenario {
                Some(p) => (ScenarioConfig::load(p)?, p.parent().unwrap_or(Path::new(".")).to_owned()),
                None => (ScenarioConfig::default(), PathBuf::from(".")),
            };
            let sc = cfg.to_scenario(&base, seed.as_deref(), profile.map(ProfileArg::as_str))?;
            let report = cmd_run(&sc, out.as_deref())?;
            println!("{}", report.summary());
            Ok(report.status)
        }
        Cmd::Audit { trace, noticeboard, out } => {
            let trace = pick(trace, out.as_deref(), TRACE_FILE)?;
            let board = pick(noticeboard, out.as_deref(), NOTICEBOARD_FILE)?;
            let report = cmd_audit(&read(&trace)?, &read(&board)?)?;
            println!("{report}");
            Ok(report.status())
        }
        Cmd::Bench { dims, n, mode, bits, profile, seed } => {
            let bits = bits.unwrap_or(match parse_profile(profile.as_str())? {
                Profile::Production => 192,
                Profile::Test => 64,
            });
            let modes = match mode {
                Some(Mode::Reuse) => vec![TokenMode::Reuse],
                Some(Mode::Recompute) => vec![TokenMode::Recompute],
                None => vec![TokenMode::Reuse, TokenMode::Recompute],
            };
            let seed = parse_seed(seed.as_deref().unwrap_or(DEFAULT_SEED))?;
            let table = cmd_bench(&dims, bits, n, &modes, &seed)?;
            println!("{}", table.render());
            Ok(table.status())
        }
        Cmd::Vectors { out, seed, count } => {
            let seed = parse_seed(seed.as_deref().unwrap_or(DEFAULT_SEED))?;
            for f in cmd_vectors(&out, &seed, count)? {
                println!("wrote {}", f.display());
            }
            Ok(Status::Success)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.status().code())
        }
    }
}
