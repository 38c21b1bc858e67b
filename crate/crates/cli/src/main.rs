use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hecke_cli::commands::{self, exit_code, Outcome, EXIT_OK, EXIT_USAGE};
use hecke_cli::config::{parse_kv, RunConfig};
use hecke_cli::golden;
use hecke_cli::output::Format;
use hecke_core::HeckeError;

#[derive(Parser)]
#[command(name = "hecke", version, about = "Exact computations on discrete Hecke pairs")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Catalog label, e.g. z:2, psl2z1p:2, bcp:3, s3-h12
    #[arg(long, global = true)]
    pair: Option<String>,
    /// File describing a custom pair (key=value lines)
    #[arg(long, global = true, conflicts_with = "pair")]
    pair_file: Option<PathBuf>,
    /// Radius of the ball the command works on
    #[arg(long, global = true)]
    rmax: Option<u32>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    max_cosets: Option<usize>,
    #[arg(long, global = true)]
    max_orbit: Option<usize>,
    /// Directory receiving <command>.json and <command>.csv
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, conflicts_with = "csv")]
    json: bool,
    #[arg(long, global = true)]
    csv: bool,
    /// key=value config file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key; repeatable
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate the coset ball and its double cosets
    Enumerate,
    /// Per-class table of L, R, Δ and lengths
    Ltable,
    /// Growth series and classification
    Growth,
    /// Rapid-decay profile
    RdProfile,
    /// Amenability (Kesten) diagnostic
    Kesten,
    /// Oracle, invariant and golden-snapshot suites
    Verify {
        /// Regenerate the golden snapshots instead of checking them
        #[arg(long)]
        bless: bool,
    },
}

fn settings(g: &Global) -> Result<BTreeMap<String, String>, HeckeError> {
    let mut s = match &g.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| HeckeError::Config(format!("{}: {e}", path.display())))?;
            parse_kv(&text)?
        }
        None => BTreeMap::new(),
    };
    for kv in &g.set {
        s.extend(parse_kv(kv)?);
    }
    let flags = [
        ("pair", g.pair.as_ref().map(|v| v.to_string())),
        ("rmax", g.rmax.map(|v| v.to_string())),
        ("seed", g.seed.map(|v| v.to_string())),
        ("caps.max_cosets", g.max_cosets.map(|v| v.to_string())),
        ("caps.max_orbit", g.max_orbit.map(|v| v.to_string())),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            s.insert(k.to_string(), v);
        }
    }
    Ok(s)
}

fn configure_threads() -> Result<(), HeckeError> {
    let Ok(v) = std::env::var("HECKE_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| HeckeError::Config(format!("HECKE_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| HeckeError::Config(e.to_string()))
}

fn run(cli: Cli) -> Result<i32, HeckeError> {
    configure_threads()?;
    let g = &cli.global;
    let pair_text = match &g.pair_file {
        Some(path) => Some(
            std::fs::read_to_string(path)
                .map_err(|e| HeckeError::Config(format!("{}: {e}", path.display())))?,
        ),
        None => None,
    };
    let cfg = RunConfig::resolve(&settings(g)?, pair_text.as_deref())?;
    let format = if g.csv { Format::Csv } else { Format::Json };
    let outcome: Outcome = match cli.command {
        Command::Enumerate => commands::cmd_enumerate(&cfg)?,
        Command::Ltable => commands::cmd_ltable(&cfg)?,
        Command::Growth => commands::cmd_growth(&cfg)?,
        Command::RdProfile => commands::cmd_rd_profile(&cfg)?,
        Command::Kesten => commands::cmd_kesten(&cfg)?,
        Command::Verify { bless: true } => {
            let dir = g
                .out
                .clone()
                .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("golden"));
            for path in golden::bless(&dir, cfg.caps)? {
                eprintln!("wrote {path}");
            }
            return Ok(EXIT_OK);
        }
        Command::Verify { bless: false } => commands::cmd_verify(&cfg)?,
    };
    outcome
        .artifact
        .emit(g.out.as_deref(), format)
        .map_err(|e| HeckeError::Config(format!("writing output: {e}")))?;
    Ok(outcome.code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { EXIT_OK as u8 });
        }
    };
    let code = match run(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    ExitCode::from(code.clamp(0, 255) as u8)
}
