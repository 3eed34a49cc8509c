use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use nodecount::GraphSpec;
use nodecount_cli::grid::{grid_csv, run_grid, GridMode};
use nodecount_cli::scenario::{load_scenario, run_scenario, Reading, Shots};
use nodecount_cli::tables::{
    landscape_csv, oracle_check, oracle_corpus, oracle_csv, thresholds_csv,
};
use nodecount_cli::{CliError, Result};

#[derive(Parser)]
#[command(
    name = "nodecount",
    version,
    about = "Count classical nodes in graph-state networks"
)]
struct Cli {
    /// Global seed; per-setting and per-row seeds are derived from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Shots per measurement setting.
    #[arg(long, global = true, conflicts_with = "exact")]
    shots: Option<u64>,
    /// Exact expectation values instead of sampling.
    #[arg(long, global = true)]
    exact: bool,
    /// Write output files into this directory instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Graph description (TOML, or JSON by extension).
    #[arg(long, global = true)]
    graph: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Threshold fidelities, with brute-force values when --graph is given.
    Thresholds {
        #[arg(long, default_value_t = 18)]
        max_nc: u32,
    },
    /// Run one scenario file and print its report.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Optimal cheating on GHZ networks over ranges of n_q and n_c.
    Grid {
        /// Range such as `1..6` (inclusive), `1,2,4` or `3`.
        #[arg(long, default_value = "1..6")]
        nq: String,
        #[arg(long, default_value = "1..18")]
        nc: String,
        #[arg(long, value_enum, default_value_t = ReadingArg::General)]
        reading: ReadingArg,
        /// Size each sampled row so its standard error is about this value.
        #[arg(long, conflicts_with_all = ["shots", "exact"])]
        target_error: Option<f64>,
    },
    /// Exact fidelity over the (theta, phi) plane of the cheating state.
    Landscape {
        #[arg(long, default_value_t = 1)]
        nq: usize,
        #[arg(long, default_value_t = 1)]
        nc: usize,
        #[arg(long, default_value_t = 101)]
        theta_steps: usize,
        #[arg(long, default_value_t = 101)]
        phi_steps: usize,
    },
    /// Compare brute-force maxima with the closed-form thresholds.
    OracleCheck {
        /// Largest graph in the star/chain/ring corpus.
        #[arg(long, default_value_t = 6)]
        max_n: usize,
        #[arg(long, default_value_t = 3)]
        max_nc: usize,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ReadingArg {
    General,
    Projection,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nodecount: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let start = Instant::now();
    let graph = cli.graph.as_deref().map(load_graph).transpose()?;
    let seed = cli.seed.unwrap_or(0);
    match cli.command {
        Command::Thresholds { max_nc } => {
            let target = graph.map(|g| g.to_target()).transpose()?;
            emit(
                cli.out.as_deref(),
                "thresholds.csv",
                &thresholds_csv(max_nc, target.as_ref())?,
            )?;
        }
        Command::Simulate { config } => {
            let mut s = load_scenario(&config)?;
            if let Some(g) = graph {
                s.target = g;
            }
            if let Some(seed) = cli.seed {
                s.seed = seed;
            }
            if let Some(k) = cli.shots {
                s.shots = shots(k)?;
            }
            if cli.exact {
                s.shots = Shots::Exact;
            }
            let report = run_scenario(&s)?;
            emit(cli.out.as_deref(), "report.json", &report.to_json())?;
        }
        Command::Grid {
            nq,
            nc,
            reading,
            target_error,
        } => {
            if graph.is_some() {
                return Err(CliError::Config(
                    "grid runs GHZ targets; --graph is not used".into(),
                ));
            }
            let mode = match (target_error, cli.shots) {
                (Some(e), _) => GridMode::TargetError(e),
                (None, Some(k)) => GridMode::Shots(shots(k).map(|_| k)?),
                (None, None) => GridMode::Exact,
            };
            let reading = match reading {
                ReadingArg::General => Reading::General,
                ReadingArg::Projection => Reading::Projection,
            };
            let rows = run_grid(&parse_range(&nq)?, &parse_range(&nc)?, mode, reading, seed)?;
            emit(cli.out.as_deref(), "grid.csv", &grid_csv(&rows)?)?;
        }
        Command::Landscape {
            nq,
            nc,
            theta_steps,
            phi_steps,
        } => {
            if graph.is_some() {
                return Err(CliError::Config(
                    "landscape runs GHZ targets; --graph is not used".into(),
                ));
            }
            emit(
                cli.out.as_deref(),
                "landscape.csv",
                &landscape_csv(nq, nc, theta_steps, phi_steps)?,
            )?;
        }
        Command::OracleCheck { max_n, max_nc } => {
            let graphs = match graph {
                Some(g) => vec![(
                    format!("{:?}{}", g.kind, g.n).to_lowercase(),
                    g.to_target()?,
                )],
                None => oracle_corpus(max_n)?,
            };
            let rows = oracle_check(&graphs, max_nc)?;
            emit(cli.out.as_deref(), "oracle_check.csv", &oracle_csv(&rows)?)?;
            let failed = rows.iter().filter(|r| !r.pass()).count();
            if failed > 0 {
                return Err(CliError::CheckFailed(format!(
                    "{failed} of {} cases differ from the closed form",
                    rows.len()
                )));
            }
        }
    }
    eprintln!("nodecount: done in {:.3} s", start.elapsed().as_secs_f64());
    Ok(())
}

fn shots(k: u64) -> Result<Shots> {
    if k == 0 {
        return Err(CliError::Config("--shots must be at least 1".into()));
    }
    Ok(Shots::PerSetting(k))
}

fn load_graph(path: &Path) -> Result<GraphSpec> {
    let text = std::fs::read_to_string(path)?;
    let parsed = if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
    {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|m| CliError::Config(format!("{}: {m}", path.display())))
}

/// `a..b` and `a..=b` are inclusive and empty when `b < a`; otherwise a
/// comma-separated list.
fn parse_range(s: &str) -> Result<Vec<usize>> {
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| CliError::Config(format!("bad range {s:?}")))
    };
    if let Some((a, b)) = s.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let (a, b) = (num(a)?, num(b)?);
        return Ok((a..=b).collect());
    }
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(num).collect()
}

fn emit(out: Option<&Path>, name: &str, text: &str) -> Result<()> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(name), text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}
