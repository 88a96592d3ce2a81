//! `oscbus` command line: config-driven experiment runs with CSV/JSON output.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric failure.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use log::{error, info, warn};

use oscbus_cli::config::{self, PartialConfig};
use oscbus_cli::runner::{self, OutputFormat, RunError};

#[derive(Parser)]
#[command(name = "oscbus", about = "Oscillator-network quantum bus experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a config file and/or a named preset.
    Run {
        /// Path to a TOML config document (optional when --preset is given).
        config: Option<PathBuf>,
        /// Output directory (default: ./out).
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Data file format.
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
        /// Figure preset to expand under the config (fig3..fig8, fig10, fig12).
        #[arg(long)]
        preset: Option<String>,
        /// Sweep one dotted key over a comma-separated value list,
        /// e.g. --sweep system.epsilon=0.01,0.03.
        #[arg(long)]
        sweep: Option<String>,
        /// Lift the N > 200 exact-model size guard.
        #[arg(long)]
        allow_large: bool,
    },
}

#[derive(Copy, Clone, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

fn sweep_concurrency() -> usize {
    std::env::var("OSCBUS_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        })
}

fn sanitize(v: &str) -> String {
    v.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' }).collect()
}

fn run_single(
    partial: &PartialConfig,
    allow_large: bool,
    out: &PathBuf,
    format: OutputFormat,
) -> Result<(), RunError> {
    let started = Instant::now();
    let cfg = config::validate(partial, allow_large).map_err(|e| RunError::Config(e.0))?;
    let result = runner::run_experiment(&cfg)?;
    for w in &result.warnings {
        warn!("{w}");
    }
    let paths = runner::emit_series(&cfg, &result, out, format, started)
        .map_err(|e| RunError::Numeric(format!("I/O failure: {e}")))?;
    for p in paths {
        info!("wrote {}", p.display());
    }
    Ok(())
}

fn real_main() -> i32 {
    let cli = Cli::parse();
    let Command::Run { config: config_path, out, format, preset, sweep, allow_large } =
        cli.command;

    let text = match &config_path {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => t,
            Err(e) => {
                error!("cannot read {}: {e}", p.display());
                return 2;
            }
        },
        None => {
            if preset.is_none() {
                error!("either a config path or --preset is required");
                return 2;
            }
            String::new()
        }
    };

    let partial = match config::parse_partial(&text) {
        Ok(p) => p,
        Err(e) => {
            error!("{e}");
            return 2;
        }
    };
    let preset_name = preset.or_else(|| partial.preset.clone());
    let merged = match preset_name {
        Some(name) => match config::preset(&name) {
            Ok(base) => config::merge(&partial, &base),
            Err(e) => {
                error!("{e}");
                return 2;
            }
        },
        None => partial,
    };

    let points: Vec<(String, PartialConfig)> = match &sweep {
        None => vec![(String::new(), merged)],
        Some(expr) => {
            let Some((key, values)) = expr.split_once('=') else {
                error!("--sweep expects KEY=v1,v2,…");
                return 2;
            };
            let mut pts = Vec::new();
            for v in values.split(',') {
                let mut p = merged.clone();
                if let Err(e) = config::apply_override(&mut p, key.trim(), v.trim()) {
                    error!("{e}");
                    return 2;
                }
                pts.push((format!("sweep_{}_{}", sanitize(key.trim()), sanitize(v.trim())), p));
            }
            pts
        }
    };

    // Validate every point up front so config errors beat numeric ones.
    for (_, p) in &points {
        if let Err(e) = config::validate(p, allow_large) {
            error!("{e}");
            return 2;
        }
    }

    let fmt: OutputFormat = format.into();
    if points.len() == 1 {
        match run_single(&points[0].1, allow_large, &out, fmt) {
            Ok(()) => 0,
            Err(RunError::Config(m)) => {
                error!("config error: {m}");
                2
            }
            Err(RunError::Numeric(m)) => {
                error!("numeric error: {m}");
                3
            }
        }
    } else {
        let cap = sweep_concurrency();
        let mut code = 0;
        for chunk in points.chunks(cap) {
            let results: Vec<Result<(), RunError>> = std::thread::scope(|s| {
                let handles: Vec<_> = chunk
                    .iter()
                    .map(|(name, p)| {
                        let dir = out.join(name);
                        s.spawn(move || run_single(p, allow_large, &dir, fmt))
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
            });
            for r in results {
                match r {
                    Ok(()) => {}
                    Err(RunError::Config(m)) => {
                        error!("config error: {m}");
                        code = code.max(2);
                    }
                    Err(RunError::Numeric(m)) => {
                        error!("numeric error: {m}");
                        code = code.max(3);
                    }
                }
            }
        }
        code
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    std::process::exit(real_main());
}
