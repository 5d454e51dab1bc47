use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use cbf::cli::{load_config, run, Mode, EXIT_ERROR};

#[derive(Parser)]
#[command(name = "cbf", version, about = "Direct and inverse source experiments for the convective Brinkman-Forchheimer equations")]
struct Args {
    /// direct, invert, verify-energy, stability or admissibility
    mode: String,
    /// TOML run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides paths.output)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized fields (overrides the configured seed)
    #[arg(long)]
    seed: Option<u64>,
}

fn threads() -> Result<(), String> {
    let n = match std::env::var("CBF_THREADS") {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| format!("CBF_THREADS must be a non-negative integer, got '{v}'"))?,
        Err(_) => 0,
    };
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let prepared = threads().and_then(|_| {
        let mode: Mode = args.mode.parse().map_err(|e: cbf::CbfError| e.to_string())?;
        let mut cfg = load_config(&args.config).map_err(|e| e.to_string())?;
        cfg.resolve_mode(Some(mode)).map_err(|e| e.to_string())?;
        if let Some(seed) = args.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    });
    let cfg = match prepared {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_ERROR as u8);
        }
    };
    let out = args
        .out
        .or_else(|| cfg.paths.output.clone())
        .unwrap_or_else(|| PathBuf::from("cbf-out"));
    ExitCode::from(run(&cfg, &out) as u8)
}
