use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use nlkg_cli::{load_config, load_sweep, run, run_sweep, Mode, Overrides};

/// Pseudo-spectral Klein-Gordon runs on R^d x T, exponent checks and profile ledgers.
#[derive(Parser, Debug)]
#[command(name = "nlkg", version)]
struct Args {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `mode` from the file.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
    /// Output directory; overrides `output` from the file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed` from the file.
    #[arg(long)]
    seed: Option<u64>,
    /// TOML file of `[[run]]` tables merged over the config and run in parallel.
    #[arg(long)]
    sweep: Option<PathBuf>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    Mode::parse(s).ok_or_else(|| format!("unknown mode {s:?} (simulate, linear, exponents, profiles)"))
}

fn main() -> ExitCode {
    let args = Args::parse();
    let overrides = Overrides {
        mode: args.mode,
        seed: args.seed,
        out: args.out,
    };
    match args.sweep {
        Some(sweep) => {
            let runs = match load_sweep(&args.config, &sweep, &overrides) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    return ExitCode::FAILURE;
                }
            };
            let mut failed = 0;
            for (name, res) in run_sweep(&runs) {
                match res {
                    Ok(o) => println!("{name}: ok -> {}", o.out_dir.display()),
                    Err(e) => {
                        failed += 1;
                        eprintln!("{name}: error: {e:#}");
                    }
                }
            }
            if failed > 0 {
                eprintln!("{failed} of {} runs failed", runs.len());
                return ExitCode::FAILURE;
            }
            ExitCode::SUCCESS
        }
        None => {
            let cfg = match load_config(&args.config, &overrides) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    return ExitCode::FAILURE;
                }
            };
            match run(&cfg, &cfg.output) {
                Ok(o) => {
                    println!("{} run written to {}", cfg.mode.as_str(), o.out_dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}
