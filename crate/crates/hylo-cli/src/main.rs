//! Configuration-driven front end: evolve fields, construct solitary
//! waves, and run stability and energy-landscape experiments, writing
//! machine-readable text reports.
//!
//! One config file describes one run. Exit codes: 0 on success, 1 when
//! the computation fails (blow-up, non-convergence), 2 when the
//! configuration is unusable. `--sweep` runs several configs
//! concurrently, each confined to its own output directory.

mod commands;
mod config;

use std::collections::HashMap;
use std::path::{Component, Path, PathBuf};

use clap::Parser;

#[derive(Parser)]
#[command(
    name = "hylo",
    version,
    about = "Run solitary-wave experiments described by TOML config files"
)]
struct Cli {
    /// Run configuration files; exactly one unless --sweep is given.
    #[arg(required = true, value_name = "CONFIG")]
    configs: Vec<PathBuf>,
    /// Run every config concurrently, each in its own output directory.
    #[arg(long)]
    sweep: bool,
}

fn main() {
    let cli = Cli::parse();
    let code = if cli.sweep {
        run_sweep(&cli.configs)
    } else if cli.configs.len() == 1 {
        commands::execute_config_file(&cli.configs[0])
    } else {
        eprintln!("error: several config files given; pass --sweep to run them all");
        eprintln!("usage: hylo <CONFIG.toml>  (or: hylo --sweep <CONFIG.toml>...)");
        2
    };
    std::process::exit(code);
}

/// Loads every config up front (any unusable one aborts the whole sweep
/// before side effects), rejects output-directory collisions, then runs
/// the lot concurrently. The sweep's exit code is the worst per-run code.
fn run_sweep(paths: &[PathBuf]) -> i32 {
    let mut runs = Vec::new();
    for path in paths {
        match commands::load(path) {
            Ok((cfg, base)) => runs.push((path.clone(), cfg, base)),
            Err(err) => {
                eprintln!("error: {}", err.message());
                return err.exit_code();
            }
        }
    }

    let mut seen: HashMap<PathBuf, &Path> = HashMap::new();
    for (path, cfg, base) in &runs {
        let dir = normalize(&absolute(&commands::resolved_output_dir(cfg, base)));
        if let Some(first) = seen.insert(dir.clone(), path) {
            eprintln!(
                "error: configs {} and {} share the output directory {}; sweep runs must \
                 be isolated",
                first.display(),
                path.display(),
                dir.display()
            );
            return 2;
        }
    }

    let codes: Vec<(PathBuf, i32)> = std::thread::scope(|scope| {
        let handles: Vec<_> = runs
            .iter()
            .map(|(path, cfg, base)| {
                scope.spawn(move || (path.clone(), commands::run_loaded(cfg, base)))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("run thread panicked"))
            .collect()
    });

    let mut worst = 0;
    for (path, code) in codes {
        let outcome = match code {
            0 => "ok",
            1 => "numerical failure",
            _ => "configuration error",
        };
        println!("{}: {outcome}", path.display());
        worst = worst.max(code);
    }
    worst
}

fn absolute(p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        std::env::current_dir()
            .map(|cwd| cwd.join(p))
            .unwrap_or_else(|_| p.to_path_buf())
    }
}

/// Lexical normalization, enough to catch two sweep configs aiming the
/// same place through "." and ".." spellings. Aliasing through symlinks
/// is not chased: the check is a guard against config mistakes, not a
/// security boundary.
fn normalize(p: &Path) -> PathBuf {
    let mut out = PathBuf::new();
    for comp in p.components() {
        match comp {
            Component::CurDir => {}
            Component::ParentDir => {
                if !out.pop() {
                    out.push(Component::ParentDir);
                }
            }
            other => out.push(other),
        }
    }
    out
}
