use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::algorithms::Algorithm;
use crate::compression::CompressorSpec;
use crate::error::Error;

use super::{parse_config, run_experiment, sweep_gamma, sweep_output_path, write_csv, ExperimentConfig};

const EXIT_OK: i32 = 0;
const EXIT_CONFIG: i32 = 1;
const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "cppsim", about = "Compressed push-pull gradient tracking simulator")]
struct Cli {
    /// JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// CSV output path (overrides `output`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    iters: Option<usize>,
    /// pushpull | cpp | bcpp
    #[arg(long, global = true)]
    algo: Option<Algorithm>,
    /// identity | quantize:b=<bits> | randk:k=<count>
    #[arg(long, global = true)]
    compressor: Option<CompressorSpec>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the config once per gamma, in parallel; outputs go to `<out>.gamma-<g>.csv`.
    Sweep {
        #[arg(long, value_delimiter = ',', required = true)]
        gammas: Vec<f64>,
    },
}

fn load(cli: &Cli) -> Result<ExperimentConfig, String> {
    let Some(path) = &cli.config else {
        return Err("missing required --config <path>".into());
    };
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut cfg = parse_config(&text).map_err(|e| e.to_string())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(iters) = cli.iters {
        cfg.iters = iters;
    }
    if let Some(algo) = cli.algo {
        cfg.algo = algo;
    }
    if let Some(spec) = cli.compressor {
        cfg.compressor = spec;
    }
    if let Some(out) = &cli.out {
        cfg.output = Some(out.clone());
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn runtime_failure(e: &Error) -> i32 {
    eprintln!("error: {e}");
    match e {
        Error::Config { .. } => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

/// Entry point. Exit codes: 0 success, 1 config error, 2 runtime or numerical error.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match load(&cli) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("error: {msg}");
            eprintln!("usage: cppsim --config <path> [--out <path>] [--seed <u64>] [--iters <n>] [--algo <name>] [--compressor <spec>] [sweep --gammas <list>]");
            return EXIT_CONFIG;
        }
    };

    match &cli.command {
        None => {
            let out = match run_experiment(&cfg) {
                Ok(out) => out,
                Err(e) => return runtime_failure(&e),
            };
            if let Some(path) = &cfg.output {
                if let Err(e) = write_csv(&out, path) {
                    return runtime_failure(&e);
                }
            }
            if let Some(last) = out.records.last() {
                eprintln!(
                    "{} {}: {} iterations, loss gap {:e}, {} bits, {:.3}s",
                    cfg.algo, cfg.compressor, last.iter, last.loss_gap, last.bits, out.wall_time_secs
                );
            }
            EXIT_OK
        }
        Some(Command::Sweep { gammas }) => {
            let results = match sweep_gamma(&cfg, gammas) {
                Ok(r) => r,
                Err(e) => return runtime_failure(&e),
            };
            let mut code = EXIT_OK;
            for (gamma, result) in results {
                match result {
                    Ok(out) => {
                        let last = out.records.last().expect("run records iteration 0");
                        eprintln!(
                            "gamma {gamma}: loss gap {:e} after {} iterations",
                            last.loss_gap, last.iter
                        );
                        if let Some(base) = &cfg.output {
                            if let Err(e) = write_csv(&out, sweep_output_path(base, gamma)) {
                                code = code.max(runtime_failure(&e));
                            }
                        }
                    }
                    Err(e) => {
                        eprint!("gamma {gamma}: ");
                        code = code.max(runtime_failure(&e));
                    }
                }
            }
            code
        }
    }
}
