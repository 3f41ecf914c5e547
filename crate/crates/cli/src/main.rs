use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use symdec_cli::commands::*;
use symdec_cli::config::{Config, Scale, SEED_ENV};
use symdec_cli::manifest::verify_manifest;
use symdec_cli::{CliError, Result};
use symdec_codes::{to_text, BUILTIN_NAMES};

#[derive(Parser)]
#[command(name = "symdec", version, about = "Train, re-optimize and evaluate neural syndrome decoders")]
struct Cli {
    /// Configuration file of `section.key=value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration entry, e.g. `--set oracle.lr=0.001`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Run seed; defaults to $USD_SEED, then 0.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Start from the full-size defaults instead of the desk-scale ones.
    #[arg(long, global = true)]
    full_scale: bool,
    /// Single-threaded kernels so every artifact is bit-reproducible.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Suppress progress output.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect the built-in codes or validate a code definition.
    Codes {
        #[command(subcommand)]
        action: CodesAction,
    },
    /// Fit the MLP syndrome oracle.
    TrainOracle {
        #[arg(long, default_value = "color-d5")]
        code: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate supervised data and train the Transformer decoder.
    TrainDecoder {
        #[arg(long, default_value = "color-d5")]
        code: String,
        #[arg(long)]
        out: PathBuf,
        /// Keep training until the test loss stops improving.
        #[arg(long)]
        to_convergence: bool,
    },
    /// Fine-tune a decoder through a frozen syndrome oracle.
    Reopt {
        #[arg(long, default_value = "color-d5")]
        code: String,
        #[arg(long)]
        decoder: PathBuf,
        /// The decoder's training set.
        #[arg(long)]
        dataset: PathBuf,
        /// `exact` or an oracle checkpoint.
        #[arg(long, default_value = "exact")]
        oracle: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Logical error rate over a grid of physical error rates.
    Sweep {
        #[arg(long, default_value = "color-d5")]
        code: String,
        #[arg(long)]
        out: PathBuf,
        /// Compare exactly two decoders and write their difference.
        #[arg(long)]
        paired: bool,
        /// Use the 491-point grid 0.001..0.05.
        #[arg(long)]
        full_grid: bool,
        /// Also write SVG plots.
        #[arg(long)]
        svg: bool,
        /// Decoder checkpoints, `zero` or `lut`.
        #[arg(required = true)]
        decoders: Vec<String>,
    },
    /// Oracle quality, Dirichlet-energy ratio and group invariance.
    Metrics {
        #[arg(long, default_value = "color-d5")]
        code: String,
        /// `exact` or an oracle checkpoint.
        #[arg(long, default_value = "exact")]
        oracle: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-execute a run deterministically and compare output hashes.
    Rerun {
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that a run's artifacts exist and match their hashes.
    Verify { manifest: PathBuf },
    /// Print the resolved configuration.
    ShowConfig {
        #[arg(long, default_value = "color-d5")]
        code: String,
    },
}

#[derive(Subcommand)]
enum CodesAction {
    List,
    Export {
        code: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Verify {
        code: String,
    },
}

fn resolve_config(cli: &Cli, code: &str) -> Result<Config> {
    let scale = if cli.full_scale { Scale::Full } else { Scale::Desk };
    let mut cfg = Config::defaults(scale, code);
    if let Ok(seed) = std::env::var(SEED_ENV) {
        seed.trim()
            .parse::<u64>()
            .map_err(|_| CliError::Config(format!("{SEED_ENV} must be an unsigned integer, got `{seed}`")))?;
        cfg.set("run.seed", &seed)?;
    }
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        cfg.merge_text(&text)?;
    }
    for kv in &cli.set {
        cfg.merge_assignment(kv)?;
    }
    if let Some(seed) = cli.seed {
        cfg.set("run.seed", &seed.to_string())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    if cli.deterministic {
        enable_deterministic();
    }
    let opts = |code: &str, out: &PathBuf| -> Result<RunOptions> {
        Ok(RunOptions { out: out.clone(), config: resolve_config(&cli, code)?, deterministic: cli.deterministic, quiet: cli.quiet })
    };
    let report = |m: symdec_cli::manifest::RunManifest, out: &PathBuf| {
        println!("run {} ({}) finished in {:.1}s", m.run_id, m.subcommand, m.duration_secs);
        for (k, v) in &m.metrics {
            println!("{k}={v}");
        }
        println!("manifest {}", out.join(symdec_cli::manifest::MANIFEST_FILE).display());
    };
    match &cli.command {
        Command::Codes { action } => match action {
            CodesAction::List => {
                for name in BUILTIN_NAMES {
                    let c = resolve_code(name)?;
                    println!("{name}\tn={}\trows={}", c.code.n(), c.code.num_rows());
                }
            }
            CodesAction::Export { code, out } => {
                let text = to_text(&resolve_code(code)?.code);
                match out {
                    Some(p) => fs::write(p, text)?,
                    None => print!("{text}"),
                }
            }
            CodesAction::Verify { code } => {
                for line in verify_code(code)? {
                    println!("{line}");
                }
            }
        },
        Command::TrainOracle { code, out } => report(train_oracle_cmd(&opts(code, out)?, code)?, out),
        Command::TrainDecoder { code, out, to_convergence } => {
            let mut o = opts(code, out)?;
            if *to_convergence {
                o.config.set("decoder.to_convergence", "true")?;
            }
            report(train_decoder_cmd(&o, code)?, out)
        }
        Command::Reopt { code, decoder, dataset, oracle, out } => {
            report(reopt_cmd(&opts(code, out)?, code, decoder, dataset, oracle)?, out)
        }
        Command::Sweep { code, out, paired, full_grid, svg, decoders } => {
            let mut o = opts(code, out)?;
            if *full_grid {
                o.config.set("sweep.grid", "full")?;
            }
            report(sweep_cmd(&o, code, decoders, *paired, *svg)?, out)
        }
        Command::Metrics { code, oracle, out } => report(metrics_cmd(&opts(code, out)?, code, oracle)?, out),
        Command::Rerun { manifest, out } => {
            let (m, lines) = rerun_cmd(manifest, out.clone(), cli.quiet)?;
            for l in lines {
                println!("{l}");
            }
            println!("rerun {} reproduced every artifact", m.run_id);
        }
        Command::Verify { manifest } => {
            for l in verify_manifest(manifest)? {
                println!("{l}");
            }
            println!("PASS");
        }
        Command::ShowConfig { code } => print!("{}", resolve_config(&cli, code)?.to_text()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
