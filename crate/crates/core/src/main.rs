use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use msfair::experiment::{parse_config, run_scenario, write_outputs, ExperimentConfig};
use msfair::marketplace::generate;
use msfair::{Error, Result};

#[derive(Parser)]
#[command(
    name = "msfair",
    version,
    about = "Multisided fairness recommendation simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured scenario over all seeds and write metrics, slates and logs.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `output_dir` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated seed list overriding the config's `seeds`.
        #[arg(long)]
        seeds: Option<String>,
    },
    /// Export the generated marketplace of each seed as CSV files.
    Gen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_config(&text)
}

fn parse_seeds(list: &str) -> Result<Vec<u64>> {
    list.split(',')
        .map(|s| {
            s.trim()
                .parse::<u64>()
                .map_err(|e| Error::config("seeds", format!("`{s}`: {e}")))
        })
        .collect()
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run { config, out, seeds } => {
            let mut cfg = load(&config)?;
            if let Some(list) = seeds {
                cfg.seeds = parse_seeds(&list)?;
            }
            if let Some(out) = out {
                cfg.output_dir = Some(out);
            }
            cfg.validate()?;
            let dir = cfg
                .output_dir
                .clone()
                .ok_or_else(|| Error::config("output_dir", "no output directory (use --out)"))?;
            let result = run_scenario(&cfg)?;
            write_outputs(&result, &cfg, &dir)?;
            for (name, mean) in msfair::metrics::MetricsReport::SCALAR_NAMES
                .iter()
                .zip(&result.mean)
            {
                println!("{name:<30} {mean:.6}");
            }
            Ok(())
        }
        Command::Gen { config, out } => {
            let cfg = load(&config)?;
            for &seed in &cfg.seeds {
                let mut generator = cfg.generator.clone();
                generator.seed = seed;
                generate(&generator)?.export_csv(&out.join(format!("seed_{seed}")))?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
