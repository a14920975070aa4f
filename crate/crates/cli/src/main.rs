use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wegner_cli::{run, RunOptions};

#[derive(Parser)]
#[command(name = "wegner", version, about = "Disorder experiments for alloy-type random Schrodinger operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Common {
    /// TOML config, or a manifest.json from an earlier run
    #[arg(long)]
    config: PathBuf,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Worker threads, 0 for all cores
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Override a config key, e.g. --set wegner.sides=[8,16]
    #[arg(long = "set", value_name = "K=V")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Sorted eigenvalues per sample
    Spectrum(Common),
    /// Expected eigenvalue counts in small intervals
    Wegner(Common),
    /// Integrated density of states and its Lipschitz modulus
    Ids(Common),
    /// Probability of an eigenvalue near a fixed energy
    Proximity(Common),
    /// Resolvent decay fits below the spectrum
    #[command(name = "combes-thomas")]
    CombesThomas(Common),
    /// Spectral averaging in one coupling coordinate
    Averaging(Common),
    /// Inverse, norm bound and symbol of the Toeplitz matrix
    #[command(name = "toeplitz-check")]
    ToeplitzCheck(Common),
    /// Sheared volumes: exact against Monte Carlo
    Volume(Common),
    /// Birman-Schwinger reduction below the free spectrum
    #[command(name = "birman-schwinger")]
    BirmanSchwinger(Common),
    /// Multiscale schedule and box regularity
    Msa(Common),
    /// Exponent series at the bottom of the spectrum
    Lifshitz(Common),
}

impl Command {
    fn split(self) -> (&'static str, Common) {
        match self {
            Command::Spectrum(c) => ("spectrum", c),
            Command::Wegner(c) => ("wegner", c),
            Command::Ids(c) => ("ids", c),
            Command::Proximity(c) => ("proximity", c),
            Command::CombesThomas(c) => ("combes-thomas", c),
            Command::Averaging(c) => ("averaging", c),
            Command::ToeplitzCheck(c) => ("toeplitz-check", c),
            Command::Volume(c) => ("volume", c),
            Command::BirmanSchwinger(c) => ("birman-schwinger", c),
            Command::Msa(c) => ("msa", c),
            Command::Lifshitz(c) => ("lifshitz", c),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let (name, c) = Cli::parse().command.split();
    let opts = RunOptions {
        config: c.config,
        out: c.out,
        seed: c.seed,
        samples: c.samples,
        workers: c.workers,
        overrides: c.overrides,
    };
    match run(name, &opts) {
        Ok(m) => {
            for f in &m.outputs {
                println!("{}", opts.out.join(&f.file).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
