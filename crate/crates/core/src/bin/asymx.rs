use std::path::PathBuf;
use std::process::ExitCode;

use asymx_core::harness::{run, Experiment, ExperimentConfig, Link};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "asymx", version, about = "Asymmetrical-transceiver massive MIMO link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config file (key = value lines, `include` allowed).
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for `<subcommand>.csv`; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Monte-Carlo trials per point; overrides the config.
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LinkArg {
    Uplink,
    Downlink,
}

#[derive(Subcommand)]
enum Command {
    /// Array factor of each receive-antenna selection.
    BeamPattern(Common),
    /// SNR loss of two merged paths versus their phase difference.
    SnrLoss(Common),
    /// NMSE of uplink-to-downlink channel transfer.
    TransferNmse(Common),
    /// Ergodic sum spectral efficiency.
    Se {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        link: Option<LinkArg>,
    },
    /// Energy efficiency from SE and power consumption.
    Ee(Common),
    /// Hardware cost and power of every architecture.
    CostTable(Common),
}

fn execute(cli: Cli) -> asymx_core::Result<()> {
    let (experiment, common, link) = match cli.command {
        Command::BeamPattern(c) => (Experiment::BeamPattern, c, None),
        Command::SnrLoss(c) => (Experiment::SnrLoss, c, None),
        Command::TransferNmse(c) => (Experiment::TransferNmse, c, None),
        Command::Se { common, link } => (Experiment::Se, common, link),
        Command::Ee(c) => (Experiment::Ee, c, None),
        Command::CostTable(c) => (Experiment::CostTable, c, None),
    };
    let mut cfg = ExperimentConfig::from_file(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = common.trials {
        cfg.trials = trials;
    }
    if let Some(link) = link {
        cfg.link = match link {
            LinkArg::Uplink => Link::Uplink,
            LinkArg::Downlink => Link::Downlink,
        };
    }
    let result = run(experiment, &cfg)?;
    match common.out {
        Some(dir) => {
            std::fs::create_dir_all(&dir).map_err(|source| asymx_core::Error::Io { path: dir.clone(), source })?;
            result.table.write_to(&dir.join(format!("{experiment}.csv")))?;
        }
        None => print!("{}", result.table.to_csv()),
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("asymx: {e}");
            ExitCode::FAILURE
        }
    }
}
