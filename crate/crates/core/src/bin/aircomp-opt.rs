use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use aircomp_core::harness::{emit_report, run_sweep, write_csv, ExperimentConfig, PerDevice, Scheme, SweepAxis};
use aircomp_core::{Error, Result};

#[derive(Parser)]
#[command(name = "aircomp-opt", version, about = "Task-oriented AirComp transceiver design and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its report.
    Run(RunArgs),
    /// Check a config file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Number of devices K.
    #[arg(long)]
    devices: Option<usize>,
    /// Transmit power of every device, in dBm.
    #[arg(long, allow_hyphen_values = true)]
    power_dbm: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Schemes to run: proposed, mmse_centroid, random (comma-separated or repeated).
    #[arg(long, value_delimiter = ',')]
    scheme: Vec<String>,
    /// Sweep axis, optionally with values: `power=0,6,12`, `devices=2,4`, `pca_dims=2,4`, `none`.
    #[arg(long)]
    sweep: Option<String>,
    /// Output path stem; writes `<out>.csv` and `<out>.json`. CSV goes to stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_sweep(spec: &str, config: &mut ExperimentConfig) -> Result<()> {
    let (axis, values) = match spec.split_once('=') {
        Some((a, v)) => (a, Some(v)),
        None => (spec, None),
    };
    config.sweep.axis = match axis {
        "none" => SweepAxis::None,
        "devices" => SweepAxis::Devices,
        "power" => SweepAxis::Power,
        "pca_dims" => SweepAxis::PcaDims,
        other => {
            return Err(Error::Config(format!(
                "unknown sweep axis '{other}' (expected none, devices, power or pca_dims)"
            )))
        }
    };
    if config.sweep.axis == SweepAxis::None {
        config.sweep.values.clear();
    }
    if let Some(v) = values {
        config.sweep.values = v
            .split(',')
            .map(|x| {
                x.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad sweep value '{x}'")))
            })
            .collect::<Result<Vec<_>>>()?;
    }
    Ok(())
}

fn run(args: RunArgs) -> Result<()> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(k) = args.devices {
        config.scenario.devices = k;
    }
    if let Some(p) = args.power_dbm {
        config.scenario.power_dbm = PerDevice::Uniform(p);
    }
    if let Some(t) = args.trials {
        config.trials = t;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if !args.scheme.is_empty() {
        config.schemes = args.scheme.iter().map(|s| Scheme::parse(s.trim())).collect::<Result<Vec<_>>>()?;
    }
    if let Some(spec) = &args.sweep {
        parse_sweep(spec, &mut config)?;
    }
    config.validate()?;
    let report = run_sweep(&config)?;
    match &args.out {
        Some(stem) => {
            let (csv, json) = emit_report(&report, stem)?;
            eprintln!("wrote {} and {}", csv.display(), json.display());
        }
        None => write_csv(&report, io::stdout().lock())?,
    }
    Ok(())
}

fn validate(path: PathBuf) -> Result<()> {
    let config = ExperimentConfig::load(&path)?;
    config.validate()?;
    let points = config.sweep.values.len().max(1);
    println!(
        "{}: ok ({} devices, {} antennas, {} trials, {} point(s) x {} scheme(s))",
        path.display(),
        config.scenario.devices,
        config.scenario.antennas,
        config.trials,
        points,
        config.schemes.len()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Validate { config } => validate(config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
