use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand as ClapSubcommand};
use magnonics_cli::commands::{run_subcommand, Subcommand};
use magnonics_cli::config::{apply_set_override, parse_config_str, RunConfig};
use magnonics_cli::CliError;

/// Sweep front end for the hybrid-transducer toolkit. Exit codes: 0 success,
/// 2 config error, 3 numerical/diagnostic error, 4 i/o error.
#[derive(Parser)]
#[command(name = "magnonics", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(ClapSubcommand)]
enum Cmd {
    /// Deposited power over an (omega_m, omega_a) grid, long-format CSV
    Anticross(CommonArgs),
    /// Dynamical bandwidth per branch plus the transduction curve CSV
    Bandwidth(CommonArgs),
    /// Pulsed excitation, ring-down and heterodyne readout over a field sweep
    Pulse(CommonArgs),
    /// Transmission spectra for a list of field values
    Spectrum(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Configuration file (sectioned key = value text)
    #[arg(long)]
    config: PathBuf,
    /// Override a config entry, e.g. --set system.g_cm_hz=28.5e6 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output CSV path (overrides run.out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweep evaluation (default: machine parallelism)
    #[arg(long)]
    jobs: Option<usize>,
    /// Seed for jittered shots (overrides run.seed)
    #[arg(long)]
    seed: Option<u64>,
    /// Also write an SVG plot next to the CSV
    #[arg(long)]
    svg: bool,
}

fn run(sub: Subcommand, args: &CommonArgs) -> Result<Vec<String>, CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|source| CliError::Io {
        path: args.config.clone(),
        source,
    })?;
    let mut raw = parse_config_str(&text)?;
    for spec in &args.set {
        apply_set_override(&mut raw, spec)?;
    }
    let mut cfg = RunConfig::from_raw(&raw)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }

    match args.jobs {
        None => run_subcommand(sub, &cfg, args.svg),
        Some(jobs) => {
            if jobs == 0 {
                return Err(CliError::Config("--jobs must be at least 1".into()));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| CliError::Config(format!("cannot build worker pool: {e}")))?;
            pool.install(|| run_subcommand(sub, &cfg, args.svg))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (sub, args) = match &cli.command {
        Cmd::Anticross(a) => (Subcommand::Anticross, a),
        Cmd::Bandwidth(a) => (Subcommand::Bandwidth, a),
        Cmd::Pulse(a) => (Subcommand::Pulse, a),
        Cmd::Spectrum(a) => (Subcommand::Spectrum, a),
    };
    match run(sub, args) {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
