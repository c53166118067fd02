use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod grid;
mod manifest;

use grid::Grid;

/// Two-beam electro-optic sampling: vacuum fluctuations versus source
/// radiation.
#[derive(Debug, Parser)]
#[command(name = "eosvac", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `output.path` of the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for scan points (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Progress on stderr.
    #[arg(long)]
    verbose: bool,
    /// Override one config key, e.g. `--set experiment.delta_r_um=150`.
    /// Repeatable; wins over the file and the defaults.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Signal scan over the configured delays.
    Signal {
        #[command(flatten)]
        common: Common,
    },
    /// Region map over a (delta_r, delta_t) grid plus the analytic boundaries.
    Regions {
        #[command(flatten)]
        common: Common,
        /// Separations `START:STOP:COUNT` or a single value, um.
        #[arg(long, default_value = "0:400:101", allow_hyphen_values = true)]
        delta_r_um: Grid,
        /// Delays, fs; defaults to the config scan, else `0:5000:101`.
        #[arg(long, allow_hyphen_values = true)]
        delta_t_fs: Option<Grid>,
    },
    /// Time-domain fluctuation-dissipation check on the configured scan.
    Fdt {
        #[command(flatten)]
        common: Common,
        /// Skip the algebraic tail correction.
        #[arg(long)]
        no_tail: bool,
    },
    /// Dump C, R' and R'' (or the overlap kernel) on a grid.
    Kernels {
        #[command(flatten)]
        common: Common,
        /// Dump the overlap kernel of the configured pair instead.
        #[arg(long)]
        overlap: bool,
        /// rho_x grid, um; defaults to the configured separation.
        #[arg(long, allow_hyphen_values = true)]
        rho_x_um: Option<Grid>,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        rho_y_um: Grid,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        rho_z_um: Grid,
        /// tau grid, fs; centred on the configured delay by default.
        #[arg(long, allow_hyphen_values = true)]
        tau_fs: Option<Grid>,
    },
    /// Print the wave-plate coefficients for two angles.
    Angles {
        #[arg(long, allow_hyphen_values = true)]
        theta1: f64,
        #[arg(long, allow_hyphen_values = true)]
        theta2: f64,
        /// Decimal places printed.
        #[arg(long, default_value_t = 4)]
        precision: usize,
    },
}

/// Exit status classes.
#[derive(Debug)]
pub enum Failure {
    /// Bad input: exit 1.
    Validation(String),
    /// Numeric failure, outputs written with marked rows: exit 2.
    Numeric(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Numeric(_) => 2,
        }
    }
}

impl From<eosvac::Error> for Failure {
    fn from(e: eosvac::Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Numeric(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let res = match cli.command {
        Command::Signal { common } => commands::signal(&common),
        Command::Regions { common, delta_r_um, delta_t_fs } => commands::regions(&common, &delta_r_um, delta_t_fs.as_ref()),
        Command::Fdt { common, no_tail } => commands::fdt(&common, !no_tail),
        Command::Kernels { common, overlap, rho_x_um, rho_y_um, rho_z_um, tau_fs } => {
            commands::kernels(&common, overlap, rho_x_um.as_ref(), &rho_y_um, &rho_z_um, tau_fs.as_ref())
        }
        Command::Angles { theta1, theta2, precision } => commands::angles(theta1, theta2, precision),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Validation(m) => eprintln!("error: {m}"),
                Failure::Numeric(m) => eprintln!("numeric failure: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
