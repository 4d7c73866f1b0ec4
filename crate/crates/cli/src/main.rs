//! `qamp`: metrics, oracle verification, sweeps and trade-off tables for the
//! heralded qubit amplifier.
//!
//! Angles are read and written in units of π. Gains are read as dB or `inf`.

mod commands;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qamp::Gain;

use crate::table::Format;

#[derive(Debug, Parser)]
#[command(name = "qamp", version, about = "Heralded linear-optical qubit amplifier model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Output {
    /// Output format.
    #[arg(long, value_enum, default_value = "csv", global = true)]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StateArgs {
    /// Polar angle of the qubit, in units of π.
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    theta: f64,
    /// Azimuthal angle of the qubit, in units of π.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    phi: f64,
    /// Qubit weight |β|² of the vacuum/qubit superposition.
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    beta2: f64,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long, default_value_t = qamp::sweep::DEFAULT_STEPS)]
    chi_steps: usize,
    #[arg(long, default_value_t = qamp::sweep::DEFAULT_STEPS)]
    r_steps: usize,
    /// Disable the lossy feed-forward filtration.
    #[arg(long)]
    no_ff: bool,
    /// Treat the gain target as a lower bound instead of an equality.
    #[arg(long)]
    at_least: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form metrics for one setting, with and without feed-forward.
    Metrics {
        /// Ancilla angle χ, in units of π.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        chi: f64,
        /// Beam-splitter reflectivity amplitude.
        #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
        r: f64,
        #[command(flatten)]
        state: StateArgs,
        /// Only the feed-forward row.
        #[arg(long, conflicts_with = "no_ff")]
        ff: bool,
        /// Only the row without feed-forward.
        #[arg(long)]
        no_ff: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Compare the Fock-space simulation with the closed forms on random draws.
    Verify {
        #[arg(short, long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Largest accepted deviation.
        #[arg(long, default_value_t = commands::VERIFY_TOLERANCE)]
        tolerance: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Metrics over the full (χ, r) grid for one input state.
    Sweep {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: Output,
    },
    /// Lowest reachable fidelity per gain.
    Threshold {
        #[command(flatten)]
        state: StateArgs,
        /// Use a prior of this concentration instead of a fixed θ.
        #[arg(long)]
        kappa: Option<f64>,
        /// Gains in dB or `inf`; defaults to 0..30 dB in 0.5 dB steps plus `inf`.
        #[arg(long, value_delimiter = ',', value_parser = parse_gain)]
        gains: Vec<Gain>,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = qamp::vmf::DEFAULT_NODES)]
        nodes: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Highest success probability against fidelity at a fixed gain.
    Curve {
        /// Fixed input state polar angle, in units of π.
        #[arg(long, conflicts_with = "kappa", required_unless_present = "kappa")]
        theta: Option<f64>,
        /// Prior concentration.
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long, value_parser = parse_gain)]
        gain: Gain,
        #[arg(long, default_value_t = 0.5)]
        beta2: f64,
        /// Number of fidelity targets, ending at 1.
        #[arg(long, default_value_t = qamp::tradeoff::DEFAULT_CURVE_POINTS)]
        points: usize,
        /// Lowest fidelity target; defaults to the threshold.
        #[arg(long)]
        f_min: Option<f64>,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = qamp::vmf::DEFAULT_NODES)]
        nodes: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Merit M = max(P·F) / P(F = 1) per prior concentration and gain.
    Merit {
        #[arg(long, value_delimiter = ',', default_value = "0,1,3,10")]
        kappas: Vec<f64>,
        #[arg(long, value_delimiter = ',', value_parser = parse_gain, default_value = "3,10,20,inf")]
        gains: Vec<Gain>,
        #[arg(long, default_value_t = 0.5)]
        beta2: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = qamp::vmf::DEFAULT_NODES)]
        nodes: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Median and first decile of the prior's polar angle.
    TableVmf {
        #[arg(long, value_delimiter = ',', default_value = "0,1,3,10")]
        kappas: Vec<f64>,
        #[command(flatten)]
        out: Output,
    },
    /// Regenerate every figure data set into a directory.
    Figures {
        #[arg(long, default_value = "figures")]
        out_dir: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
}

fn parse_gain(s: &str) -> Result<Gain, String> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("inf") {
        return Ok(Gain::Infinite);
    }
    let db: f64 = s.parse().map_err(|_| format!("gain `{s}` is neither dB nor `inf`"))?;
    if !db.is_finite() {
        return Err(format!("gain `{s}` must be finite dB or `inf`"));
    }
    Ok(Gain::from_db(db))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
