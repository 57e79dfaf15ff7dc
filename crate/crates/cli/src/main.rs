//! `ndt`: delivery-time bounds, sweeps, simulations and precoder checks for
//! cache-aided interference networks.
//!
//! Exit codes: 0 ok, 1 other error, 2 infeasible input, 3 decode failure,
//! 4 PHY check failure.

#![allow(clippy::result_large_err)]

mod commands;
mod error;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ndt_core::model::{parse_rational, Rational};

use commands::{CaseArg, SweepMode, VerifyArgs};
use error::CliError;

fn rational(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "ndt", version, about = "Storage/latency tradeoff of cache-aided interference networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct NetArgs {
    /// Transmitters.
    #[arg(long)]
    nt: usize,
    /// Receivers.
    #[arg(long)]
    nr: usize,
    /// Library size; defaults to the number of receivers.
    #[arg(long)]
    l: Option<usize>,
}

#[derive(Debug, Args)]
struct PointArgs {
    /// Normalized receiver cache size, `p/q` or decimal.
    #[arg(long, value_parser = rational)]
    mur: Rational,
    /// Normalized transmitter cache size, `p/q` or decimal.
    #[arg(long = "mut", value_name = "MUT", value_parser = rational)]
    mu_t: Rational,
}

#[derive(Debug, Args)]
struct OutArgs {
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Upper and lower bounds, optimality and gap at one cache point (JSON).
    Compute {
        #[command(flatten)]
        net: NetArgs,
        #[command(flatten)]
        point: PointArgs,
        /// Placement without intra-file coding; enables the boundary optimality regime.
        #[arg(long)]
        uncoded_placement: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Bounds over the feasible grid, row-major in `mu_r` (CSV, or JSON with --json).
    Sweep {
        #[command(flatten)]
        net: NetArgs,
        #[arg(long, value_parser = rational, default_value = "1/24")]
        step: Rational,
        #[arg(long, value_enum, default_value_t = SweepMode::Gap)]
        mode: SweepMode,
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Closed-form region map of the 2x2 or 3x3 network.
    Regions {
        #[command(flatten)]
        net: NetArgs,
        #[arg(long, value_parser = rational, default_value = "1/24")]
        step: Rational,
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Bit-level placement, delivery and decoding under worst-case demands (JSON).
    Simulate {
        #[command(flatten)]
        net: NetArgs,
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON object mapping "r,t" to "p/q"; defaults to an optimal split.
        #[arg(long)]
        ratios: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Numerical neutralization, alignment and decoding checks of one precoder scheme (JSON).
    VerifyPhy {
        #[command(flatten)]
        net: NetArgs,
        /// Receivers caching each delivered subfile.
        #[arg(long)]
        r: usize,
        /// Transmitters caching each delivered subfile.
        #[arg(long)]
        t: usize,
        #[arg(long, value_enum, default_value_t = CaseArg::Auto)]
        case: CaseArg,
        /// Alignment extension order.
        #[arg(long, default_value_t = 1)]
        n: u32,
        /// First channel seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of consecutive seeds.
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Per-user DoF of every delivered cache state (CSV, or JSON with --json).
    DofTable {
        #[command(flatten)]
        net: NetArgs,
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        out: OutArgs,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Compute {
            net,
            point,
            uncoded_placement,
            out,
        } => {
            let cfg = commands::network(net.nt, net.nr, net.l)?;
            let pt = commands::cache_point(&cfg, &point.mur, &point.mu_t)?;
            commands::compute(&cfg, &pt, !uncoded_placement, out.out.as_deref())
        }
        Command::Sweep {
            net,
            step,
            mode,
            json,
            out,
        } => {
            let cfg = commands::network(net.nt, net.nr, net.l)?;
            commands::sweep(&cfg, &step, mode, json, out.out.as_deref())
        }
        Command::Regions { net, step, json, out } => {
            let cfg = commands::network(net.nt, net.nr, net.l)?;
            commands::regions(&cfg, &step, json, out.out.as_deref())
        }
        Command::Simulate {
            net,
            point,
            seed,
            ratios,
            out,
        } => {
            let cfg = commands::network(net.nt, net.nr, net.l)?;
            let pt = commands::cache_point(&cfg, &point.mur, &point.mu_t)?;
            let ratios = ratios.as_deref().map(commands::read_ratios).transpose()?;
            commands::simulate_cmd(&cfg, &pt, ratios, seed, out.out.as_deref())
        }
        Command::VerifyPhy {
            net,
            r,
            t,
            case,
            n,
            seed,
            seeds,
            out,
        } => {
            let cfg = commands::network(net.nt, net.nr, net.l)?;
            let args = VerifyArgs {
                r,
                t,
                case,
                n,
                first_seed: seed,
                seeds,
            };
            commands::verify_phy(&cfg, &args, out.out.as_deref())
        }
        Command::DofTable { net, json, out } => {
            let cfg = commands::network(net.nt, net.nr, net.l)?;
            commands::dof_table_cmd(&cfg, json, out.out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
