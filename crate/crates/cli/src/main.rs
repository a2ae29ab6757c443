use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use fso_relay::power_alloc::Scheme;
use fso_relay::protocols::Protocol;
use fso_relay_cli::{
    allocation_report, link_table, load_scenario, optimize_table, run_sweep, simulate_table, summary, sweep_table,
    validate_table, with_threads, Scenario, REFERENCE_OUTAGE, THREADS_ENV,
};

#[derive(Debug, Parser)]
#[command(name = "fso-relay", version, about = "Outage analysis of relay-assisted FSO links")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Monte Carlo seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Relay count override.
    #[arg(long)]
    relays: Option<usize>,
    /// Restrict to one protocol (all_active, select_max, dssc).
    #[arg(long)]
    protocol: Option<Protocol>,
    /// Allocation scheme override (optimal, distance_rule, equal).
    #[arg(long)]
    allocation: Option<Scheme>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Single-link outage curve.
    Link {
        #[command(flatten)]
        common: Common,
        /// Link length; defaults to the first source-relay distance.
        #[arg(long)]
        distance_km: Option<f64>,
    },
    /// Protocol comparison over the power-margin grid.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Allocation schemes compared for each protocol.
    Optimize {
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo estimates only.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Analytic values checked against Monte Carlo.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

fn prepare(c: &Common) -> Result<Scenario> {
    let mut s = load_scenario(&c.scenario)?;
    if let Some(n) = c.relays {
        s = s.with_relays(n)?;
    }
    if let Some(p) = c.protocol {
        s.protocols = vec![p];
    }
    if let Some(a) = c.allocation {
        s.allocation = a;
    }
    if let (Some(seed), Some(mc)) = (c.seed, s.monte_carlo.as_mut()) {
        mc.seed = seed;
    }
    Ok(s)
}

fn threads() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => Ok(Some(v.parse().with_context(|| format!("{THREADS_ENV}={v} is not a thread count"))?)),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<()> {
    let threads = threads()?;
    match cli.command {
        Command::Link { common, distance_km } => {
            let s = prepare(&common)?;
            let d = distance_km.unwrap_or(s.d_sr_km[0]);
            with_threads(threads, || link_table(&s, d))??.write_csv(&common.out)?;
        }
        Command::Sweep { common } => {
            let s = prepare(&common)?;
            eprint!("{}", s.provenance()?);
            let rows = with_threads(threads, || run_sweep(&s))??;
            sweep_table(&rows, &s.protocols).write_csv(&common.out)?;
            print!("{}", summary(&s, &rows, REFERENCE_OUTAGE)?);
        }
        Command::Optimize { common } => {
            let s = prepare(&common)?;
            eprint!("{}", s.provenance()?);
            with_threads(threads, || optimize_table(&s))??.write_csv(&common.out)?;
            print!("{}", allocation_report(&s, s.pm_stop_db)?);
        }
        Command::Simulate { common } => {
            let s = prepare(&common)?;
            with_threads(threads, || simulate_table(&s))??.write_csv(&common.out)?;
        }
        Command::Validate { common } => {
            let s = prepare(&common)?;
            let (table, checked, agree) = with_threads(threads, || validate_table(&s))??;
            table.write_csv(&common.out)?;
            println!("{agree} of {checked} checked points within the 3-sigma interval");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
