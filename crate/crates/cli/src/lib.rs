//! Scenario loading, power-margin sweeps and CSV reports for relay-assisted
//! FSO outage analysis.

pub mod scenario;
pub mod sweep;

pub use scenario::{load_scenario, MonteCarloSettings, Scenario, ThresholdPolicy};
pub use sweep::{
    allocation_report, link_table, margin_at_level, optimize_table, run_sweep, run_sweep_analytic, simulate_table,
    summary, sweep_header, sweep_table, validate_table, with_threads, Cell, SweepRow, Table,
};

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "FSO_RELAY_THREADS";

/// Reference outage level of the dB-gain summary.
pub const REFERENCE_OUTAGE: f64 = 1e-4;
