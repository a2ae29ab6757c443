//! Power-margin sweeps and their tabular output.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{ensure, Context, Result};
use rayon::prelude::*;

use fso_relay::channel::{db_to_linear, link_outage, link_outage_asymptotic};
use fso_relay::montecarlo::{simulate_outage, SimEstimate};
use fso_relay::power_alloc::Scheme;
use fso_relay::protocols::{diversity_gain, outage, AnalysisOptions, Mode, Protocol};

use crate::scenario::{Scenario, ThresholdPolicy};

/// Outage of one protocol at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub protocol: Protocol,
    pub exact: f64,
    /// Absent for DSSC with a fixed threshold, which has no power-law form.
    pub asym: Option<f64>,
    pub mc: Option<SimEstimate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub pm_db: f64,
    pub cells: Vec<Cell>,
}

/// Header and formatted rows ready for CSV output.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    /// Writes the table as CSV; refuses to create a file for an empty table.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        ensure!(!self.rows.is_empty(), "no rows to write (empty sweep)");
        let text = self.to_csv()?;
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }
}

pub fn fmt_prob(p: f64) -> String {
    format!("{p:.12e}")
}

pub fn fmt_log10(p: f64) -> String {
    format!("{:.6}", p.log10())
}

fn fmt_db(db: f64) -> String {
    format!("{db:.4}")
}

/// Run `f` on a pool of `threads` workers, or on the global pool for `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Some(n) => Ok(rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(f)),
        None => Ok(f()),
    }
}

fn threshold_for(s: &Scenario, protocol: Protocol, pm: f64) -> Option<f64> {
    (protocol == Protocol::Dssc).then(|| s.threshold.threshold(pm))
}

fn has_asymptote(s: &Scenario, protocol: Protocol) -> bool {
    protocol != Protocol::Dssc || s.threshold == ThresholdPolicy::Optimal
}

fn eval_cell(s: &Scenario, protocol: Protocol, pm: f64, row: usize, simulate: bool) -> Result<Cell> {
    let opts = AnalysisOptions::default();
    let cfg = s.config(protocol, pm)?;
    let threshold = threshold_for(s, protocol, pm);
    let exact = outage(&cfg, protocol, pm, Mode::Exact, threshold, &opts)?.p_out;
    let asym = if has_asymptote(s, protocol) {
        Some(outage(&cfg, protocol, pm, Mode::Asymptotic, threshold, &opts)?.p_out)
    } else {
        None
    };
    let mc = match (simulate, s.sim_plan(protocol, pm, row)) {
        (true, Some(plan)) => Some(simulate_outage(&cfg, &plan)?),
        _ => None,
    };
    Ok(Cell { protocol, exact, asym, mc })
}

/// Exact, asymptotic and (if configured) Monte Carlo outage for every
/// protocol at every grid point, in grid order.
pub fn run_sweep(s: &Scenario) -> Result<Vec<SweepRow>> {
    run_sweep_inner(s, true)
}

fn run_sweep_inner(s: &Scenario, simulate: bool) -> Result<Vec<SweepRow>> {
    if s.protocols.contains(&Protocol::Dssc) {
        ensure!(s.n_relays() >= 2, "DSSC needs at least two relays; drop it from the protocol list");
    }
    let grid = s.grid_db();
    ensure!(!grid.is_empty(), "sweep grid is empty (start {} dB > stop {} dB)", s.pm_start_db, s.pm_stop_db);
    grid.par_iter()
        .enumerate()
        .map(|(row, &pm_db)| {
            let pm = db_to_linear(pm_db);
            let cells = s
                .protocols
                .iter()
                .map(|&p| eval_cell(s, p, pm, row, simulate))
                .collect::<Result<Vec<_>>>()
                .with_context(|| format!("at P_M = {pm_db} dB"))?;
            Ok(SweepRow { pm_db, cells })
        })
        .collect()
}

/// Sweep without the Monte Carlo columns.
pub fn run_sweep_analytic(s: &Scenario) -> Result<Vec<SweepRow>> {
    run_sweep_inner(s, false)
}

pub fn sweep_header(protocols: &[Protocol]) -> Vec<String> {
    let mut h = vec!["pm_db".to_string()];
    for p in protocols {
        for suffix in ["exact", "exact_log10", "asym", "asym_log10", "mc", "mc_ci3"] {
            h.push(format!("{p}_{suffix}"));
        }
    }
    h
}

pub fn sweep_table(rows: &[SweepRow], protocols: &[Protocol]) -> Table {
    let rows = rows
        .iter()
        .map(|r| {
            let mut out = vec![fmt_db(r.pm_db)];
            for c in &r.cells {
                out.push(fmt_prob(c.exact));
                out.push(fmt_log10(c.exact));
                out.push(c.asym.map(fmt_prob).unwrap_or_default());
                out.push(c.asym.map(fmt_log10).unwrap_or_default());
                out.push(c.mc.as_ref().map(|m| fmt_prob(m.p_hat)).unwrap_or_default());
                out.push(c.mc.as_ref().map(|m| fmt_prob(m.ci_halfwidth_3sigma)).unwrap_or_default());
            }
            out
        })
        .collect();
    Table { header: sweep_header(protocols), rows }
}

/// Power margin (dB) at which a curve reaches `level`, by linear
/// interpolation of log10(P_out) against dB between bracketing points.
pub fn margin_at_level(pm_db: &[f64], p: &[f64], level: f64) -> Option<f64> {
    let target = level.log10();
    pm_db.windows(2).zip(p.windows(2)).find_map(|(x, y)| {
        let (a, b) = (y[0].log10(), y[1].log10());
        if a >= target && b <= target && a.is_finite() && b.is_finite() && a != b {
            Some(x[0] + (target - a) / (b - a) * (x[1] - x[0]))
        } else {
            None
        }
    })
}

/// Diversity gains and pairwise dB gains at the reference outage `level`.
pub fn summary(s: &Scenario, rows: &[SweepRow], level: f64) -> Result<String> {
    let mut out = String::new();
    let base = s.base_config()?;
    for &p in &s.protocols {
        writeln!(out, "diversity gain {p}: {:.6}", diversity_gain(&base, p)?)?;
    }
    let pm: Vec<f64> = rows.iter().map(|r| r.pm_db).collect();
    let at: Vec<(Protocol, Option<f64>)> = s
        .protocols
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let curve: Vec<f64> = rows.iter().map(|r| r.cells[k].exact).collect();
            (p, margin_at_level(&pm, &curve, level))
        })
        .collect();
    for (p, m) in &at {
        match m {
            Some(m) => writeln!(out, "P_M for {p} at outage {level:e}: {m:.3} dB")?,
            None => writeln!(out, "P_M for {p} at outage {level:e}: not reached in the sweep")?,
        }
    }
    for (i, (a, ma)) in at.iter().enumerate() {
        for (b, mb) in &at[i + 1..] {
            if let (Some(ma), Some(mb)) = (ma, mb) {
                writeln!(out, "gain of {b} over {a} at {level:e}: {:.3} dB", ma - mb)?;
            }
        }
    }
    Ok(out)
}

/// Single-hop outage curve for a link of `distance_km` carrying all power.
pub fn link_table(s: &Scenario, distance_km: f64) -> Result<Table> {
    let link = s.link(distance_km, 1.0)?;
    let grid = s.grid_db();
    ensure!(!grid.is_empty(), "sweep grid is empty");
    let rows = grid
        .par_iter()
        .map(|&db| {
            let pm = db_to_linear(db);
            let exact = link_outage(&link, pm)?;
            let asym = link_outage_asymptotic(&link, pm)?;
            Ok(vec![fmt_db(db), fmt_prob(exact), fmt_log10(exact), fmt_prob(asym), fmt_log10(asym)])
        })
        .collect::<Result<Vec<_>>>()?;
    let header = ["pm_db", "link_exact", "link_exact_log10", "link_asym", "link_asym_log10"];
    Ok(Table { header: header.iter().map(|h| h.to_string()).collect(), rows })
}

/// Exact and asymptotic outage of every protocol under every allocation scheme.
pub fn optimize_table(s: &Scenario) -> Result<Table> {
    let grid = s.grid_db();
    ensure!(!grid.is_empty(), "sweep grid is empty");
    let mut header = vec!["pm_db".to_string()];
    for p in &s.protocols {
        for scheme in Scheme::ALL {
            header.push(format!("{p}_{scheme}_exact"));
            header.push(format!("{p}_{scheme}_asym"));
        }
    }
    let opts = AnalysisOptions::default();
    let rows = grid
        .par_iter()
        .map(|&db| {
            let pm = db_to_linear(db);
            let mut out = vec![fmt_db(db)];
            for &p in &s.protocols {
                for scheme in Scheme::ALL {
                    let cfg = s.config_with(p, scheme, pm)?;
                    let threshold = threshold_for(s, p, pm);
                    out.push(fmt_prob(outage(&cfg, p, pm, Mode::Exact, threshold, &opts)?.p_out));
                    out.push(if has_asymptote(s, p) {
                        fmt_prob(outage(&cfg, p, pm, Mode::Asymptotic, threshold, &opts)?.p_out)
                    } else {
                        String::new()
                    });
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()
        .context("allocation comparison")?;
    Ok(Table { header, rows })
}

/// Allocation of every protocol and scheme at power margin `pm_db`.
pub fn allocation_report(s: &Scenario, pm_db: f64) -> Result<String> {
    let mut out = String::new();
    let pm = db_to_linear(pm_db);
    for &p in &s.protocols {
        for scheme in Scheme::ALL {
            let cfg = s.config_with(p, scheme, pm)?;
            let sr: Vec<String> = cfg.sr().iter().map(|l| format!("{:.6}", l.rho)).collect();
            let rd: Vec<String> = cfg.rd().iter().map(|l| format!("{:.6}", l.rho)).collect();
            writeln!(out, "{p} {scheme} at {pm_db} dB: rho_SR = [{}], rho_RD = [{}]", sr.join(", "), rd.join(", "))?;
        }
    }
    Ok(out)
}

/// Monte Carlo columns only.
pub fn simulate_table(s: &Scenario) -> Result<Table> {
    ensure!(s.monte_carlo.is_some(), "scenario has no [monte_carlo] section");
    let grid = s.grid_db();
    ensure!(!grid.is_empty(), "sweep grid is empty");
    let mut header = vec!["pm_db".to_string()];
    for p in &s.protocols {
        header.push(format!("{p}_mc"));
        header.push(format!("{p}_mc_ci3"));
    }
    let rows = grid
        .par_iter()
        .enumerate()
        .map(|(row, &db)| {
            let pm = db_to_linear(db);
            let mut out = vec![fmt_db(db)];
            for &p in &s.protocols {
                let cfg = s.config(p, pm)?;
                let plan = s.sim_plan(p, pm, row).expect("monte carlo configured");
                let est = simulate_outage(&cfg, &plan)?;
                out.push(fmt_prob(est.p_hat));
                out.push(fmt_prob(est.ci_halfwidth_3sigma));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table { header, rows })
}

/// Analytic-versus-simulation comparison for points where the exact outage
/// is at least 100 events' worth of slots; returns the table and the
/// number of checked and agreeing points.
pub fn validate_table(s: &Scenario) -> Result<(Table, usize, usize)> {
    let n_slots = s.monte_carlo.context("scenario has no [monte_carlo] section")?.n_slots;
    let rows = run_sweep(s)?;
    let header = ["pm_db", "protocol", "exact", "mc", "mc_ci3", "within_3sigma"];
    let mut out = Vec::new();
    let (mut checked, mut agree) = (0, 0);
    for r in &rows {
        for c in &r.cells {
            let Some(mc) = &c.mc else { continue };
            if c.exact * (n_slots as f64) < 100.0 {
                continue;
            }
            let ok = mc.contains(c.exact);
            checked += 1;
            agree += usize::from(ok);
            out.push(vec![
                fmt_db(r.pm_db),
                c.protocol.to_string(),
                fmt_prob(c.exact),
                fmt_prob(mc.p_hat),
                fmt_prob(mc.ci_halfwidth_3sigma),
                ok.to_string(),
            ]);
        }
    }
    Ok((Table { header: header.iter().map(|h| h.to_string()).collect(), rows: out }, checked, agree))
}
