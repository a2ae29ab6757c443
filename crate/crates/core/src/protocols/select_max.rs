use super::{hop_outage, AnalysisOptions, Mode, OutageResult, SystemConfig};
use crate::channel::link_outage_asymptotic;
use crate::error::{Error, Result};

/// 1 - (1 - a)(1 - b) without cancellation for small `a`, `b`.
pub(crate) fn either(a: f64, b: f64) -> f64 {
    a + b - a * b
}

pub(crate) fn check_path(cfg: &SystemConfig, b: usize) -> Result<()> {
    if b >= cfg.n_relays() {
        return Err(Error::InvalidParameter(format!("path index {b} out of range for {} relays", cfg.n_relays())));
    }
    Ok(())
}

/// Outage of path `b` taken as the minimum of its two hop SNRs at power
/// margin `x`: 1 - (1 - F_SR(1/(h̄ρx)))(1 - F_RD(1/(h̄ρx))).
pub fn min_path_cdf(cfg: &SystemConfig, b: usize, x: f64, opts: &AnalysisOptions) -> Result<f64> {
    let mut notes = Vec::new();
    min_path_cdf_noted(cfg, b, x, opts, &mut notes)
}

pub(crate) fn min_path_cdf_noted(
    cfg: &SystemConfig,
    b: usize,
    x: f64,
    opts: &AnalysisOptions,
    notes: &mut Vec<String>,
) -> Result<f64> {
    check_path(cfg, b)?;
    let sr = hop_outage(&cfg.sr()[b], x, opts, notes)?;
    let rd = hop_outage(&cfg.rd()[b], x, opts, notes)?;
    Ok(either(sr, rd))
}

/// Leading-order path outage: sum of the two hop power laws.
pub(crate) fn min_path_cdf_asymptotic(cfg: &SystemConfig, b: usize, x: f64) -> Result<f64> {
    check_path(cfg, b)?;
    Ok(link_outage_asymptotic(&cfg.sr()[b], x)? + link_outage_asymptotic(&cfg.rd()[b], x)?)
}

/// Select-max outage: the selected path fails only when every path does,
/// so the outage is the product of the per-path outages.
pub fn select_max_outage(cfg: &SystemConfig, pm: f64, mode: Mode, opts: &AnalysisOptions) -> Result<OutageResult> {
    cfg.check_per_path_power()?;
    opts.series.validate()?;
    if !(pm > 0.0) || pm.is_nan() {
        return Err(Error::Domain(format!("power margin must be positive, got {pm}")));
    }
    let mut notes = Vec::new();
    let mut p = 1.0;
    for b in 0..cfg.n_relays() {
        p *= match mode {
            Mode::Exact => min_path_cdf_noted(cfg, b, pm, opts, &mut notes)?,
            Mode::Asymptotic => min_path_cdf_asymptotic(cfg, b, pm)?,
        };
    }
    Ok(OutageResult::new(p, mode, notes))
}
