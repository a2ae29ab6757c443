use super::select_max::{check_path, min_path_cdf_asymptotic, min_path_cdf_noted};
use super::{AnalysisOptions, Mode, OutageResult, SystemConfig};
use crate::error::{Error, Result};

/// Below this the switching weights F_i/(F_1 + F_2) are taken from the
/// leading power laws in the log domain.
const DENOMINATOR_FLOOR: f64 = 1e-300;

/// Switching state: the relay in use (0 or 1 within the selected pair) and
/// the threshold T̄ in power-margin units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DsscState {
    pub active_relay: usize,
    pub threshold: f64,
}

impl DsscState {
    pub fn new(active_relay: usize, threshold: f64) -> Result<Self> {
        if active_relay > 1 {
            return Err(Error::InvalidParameter(format!("DSSC uses relay 0 or 1, got {active_relay}")));
        }
        check_threshold(threshold)?;
        Ok(Self { active_relay, threshold })
    }

    /// Relay used in this slot given the active path's weakest hop gain
    /// h̄ρh̃; the path is below the switching SNR when gain·T̄ < 1.
    pub fn step(&mut self, active_gain: f64) -> usize {
        if active_gain * self.threshold < 1.0 {
            self.active_relay = 1 - self.active_relay;
        }
        self.active_relay
    }
}

fn check_threshold(t: f64) -> Result<()> {
    if t > 0.0 && !t.is_nan() {
        Ok(())
    } else {
        Err(Error::Domain(format!("switching threshold must be positive, got {t}")))
    }
}

/// The two paths with the smallest end-to-end distance max(d_SR, d_RD),
/// lower index first on ties; returned in increasing index order.
pub fn dssc_pair_selection(cfg: &SystemConfig) -> Result<(usize, usize)> {
    if cfg.n_relays() < 2 {
        return Err(Error::InvalidParameter("DSSC needs at least two relays".into()));
    }
    let mut order: Vec<usize> = (0..cfg.n_relays()).collect();
    let dist = |b: usize| cfg.sr()[b].geometry.distance_km.max(cfg.rd()[b].geometry.distance_km);
    order.sort_by(|&a, &b| dist(a).total_cmp(&dist(b)).then(a.cmp(&b)));
    let (i, j) = (order[0], order[1]);
    Ok((i.min(j), i.max(j)))
}

/// DSSC outage on the pair chosen by [`dssc_pair_selection`].
pub fn dssc_outage(
    cfg: &SystemConfig,
    pm: f64,
    threshold: f64,
    mode: Mode,
    opts: &AnalysisOptions,
) -> Result<OutageResult> {
    let pair = dssc_pair_selection(cfg)?;
    dssc_outage_pair(cfg, pair, pm, threshold, mode, opts)
}

/// DSSC outage on paths `pair` with switching threshold `threshold` (T̄):
/// with F_i = F_{h_i} at T̄ and G_i = F_{h_i} at P_M,
///
/// T̄ ≤ P_M: F₁F₂(G₁ + G₂)/(F₁ + F₂),
/// T̄ > P_M: F₁F₂(G₁ + G₂ - 2)/(F₁ + F₂) + (G₁F₂ + F₁G₂)/(F₁ + F₂).
///
/// The asymptotic form exists only for the optimal threshold T̄ = P_M,
/// where it is the two-path select-max power law.
pub fn dssc_outage_pair(
    cfg: &SystemConfig,
    pair: (usize, usize),
    pm: f64,
    threshold: f64,
    mode: Mode,
    opts: &AnalysisOptions,
) -> Result<OutageResult> {
    let (i, j) = pair;
    check_path(cfg, i)?;
    check_path(cfg, j)?;
    if i == j {
        return Err(Error::InvalidParameter(format!("DSSC pair must hold two distinct paths, got ({i}, {j})")));
    }
    cfg.select(&[i, j])?.check_per_path_power()?;
    opts.series.validate()?;
    check_threshold(threshold)?;
    if !(pm > 0.0) || pm.is_nan() {
        return Err(Error::Domain(format!("power margin must be positive, got {pm}")));
    }
    let mut notes = Vec::new();
    let p = match mode {
        Mode::Asymptotic => {
            if (threshold - pm).abs() > 1e-12 * pm {
                return Err(Error::InvalidParameter(
                    "asymptotic DSSC outage is defined only for the threshold T̄ = P_M".into(),
                ));
            }
            min_path_cdf_asymptotic(cfg, i, pm)? * min_path_cdf_asymptotic(cfg, j, pm)?
        }
        Mode::Exact => {
            let g1 = min_path_cdf_noted(cfg, i, pm, opts, &mut notes)?;
            let g2 = min_path_cdf_noted(cfg, j, pm, opts, &mut notes)?;
            let f1 = min_path_cdf_noted(cfg, i, threshold, opts, &mut notes)?;
            let f2 = min_path_cdf_noted(cfg, j, threshold, opts, &mut notes)?;
            let den = f1 + f2;
            let (w1, w2, ratio) = if den >= DENOMINATOR_FLOOR {
                (f2 / den, f1 / den, f1 * f2 / den)
            } else {
                // F₁F₂/(F₁+F₂) → 0; the occupancy weights follow from the
                // leading power laws, compared in the log domain
                let l1 = min_path_cdf_asymptotic(cfg, i, threshold)?.ln();
                let l2 = min_path_cdf_asymptotic(cfg, j, threshold)?.ln();
                let w1 = 1.0 / (1.0 + (l1 - l2).exp());
                notes.push("switching probabilities below 1e-300; weights from leading power laws".into());
                (w1, 1.0 - w1, 0.0)
            };
            if threshold <= pm {
                ratio * (g1 + g2)
            } else {
                ratio * (g1 + g2 - 2.0) + w1 * g1 + w2 * g2
            }
        }
    };
    Ok(OutageResult::new(p, mode, notes))
}
