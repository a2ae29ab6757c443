//! Outage probability and diversity gain of the all-active, select-max and
//! DSSC relaying protocols.

mod all_active;
mod dssc;
mod select_max;

pub use all_active::{
    all_active_asymptotic_posynomial, all_active_outage, decoding_set_prob, sum_cdf_asymptotic, sum_cdf_exact};
pub use dssc::{dssc_outage, dssc_outage_pair, dssc_pair_selection, DsscState};
pub use select_max::{min_path_cdf, select_max_outage};

use std::fmt;
use std::str::FromStr;

use crate::channel::{link_outage_detailed, CdfMethod, LinkParams};
use crate::error::{Error, Result};
use crate::numerics::{EulerInversionParams, SeriesControl};

/// Largest relay count for exact all-active enumeration over decoding sets.
pub const MAX_ENUMERATED_RELAYS: usize = 20;

/// Tolerance on the power-fraction sum constraints.
pub const POWER_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Protocol {
    AllActive,
    SelectMax,
    Dssc,
}

impl Protocol {
    pub const ALL: [Protocol; 3] = [Protocol::AllActive, Protocol::SelectMax, Protocol::Dssc];

    pub fn name(&self) -> &'static str {
        match self {
            Protocol::AllActive => "all_active",
            Protocol::SelectMax => "select_max",
            Protocol::Dssc => "dssc",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "all_active" | "allactive" => Ok(Protocol::AllActive),
            "select_max" | "selectmax" => Ok(Protocol::SelectMax),
            "dssc" => Ok(Protocol::Dssc),
            other => Err(Error::InvalidParameter(format!("unknown protocol '{other}'"))),
        }
    }
}

/// Requested evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Exact,
    Asymptotic,
}

/// How an outage value was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Exact,
    Asymptotic,
    MonteCarlo,
}

impl From<Mode> for Method {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Exact => Method::Exact,
            Mode::Asymptotic => Method::Asymptotic,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutageResult {
    pub p_out: f64,
    pub method: Method,
    /// Accuracy notes, e.g. hop CDFs that needed quadrature or an
    /// approximation clamped to 1.
    pub notes: Vec<String>,
}

impl OutageResult {
    pub(crate) fn new(p_out: f64, mode: Mode, mut notes: Vec<String>) -> Self {
        let clamped = p_out.clamp(0.0, 1.0);
        if clamped != p_out && p_out.is_finite() {
            notes.push(format!("value {p_out:e} clamped to [0, 1]"));
        }
        Self { p_out: clamped, method: mode.into(), notes }
    }
}

/// Numerical controls for the exact analysis.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AnalysisOptions {
    pub series: SeriesControl,
    pub inversion: EulerInversionParams,
}

/// Source-relay-destination topology with one S→R and one R→D hop per relay.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    sr: Vec<LinkParams>,
    rd: Vec<LinkParams>,
}

impl SystemConfig {
    pub fn new(sr: Vec<LinkParams>, rd: Vec<LinkParams>) -> Result<Self> {
        if sr.is_empty() {
            return Err(Error::InvalidParameter("at least one relay is required".into()));
        }
        if sr.len() != rd.len() {
            return Err(Error::InvalidParameter(format!(
                "{} source-relay hops but {} relay-destination hops",
                sr.len(),
                rd.len()
            )));
        }
        Ok(Self { sr, rd })
    }

    pub fn n_relays(&self) -> usize {
        self.sr.len()
    }

    pub fn sr(&self) -> &[LinkParams] {
        &self.sr
    }

    pub fn rd(&self) -> &[LinkParams] {
        &self.rd
    }

    /// Same topology with new power fractions.
    pub fn with_allocation(&self, rho_sr: &[f64], rho_rd: &[f64]) -> Result<Self> {
        let n = self.n_relays();
        if rho_sr.len() != n || rho_rd.len() != n {
            return Err(Error::InvalidParameter(format!("allocation must have {n} entries per hop")));
        }
        let sr = self.sr.iter().zip(rho_sr).map(|(l, &r)| l.with_rho(r)).collect::<Result<_>>()?;
        let rd = self.rd.iter().zip(rho_rd).map(|(l, &r)| l.with_rho(r)).collect::<Result<_>>()?;
        Ok(Self { sr, rd })
    }

    /// Configuration restricted to the given relays, in the given order.
    pub fn select(&self, relays: &[usize]) -> Result<Self> {
        let mut sr = Vec::with_capacity(relays.len());
        let mut rd = Vec::with_capacity(relays.len());
        for &i in relays {
            if i >= self.n_relays() {
                return Err(Error::InvalidParameter(format!("relay index {i} out of range")));
            }
            sr.push(self.sr[i]);
            rd.push(self.rd[i]);
        }
        Self::new(sr, rd)
    }

    /// All-active constraint: Σ(ρ_SR + ρ_RD) = 1.
    pub fn check_all_active_power(&self) -> Result<()> {
        let total: f64 = self.sr.iter().chain(&self.rd).map(|l| l.rho).sum();
        if (total - 1.0).abs() > POWER_SUM_TOLERANCE {
            return Err(Error::PowerConstraint(format!("all-active fractions sum to {total}, expected 1")));
        }
        Ok(())
    }

    /// Per-path constraint: ρ_SR_b + ρ_RD_b = 1 for every path.
    pub fn check_per_path_power(&self) -> Result<()> {
        for (b, (s, r)) in self.sr.iter().zip(&self.rd).enumerate() {
            let total = s.rho + r.rho;
            if (total - 1.0).abs() > POWER_SUM_TOLERANCE {
                return Err(Error::PowerConstraint(format!("path {b} fractions sum to {total}, expected 1")));
            }
        }
        Ok(())
    }
}

/// Subset of relays that decoded the source transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DecodingSet(u32);

impl DecodingSet {
    pub fn empty() -> Self {
        Self(0)
    }

    pub fn full(n: usize) -> Result<Self> {
        check_enumerable(n)?;
        Ok(Self(((1u64 << n) - 1) as u32))
    }

    pub fn from_bits(bits: u32) -> Self {
        Self(bits)
    }

    pub fn from_members(members: &[usize]) -> Result<Self> {
        let mut bits = 0u32;
        for &m in members {
            if m >= MAX_ENUMERATED_RELAYS {
                return Err(Error::TooManyRelays { n: m + 1, max: MAX_ENUMERATED_RELAYS });
            }
            bits |= 1 << m;
        }
        Ok(Self(bits))
    }

    pub fn bits(&self) -> u32 {
        self.0
    }

    pub fn contains(&self, relay: usize) -> bool {
        relay < 32 && self.0 & (1 << relay) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        (0..32).filter(move |&i| self.contains(i))
    }

    /// Every subset of `n` relays, from empty to full.
    pub fn all(n: usize) -> Result<impl Iterator<Item = DecodingSet>> {
        check_enumerable(n)?;
        Ok((0..(1u32 << n)).map(DecodingSet))
    }

    fn check_within(&self, n: usize) -> Result<()> {
        if n < 32 && self.0 >> n != 0 {
            return Err(Error::InvalidParameter(format!("decoding set {:#b} exceeds {n} relays", self.0)));
        }
        Ok(())
    }
}

fn check_enumerable(n: usize) -> Result<()> {
    if n > MAX_ENUMERATED_RELAYS {
        return Err(Error::TooManyRelays { n, max: MAX_ENUMERATED_RELAYS });
    }
    Ok(())
}

/// Hop outage at power margin `pm`, noting any quadrature fallback.
pub(crate) fn hop_outage(link: &LinkParams, pm: f64, opts: &AnalysisOptions, notes: &mut Vec<String>) -> Result<f64> {
    let c = link_outage_detailed(link, pm, &opts.series)?;
    if c.method == CdfMethod::Quadrature {
        let note = "hop CDF evaluated by quadrature (series unusable)".to_string();
        if !notes.contains(&note) {
            notes.push(note);
        }
    }
    Ok(c.value)
}

/// Diversity gain: magnitude of the high-margin log-log outage slope.
pub fn diversity_gain(cfg: &SystemConfig, protocol: Protocol) -> Result<f64> {
    let path_min = |b: usize| cfg.sr[b].turbulence.q().min(cfg.rd[b].turbulence.q());
    match protocol {
        Protocol::AllActive => {
            // minimum over decoding sets of Σ_{m∉S} q_SR_m + Σ_{m∈S} q_RD_m
            let mut best = f64::INFINITY;
            for set in DecodingSet::all(cfg.n_relays())? {
                let g: f64 = (0..cfg.n_relays())
                    .map(|m| if set.contains(m) { cfg.rd[m].turbulence.q() } else { cfg.sr[m].turbulence.q() })
                    .sum();
                best = best.min(g);
            }
            Ok(best)
        }
        Protocol::SelectMax => Ok((0..cfg.n_relays()).map(path_min).sum()),
        Protocol::Dssc => {
            let (i, j) = dssc_pair_selection(cfg)?;
            Ok(path_min(i) + path_min(j))
        }
    }
}

/// Outage of `protocol` at power margin `pm`; for DSSC the switching
/// threshold is `dssc_threshold` (power-margin units) or `pm` when `None`.
pub fn outage(
    cfg: &SystemConfig,
    protocol: Protocol,
    pm: f64,
    mode: Mode,
    dssc_threshold: Option<f64>,
    opts: &AnalysisOptions,
) -> Result<OutageResult> {
    match protocol {
        Protocol::AllActive => all_active_outage(cfg, pm, mode, opts),
        Protocol::SelectMax => select_max_outage(cfg, pm, mode, opts),
        Protocol::Dssc => dssc_outage(cfg, pm, dssc_threshold.unwrap_or(pm), mode, opts),
    }
}
