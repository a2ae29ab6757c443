//! Slot-level Monte Carlo simulation of the relaying protocols.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;

use crate::channel::{GammaGamma, LinkParams};
use crate::error::{Error, Result};
use crate::protocols::{dssc_pair_selection, DsscState, Protocol, SystemConfig};

/// Slots per independently seeded block of the stateless protocols.
pub const BLOCK_SLOTS: u64 = 1 << 16;
/// Independent switching chains run for DSSC.
pub const DSSC_CHAINS: u64 = 16;
/// Slots discarded at the start of each DSSC chain.
pub const DSSC_WARMUP: u64 = 1000;

/// Stream offset separating DSSC chains from block streams.
const DSSC_STREAM_BASE: u64 = 1 << 40;

/// Sampler of `X·Y` with `X ~ Gamma(α, 1/α)` and `Y ~ Gamma(β, 1/β)`.
#[derive(Debug, Clone, Copy)]
pub struct GammaGammaSampler {
    x: Gamma<f64>,
    y: Gamma<f64>,
}

impl GammaGammaSampler {
    pub fn new(dist: &GammaGamma) -> Result<Self> {
        let make = |shape: f64| {
            Gamma::new(shape, 1.0 / shape)
                .map_err(|e| Error::InvalidParameter(format!("Gamma shape {shape}: {e}")))
        };
        Ok(Self { x: make(dist.alpha())?, y: make(dist.beta())? })
    }
}

impl Distribution<f64> for GammaGammaSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.x.sample(rng) * self.y.sample(rng)
    }
}

/// One Gamma-Gamma draw.
pub fn sample_gg<R: Rng + ?Sized>(dist: &GammaGamma, rng: &mut R) -> f64 {
    GammaGammaSampler::new(dist).expect("shapes validated by GammaGamma").sample(rng)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimPlan {
    pub n_slots: u64,
    pub seed: u64,
    pub protocol: Protocol,
    /// Power margin P_M (linear).
    pub pm: f64,
    /// DSSC switching threshold T̄ (linear); `None` means T̄ = P_M.
    pub threshold: Option<f64>,
}

impl SimPlan {
    pub fn new(protocol: Protocol, pm: f64, n_slots: u64, seed: u64) -> Self {
        Self { n_slots, seed, protocol, pm, threshold: None }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_slots == 0 {
            return Err(Error::InvalidParameter("simulation needs at least one slot".into()));
        }
        if !(self.pm > 0.0) || self.pm.is_nan() {
            return Err(Error::Domain(format!("power margin must be positive, got {}", self.pm)));
        }
        if let Some(t) = self.threshold {
            if !(t > 0.0) || t.is_nan() {
                return Err(Error::Domain(format!("switching threshold must be positive, got {t}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimEstimate {
    pub p_hat: f64,
    /// Three binomial standard deviations, 3√(p̂(1-p̂)/n).
    pub ci_halfwidth_3sigma: f64,
    pub n_slots: u64,
    pub outages: u64,
    pub seed: u64,
    /// DSSC only: fraction of counted slots served by each relay of the pair.
    pub occupancy: Option<[f64; 2]>,
}

impl SimEstimate {
    fn from_counts(outages: u64, n_slots: u64, seed: u64, occupancy: Option<[f64; 2]>) -> Self {
        let p_hat = outages as f64 / n_slots as f64;
        let ci = 3.0 * (p_hat * (1.0 - p_hat) / n_slots as f64).sqrt();
        Self { p_hat, ci_halfwidth_3sigma: ci, n_slots, outages, seed, occupancy }
    }

    /// Whether `p` lies within the 3σ interval.
    pub fn contains(&self, p: f64) -> bool {
        (p - self.p_hat).abs() <= self.ci_halfwidth_3sigma
    }
}

/// Weighted hop gain h̄ρh̃ sampler; a hop is up when gain·P_M ≥ 1.
#[derive(Debug, Clone, Copy)]
struct HopSampler {
    weight: f64,
    fade: GammaGammaSampler,
}

impl HopSampler {
    fn new(link: &LinkParams) -> Result<Self> {
        Ok(Self { weight: link.path_loss * link.rho, fade: GammaGammaSampler::new(&link.distribution())? })
    }

    fn gain<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.weight * self.fade.sample(rng)
    }
}

fn samplers(links: &[LinkParams]) -> Result<Vec<HopSampler>> {
    links.iter().map(HopSampler::new).collect()
}

/// Deterministic generator for stream `stream` of `seed`.
fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Estimate the outage probability of `cfg` under `plan`. The result depends
/// only on the configuration and the plan, not on the worker count.
pub fn simulate_outage(cfg: &SystemConfig, plan: &SimPlan) -> Result<SimEstimate> {
    plan.validate()?;
    match plan.protocol {
        Protocol::AllActive => cfg.check_all_active_power()?,
        Protocol::SelectMax => cfg.check_per_path_power()?,
        Protocol::Dssc => {}
    }
    let sr = samplers(cfg.sr())?;
    let rd = samplers(cfg.rd())?;
    let inv_pm = 1.0 / plan.pm;
    match plan.protocol {
        Protocol::AllActive => Ok(run_blocks(plan, |rng| {
            let mut sum = 0.0;
            for (s, r) in sr.iter().zip(&rd) {
                let g_sr = s.gain(rng);
                let g_rd = r.gain(rng);
                if g_sr >= inv_pm {
                    sum += g_rd;
                }
            }
            sum < inv_pm
        })),
        Protocol::SelectMax => Ok(run_blocks(plan, |rng| {
            let mut best = 0.0f64;
            for (s, r) in sr.iter().zip(&rd) {
                best = best.max(s.gain(rng).min(r.gain(rng)));
            }
            best < inv_pm
        })),
        Protocol::Dssc => {
            let (i, j) = dssc_pair_selection(cfg)?;
            cfg.select(&[i, j])?.check_per_path_power()?;
            let paths = [(sr[i], rd[i]), (sr[j], rd[j])];
            run_dssc(plan, &paths)
        }
    }
}

fn run_blocks<F>(plan: &SimPlan, outage: F) -> SimEstimate
where
    F: Fn(&mut ChaCha8Rng) -> bool + Sync,
{
    let n_blocks = plan.n_slots.div_ceil(BLOCK_SLOTS);
    let outages: u64 = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(plan.seed, b);
            let len = BLOCK_SLOTS.min(plan.n_slots - b * BLOCK_SLOTS);
            (0..len).filter(|_| outage(&mut rng)).count() as u64
        })
        .sum();
    SimEstimate::from_counts(outages, plan.n_slots, plan.seed, None)
}

fn run_dssc(plan: &SimPlan, paths: &[(HopSampler, HopSampler); 2]) -> Result<SimEstimate> {
    let inv_pm = 1.0 / plan.pm;
    let threshold = plan.threshold.unwrap_or(plan.pm);
    let chains = DSSC_CHAINS.min(plan.n_slots);
    let counts: Vec<(u64, u64)> = (0..chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(plan.seed, DSSC_STREAM_BASE + c);
            let len = plan.n_slots / chains + u64::from(c < plan.n_slots % chains);
            let mut state = DsscState::new(0, threshold).expect("threshold validated");
            let (mut outages, mut on_first) = (0u64, 0u64);
            for slot in 0..DSSC_WARMUP + len {
                let gains = paths.map(|(s, r)| s.gain(&mut rng).min(r.gain(&mut rng)));
                let used = state.step(gains[state.active_relay]);
                if slot >= DSSC_WARMUP {
                    outages += u64::from(gains[used] < inv_pm);
                    on_first += u64::from(used == 0);
                }
            }
            (outages, on_first)
        })
        .collect();
    let outages = counts.iter().map(|c| c.0).sum();
    let first = counts.iter().map(|c| c.1).sum::<u64>() as f64 / plan.n_slots as f64;
    Ok(SimEstimate::from_counts(outages, plan.n_slots, plan.seed, Some([first, 1.0 - first])))
}
