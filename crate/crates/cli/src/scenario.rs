//! Scenario files: link geometry, weather, relay layout and sweep settings.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use serde::Deserialize;

use fso_relay::channel::{db_to_linear, power_for_margin, LinkGeometry, LinkParams, OpticalConstants};
use fso_relay::montecarlo::SimPlan;
use fso_relay::power_alloc::{allocate, Scheme};
use fso_relay::protocols::{Protocol, SystemConfig};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    optical: RawOptical,
    weather: RawWeather,
    geometry: RawGeometry,
    relays: RawRelays,
    analysis: RawAnalysis,
    sweep: RawSweep,
    #[serde(default)]
    dssc: RawDssc,
    monte_carlo: Option<RawMonteCarlo>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptical {
    wavelength_nm: f64,
    responsivity: Option<f64>,
    slot_s: Option<f64>,
    noise: Option<f64>,
    background_w: Option<f64>,
    gamma_th: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWeather {
    attenuation_per_km: f64,
    cn2: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    rx_aperture_m: f64,
    tx_aperture_m: f64,
    divergence_mrad: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRelays {
    d_sr_km: Vec<f64>,
    d_rd_km: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnalysis {
    protocols: Vec<String>,
    allocation: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    pm_start_db: f64,
    pm_stop_db: f64,
    pm_step_db: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDssc {
    threshold: Option<String>,
    threshold_db: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMonteCarlo {
    n_slots: u64,
    seed: u64,
}

/// Switching threshold of the DSSC protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdPolicy {
    /// T̄ = P_M at every grid point.
    Optimal,
    /// Fixed T̄ in dB of power margin.
    FixedDb(f64),
}

impl ThresholdPolicy {
    /// T̄ (linear) at power margin `pm`.
    pub fn threshold(&self, pm: f64) -> f64 {
        match *self {
            ThresholdPolicy::Optimal => pm,
            ThresholdPolicy::FixedDb(db) => db_to_linear(db),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloSettings {
    pub n_slots: u64,
    pub seed: u64,
}

/// Validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub wavelength_m: f64,
    /// Present when every receiver constant is given; used to report the
    /// transmit power behind each power margin.
    pub optical: Option<(OpticalConstants, f64)>,
    pub attenuation_per_km: f64,
    pub cn2: f64,
    pub rx_aperture_m: f64,
    pub tx_aperture_m: f64,
    pub divergence_mrad: f64,
    pub d_sr_km: Vec<f64>,
    pub d_rd_km: Vec<f64>,
    pub protocols: Vec<Protocol>,
    pub allocation: Scheme,
    pub pm_start_db: f64,
    pub pm_stop_db: f64,
    pub pm_step_db: f64,
    pub threshold: ThresholdPolicy,
    pub monte_carlo: Option<MonteCarloSettings>,
}

/// Read and validate a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Scenario::from_toml(&text).with_context(|| format!("scenario {}", path.display()))
}

fn positive(name: &str, v: f64) -> Result<()> {
    ensure!(v > 0.0 && v.is_finite(), "{name} must be finite and positive, got {v}");
    Ok(())
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawScenario = toml::from_str(text)?;
        let o = &raw.optical;
        positive("optical.wavelength_nm", o.wavelength_nm)?;
        let optical = match (o.responsivity, o.slot_s, o.noise, o.background_w, o.gamma_th) {
            (Some(responsivity), Some(slot_s), Some(noise), Some(background_w), Some(gamma_th)) => {
                let c = OpticalConstants {
                    wavelength_m: o.wavelength_nm * 1e-9,
                    responsivity,
                    slot_s,
                    power_w: 1.0,
                    noise,
                    background_w,
                };
                c.validate()?;
                positive("optical.gamma_th", gamma_th)?;
                Some((c, gamma_th))
            }
            (None, None, None, None, None) => None,
            _ => bail!("optical: responsivity, slot_s, noise, background_w and gamma_th must be given together"),
        };
        ensure!(raw.weather.attenuation_per_km >= 0.0, "weather.attenuation_per_km must be non-negative");
        positive("weather.cn2", raw.weather.cn2)?;
        positive("geometry.rx_aperture_m", raw.geometry.rx_aperture_m)?;
        positive("geometry.tx_aperture_m", raw.geometry.tx_aperture_m)?;
        positive("geometry.divergence_mrad", raw.geometry.divergence_mrad)?;
        let r = &raw.relays;
        ensure!(!r.d_sr_km.is_empty(), "relays.d_sr_km must list at least one relay");
        ensure!(
            r.d_sr_km.len() == r.d_rd_km.len(),
            "relays.d_sr_km and relays.d_rd_km must have equal length ({} vs {})",
            r.d_sr_km.len(),
            r.d_rd_km.len()
        );
        for d in r.d_sr_km.iter().chain(&r.d_rd_km) {
            positive("relay distance", *d)?;
        }
        ensure!(!raw.analysis.protocols.is_empty(), "analysis.protocols must not be empty");
        let mut protocols = Vec::new();
        for p in &raw.analysis.protocols {
            let p: Protocol = p.parse()?;
            ensure!(!protocols.contains(&p), "protocol {p} listed twice");
            protocols.push(p);
        }
        let s = &raw.sweep;
        ensure!(s.pm_step_db > 0.0 && s.pm_step_db.is_finite(), "sweep.pm_step_db must be positive");
        ensure!(s.pm_start_db.is_finite() && s.pm_stop_db.is_finite(), "sweep limits must be finite");
        let threshold = match (raw.dssc.threshold.as_deref(), raw.dssc.threshold_db) {
            (None | Some("optimal"), None) => ThresholdPolicy::Optimal,
            (Some("fixed") | None, Some(db)) => {
                ensure!(db.is_finite(), "dssc.threshold_db must be finite");
                ThresholdPolicy::FixedDb(db)
            }
            (Some(other), _) => bail!("dssc.threshold must be \"optimal\" or \"fixed\" with threshold_db, got {other:?}"),
        };
        let monte_carlo = match raw.monte_carlo {
            Some(m) => {
                ensure!(m.n_slots >= 1, "monte_carlo.n_slots must be at least 1");
                Some(MonteCarloSettings { n_slots: m.n_slots, seed: m.seed })
            }
            None => None,
        };
        let scenario = Scenario {
            name: raw.name,
            wavelength_m: o.wavelength_nm * 1e-9,
            optical,
            attenuation_per_km: raw.weather.attenuation_per_km,
            cn2: raw.weather.cn2,
            rx_aperture_m: raw.geometry.rx_aperture_m,
            tx_aperture_m: raw.geometry.tx_aperture_m,
            divergence_mrad: raw.geometry.divergence_mrad,
            d_sr_km: r.d_sr_km.clone(),
            d_rd_km: r.d_rd_km.clone(),
            protocols,
            allocation: raw.analysis.allocation.parse()?,
            pm_start_db: s.pm_start_db,
            pm_stop_db: s.pm_stop_db,
            pm_step_db: s.pm_step_db,
            threshold,
            monte_carlo,
        };
        scenario.base_config()?;
        Ok(scenario)
    }

    pub fn n_relays(&self) -> usize {
        self.d_sr_km.len()
    }

    /// Scenario with `n` relays: a symmetric layout is resized, any other
    /// layout keeps its first `n` relays.
    pub fn with_relays(&self, n: usize) -> Result<Self> {
        ensure!(n >= 1, "relay count must be at least 1");
        let symmetric = self.d_sr_km.iter().all(|&d| d == self.d_sr_km[0])
            && self.d_rd_km.iter().all(|&d| d == self.d_rd_km[0]);
        let mut s = self.clone();
        if symmetric {
            s.d_sr_km = vec![self.d_sr_km[0]; n];
            s.d_rd_km = vec![self.d_rd_km[0]; n];
        } else {
            ensure!(n <= self.n_relays(), "asymmetric layout has only {} relays, asked for {n}", self.n_relays());
            s.d_sr_km.truncate(n);
            s.d_rd_km.truncate(n);
        }
        Ok(s)
    }

    /// Power-margin grid in dB, start to stop inclusive.
    pub fn grid_db(&self) -> Vec<f64> {
        if self.pm_start_db > self.pm_stop_db {
            return Vec::new();
        }
        let steps = ((self.pm_stop_db - self.pm_start_db) / self.pm_step_db + 1e-9).floor() as usize;
        (0..=steps).map(|k| self.pm_start_db + k as f64 * self.pm_step_db).collect()
    }

    pub fn geometry(&self, distance_km: f64) -> LinkGeometry {
        LinkGeometry {
            distance_km,
            rx_aperture_m: self.rx_aperture_m,
            tx_aperture_m: self.tx_aperture_m,
            divergence_mrad: self.divergence_mrad,
            attenuation_per_km: self.attenuation_per_km,
        }
    }

    pub fn link(&self, distance_km: f64, rho: f64) -> Result<LinkParams> {
        Ok(LinkParams::from_geometry(self.geometry(distance_km), self.cn2, self.wavelength_m, rho)?)
    }

    /// Topology with unit power fractions; allocations are applied on top.
    pub fn base_config(&self) -> Result<SystemConfig> {
        let sr = self.d_sr_km.iter().map(|&d| self.link(d, 1.0)).collect::<Result<Vec<_>>>()?;
        let rd = self.d_rd_km.iter().map(|&d| self.link(d, 1.0)).collect::<Result<Vec<_>>>()?;
        Ok(SystemConfig::new(sr, rd)?)
    }

    /// Topology with the scenario's allocation for `protocol` at `pm`.
    pub fn config(&self, protocol: Protocol, pm: f64) -> Result<SystemConfig> {
        self.config_with(protocol, self.allocation, pm)
    }

    pub fn config_with(&self, protocol: Protocol, scheme: Scheme, pm: f64) -> Result<SystemConfig> {
        let base = self.base_config()?;
        let alloc = allocate(&base, protocol, scheme, pm)?;
        Ok(alloc.apply(&base)?)
    }

    /// Monte Carlo plan for `protocol` at `pm`, seeded per grid point and
    /// protocol so that rows are independent of evaluation order.
    pub fn sim_plan(&self, protocol: Protocol, pm: f64, row: usize) -> Option<SimPlan> {
        let mc = self.monte_carlo?;
        let idx = Protocol::ALL.iter().position(|&p| p == protocol).expect("known protocol") as u64;
        let seed = mc.seed.wrapping_add((row as u64) << 8 | idx);
        let mut plan = SimPlan::new(protocol, pm, mc.n_slots, seed);
        if protocol == Protocol::Dssc {
            plan.threshold = Some(self.threshold.threshold(pm));
        }
        Some(plan)
    }

    /// Derived link quantities, one line per hop.
    pub fn provenance(&self) -> Result<String> {
        let cfg = self.base_config()?;
        let mut out = String::new();
        writeln!(out, "scenario: {}", self.name)?;
        writeln!(
            out,
            "wavelength {:.1} nm, C_n^2 {:e} m^-2/3, attenuation {} 1/km, D_R {} m, D_T {} m, theta_T {} mrad",
            self.wavelength_m * 1e9,
            self.cn2,
            self.attenuation_per_km,
            self.rx_aperture_m,
            self.tx_aperture_m,
            self.divergence_mrad
        )?;
        for (kind, links) in [("S-R", cfg.sr()), ("R-D", cfg.rd())] {
            for (i, l) in links.iter().enumerate() {
                writeln!(
                    out,
                    "{kind}{}: d = {} km, path loss = {:.6e}, Rytov = {:.6}, alpha = {:.6}, beta = {:.6}",
                    i + 1,
                    l.geometry.distance_km,
                    l.path_loss,
                    l.turbulence.rytov,
                    l.turbulence.alpha,
                    l.turbulence.beta
                )?;
            }
        }
        if let Some((c, gamma_th)) = &self.optical {
            let lo = power_for_margin(c, db_to_linear(self.pm_start_db), *gamma_th)?;
            let hi = power_for_margin(c, db_to_linear(self.pm_stop_db), *gamma_th)?;
            writeln!(out, "transmit power over the sweep: {lo:.6e} W to {hi:.6e} W")?;
        }
        Ok(out)
    }
}
