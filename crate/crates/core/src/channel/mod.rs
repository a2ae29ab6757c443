//! FSO link physics: path loss, turbulence strength, power margin and
//! single-link outage.

mod gamma_gamma;

pub use gamma_gamma::{CdfMethod, CdfValue, GammaGamma, PdfValue, SeriesEval};

use crate::error::{Error, Result};
use crate::numerics::SeriesControl;

/// A shape difference within this distance of an integer is perturbed.
pub const INTEGER_GAP_TOLERANCE: f64 = 1e-9;
/// Amount added to α when the shape difference is (nearly) integral.
pub const INTEGER_GAP_PERTURBATION: f64 = 1e-6;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn require_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite and positive, got {v}")))
    }
}

/// Receiver and transmitter constants entering the SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalConstants {
    pub wavelength_m: f64,
    /// Detector responsivity η (A/W).
    pub responsivity: f64,
    /// Slot duration T_b (s).
    pub slot_s: f64,
    /// Total transmit power P_t (W).
    pub power_w: f64,
    /// Noise parameter N₀.
    pub noise: f64,
    /// Background power P_b (W); a constant bias removed before detection.
    pub background_w: f64,
}

impl OpticalConstants {
    pub fn validate(&self) -> Result<()> {
        require_positive("wavelength", self.wavelength_m)?;
        require_positive("responsivity", self.responsivity)?;
        require_positive("slot duration", self.slot_s)?;
        require_positive("transmit power", self.power_w)?;
        require_positive("noise parameter", self.noise)?;
        require_positive("background power", self.background_w)
    }
}

/// P_M = η T_b P_t / √(N₀ γ_th).
pub fn power_margin(c: &OpticalConstants, gamma_th: f64) -> Result<f64> {
    c.validate()?;
    require_positive("SNR threshold", gamma_th)?;
    Ok(c.responsivity * c.slot_s * c.power_w / (c.noise * gamma_th).sqrt())
}

/// Transmit power that yields power margin `pm`; inverse of [`power_margin`].
pub fn power_for_margin(c: &OpticalConstants, pm: f64, gamma_th: f64) -> Result<f64> {
    c.validate()?;
    require_positive("SNR threshold", gamma_th)?;
    require_positive("power margin", pm)?;
    Ok(pm * (c.noise * gamma_th).sqrt() / (c.responsivity * c.slot_s))
}

/// Geometry and weather of one hop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    pub distance_km: f64,
    pub rx_aperture_m: f64,
    pub tx_aperture_m: f64,
    pub divergence_mrad: f64,
    /// Weather attenuation v (1/km).
    pub attenuation_per_km: f64,
}

impl LinkGeometry {
    pub fn validate(&self) -> Result<()> {
        require_positive("link distance", self.distance_km)?;
        require_positive("receive aperture", self.rx_aperture_m)?;
        require_positive("transmit aperture", self.tx_aperture_m)?;
        require_positive("beam divergence", self.divergence_mrad)?;
        if !(self.attenuation_per_km >= 0.0 && self.attenuation_per_km.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "attenuation must be finite and non-negative, got {}",
                self.attenuation_per_km
            )));
        }
        Ok(())
    }
}

/// Deterministic gain D_R²/(D_T + θ_T d)² · e^{-v d}; θ_T in mrad times d in
/// km gives the beam spread in meters.
pub fn path_loss(g: &LinkGeometry) -> f64 {
    let spread = g.tx_aperture_m + g.divergence_mrad * g.distance_km;
    (g.rx_aperture_m / spread).powi(2) * (-g.attenuation_per_km * g.distance_km).exp()
}

/// Rytov variance 1.23 C_n² k^{7/6} L^{11/6}, with L converted to meters.
pub fn rytov_variance(cn2: f64, wavelength_m: f64, distance_km: f64) -> f64 {
    let k = 2.0 * std::f64::consts::PI / wavelength_m;
    let length_m = distance_km * 1e3;
    1.23 * cn2 * k.powf(7.0 / 6.0) * length_m.powf(11.0 / 6.0)
}

/// Gamma-Gamma shapes of a hop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurbulenceParams {
    pub alpha: f64,
    pub beta: f64,
    pub rytov: f64,
}

impl TurbulenceParams {
    /// Validates the shapes and perturbs α when α - β is integral, so that
    /// the series and asymptotic forms stay defined.
    pub fn new(alpha: f64, beta: f64, rytov: f64) -> Result<Self> {
        require_positive("alpha", alpha)?;
        require_positive("beta", beta)?;
        if !(rytov >= 0.0 && rytov.is_finite()) {
            return Err(Error::InvalidParameter(format!("Rytov variance must be non-negative, got {rytov}")));
        }
        let gap = alpha - beta;
        let alpha = if (gap - gap.round()).abs() <= INTEGER_GAP_TOLERANCE {
            alpha + INTEGER_GAP_PERTURBATION
        } else {
            alpha
        };
        Ok(Self { alpha, beta, rytov })
    }

    /// Shapes from the Rytov variance for a plane wave:
    /// α = [exp(0.49σ²/(1 + 1.11σ^{12/5})^{7/6}) - 1]^{-1},
    /// β = [exp(0.51σ²/(1 + 0.69σ^{12/5})^{7/6}) - 1]^{-1}.
    pub fn from_rytov(rytov: f64) -> Result<Self> {
        require_positive("Rytov variance", rytov)?;
        let s125 = rytov.powf(1.2);
        let alpha = 1.0 / (0.49 * rytov / (1.0 + 1.11 * s125).powf(7.0 / 6.0)).exp_m1();
        let beta = 1.0 / (0.51 * rytov / (1.0 + 0.69 * s125).powf(7.0 / 6.0)).exp_m1();
        Self::new(alpha, beta, rytov)
    }

    pub fn q(&self) -> f64 {
        self.alpha.min(self.beta)
    }

    pub fn p(&self) -> f64 {
        self.alpha.max(self.beta)
    }

    pub fn distribution(&self) -> GammaGamma {
        GammaGamma::new(self.alpha, self.beta).expect("validated at construction")
    }
}

/// Turbulence shapes for a hop of `distance_km` with structure constant
/// `cn2` (m^{-2/3}) at `wavelength_m`.
pub fn turbulence_params(cn2: f64, wavelength_m: f64, distance_km: f64) -> Result<TurbulenceParams> {
    require_positive("C_n^2", cn2)?;
    require_positive("wavelength", wavelength_m)?;
    require_positive("link distance", distance_km)?;
    TurbulenceParams::from_rytov(rytov_variance(cn2, wavelength_m, distance_km))
}

/// One hop: geometry, turbulence, deterministic gain and power fraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    pub geometry: LinkGeometry,
    pub turbulence: TurbulenceParams,
    pub path_loss: f64,
    pub rho: f64,
}

impl LinkParams {
    pub fn new(geometry: LinkGeometry, turbulence: TurbulenceParams, path_loss: f64, rho: f64) -> Result<Self> {
        geometry.validate()?;
        if !(path_loss > 0.0 && path_loss <= 1.0) {
            return Err(Error::InvalidParameter(format!("path loss must lie in (0, 1], got {path_loss}")));
        }
        check_rho(rho)?;
        Ok(Self { geometry, turbulence, path_loss, rho })
    }

    /// Link with path loss and turbulence derived from its geometry.
    pub fn from_geometry(geometry: LinkGeometry, cn2: f64, wavelength_m: f64, rho: f64) -> Result<Self> {
        geometry.validate()?;
        let turbulence = turbulence_params(cn2, wavelength_m, geometry.distance_km)?;
        Self::new(geometry, turbulence, path_loss(&geometry), rho)
    }

    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        check_rho(rho)?;
        Ok(Self { rho, ..*self })
    }

    pub fn distribution(&self) -> GammaGamma {
        self.turbulence.distribution()
    }

    /// Fading level below which the hop is in outage at power margin `pm`.
    pub fn outage_threshold(&self, pm: f64) -> f64 {
        1.0 / (self.path_loss * self.rho * pm)
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("power fraction must lie in (0, 1], got {rho}")))
    }
}

fn check_margin(pm: f64) -> Result<()> {
    if pm > 0.0 && !pm.is_nan() {
        Ok(())
    } else {
        Err(Error::Domain(format!("power margin must be positive, got {pm}")))
    }
}

/// Pr{h̃ < 1/(h̄ ρ P_M)} with the CDF method reported.
pub fn link_outage_detailed(link: &LinkParams, pm: f64, ctl: &SeriesControl) -> Result<CdfValue> {
    check_margin(pm)?;
    link.distribution().cdf(link.outage_threshold(pm), ctl)
}

/// Outage probability of one hop at power margin `pm` (linear).
pub fn link_outage(link: &LinkParams, pm: f64) -> Result<f64> {
    link_outage_detailed(link, pm, &SeriesControl::default()).map(|c| c.value)
}

/// High-margin approximation Γ(p-q)/(Γ(α)Γ(β)) (αβ/(h̄ P_M ρ))^q / q.
pub fn link_outage_asymptotic(link: &LinkParams, pm: f64) -> Result<f64> {
    check_margin(pm)?;
    Ok(link.distribution().cdf_leading_term(link.outage_threshold(pm)))
}
