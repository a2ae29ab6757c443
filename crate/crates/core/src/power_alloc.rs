//! Allocation of the optical power fractions ρ among the hops.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::channel::{link_outage_asymptotic, LinkParams};
use crate::error::{Error, Result};
use crate::numerics::bisect_root;
use crate::protocols::{all_active_asymptotic_posynomial, Protocol, SystemConfig};

/// Tolerance on the fraction sums of a returned allocation.
pub const ALLOCATION_SUM_TOLERANCE: f64 = 1e-12;
/// Stationarity target of the all-active solver.
pub const KKT_TOLERANCE: f64 = 1e-8;
/// Iteration cap of the all-active solver.
pub const MAX_GP_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Optimal,
    DistanceRule,
    Equal,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Optimal, Scheme::DistanceRule, Scheme::Equal];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Optimal => "optimal",
            Scheme::DistanceRule => "distance_rule",
            Scheme::Equal => "equal",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "optimal" | "optimum" => Ok(Scheme::Optimal),
            "distance_rule" | "distance" => Ok(Scheme::DistanceRule),
            "equal" => Ok(Scheme::Equal),
            other => Err(Error::InvalidParameter(format!("unknown allocation scheme '{other}'"))),
        }
    }
}

/// Power fractions of the S→R and R→D hops.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub rho_sr: Vec<f64>,
    pub rho_rd: Vec<f64>,
    pub scheme: Scheme,
}

impl PowerAllocation {
    /// Checks the entries and the sum constraint of `protocol`.
    pub fn validate(&self, protocol: Protocol) -> Result<()> {
        if self.rho_sr.len() != self.rho_rd.len() || self.rho_sr.is_empty() {
            return Err(Error::InvalidParameter("allocation needs equal, non-empty hop lists".into()));
        }
        if let Some(r) = self.rho_sr.iter().chain(&self.rho_rd).find(|&&r| !(r > 0.0 && r <= 1.0)) {
            return Err(Error::PowerConstraint(format!("fraction {r} outside (0, 1]")));
        }
        match protocol {
            Protocol::AllActive => {
                let total: f64 = self.rho_sr.iter().chain(&self.rho_rd).sum();
                if (total - 1.0).abs() > ALLOCATION_SUM_TOLERANCE {
                    return Err(Error::PowerConstraint(format!("fractions sum to {total}, expected 1")));
                }
            }
            Protocol::SelectMax | Protocol::Dssc => {
                for (b, (s, r)) in self.rho_sr.iter().zip(&self.rho_rd).enumerate() {
                    if (s + r - 1.0).abs() > ALLOCATION_SUM_TOLERANCE {
                        return Err(Error::PowerConstraint(format!("path {b} fractions sum to {}", s + r)));
                    }
                }
            }
        }
        Ok(())
    }

    /// `cfg` with these fractions.
    pub fn apply(&self, cfg: &SystemConfig) -> Result<SystemConfig> {
        cfg.with_allocation(&self.rho_sr, &self.rho_rd)
    }
}

/// Diagnostics of the all-active solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpSolveReport {
    pub iterations: usize,
    /// max_k |ρ_k(∂_k P - ν)| / P with ν the multiplier estimate Σ_k ρ_k ∂_k P.
    pub kkt_residual: f64,
    /// Asymptotic outage at the returned allocation.
    pub objective: f64,
}

/// ρ = 1/(2N) on every hop for all-active, 1/2 per path otherwise.
pub fn equal_allocation(cfg: &SystemConfig, protocol: Protocol) -> PowerAllocation {
    let n = cfg.n_relays();
    let r = match protocol {
        Protocol::AllActive => 1.0 / (2 * n) as f64,
        Protocol::SelectMax | Protocol::Dssc => 0.5,
    };
    PowerAllocation { rho_sr: vec![r; n], rho_rd: vec![r; n], scheme: Scheme::Equal }
}

/// Fractions proportional to hop length: over all 2N hops for all-active,
/// within each path otherwise.
pub fn distance_rule(cfg: &SystemConfig, protocol: Protocol) -> PowerAllocation {
    let d_sr: Vec<f64> = cfg.sr().iter().map(|l| l.geometry.distance_km).collect();
    let d_rd: Vec<f64> = cfg.rd().iter().map(|l| l.geometry.distance_km).collect();
    let (rho_sr, rho_rd) = match protocol {
        Protocol::AllActive => {
            let total: f64 = d_sr.iter().chain(&d_rd).sum();
            (d_sr.iter().map(|d| d / total).collect(), d_rd.iter().map(|d| d / total).collect())
        }
        Protocol::SelectMax | Protocol::Dssc => d_sr.iter().zip(&d_rd).map(|(s, r)| (s / (s + r), r / (s + r))).unzip(),
    };
    PowerAllocation { rho_sr, rho_rd, scheme: Scheme::DistanceRule }
}

/// Leading-order outage of path `b` with fractions (ρ_SR, ρ_RD):
/// δ_SR ρ_SR^{-q_SR}/q_SR + δ_RD ρ_RD^{-q_RD}/q_RD.
pub fn select_max_path_objective(cfg: &SystemConfig, b: usize, pm: f64, rho_sr: f64, rho_rd: f64) -> Result<f64> {
    let (sr, rd) = path_links(cfg, b)?;
    Ok(link_outage_asymptotic(&sr.with_rho(rho_sr)?, pm)? + link_outage_asymptotic(&rd.with_rho(rho_rd)?, pm)?)
}

fn path_links(cfg: &SystemConfig, b: usize) -> Result<(LinkParams, LinkParams)> {
    if b >= cfg.n_relays() {
        return Err(Error::InvalidParameter(format!("path index {b} out of range")));
    }
    Ok((cfg.sr()[b], cfg.rd()[b]))
}

/// Split of one path's power minimizing its leading-order outage under
/// ρ_SR + ρ_RD = 1: ρ = (δ t₀)^{1/(q+1)} with t₀ the root of
/// S(t) = (δ_SR t)^{1/(q_SR+1)} + (δ_RD t)^{1/(q_RD+1)} - 1 on
/// [0, min(1/δ_SR, 1/δ_RD)], where δ = Γ(p-q)/(Γ(α)Γ(β)) (αβ/(h̄P_M))^q.
/// Returns (ρ_SR, ρ_RD).
pub fn optimize_select_max(cfg: &SystemConfig, b: usize, pm: f64) -> Result<(f64, f64)> {
    let (sr, rd) = path_links(cfg, b)?;
    // q·(leading term at ρ = 1) = δ
    let ln_delta = |l: LinkParams| -> Result<(f64, f64)> {
        let q = l.turbulence.q();
        Ok((q.ln() + link_outage_asymptotic(&l.with_rho(1.0)?, pm)?.ln(), q))
    };
    let (ld_sr, q_sr) = ln_delta(sr)?;
    let (ld_rd, q_rd) = ln_delta(rd)?;
    if !(ld_sr.is_finite() && ld_rd.is_finite()) {
        return Err(Error::Domain(format!("path {b} coefficients not finite at P_M = {pm}")));
    }
    let ln_t_max = -ld_sr.max(ld_rd);
    // t = t_max·u keeps the bracket [0, 1] whatever the magnitude of δ
    let rho = |u: f64| {
        let ln_t = ln_t_max + u.ln();
        (((ld_sr + ln_t) / (q_sr + 1.0)).exp(), ((ld_rd + ln_t) / (q_rd + 1.0)).exp())
    };
    let s = |u: f64| {
        let (a, c) = rho(u);
        a + c - 1.0
    };
    if !(s(0.0) < 0.0 && s(1.0) >= 0.0) {
        return Err(Error::Internal(format!("S(t) has no sign change on its bracket for path {b}")));
    }
    let u0 = bisect_root(s, 0.0, 1.0, 1e-15)?;
    let (a, c) = rho(u0);
    // remove the last-ulp bisection residual so that the sum is exactly 1
    let total = a + c;
    Ok((a / total, c / total))
}

/// Per-path optimal split for every path.
pub fn optimal_per_path(cfg: &SystemConfig, pm: f64) -> Result<PowerAllocation> {
    let (rho_sr, rho_rd) = (0..cfg.n_relays()).map(|b| optimize_select_max(cfg, b, pm)).collect::<Result<Vec<_>>>()?.into_iter().unzip();
    Ok(PowerAllocation { rho_sr, rho_rd, scheme: Scheme::Optimal })
}

/// All-active allocation minimizing the leading-order outage posynomial
/// subject to Σ(ρ_SR + ρ_RD) = 1.
///
/// Newton steps on the equality-constrained problem in ρ (the objective is
/// convex there), falling back to a scaled projected-gradient step whenever
/// the Newton system is singular or not a descent direction; backtracking
/// keeps every iterate strictly inside the simplex.
pub fn optimize_all_active(cfg: &SystemConfig, pm: f64) -> Result<(PowerAllocation, GpSolveReport)> {
    let n = cfg.n_relays();
    let posy = all_active_asymptotic_posynomial(cfg, pm)?;
    let dim = 2 * n;
    let mut x = vec![1.0 / dim as f64; dim];
    let shift = posy.ln_value(&x)?;
    let ones = DVector::from_element(dim, 1.0);
    let mut iterations = 0;
    let mut residual;
    loop {
        let (f, g, h) = posy.scaled_derivatives(&x, shift)?;
        let nu: f64 = x.iter().zip(g.iter()).map(|(a, b)| a * b).sum();
        residual = x.iter().zip(g.iter()).map(|(a, b)| (a * (b - nu)).abs()).fold(0.0, f64::max) / f;
        if residual <= KKT_TOLERANCE || iterations >= MAX_GP_ITERATIONS {
            break;
        }
        iterations += 1;
        let gradient_step = DVector::from_iterator(dim, x.iter().zip(g.iter()).map(|(a, b)| -a * (b - nu)));
        // directions keep Σx fixed, so slopes are taken against the centered
        // gradient; the common component ν only adds cancellation
        let centered = g.add_scalar(-nu);
        let dir = newton_direction(&h, &g, &ones).filter(|d| d.dot(&centered) < 0.0).unwrap_or(gradient_step);
        let slope = dir.dot(&centered);
        if !(slope < 0.0) {
            break;
        }
        let mut step = dir.iter().zip(&x).filter(|(d, _)| **d < 0.0).map(|(d, xi)| -0.99 * xi / d).fold(1.0, f64::min);
        // trial values go through the same log-sum-exp path as this one
        let f_ref = (posy.ln_value(&x)? - shift).exp();
        let mut moved = false;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(dir.iter()).map(|(a, d)| a + step * d).collect();
            let ft = (posy.ln_value(&trial)? - shift).exp();
            // near the optimum the decrease drops below the rounding of f
            if ft <= f_ref + 1e-4 * step * slope || (step == 1.0 && ft <= f_ref * (1.0 + 1e-12)) {
                x = renormalize(trial);
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    if residual > KKT_TOLERANCE {
        return Err(Error::SolverStalled { iterations, kkt_residual: residual, best: x });
    }
    let objective = posy.value(&x)?;
    let alloc = PowerAllocation { rho_sr: x[..n].to_vec(), rho_rd: x[n..].to_vec(), scheme: Scheme::Optimal };
    Ok((alloc, GpSolveReport { iterations, kkt_residual: residual, objective }))
}

fn newton_direction(h: &DMatrix<f64>, g: &DVector<f64>, ones: &DVector<f64>) -> Option<DVector<f64>> {
    let dim = g.len();
    let mut kkt = DMatrix::zeros(dim + 1, dim + 1);
    kkt.view_mut((0, 0), (dim, dim)).copy_from(h);
    kkt.view_mut((0, dim), (dim, 1)).copy_from(ones);
    kkt.view_mut((dim, 0), (1, dim)).copy_from(&ones.transpose());
    let mut rhs = DVector::zeros(dim + 1);
    rhs.rows_mut(0, dim).copy_from(&(-g));
    let sol = kkt.lu().solve(&rhs)?;
    let d = sol.rows(0, dim).into_owned();
    d.iter().all(|v| v.is_finite()).then_some(d)
}

/// Rescale onto Σx = 1 to stop rounding drift across iterations.
fn renormalize(mut x: Vec<f64>) -> Vec<f64> {
    let total: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= total);
    x
}

/// Allocation of `scheme` for `protocol` at power margin `pm`.
pub fn allocate(cfg: &SystemConfig, protocol: Protocol, scheme: Scheme, pm: f64) -> Result<PowerAllocation> {
    match (scheme, protocol) {
        (Scheme::Equal, _) => Ok(equal_allocation(cfg, protocol)),
        (Scheme::DistanceRule, _) => Ok(distance_rule(cfg, protocol)),
        (Scheme::Optimal, Protocol::AllActive) => optimize_all_active(cfg, pm).map(|(a, _)| a),
        (Scheme::Optimal, Protocol::SelectMax | Protocol::Dssc) => optimal_per_path(cfg, pm),
    }
}
