use std::collections::HashMap;

use num_complex::Complex64;

use super::{check_enumerable, hop_outage, AnalysisOptions, DecodingSet, Mode, OutageResult, SystemConfig};
use crate::channel::{link_outage_asymptotic, LinkParams};
use crate::error::{Error, Result};
use crate::numerics::{euler_combine, euler_nodes, ln_gamma_pos, EulerInversionParams, Posynomial};

/// Pr{D = set}: relays in `set` decode the source hop, the others do not.
pub fn decoding_set_prob(cfg: &SystemConfig, set: DecodingSet, pm: f64) -> Result<f64> {
    let mut notes = Vec::new();
    decoding_set_prob_with(cfg, set, pm, &AnalysisOptions::default(), &mut notes)
}

fn decoding_set_prob_with(
    cfg: &SystemConfig,
    set: DecodingSet,
    pm: f64,
    opts: &AnalysisOptions,
    notes: &mut Vec<String>,
) -> Result<f64> {
    set.check_within(cfg.n_relays())?;
    let sr_out = cfg.sr().iter().map(|l| hop_outage(l, pm, opts, notes)).collect::<Result<Vec<_>>>()?;
    Ok(set_prob(&sr_out, set))
}

fn set_prob(sr_out: &[f64], set: DecodingSet) -> f64 {
    sr_out.iter().enumerate().map(|(m, &out)| if set.contains(m) { 1.0 - out } else { out }).product()
}

/// Inversion parameters for a sum whose CDF grows like `x^{total_q}`.
///
/// The Euler discretization error is about `e^{-A} F(3x)`, i.e. a relative
/// error near `e^{-A} 3^{Σq}`; shifting `A` by `Σq ln 3` keeps it at the
/// base level without raising the roundoff amplification.
fn shape_adjusted(params: &EulerInversionParams, total_q: f64) -> EulerInversionParams {
    EulerInversionParams { a: params.a + total_q * 3f64.ln(), ..*params }
}

fn check_nonempty(set: DecodingSet) -> Result<()> {
    if set.is_empty() {
        return Err(Error::InvalidParameter("sum CDF needs a non-empty decoding set".into()));
    }
    Ok(())
}

fn total_q(links: &[LinkParams], set: DecodingSet) -> f64 {
    set.members().map(|m| links[m].turbulence.q()).sum()
}

/// MGF values `M_m(-s_l)` of relay `m`'s weighted R→D fade at the nodes of
/// `params`, memoized per relay and `A`.
struct MgfTable<'a> {
    links: &'a [LinkParams],
    x: f64,
    cache: HashMap<(usize, u64), Vec<Complex64>>,
}

impl<'a> MgfTable<'a> {
    fn new(links: &'a [LinkParams], x: f64) -> Self {
        Self { links, x, cache: HashMap::new() }
    }

    fn values(&mut self, m: usize, params: &EulerInversionParams) -> Result<&[Complex64]> {
        let key = (m, params.a.to_bits());
        if !self.cache.contains_key(&key) {
            let link = &self.links[m];
            let dist = link.distribution();
            let weight = link.path_loss * link.rho;
            let values = euler_nodes(self.x, params)?
                .into_iter()
                .map(|s| dist.mgf(weight, -s))
                .collect::<Result<Vec<_>>>()?;
            self.cache.insert(key, values);
        }
        Ok(&self.cache[&key])
    }

    fn sum_cdf(&mut self, set: DecodingSet, params: &EulerInversionParams) -> Result<f64> {
        let params = shape_adjusted(params, total_q(self.links, set));
        let mut product: Option<Vec<Complex64>> = None;
        for m in set.members() {
            let v = self.values(m, &params)?;
            product = Some(match product {
                None => v.to_vec(),
                Some(mut p) => {
                    p.iter_mut().zip(v).for_each(|(a, b)| *a *= b);
                    p
                }
            });
        }
        euler_combine(self.x, &params, &product.expect("non-empty set"))
    }
}

/// Pr{Σ_{m∈set} h̄_m ρ_m h̃_m ≤ x} over the R→D hops, by Euler inversion of
/// the product of the members' MGFs. `params.a` is raised by `Σq ln 3` for
/// the set so the relative accuracy does not degrade with its total shape.
pub fn sum_cdf_exact(cfg: &SystemConfig, set: DecodingSet, x: f64, params: &EulerInversionParams) -> Result<f64> {
    check_nonempty(set)?;
    set.check_within(cfg.n_relays())?;
    params.validate()?;
    if !(x > 0.0) || x.is_nan() {
        return Err(Error::Domain(format!("sum CDF argument must be positive, got {x}")));
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    MgfTable::new(cfg.rd(), x).sum_cdf(set, params)
}

/// Small-`x` form of the weighted-sum CDF:
/// ∏_m [(α_mβ_m/(h̄_mρ_m))^{q_m} Γ(q_m)Γ(p_m-q_m)/(Γ(α_m)Γ(β_m))] · x^{Σq}/(Σq Γ(Σq)).
pub fn sum_cdf_asymptotic(cfg: &SystemConfig, set: DecodingSet, x: f64) -> Result<f64> {
    check_nonempty(set)?;
    set.check_within(cfg.n_relays())?;
    if !(x > 0.0) || x.is_nan() {
        return Err(Error::Domain(format!("sum CDF argument must be positive, got {x}")));
    }
    Ok(ln_sum_cdf_asymptotic(cfg.rd(), set, x).exp())
}

fn ln_sum_cdf_asymptotic(links: &[LinkParams], set: DecodingSet, x: f64) -> f64 {
    let mut ln = 0.0;
    let mut q_sum = 0.0;
    for m in set.members() {
        let link = &links[m];
        let (a, b) = (link.turbulence.alpha, link.turbulence.beta);
        let (q, p) = (link.turbulence.q(), link.turbulence.p());
        ln += q * (a * b / (link.path_loss * link.rho)).ln() + ln_gamma_pos(q) + ln_gamma_pos(p - q)
            - ln_gamma_pos(a)
            - ln_gamma_pos(b);
        q_sum += q;
    }
    ln + q_sum * x.ln() - q_sum.ln() - ln_gamma_pos(q_sum)
}

/// All-active outage: Σ over decoding sets of Pr{D = S}·Pr{Σ_{m∈S} γ_m < 1/P_M},
/// the empty set contributing its probability alone. The asymptotic form
/// replaces Pr{D = S} by ∏_{m∉S} P_out,SR_m and both factors by their
/// leading power laws.
pub fn all_active_outage(cfg: &SystemConfig, pm: f64, mode: Mode, opts: &AnalysisOptions) -> Result<OutageResult> {
    check_enumerable(cfg.n_relays())?;
    cfg.check_all_active_power()?;
    opts.series.validate()?;
    opts.inversion.validate()?;
    if !(pm > 0.0) || pm.is_nan() {
        return Err(Error::Domain(format!("power margin must be positive, got {pm}")));
    }
    let x = 1.0 / pm;
    let mut notes = Vec::new();
    let total = match mode {
        Mode::Exact => {
            let sr_out =
                cfg.sr().iter().map(|l| hop_outage(l, pm, opts, &mut notes)).collect::<Result<Vec<_>>>()?;
            let mut table = MgfTable::new(cfg.rd(), x);
            let mut total = 0.0;
            for set in DecodingSet::all(cfg.n_relays())? {
                let p_set = set_prob(&sr_out, set);
                if p_set == 0.0 {
                    continue;
                }
                let f = if set.is_empty() { 1.0 } else { table.sum_cdf(set, &opts.inversion)? };
                total += p_set * f;
            }
            total
        }
        Mode::Asymptotic => {
            let rho: Vec<f64> = cfg.sr().iter().chain(cfg.rd()).map(|l| l.rho).collect();
            all_active_asymptotic_posynomial(cfg, pm)?.value(&rho)?
        }
    };
    Ok(OutageResult::new(total, mode, notes))
}

/// High-margin all-active outage as a posynomial in the power fractions
/// `[ρ_SR_1..ρ_SR_N, ρ_RD_1..ρ_RD_N]`: one monomial per decoding set S,
/// ∏_{m∉S} P_out,SR_m · Pr{Σ_{m∈S} γ_m < 1/P_M}, each factor in its leading
/// power-law form.
pub fn all_active_asymptotic_posynomial(cfg: &SystemConfig, pm: f64) -> Result<Posynomial> {
    let n = cfg.n_relays();
    check_enumerable(n)?;
    if !(pm > 0.0) || pm.is_nan() {
        return Err(Error::Domain(format!("power margin must be positive, got {pm}")));
    }
    let unit = |l: &LinkParams| l.with_rho(1.0);
    let sr = cfg.sr().iter().map(unit).collect::<Result<Vec<_>>>()?;
    let rd = cfg.rd().iter().map(unit).collect::<Result<Vec<_>>>()?;
    let ln_sr = sr.iter().map(|l| link_outage_asymptotic(l, pm).map(f64::ln)).collect::<Result<Vec<_>>>()?;
    let mut posy = Posynomial::new(2 * n);
    for set in DecodingSet::all(n)? {
        let mut ln_c = 0.0;
        let mut exps = vec![0.0; 2 * n];
        for m in 0..n {
            if set.contains(m) {
                exps[n + m] = -rd[m].turbulence.q();
            } else {
                ln_c += ln_sr[m];
                exps[m] = -sr[m].turbulence.q();
            }
        }
        if !set.is_empty() {
            ln_c += ln_sum_cdf_asymptotic(&rd, set, 1.0 / pm);
        }
        posy.push(ln_c, exps)?;
    }
    Ok(posy)
}
