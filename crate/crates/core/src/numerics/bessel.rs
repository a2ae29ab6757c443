//! Modified Bessel function of the second kind for real order.
//!
//! Temme's series for `x <= 2` and Steed's continued fraction (CF2) for
//! `x > 2` give `K_μ` and `K_{μ+1}` with `|μ| <= 1/2`; forward recurrence in
//! the order then reaches `K_ν`. The recurrence is carried with a separate
//! log-scale so that `ln K_ν(x)` is available where `K_ν(x)` itself would
//! overflow or underflow.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Arguments below this floor are rejected as overflowing.
pub const BESSEL_K_X_FLOOR: f64 = 1e-300;

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 10_000;
const TEMME_SWITCH: f64 = 2.0;
const RESCALE: f64 = 1e250;

// Chebyshev expansions of
//   gam1(μ) = (1/Γ(1-μ) - 1/Γ(1+μ)) / (2μ)
//   gam2(μ) = (1/Γ(1-μ) + 1/Γ(1+μ)) / 2
// on |μ| <= 1/2, argument 8μ² - 1.
const GAM1_CHEB: [f64; 7] = [
    -1.142_022_680_371_168,
    6.516_511_267_073_7e-3,
    3.087_090_173_086e-4,
    -3.470_626_964_9e-6,
    6.943_766_4e-9,
    3.677_95e-11,
    -1.356e-13,
];
const GAM2_CHEB: [f64; 8] = [
    1.843_740_587_300_905,
    -7.685_284_084_478_67e-2,
    1.271_927_136_654_6e-3,
    -4.971_736_704_2e-6,
    -3.312_611_98e-8,
    2.423_096e-10,
    -1.702e-13,
    -1.49e-15,
];

fn chebyshev(coeffs: &[f64], y: f64) -> f64 {
    let y2 = 2.0 * y;
    let (mut d, mut dd) = (0.0, 0.0);
    for &c in coeffs.iter().skip(1).rev() {
        let sv = d;
        d = y2 * d - dd + c;
        dd = sv;
    }
    y * d - dd + 0.5 * coeffs[0]
}

/// K_ν(x) for real `ν` and `x > 0`. `K_{-ν} = K_ν`.
pub fn bessel_k(nu: f64, x: f64) -> Result<f64> {
    let ln_k = ln_bessel_k(nu, x)?;
    if ln_k >= f64::MAX.ln() {
        return Err(Error::Overflow { nu, x });
    }
    Ok(ln_k.exp())
}

/// ln K_ν(x); finite over the whole range where `K_ν(x)` is representable
/// in log form.
pub fn ln_bessel_k(nu: f64, x: f64) -> Result<f64> {
    if !nu.is_finite() {
        return Err(Error::Domain(format!("Bessel order must be finite, got {nu}")));
    }
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("K_nu(x) requires finite x > 0, got {x}")));
    }
    if x < BESSEL_K_X_FLOOR {
        return Err(Error::Overflow { nu, x });
    }
    let nu = nu.abs();
    let nl = (nu + 0.5).floor();
    let mu = nu - nl;
    let steps = nl as usize;

    let (mut k_mu, mut k_mu1, mut log_scale) = if x <= TEMME_SWITCH {
        let (a, b) = temme(mu, x)?;
        (a, b, 0.0)
    } else {
        let (a, b) = steed_cf2(mu, x)?;
        (a, b, -x)
    };

    let two_over_x = 2.0 / x;
    for i in 1..=steps {
        let next = (mu + i as f64) * two_over_x * k_mu1 + k_mu;
        k_mu = k_mu1;
        k_mu1 = next;
        if k_mu1 > RESCALE {
            k_mu /= RESCALE;
            k_mu1 /= RESCALE;
            log_scale += RESCALE.ln();
        }
    }
    Ok(k_mu.ln() + log_scale)
}

/// Temme's series: (K_μ(x), K_{μ+1}(x)) for |μ| <= 1/2, small x.
fn temme(mu: f64, x: f64) -> Result<(f64, f64)> {
    let mu2 = mu * mu;
    let x2 = 0.5 * x;
    let pimu = PI * mu;
    let fact = if pimu.abs() < EPS { 1.0 } else { pimu / pimu.sin() };
    let d = -x2.ln();
    let e = mu * d;
    let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };

    let cheb_arg = 8.0 * mu2 - 1.0;
    let gam1 = chebyshev(&GAM1_CHEB, cheb_arg);
    let gam2 = chebyshev(&GAM2_CHEB, cheb_arg);
    let gampl = gam2 - mu * gam1; // 1/Γ(1+μ)
    let gammi = gam2 + mu * gam1; // 1/Γ(1-μ)

    let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
    let mut sum = ff;
    let ee = e.exp();
    let mut p = 0.5 * ee / gampl;
    let mut q = 0.5 / (ee * gammi);
    let mut c = 1.0;
    let dd = x2 * x2;
    let mut sum1 = p;
    for i in 1..=MAX_ITER {
        let fi = i as f64;
        ff = (fi * ff + p + q) / (fi * fi - mu2);
        c *= dd / fi;
        p /= fi - mu;
        q /= fi + mu;
        let del = c * ff;
        sum += del;
        sum1 += c * (p - fi * ff);
        if del.abs() < sum.abs() * EPS {
            return Ok((sum, sum1 * 2.0 / x));
        }
    }
    Err(Error::NoConvergence { estimate: sum, error: f64::NAN })
}

/// Steed's CF2 in Temme's normalization: returns (K_μ(x) e^x, K_{μ+1}(x) e^x).
fn steed_cf2(mu: f64, x: f64) -> Result<(f64, f64)> {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25 - mu * mu;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    let mut converged = false;
    for i in 2..=MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { estimate: s, error: f64::NAN });
    }
    h *= a1;
    let k_mu = (PI / (2.0 * x)).sqrt() / s;
    let k_mu1 = k_mu * (mu + x + 0.5 - h) / x;
    Ok((k_mu, k_mu1))
}
