//! CDF recovery from a moment generating function by Euler-summed Fourier
//! series inversion of the Laplace transform.
//!
//! With `M(s) = E[exp(sX)]`, the Laplace transform of the CDF is
//! `F̂(s) = M(-s)/s`. The Bromwich integral is discretized with damping `A`,
//! the alternating series truncated after `L` terms and the tail accelerated
//! by a `K`-fold binomial average of partial sums.

use num_complex::Complex64;

use super::EulerInversionParams;
use crate::error::{Error, Result};

/// Complex Laplace variables `s_l = (A + j2πl)/(2x)` for `l = 0..=L+K`.
pub fn euler_nodes(x: f64, params: &EulerInversionParams) -> Result<Vec<Complex64>> {
    params.validate()?;
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("inversion point must be finite and positive, got {x}")));
    }
    let count = params.l + params.k + 1;
    Ok((0..count)
        .map(|l| Complex64::new(params.a, 2.0 * std::f64::consts::PI * l as f64) / (2.0 * x))
        .collect())
}

/// Combine MGF values `mgf[l] = M(-s_l)` taken at [`euler_nodes`] into the
/// CDF at `x`, clamped to `[0, 1]`.
pub fn euler_combine(x: f64, params: &EulerInversionParams, mgf: &[Complex64]) -> Result<f64> {
    let nodes = euler_nodes(x, params)?;
    if mgf.len() != nodes.len() {
        return Err(Error::InvalidParameter(format!(
            "expected {} MGF values, got {}",
            nodes.len(),
            mgf.len()
        )));
    }
    let mut partial = Vec::with_capacity(nodes.len());
    let mut sum = 0.0;
    for (l, (s, m)) in nodes.iter().zip(mgf).enumerate() {
        let term = (m / s).re;
        let a_l = match l {
            0 => 0.5 * term,
            _ if l % 2 == 1 => -term,
            _ => term,
        };
        sum += a_l;
        partial.push(sum);
    }
    let (k, l) = (params.k, params.l);
    // binomial weights C(K, j) / 2^K, built incrementally
    let mut weight = 0.5f64.powi(k as i32);
    let mut averaged = 0.0;
    for j in 0..=k {
        averaged += weight * partial[l + j];
        weight *= (k - j) as f64 / (j + 1) as f64;
    }
    let value = (0.5 * params.a).exp() / x * averaged;
    if !value.is_finite() {
        return Err(Error::NoConvergence { estimate: value, error: f64::NAN });
    }
    Ok(value.clamp(0.0, 1.0))
}

/// CDF of a non-negative random variable at `x` from its MGF (or a product
/// of MGFs of independent summands).
pub fn euler_cdf_inversion<M>(mut mgf_product: M, x: f64, params: &EulerInversionParams) -> Result<f64>
where
    M: FnMut(Complex64) -> Result<Complex64>,
{
    let nodes = euler_nodes(x, params)?;
    let values = nodes.iter().map(|&s| mgf_product(-s)).collect::<Result<Vec<_>>>()?;
    euler_combine(x, params, &values)
}
