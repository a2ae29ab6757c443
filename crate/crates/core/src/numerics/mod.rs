//! Special functions and numerical methods shared by the analytical layers.

mod bessel;
mod gamma;
mod laplace;
pub(crate) mod mp;
mod posynomial;
mod quad;
mod roots;

pub use bessel::{bessel_k, ln_bessel_k, BESSEL_K_X_FLOOR};
pub use gamma::{gamma, ln_gamma, recip_gamma};
pub use laplace::{euler_cdf_inversion, euler_combine, euler_nodes};
pub use posynomial::Posynomial;
pub use quad::{integrate_adaptive, integrate_segments, Integral, QuadValue, Tolerance};
pub use roots::bisect_root;

pub(crate) use gamma::ln_gamma_pos;

use crate::error::{Error, Result};

/// Truncation control for convergent power series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    /// Stop once the last term is below `tol` times the partial sum.
    pub tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self { tol: 1e-12, max_terms: 500 }
    }
}

impl SeriesControl {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_terms == 0 {
            return Err(Error::InvalidParameter(format!(
                "series control needs tol > 0 and max_terms >= 1, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Parameters of the Euler-summed Laplace inversion.
///
/// The discretization error is about `exp(-A)`, but rounding in the MGF values
/// is amplified by `exp(A/2)`, so `A` trades one against the other. The
/// default `A = 8 ln 10` keeps both near 1e-8 for MGFs computed to ~1e-12.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerInversionParams {
    pub a: f64,
    pub k: usize,
    pub l: usize,
}

impl Default for EulerInversionParams {
    fn default() -> Self {
        Self { a: 8.0 * std::f64::consts::LN_10, k: 20, l: 20 }
    }
}

impl EulerInversionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0) || !self.a.is_finite() || self.k == 0 || self.l == 0 {
            return Err(Error::InvalidParameter(format!(
                "inversion needs A > 0, K >= 1, L >= 1, got {self:?}"
            )));
        }
        // 2^-K underflows for very deep averaging
        if self.k > 1000 {
            return Err(Error::InvalidParameter(format!("K = {} is unreasonably large", self.k)));
        }
        Ok(())
    }
}
