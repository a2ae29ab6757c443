//! Unit-mean Gamma-Gamma fading distribution.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::mp::{Mp, MAX_BITS};
use crate::numerics::{
    integrate_segments, ln_bessel_k, ln_gamma_pos, recip_gamma, SeriesControl, Tolerance,
    BESSEL_K_X_FLOOR,
};

/// Quadrature target for CDF values.
const CDF_QUAD_TOL: Tolerance = Tolerance { abs: 1e-15, rel: 1e-12, max_intervals: 4000 };
/// MGF values are needed to full relative accuracy however small they are.
const MGF_QUAD_TOL: Tolerance = Tolerance { abs: 0.0, rel: 1e-12, max_intervals: 4000 };
/// Bits of absolute precision kept on the CDF by the multiprecision series.
const EXTENDED_TARGET_BITS: f64 = 70.0;

/// Distribution of `h = X·Y` with independent `X ~ Gamma(α, 1/α)` and
/// `Y ~ Gamma(β, 1/β)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaGamma {
    alpha: f64,
    beta: f64,
    ln_norm: f64,
}

/// Density value, with a flag set when the true density is positive but
/// below the smallest normal double.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdfValue {
    pub value: f64,
    pub underflow: bool,
}

/// How a CDF value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CdfMethod {
    /// Double-precision power series.
    Series,
    /// Power series summed in multiprecision arithmetic because the
    /// double-precision sum would lose too many digits to cancellation.
    ExtendedSeries,
    /// Series unusable (term cap or precision cap reached); adaptive
    /// quadrature of the density.
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfValue {
    pub value: f64,
    pub method: CdfMethod,
}

/// Outcome of the double-precision series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesEval {
    pub value: f64,
    /// Bound on the accumulated rounding error.
    pub rounding_error: f64,
    pub terms: usize,
    pub converged: bool,
}

impl GammaGamma {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite() && beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Gamma-Gamma shapes must be finite and positive, got α = {alpha}, β = {beta}"
            )));
        }
        let ln_norm = std::f64::consts::LN_2 + 0.5 * (alpha + beta) * (alpha * beta).ln()
            - ln_gamma_pos(alpha)
            - ln_gamma_pos(beta);
        Ok(Self { alpha, beta, ln_norm })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Smaller shape; the CDF behaves as `x^q` near zero.
    pub fn q(&self) -> f64 {
        self.alpha.min(self.beta)
    }

    pub fn p(&self) -> f64 {
        self.alpha.max(self.beta)
    }

    /// E[h²] = (1 + 1/α)(1 + 1/β).
    pub fn second_moment(&self) -> f64 {
        (1.0 + 1.0 / self.alpha) * (1.0 + 1.0 / self.beta)
    }

    /// Natural log of the density; `-∞` for `x <= 0`.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return f64::NEG_INFINITY;
        }
        if x == f64::INFINITY {
            return f64::NEG_INFINITY;
        }
        let nu = self.alpha - self.beta;
        let arg = 2.0 * (self.alpha * self.beta * x).sqrt();
        let ln_k = if arg >= BESSEL_K_X_FLOOR {
            ln_bessel_k(nu, arg).unwrap_or(f64::NAN)
        } else {
            // K_ν(w) ~ Γ(|ν|)/2 (w/2)^{-|ν|} as w → 0
            let nu = nu.abs().max(f64::MIN_POSITIVE);
            ln_gamma_pos(nu) - std::f64::consts::LN_2 - nu * (0.5 * arg).ln()
        };
        self.ln_norm + (0.5 * (self.alpha + self.beta) - 1.0) * x.ln() + ln_k
    }

    pub fn pdf_checked(&self, x: f64) -> PdfValue {
        let ln = self.ln_pdf(x);
        let underflow = ln.is_finite() && ln < f64::MIN_POSITIVE.ln();
        PdfValue { value: if underflow { 0.0 } else { ln.exp() }, underflow }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.pdf_checked(x).value
    }

    /// Pr{h <= x}. Uses the power series, in double or multiprecision
    /// arithmetic as cancellation demands, and quadrature of the density
    /// once the series would need more than `ctl.max_terms` terms.
    pub fn cdf(&self, x: f64, ctl: &SeriesControl) -> Result<CdfValue> {
        ctl.validate()?;
        if x.is_nan() {
            return Err(Error::Domain("CDF argument is NaN".into()));
        }
        if x <= 0.0 {
            return Ok(CdfValue { value: 0.0, method: CdfMethod::Series });
        }
        if x == f64::INFINITY {
            return Ok(CdfValue { value: 1.0, method: CdfMethod::Series });
        }
        if self.series_applicable() {
            let eval = self.cdf_series(x, ctl)?;
            if eval.converged && eval.rounding_error <= ctl.tol * eval.value.abs() {
                return Ok(CdfValue { value: eval.value.clamp(0.0, 1.0), method: CdfMethod::Series });
            }
            if let Some(value) = self.cdf_series_extended(x, ctl)? {
                return Ok(CdfValue { value: value.clamp(0.0, 1.0), method: CdfMethod::ExtendedSeries });
            }
        }
        let value = self.cdf_quadrature(x)?;
        Ok(CdfValue { value, method: CdfMethod::Quadrature })
    }

    /// The series needs a non-integer shape difference.
    fn series_applicable(&self) -> bool {
        let nu = self.alpha - self.beta;
        (nu - nu.round()).abs() > 1e-12
    }

    fn series_prefactor(&self) -> f64 {
        let nu = self.alpha - self.beta;
        PI / (PI * nu).sin() * (-ln_gamma_pos(self.alpha) - ln_gamma_pos(self.beta)).exp()
    }

    /// Double-precision power series
    ///
    /// F(x) = π/(sin(πν)Γ(α)Γ(β)) Σ_l [ z^{β+l} / (l!(β+l)Γ(l-ν+1))
    ///                                - z^{α+l} / (l!(α+l)Γ(l+ν+1)) ],
    /// with `z = αβx` and `ν = α - β`, reporting a rounding-error bound.
    pub fn cdf_series(&self, x: f64, ctl: &SeriesControl) -> Result<SeriesEval> {
        ctl.validate()?;
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::Domain(format!("series needs finite x > 0, got {x}")));
        }
        if !self.series_applicable() {
            return Err(Error::Domain(format!(
                "series needs a non-integer shape difference, got α - β = {}",
                self.alpha - self.beta
            )));
        }
        let (a, b) = (self.alpha, self.beta);
        let nu = a - b;
        let z = a * b * x;
        let ln_z = z.ln();
        // Everything is scaled by z^β so that small arguments do not underflow.
        let z_nu = (nu * ln_z).exp();
        let mut u1 = recip_gamma(1.0 - nu);
        let mut u2 = recip_gamma(1.0 + nu);
        let mut sum = 0.0;
        let mut largest: f64 = 0.0;
        let mut terms = 0;
        let mut converged = false;
        for l in 0..ctl.max_terms {
            let fl = l as f64;
            let c1 = u1 / (b + fl);
            let c2 = z_nu * u2 / (a + fl);
            sum += c1 - c2;
            largest = largest.max(c1.abs()).max(c2.abs());
            terms = l + 1;
            let next = fl + 1.0;
            let shrinking = next > nu.abs() && z < 0.5 * next * (next - nu.abs());
            if shrinking && c1.abs() + c2.abs() <= ctl.tol * sum.abs() {
                converged = true;
                break;
            }
            if !sum.is_finite() {
                break;
            }
            u1 *= z / (next * (next - nu));
            u2 *= z / (next * (next + nu));
        }
        let scale = self.series_prefactor() * (b * ln_z).exp();
        let value = scale * sum;
        let rounding_error = 2.0 * (scale * largest).abs() * f64::EPSILON * (terms as f64 + 10.0);
        let finite = value.is_finite() && rounding_error.is_finite();
        Ok(SeriesEval {
            value: if finite { value } else { f64::NAN },
            rounding_error: if finite { rounding_error } else { f64::INFINITY },
            terms,
            converged: converged && finite,
        })
    }

    /// The same series summed in fixed-point multiprecision arithmetic with
    /// enough bits to absorb the cancellation between its two branches.
    /// `None` when the term cap or the precision cap would be exceeded.
    pub fn cdf_series_extended(&self, x: f64, ctl: &SeriesControl) -> Result<Option<f64>> {
        ctl.validate()?;
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::Domain(format!("series needs finite x > 0, got {x}")));
        }
        if !self.series_applicable() {
            return Ok(None);
        }
        let (a, b) = (self.alpha, self.beta);
        let nu = a - b;
        let z = a * b * x;
        let ln_z = z.ln();

        // Log-magnitude of the largest contribution sizes the precision.
        let mut l1 = recip_gamma(1.0 - nu).abs().ln() - b.ln();
        let mut l2 = recip_gamma(1.0 + nu).abs().ln() + nu * ln_z - a.ln();
        let mut ln_largest = l1.max(l2);
        let mut decaying_from = None;
        for l in 0..ctl.max_terms {
            let next = l as f64 + 1.0;
            let step = ln_z - next.ln();
            l1 += step - (next - nu).abs().ln() + ((b + next - 1.0) / (b + next)).ln();
            l2 += step - (next + nu).ln() + ((a + next - 1.0) / (a + next)).ln();
            ln_largest = ln_largest.max(l1).max(l2);
            if next > nu.abs() && z < 0.5 * next * (next - nu.abs()) {
                decaying_from.get_or_insert(l);
            }
            if decaying_from.is_some() && l1.max(l2) < ln_largest - 800.0 {
                break;
            }
        }
        if decaying_from.is_none() {
            return Ok(None);
        }
        // An absolute error of 2^-bits on terms of size e^{ln_terms} must stay
        // below 2^-target once multiplied by the prefactor.
        let pref = self.series_prefactor();
        let ln_terms = b * ln_z + ln_largest;
        let bits = (EXTENDED_TARGET_BITS + pref.abs().log2() + ln_terms.max(0.0) / std::f64::consts::LN_2)
            .ceil()
            .max(64.0);
        if !bits.is_finite() || bits > MAX_BITS as f64 {
            return Ok(None);
        }
        let mp = Mp::new(bits as u32);

        let fa = mp.from_f64(a);
        let fb = mp.from_f64(b);
        let fnu = &fa - &fb;
        let fz = mp.from_f64(z);
        let ln_fz = mp.ln(&fz);
        let (lg1, s1) = mp.ln_gamma(&(mp.one() - &fnu));
        let (lg2, s2) = mp.ln_gamma(&(mp.one() + &fnu));
        let mut t1 = mp.exp(&(mp.mul(&fb, &ln_fz) - lg1));
        if s1 < 0 {
            t1 = -t1;
        }
        let mut t2 = mp.exp(&(mp.mul(&fa, &ln_fz) - lg2));
        if s2 < 0 {
            t2 = -t2;
        }
        let mut sum = mp.int(0);
        let mut converged = false;
        for l in 0..ctl.max_terms {
            let fl = mp.int(l as i64);
            let c1 = mp.div(&t1, &(&fb + &fl));
            let c2 = mp.div(&t2, &(&fa + &fl));
            sum += &c1 - &c2;
            let next = l as f64 + 1.0;
            let shrinking = next > nu.abs() && z < 0.5 * next * (next - nu.abs());
            if shrinking && mp.is_negligible(&c1) && mp.is_negligible(&c2) {
                converged = true;
                break;
            }
            let fnext = mp.int(l as i64 + 1);
            let d1 = mp.mul(&fnext, &(&fnext - &fnu));
            let d2 = mp.mul(&fnext, &(&fnext + &fnu));
            t1 = mp.div(&mp.mul(&t1, &fz), &d1);
            t2 = mp.div(&mp.mul(&t2, &fz), &d2);
        }
        if !converged {
            return Ok(None);
        }
        Ok(Some(pref * mp.to_f64(&sum)))
    }

    /// CDF by adaptive quadrature of the density; the upper tail is
    /// integrated instead when `x` lies beyond the unit mean.
    pub fn cdf_quadrature(&self, x: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(Error::Domain("CDF argument is NaN".into()));
        }
        if x <= 0.0 {
            return Ok(0.0);
        }
        if x == f64::INFINITY {
            return Ok(1.0);
        }
        let f = |t: f64| self.pdf(t);
        let value = if x <= 1.0 {
            integrate_segments(f, &[0.0, x], &CDF_QUAD_TOL)?.value
        } else {
            1.0 - integrate_segments(f, &[x, f64::INFINITY], &CDF_QUAD_TOL)?.value
        };
        Ok(value.clamp(0.0, 1.0))
    }

    /// Leading small-argument term Γ(p-q)/(Γ(α)Γ(β)) (αβx)^q / q.
    pub fn cdf_leading_term(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return 0.0;
        }
        let (p, q) = (self.p(), self.q());
        let ln = ln_gamma_pos(p - q) - ln_gamma_pos(self.alpha) - ln_gamma_pos(self.beta)
            + q * (self.alpha * self.beta * x).ln()
            - q.ln();
        ln.exp()
    }

    /// E[exp(s·w·h)] for `Re(s) <= 0`.
    ///
    /// Conditioning on the large-scale factor Y turns the Laplace integral of
    /// the density into E_Y[(1 - s w Y/α)^{-α}], whose integrand is smooth
    /// and free of the oscillation of `e^{s w h}`.
    pub fn mgf(&self, weight: f64, s: Complex64) -> Result<Complex64> {
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::InvalidParameter(format!("MGF weight must be positive, got {weight}")));
        }
        if s.re > 0.0 || !s.is_finite() {
            return Err(Error::Domain(format!("MGF evaluated only for Re(s) <= 0, got {s}")));
        }
        let one = Complex64::new(1.0, 0.0);
        if s == Complex64::new(0.0, 0.0) {
            return Ok(one);
        }
        let (a, b) = (self.alpha, self.beta);
        let c = s * weight / a;
        let ln_norm_y = b * b.ln() - ln_gamma_pos(b);
        let integrand = |y: f64| {
            if y <= 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let ln_density = ln_norm_y + (b - 1.0) * y.ln() - b * y;
            (-a * (one - c * y).ln() + ln_density).exp()
        };
        // The integrand varies on the scale 1/|c| as well as on the unit
        // scale of Y.
        let knee = 1.0 / c.norm();
        let mut points = vec![0.0];
        if knee < 1.0 {
            points.push(knee);
        }
        points.extend([1.0, f64::INFINITY]);
        Ok(integrate_segments(integrand, &points, &MGF_QUAD_TOL)?.value)
    }
}
