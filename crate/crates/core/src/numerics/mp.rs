//! Fixed-point multiprecision arithmetic for sums whose terms cancel far
//! beyond f64 precision.
//!
//! A value is a `BigInt` scaled by `2^-bits`; precision is absolute, which is
//! what a cancelling sum needs. Only the handful of operations used by the
//! Gamma-Gamma CDF series are provided.

use std::sync::OnceLock;

use num_bigint::{BigInt, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Largest precision accepted; above it callers should use another method.
pub(crate) const MAX_BITS: u32 = 2048;

const GUARD_BITS: u32 = 64;
const EXP_HALVINGS: u32 = 16;
const STIRLING_TERMS: usize = 150;

/// Tangent numbers T_1..T_n (Brent–Harvey recurrence); B_{2k} follows as
/// (-1)^{k-1} 2k T_k / (2^{2k}(2^{2k}-1)).
fn tangent_numbers() -> &'static [BigInt] {
    static TABLE: OnceLock<Vec<BigInt>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = STIRLING_TERMS;
        let mut t = vec![BigInt::zero(); n + 1];
        t[1] = BigInt::one();
        for k in 2..=n {
            t[k] = &t[k - 1] * (k - 1);
        }
        for k in 2..=n {
            for j in k..=n {
                t[j] = &t[j - 1] * (j - k) + &t[j] * (j - k + 2);
            }
        }
        t.remove(0);
        t
    })
}

fn ldexp(x: f64, exp: i64) -> f64 {
    let mut v = x;
    let mut e = exp;
    while e != 0 {
        let step = e.clamp(-1000, 1000);
        v *= 2f64.powi(step as i32);
        e -= step;
    }
    v
}

/// Arithmetic context at a fixed number of fractional bits.
pub(crate) struct Mp {
    bits: u32,
    one: BigInt,
    ln2: BigInt,
    half_ln_2pi: BigInt,
}

impl Mp {
    /// Context carrying at least `bits` fractional bits plus guard bits.
    pub(crate) fn new(bits: u32) -> Self {
        let bits = bits.min(MAX_BITS) + GUARD_BITS;
        let one = BigInt::one() << bits;
        let mut mp = Self { bits, one, ln2: BigInt::zero(), half_ln_2pi: BigInt::zero() };
        let third = mp.div(&mp.one, &(&mp.one * 3));
        mp.ln2 = mp.atanh(&third) * 2;
        // Machin: π = 16 atan(1/5) - 4 atan(1/239)
        let pi = mp.atan_inv(5) * 16 - mp.atan_inv(239) * 4;
        let ln_pi = mp.ln(&pi);
        mp.half_ln_2pi = (&mp.ln2 + ln_pi) >> 1;
        mp
    }

    pub(crate) fn one(&self) -> &BigInt {
        &self.one
    }

    pub(crate) fn int(&self, n: i64) -> BigInt {
        &self.one * n
    }

    /// Exact conversion for finite doubles whose lowest mantissa bit is
    /// within the fractional precision.
    pub(crate) fn from_f64(&self, x: f64) -> BigInt {
        if x == 0.0 || !x.is_finite() {
            return BigInt::zero();
        }
        let raw = x.to_bits();
        let biased = ((raw >> 52) & 0x7ff) as i64;
        let frac = raw & ((1u64 << 52) - 1);
        let (mantissa, exp) = if biased == 0 { (frac, -1074) } else { (frac | (1u64 << 52), biased - 1075) };
        let m = BigInt::from(mantissa);
        let shift = exp + self.bits as i64;
        let v = if shift >= 0 { m << shift as usize } else { m >> (-shift) as usize };
        if x < 0.0 {
            -v
        } else {
            v
        }
    }

    pub(crate) fn to_f64(&self, v: &BigInt) -> f64 {
        let len = v.bits() as i64;
        let drop = (len - 64).max(0);
        let head = (v >> drop as usize).to_f64().unwrap_or(f64::NAN);
        ldexp(head, drop - self.bits as i64)
    }

    pub(crate) fn mul(&self, a: &BigInt, b: &BigInt) -> BigInt {
        (a * b) >> self.bits as usize
    }

    pub(crate) fn div(&self, a: &BigInt, b: &BigInt) -> BigInt {
        (a << self.bits as usize) / b
    }

    /// Magnitude below one unit in the last place.
    pub(crate) fn is_negligible(&self, v: &BigInt) -> bool {
        v.bits() <= 1
    }

    fn atanh(&self, y: &BigInt) -> BigInt {
        let y2 = self.mul(y, y);
        let mut power = y.clone();
        let mut sum = BigInt::zero();
        let mut k = 1u64;
        while !power.is_zero() {
            sum += &power / k;
            power = self.mul(&power, &y2);
            k += 2;
        }
        sum
    }

    fn atan_inv(&self, n: u64) -> BigInt {
        let n2 = n * n;
        let mut power = &self.one / n;
        let mut sum = BigInt::zero();
        let mut k = 1u64;
        let mut positive = true;
        while !power.is_zero() {
            let term = &power / k;
            if positive {
                sum += term;
            } else {
                sum -= term;
            }
            positive = !positive;
            power /= n2;
            k += 2;
        }
        sum
    }

    /// Natural logarithm of a positive value.
    pub(crate) fn ln(&self, v: &BigInt) -> BigInt {
        assert!(v.sign() == Sign::Plus, "logarithm of a non-positive value");
        // v / 2^k lies in [1, 2)
        let k = v.bits() as i64 - 1 - self.bits as i64;
        let m = if k >= 0 { v >> k as usize } else { v << (-k) as usize };
        let y = self.div(&(&m - &self.one), &(&m + &self.one));
        &self.ln2 * k + self.atanh(&y) * 2
    }

    pub(crate) fn exp(&self, y: &BigInt) -> BigInt {
        let n = (self.to_f64(y) / std::f64::consts::LN_2).round() as i64;
        let r = y - &self.ln2 * n;
        let r = r >> EXP_HALVINGS as usize;
        let mut term = self.one.clone();
        let mut sum = self.one.clone();
        let mut k = 1u64;
        while !term.is_zero() {
            term = self.mul(&term, &r) / k;
            sum += &term;
            k += 1;
        }
        for _ in 0..EXP_HALVINGS {
            sum = self.mul(&sum, &sum);
        }
        if n >= 0 {
            sum << n as usize
        } else {
            sum >> (-n) as usize
        }
    }

    /// `(ln|Γ(w)|, sign Γ(w))` for a fixed-point `w` that is not a
    /// non-positive integer.
    pub(crate) fn ln_gamma(&self, fw: &BigInt) -> (BigInt, i8) {
        let w = self.to_f64(fw);
        let fractional = fw % &self.one;
        assert!(!(w <= 0.5 && fractional.is_zero()), "Γ has a pole at {w}");
        // Shift the argument up until the truncated Stirling series reaches
        // full precision with the tabulated coefficients.
        let target = 20.0 * 2f64.powf(self.bits as f64 / (2.0 * STIRLING_TERMS as f64));
        let shift = (target - w).ceil().max(0.0) as i64;
        let mut prod = self.one.clone();
        for i in 0..shift {
            prod = self.mul(&prod, &(fw + self.int(i)));
        }
        let sign = if prod.is_negative() { -1 } else { 1 };
        let ln_prod = self.ln(&prod.abs());

        let y = fw + self.int(shift);
        let ln_y = self.ln(&y);
        let half = &self.one >> 1;
        let mut value = self.mul(&(&y - &half), &ln_y) - &y + &self.half_ln_2pi;
        // y^{2k-1} is carried as a growing value; a shrinking y^{-(2k-1)}
        // would fall below the fixed-point resolution while the Bernoulli
        // coefficients are still large.
        let y2 = self.mul(&y, &y);
        let mut power = y.clone();
        for (idx, t) in tangent_numbers().iter().enumerate() {
            let k = idx as u64 + 1;
            // B_{2k} / (2k(2k-1)) = (-1)^{k-1} T_k / ((2k-1) 2^{2k} (2^{2k}-1))
            let four_k = BigInt::one() << (2 * k) as usize;
            let den = (&four_k - 1u32) * (2 * k - 1);
            let coef = ((t << self.bits as usize) / den) >> (2 * k) as usize;
            let term = self.div(&coef, &power);
            if term.is_zero() {
                break;
            }
            if k % 2 == 1 {
                value += term;
            } else {
                value -= term;
            }
            power = self.mul(&power, &y2);
        }
        (value - ln_prod, sign)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn round_trip_and_basic_ops() {
        let mp = Mp::new(128);
        for &x in &[1.0, -2.5, 3.7e12, 0.1] {
            assert_eq!(mp.to_f64(&mp.from_f64(x)), x);
        }
        let a = mp.from_f64(1.5);
        let b = mp.from_f64(-4.0);
        assert_eq!(mp.to_f64(&mp.mul(&a, &b)), -6.0);
        assert_eq!(mp.to_f64(&mp.div(&a, &b)), -0.375);
    }

    #[test]
    fn exp_ln_and_constants() {
        let mp = Mp::new(200);
        assert_eq!(mp.to_f64(&mp.ln2), std::f64::consts::LN_2);
        let ln_pi = mp.half_ln_2pi.clone() * 2 - &mp.ln2;
        assert!(close(mp.to_f64(&ln_pi), std::f64::consts::PI.ln(), 1e-16));
        for &x in &[0.3, 1.0, 7.25, 398.0, 1e-4] {
            let l = mp.ln(&mp.from_f64(x));
            assert!(close(mp.to_f64(&l), x.ln(), 2e-16), "ln {x}");
            let back = mp.exp(&l);
            assert!(close(mp.to_f64(&back), x, 4e-16), "exp ln {x}");
        }
        let e40 = mp.exp(&mp.int(40));
        assert!(close(mp.to_f64(&e40), 40f64.exp(), 4e-16));
    }

    #[test]
    fn ln_gamma_signs_and_closed_forms() {
        let mp = Mp::new(256);
        // Γ(1/2) = √π
        let (v, s) = mp.ln_gamma(&mp.from_f64(0.5));
        let ln_sqrt_pi = mp.half_ln_2pi.clone() - (mp.ln2.clone() >> 1);
        assert_eq!(s, 1);
        let diff: BigInt = v - ln_sqrt_pi;
        assert!(diff.abs().bits() < 100);
        // Γ(-1/2) = -2√π
        let (v, s) = mp.ln_gamma(&mp.from_f64(-0.5));
        assert_eq!(s, -1);
        assert!(close(mp.to_f64(&v), (2.0 * std::f64::consts::PI.sqrt()).ln(), 1e-15));
    }

    fn decimal(mp: &Mp, digits: &str, scale10: u32) -> BigInt {
        let n: BigInt = digits.parse().unwrap();
        (n << mp.bits as usize) / BigInt::from(10u32).pow(scale10)
    }

    #[test]
    fn ln_gamma_matches_25_digit_references() {
        let mp = Mp::new(256);
        // arguments are the nearest doubles, references evaluated at those
        for &(w, digits) in &[
            (4.2, "2048555636960590041961949"),
            (0.375, "0863073982270647462405089"),
            (7.5, "7534364236758732955158368"),
            (-1.36, "1053583139915390819809726"),
        ] {
            let (v, _) = mp.ln_gamma(&mp.from_f64(w));
            let diff = mp.to_f64(&(v - decimal(&mp, digits, 24)));
            assert!(diff.abs() < 2e-24, "w = {w}: {diff:e}");
        }
    }

    #[test]
    fn ln_gamma_stable_across_precisions() {
        let lo = Mp::new(300);
        let hi = Mp::new(900);
        for &w in &[0.37, 2.2189, -1.36, 6.896, 31.5] {
            let (a, sa) = lo.ln_gamma(&lo.from_f64(w));
            let (b, sb) = hi.ln_gamma(&hi.from_f64(w));
            assert_eq!(sa, sb);
            let b_lo = b >> (hi.bits - lo.bits) as usize;
            let diff = (a - b_lo).abs();
            assert!(diff.bits() < 32, "w = {w}: {} bits of disagreement", diff.bits());
        }
    }
}
