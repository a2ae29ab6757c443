//! Globally adaptive 21-point Gauss–Kronrod quadrature.
//!
//! Works for real and complex integrands. A semi-infinite range `[a, +∞)`
//! is mapped to `[0, 1)` with `x = a + t/(1-t)`.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

// Kronrod abscissae (positive half, descending); odd indices are the
// 10-point Gauss nodes.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_980_011_000,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Values a quadrature rule can accumulate.
pub trait QuadValue:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Convergence target: stop once the summed error estimate is below
/// `max(abs, rel * |I|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel, max_intervals: 4000 }
    }

    /// Same value for the absolute and relative target.
    pub fn uniform(tol: f64) -> Self {
        Self::new(tol, tol)
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
enum Map {
    Identity,
    /// x = origin + t/(1-t)
    HalfLine { origin: f64 },
}

#[derive(Debug, Clone, Copy)]
struct Piece<T> {
    lo: f64,
    hi: f64,
    map: Map,
    value: T,
    error: f64,
    /// Error estimate is at the rounding floor; splitting cannot help.
    at_floor: bool,
}

fn kronrod<T: QuadValue, F: FnMut(f64) -> T>(f: &mut F, lo: f64, hi: f64, map: Map) -> (T, f64, bool) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut eval = |t: f64| -> T {
        match map {
            Map::Identity => f(t),
            Map::HalfLine { origin } => {
                let one_minus = 1.0 - t;
                f(origin + t / one_minus) * (1.0 / (one_minus * one_minus))
            }
        }
    };
    let mut samples = [T::default(); 21];
    samples[10] = eval(center);
    for j in 0..10 {
        let dx = half * XGK[j];
        samples[j] = eval(center - dx);
        samples[20 - j] = eval(center + dx);
    }
    let mut res_k = samples[10] * WGK[10];
    let mut res_g = T::default();
    for j in 0..10 {
        let pair = samples[j] + samples[20 - j];
        res_k = res_k + pair * WGK[j];
        if j % 2 == 1 {
            res_g = res_g + pair * WG[j / 2];
        }
    }
    let mean = res_k * 0.5;
    let mut res_asc = WGK[10] * (samples[10] - mean).magnitude();
    for j in 0..10 {
        res_asc += WGK[j] * ((samples[j] - mean).magnitude() + (samples[20 - j] - mean).magnitude());
    }
    res_asc *= half.abs();
    let value = res_k * half;
    let mut err = ((res_k - res_g) * half).magnitude();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    let res_abs = {
        let mut s = WGK[10] * samples[10].magnitude();
        for j in 0..10 {
            s += WGK[j] * (samples[j].magnitude() + samples[20 - j].magnitude());
        }
        s * half.abs()
    };
    let roundoff = 50.0 * f64::EPSILON * res_abs;
    (value, err.max(roundoff), err <= roundoff)
}

/// Adaptive quadrature of `f` over `[a, b]`; `b` may be `f64::INFINITY`.
/// `tol` is used as both the absolute and the relative target.
pub fn integrate_adaptive<T, F>(f: F, a: f64, b: f64, tol: f64) -> Result<Integral<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    integrate_segments(f, &[a, b], &Tolerance::uniform(tol))
}

/// Adaptive quadrature over consecutive segments `points[0]..points[1]..`;
/// only the last point may be `+∞`. Breakpoints help when the integrand has
/// features at known locations.
pub fn integrate_segments<T, F>(mut f: F, points: &[f64], tol: &Tolerance) -> Result<Integral<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    if points.len() < 2 {
        return Err(Error::InvalidParameter("need at least two integration limits".into()));
    }
    if !(tol.abs > 0.0 || tol.rel > 0.0) {
        return Err(Error::InvalidParameter("quadrature tolerance must be positive".into()));
    }
    for w in points.windows(2) {
        if !(w[0] < w[1]) || w[0].is_infinite() || w[0].is_nan() {
            return Err(Error::InvalidParameter(format!(
                "integration limits must be increasing and finite except the last, got {points:?}"
            )));
        }
    }
    let last = points.len() - 2;
    let mut pieces: Vec<Piece<T>> = Vec::with_capacity(64);
    let mut evaluations = 0;
    for (i, w) in points.windows(2).enumerate() {
        let (lo, hi, map) = if i == last && w[1] == f64::INFINITY {
            (0.0, 1.0, Map::HalfLine { origin: w[0] })
        } else if w[1].is_finite() {
            (w[0], w[1], Map::Identity)
        } else {
            return Err(Error::InvalidParameter("only the upper limit may be infinite".into()));
        };
        let (value, error, at_floor) = kronrod(&mut f, lo, hi, map);
        evaluations += 21;
        pieces.push(Piece { lo, hi, map, value, error, at_floor });
    }

    loop {
        let total = pieces.iter().fold(T::default(), |acc, p| acc + p.value);
        let total_err: f64 = pieces.iter().map(|p| p.error).sum();
        if !total_err.is_finite() || total.magnitude().is_nan() {
            return Err(Error::NoConvergence { estimate: total.magnitude(), error: total_err });
        }
        if total_err <= tol.target(total.magnitude()) {
            return Ok(Integral { value: total, error: total_err, evaluations });
        }
        if pieces.len() >= tol.max_intervals {
            return Err(Error::NoConvergence { estimate: total.magnitude(), error: total_err });
        }
        let worst = pieces
            .iter()
            .enumerate()
            .filter(|(_, p)| p.error > 0.0 && !p.at_floor)
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .map(|(i, _)| i);
        let Some(worst) = worst else {
            // every panel is limited by rounding: this is the attainable accuracy
            return Ok(Integral { value: total, error: total_err, evaluations });
        };
        let piece = pieces[worst];
        let mid = 0.5 * (piece.lo + piece.hi);
        if !(mid > piece.lo && mid < piece.hi) {
            pieces[worst].at_floor = true;
            continue;
        }
        let (lv, le, lf) = kronrod(&mut f, piece.lo, mid, piece.map);
        let (rv, re, rf) = kronrod(&mut f, mid, piece.hi, piece.map);
        evaluations += 42;
        pieces[worst] = Piece { lo: piece.lo, hi: mid, map: piece.map, value: lv, error: le, at_floor: lf };
        pieces.push(Piece { lo: mid, hi: piece.hi, map: piece.map, value: rv, error: re, at_floor: rf });
    }
}
