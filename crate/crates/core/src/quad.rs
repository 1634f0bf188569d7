//! Quadrature for complex-valued integrands of a real parameter.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use crate::C64;

/// Values that can be accumulated by the quadrature rules.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Three complex components integrated together.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Triple(pub [C64; 3]);

impl Add for Triple {
    type Output = Triple;
    fn add(self, o: Triple) -> Triple {
        Triple([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for Triple {
    type Output = Triple;
    fn sub(self, o: Triple) -> Triple {
        Triple([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Mul<f64> for Triple {
    type Output = Triple;
    fn mul(self, s: f64) -> Triple {
        Triple([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

impl Mul<C64> for Triple {
    type Output = Triple;
    fn mul(self, s: C64) -> Triple {
        Triple([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

impl QuadValue for Triple {
    fn zero() -> Self {
        Triple::default()
    }
    fn magnitude(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<T: QuadValue, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> (T, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        kron = kron + s * WGK[i];
        if i % 2 == 1 {
            gauss = gauss + s * WG[i / 2];
        }
    }
    (kron * h, ((kron - gauss) * h).magnitude())
}

const MAX_INTERVALS: usize = 20_000;

/// Adaptive Gauss–Kronrod (7/15) integration of `f` over `[a, b]` to the
/// absolute tolerance `tol`. Returns the estimate and the error bound.
pub fn gauss_kronrod<T: QuadValue, F: Fn(f64) -> T>(f: &F, a: f64, b: f64, tol: f64) -> (T, f64) {
    let mut stack = vec![(a, b, gk15(f, a, b), 0u32)];
    let mut total = T::zero();
    let mut err = 0.0;
    let span = (b - a).abs().max(f64::MIN_POSITIVE);
    let mut budget = MAX_INTERVALS;
    while let Some((lo, hi, (val, e), depth)) = stack.pop() {
        let local_tol = tol * (hi - lo).abs() / span;
        if e <= local_tol.max(1e-13 * val.magnitude()) || depth >= 40 || budget == 0 {
            total = total + val;
            err += e;
            continue;
        }
        budget -= 1;
        let mid = 0.5 * (lo + hi);
        stack.push((mid, hi, gk15(f, mid, hi), depth + 1));
        stack.push((lo, mid, gk15(f, lo, mid), depth + 1));
    }
    (total, err)
}

/// Trapezoid rule on `[0, 2π)` for a periodic integrand, doubling the node
/// count until successive estimates agree to `tol`.
pub fn periodic_trapezoid<T: QuadValue, F: Fn(f64) -> T>(f: &F, tol: f64) -> T {
    let mut n = 64usize;
    let sample = |n: usize| -> T {
        (0..n).fold(T::zero(), |acc, i| acc + f(2.0 * PI * i as f64 / n as f64)) * (2.0 * PI / n as f64)
    };
    let mut prev = sample(n);
    while n < 1 << 16 {
        n *= 2;
        let cur = sample(n);
        if (cur - prev).magnitude() <= tol.max(1e-14 * cur.magnitude()) {
            return cur;
        }
        prev = cur;
    }
    prev
}

/// Ten-point Gauss–Legendre nodes and weights on `[-1, 1]`.
pub const GL10: [(f64, f64); 10] = [
    (-0.973_906_528_517_171_7, 0.066_671_344_308_688_14),
    (-0.865_063_366_688_984_5, 0.149_451_349_150_580_6),
    (-0.679_409_568_299_024_4, 0.219_086_362_515_982_04),
    (-0.433_395_394_129_247_2, 0.269_266_719_309_996_35),
    (-0.148_874_338_981_631_2, 0.295_524_224_714_752_87),
    (0.148_874_338_981_631_2, 0.295_524_224_714_752_87),
    (0.433_395_394_129_247_2, 0.269_266_719_309_996_35),
    (0.679_409_568_299_024_4, 0.219_086_362_515_982_04),
    (0.865_063_366_688_984_5, 0.149_451_349_150_580_6),
    (0.973_906_528_517_171_7, 0.066_671_344_308_688_14),
];

/// Fixed ten-point Gauss–Legendre rule over `[a, b]`.
pub fn gauss_legendre<T: QuadValue, F: FnMut(f64) -> T>(mut f: F, a: f64, b: f64) -> T {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    GL10.iter().fold(T::zero(), |acc, (x, w)| acc + f(c + h * x) * *w) * h
}
