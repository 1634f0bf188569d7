//! Configurations of necks between horizontal planes, neck sizes, the
//! meromorphic level forms and the force / residue machinery built on them.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::series::Series;
use crate::{MaxfaceError, Result, C64};

/// Absolute tolerance on the growth sum.
pub const GROWTH_SUM_TOL: f64 = 1e-12;

/// Necks closer than this (relative to the configuration scale) are treated
/// as coincident.
const COINCIDENCE_TOL: f64 = 1e-12;

/// A neck label `(level, index)`, both 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NeckId {
    pub level: usize,
    pub index: usize,
}

impl NeckId {
    pub const fn new(level: usize, index: usize) -> Self {
        NeckId { level, index }
    }
}

impl fmt::Display for NeckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.level, self.index)
    }
}

#[derive(Deserialize)]
struct RawConfiguration {
    #[serde(rename = "L")]
    levels: usize,
    necks: Vec<Vec<Complex64>>,
    #[serde(rename = "Q")]
    growth: Vec<f64>,
}

/// Neck positions on `L` planes plus the logarithmic growth of each end.
///
/// `necks[l - 1]` holds the positions of the necks joining plane `l` to plane
/// `l + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfiguration")]
pub struct Configuration {
    #[serde(rename = "L")]
    levels: usize,
    necks: Vec<Vec<Complex64>>,
    #[serde(rename = "Q")]
    growth: Vec<f64>,
}

impl TryFrom<RawConfiguration> for Configuration {
    type Error = MaxfaceError;

    fn try_from(raw: RawConfiguration) -> Result<Self> {
        Configuration::new(raw.levels, raw.necks, raw.growth)
    }
}

impl Configuration {
    pub fn new(levels: usize, necks: Vec<Vec<C64>>, growth: Vec<f64>) -> Result<Self> {
        let config = Configuration { levels, necks, growth };
        config.check_structure()?;
        let sum: f64 = config.growth.iter().sum();
        if sum.abs() > GROWTH_SUM_TOL {
            return Err(MaxfaceError::NonZeroGrowthSum { sum });
        }
        Ok(config)
    }

    fn check_structure(&self) -> Result<()> {
        let bad = |msg: String| Err(MaxfaceError::InvalidConfiguration(msg));
        if self.levels < 2 {
            return bad(format!("L must be at least 2, got {}", self.levels));
        }
        if self.necks.len() != self.levels - 1 {
            return bad(format!(
                "expected {} neck levels, got {}",
                self.levels - 1,
                self.necks.len()
            ));
        }
        if self.growth.len() != self.levels {
            return bad(format!("expected {} growths, got {}", self.levels, self.growth.len()));
        }
        for (i, level) in self.necks.iter().enumerate() {
            if level.is_empty() {
                return bad(format!("level {} has no necks", i + 1));
            }
            if level.iter().any(|p| !p.re.is_finite() || !p.im.is_finite()) {
                return bad(format!("level {} has a non-finite position", i + 1));
            }
        }
        if self.growth.iter().any(|q| !q.is_finite()) {
            return bad("non-finite growth".into());
        }
        if let Some((a, b)) = coincident_necks(&self.necks).first() {
            return bad(format!("necks {a} and {b} coincide"));
        }
        Ok(())
    }

    /// Number of planes `L`.
    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Neck count `n_l`, zero outside `1..L`.
    pub fn neck_count(&self, l: usize) -> usize {
        if l == 0 || l >= self.levels {
            0
        } else {
            self.necks[l - 1].len()
        }
    }

    pub fn neck_counts(&self) -> Vec<usize> {
        self.necks.iter().map(Vec::len).collect()
    }

    pub fn total_necks(&self) -> usize {
        self.necks.iter().map(Vec::len).sum()
    }

    /// Positions of level `l`, empty outside `1..L`.
    pub fn positions(&self, l: usize) -> &[C64] {
        if l == 0 || l >= self.levels {
            &[]
        } else {
            &self.necks[l - 1]
        }
    }

    pub fn all_positions(&self) -> &[Vec<C64>] {
        &self.necks
    }

    pub fn position(&self, neck: NeckId) -> C64 {
        self.necks[neck.level - 1][neck.index - 1]
    }

    pub fn growth(&self) -> &[f64] {
        &self.growth
    }

    /// All necks in level-major order.
    pub fn neck_ids(&self) -> Vec<NeckId> {
        let mut ids = Vec::with_capacity(self.total_necks());
        for (i, level) in self.necks.iter().enumerate() {
            for k in 0..level.len() {
                ids.push(NeckId::new(i + 1, k + 1));
            }
        }
        ids
    }

    /// Flat index of a neck in level-major order.
    pub fn flat_index(&self, neck: NeckId) -> usize {
        self.necks[..neck.level - 1].iter().map(Vec::len).sum::<usize>() + neck.index - 1
    }

    pub fn check_neck(&self, neck: NeckId) -> Result<()> {
        if neck.level == 0 || neck.level >= self.levels || neck.index == 0 || neck.index > self.neck_count(neck.level) {
            return Err(MaxfaceError::InvalidInput(format!("neck {neck} out of range")));
        }
        Ok(())
    }

    /// Same growths, new positions (validated).
    pub fn with_positions(&self, necks: Vec<Vec<C64>>) -> Result<Self> {
        Configuration::new(self.levels, necks, self.growth.clone())
    }

    /// Applies `z -> scale * z + shift` to every position.
    pub fn transformed(&self, scale: C64, shift: C64) -> Result<Self> {
        let necks = self
            .necks
            .iter()
            .map(|lv| lv.iter().map(|p| scale * p + shift).collect())
            .collect();
        self.with_positions(necks)
    }

    /// Largest modulus among positions, used as a length scale.
    pub fn scale(&self) -> f64 {
        self.necks
            .iter()
            .flatten()
            .map(|p| p.norm())
            .fold(0.0, f64::max)
            .max(1.0)
    }

    /// Builds a configuration from neck sizes instead of growths.
    pub fn from_sizes(necks: Vec<Vec<C64>>, sizes: &[f64]) -> Result<Self> {
        let levels = necks.len() + 1;
        if sizes.len() != necks.len() {
            return Err(MaxfaceError::InvalidConfiguration(format!(
                "expected {} neck sizes, got {}",
                necks.len(),
                sizes.len()
            )));
        }
        let n = |l: usize| if l == 0 || l >= levels { 0.0 } else { necks[l - 1].len() as f64 };
        let c = |l: usize| if l == 0 || l >= levels { 0.0 } else { sizes[l - 1] };
        let mut growth: Vec<f64> = (1..=levels).map(|l| n(l - 1) * c(l - 1) - n(l) * c(l)).collect();
        // Absorb rounding so the sum is exactly zero.
        let drift: f64 = growth.iter().sum();
        growth[levels - 1] -= drift;
        Configuration::new(levels, necks, growth)
    }
}

/// Pairs of necks whose poles would collide: same level or adjacent levels.
pub fn coincident_necks(necks: &[Vec<C64>]) -> Vec<(NeckId, NeckId)> {
    let scale = necks.iter().flatten().map(|p| p.norm()).fold(1.0, f64::max);
    let tol = COINCIDENCE_TOL * scale;
    let mut out = Vec::new();
    for (i, level) in necks.iter().enumerate() {
        for (k, p) in level.iter().enumerate() {
            for (j, q) in level.iter().enumerate().skip(k + 1) {
                if (p - q).norm() <= tol {
                    out.push((NeckId::new(i + 1, k + 1), NeckId::new(i + 1, j + 1)));
                }
            }
            if let Some(next) = necks.get(i + 1) {
                for (j, q) in next.iter().enumerate() {
                    if (p - q).norm() <= tol {
                        out.push((NeckId::new(i + 1, k + 1), NeckId::new(i + 2, j + 1)));
                    }
                }
            }
        }
    }
    out
}

/// Neck sizes `c_1..c_{L-1}`; `c_0 = c_L = 0` implicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeckSizes {
    pub c: Vec<f64>,
}

impl NeckSizes {
    /// `c_l` with the boundary convention.
    pub fn get(&self, l: usize) -> f64 {
        if l == 0 || l > self.c.len() {
            0.0
        } else {
            self.c[l - 1]
        }
    }
}

pub fn neck_sizes(config: &Configuration) -> Result<NeckSizes> {
    let sum: f64 = config.growth.iter().sum();
    if sum.abs() > GROWTH_SUM_TOL {
        return Err(MaxfaceError::NonZeroGrowthSum { sum });
    }
    let mut c = Vec::with_capacity(config.levels - 1);
    let mut prev = 0.0;
    for l in 1..config.levels {
        let n_prev = config.neck_count(l - 1) as f64;
        let cl = (n_prev * prev - config.growth[l - 1]) / config.neck_count(l) as f64;
        c.push(cl);
        prev = cl;
    }
    Ok(NeckSizes { c })
}

/// `ω_l / dz` as a sum of simple poles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelForm {
    pub poles: Vec<(C64, f64)>,
}

impl LevelForm {
    pub fn eval(&self, z: C64) -> C64 {
        self.poles.iter().map(|(q, c)| *c / (z - q)).sum()
    }
}

pub fn level_form(config: &Configuration, sizes: &NeckSizes, l: usize) -> LevelForm {
    let mut poles = Vec::new();
    for p in config.positions(l) {
        poles.push((*p, -sizes.get(l)));
    }
    if l >= 1 {
        for p in config.positions(l - 1) {
            poles.push((*p, sizes.get(l - 1)));
        }
    }
    LevelForm { poles }
}

/// Force at a neck, by the direct three-sum formula.
pub fn force(config: &Configuration, sizes: &NeckSizes, neck: NeckId) -> C64 {
    let l = neck.level;
    let k = neck.index - 1;
    let p = config.position(neck);
    let cl = sizes.get(l);
    let mut f = C64::new(0.0, 0.0);
    for (i, q) in config.positions(l).iter().enumerate() {
        if i != k {
            f += 2.0 * cl * cl / (p - q);
        }
    }
    for q in config.positions(l + 1) {
        f -= cl * sizes.get(l + 1) / (p - q);
    }
    for q in config.positions(l - 1) {
        f -= cl * sizes.get(l - 1) / (p - q);
    }
    f
}

/// All forces in level-major order.
pub fn all_forces(config: &Configuration, sizes: &NeckSizes) -> Vec<C64> {
    config.neck_ids().into_iter().map(|id| force(config, sizes, id)).collect()
}

pub fn max_force(config: &Configuration, sizes: &NeckSizes) -> f64 {
    all_forces(config, sizes).iter().map(|f| f.norm()).fold(0.0, f64::max)
}

/// Force as half the residue of `(ω_l² + ω_{l+1}²)/dz` at the neck.
pub fn force_via_residue(config: &Configuration, sizes: &NeckSizes, neck: NeckId) -> C64 {
    let p = config.position(neck);
    let lower = level_form(config, sizes, neck.level);
    let upper = level_form(config, sizes, neck.level + 1);
    let a = residue_power(&lower, p, 2).expect("neck is a pole of its lower form");
    let b = residue_power(&upper, p, 2).expect("neck is a pole of its upper form");
    0.5 * (a + b)
}

/// The balance scalar `W` as `Σ p F` and by its closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarW {
    pub sum_form: C64,
    pub closed_form: f64,
}

pub fn scalar_w(config: &Configuration, sizes: &NeckSizes) -> ScalarW {
    let mut sum_form = C64::new(0.0, 0.0);
    for id in config.neck_ids() {
        sum_form += config.position(id) * force(config, sizes, id);
    }
    ScalarW { sum_form, closed_form: closed_form_w(&config.neck_counts(), &sizes.c) }
}

/// `Σ n_l(n_l-1)c_l² - Σ n_l n_{l+1} c_l c_{l+1}`.
pub fn closed_form_w(counts: &[usize], c: &[f64]) -> f64 {
    let mut w = 0.0;
    for (i, (&n, &cl)) in counts.iter().zip(c).enumerate() {
        let n = n as f64;
        w += n * (n - 1.0) * cl * cl;
        if let (Some(&n1), Some(&c1)) = (counts.get(i + 1), c.get(i + 1)) {
            w -= n * n1 as f64 * cl * c1;
        }
    }
    w
}

/// Residue at `pole` of `f^power dz`, where `ω = f dz` is the given form.
pub fn residue_power(form: &LevelForm, pole: C64, power: usize) -> Result<C64> {
    let scale = form.poles.iter().map(|(q, _)| q.norm()).fold(1.0, f64::max);
    let idx = form
        .poles
        .iter()
        .position(|(q, _)| (q - pole).norm() <= COINCIDENCE_TOL * scale)
        .ok_or(MaxfaceError::NotAPole { position: pole })?;
    let (p, c) = form.poles[idx];
    if power == 0 {
        return Ok(C64::new(0.0, 0.0));
    }
    // Taylor coefficients of the regular part h at p, up to degree power-1.
    let len = power;
    let mut h = vec![C64::new(0.0, 0.0); len];
    for (i, (q, cq)) in form.poles.iter().enumerate() {
        if i == idx {
            continue;
        }
        let inv = 1.0 / (q - p);
        let mut dp = inv;
        for hn in h.iter_mut() {
            *hn -= *cq * dp;
            dp *= inv;
        }
    }
    let h = Series(h);
    let mut res = C64::new(0.0, 0.0);
    let mut binom = 1.0f64;
    let mut cpow = 1.0f64;
    for j in 1..=power {
        binom *= (power - j + 1) as f64 / j as f64;
        cpow *= c;
        let hp = h.pow(power - j);
        res += binom * cpow * hp.coeff(j - 1);
    }
    Ok(res)
}

/// `θ ↦ Im Σ A_m e^{imθ}` over frequencies `m ≥ 1`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrigPolynomial {
    pub coefficients: BTreeMap<u32, C64>,
}

impl TrigPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn single(frequency: u32, amplitude: C64) -> Self {
        let mut coefficients = BTreeMap::new();
        coefficients.insert(frequency, amplitude);
        TrigPolynomial { coefficients }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.coefficients
            .iter()
            .map(|(&m, a)| (a * C64::from_polar(1.0, m as f64 * theta)).im)
            .sum()
    }

    pub fn derivative(&self, theta: f64) -> f64 {
        self.coefficients
            .iter()
            .map(|(&m, a)| m as f64 * (a * C64::from_polar(1.0, m as f64 * theta)).re)
            .sum()
    }

    pub fn coefficient(&self, frequency: u32) -> C64 {
        self.coefficients.get(&frequency).copied().unwrap_or_default()
    }

    /// Largest coefficient modulus.
    pub fn magnitude(&self) -> f64 {
        self.coefficients.values().map(|a| a.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.magnitude() <= tol
    }

    /// Zeros in `[0, 2π)`, by sign changes on a grid refined by bisection.
    pub fn zeros(&self) -> Vec<f64> {
        let top = self.coefficients.keys().next_back().copied().unwrap_or(0);
        if top == 0 || self.magnitude() == 0.0 {
            return Vec::new();
        }
        let n = 1024 + 64 * top as usize;
        // Offset the grid so that zeros rarely sit on a node.
        let start = 0.5 * 2.0 * PI / n as f64 * 0.7548776662466927;
        let f = |th: f64| self.eval(th);
        let mut out: Vec<f64> = Vec::new();
        let mut prev_t = start;
        let mut prev_v = f(start);
        for i in 1..=n {
            let th = start + 2.0 * PI * i as f64 / n as f64;
            let v = f(th);
            if prev_v == 0.0 {
                out.push(prev_t);
            } else if prev_v.signum() != v.signum() && v != 0.0 {
                out.push(bisect(&f, prev_t, th, prev_v, 1e-12));
            }
            prev_t = th;
            prev_v = v;
        }
        let mut out: Vec<f64> = out
            .into_iter()
            .map(|t| {
                let r = t.rem_euclid(2.0 * PI);
                if 2.0 * PI - r < 1e-11 {
                    0.0
                } else {
                    r
                }
            })
            .collect();
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() < 1e-11);
        if out.len() > 1 && out[0] + 2.0 * PI - out[out.len() - 1] < 1e-11 {
            out.pop();
        }
        out
    }
}

/// Bisection on `[a, b]` given `f(a) = fa` with a sign change.
pub fn bisect<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, fa: f64, tol: f64) -> f64 {
    let sa = fa.signum();
    while b - a > tol {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == sa {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// The residue function `R^{(r)}` at a neck; only frequency `r + 1` appears.
pub fn r_function(config: &Configuration, sizes: &NeckSizes, neck: NeckId, r: usize) -> TrigPolynomial {
    let p = config.position(neck);
    let power = r + 2;
    let lower = level_form(config, sizes, neck.level);
    let upper = level_form(config, sizes, neck.level + 1);
    let a = residue_power(&lower, p, power).expect("neck is a pole of its lower form");
    let b = residue_power(&upper, p, power).expect("neck is a pole of its upper form");
    // Im(e^{iφ}X - e^{-iφ}Y) = Im(e^{iφ}(X + conj Y)).
    let amp = if neck.level % 2 == 1 { (a + b).conj() } else { a + b };
    TrigPolynomial::single((r + 1) as u32, amp)
}

/// Scale used to decide whether a residue of power `power` is zero.
pub fn residue_scale(config: &Configuration, sizes: &NeckSizes, power: usize) -> f64 {
    let total_c: f64 = config
        .neck_ids()
        .iter()
        .map(|id| sizes.get(id.level).abs())
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    let mut dmin = f64::INFINITY;
    let ps: Vec<C64> = config.all_positions().iter().flatten().copied().collect();
    for (i, p) in ps.iter().enumerate() {
        for q in &ps[i + 1..] {
            let d = (p - q).norm();
            if d > 0.0 {
                dmin = dmin.min(d);
            }
        }
    }
    if !dmin.is_finite() {
        dmin = 1.0;
    }
    0.5 * dmin * (2.0 * total_c / dmin).powi(power as i32)
}
